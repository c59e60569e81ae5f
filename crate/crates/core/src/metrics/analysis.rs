use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::report::SliceReport;
use super::stats::pearson;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceProperty {
    Size,
    MembershipAccuracy,
    BaselineMap,
}

impl SliceProperty {
    pub const ALL: [SliceProperty; 3] = [
        SliceProperty::Size,
        SliceProperty::MembershipAccuracy,
        SliceProperty::BaselineMap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SliceProperty::Size => "size",
            SliceProperty::MembershipAccuracy => "membership_accuracy",
            SliceProperty::BaselineMap => "baseline_map",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub property: SliceProperty,
    pub n: usize,
    /// `None` when the correlation is undefined; `note` says why.
    pub r: Option<f64>,
    pub p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub slices: Vec<String>,
    pub rows: Vec<CorrelationRow>,
}

/// Pearson correlation of each slice property with the slice's delta MAP,
/// over the non-empty user slices.
pub fn correlation_analysis(report: &SliceReport) -> Result<CorrelationReport> {
    let rows: Vec<_> = report.user_slices().filter(|r| r.delta_map.is_some()).collect();
    if rows.len() < 3 {
        return Err(Error::Input(format!(
            "correlation analysis needs at least 3 non-empty user slices, got {}",
            rows.len()
        )));
    }
    let delta: Vec<f64> = rows.iter().filter_map(|r| r.delta_map).collect();
    let out = SliceProperty::ALL
        .iter()
        .map(|&property| {
            let values: Option<Vec<f64>> = rows
                .iter()
                .map(|r| match property {
                    SliceProperty::Size => Some(r.size as f64),
                    SliceProperty::MembershipAccuracy => r.membership_accuracy,
                    SliceProperty::BaselineMap => r.map_baseline,
                })
                .collect();
            let Some(values) = values else {
                return CorrelationRow {
                    property,
                    n: rows.len(),
                    r: None,
                    p_value: None,
                    note: Some("not available for this model".into()),
                };
            };
            match pearson(&values, &delta) {
                Ok(c) => CorrelationRow {
                    property,
                    n: c.n,
                    r: Some(c.r),
                    p_value: Some(c.p_value),
                    note: None,
                },
                Err(e) => CorrelationRow {
                    property,
                    n: rows.len(),
                    r: None,
                    p_value: None,
                    note: Some(match e {
                        Error::Input(m) => m,
                        other => other.to_string(),
                    }),
                },
            }
        })
        .collect();
    Ok(CorrelationReport {
        slices: rows.iter().map(|r| r.name.clone()).collect(),
        rows: out,
    })
}
