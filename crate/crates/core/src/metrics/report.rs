use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ranking::{average_precision_of_scores, mean_average_precision};
use crate::corpus::Instance;
use crate::slicing::SliceMatrix;
use crate::{Error, Result};

/// Mean and sample standard deviation of one quantity over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl SeedSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let mean = crate::math::mean(&values);
        let std = if values.len() > 1 {
            crate::math::sample_std(&values)
        } else {
            0.0
        };
        SeedSummary { values, mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRow {
    pub name: String,
    pub size: usize,
    /// `None` for an empty slice.
    pub map_model: Option<f64>,
    pub map_baseline: Option<f64>,
    pub delta_map: Option<f64>,
    pub membership_accuracy: Option<f64>,
}

/// Per-slice effectiveness of a model against a baseline. Row 0 is the
/// base slice; the summary statistics cover the non-empty user slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub slices: Vec<SliceRow>,
    pub overall_map_model: f64,
    pub overall_map_baseline: f64,
    pub overall_delta_map: f64,
    pub avg_delta_map: Option<f64>,
    pub max_delta_map: Option<f64>,
}

impl SliceReport {
    pub fn user_slices(&self) -> impl Iterator<Item = &SliceRow> {
        self.slices.iter().skip(1)
    }

    fn summarize(&mut self) {
        let deltas: Vec<f64> = self.user_slices().filter_map(|r| r.delta_map).collect();
        if deltas.is_empty() {
            self.avg_delta_map = None;
            self.max_delta_map = None;
        } else {
            self.avg_delta_map = Some(deltas.iter().sum::<f64>() / deltas.len() as f64);
            self.max_delta_map = Some(deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
    }
}

fn per_instance_ap(instances: &[Instance], scores: &[Vec<f64>], what: &str) -> Result<Vec<f64>> {
    if scores.len() != instances.len() {
        return Err(Error::Alignment(format!(
            "{} {what} score lists for {} instances",
            scores.len(),
            instances.len()
        )));
    }
    instances
        .iter()
        .zip(scores)
        .map(|(inst, s)| {
            average_precision_of_scores(s, &inst.labels()).map_err(|e| match e {
                Error::Alignment(m) => Error::Alignment(format!("`{}`: {m}", inst.qid)),
                other => other,
            })
        })
        .collect()
}

/// MAP of the model and the baseline restricted to each slice of
/// `matrix`. Slice membership comes from the slicing functions, never
/// from the model's own membership predictions.
pub fn per_slice_map(
    instances: &[Instance],
    matrix: &SliceMatrix,
    model_scores: &[Vec<f64>],
    baseline_scores: &[Vec<f64>],
    membership: Option<&[Vec<f64>]>,
) -> Result<SliceReport> {
    matrix.check_alignment(instances)?;
    let model_ap = per_instance_ap(instances, model_scores, "model")?;
    let base_ap = per_instance_ap(instances, baseline_scores, "baseline")?;
    let accuracy = match membership {
        Some(probs) => Some(membership_accuracy(probs, matrix)?),
        None => None,
    };
    let mut slices = Vec::with_capacity(matrix.num_slices());
    for (j, name) in matrix.slice_names.iter().enumerate() {
        let members: Vec<usize> = (0..instances.len())
            .filter(|&i| matrix.membership[i][j])
            .collect();
        let pick = |aps: &[f64]| -> Option<f64> {
            let sel: Vec<f64> = members.iter().map(|&i| aps[i]).collect();
            mean_average_precision(&sel).ok()
        };
        let map_model = pick(&model_ap);
        let map_baseline = pick(&base_ap);
        slices.push(SliceRow {
            name: name.clone(),
            size: members.len(),
            map_model,
            map_baseline,
            delta_map: map_model.zip(map_baseline).map(|(m, b)| m - b),
            membership_accuracy: accuracy.as_ref().map(|a| a[j]),
        });
    }
    let overall_map_model = mean_average_precision(&model_ap)?;
    let overall_map_baseline = mean_average_precision(&base_ap)?;
    let mut report = SliceReport {
        slices,
        overall_map_model,
        overall_map_baseline,
        overall_delta_map: overall_map_model - overall_map_baseline,
        avg_delta_map: None,
        max_delta_map: None,
    };
    report.summarize();
    Ok(report)
}

/// Fraction of instances where `prob > 0.5` agrees with the slicing
/// function, per slice. `probs[i][j]` is the instance-level membership
/// probability (mean over its candidates).
pub fn membership_accuracy(probs: &[Vec<f64>], matrix: &SliceMatrix) -> Result<Vec<f64>> {
    if probs.len() != matrix.num_instances() {
        return Err(Error::Alignment(format!(
            "{} membership rows for {} instances",
            probs.len(),
            matrix.num_instances()
        )));
    }
    if probs.is_empty() {
        return Err(Error::Input("membership accuracy over zero instances".into()));
    }
    let k = matrix.num_slices();
    let mut agree = alloc::vec![0usize; k];
    for (i, row) in probs.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Alignment(format!(
                "row {i}: {} membership probabilities for {k} slices",
                row.len()
            )));
        }
        for j in 0..k {
            if (row[j] > 0.5) == matrix.membership[i][j] {
                agree[j] += 1;
            }
        }
    }
    Ok(agree.iter().map(|&c| c as f64 / probs.len() as f64).collect())
}

/// Averages per-seed reports row by row. The avg/max summaries are
/// recomputed from the averaged rows.
pub fn mean_slice_report(reports: &[SliceReport]) -> Result<SliceReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Input("no slice reports to average".into()))?;
    for r in reports {
        let same = r.slices.len() == first.slices.len()
            && r.slices.iter().zip(&first.slices).all(|(a, b)| a.name == b.name && a.size == b.size);
        if !same {
            return Err(Error::Alignment("slice reports cover different slices".into()));
        }
    }
    let n = reports.len() as f64;
    let avg = |f: &dyn Fn(&SliceReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let avg_opt = |j: usize, f: &dyn Fn(&SliceRow) -> Option<f64>| -> Option<f64> {
        let vals: Option<Vec<f64>> = reports.iter().map(|r| f(&r.slices[j])).collect();
        vals.map(|v| v.iter().sum::<f64>() / n)
    };
    let slices = first
        .slices
        .iter()
        .enumerate()
        .map(|(j, row)| SliceRow {
            name: row.name.clone(),
            size: row.size,
            map_model: avg_opt(j, &|r| r.map_model),
            map_baseline: avg_opt(j, &|r| r.map_baseline),
            delta_map: avg_opt(j, &|r| r.delta_map),
            membership_accuracy: avg_opt(j, &|r| r.membership_accuracy),
        })
        .collect();
    let mut out = SliceReport {
        slices,
        overall_map_model: avg(&|r| r.overall_map_model),
        overall_map_baseline: avg(&|r| r.overall_map_baseline),
        overall_delta_map: avg(&|r| r.overall_delta_map),
        avg_delta_map: None,
        max_delta_map: None,
    };
    out.summarize();
    Ok(out)
}
