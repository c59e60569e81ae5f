use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::functions::{response_similarity, term_match};
use super::tokenize_sf;
use crate::corpus::Instance;
use crate::{Error, Result};

/// Slicing functions that compare a per-instance statistic to a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    QuestionLength,
    ContextLength,
    TermMatch,
    ResponseSimilarity { top_k: usize },
}

impl ThresholdKind {
    /// Membership is `stat > t` for these kinds and `stat < t` otherwise.
    fn selects_above(self) -> bool {
        !matches!(self, ThresholdKind::TermMatch)
    }

    pub fn statistic(self, inst: &Instance) -> Result<f64> {
        let wrap = |e: Error| match e {
            Error::Input(message) => Error::SlicePrecondition {
                slice: format!("{self:?}"),
                qid: inst.qid.clone(),
                message,
            },
            other => other,
        };
        match self {
            ThresholdKind::QuestionLength => Ok(tokenize_sf(&inst.question).len() as f64),
            ThresholdKind::ContextLength => Ok(inst.context.len() as f64),
            ThresholdKind::TermMatch => term_match(inst).map_err(wrap),
            ThresholdKind::ResponseSimilarity { top_k } => {
                response_similarity(inst, top_k).map_err(wrap)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoThreshold {
    pub value: f64,
    pub target_fraction: f64,
    pub selected: usize,
    pub fraction: f64,
    /// Every instance has the same statistic; the slice may be empty.
    pub degenerate: bool,
}

/// Picks the most inclusive threshold whose slice holds at most
/// `target_fraction` of `instances`.
///
/// For `>` kinds this is the smallest observed statistic `t` with
/// `#{x > t} <= target * n`. For term match (`<`, integer threshold) it is
/// the largest integer `t` with `#{x < t} <= target * n`.
pub fn auto_threshold(
    instances: &[Instance],
    kind: ThresholdKind,
    target_fraction: f64,
) -> Result<AutoThreshold> {
    if !(target_fraction > 0.0 && target_fraction < 1.0) {
        return Err(Error::Config(format!(
            "target fraction must lie in (0, 1), got {target_fraction}"
        )));
    }
    if instances.is_empty() {
        return Err(Error::Input("cannot choose a threshold on an empty corpus".into()));
    }
    let mut stats = instances
        .iter()
        .map(|i| kind.statistic(i))
        .collect::<Result<Vec<f64>>>()?;
    stats.sort_by(f64::total_cmp);
    let n = stats.len();
    let budget = target_fraction * n as f64;
    let degenerate = stats[0] == stats[n - 1];

    let (value, selected) = if kind.selects_above() {
        let mut chosen = (stats[n - 1], 0);
        let mut i = 0;
        while i < n {
            let v = stats[i];
            let above = n - stats.partition_point(|&x| x <= v);
            if above as f64 <= budget {
                chosen = (v, above);
                break;
            }
            while i < n && stats[i] == v {
                i += 1;
            }
        }
        chosen
    } else {
        let mut chosen = (0.0, 0);
        let mut t = 0.0;
        loop {
            let below = stats.partition_point(|&x| x < t);
            if below as f64 > budget {
                break;
            }
            chosen = (t, below);
            t += 1.0;
        }
        chosen
    };

    Ok(AutoThreshold {
        value,
        target_fraction,
        selected,
        fraction: selected as f64 / n as f64,
        degenerate,
    })
}
