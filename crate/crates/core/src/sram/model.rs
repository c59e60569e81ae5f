use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::baseline::{baseline_backward, baseline_forward, BaselineParams};
use super::forward::sram_forward;
use super::loss::{sram_backward_weighted, LossBreakdown, LossWeights};
use super::params::SramParams;
use crate::corpus::Instance;
use crate::encoder::{encode_pair, EncodedPair, Vocabulary};
use crate::slicing::BASE_SLICE;
use crate::tensor::{ParamSet, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Baseline,
    Sram,
    SramRandom,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Baseline => "baseline",
            ModelKind::Sram => "sram",
            ModelKind::SramRandom => "sram_random",
        }
    }

    pub fn is_slice_aware(self) -> bool {
        !matches!(self, ModelKind::Baseline)
    }
}

impl core::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(ModelKind::Baseline),
            "sram" => Ok(ModelKind::Sram),
            "sram_random" | "sram-random" => Ok(ModelKind::SramRandom),
            other => Err(Error::Config(format!(
                "unknown model kind `{other}` (expected baseline, sram or sram-random)"
            ))),
        }
    }
}

/// Trainable parameters of either architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "architecture", content = "params", rename_all = "snake_case")]
pub enum Ranker {
    Baseline(BaselineParams),
    Sram(SramParams),
}

impl Ranker {
    /// Final relevance logit for one pair.
    pub fn score(&self, pair: &EncodedPair) -> Result<f64> {
        match self {
            Ranker::Baseline(p) => baseline_forward(p, pair),
            Ranker::Sram(p) => Ok(sram_forward(p, pair)?.s),
        }
    }

    /// Adds the gradient of one pair's loss into `grads`.
    pub fn accumulate(
        &self,
        pair: &EncodedPair,
        label: u8,
        sf_row: &[bool],
        weights: LossWeights,
        grads: &mut Ranker,
    ) -> Result<LossBreakdown> {
        match (self, grads) {
            (Ranker::Baseline(p), Ranker::Baseline(g)) => baseline_backward(p, pair, label, g),
            (Ranker::Sram(p), Ranker::Sram(g)) => {
                sram_backward_weighted(p, pair, label, sf_row, weights, g)
            }
            _ => Err(Error::Dimension("gradient buffer of the wrong architecture".into())),
        }
    }

    /// Loss of one pair without gradients.
    pub fn loss(
        &self,
        pair: &EncodedPair,
        label: u8,
        sf_row: &[bool],
        weights: LossWeights,
    ) -> Result<LossBreakdown> {
        match self {
            Ranker::Baseline(p) => {
                let s = baseline_forward(p, pair)?;
                let l = crate::math::bce_with_logits(s, f64::from(label));
                Ok(LossBreakdown {
                    final_term: l,
                    total: l,
                    ..Default::default()
                })
            }
            Ranker::Sram(p) => {
                let t = sram_forward(p, pair)?;
                let mut l = super::loss::sram_loss(&t, label, sf_row, weights.alpha, weights.beta)?;
                if weights.final_weight != 1.0 {
                    l.total += (weights.final_weight - 1.0) * l.final_term;
                }
                Ok(l)
            }
        }
    }

    pub fn slice_names(&self) -> Vec<String> {
        match self {
            Ranker::Baseline(_) => vec![String::from(BASE_SLICE)],
            Ranker::Sram(p) => p.slice_names.clone(),
        }
    }

    pub fn num_slots(&self) -> usize {
        match self {
            Ranker::Baseline(_) => 1,
            Ranker::Sram(p) => p.num_slots(),
        }
    }

    pub fn max_len(&self) -> usize {
        match self {
            Ranker::Baseline(p) => p.backbone.config.max_len,
            Ranker::Sram(p) => p.backbone.config.max_len,
        }
    }

    pub fn check(&self) -> Result<()> {
        match self {
            Ranker::Baseline(p) => p.check(),
            Ranker::Sram(p) => p.check(),
        }
    }
}

impl ParamSet for Ranker {
    fn tensors(&self) -> Vec<&Tensor> {
        match self {
            Ranker::Baseline(p) => p.tensors(),
            Ranker::Sram(p) => p.tensors(),
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Ranker::Baseline(p) => p.tensors_mut(),
            Ranker::Sram(p) => p.tensors_mut(),
        }
    }
}

/// Candidate indices by descending score; ties keep candidate order.
pub fn rank_by_scores(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    order
}

/// Everything needed to score raw instances: parameters, vocabulary and
/// sequence length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub seed: u64,
    pub vocab: Vocabulary,
    pub ranker: Ranker,
}

impl TrainedModel {
    pub fn max_len(&self) -> usize {
        self.ranker.max_len()
    }

    pub fn encode(&self, inst: &Instance, candidate: usize) -> EncodedPair {
        encode_pair(
            &self.vocab,
            &inst.question,
            &inst.context,
            &inst.candidates[candidate].text,
            self.max_len(),
        )
    }

    /// One relevance score per candidate, in candidate order. Labels are
    /// not read.
    pub fn score_instance(&self, inst: &Instance) -> Result<Vec<f64>> {
        (0..inst.candidates.len())
            .map(|c| self.ranker.score(&self.encode(inst, c)))
            .collect()
    }

    /// Per-slot membership probability averaged over the instance's
    /// candidates; `None` for the baseline.
    pub fn membership_probabilities(&self, inst: &Instance) -> Result<Option<Vec<f64>>> {
        let Ranker::Sram(p) = &self.ranker else {
            return Ok(None);
        };
        let mut mean = vec![0.0; p.num_slots()];
        for c in 0..inst.candidates.len() {
            let t = sram_forward(p, &self.encode(inst, c))?;
            for (m, q) in mean.iter_mut().zip(&t.q) {
                *m += q;
            }
        }
        let n = inst.candidates.len().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Ok(Some(mean))
    }
}
