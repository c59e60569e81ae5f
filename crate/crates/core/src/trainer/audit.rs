use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::encoder::{BackboneConfig, EncodedPair, CLS, PAD};
use crate::rng::Stream;
use crate::sram::{BaselineParams, LossBreakdown, LossWeights, ModelKind, Ranker, SramParams};
use crate::tensor::ParamSet;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub max_len: usize,
    /// User slices, not counting the base slice.
    pub num_slices: usize,
    pub batch_size: usize,
    pub step: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    /// Standard deviation of the noise added to the initial parameters so
    /// zero-initialized tensors are probed away from zero.
    pub jitter: f64,
    /// Negate the analytic gradient of this tensor (harness self-test).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupt: Option<String>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            vocab_size: 50,
            d_model: 8,
            d_ff: 16,
            max_len: 16,
            num_slices: 2,
            batch_size: 4,
            step: 1e-5,
            alpha: 1.0,
            beta: 1.0,
            seed: 0,
            jitter: 0.1,
            corrupt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub model: ModelKind,
    pub num_params: usize,
    pub worst_relative_error: f64,
    pub worst_tensor: String,
    pub per_tensor: Vec<(String, f64)>,
}

fn batch(cfg: &AuditConfig) -> Vec<(EncodedPair, u8, Vec<bool>)> {
    let mut rng = Stream::new(cfg.seed, "audit/batch");
    (0..cfg.batch_size)
        .map(|b| {
            let n = rng.between(3, cfg.max_len);
            let mut ids = vec![CLS];
            ids.extend((1..n).map(|_| rng.between(4, cfg.vocab_size - 1) as u32));
            let mut mask = vec![1u8; n];
            ids.resize(cfg.max_len, PAD);
            mask.resize(cfg.max_len, 0);
            let mut row = vec![true];
            row.extend((0..cfg.num_slices).map(|_| rng.bernoulli(0.5)));
            (EncodedPair { ids, mask }, (b % 2) as u8, row)
        })
        .collect()
}

fn mean_loss(
    ranker: &Ranker,
    batch: &[(EncodedPair, u8, Vec<bool>)],
    weights: LossWeights,
) -> Result<f64> {
    let mut total = 0.0;
    for (pair, label, row) in batch {
        total += ranker.loss(pair, *label, row, weights)?.total;
    }
    Ok(total / batch.len() as f64)
}

/// Compares analytic gradients of the batch-mean loss with central
/// differences over every parameter of every tensor and returns the worst
/// relative error `|num - ana| / max(|num|, |ana|, 1e-6)`.
pub fn finite_diff_audit(kind: ModelKind, cfg: &AuditConfig) -> Result<AuditReport> {
    if cfg.vocab_size < 5 || cfg.max_len < 3 || cfg.batch_size < 1 || !(cfg.step > 0.0) {
        return Err(Error::Config("audit configuration is too small".into()));
    }
    let weights = LossWeights::new(cfg.alpha, cfg.beta)?;
    let config = BackboneConfig {
        vocab_size: cfg.vocab_size,
        d_model: cfg.d_model,
        d_ff: cfg.d_ff,
        max_len: cfg.max_len,
    };
    let mut ranker = match kind {
        ModelKind::Baseline => Ranker::Baseline(BaselineParams::init(config, cfg.seed)),
        ModelKind::Sram | ModelKind::SramRandom => {
            let mut names = vec![String::from(crate::slicing::BASE_SLICE)];
            names.extend((1..=cfg.num_slices).map(|i| format!("slice{i}")));
            Ranker::Sram(SramParams::init(config, names, cfg.seed)?)
        }
    };
    let mut rng = Stream::new(cfg.seed, "audit/jitter");
    for t in ranker.tensors_mut() {
        t.data.iter_mut().for_each(|x| *x += cfg.jitter * rng.normal());
    }
    let batch = if kind.is_slice_aware() {
        batch(cfg)
    } else {
        batch(cfg).into_iter().map(|(p, l, _)| (p, l, vec![true])).collect()
    };

    let mut analytic = ranker.zeros_like();
    let mut sum = LossBreakdown::default();
    for (pair, label, row) in &batch {
        sum.add(&ranker.accumulate(pair, *label, row, weights, &mut analytic)?);
    }
    analytic.scale(1.0 / batch.len() as f64);
    if let Some(name) = &cfg.corrupt {
        let t = analytic
            .tensors_mut()
            .into_iter()
            .find(|t| &t.name == name)
            .ok_or_else(|| Error::Config(format!("no tensor named `{name}`")))?;
        t.data.iter_mut().for_each(|x| *x = -*x);
    }

    let h = cfg.step;
    let names: Vec<String> = ranker.tensors().iter().map(|t| t.name.clone()).collect();
    let mut per_tensor = Vec::with_capacity(names.len());
    for (ti, name) in names.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for j in 0..ranker.tensors()[ti].len() {
            let orig = ranker.tensors()[ti].data[j];
            ranker.tensors_mut()[ti].data[j] = orig + h;
            let up = mean_loss(&ranker, &batch, weights)?;
            ranker.tensors_mut()[ti].data[j] = orig - h;
            let down = mean_loss(&ranker, &batch, weights)?;
            ranker.tensors_mut()[ti].data[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.tensors()[ti].data[j];
            worst = worst.max((numeric - a).abs() / numeric.abs().max(a.abs()).max(1e-6));
        }
        per_tensor.push((name.clone(), worst));
    }
    let (worst_tensor, worst_relative_error) = per_tensor
        .iter()
        .fold((String::new(), 0.0f64), |acc, (n, e)| {
            if *e > acc.1 {
                (n.clone(), *e)
            } else {
                acc
            }
        });
    Ok(AuditReport {
        model: kind,
        num_params: ranker.num_params(),
        worst_relative_error,
        worst_tensor,
        per_tensor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_gradients_pass_for_both_models() {
        for kind in [ModelKind::Baseline, ModelKind::Sram] {
            let r = finite_diff_audit(kind, &AuditConfig::default()).unwrap();
            assert!(r.worst_relative_error < 1e-4, "{kind:?}: {r:?}");
        }
    }

    #[test]
    fn zero_loss_weights_pass() {
        let cfg = AuditConfig { alpha: 0.0, beta: 0.0, ..Default::default() };
        let r = finite_diff_audit(ModelKind::Sram, &cfg).unwrap();
        assert!(r.worst_relative_error < 1e-4, "{r:?}");
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        for name in ["wv", "expert_w", "member_w"] {
            let cfg = AuditConfig { corrupt: Some(name.into()), ..Default::default() };
            let r = finite_diff_audit(ModelKind::Sram, &cfg).unwrap();
            assert!(r.worst_relative_error > 0.1, "{name}: {r:?}");
            assert_eq!(r.worst_tensor, name);
        }
        let cfg = AuditConfig { corrupt: Some("nope".into()), ..Default::default() };
        assert!(finite_diff_audit(ModelKind::Sram, &cfg).is_err());
    }
}
