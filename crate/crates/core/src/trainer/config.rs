use alloc::format;

use serde::{Deserialize, Serialize};

use crate::sram::{GateMode, LossWeights};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    /// Adam first-moment decay, or SGD momentum.
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub max_len: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub min_freq: u64,
    /// Optimizer steps between dev evaluations; each epoch also ends with one.
    pub eval_every: usize,
    /// Evaluations without improvement before stopping; 0 disables early stopping.
    pub patience: usize,
    /// Global gradient-norm bound; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub gate: GateMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            alpha: 1.0,
            beta: 1.0,
            seed: 0,
            max_len: 128,
            d_model: 64,
            d_ff: 128,
            min_freq: 1,
            eval_every: 200,
            patience: 5,
            clip_norm: Some(5.0),
            gate: GateMode::MembershipAndConfidence,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: alloc::string::String| Err(Error::Config(m));
        if self.epochs < 1 {
            return fail("epochs must be at least 1".into());
        }
        if self.batch_size < 1 {
            return fail("batch_size must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return fail(format!(
                "beta1 and beta2 must lie in [0, 1), got {} and {}",
                self.beta1, self.beta2
            ));
        }
        if !(self.adam_eps > 0.0) {
            return fail(format!("adam_eps must be positive, got {}", self.adam_eps));
        }
        self.loss_weights()?;
        if self.max_len < 8 {
            return fail(format!("max_len must be at least 8, got {}", self.max_len));
        }
        if self.d_model < 1 || self.d_ff < 1 {
            return fail("d_model and d_ff must be positive".into());
        }
        if self.min_freq < 1 {
            return fail("min_freq must be at least 1".into());
        }
        if self.eval_every < 1 {
            return fail("eval_every must be at least 1".into());
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return fail(format!("clip_norm must be positive, got {c}"));
            }
        }
        Ok(())
    }

    pub fn loss_weights(&self) -> Result<LossWeights> {
        LossWeights::new(self.alpha, self.beta)
    }
}
