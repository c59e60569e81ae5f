use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::loss::LossBreakdown;
use crate::encoder::{BackboneConfig, BackboneParams, EncodedPair};
use crate::math::{bce_with_logits, bce_with_logits_grad};
use crate::rng::Stream;
use crate::tensor::{axpy, dot, ParamSet, Tensor};
use crate::Result;

/// Backbone plus one linear relevance head on the CLS representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub backbone: BackboneParams,
    pub head_w: Tensor,
    pub head_b: Tensor,
}

impl BaselineParams {
    pub fn init(config: BackboneConfig, seed: u64) -> Self {
        let d = config.d_model;
        let mut head_w = Tensor::scaled_normal("head_w", &[d], d, &mut Stream::new(seed, "baseline/head_w"));
        head_w.shape = alloc::vec![d];
        BaselineParams {
            backbone: BackboneParams::init(config, seed),
            head_w,
            head_b: Tensor::zeros("head_b", &[1]),
        }
    }

    pub fn check(&self) -> Result<()> {
        self.backbone.check()?;
        let d = self.backbone.d_model();
        self.head_w.check_shape(&[d])?;
        self.head_b.check_shape(&[1])
    }
}

/// Relevance logit `w . z + b`.
pub fn baseline_forward(params: &BaselineParams, pair: &EncodedPair) -> Result<f64> {
    let t = params.backbone.forward(pair)?;
    Ok(dot(&params.head_w.data, &t.z) + params.head_b.data[0])
}

/// BCE loss and its gradients for one pair, accumulated into `grads`.
pub fn baseline_backward(
    params: &BaselineParams,
    pair: &EncodedPair,
    label: u8,
    grads: &mut BaselineParams,
) -> Result<LossBreakdown> {
    let t = params.backbone.forward(pair)?;
    let s = dot(&params.head_w.data, &t.z) + params.head_b.data[0];
    let y = f64::from(label);
    let loss = bce_with_logits(s, y);
    let ds = bce_with_logits_grad(s, y);
    axpy(ds, &t.z, &mut grads.head_w.data);
    grads.head_b.data[0] += ds;
    let dz: Vec<f64> = params.head_w.data.iter().map(|&w| ds * w).collect();
    params.backbone.backward(&t, &dz, &mut grads.backbone);
    Ok(LossBreakdown {
        final_term: loss,
        membership_term: 0.0,
        expert_term: 0.0,
        total: loss,
    })
}

impl ParamSet for BaselineParams {
    fn tensors(&self) -> Vec<&Tensor> {
        let mut v = self.backbone.tensors();
        v.extend([&self.head_w, &self.head_b]);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.backbone.tensors_mut();
        v.extend([&mut self.head_w, &mut self.head_b]);
        v
    }
}
