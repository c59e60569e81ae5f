use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::encoder::{BackboneConfig, BackboneParams};
use crate::rng::Stream;
use crate::tensor::{ParamSet, Tensor};
use crate::{Error, Result};

/// Inputs to the attention logits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    /// `g_j = m_j + |p_j|`.
    #[default]
    MembershipAndConfidence,
    /// `g_j = |p_j|`; membership heads only receive their own loss.
    ConfidenceOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SramParams {
    pub backbone: BackboneParams,
    /// Slot names; slot 0 is the base slice.
    pub slice_names: Vec<String>,
    pub gate: GateMode,
    /// `K x d`
    pub member_w: Tensor,
    /// `K`
    pub member_b: Tensor,
    /// `K x d x d`
    pub expert_w: Tensor,
    /// `K x d`
    pub expert_b: Tensor,
    /// Shared slice prediction head, `d` and `1`.
    pub slice_head_w: Tensor,
    pub slice_head_b: Tensor,
    pub final_w: Tensor,
    pub final_b: Tensor,
}

impl SramParams {
    /// Expert transforms start at zero, so every expert is the identity on `z`.
    pub fn init(config: BackboneConfig, slice_names: Vec<String>, seed: u64) -> Result<Self> {
        if slice_names.is_empty() {
            return Err(Error::Config("the ranker needs at least the base slice".into()));
        }
        let k = slice_names.len();
        let d = config.d_model;
        let stream = |name: &str| Stream::new(seed, &format!("sram/{name}"));
        let head = |name: &str, rows: usize| {
            Tensor::scaled_normal(name, &[rows, d], d, &mut stream(name))
        };
        let mut slice_head_w = head("slice_head_w", 1);
        slice_head_w.shape = alloc::vec![d];
        let mut final_w = head("final_w", 1);
        final_w.shape = alloc::vec![d];
        Ok(SramParams {
            backbone: BackboneParams::init(config, seed),
            slice_names,
            gate: GateMode::default(),
            member_w: head("member_w", k),
            member_b: Tensor::zeros("member_b", &[k]),
            expert_w: Tensor::zeros("expert_w", &[k, d, d]),
            expert_b: Tensor::zeros("expert_b", &[k, d]),
            slice_head_w,
            slice_head_b: Tensor::zeros("slice_head_b", &[1]),
            final_w,
            final_b: Tensor::zeros("final_b", &[1]),
        })
    }

    /// Number of slots, user slices plus the base slice.
    pub fn num_slots(&self) -> usize {
        self.slice_names.len()
    }

    pub fn d_model(&self) -> usize {
        self.backbone.d_model()
    }

    pub fn expert_matrix(&self, j: usize) -> &[f64] {
        let d = self.d_model();
        &self.expert_w.data[j * d * d..(j + 1) * d * d]
    }

    pub fn check(&self) -> Result<()> {
        self.backbone.check()?;
        let k = self.num_slots();
        let d = self.d_model();
        if k == 0 {
            return Err(Error::Dimension("no slice slots".into()));
        }
        self.member_w.check_shape(&[k, d])?;
        self.member_b.check_shape(&[k])?;
        self.expert_w.check_shape(&[k, d, d])?;
        self.expert_b.check_shape(&[k, d])?;
        self.slice_head_w.check_shape(&[d])?;
        self.slice_head_b.check_shape(&[1])?;
        self.final_w.check_shape(&[d])?;
        self.final_b.check_shape(&[1])?;
        Ok(())
    }
}

impl ParamSet for SramParams {
    fn tensors(&self) -> Vec<&Tensor> {
        let mut v = self.backbone.tensors();
        v.extend([
            &self.member_w,
            &self.member_b,
            &self.expert_w,
            &self.expert_b,
            &self.slice_head_w,
            &self.slice_head_b,
            &self.final_w,
            &self.final_b,
        ]);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.backbone.tensors_mut();
        v.extend([
            &mut self.member_w,
            &mut self.member_b,
            &mut self.expert_w,
            &mut self.expert_b,
            &mut self.slice_head_w,
            &mut self.slice_head_b,
            &mut self.final_w,
            &mut self.final_b,
        ]);
        v
    }
}
