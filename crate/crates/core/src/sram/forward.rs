use alloc::vec;
use alloc::vec::Vec;

use super::params::{GateMode, SramParams};
use crate::encoder::{BackboneTrace, EncodedPair};
use crate::math::{self, sigmoid};
use crate::tensor::{affine, dot};
use crate::Result;

#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub backbone: BackboneTrace,
    /// Membership logits, one per slot.
    pub m: Vec<f64>,
    /// Membership probabilities `sigmoid(m)`.
    pub q: Vec<f64>,
    /// Expert representations, `K x d` row-major.
    pub r: Vec<f64>,
    /// Per-expert relevance logits from the shared head.
    pub p: Vec<f64>,
    /// Attention weights over the slots.
    pub a: Vec<f64>,
    /// Combined representation.
    pub h: Vec<f64>,
    /// Final relevance logit.
    pub s: f64,
    pub y_hat: f64,
}

impl ForwardTrace {
    pub fn z(&self) -> &[f64] {
        &self.backbone.z
    }

    pub fn expert(&self, j: usize) -> &[f64] {
        let d = self.h.len();
        &self.r[j * d..(j + 1) * d]
    }
}

/// `softmax(m_j + |p_j|)`.
pub fn combine_attention(m: &[f64], p: &[f64]) -> Vec<f64> {
    assert_eq!(m.len(), p.len(), "membership and prediction logits differ in length");
    let mut g: Vec<f64> = m.iter().zip(p).map(|(mj, pj)| mj + pj.abs()).collect();
    math::softmax_in_place(&mut g);
    g
}

/// Runs the full slice-aware forward pass. Takes no labels and no slice
/// memberships.
pub fn sram_forward(params: &SramParams, pair: &EncodedPair) -> Result<ForwardTrace> {
    let backbone = params.backbone.forward(pair)?;
    let z = &backbone.z;
    let d = z.len();
    let k = params.num_slots();

    let mut m = vec![0.0; k];
    affine(&params.member_w.data, &params.member_b.data, z, &mut m);
    let q = m.iter().map(|&x| sigmoid(x)).collect();

    let mut r = vec![0.0; k * d];
    let mut p = vec![0.0; k];
    for j in 0..k {
        let rj = &mut r[j * d..(j + 1) * d];
        affine(params.expert_matrix(j), &params.expert_b.data[j * d..(j + 1) * d], z, rj);
        for (ri, zi) in rj.iter_mut().zip(z) {
            *ri += zi;
        }
        p[j] = dot(&params.slice_head_w.data, rj) + params.slice_head_b.data[0];
    }

    let a = match params.gate {
        GateMode::MembershipAndConfidence => combine_attention(&m, &p),
        GateMode::ConfidenceOnly => combine_attention(&vec![0.0; k], &p),
    };
    let mut h = vec![0.0; d];
    for j in 0..k {
        for (hi, ri) in h.iter_mut().zip(&r[j * d..(j + 1) * d]) {
            *hi += a[j] * ri;
        }
    }
    let s = dot(&params.final_w.data, &h) + params.final_b.data[0];
    Ok(ForwardTrace {
        backbone,
        m,
        q,
        r,
        p,
        a,
        h,
        s,
        y_hat: sigmoid(s),
    })
}
