use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::forward::{sram_forward, ForwardTrace};
use super::params::{GateMode, SramParams};
use crate::encoder::EncodedPair;
use crate::math::{bce_with_logits, bce_with_logits_grad};
use crate::tensor::{add_outer, add_transposed, axpy, ParamSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub final_term: f64,
    pub membership_term: f64,
    pub expert_term: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn add(&mut self, other: &LossBreakdown) {
        self.final_term += other.final_term;
        self.membership_term += other.membership_term;
        self.expert_term += other.expert_term;
        self.total += other.total;
    }

    pub fn scaled(&self, f: f64) -> LossBreakdown {
        LossBreakdown {
            final_term: self.final_term * f,
            membership_term: self.membership_term * f,
            expert_term: self.expert_term * f,
            total: self.total * f,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
            && self.final_term.is_finite()
            && self.membership_term.is_finite()
            && self.expert_term.is_finite()
    }
}

/// Weights of the three loss terms. The public training objective uses
/// `final_weight = 1`; other values exist to isolate single terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub final_weight: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0) {
            return Err(Error::Config(format!(
                "loss weights must be non-negative, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(LossWeights {
            final_weight: 1.0,
            alpha,
            beta,
        })
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            final_weight: 1.0,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

fn check_row(trace: &ForwardTrace, sf_row: &[bool]) -> Result<()> {
    if sf_row.len() != trace.m.len() {
        return Err(Error::Dimension(format!(
            "slice row has {} entries, model has {} slots",
            sf_row.len(),
            trace.m.len()
        )));
    }
    if !sf_row[0] {
        return Err(Error::Input("slot 0 is the base slice and must be true".into()));
    }
    Ok(())
}

fn breakdown(trace: &ForwardTrace, label: f64, sf_row: &[bool], w: LossWeights) -> LossBreakdown {
    let final_term = bce_with_logits(trace.s, label);
    let membership_term: f64 = trace
        .m
        .iter()
        .zip(sf_row)
        .map(|(&m, &sf)| bce_with_logits(m, if sf { 1.0 } else { 0.0 }))
        .sum();
    let expert_term: f64 = trace
        .p
        .iter()
        .zip(sf_row)
        .filter(|(_, &sf)| sf)
        .map(|(&p, _)| bce_with_logits(p, label))
        .sum();
    LossBreakdown {
        final_term,
        membership_term,
        expert_term,
        total: w.final_weight * final_term + w.alpha * membership_term + w.beta * expert_term,
    }
}

/// Loss terms for one traced pair.
pub fn sram_loss(
    trace: &ForwardTrace,
    label: u8,
    sf_row: &[bool],
    alpha: f64,
    beta: f64,
) -> Result<LossBreakdown> {
    let w = LossWeights::new(alpha, beta)?;
    check_row(trace, sf_row)?;
    Ok(breakdown(trace, f64::from(label), sf_row, w))
}

/// Forward, loss and backward for one pair; gradients of `total` are added
/// into `grads`.
pub fn sram_backward_weighted(
    params: &SramParams,
    pair: &EncodedPair,
    label: u8,
    sf_row: &[bool],
    w: LossWeights,
    grads: &mut SramParams,
) -> Result<LossBreakdown> {
    let trace = sram_forward(params, pair)?;
    check_row(&trace, sf_row)?;
    let y = f64::from(label);
    let loss = breakdown(&trace, y, sf_row, w);
    let k = params.num_slots();
    let d = params.d_model();
    let z = trace.z();

    let ds = w.final_weight * bce_with_logits_grad(trace.s, y);
    axpy(ds, &trace.h, &mut grads.final_w.data);
    grads.final_b.data[0] += ds;
    let dh: Vec<f64> = params.final_w.data.iter().map(|&x| ds * x).collect();

    let mut dr = vec![0.0; k * d];
    let mut da = vec![0.0; k];
    for j in 0..k {
        let rj = trace.expert(j);
        da[j] = crate::tensor::dot(&dh, rj);
        axpy(trace.a[j], &dh, &mut dr[j * d..(j + 1) * d]);
    }
    let weighted = crate::tensor::dot(&trace.a, &da);
    let dg: Vec<f64> = (0..k).map(|j| trace.a[j] * (da[j] - weighted)).collect();

    let mut dm = vec![0.0; k];
    let mut dp = vec![0.0; k];
    for j in 0..k {
        let sf = sf_row[j];
        dm[j] = w.alpha * bce_with_logits_grad(trace.m[j], if sf { 1.0 } else { 0.0 });
        if params.gate == GateMode::MembershipAndConfidence {
            dm[j] += dg[j];
        }
        let sign = if trace.p[j] > 0.0 {
            1.0
        } else if trace.p[j] < 0.0 {
            -1.0
        } else {
            0.0
        };
        dp[j] = dg[j] * sign;
        if sf {
            dp[j] += w.beta * bce_with_logits_grad(trace.p[j], y);
        }
    }

    for j in 0..k {
        axpy(dp[j], trace.expert(j), &mut grads.slice_head_w.data);
        grads.slice_head_b.data[0] += dp[j];
        axpy(dp[j], &params.slice_head_w.data, &mut dr[j * d..(j + 1) * d]);
    }

    let mut dz = vec![0.0; d];
    add_outer(&mut grads.member_w.data, &dm, z);
    axpy(1.0, &dm, &mut grads.member_b.data);
    add_transposed(&params.member_w.data, &dm, &mut dz);

    for j in 0..k {
        let drj = &dr[j * d..(j + 1) * d];
        add_outer(&mut grads.expert_w.data[j * d * d..(j + 1) * d * d], drj, z);
        axpy(1.0, drj, &mut grads.expert_b.data[j * d..(j + 1) * d]);
        axpy(1.0, drj, &mut dz);
        add_transposed(params.expert_matrix(j), drj, &mut dz);
    }

    params.backbone.backward(&trace.backbone, &dz, &mut grads.backbone);
    Ok(loss)
}

/// Gradients of the training objective `final + alpha membership + beta expert`
/// for one pair.
pub fn sram_backward(
    params: &SramParams,
    pair: &EncodedPair,
    label: u8,
    sf_row: &[bool],
    alpha: f64,
    beta: f64,
) -> Result<(LossBreakdown, SramParams)> {
    let w = LossWeights::new(alpha, beta)?;
    let mut grads = params.zeros_like();
    let loss = sram_backward_weighted(params, pair, label, sf_row, w, &mut grads)?;
    if !grads.all_finite() {
        return Err(Error::NonFinite {
            step: 0,
            what: "gradient".into(),
        });
    }
    Ok((loss, grads))
}
