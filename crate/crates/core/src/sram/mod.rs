//! The slice-aware ranker and its non slice-aware comparator.
//!
//! For `k` user slices plus the base slice (`K = k + 1` slots) the ranker
//! computes, from the backbone representation `z`:
//!
//! * membership logits `m_j = u_j . z + c_j`,
//! * residual experts `r_j = z + W_j z + b_j`,
//! * per-expert relevance logits `p_j = w_s . r_j + b_s` from one shared head,
//! * attention `a = softmax(m + |p|)` and `h = sum_j a_j r_j`,
//! * the final relevance logit `s = w_f . h + b_f`.

mod baseline;
mod forward;
mod loss;
mod model;
mod params;

pub use baseline::{baseline_backward, baseline_forward, BaselineParams};
pub use forward::{combine_attention, sram_forward, ForwardTrace};
pub use loss::{sram_backward, sram_backward_weighted, sram_loss, LossBreakdown, LossWeights};
pub use model::{rank_by_scores, ModelKind, Ranker, TrainedModel};
pub use params::{GateMode, SramParams};

#[cfg(test)]
mod tests;
