use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::pair::EncodedPair;
use crate::math::{self, gelu, gelu_grad};
use crate::rng::Stream;
use crate::tensor::{add_outer, add_transposed, affine, axpy, dot, ParamSet, Tensor};
use crate::{Error, Result};

/// Layer-norm variance floor. Small enough that normalized activations have
/// unit variance to well below 1e-6.
pub const LN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackboneConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub max_len: usize,
}

/// One post-norm transformer block over token and position embeddings.
///
/// Only the CLS row of the block output is used as the representation, so
/// the forward pass computes keys and values for every unmasked position but
/// queries, the residual path and the feed-forward block for the CLS row
/// only. Other rows would not influence the pooled output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackboneParams {
    pub config: BackboneConfig,
    pub tok_emb: Tensor,
    pub pos_emb: Tensor,
    pub wq: Tensor,
    pub bq: Tensor,
    pub wk: Tensor,
    pub bk: Tensor,
    pub wv: Tensor,
    pub bv: Tensor,
    pub wo: Tensor,
    pub bo: Tensor,
    pub ln1_g: Tensor,
    pub ln1_b: Tensor,
    pub ff_w1: Tensor,
    pub ff_b1: Tensor,
    pub ff_w2: Tensor,
    pub ff_b2: Tensor,
    pub ln2_g: Tensor,
    pub ln2_b: Tensor,
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct BackboneTrace {
    pub positions: Vec<usize>,
    pub ids: Vec<u32>,
    /// `n x d` embedded inputs for the active positions.
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub k: Vec<f64>,
    pub v: Vec<f64>,
    pub attn: Vec<f64>,
    pub ctx: Vec<f64>,
    pub xhat1: Vec<f64>,
    pub inv_std1: f64,
    pub h1: Vec<f64>,
    pub ff_pre: Vec<f64>,
    pub ff_act: Vec<f64>,
    /// Normalized block output before gain and bias.
    pub xhat2: Vec<f64>,
    pub inv_std2: f64,
    /// Pooled representation.
    pub z: Vec<f64>,
}

fn layer_norm(u: &[f64], g: &[f64], b: &[f64], xhat: &mut [f64], out: &mut [f64]) -> f64 {
    let d = u.len() as f64;
    let mu = u.iter().sum::<f64>() / d;
    let var = u.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / d;
    let inv_std = 1.0 / math::sqrt(var + LN_EPS);
    for i in 0..u.len() {
        xhat[i] = (u[i] - mu) * inv_std;
        out[i] = g[i] * xhat[i] + b[i];
    }
    inv_std
}

/// Accumulates gain/bias gradients and returns the input gradient.
fn layer_norm_backward(
    dout: &[f64],
    g: &[f64],
    xhat: &[f64],
    inv_std: f64,
    dg: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    let d = dout.len();
    let mut dxhat = vec![0.0; d];
    for i in 0..d {
        dg[i] += dout[i] * xhat[i];
        db[i] += dout[i];
        dxhat[i] = dout[i] * g[i];
    }
    let mean_dxhat = dxhat.iter().sum::<f64>() / d as f64;
    let mean_dxhat_xhat = dot(&dxhat, xhat) / d as f64;
    (0..d)
        .map(|i| inv_std * (dxhat[i] - mean_dxhat - xhat[i] * mean_dxhat_xhat))
        .collect()
}

impl BackboneParams {
    pub fn init(config: BackboneConfig, seed: u64) -> Self {
        let BackboneConfig {
            vocab_size: vocab,
            d_model: d,
            d_ff: ff,
            max_len,
        } = config;
        let stream = |name: &str| Stream::new(seed, &format!("backbone/{name}"));
        let emb = |name: &str, rows: usize| Tensor::uniform(name, &[rows, d], 0.05, &mut stream(name));
        let proj = |name: &str, rows: usize, cols: usize| {
            Tensor::scaled_normal(name, &[rows, cols], cols, &mut stream(name))
        };
        BackboneParams {
            config,
            tok_emb: emb("tok_emb", vocab),
            pos_emb: emb("pos_emb", max_len),
            wq: proj("wq", d, d),
            bq: Tensor::zeros("bq", &[d]),
            wk: proj("wk", d, d),
            bk: Tensor::zeros("bk", &[d]),
            wv: proj("wv", d, d),
            bv: Tensor::zeros("bv", &[d]),
            wo: proj("wo", d, d),
            bo: Tensor::zeros("bo", &[d]),
            ln1_g: Tensor::filled("ln1_g", &[d], 1.0),
            ln1_b: Tensor::zeros("ln1_b", &[d]),
            ff_w1: proj("ff_w1", ff, d),
            ff_b1: Tensor::zeros("ff_b1", &[ff]),
            ff_w2: proj("ff_w2", d, ff),
            ff_b2: Tensor::zeros("ff_b2", &[d]),
            ln2_g: Tensor::filled("ln2_g", &[d], 1.0),
            ln2_b: Tensor::zeros("ln2_b", &[d]),
        }
    }

    pub fn d_model(&self) -> usize {
        self.config.d_model
    }

    /// Checks every tensor against the configuration.
    pub fn check(&self) -> Result<()> {
        let BackboneConfig {
            vocab_size: vocab,
            d_model: d,
            d_ff: ff,
            max_len,
        } = self.config;
        self.tok_emb.check_shape(&[vocab, d])?;
        self.pos_emb.check_shape(&[max_len, d])?;
        for w in [&self.wq, &self.wk, &self.wv, &self.wo] {
            w.check_shape(&[d, d])?;
        }
        for b in [
            &self.bq, &self.bk, &self.bv, &self.bo, &self.ln1_g, &self.ln1_b, &self.ff_b2,
            &self.ln2_g, &self.ln2_b,
        ] {
            b.check_shape(&[d])?;
        }
        self.ff_w1.check_shape(&[ff, d])?;
        self.ff_b1.check_shape(&[ff])?;
        self.ff_w2.check_shape(&[d, ff])?;
        Ok(())
    }

    pub fn forward(&self, pair: &EncodedPair) -> Result<BackboneTrace> {
        let d = self.config.d_model;
        if pair.ids.len() != self.config.max_len || pair.mask.len() != pair.ids.len() {
            return Err(Error::Dimension(format!(
                "pair has {} ids and {} mask entries, backbone expects {}",
                pair.ids.len(),
                pair.mask.len(),
                self.config.max_len
            )));
        }
        if pair.mask.first() != Some(&1) {
            return Err(Error::Dimension("position 0 (CLS) must be unmasked".into()));
        }
        let positions = pair.active_positions();
        let ids: Vec<u32> = positions.iter().map(|&p| pair.ids[p]).collect();
        if let Some(bad) = ids.iter().find(|&&id| id as usize >= self.config.vocab_size) {
            return Err(Error::Dimension(format!(
                "token id {bad} outside vocabulary of {}",
                self.config.vocab_size
            )));
        }
        let n = positions.len();

        let mut x = vec![0.0; n * d];
        for (i, (&p, &id)) in positions.iter().zip(&ids).enumerate() {
            let row = &mut x[i * d..(i + 1) * d];
            for ((r, a), b) in row
                .iter_mut()
                .zip(self.tok_emb.row(id as usize))
                .zip(self.pos_emb.row(p))
            {
                *r = a + b;
            }
        }
        let x0 = &x[..d];

        let mut q = vec![0.0; d];
        affine(&self.wq.data, &self.bq.data, x0, &mut q);
        let mut k = vec![0.0; n * d];
        let mut v = vec![0.0; n * d];
        for i in 0..n {
            let xi = &x[i * d..(i + 1) * d];
            affine(&self.wk.data, &self.bk.data, xi, &mut k[i * d..(i + 1) * d]);
            affine(&self.wv.data, &self.bv.data, xi, &mut v[i * d..(i + 1) * d]);
        }
        let scale = 1.0 / math::sqrt(d as f64);
        let mut attn: Vec<f64> = (0..n)
            .map(|i| scale * dot(&q, &k[i * d..(i + 1) * d]))
            .collect();
        math::softmax_in_place(&mut attn);
        let mut ctx = vec![0.0; d];
        for i in 0..n {
            axpy(attn[i], &v[i * d..(i + 1) * d], &mut ctx);
        }

        let mut u = vec![0.0; d];
        affine(&self.wo.data, &self.bo.data, &ctx, &mut u);
        for (ui, xi) in u.iter_mut().zip(x0) {
            *ui += xi;
        }
        let mut xhat1 = vec![0.0; d];
        let mut h1 = vec![0.0; d];
        let inv_std1 = layer_norm(&u, &self.ln1_g.data, &self.ln1_b.data, &mut xhat1, &mut h1);

        let mut ff_pre = vec![0.0; self.config.d_ff];
        affine(&self.ff_w1.data, &self.ff_b1.data, &h1, &mut ff_pre);
        let ff_act: Vec<f64> = ff_pre.iter().map(|&a| gelu(a)).collect();
        let mut y = vec![0.0; d];
        affine(&self.ff_w2.data, &self.ff_b2.data, &ff_act, &mut y);
        for (yi, hi) in y.iter_mut().zip(&h1) {
            *yi += hi;
        }
        let mut xhat2 = vec![0.0; d];
        let mut z = vec![0.0; d];
        let inv_std2 = layer_norm(&y, &self.ln2_g.data, &self.ln2_b.data, &mut xhat2, &mut z);

        Ok(BackboneTrace {
            positions,
            ids,
            x,
            q,
            k,
            v,
            attn,
            ctx,
            xhat1,
            inv_std1,
            h1,
            ff_pre,
            ff_act,
            xhat2,
            inv_std2,
            z,
        })
    }

    /// Backpropagates `dz` through one traced pass, accumulating into `grads`.
    pub fn backward(&self, trace: &BackboneTrace, dz: &[f64], grads: &mut BackboneParams) {
        let d = self.config.d_model;
        let n = trace.positions.len();

        let dy = layer_norm_backward(
            dz,
            &self.ln2_g.data,
            &trace.xhat2,
            trace.inv_std2,
            &mut grads.ln2_g.data,
            &mut grads.ln2_b.data,
        );
        add_outer(&mut grads.ff_w2.data, &dy, &trace.ff_act);
        axpy(1.0, &dy, &mut grads.ff_b2.data);
        let mut dact = vec![0.0; self.config.d_ff];
        add_transposed(&self.ff_w2.data, &dy, &mut dact);
        let dpre: Vec<f64> = dact
            .iter()
            .zip(&trace.ff_pre)
            .map(|(g, &a)| g * gelu_grad(a))
            .collect();
        add_outer(&mut grads.ff_w1.data, &dpre, &trace.h1);
        axpy(1.0, &dpre, &mut grads.ff_b1.data);
        let mut dh1 = dy;
        add_transposed(&self.ff_w1.data, &dpre, &mut dh1);

        let du = layer_norm_backward(
            &dh1,
            &self.ln1_g.data,
            &trace.xhat1,
            trace.inv_std1,
            &mut grads.ln1_g.data,
            &mut grads.ln1_b.data,
        );
        let mut dx = vec![0.0; n * d];
        axpy(1.0, &du, &mut dx[..d]);
        add_outer(&mut grads.wo.data, &du, &trace.ctx);
        axpy(1.0, &du, &mut grads.bo.data);
        let mut dctx = vec![0.0; d];
        add_transposed(&self.wo.data, &du, &mut dctx);

        let dattn: Vec<f64> = (0..n)
            .map(|i| dot(&dctx, &trace.v[i * d..(i + 1) * d]))
            .collect();
        let weighted = dot(&trace.attn, &dattn);
        let scale = 1.0 / math::sqrt(d as f64);
        let mut dq = vec![0.0; d];
        for i in 0..n {
            let xi = &trace.x[i * d..(i + 1) * d];
            let ds = trace.attn[i] * (dattn[i] - weighted) * scale;
            axpy(ds, &trace.k[i * d..(i + 1) * d], &mut dq);
            let dk: Vec<f64> = trace.q.iter().map(|&qv| ds * qv).collect();
            let dv: Vec<f64> = dctx.iter().map(|&c| trace.attn[i] * c).collect();
            add_outer(&mut grads.wk.data, &dk, xi);
            axpy(1.0, &dk, &mut grads.bk.data);
            add_outer(&mut grads.wv.data, &dv, xi);
            axpy(1.0, &dv, &mut grads.bv.data);
            let dxi = &mut dx[i * d..(i + 1) * d];
            add_transposed(&self.wk.data, &dk, dxi);
            add_transposed(&self.wv.data, &dv, dxi);
        }
        add_outer(&mut grads.wq.data, &dq, &trace.x[..d]);
        axpy(1.0, &dq, &mut grads.bq.data);
        add_transposed(&self.wq.data, &dq, &mut dx[..d]);

        for (i, (&p, &id)) in trace.positions.iter().zip(&trace.ids).enumerate() {
            let dxi = &dx[i * d..(i + 1) * d];
            axpy(1.0, dxi, grads.tok_emb.row_mut(id as usize));
            axpy(1.0, dxi, grads.pos_emb.row_mut(p));
        }
    }
}

impl ParamSet for BackboneParams {
    fn tensors(&self) -> Vec<&Tensor> {
        vec![
            &self.tok_emb, &self.pos_emb, &self.wq, &self.bq, &self.wk, &self.bk, &self.wv,
            &self.bv, &self.wo, &self.bo, &self.ln1_g, &self.ln1_b, &self.ff_w1, &self.ff_b1,
            &self.ff_w2, &self.ff_b2, &self.ln2_g, &self.ln2_b,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.tok_emb,
            &mut self.pos_emb,
            &mut self.wq,
            &mut self.bq,
            &mut self.wk,
            &mut self.bk,
            &mut self.wv,
            &mut self.bv,
            &mut self.wo,
            &mut self.bo,
            &mut self.ln1_g,
            &mut self.ln1_b,
            &mut self.ff_w1,
            &mut self.ff_b1,
            &mut self.ff_w2,
            &mut self.ff_b2,
            &mut self.ln2_g,
            &mut self.ln2_b,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: BackboneConfig = BackboneConfig {
        vocab_size: 50,
        d_model: 8,
        d_ff: 16,
        max_len: 16,
    };

    fn pair(ids: &[u32], max_len: usize) -> EncodedPair {
        let mut p = EncodedPair {
            ids: ids.to_vec(),
            mask: vec![1; ids.len()],
        };
        p.ids.resize(max_len, 0);
        p.mask.resize(max_len, 0);
        p
    }

    fn perturbed(params: &BackboneParams) -> BackboneParams {
        // Move gains/biases off their initial values so every path is exercised.
        let mut p = params.clone();
        let mut rng = Stream::new(99, "perturb");
        for t in p.tensors_mut() {
            for x in t.data.iter_mut() {
                *x += 0.1 * rng.normal();
            }
        }
        p
    }

    #[test]
    fn identical_pairs_identical_output() {
        let p = BackboneParams::init(TINY, 1);
        let a = pair(&[2, 7, 9, 3, 11, 3], 16);
        assert_eq!(p.forward(&a).unwrap().z, p.forward(&a).unwrap().z);
    }

    #[test]
    fn pad_region_content_is_ignored() {
        let p = BackboneParams::init(TINY, 1);
        let a = pair(&[2, 7, 9, 3, 11, 3], 16);
        let mut b = a.clone();
        for id in b.ids[6..].iter_mut() {
            *id = 17;
        }
        assert_eq!(p.forward(&a).unwrap().z, p.forward(&b).unwrap().z);
    }

    #[test]
    fn layer_norm_output_is_standardized() {
        let p = perturbed(&BackboneParams::init(TINY, 3));
        let t = p.forward(&pair(&[2, 5, 6, 3, 8, 9, 3], 16)).unwrap();
        for xhat in [&t.xhat1, &t.xhat2] {
            let mean = xhat.iter().sum::<f64>() / 8.0;
            let var = xhat.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 8.0;
            assert!(mean.abs() < 1e-6);
            assert!((var - 1.0).abs() < 1e-6);
        }
        assert!(t.z.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn dimension_errors() {
        let p = BackboneParams::init(TINY, 1);
        assert!(p.forward(&pair(&[2, 3], 8)).is_err());
        assert!(p.forward(&pair(&[2, 99, 3], 16)).is_err());
        let mut masked = pair(&[2, 4, 3], 16);
        masked.mask[0] = 0;
        assert!(p.forward(&masked).is_err());
        assert!(p.check().is_ok());
    }

    #[test]
    fn probe_gradient_matches_central_differences() {
        let params = perturbed(&BackboneParams::init(TINY, 5));
        let probe: Vec<f64> = (0..8).map(|i| 0.3 * (i as f64) - 1.0).collect();
        let inputs = [pair(&[2, 7, 9, 12, 3, 11, 7, 3], 16), pair(&[2, 4, 3, 40, 3], 16)];
        let objective = |p: &BackboneParams| -> f64 {
            inputs
                .iter()
                .map(|x| dot(&probe, &p.forward(x).unwrap().z))
                .sum()
        };
        let mut grads = params.zeros_like();
        for x in &inputs {
            let t = params.forward(x).unwrap();
            params.backward(&t, &probe, &mut grads);
        }
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        let mut probe_params = params.clone();
        let n_tensors = params.tensors().len();
        for ti in 0..n_tensors {
            for j in 0..params.tensors()[ti].len() {
                let orig = params.tensors()[ti].data[j];
                probe_params.tensors_mut()[ti].data[j] = orig + h;
                let up = objective(&probe_params);
                probe_params.tensors_mut()[ti].data[j] = orig - h;
                let down = objective(&probe_params);
                probe_params.tensors_mut()[ti].data[j] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads.tensors()[ti].data[j];
                let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }
}
