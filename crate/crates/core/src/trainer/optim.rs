use crate::math::sqrt;
use crate::tensor::ParamSet;

use super::config::{OptimizerKind, TrainConfig};

/// Adam, or SGD with optional momentum (`beta1`).
#[derive(Debug, Clone)]
pub struct Optimizer<P> {
    kind: OptimizerKind,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: P,
    v: P,
}

impl<P: ParamSet> Optimizer<P> {
    pub fn new(params: &P, cfg: &TrainConfig) -> Self {
        Optimizer {
            kind: cfg.optimizer,
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.adam_eps,
            t: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut P, grads: &P) {
        self.t += 1;
        let (lr, b1, b2, eps) = (self.lr, self.beta1, self.beta2, self.eps);
        let c1 = 1.0 - libm::pow(b1, self.t as f64);
        let c2 = 1.0 - libm::pow(b2, self.t as f64);
        let kind = self.kind;
        let ps = params.tensors_mut();
        let gs = grads.tensors();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((p, g), m), v) in ps.into_iter().zip(gs).zip(ms).zip(vs) {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                match kind {
                    OptimizerKind::Adam => {
                        m.data[i] = b1 * m.data[i] + (1.0 - b1) * gi;
                        v.data[i] = b2 * v.data[i] + (1.0 - b2) * gi * gi;
                        let mh = m.data[i] / c1;
                        let vh = v.data[i] / c2;
                        p.data[i] -= lr * mh / (sqrt(vh) + eps);
                    }
                    OptimizerKind::Sgd => {
                        m.data[i] = b1 * m.data[i] + gi;
                        p.data[i] -= lr * m.data[i];
                    }
                }
            }
        }
    }
}
