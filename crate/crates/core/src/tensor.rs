//! Named dense tensors and the handful of kernels the models need.
//!
//! Matrices are row-major, `rows x cols`, and map `R^cols -> R^rows`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::rng::Stream;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(name: &str, shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            name: name.into(),
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn filled(name: &str, shape: &[usize], value: f64) -> Self {
        let mut t = Self::zeros(name, shape);
        t.data.iter_mut().for_each(|x| *x = value);
        t
    }

    pub fn uniform(name: &str, shape: &[usize], bound: f64, rng: &mut Stream) -> Self {
        let mut t = Self::zeros(name, shape);
        for x in t.data.iter_mut() {
            *x = rng.uniform_range(-bound, bound);
        }
        t
    }

    /// Normal with standard deviation `1/sqrt(fan_in)`.
    pub fn scaled_normal(name: &str, shape: &[usize], fan_in: usize, rng: &mut Stream) -> Self {
        let std = 1.0 / crate::math::sqrt(fan_in as f64);
        let mut t = Self::zeros(name, shape);
        for x in t.data.iter_mut() {
            *x = std * rng.normal();
        }
        t
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.name, &self.shape)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let cols = self.shape[self.shape.len() - 1];
        &self.data[r * cols..(r + 1) * cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let cols = self.shape[self.shape.len() - 1];
        &mut self.data[r * cols..(r + 1) * cols]
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Tensor, scale: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn check_shape(&self, shape: &[usize]) -> Result<()> {
        if self.shape.as_slice() != shape {
            return Err(Error::Dimension(alloc::format!(
                "tensor `{}` has shape {:?}, expected {:?}",
                self.name,
                self.shape,
                shape
            )));
        }
        Ok(())
    }
}

/// A model's trainable tensors, visited in a fixed order.
pub trait ParamSet: Clone {
    fn tensors(&self) -> Vec<&Tensor>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor>;

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill_zero();
        }
        z
    }

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_scaled(b, scale);
        }
    }

    fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.data.iter_mut().for_each(|x| *x *= factor);
        }
    }

    fn global_norm(&self) -> f64 {
        let ss: f64 = self
            .tensors()
            .iter()
            .flat_map(|t| t.data.iter())
            .map(|x| x * x)
            .sum();
        crate::math::sqrt(ss)
    }
}

/// `out = W x + b` for `W: rows x cols`.
pub fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o = b[r] + dot(&w[r * cols..(r + 1) * cols], x);
    }
}

/// `out += W^T y` for `W: rows x cols`, `y` of length `rows`.
pub fn add_transposed(w: &[f64], y: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (r, &yr) in y.iter().enumerate() {
        if yr == 0.0 {
            continue;
        }
        let row = &w[r * cols..(r + 1) * cols];
        for (o, &wv) in out.iter_mut().zip(row) {
            *o += wv * yr;
        }
    }
}

/// `dw += y x^T`.
pub fn add_outer(dw: &mut [f64], y: &[f64], x: &[f64]) {
    let cols = x.len();
    for (r, &yr) in y.iter().enumerate() {
        if yr == 0.0 {
            continue;
        }
        let row = &mut dw[r * cols..(r + 1) * cols];
        for (d, &xv) in row.iter_mut().zip(x) {
            *d += yr * xv;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        *yv += alpha * xv;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_and_transpose_agree() {
        let w = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut out = [0.0; 2];
        affine(&w, &[0.5, -1.0], &[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, [-1.5, -3.0]);
        let mut back = [0.0; 3];
        add_transposed(&w, &[1.0, 1.0], &mut back);
        assert_eq!(back, [5.0, 7.0, 9.0]);
    }

    #[test]
    fn outer_product_accumulates() {
        let mut dw = [0.0; 4];
        add_outer(&mut dw, &[1.0, 2.0], &[3.0, 4.0]);
        add_outer(&mut dw, &[1.0, 0.0], &[1.0, 1.0]);
        assert_eq!(dw, [4.0, 5.0, 6.0, 8.0]);
    }
}
