use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DctError, Result};

/// Dense row-major array of `f64`. Matrices are `[rows, cols]`, vectors `[n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor")]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<RawTensor> for Tensor {
    type Error = DctError;

    fn try_from(raw: RawTensor) -> Result<Self> {
        Tensor::new(raw.shape, raw.data)
    }
}

/// Glorot/Xavier uniform half-width.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(DctError::shape(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(DctError::NonFinite(format!("tensor of shape {shape:?}")));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    /// Builds a matrix from nested rows; handy in tests.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(DctError::shape("ragged rows"));
        }
        Self::matrix(rows.len(), cols, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn uniform<R: Rng + ?Sized>(shape: &[usize], bound: f64, rng: &mut R) -> Self {
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    pub fn cols(&self) -> usize {
        if self.shape.len() == 2 {
            self.shape[1]
        } else {
            1
        }
    }

    pub fn zeros_like(&self) -> Self {
        Tensor::zeros(&self.shape)
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn scale(&mut self, k: f64) {
        self.data.iter_mut().for_each(|x| *x *= k);
    }

    /// `self += k * other`
    pub fn add_scaled(&mut self, other: &Tensor, k: f64) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += k * b;
        }
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    fn check_matrix(&self, cols: usize, what: &str) -> Result<()> {
        if self.shape.len() != 2 || self.shape[1] != cols {
            return Err(DctError::shape(format!(
                "{what}: matrix {:?} cannot take a vector of length {cols}",
                self.shape
            )));
        }
        Ok(())
    }

    /// `W x`
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_matrix(x.len(), "matvec")?;
        let cols = self.shape[1];
        Ok(self
            .data
            .chunks_exact(cols)
            .map(|row| row.iter().zip(x).map(|(w, v)| w * v).sum())
            .collect())
    }

    /// `out += W x`, shapes assumed checked.
    pub(crate) fn matvec_acc(&self, x: &[f64], out: &mut [f64]) {
        let cols = self.shape[1];
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(cols)) {
            *o += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// `out += W^T y`
    pub(crate) fn matvec_t_acc(&self, y: &[f64], out: &mut [f64]) {
        let cols = self.shape[1];
        for (row, &yi) in self.data.chunks_exact(cols).zip(y) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * yi;
            }
        }
    }

    /// `W += y x^T`
    pub(crate) fn add_outer(&mut self, y: &[f64], x: &[f64]) {
        let cols = self.shape[1];
        for (row, &yi) in self.data.chunks_exact_mut(cols).zip(y) {
            for (w, xj) in row.iter_mut().zip(x) {
                *w += yi * xj;
            }
        }
    }

    pub(crate) fn add_vec(&mut self, y: &[f64]) {
        for (a, b) in self.data.iter_mut().zip(y) {
            *a += b;
        }
    }
}
