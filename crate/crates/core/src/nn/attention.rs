use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{glorot_bound, Tensor};
use crate::error::{DctError, Result};

/// Additive attention over days: one weight vector producing a scalar score
/// per day, plus a scalar bias (stored as a length-1 tensor).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionParameters {
    pub w_s: Tensor,
    pub b_s: Tensor,
}

impl AttentionParameters {
    pub fn zeros(dim: usize) -> Self {
        AttentionParameters {
            w_s: Tensor::zeros(&[dim]),
            b_s: Tensor::zeros(&[1]),
        }
    }

    pub fn init<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        AttentionParameters {
            w_s: Tensor::uniform(&[dim], glorot_bound(dim, 1), rng),
            b_s: Tensor::zeros(&[1]),
        }
    }

    pub fn dim(&self) -> usize {
        self.w_s.len()
    }

    pub fn bias(&self) -> f64 {
        self.b_s.data()[0]
    }
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Per-day scores `tanh(V_i · w_s + b_s)`.
pub fn attention_scores(states: &[Vec<f64>], p: &AttentionParameters) -> Result<Vec<f64>> {
    if states.is_empty() {
        return Err(DctError::invalid("attention over an empty sequence"));
    }
    let w = p.w_s.data();
    states
        .iter()
        .map(|v| {
            if v.len() != w.len() {
                return Err(DctError::shape(format!(
                    "attention input has width {}, weights have {}",
                    v.len(),
                    w.len()
                )));
            }
            let u: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + p.bias();
            Ok(u.tanh())
        })
        .collect()
}

/// `α_i = exp(s_i) / Σ_j exp(s_j)` with `s_i = tanh(V_i · w_s + b_s)`.
pub fn attention_weights(states: &[Vec<f64>], p: &AttentionParameters) -> Result<Vec<f64>> {
    Ok(softmax(&attention_scores(states, p)?))
}

/// `D = Σ_i α_i V_i`
pub fn attention_pool(alpha: &[f64], states: &[Vec<f64>]) -> Result<Vec<f64>> {
    if alpha.len() != states.len() {
        return Err(DctError::shape(format!(
            "{} attention weights for {} states",
            alpha.len(),
            states.len()
        )));
    }
    let dim = states.first().map_or(0, Vec::len);
    let mut pooled = vec![0.0; dim];
    for (a, v) in alpha.iter().zip(states) {
        if v.len() != dim {
            return Err(DctError::shape("ragged attention inputs"));
        }
        for (d, x) in pooled.iter_mut().zip(v) {
            *d += a * x;
        }
    }
    Ok(pooled)
}

/// Gradient of the pooled vector w.r.t. the states and attention parameters.
/// Returns `dV_i` for every state; parameter gradients are added into `grad`.
pub fn attention_backward(
    states: &[Vec<f64>],
    scores: &[f64],
    alpha: &[f64],
    d_pooled: &[f64],
    p: &AttentionParameters,
    grad: &mut AttentionParameters,
) -> Vec<Vec<f64>> {
    let d_alpha: Vec<f64> = states
        .iter()
        .map(|v| v.iter().zip(d_pooled).map(|(a, b)| a * b).sum())
        .collect();
    let weighted: f64 = alpha.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
    let w = p.w_s.data();
    let mut d_states = Vec::with_capacity(states.len());
    for (i, v) in states.iter().enumerate() {
        let d_score = alpha[i] * (d_alpha[i] - weighted);
        let d_u = d_score * (1.0 - scores[i] * scores[i]);
        for (gw, x) in grad.w_s.data_mut().iter_mut().zip(v) {
            *gw += d_u * x;
        }
        grad.b_s.data_mut()[0] += d_u;
        d_states.push(
            d_pooled
                .iter()
                .zip(w)
                .map(|(dp, wk)| alpha[i] * dp + d_u * wk)
                .collect(),
        );
    }
    d_states
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_and_uniform() {
        let p = AttentionParameters {
            w_s: Tensor::vector(vec![0.7, -3.0]),
            b_s: Tensor::vector(vec![0.4]),
        };
        assert_eq!(attention_weights(&[vec![1.0, 2.0]], &p).unwrap(), vec![1.0]);
        let same = vec![vec![0.2, 0.9]; 4];
        for a in attention_weights(&same, &p).unwrap() {
            assert!((a - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn two_day_hand_value() {
        // w·V gives atanh(±0.5) so the scores are exactly ±0.5 after tanh
        let u = 0.5f64.atanh();
        let p = AttentionParameters {
            w_s: Tensor::vector(vec![1.0]),
            b_s: Tensor::vector(vec![0.0]),
        };
        let a = attention_weights(&[vec![u], vec![-u]], &p).unwrap();
        assert!((a[0] - 0.731058578630005).abs() < 1e-9);
        assert!((a[1] - 0.26894142136999516).abs() < 1e-9);
    }

    #[test]
    fn pool_selects_and_averages() {
        let v = vec![vec![1.0, 2.0], vec![-3.0, 5.0], vec![0.5, 0.5]];
        assert_eq!(attention_pool(&[0.0, 1.0, 0.0], &v).unwrap(), v[1]);
        let mean = attention_pool(&[1.0 / 3.0; 3], &v).unwrap();
        assert!((mean[0] - (-1.5 / 3.0)).abs() < 1e-15);
        assert!((mean[1] - 2.5).abs() < 1e-15);
        assert!(attention_pool(&[1.0], &v).is_err());
    }

    #[test]
    fn errors() {
        let p = AttentionParameters::zeros(2);
        assert!(attention_weights(&[], &p).is_err());
        assert!(attention_weights(&[vec![1.0]], &p).is_err());
    }
}
