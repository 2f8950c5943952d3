use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{glorot_bound, Tensor};
use crate::error::{DctError, Result};

/// Fully connected layer `y = W x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            weight: Tensor::zeros(&[outputs, inputs]),
            bias: Tensor::zeros(&[outputs]),
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Dense {
            weight: Tensor::uniform(&[outputs, inputs], glorot_bound(inputs, outputs), rng),
            bias: Tensor::zeros(&[outputs]),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        dense(x, &self.weight, &self.bias)
    }

    pub fn forward_tanh(&self, x: &[f64]) -> Result<Vec<f64>> {
        dense_tanh(x, &self.weight, &self.bias)
    }

    pub fn zeros_like(&self) -> Self {
        Dense {
            weight: self.weight.zeros_like(),
            bias: self.bias.zeros_like(),
        }
    }
}

pub fn dense(x: &[f64], weight: &Tensor, bias: &Tensor) -> Result<Vec<f64>> {
    let mut y = weight.matvec(x)?;
    if bias.shape() != [y.len()] {
        return Err(DctError::shape(format!(
            "bias {:?} does not match {} outputs",
            bias.shape(),
            y.len()
        )));
    }
    for (yi, bi) in y.iter_mut().zip(bias.data()) {
        *yi += bi;
    }
    Ok(y)
}

pub fn dense_tanh(x: &[f64], weight: &Tensor, bias: &Tensor) -> Result<Vec<f64>> {
    let mut y = dense(x, weight, bias)?;
    y.iter_mut().for_each(|v| *v = v.tanh());
    Ok(y)
}

/// Accumulates `dW += dy x^T`, `db += dy` and returns `dx = W^T dy`.
/// `dy` is the gradient w.r.t. the pre-activation output.
pub fn dense_backward(layer: &Dense, x: &[f64], dy: &[f64], grad: &mut Dense) -> Vec<f64> {
    grad.weight.add_outer(dy, x);
    grad.bias.add_vec(dy);
    let mut dx = vec![0.0; x.len()];
    layer.weight.matvec_t_acc(dy, &mut dx);
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_zero_and_hand_cases() {
        let x = [0.3, -1.2];
        let id = Tensor::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert_eq!(dense(&x, &id, &Tensor::zeros(&[2])).unwrap(), x.to_vec());

        let v = Tensor::vector(vec![4.0, -2.0]);
        assert_eq!(dense(&x, &Tensor::zeros(&[2, 2]), &v).unwrap(), vec![4.0, -2.0]);

        let w = Tensor::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        assert_eq!(dense(&[1.0, 1.0], &w, &Tensor::zeros(&[2])).unwrap(), vec![3.0, 7.0]);
    }

    #[test]
    fn shape_errors() {
        let w = Tensor::zeros(&[2, 3]);
        assert!(dense(&[1.0, 2.0], &w, &Tensor::zeros(&[2])).is_err());
        assert!(dense(&[1.0, 2.0, 3.0], &w, &Tensor::zeros(&[3])).is_err());
    }
}
