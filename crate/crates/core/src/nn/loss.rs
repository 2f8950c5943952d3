use crate::error::{DctError, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before the log.
pub const PROB_CLAMP: f64 = 1e-12;

/// Two-class softmax with max subtraction.
pub fn softmax_binary(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let e0 = (z[0] - m).exp();
    let e1 = (z[1] - m).exp();
    let s = e0 + e1;
    let p1 = e1 / s;
    [1.0 - p1, p1]
}

pub fn cross_entropy(p: [f64; 2], label: usize) -> Result<f64> {
    if label > 1 {
        return Err(DctError::invalid(format!("label {label} is not a binary class")));
    }
    Ok(-p[label].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP).ln())
}

/// Gradient of `cross_entropy(softmax_binary(z), label)` w.r.t. `z`.
pub fn softmax_cross_entropy_grad(p: [f64; 2], label: usize) -> [f64; 2] {
    let mut g = p;
    g[label] -= 1.0;
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn softmax_cases() {
        assert_eq!(softmax_binary([0.0, 0.0]), [0.5, 0.5]);
        let p = softmax_binary([1000.0, 0.0]);
        assert!(p[0] > 1.0 - 1e-12 && p[1] >= 0.0 && p[1] < 1e-12);
        let p = softmax_binary([3f64.ln(), 0.0]);
        assert!((p[0] - 0.75).abs() < 1e-12 && (p[1] - 0.25).abs() < 1e-12);
        let p = softmax_binary([-1e6, 1e6]);
        assert!(p.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn cross_entropy_cases() {
        assert!(cross_entropy([1.0, 0.0], 0).unwrap() < 1e-11);
        assert!((cross_entropy([0.5, 0.5], 0).unwrap() - LN_2).abs() < 1e-15);
        assert!((cross_entropy([0.5, 0.5], 1).unwrap() - LN_2).abs() < 1e-15);
        assert!((cross_entropy([0.25, 0.75], 1).unwrap() - 0.28768207245178085).abs() < 1e-12);
        assert!(cross_entropy([0.0, 1.0], 0).unwrap().is_finite());
        assert!(cross_entropy([0.5, 0.5], 2).is_err());
    }
}
