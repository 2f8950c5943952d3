use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DctError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckOptions {
    pub epsilon: f64,
    pub seed: u64,
    pub max_coords: usize,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        GradcheckOptions {
            epsilon: 1e-5,
            seed: 0,
            max_coords: 200,
        }
    }
}

/// `|a - n| / max(1e-8, |a| + |n|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Up to `max` distinct coordinates from `0..n`, sorted, chosen by `seed`.
pub fn sample_coords(n: usize, max: usize, seed: u64) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, n, max).into_vec();
    picked.sort_unstable();
    picked
}

/// Compares `analytic` against central differences of `loss` on a seeded
/// sample of at most `max_coords` coordinates and returns the largest
/// relative error.
pub fn gradcheck<F>(loss: F, theta: &[f64], analytic: &[f64], opts: &GradcheckOptions) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let coords = sample_coords(theta.len(), opts.max_coords, opts.seed);
    gradcheck_coords(loss, theta, analytic, &coords, opts.epsilon)
}

pub fn gradcheck_coords<F>(mut loss: F, theta: &[f64], analytic: &[f64], coords: &[usize], epsilon: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(DctError::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if theta.len() != analytic.len() {
        return Err(DctError::shape(format!(
            "{} parameters but {} gradient entries",
            theta.len(),
            analytic.len()
        )));
    }
    let mut probe = theta.to_vec();
    let mut worst = 0.0f64;
    for &k in coords {
        let orig = probe[k];
        probe[k] = orig + epsilon;
        let up = loss(&probe)?;
        probe[k] = orig - epsilon;
        let down = loss(&probe)?;
        probe[k] = orig;
        if !(up.is_finite() && down.is_finite()) {
            return Err(DctError::NonFinite(format!("loss at coordinate {k}")));
        }
        let numeric = (up - down) / (2.0 * epsilon);
        worst = worst.max(relative_error(analytic[k], numeric));
    }
    Ok(worst)
}
