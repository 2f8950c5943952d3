use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::Example;
use super::params::{DctParameters, Variant};
use crate::error::{DctError, Result};
use crate::features::{Campaign, FeatureSchema};
use crate::par::{map_ordered, Execution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Weight of the per-day emotion loss.
    pub aux_weight: f64,
    pub seed: u64,
    /// Global gradient-norm clip.
    pub grad_clip: f64,
    pub static_dim: usize,
    pub hidden_dim: usize,
    pub execution: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            learning_rate: 0.05,
            batch_size: 16,
            aux_weight: 0.2,
            seed: 0,
            grad_clip: 5.0,
            static_dim: 8,
            hidden_dim: 8,
            execution: Execution::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.static_dim == 0 || self.hidden_dim == 0 {
            return Err(DctError::invalid("epochs, batch size and layer sizes must be positive"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(DctError::invalid(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.aux_weight.is_finite() && self.aux_weight >= 0.0) {
            return Err(DctError::invalid(format!(
                "aux weight must be >= 0, got {}",
                self.aux_weight
            )));
        }
        if !(self.grad_clip.is_finite() && self.grad_clip > 0.0) {
            return Err(DctError::invalid(format!(
                "gradient clip must be positive, got {}",
                self.grad_clip
            )));
        }
        Ok(())
    }
}

/// Initializes a model for `variant` and trains it on `dataset`.
/// Returns the parameters and the mean training loss of every epoch.
pub fn train(
    dataset: &[Campaign],
    schema: &FeatureSchema,
    config: &TrainConfig,
    variant: Variant,
) -> Result<(DctParameters, Vec<f64>)> {
    config.validate()?;
    let params = DctParameters::new(
        variant,
        schema.clone(),
        config.static_dim,
        config.hidden_dim,
        config.seed,
    );
    train_from(params, dataset, config)
}

/// Mini-batch SGD with global-norm clipping, starting from `params`.
///
/// Per-campaign gradients inside a batch may be computed in parallel; they
/// are always summed in batch order, so the trajectory is identical for
/// sequential and parallel execution.
pub fn train_from(
    mut params: DctParameters,
    dataset: &[Campaign],
    config: &TrainConfig,
) -> Result<(DctParameters, Vec<f64>)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(DctError::invalid("training set is empty"));
    }
    let examples = dataset
        .iter()
        .map(|c| Example::from_campaign(c, &params))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x005e_ed0f_d47a);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let weights = &params.weights;
            let results = map_ordered(batch, config.execution, |&i| {
                examples[i].loss_and_gradient(weights, config.aux_weight)
            });
            let mut total = params.weights.zeros_like();
            for r in results {
                let (loss, grad) = r?;
                epoch_loss += loss.total;
                total.add_scaled(&grad, 1.0);
            }
            total.scale(1.0 / batch.len() as f64);
            let norm = total.l2_norm();
            if norm > config.grad_clip {
                total.scale(config.grad_clip / norm);
            }
            params.weights.add_scaled(&total, -config.learning_rate);
        }
        let mean = epoch_loss / examples.len() as f64;
        if !mean.is_finite() {
            return Err(DctError::NonFinite(format!("training loss at epoch {epoch}")));
        }
        history.push(mean);
    }
    Ok((params, history))
}
