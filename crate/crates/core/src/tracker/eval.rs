use serde::Serialize;

use super::model::forward;
use super::params::DctParameters;
use crate::error::{DctError, Result};
use crate::features::{Campaign, Outcome};
use crate::nn::cross_entropy;
use crate::par::{map_ordered, Execution};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub n: usize,
    pub accuracy: f64,
    /// `None` when the dataset holds a single class.
    pub auc: Option<f64>,
    pub mean_ce: f64,
}

impl Metrics {
    pub fn auc(&self) -> Result<f64> {
        self.auc
            .ok_or_else(|| DctError::Undefined("AUC needs both classes".into()))
    }
}

/// Area under the ROC curve via the rank statistic, ties at midrank.
pub fn roc_auc(scores: &[f64], positives: &[bool]) -> Result<f64> {
    if scores.len() != positives.len() {
        return Err(DctError::shape("one label per score is required"));
    }
    let n_pos = positives.iter().filter(|&&p| p).count();
    let n_neg = positives.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(DctError::Undefined("AUC needs both classes".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(DctError::NonFinite("score".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = midrank;
        }
        i = j + 1;
    }
    let rank_sum: f64 = ranks.iter().zip(positives).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Final-day success probability of every campaign.
pub fn predict_final(dataset: &[Campaign], params: &DctParameters, exec: Execution) -> Result<Vec<f64>> {
    map_ordered(dataset, exec, |c| forward(c, c.days.len(), params).map(|o| o.p_success))
        .into_iter()
        .collect()
}

pub fn evaluate(dataset: &[Campaign], params: &DctParameters) -> Result<Metrics> {
    evaluate_with(dataset, params, Execution::default())
}

pub fn evaluate_with(dataset: &[Campaign], params: &DctParameters, exec: Execution) -> Result<Metrics> {
    if dataset.is_empty() {
        return Err(DctError::invalid("cannot evaluate an empty dataset"));
    }
    let outcomes = dataset
        .iter()
        .map(|c| c.outcome.ok_or_else(|| DctError::UnknownOutcome(c.id.clone())))
        .collect::<Result<Vec<_>>>()?;
    let preds = predict_final(dataset, params, exec)?;
    let positives: Vec<bool> = outcomes.iter().map(|o| *o == Outcome::Success).collect();
    let correct = preds.iter().zip(&positives).filter(|(p, y)| (**p > 0.5) == **y).count();
    let mut ce = 0.0;
    for (p, o) in preds.iter().zip(&outcomes) {
        ce += cross_entropy([1.0 - p, *p], o.class())?;
    }
    let n = dataset.len();
    Ok(Metrics {
        n,
        accuracy: correct as f64 / n as f64,
        auc: roc_auc(&preds, &positives).ok(),
        mean_ce: ce / n as f64,
    })
}
