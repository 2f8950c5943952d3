use std::fmt::Write as _;

use serde::Serialize;

use super::model::{emotion_pass, encode_states, head_pass};
use super::params::{DctParameters, Variant};
use crate::error::{DctError, Result};
use crate::features::Campaign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Pos,
    Neg,
    None,
}

impl Emotion {
    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Pos => "pos",
            Emotion::Neg => "neg",
            Emotion::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackPoint {
    pub day: usize,
    pub p_success_full: f64,
    pub p_success_funds_only: f64,
    pub emotion: Emotion,
    /// Probability of the more likely polarity on this day, whether shown or not.
    pub emotion_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackingCurve {
    pub campaign_id: String,
    pub points: Vec<TrackPoint>,
    /// Attention over all days at the final day of the full model.
    pub attention: Vec<f64>,
}

pub const CURVE_CSV_HEADER: &str = "day,p_success_full,p_success_funds_only,emotion,emotion_prob";

impl TrackingCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CURVE_CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            writeln!(
                out,
                "{},{:.6},{:.6},{},{:.6}",
                p.day,
                p.p_success_full,
                p.p_success_funds_only,
                p.emotion.as_str(),
                p.emotion_prob
            )
            .expect("writing to a String");
        }
        out
    }
}

/// Success probability after each day prefix `1..=t`, `t = 1..=n`.
///
/// The LSTM is causal, so the states are computed once; attention and the
/// success head are re-run on each prefix.
pub fn prefix_probabilities(campaign: &Campaign, params: &DctParameters) -> Result<Vec<f64>> {
    Ok(prefix_pass(campaign, params)?.probs)
}

struct PrefixPass {
    probs: Vec<f64>,
    last_alpha: Vec<f64>,
    emotions: Vec<[f64; 2]>,
}

fn prefix_pass(campaign: &Campaign, params: &DctParameters) -> Result<PrefixPass> {
    let n = campaign.days.len();
    let (static_x, days) = params.encode(campaign, n)?;
    let (static_repr, _, states) = encode_states(&params.weights, &static_x, &days)?;
    let mut probs = Vec::with_capacity(n);
    let mut last_alpha = Vec::new();
    for t in 1..=n {
        let head = head_pass(&params.weights, &static_repr, &states[..t])?;
        probs.push(head.success[1]);
        last_alpha = head.alpha;
    }
    let emotions = emotion_pass(&params.weights, &states)?;
    Ok(PrefixPass {
        probs,
        last_alpha,
        emotions,
    })
}

/// Builds the per-day tracking curve from the full model and the funds-only
/// model. The emotion of day `t` is shown only when the day has at least one
/// review and the winning polarity has probability strictly above 0.5.
pub fn track(campaign: &Campaign, full: &DctParameters, funds_only: &DctParameters) -> Result<TrackingCurve> {
    if full.variant != Variant::Full || funds_only.variant != Variant::FundsOnly {
        return Err(DctError::SchemaMismatch(format!(
            "track needs a full and a funds-only model, got {} and {}",
            full.variant, funds_only.variant
        )));
    }
    if campaign.days.is_empty() {
        return Err(DctError::EmptyPrefix);
    }
    let PrefixPass {
        probs: p_full,
        last_alpha: attention,
        emotions,
    } = prefix_pass(campaign, full)?;
    let p_funds = prefix_probabilities(campaign, funds_only)?;
    let points = campaign
        .days
        .iter()
        .enumerate()
        .map(|(k, day)| {
            let [p_neg, p_pos] = emotions[k];
            let (polarity, prob) = if p_pos > 0.5 {
                (Emotion::Pos, p_pos)
            } else {
                (Emotion::Neg, p_neg)
            };
            let shown = !day.reviews.is_empty() && prob > 0.5;
            TrackPoint {
                day: day.day,
                p_success_full: p_full[k],
                p_success_funds_only: p_funds[k],
                emotion: if shown { polarity } else { Emotion::None },
                emotion_prob: prob,
            }
        })
        .collect();
    Ok(TrackingCurve {
        campaign_id: campaign.id.clone(),
        points,
        attention,
    })
}
