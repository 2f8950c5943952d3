use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::params::{DctParameters, DctWeights, GradientBundle, Sizes, Variant};
use crate::error::{DctError, Result};
use crate::features::{aggregate_day, Campaign, Outcome};
use crate::nn::{
    attention_backward, attention_pool, attention_scores, cross_entropy, dense_backward, gradcheck_coords,
    lstm_backward, lstm_forward, sample_coords, softmax, softmax_binary, softmax_cross_entropy_grad, GradcheckOptions,
    LstmStepCache,
};
use crate::sentiment::Polarity;

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub p_success: f64,
    /// Attention weights over days `1..=t`.
    pub attention: Vec<f64>,
    /// Per-day `[p_neg, p_pos]` from the emotion head.
    pub day_emotions: Vec<[f64; 2]>,
}

/// Pooling and prediction for one prefix of per-day states.
#[derive(Debug, Clone)]
pub(crate) struct HeadPass {
    pub scores: Vec<f64>,
    pub alpha: Vec<f64>,
    pub head_input: Vec<f64>,
    pub success: [f64; 2],
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTape {
    pub static_x: Vec<f64>,
    pub static_repr: Vec<f64>,
    pub lstm: Vec<LstmStepCache>,
    /// `V_t = [S_r ; h_t]`
    pub states: Vec<Vec<f64>>,
    pub scores: Vec<f64>,
    pub alpha: Vec<f64>,
    pub head_input: Vec<f64>,
    pub success: [f64; 2],
    pub emotions: Vec<[f64; 2]>,
}

impl ForwardTape {
    pub fn output(&self) -> ForwardOutput {
        ForwardOutput {
            p_success: self.success[1],
            attention: self.alpha.clone(),
            day_emotions: self.emotions.clone(),
        }
    }
}

/// `(S_r, LSTM caches, V_1..V_n)`
pub(crate) type Encoded = (Vec<f64>, Vec<LstmStepCache>, Vec<Vec<f64>>);

/// Static representation and per-day states for a whole encoded sequence.
pub(crate) fn encode_states(w: &DctWeights, static_x: &[f64], days: &[Vec<f64>]) -> Result<Encoded> {
    let static_repr = w.static_encoder.forward_tanh(static_x)?;
    let lstm = lstm_forward(days, &w.lstm)?;
    let states = lstm
        .iter()
        .map(|c| static_repr.iter().chain(&c.h).copied().collect())
        .collect();
    Ok((static_repr, lstm, states))
}

pub(crate) fn head_pass(w: &DctWeights, static_repr: &[f64], states: &[Vec<f64>]) -> Result<HeadPass> {
    if states.is_empty() {
        return Err(DctError::EmptyPrefix);
    }
    let scores = attention_scores(states, &w.attention)?;
    let alpha = softmax(&scores);
    let pooled = attention_pool(&alpha, states)?;
    let head_input: Vec<f64> = static_repr.iter().chain(&pooled).copied().collect();
    let z = w.success_head.forward(&head_input)?;
    Ok(HeadPass {
        scores,
        alpha,
        head_input,
        success: softmax_binary([z[0], z[1]]),
    })
}

pub(crate) fn emotion_pass(w: &DctWeights, states: &[Vec<f64>]) -> Result<Vec<[f64; 2]>> {
    states
        .iter()
        .map(|v| {
            let z = w.emotion_head.forward(v)?;
            Ok(softmax_binary([z[0], z[1]]))
        })
        .collect()
}

/// Runs the full model on already-encoded inputs and records intermediates.
pub fn forward_tape(w: &DctWeights, static_x: &[f64], days: &[Vec<f64>]) -> Result<ForwardTape> {
    if days.is_empty() {
        return Err(DctError::EmptyPrefix);
    }
    let (static_repr, lstm, states) = encode_states(w, static_x, days)?;
    let head = head_pass(w, &static_repr, &states)?;
    let emotions = emotion_pass(w, &states)?;
    Ok(ForwardTape {
        static_x: static_x.to_vec(),
        static_repr,
        lstm,
        states,
        scores: head.scores,
        alpha: head.alpha,
        head_input: head.head_input,
        success: head.success,
        emotions,
    })
}

/// Success probability, attention and day emotions for days `1..=t`.
pub fn forward(campaign: &Campaign, t: usize, params: &DctParameters) -> Result<ForwardOutput> {
    let (static_x, days) = params.encode(campaign, t)?;
    Ok(forward_tape(&params.weights, &static_x, &days)?.output())
}

/// Gradient of the loss w.r.t. the logits of both heads.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputGrad {
    pub success: [f64; 2],
    pub emotions: Vec<[f64; 2]>,
}

impl OutputGrad {
    pub fn zeros(days: usize) -> Self {
        OutputGrad {
            success: [0.0; 2],
            emotions: vec![[0.0; 2]; days],
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        OutputGrad {
            success: self.success.map(|g| g * k),
            emotions: self.emotions.iter().map(|e| e.map(|g| g * k)).collect(),
        }
    }
}

/// Backpropagation through the heads, attention, LSTM and static encoder.
pub fn backward(tape: &ForwardTape, w: &DctWeights, upstream: &OutputGrad) -> Result<GradientBundle> {
    let n = tape.states.len();
    if upstream.emotions.len() != n || tape.lstm.len() != n {
        return Err(DctError::shape(format!(
            "tape has {n} days, upstream gradient {}",
            upstream.emotions.len()
        )));
    }
    let s = tape.static_repr.len();
    let mut grad = w.zeros_like();

    let d_head_in = dense_backward(
        &w.success_head,
        &tape.head_input,
        &upstream.success,
        &mut grad.success_head,
    );
    let mut d_static: Vec<f64> = d_head_in[..s].to_vec();
    let d_pooled = &d_head_in[s..];

    let mut d_states = attention_backward(
        &tape.states,
        &tape.scores,
        &tape.alpha,
        d_pooled,
        &w.attention,
        &mut grad.attention,
    );
    for (k, dv) in d_states.iter_mut().enumerate() {
        let de = dense_backward(
            &w.emotion_head,
            &tape.states[k],
            &upstream.emotions[k],
            &mut grad.emotion_head,
        );
        for (a, b) in dv.iter_mut().zip(de) {
            *a += b;
        }
    }

    let mut dh = Vec::with_capacity(n);
    for dv in &d_states {
        for (a, b) in d_static.iter_mut().zip(&dv[..s]) {
            *a += b;
        }
        dh.push(dv[s..].to_vec());
    }
    lstm_backward(&w.lstm, &tape.lstm, &dh, &mut grad.lstm)?;

    let d_pre: Vec<f64> = d_static
        .iter()
        .zip(&tape.static_repr)
        .map(|(d, y)| d * (1.0 - y * y))
        .collect();
    dense_backward(&w.static_encoder, &tape.static_x, &d_pre, &mut grad.static_encoder);
    Ok(grad)
}

/// Majority review polarity for each of the first `t` days; ties and quiet
/// days give `None`. Funds-only models never see reviews, so all `None`.
pub fn day_labels(campaign: &Campaign, t: usize, variant: Variant) -> Result<Vec<Option<Polarity>>> {
    match variant {
        Variant::FundsOnly => Ok(vec![None; t]),
        Variant::Full => campaign.days[..t]
            .iter()
            .map(|d| Ok(aggregate_day(d)?.majority()))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub success: f64,
    pub emotion: f64,
}

fn polarity_class(p: Polarity) -> usize {
    match p {
        Polarity::Negative => 0,
        Polarity::Positive => 1,
    }
}

/// `CE(success, outcome) + λ · mean_labeled_days CE(emotion_t, label_t)`
/// and its gradient w.r.t. the head logits.
pub fn loss_and_grad(
    tape: &ForwardTape,
    outcome: Outcome,
    labels: &[Option<Polarity>],
    aux_weight: f64,
) -> Result<(LossBreakdown, OutputGrad)> {
    if labels.len() != tape.emotions.len() {
        return Err(DctError::shape("one label slot per day is required"));
    }
    let success = cross_entropy(tape.success, outcome.class())?;
    let mut grad = OutputGrad::zeros(labels.len());
    grad.success = softmax_cross_entropy_grad(tape.success, outcome.class());

    let labeled = labels.iter().filter(|l| l.is_some()).count();
    let mut emotion = 0.0;
    if labeled > 0 && aux_weight > 0.0 {
        let k = aux_weight / labeled as f64;
        for (t, label) in labels.iter().enumerate() {
            if let Some(p) = label {
                let c = polarity_class(*p);
                emotion += cross_entropy(tape.emotions[t], c)?;
                grad.emotions[t] = softmax_cross_entropy_grad(tape.emotions[t], c).map(|g| g * k);
            }
        }
        emotion /= labeled as f64;
    }
    Ok((
        LossBreakdown {
            total: success + aux_weight * emotion,
            success,
            emotion,
        },
        grad,
    ))
}

/// One encoded training example.
#[derive(Debug, Clone)]
pub struct Example {
    pub static_x: Vec<f64>,
    pub days: Vec<Vec<f64>>,
    pub labels: Vec<Option<Polarity>>,
    pub outcome: Outcome,
}

impl Example {
    pub fn from_campaign(campaign: &Campaign, params: &DctParameters) -> Result<Self> {
        let outcome = campaign
            .outcome
            .ok_or_else(|| DctError::UnknownOutcome(campaign.id.clone()))?;
        let t = campaign.days.len();
        let (static_x, days) = params.encode(campaign, t)?;
        Ok(Example {
            static_x,
            days,
            labels: day_labels(campaign, t, params.variant)?,
            outcome,
        })
    }

    /// Random inputs in [0, 1) with a random outcome and a random mix of
    /// positive, negative and unlabeled days.
    pub fn synthetic(sizes: &Sizes, days: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let static_x = (0..sizes.static_input_dim).map(|_| rng.random::<f64>()).collect();
        let days: Vec<Vec<f64>> = (0..days)
            .map(|_| (0..sizes.input_dim).map(|_| rng.random::<f64>()).collect())
            .collect();
        let labels = (0..days.len())
            .map(|_| match rng.random_range(0..3) {
                0 => None,
                1 => Some(Polarity::Negative),
                _ => Some(Polarity::Positive),
            })
            .collect();
        let outcome = if rng.random::<bool>() {
            Outcome::Success
        } else {
            Outcome::Failure
        };
        Example {
            static_x,
            days,
            labels,
            outcome,
        }
    }

    pub fn loss(&self, w: &DctWeights, aux_weight: f64) -> Result<f64> {
        let tape = forward_tape(w, &self.static_x, &self.days)?;
        Ok(loss_and_grad(&tape, self.outcome, &self.labels, aux_weight)?.0.total)
    }

    pub fn loss_and_gradient(&self, w: &DctWeights, aux_weight: f64) -> Result<(LossBreakdown, GradientBundle)> {
        let tape = forward_tape(w, &self.static_x, &self.days)?;
        let (loss, upstream) = loss_and_grad(&tape, self.outcome, &self.labels, aux_weight)?;
        Ok((loss, backward(&tape, w, &upstream)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupError {
    pub group: String,
    pub coords_checked: usize,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub epsilon: f64,
    pub seed: u64,
    pub groups: Vec<GroupError>,
}

impl GradcheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.groups.iter().map(|g| g.max_relative_error).fold(0.0, f64::max)
    }

    pub fn passes(&self, threshold: f64) -> bool {
        self.groups.iter().all(|g| g.max_relative_error < threshold)
    }
}

/// Central-difference check of [`backward`] on every parameter group, with up
/// to `opts.max_coords` seeded coordinates sampled inside each group.
pub fn gradcheck_model(
    w: &DctWeights,
    example: &Example,
    aux_weight: f64,
    opts: &GradcheckOptions,
) -> Result<GradcheckReport> {
    let (_, grad) = example.loss_and_gradient(w, aux_weight)?;
    let analytic = grad.to_flat();
    let theta = w.to_flat();
    let mut probe = w.clone();
    let mut loss = |flat: &[f64]| -> Result<f64> {
        probe.set_from_flat(flat)?;
        example.loss(&probe, aux_weight)
    };
    let mut groups = Vec::new();
    for (gi, (group, range)) in w.groups().into_iter().enumerate() {
        let coords: Vec<usize> = sample_coords(range.len(), opts.max_coords, opts.seed.wrapping_add(gi as u64))
            .into_iter()
            .map(|k| range.start + k)
            .collect();
        let err = gradcheck_coords(&mut loss, &theta, &analytic, &coords, opts.epsilon)?;
        groups.push(GroupError {
            group,
            coords_checked: coords.len(),
            max_relative_error: err,
        });
    }
    Ok(GradcheckReport {
        epsilon: opts.epsilon,
        seed: opts.seed,
        groups,
    })
}
