use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{DctError, Result};
use crate::features::{build_daily_feature, build_funds_feature, encode_static, Campaign, FeatureSchema};
use crate::nn::{AttentionParameters, Dense, LstmParameters, Tensor};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Daily features carry funds and review summaries.
    Full,
    /// Daily features carry the funds block only.
    FundsOnly,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Full => "full",
            Variant::FundsOnly => "funds-only",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = DctError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "funds-only" | "funds_only" => Ok(Variant::FundsOnly),
            other => Err(DctError::invalid(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sizes {
    /// Width of the encoded static attribute vector.
    pub static_input_dim: usize,
    /// Width of the static representation after the encoder.
    pub static_dim: usize,
    pub hidden_dim: usize,
    /// Width of a daily feature vector.
    pub input_dim: usize,
}

impl Sizes {
    /// Width of a per-day cooperative state `[S_r ; h_t]`.
    pub fn state_dim(&self) -> usize {
        self.static_dim + self.hidden_dim
    }

    /// Width of the success head input `[S_r ; D_r]`.
    pub fn head_input_dim(&self) -> usize {
        self.static_dim + self.state_dim()
    }
}

/// Every trainable tensor of the model. Also used as the gradient bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct DctWeights {
    pub static_encoder: Dense,
    pub lstm: LstmParameters,
    pub attention: AttentionParameters,
    pub success_head: Dense,
    pub emotion_head: Dense,
}

pub type GradientBundle = DctWeights;

impl DctWeights {
    pub fn zeros(s: &Sizes) -> Self {
        DctWeights {
            static_encoder: Dense::zeros(s.static_input_dim, s.static_dim),
            lstm: LstmParameters::zeros(s.input_dim, s.hidden_dim),
            attention: AttentionParameters::zeros(s.state_dim()),
            success_head: Dense::zeros(s.head_input_dim(), 2),
            emotion_head: Dense::zeros(s.state_dim(), 2),
        }
    }

    pub fn init(s: &Sizes, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DctWeights {
            static_encoder: Dense::init(s.static_input_dim, s.static_dim, &mut rng),
            lstm: LstmParameters::init(s.input_dim, s.hidden_dim, &mut rng),
            attention: AttentionParameters::init(s.state_dim(), &mut rng),
            success_head: Dense::init(s.head_input_dim(), 2, &mut rng),
            emotion_head: Dense::init(s.state_dim(), 2, &mut rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.scale(0.0);
        z
    }

    /// Tensors in checkpoint order with their dotted names.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![
            ("static_encoder.weight".to_owned(), &self.static_encoder.weight),
            ("static_encoder.bias".to_owned(), &self.static_encoder.bias),
        ];
        out.extend(self.lstm.tensors().into_iter().map(|(n, t)| (format!("lstm.{n}"), t)));
        out.push(("attention.w_s".into(), &self.attention.w_s));
        out.push(("attention.b_s".into(), &self.attention.b_s));
        out.push(("success_head.weight".into(), &self.success_head.weight));
        out.push(("success_head.bias".into(), &self.success_head.bias));
        out.push(("emotion_head.weight".into(), &self.emotion_head.weight));
        out.push(("emotion_head.bias".into(), &self.emotion_head.bias));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.static_encoder.weight, &mut self.static_encoder.bias];
        out.extend(self.lstm.tensors_mut().into_iter().map(|(_, t)| t));
        out.push(&mut self.attention.w_s);
        out.push(&mut self.attention.b_s);
        out.push(&mut self.success_head.weight);
        out.push(&mut self.success_head.bias);
        out.push(&mut self.emotion_head.weight);
        out.push(&mut self.emotion_head.bias);
        out
    }

    pub fn num_params(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.named_tensors()
            .into_iter()
            .flat_map(|(_, t)| t.data().iter().copied())
            .collect()
    }

    pub fn set_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(DctError::shape(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Parameter groups (name, flat range) as reported by gradient checks:
    /// the static encoder, each of the 12 LSTM tensors, attention, and the two heads.
    pub fn groups(&self) -> Vec<(String, std::ops::Range<usize>)> {
        let mut groups: Vec<(String, std::ops::Range<usize>)> = Vec::new();
        let mut offset = 0;
        for (name, t) in self.named_tensors() {
            let group = match name.split_once('.') {
                Some(("lstm", _)) => name.clone(),
                Some((head, _)) => head.to_owned(),
                None => name.clone(),
            };
            let range = offset..offset + t.len();
            offset += t.len();
            match groups.last_mut() {
                Some((g, r)) if *g == group => r.end = range.end,
                _ => groups.push((group, range)),
            }
        }
        groups
    }

    pub fn scale(&mut self, k: f64) {
        for t in self.tensors_mut() {
            t.scale(k);
        }
    }

    /// `self += k * other`
    pub fn add_scaled(&mut self, other: &DctWeights, k: f64) {
        let others: Vec<&Tensor> = other.named_tensors().into_iter().map(|(_, t)| t).collect();
        for (t, o) in self.tensors_mut().into_iter().zip(others) {
            t.add_scaled(o, k);
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.named_tensors()
            .iter()
            .map(|(_, t)| t.sum_of_squares())
            .sum::<f64>()
            .sqrt()
    }

    pub fn validate(&self, s: &Sizes) -> Result<()> {
        let expected = DctWeights::zeros(s);
        for ((name, t), (_, e)) in self.named_tensors().into_iter().zip(expected.named_tensors()) {
            if t.shape() != e.shape() {
                return Err(DctError::shape(format!(
                    "{name} has shape {:?}, expected {:?}",
                    t.shape(),
                    e.shape()
                )));
            }
            if t.data().iter().any(|x| !x.is_finite()) {
                return Err(DctError::NonFinite(name));
            }
        }
        Ok(())
    }
}

/// A trained (or freshly initialized) model together with the schema its
/// inputs were encoded against.
#[derive(Debug, Clone, PartialEq)]
pub struct DctParameters {
    pub variant: Variant,
    pub sizes: Sizes,
    pub schema: FeatureSchema,
    pub weights: DctWeights,
}

impl DctParameters {
    pub fn new(variant: Variant, schema: FeatureSchema, static_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        let input_dim = match variant {
            Variant::Full => schema.daily_width(),
            Variant::FundsOnly => schema.bucket_count,
        };
        let sizes = Sizes {
            static_input_dim: schema.static_width(),
            static_dim,
            hidden_dim,
            input_dim,
        };
        DctParameters {
            variant,
            sizes,
            weights: DctWeights::init(&sizes, seed),
            schema,
        }
    }

    /// Encoded static vector and the first `t` daily vectors.
    pub fn encode(&self, campaign: &Campaign, t: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        if t == 0 {
            return Err(DctError::EmptyPrefix);
        }
        if t > campaign.days.len() {
            return Err(DctError::invalid(format!(
                "prefix of {t} days requested but campaign {} has {}",
                campaign.id,
                campaign.days.len()
            )));
        }
        let static_x = encode_static(&campaign.static_attrs, &self.schema)?;
        if static_x.len() != self.sizes.static_input_dim {
            return Err(DctError::SchemaMismatch(format!(
                "static vector has width {}, model expects {}",
                static_x.len(),
                self.sizes.static_input_dim
            )));
        }
        let days = campaign.days[..t]
            .iter()
            .map(|d| match self.variant {
                Variant::Full => build_daily_feature(d, &self.schema),
                Variant::FundsOnly => build_funds_feature(d, &self.schema),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((static_x, days))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = CheckpointOut {
            version: CHECKPOINT_VERSION,
            variant: self.variant,
            sizes: self.sizes,
            schema: &self.schema,
            tensors: OrderedTensors(self.weights.named_tensors()),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: CheckpointIn = serde_json::from_str(s)?;
        if file.version != CHECKPOINT_VERSION {
            return Err(DctError::Format(format!(
                "checkpoint version {} (expected {CHECKPOINT_VERSION})",
                file.version
            )));
        }
        let mut weights = DctWeights::zeros(&file.sizes);
        let names: Vec<String> = weights.named_tensors().into_iter().map(|(n, _)| n).collect();
        let mut tensors = file.tensors;
        for (name, slot) in names.iter().zip(weights.tensors_mut()) {
            *slot = tensors
                .remove(name)
                .ok_or_else(|| DctError::Format(format!("checkpoint lacks tensor {name}")))?;
        }
        if let Some(extra) = tensors.keys().next() {
            return Err(DctError::Format(format!("unexpected tensor {extra}")));
        }
        weights.validate(&file.sizes)?;
        let params = DctParameters {
            variant: file.variant,
            sizes: file.sizes,
            schema: file.schema,
            weights,
        };
        let expected_input = match params.variant {
            Variant::Full => params.schema.daily_width(),
            Variant::FundsOnly => params.schema.bucket_count,
        };
        if params.sizes.input_dim != expected_input || params.sizes.static_input_dim != params.schema.static_width() {
            return Err(DctError::SchemaMismatch(
                "checkpoint sizes disagree with its schema".into(),
            ));
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Builds the funds-only counterpart of a model layout: same static and
/// hidden sizes, daily input restricted to the funds block.
pub fn make_funds_only(template: &Sizes, schema: &FeatureSchema, seed: u64) -> DctParameters {
    DctParameters::new(
        Variant::FundsOnly,
        schema.clone(),
        template.static_dim,
        template.hidden_dim,
        seed,
    )
}

struct OrderedTensors<'a>(Vec<(String, &'a Tensor)>);

impl Serialize for OrderedTensors<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (name, t) in &self.0 {
            map.serialize_entry(name, t)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct CheckpointOut<'a> {
    version: u32,
    variant: Variant,
    sizes: Sizes,
    schema: &'a FeatureSchema,
    tensors: OrderedTensors<'a>,
}

#[derive(Deserialize)]
struct CheckpointIn {
    version: u32,
    variant: Variant,
    sizes: Sizes,
    schema: FeatureSchema,
    tensors: BTreeMap<String, Tensor>,
}
