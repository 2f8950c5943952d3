//! Review polarity tagging.
//!
//! A logistic regression over bag-of-words counts. It produces `p_pos`, the
//! probability that a review is positive. Reviews are labeled positive only
//! when `p_pos > 0.5`, so a tie counts as negative.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DctError, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Lowercases, replaces every non-alphanumeric character with a space and
/// splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .to_lowercase()
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "neg")]
    Negative,
    #[serde(rename = "pos")]
    Positive,
}

impl Polarity {
    pub fn from_probability(p_pos: f64) -> Self {
        if p_pos > 0.5 {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }

    fn target(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub text: String,
    pub label: Polarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub corpus_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentModel {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    /// One weight per vocabulary entry, bias last.
    weights: Vec<f64>,
    meta: TrainingMeta,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    vocab: Vec<String>,
    weights: Vec<f64>,
    bias: f64,
    training_meta: TrainingMeta,
}

impl SentimentModel {
    fn from_parts(vocab: Vec<String>, weights: Vec<f64>, meta: TrainingMeta) -> Result<Self> {
        if weights.len() != vocab.len() + 1 {
            return Err(DctError::shape(format!(
                "sentiment model has {} weights for {} tokens",
                weights.len(),
                vocab.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(DctError::NonFinite(format!("sentiment weight {w}")));
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, tok) in vocab.iter().enumerate() {
            if index.insert(tok.clone(), i).is_some() {
                return Err(DctError::Format(format!("duplicate vocabulary token {tok:?}")));
            }
        }
        Ok(SentimentModel {
            vocab,
            index,
            weights,
            meta,
        })
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocab
    }

    pub fn vocab_index(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Token weights followed by the bias.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.weights[self.vocab.len()]
    }

    pub fn token_weight(&self, token: &str) -> Option<f64> {
        self.vocab_index(token).map(|i| self.weights[i])
    }

    pub fn training_meta(&self) -> &TrainingMeta {
        &self.meta
    }

    /// Probability that `text` is positive. Out-of-vocabulary tokens are ignored.
    pub fn classify(&self, text: &str) -> f64 {
        let features = self.featurize(&tokenize(text));
        sigmoid(self.logit(&features))
    }

    fn featurize(&self, tokens: &[String]) -> Vec<(usize, f64)> {
        let mut counts: Vec<(usize, f64)> = Vec::new();
        let mut seen: HashMap<usize, usize> = HashMap::new();
        for tok in tokens {
            if let Some(&idx) = self.index.get(tok) {
                match seen.get(&idx) {
                    Some(&slot) => counts[slot].1 += 1.0,
                    None => {
                        seen.insert(idx, counts.len());
                        counts.push((idx, 1.0));
                    }
                }
            }
        }
        counts.sort_unstable_by_key(|&(i, _)| i);
        counts
    }

    fn logit(&self, features: &[(usize, f64)]) -> f64 {
        features
            .iter()
            .fold(self.bias(), |acc, &(i, x)| acc + self.weights[i] * x)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            vocab: self.vocab.clone(),
            weights: self.weights[..self.vocab.len()].to_vec(),
            bias: self.bias(),
            training_meta: self.meta,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(DctError::Format(format!(
                "sentiment model version {} (expected {MODEL_FORMAT_VERSION})",
                file.version
            )));
        }
        let mut weights = file.weights;
        weights.push(file.bias);
        Self::from_parts(file.vocab, weights, file.training_meta)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub fn classify(model: &SentimentModel, text: &str) -> f64 {
    model.classify(text)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Initial weight of a token: a function of (seed, token) only, so the
/// starting point does not depend on where the token lands in the vocabulary.
fn initial_weight(seed: u64, token: &str) -> f64 {
    // FNV-1a, then a splitmix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in token.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^= h >> 31;
    let unit = (h >> 11) as f64 / (1u64 << 53) as f64;
    (unit * 2.0 - 1.0) * 0.01
}

/// Trains the tagger by per-document gradient descent on the log loss.
/// Documents are visited in a seeded shuffled order each epoch.
pub fn train_sentiment(
    corpus: &[LabeledDocument],
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<SentimentModel> {
    let mut vocab = Vec::new();
    let mut seen = HashMap::new();
    for doc in corpus {
        for tok in tokenize(&doc.text) {
            if !seen.contains_key(&tok) {
                seen.insert(tok.clone(), vocab.len());
                vocab.push(tok);
            }
        }
    }
    train_with_vocabulary(corpus, vocab, epochs, learning_rate, seed)
}

pub(crate) fn train_with_vocabulary(
    corpus: &[LabeledDocument],
    vocab: Vec<String>,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<SentimentModel> {
    if !(learning_rate.is_finite() && learning_rate > 0.0) {
        return Err(DctError::invalid(format!(
            "learning rate must be positive, got {learning_rate}"
        )));
    }
    if epochs == 0 {
        return Err(DctError::invalid("epochs must be at least 1"));
    }
    let has = |p: Polarity| corpus.iter().any(|d| d.label == p);
    if !has(Polarity::Positive) || !has(Polarity::Negative) {
        return Err(DctError::DegenerateCorpus(
            "corpus must contain both positive and negative documents".into(),
        ));
    }

    let mut weights: Vec<f64> = vocab.iter().map(|t| initial_weight(seed, t)).collect();
    weights.push(0.0);
    let meta = TrainingMeta {
        corpus_size: corpus.len(),
        epochs,
        learning_rate,
        seed,
    };
    let mut model = SentimentModel::from_parts(vocab, weights, meta)?;

    let mut docs = Vec::with_capacity(corpus.len());
    for (i, doc) in corpus.iter().enumerate() {
        let tokens = tokenize(&doc.text);
        if tokens.is_empty() {
            return Err(DctError::invalid(format!("document {i} is empty after tokenization")));
        }
        docs.push((model.featurize(&tokens), doc.label.target()));
    }

    let bias_idx = model.vocab.len();
    let mut order: Vec<usize> = (0..docs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &d in &order {
            let (features, target) = &docs[d];
            let err = sigmoid(model.logit(features)) - target;
            for &(i, x) in features {
                model.weights[i] -= learning_rate * err * x;
            }
            model.weights[bias_idx] -= learning_rate * err;
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy_corpus() -> Vec<LabeledDocument> {
        let pos = ["great", "love", "amazing", "excellent", "happy"];
        let neg = ["refund", "broken", "terrible", "scam", "awful"];
        let mut docs = Vec::new();
        for i in 0..20 {
            let p = format!("{} {} product", pos[i % 5], pos[(i + 2) % 5]);
            let n = format!("{} {} product", neg[i % 5], neg[(i + 3) % 5]);
            docs.push(LabeledDocument {
                text: p,
                label: Polarity::Positive,
            });
            docs.push(LabeledDocument {
                text: n,
                label: Polarity::Negative,
            });
        }
        docs
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Great product!!"), vec!["great", "product"]);
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("I want a REFUND, now."),
            vec!["i", "want", "a", "refund", "now"]
        );
    }

    #[test]
    fn toy_corpus_separates_held_out_docs() {
        let model = train_sentiment(&toy_corpus(), 50, 0.5, 7).unwrap();
        let held_out = [
            ("amazing love", true),
            ("excellent happy great", true),
            ("love love", true),
            ("happy excellent", true),
            ("great amazing excellent", true),
            ("scam awful", false),
            ("terrible broken", false),
            ("refund refund", false),
            ("awful scam broken", false),
            ("broken refund terrible", false),
        ];
        let correct = held_out
            .iter()
            .filter(|(t, pos)| (model.classify(t) > 0.5) == *pos)
            .count();
        assert!(correct as f64 / held_out.len() as f64 >= 0.9);

        let p = model.classify("refund broken terrible");
        let by_hand = sigmoid(
            model.bias()
                + ["refund", "broken", "terrible"]
                    .iter()
                    .map(|t| model.token_weight(t).unwrap())
                    .sum::<f64>(),
        );
        assert!((p - by_hand).abs() < 1e-12);
        assert!(p < 0.1, "negative marker doc scored {p}");
    }

    #[test]
    fn unknown_tokens_fall_back_to_bias() {
        let model = train_sentiment(&toy_corpus(), 10, 0.5, 1).unwrap();
        let p = model.classify("zzz qqq 12345");
        assert_eq!(p, sigmoid(model.bias()));
    }

    #[test]
    fn rejects_single_class_corpus() {
        let docs: Vec<_> = toy_corpus()
            .into_iter()
            .filter(|d| d.label == Polarity::Positive)
            .collect();
        let err = train_sentiment(&docs, 5, 0.1, 0).unwrap_err();
        assert!(matches!(err, DctError::DegenerateCorpus(_)));
        assert!(err.to_string().contains("degenerate corpus"));
    }

    #[test]
    fn rejects_bad_learning_rate() {
        assert!(train_sentiment(&toy_corpus(), 5, 0.0, 0).is_err());
        assert!(train_sentiment(&toy_corpus(), 5, -1.0, 0).is_err());
        assert!(train_sentiment(&toy_corpus(), 5, f64::NAN, 0).is_err());
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let a = train_sentiment(&toy_corpus(), 20, 0.3, 11).unwrap();
        let b = train_sentiment(&toy_corpus(), 20, 0.3, 11).unwrap();
        let bits = |m: &SentimentModel| m.weights().iter().map(|w| w.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.vocabulary(), b.vocabulary());
    }

    #[test]
    fn vocabulary_order_does_not_change_predictions() {
        let corpus = toy_corpus();
        let first_seen = train_sentiment(&corpus, 30, 0.3, 5).unwrap();
        let mut reversed = first_seen.vocabulary().to_vec();
        reversed.reverse();
        let permuted = train_with_vocabulary(&corpus, reversed, 30, 0.3, 5).unwrap();
        for text in ["great product", "refund now", "amazing scam product", "nothing here"] {
            let (a, b) = (first_seen.classify(text), permuted.classify(text));
            assert!((a - b).abs() < 1e-12, "{text}: {a} vs {b}");
        }
    }

    #[test]
    fn model_json_round_trip() {
        let model = train_sentiment(&toy_corpus(), 5, 0.3, 2).unwrap();
        let json = model.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["vocab"].as_array().unwrap().len(), model.vocabulary().len());
        assert_eq!(v["weights"].as_array().unwrap().len(), model.vocabulary().len());
        let back = SentimentModel::from_json(&json).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn corpus_line_format() {
        let line = r#"{"text": "Works great", "label": "pos"}"#;
        let doc: LabeledDocument = serde_json::from_str(line).unwrap();
        assert_eq!(doc.label, Polarity::Positive);
        assert!(serde_json::from_str::<LabeledDocument>(r#"{"text":"x","label":"meh"}"#).is_err());
    }

    #[test]
    fn tie_is_negative() {
        assert_eq!(Polarity::from_probability(0.5), Polarity::Negative);
        assert_eq!(Polarity::from_probability(0.5000001), Polarity::Positive);
    }
}
