//! Seeded synthetic campaign corpora with controllable signal.
//!
//! Static attributes are drawn independently of the outcome, so any
//! predictive signal comes from the daily records:
//! - funds: `goal/duration · exp(N(μ, 1))` with `μ` shifted by `±funds_signal`
//!   for successes/failures,
//! - reviews: each review is positive with probability
//!   `0.5 ± sentiment_signal/2`, and its text is built from marker words of
//!   that polarity, so a bag-of-words tagger can recover it.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{DctError, Result};
use crate::features::{AttrValue, Campaign, DailyRecord, Outcome, Review, StaticAttributes};
use crate::sentiment::{LabeledDocument, Polarity};

/// Log-space shift of daily funds at `funds_signal = 1`.
const FUNDS_SHIFT: f64 = 1.0;
const FUNDS_LOG_SD: f64 = 1.0;
/// Median daily funds as a share of `goal / duration` when there is no signal.
const FUNDS_BASE: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub n_campaigns: usize,
    pub duration_min: usize,
    pub duration_max: usize,
    pub success_rate: f64,
    pub sentiment_signal: f64,
    pub funds_signal: f64,
    /// Mean reviews per day (Poisson).
    pub reviews_per_day: f64,
    pub positive_words: Vec<String>,
    pub negative_words: Vec<String>,
    /// Neutral words mixed into every review.
    pub filler_words: Vec<String>,
    /// Size of the labeled sentiment corpus emitted next to the campaigns.
    pub corpus_size: usize,
    pub seed: u64,
}

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| (*w).to_owned()).collect()
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_campaigns: 200,
            duration_min: 10,
            duration_max: 20,
            success_rate: 0.40,
            sentiment_signal: 0.6,
            funds_signal: 0.2,
            reviews_per_day: 2.0,
            positive_words: words(&[
                "great",
                "love",
                "amazing",
                "excellent",
                "awesome",
                "fantastic",
                "perfect",
                "brilliant",
            ]),
            negative_words: words(&[
                "refund",
                "broken",
                "terrible",
                "scam",
                "awful",
                "delayed",
                "disappointed",
                "worst",
            ]),
            filler_words: words(&[
                "the", "campaign", "product", "team", "update", "shipping", "really", "this",
            ]),
            corpus_size: 400,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64, name: &str| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(DctError::invalid(format!("{name} must lie in [0, 1], got {x}")))
            }
        };
        unit(self.success_rate, "success_rate")?;
        unit(self.sentiment_signal, "sentiment_signal")?;
        unit(self.funds_signal, "funds_signal")?;
        if self.n_campaigns == 0 {
            return Err(DctError::invalid("n_campaigns must be positive"));
        }
        if self.duration_min < 3 || self.duration_min > self.duration_max {
            return Err(DctError::invalid(format!(
                "duration range [{}, {}] is invalid (minimum is 3)",
                self.duration_min, self.duration_max
            )));
        }
        if !(self.reviews_per_day.is_finite() && self.reviews_per_day >= 0.0) {
            return Err(DctError::invalid("reviews_per_day must be >= 0"));
        }
        if self.positive_words.is_empty() || self.negative_words.is_empty() {
            return Err(DctError::invalid("marker word lists must be non-empty"));
        }
        let tokenized =
            |ws: &[String]| -> Vec<String> { ws.iter().flat_map(|w| crate::sentiment::tokenize(w)).collect() };
        let pos = tokenized(&self.positive_words);
        let neg = tokenized(&self.negative_words);
        let fill = tokenized(&self.filler_words);
        if pos.iter().any(|w| neg.contains(w) || fill.contains(w)) || neg.iter().any(|w| fill.contains(w)) {
            return Err(DctError::invalid("marker and filler word lists must be disjoint"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedData {
    /// Campaigns with untagged review texts and known outcomes.
    pub campaigns: Vec<Campaign>,
    pub corpus: Vec<LabeledDocument>,
}

pub fn generate(config: &GenConfig) -> Result<GeneratedData> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let reviews = if config.reviews_per_day > 0.0 {
        Some(Poisson::new(config.reviews_per_day).map_err(|e| DctError::invalid(e.to_string()))?)
    } else {
        None
    };
    let noise = Normal::new(0.0, FUNDS_LOG_SD).expect("finite sd");

    let mut campaigns = Vec::with_capacity(config.n_campaigns);
    for idx in 0..config.n_campaigns {
        let outcome = if rng.random_bool(config.success_rate) {
            Outcome::Success
        } else {
            Outcome::Failure
        };
        let sign = match outcome {
            Outcome::Success => 1.0,
            Outcome::Failure => -1.0,
        };
        let duration = rng.random_range(config.duration_min..=config.duration_max);
        let static_attrs = random_static(&mut rng, duration);
        let goal = static_attrs.goal().expect("generated goal");
        let daily_scale = goal / duration as f64;
        let log_mean = FUNDS_BASE.ln() + sign * config.funds_signal * FUNDS_SHIFT;
        let p_pos = 0.5 + sign * config.sentiment_signal / 2.0;

        let days = (1..=duration)
            .map(|day| {
                let funds = daily_scale * (log_mean + noise.sample(&mut rng)).exp();
                let n_reviews = reviews.map_or(0, |d| d.sample(&mut rng) as usize);
                let reviews = (0..n_reviews)
                    .map(|_| {
                        let polarity = if rng.random_bool(p_pos) {
                            Polarity::Positive
                        } else {
                            Polarity::Negative
                        };
                        Review::text(review_text(&mut rng, config, polarity))
                    })
                    .collect();
                DailyRecord {
                    day,
                    funds_received: (funds * 100.0).round() / 100.0,
                    reviews,
                }
            })
            .collect();
        campaigns.push(Campaign {
            id: format!("c{idx:05}"),
            static_attrs,
            days,
            outcome: Some(outcome),
        });
    }

    let corpus = (0..config.corpus_size)
        .map(|i| {
            let label = if i % 2 == 0 {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            LabeledDocument {
                text: review_text(&mut rng, config, label),
                label,
            }
        })
        .collect();
    Ok(GeneratedData { campaigns, corpus })
}

fn review_text<R: Rng + ?Sized>(rng: &mut R, config: &GenConfig, polarity: Polarity) -> String {
    let markers = match polarity {
        Polarity::Positive => &config.positive_words,
        Polarity::Negative => &config.negative_words,
    };
    let mut ws: Vec<&str> = (0..rng.random_range(2..=4))
        .map(|_| markers.choose(rng).expect("non-empty").as_str())
        .collect();
    if !config.filler_words.is_empty() {
        for _ in 0..rng.random_range(0..=2) {
            ws.push(config.filler_words.choose(rng).expect("non-empty"));
        }
    }
    ws.shuffle(rng);
    let mut text = ws.join(" ");
    if let Some(first) = text.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    text.push(if polarity == Polarity::Positive { '!' } else { '.' });
    text
}

fn random_static<R: Rng + ?Sized>(rng: &mut R, duration: usize) -> StaticAttributes {
    fn pick<R: Rng + ?Sized>(rng: &mut R, levels: &[&str]) -> AttrValue {
        AttrValue::Categorical((*levels.choose(rng).expect("levels")).to_owned())
    }
    let num = |x: f64| AttrValue::Numeric(x);
    let mut a = StaticAttributes::default();
    a.owner
        .insert("owner_campaigns".into(), num(rng.random_range(0..20) as f64));
    a.owner
        .insert("owner_backed".into(), num(rng.random_range(0..100) as f64));
    a.owner
        .insert("owner_friends".into(), num(rng.random_range(0..2000) as f64));
    a.owner
        .insert("owner_country".into(), pick(rng, &["us", "uk", "de", "ca", "fr", "jp"]));
    a.owner.insert("owner_verified".into(), pick(rng, &["yes", "no"]));

    a.backer
        .insert("backer_prior_count".into(), num(rng.random_range(0..500) as f64));
    a.backer
        .insert("backer_comments".into(), num(rng.random_range(0..300) as f64));
    a.backer
        .insert("backer_followers".into(), num(rng.random_range(0..5000) as f64));
    a.backer.insert(
        "backer_repeat_rate".into(),
        num((rng.random::<f64>() * 100.0).round() / 100.0),
    );
    a.backer
        .insert("backer_region".into(), pick(rng, &["na", "eu", "asia", "other"]));

    let min_price = rng.random_range(1..50) as f64;
    a.perks.insert("perk_count".into(), num(rng.random_range(1..15) as f64));
    a.perks.insert("perk_min_price".into(), num(min_price));
    a.perks.insert(
        "perk_max_price".into(),
        num(min_price + rng.random_range(10..1000) as f64),
    );
    a.perks
        .insert("perk_shipping".into(), pick(rng, &["worldwide", "domestic", "none"]));
    a.perks.insert("perk_limited".into(), pick(rng, &["yes", "no"]));

    a.other.insert(
        "goal".into(),
        num((rng.random_range(500.0..20_000.0_f64) / 10.0).round() * 10.0),
    );
    a.other.insert("duration".into(), num(duration as f64));
    a.other.insert(
        "category".into(),
        pick(rng, &["tech", "design", "film", "music", "games", "health"]),
    );
    a.other.insert("currency".into(), pick(rng, &["usd", "eur", "gbp"]));
    a.other.insert("has_video".into(), pick(rng, &["yes", "no"]));
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let cfg = GenConfig {
            n_campaigns: 20,
            seed: 9,
            ..Default::default()
        };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = GenConfig {
            seed: 10,
            ..cfg.clone()
        };
        assert_ne!(generate(&cfg).unwrap().campaigns, generate(&other).unwrap().campaigns);
    }

    #[test]
    fn campaigns_satisfy_invariants() {
        let data = generate(&GenConfig {
            n_campaigns: 50,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        for c in &data.campaigns {
            c.validate().unwrap();
            assert!(c.outcome.is_some());
            assert!((10..=20).contains(&c.days.len()));
            assert_eq!(c.static_attrs.iter().count(), 20);
        }
        let pos = data.corpus.iter().filter(|d| d.label == Polarity::Positive).count();
        assert_eq!(pos, 200);
    }

    #[test]
    fn success_count_within_binomial_interval() {
        let data = generate(&GenConfig {
            n_campaigns: 500,
            seed: 17,
            reviews_per_day: 0.0,
            ..Default::default()
        })
        .unwrap();
        let wins = data
            .campaigns
            .iter()
            .filter(|c| c.outcome == Some(Outcome::Success))
            .count();
        assert!((160..=240).contains(&wins), "{wins}");
    }

    #[test]
    fn rejects_invalid_configs() {
        let bad = [
            GenConfig {
                duration_min: 2,
                ..Default::default()
            },
            GenConfig {
                duration_min: 9,
                duration_max: 5,
                ..Default::default()
            },
            GenConfig {
                success_rate: 1.5,
                ..Default::default()
            },
            GenConfig {
                sentiment_signal: -0.1,
                ..Default::default()
            },
            GenConfig {
                n_campaigns: 0,
                ..Default::default()
            },
            GenConfig {
                negative_words: vec!["great".into()],
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(generate(&cfg).is_err(), "{cfg:?}");
        }
    }
}
