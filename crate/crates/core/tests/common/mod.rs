#![allow(dead_code)]

use dct_core::features::{AttrValue, Campaign, DailyRecord, Outcome, Review, StaticAttributes};
use dct_core::sentiment::Polarity;
use dct_core::tracker::{DctWeights, Example, Sizes};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A tagged campaign with `days` days; review tags cycle through `tags`.
pub fn tagged_campaign(id: &str, days: usize, funds: &[f64], tags: &[&[f64]], outcome: Option<Outcome>) -> Campaign {
    let mut attrs = StaticAttributes::default();
    attrs.other.insert("goal".into(), AttrValue::Numeric(1000.0));
    attrs.other.insert("duration".into(), AttrValue::Numeric(days as f64));
    attrs
        .other
        .insert("category".into(), AttrValue::Categorical("tech".into()));
    attrs.owner.insert("owner_campaigns".into(), AttrValue::Numeric(3.0));
    Campaign {
        id: id.into(),
        static_attrs: attrs,
        days: (1..=days)
            .map(|day| DailyRecord {
                day,
                funds_received: funds[(day - 1) % funds.len()],
                reviews: tags[(day - 1) % tags.len()]
                    .iter()
                    .map(|&p| Review {
                        text: Some(format!("review {day}")),
                        p_pos: Some(p),
                    })
                    .collect(),
            })
            .collect(),
        outcome,
    }
}

/// Random encoded example with every day labeled, alternating polarity.
pub fn random_example(sizes: &Sizes, days: usize, seed: u64) -> Example {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Example {
        static_x: (0..sizes.static_input_dim).map(|_| rng.random::<f64>()).collect(),
        days: (0..days)
            .map(|_| (0..sizes.input_dim).map(|_| rng.random::<f64>()).collect())
            .collect(),
        labels: (0..days)
            .map(|t| {
                Some(if t % 2 == 0 {
                    Polarity::Positive
                } else {
                    Polarity::Negative
                })
            })
            .collect(),
        outcome: Outcome::Success,
    }
}

/// Weights with every entry drawn from U(-scale, scale).
pub fn random_weights(sizes: &Sizes, scale: f64, seed: u64) -> DctWeights {
    let mut w = DctWeights::zeros(sizes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flat: Vec<f64> = (0..w.num_params()).map(|_| rng.random_range(-scale..scale)).collect();
    w.set_from_flat(&flat).unwrap();
    w
}
