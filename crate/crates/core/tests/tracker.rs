mod common;

use std::f64::consts::LN_2;

use common::tagged_campaign;
use dct_core::datagen::{generate, GenConfig};
use dct_core::features::{fit_schema, Campaign, Outcome};
use dct_core::tracker::{
    evaluate, forward, make_funds_only, prefix_probabilities, track, train, train_from, DctParameters, Emotion,
    TrainConfig, Variant, CURVE_CSV_HEADER,
};
use dct_core::{DctError, Execution};

fn small_set() -> Vec<Campaign> {
    vec![
        tagged_campaign(
            "a",
            5,
            &[100.0, 300.0],
            &[&[0.9, 0.8], &[], &[0.2]],
            Some(Outcome::Success),
        ),
        tagged_campaign(
            "b",
            4,
            &[5.0, 0.0],
            &[&[0.1], &[0.3, 0.2], &[0.9, 0.1]],
            Some(Outcome::Failure),
        ),
        tagged_campaign("c", 6, &[50.0], &[&[0.7], &[0.6, 0.4, 0.9]], Some(Outcome::Success)),
    ]
}

fn zero_model(set: &[Campaign], variant: Variant) -> DctParameters {
    let schema = fit_schema(set, 12).unwrap();
    let mut p = DctParameters::new(variant, schema, 3, 4, 0);
    p.weights.scale(0.0);
    p
}

#[test]
fn zero_parameters_predict_one_half() {
    let set = small_set();
    let p = zero_model(&set, Variant::Full);
    for c in &set {
        for t in 1..=c.days.len() {
            assert_eq!(forward(c, t, &p).unwrap().p_success, 0.5);
        }
    }
}

#[test]
fn single_day_prefix_has_unit_attention() {
    let set = small_set();
    let p = DctParameters::new(Variant::Full, fit_schema(&set, 12).unwrap(), 3, 4, 9);
    assert_eq!(forward(&set[0], 1, &p).unwrap().attention, vec![1.0]);
    assert!(matches!(forward(&set[0], 0, &p), Err(DctError::EmptyPrefix)));
}

#[test]
fn full_model_requires_tags() {
    let mut set = small_set();
    let p = DctParameters::new(Variant::Full, fit_schema(&set, 12).unwrap(), 3, 4, 9);
    set[0].days[0].reviews[0].p_pos = None;
    assert!(matches!(
        forward(&set[0], 2, &p),
        Err(DctError::UntaggedReview { day: 1 })
    ));
    let funds = make_funds_only(&p.sizes, &p.schema, 1);
    forward(&set[0], 2, &funds).unwrap();
}

#[test]
fn funds_only_layout_and_review_independence() {
    let set = small_set();
    let full = DctParameters::new(Variant::Full, fit_schema(&set, 12).unwrap(), 3, 4, 9);
    let funds = make_funds_only(&full.sizes, &full.schema, 2);
    assert_eq!(funds.sizes.input_dim, 12);
    assert_eq!(funds.variant, Variant::FundsOnly);

    let base = prefix_probabilities(&set[0], &funds).unwrap();
    let mut edited = set[0].clone();
    for d in &mut edited.days {
        for r in &mut d.reviews {
            r.text = Some("completely different words".into());
            r.p_pos = Some(1.0 - r.p_pos.unwrap());
        }
    }
    let after = prefix_probabilities(&edited, &funds).unwrap();
    assert_eq!(
        base.iter().map(|p| p.to_bits()).collect::<Vec<_>>(),
        after.iter().map(|p| p.to_bits()).collect::<Vec<_>>()
    );

    let (_, before_days) = funds.encode(&set[0], 5).unwrap();
    let mut richer = set[0].clone();
    richer.days[0].funds_received = 1e6;
    let (_, after_days) = funds.encode(&richer, 5).unwrap();
    assert_ne!(before_days[0], after_days[0]);
}

#[test]
fn curve_end_equals_full_forward_and_emotion_rule() {
    let set = small_set();
    let schema = fit_schema(&set, 12).unwrap();
    let full = DctParameters::new(Variant::Full, schema.clone(), 3, 4, 21);
    let funds = make_funds_only(&full.sizes, &schema, 22);
    for c in &set {
        let curve = track(c, &full, &funds).unwrap();
        assert_eq!(curve.points.len(), c.days.len());
        let n = c.days.len();
        let fwd = forward(c, n, &full).unwrap();
        assert_eq!(curve.points[n - 1].p_success_full.to_bits(), fwd.p_success.to_bits());
        assert_eq!(curve.attention, fwd.attention);
        for (pt, day) in curve.points.iter().zip(&c.days) {
            if day.reviews.is_empty() {
                assert_eq!(pt.emotion, Emotion::None);
            } else {
                assert_eq!(pt.emotion == Emotion::None, pt.emotion_prob <= 0.5);
            }
            assert!((0.0..=1.0).contains(&pt.p_success_full));
            assert!((0.0..=1.0).contains(&pt.p_success_funds_only));
        }
    }
    assert!(track(&set[0], &funds, &full).is_err());
}

#[test]
fn curve_csv_layout() {
    let set = small_set();
    let schema = fit_schema(&set, 12).unwrap();
    let full = DctParameters::new(Variant::Full, schema.clone(), 3, 4, 21);
    let funds = make_funds_only(&full.sizes, &schema, 22);
    let csv = track(&set[0], &full, &funds).unwrap().to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CURVE_CSV_HEADER);
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 5);
    for (k, row) in rows.iter().enumerate() {
        let cols: Vec<_> = row.split(',').collect();
        assert_eq!(cols.len(), 5);
        assert_eq!(cols[0], (k + 1).to_string());
        assert!(["pos", "neg", "none"].contains(&cols[3]));
        for c in [cols[1], cols[2], cols[4]] {
            assert_eq!(c.split('.').nth(1).unwrap().len(), 6, "{row}");
        }
    }
    // day 2 has no reviews
    assert!(rows[1].contains(",none,"));
}

#[test]
fn training_overfits_a_single_campaign() {
    let set = vec![small_set().remove(0)];
    let schema = fit_schema(&set, 12).unwrap();
    let cfg = TrainConfig {
        epochs: 500,
        learning_rate: 0.1,
        batch_size: 1,
        aux_weight: 0.0,
        hidden_dim: 8,
        ..Default::default()
    };
    let (_, history) = train(&set, &schema, &cfg, Variant::Full).unwrap();
    assert_eq!(history.len(), 500);
    assert!(*history.last().unwrap() < 0.05, "{:?}", history.last());
}

#[test]
fn symmetric_heads_start_at_ln2_per_term() {
    let set = small_set();
    let schema = fit_schema(&set, 12).unwrap();
    let mut p = DctParameters::new(Variant::Full, schema, 3, 4, 5);
    p.weights.success_head.weight.fill(0.0);
    p.weights.success_head.bias.fill(0.0);
    p.weights.emotion_head.weight.fill(0.0);
    p.weights.emotion_head.bias.fill(0.0);
    let cfg = TrainConfig {
        epochs: 1,
        learning_rate: 1e-12,
        aux_weight: 0.2,
        ..Default::default()
    };
    let (_, history) = train_from(p, &set, &cfg).unwrap();
    // every campaign above has at least one day with a majority label
    assert!((history[0] - (LN_2 + 0.2 * LN_2)).abs() < 1e-9, "{}", history[0]);
}

#[test]
fn training_is_deterministic_and_execution_independent() {
    let data = generate(&GenConfig {
        n_campaigns: 40,
        seed: 4,
        reviews_per_day: 0.0,
        ..Default::default()
    })
    .unwrap();
    let schema = fit_schema(&data.campaigns, 12).unwrap();
    let cfg = TrainConfig {
        epochs: 3,
        seed: 8,
        execution: Execution::Sequential,
        ..Default::default()
    };
    let (p1, h1) = train(&data.campaigns, &schema, &cfg, Variant::FundsOnly).unwrap();
    let (p2, h2) = train(&data.campaigns, &schema, &cfg, Variant::FundsOnly).unwrap();
    let par = TrainConfig {
        execution: Execution::Parallel,
        ..cfg.clone()
    };
    let (p3, h3) = train(&data.campaigns, &schema, &par, Variant::FundsOnly).unwrap();
    let bits = |h: &[f64]| h.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&h1), bits(&h2));
    assert_eq!(bits(&h1), bits(&h3));
    assert_eq!(p1, p2);
    assert_eq!(p1, p3);
}

#[test]
fn training_rejects_unknown_outcomes_and_bad_configs() {
    let mut set = small_set();
    let schema = fit_schema(&set, 12).unwrap();
    let bad = TrainConfig {
        learning_rate: 0.0,
        ..Default::default()
    };
    assert!(train(&set, &schema, &bad, Variant::Full).is_err());
    set[1].outcome = None;
    let err = train(&set, &schema, &TrainConfig::default(), Variant::Full).unwrap_err();
    assert!(matches!(err, DctError::UnknownOutcome(id) if id == "b"));
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let set = small_set();
    let p = DctParameters::new(Variant::Full, fit_schema(&set, 12).unwrap(), 3, 4, 77);
    let json = p.to_json().unwrap();
    let back = DctParameters::from_json(&json).unwrap();
    assert_eq!(back, p);
    assert_eq!(back.to_json().unwrap(), json);

    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["version"], 1);
    assert_eq!(v["variant"], "full");
    let keys: Vec<_> = v["tensors"].as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys.len(), 20);
    let first = json.find("\"static_encoder.weight\"").unwrap();
    let last = json.find("\"emotion_head.bias\"").unwrap();
    assert!(first < last);

    let broken = json.replace("\"version\": 1", "\"version\": 2");
    assert!(DctParameters::from_json(&broken).is_err());
}

#[test]
fn evaluate_reports_undefined_auc_for_one_class() {
    let set: Vec<_> = small_set()
        .into_iter()
        .filter(|c| c.outcome == Some(Outcome::Success))
        .collect();
    let p = zero_model(&set, Variant::Full);
    let m = evaluate(&set, &p).unwrap();
    assert!(m.auc.is_none());
    assert!(m.auc().is_err());
    assert!((m.mean_ce - LN_2).abs() < 1e-12);
    assert_eq!(m.accuracy, 0.0);
}

/// A funds-only model trained on strongly funds-driven data tracks a
/// campaign whose daily pledges grow steadily with a curve that does not
/// fall by more than 0.02 from one day to the next.
#[test]
fn funds_only_curve_rises_on_a_funding_ramp() {
    let data = generate(&GenConfig {
        n_campaigns: 300,
        sentiment_signal: 0.0,
        funds_signal: 1.0,
        reviews_per_day: 0.0,
        seed: 31,
        ..Default::default()
    })
    .unwrap();
    let schema = fit_schema(&data.campaigns, 12).unwrap();
    let cfg = TrainConfig {
        epochs: 60,
        seed: 3,
        ..Default::default()
    };
    let (funds, history) = train(&data.campaigns, &schema, &cfg, Variant::FundsOnly).unwrap();
    assert!(history.last().unwrap() < &history[0]);

    let mut ramp = data.campaigns[0].clone();
    ramp.outcome = None;
    let n = ramp.days.len();
    let goal = ramp.static_attrs.goal().unwrap();
    for (k, d) in ramp.days.iter_mut().enumerate() {
        d.funds_received = goal / n as f64 * (2.0 + 3.0 * k as f64 / n as f64);
    }
    let curve = prefix_probabilities(&ramp, &funds).unwrap();
    for w in curve.windows(2) {
        assert!(w[1] >= w[0] - 0.02, "{curve:?}");
    }
}
