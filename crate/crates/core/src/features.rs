//! Campaign data model and the encoders that turn it into model inputs.
//!
//! Static attributes are split into four categories (owner, backer, perks,
//! other) and encoded into one fixed-width vector: numeric attributes are
//! min-max scaled against the training set, categoricals are one-hot with a
//! trailing "unknown" slot. Each day becomes a funds one-hot block (log2
//! buckets) followed by four bounded review-summary components.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DctError, Result};
use crate::sentiment::{Polarity, SentimentModel};

pub const DEFAULT_BUCKET_COUNT: usize = 12;
/// Reviews per day at which the log-count feature saturates.
pub const REVIEW_COUNT_CAP: f64 = 100.0;
/// Width of the review summary appended to the funds block.
pub const REVIEW_SUMMARY_WIDTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrCategory {
    Owner,
    Backer,
    Perks,
    Other,
}

impl AttrCategory {
    pub const ALL: [AttrCategory; 4] = [
        AttrCategory::Owner,
        AttrCategory::Backer,
        AttrCategory::Perks,
        AttrCategory::Other,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Numeric(f64),
    Categorical(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StaticAttributes {
    #[serde(default)]
    pub owner: BTreeMap<String, AttrValue>,
    #[serde(default)]
    pub backer: BTreeMap<String, AttrValue>,
    #[serde(default)]
    pub perks: BTreeMap<String, AttrValue>,
    #[serde(default)]
    pub other: BTreeMap<String, AttrValue>,
}

impl StaticAttributes {
    pub fn category(&self, c: AttrCategory) -> &BTreeMap<String, AttrValue> {
        match c {
            AttrCategory::Owner => &self.owner,
            AttrCategory::Backer => &self.backer,
            AttrCategory::Perks => &self.perks,
            AttrCategory::Other => &self.other,
        }
    }

    pub fn category_mut(&mut self, c: AttrCategory) -> &mut BTreeMap<String, AttrValue> {
        match c {
            AttrCategory::Owner => &mut self.owner,
            AttrCategory::Backer => &mut self.backer,
            AttrCategory::Perks => &mut self.perks,
            AttrCategory::Other => &mut self.other,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (AttrCategory, &String, &AttrValue)> {
        AttrCategory::ALL
            .into_iter()
            .flat_map(move |c| self.category(c).iter().map(move |(k, v)| (c, k, v)))
    }

    pub fn goal(&self) -> Option<f64> {
        match self.other.get("goal") {
            Some(AttrValue::Numeric(g)) => Some(*g),
            _ => None,
        }
    }

    pub fn duration(&self) -> Option<usize> {
        match self.other.get("duration") {
            Some(AttrValue::Numeric(d)) if *d >= 1.0 && d.fract() == 0.0 => Some(*d as usize),
            _ => None,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        match self.goal() {
            Some(g) if g > 0.0 && g.is_finite() => {}
            _ => return Err("other.goal must be a positive number".into()),
        }
        if self.duration().is_none() {
            return Err("other.duration must be an integer >= 1".into());
        }
        let mut names = HashSet::new();
        for (_, name, value) in self.iter() {
            if !names.insert(name.as_str()) {
                return Err(format!("attribute {name:?} appears in more than one category"));
            }
            if let AttrValue::Numeric(v) = value {
                if !v.is_finite() {
                    return Err(format!("attribute {name:?} is not finite"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Review {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_pos: Option<f64>,
}

impl Review {
    pub fn text(text: impl Into<String>) -> Self {
        Review {
            text: Some(text.into()),
            p_pos: None,
        }
    }

    pub fn tagged(p_pos: f64) -> Self {
        Review {
            text: None,
            p_pos: Some(p_pos),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub day: usize,
    #[serde(rename = "funds")]
    pub funds_received: f64,
    #[serde(default)]
    pub reviews: Vec<Review>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Failure,
    Success,
}

impl Outcome {
    /// Class index: failure = 0, success = 1.
    pub fn class(self) -> usize {
        match self {
            Outcome::Failure => 0,
            Outcome::Success => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub id: String,
    #[serde(rename = "static")]
    pub static_attrs: StaticAttributes,
    pub days: Vec<DailyRecord>,
    #[serde(default)]
    pub outcome: Option<Outcome>,
}

impl Campaign {
    /// Checks the structural invariants. Campaigns with a known outcome must
    /// cover their whole duration; live campaigns may stop early.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| DctError::InvalidCampaign {
            id: self.id.clone(),
            reason,
        };
        self.static_attrs.validate().map_err(bad)?;
        let duration = self.static_attrs.duration().unwrap_or(0);
        if self.days.is_empty() {
            return Err(bad("no daily records".into()));
        }
        match self.outcome {
            Some(_) if self.days.len() != duration => {
                return Err(bad(format!(
                    "{} daily records for duration {duration}",
                    self.days.len()
                )))
            }
            None if self.days.len() > duration => {
                return Err(bad(format!(
                    "{} daily records exceed duration {duration}",
                    self.days.len()
                )))
            }
            _ => {}
        }
        for (i, rec) in self.days.iter().enumerate() {
            if rec.day != i + 1 {
                return Err(bad(format!("record {i} has day {} (expected {})", rec.day, i + 1)));
            }
            if !(rec.funds_received.is_finite() && rec.funds_received >= 0.0) {
                return Err(bad(format!("day {} has invalid funds {}", rec.day, rec.funds_received)));
            }
            for r in &rec.reviews {
                if let Some(p) = r.p_pos {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(bad(format!("day {} has p_pos {p} outside [0,1]", rec.day)));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_tagged(&self) -> bool {
        self.days.iter().all(|d| d.reviews.iter().all(|r| r.p_pos.is_some()))
    }

    /// Fills `p_pos` for every review that has text. Reviews without text
    /// keep whatever tag they carry.
    pub fn tag_reviews(&mut self, model: &SentimentModel) {
        for rec in &mut self.days {
            for r in &mut rec.reviews {
                if let Some(text) = &r.text {
                    r.p_pos = Some(model.classify(text));
                }
            }
        }
    }
}

pub fn load_campaigns(path: &Path) -> Result<Vec<Campaign>> {
    let campaigns: Vec<Campaign> = crate::io::read_jsonl_file(path)?;
    for c in &campaigns {
        c.validate()?;
    }
    Ok(campaigns)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeclaredKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDeclaration {
    pub category: AttrCategory,
    pub name: String,
    pub kind: DeclaredKind,
}

impl AttributeDeclaration {
    fn new(category: AttrCategory, name: &str, kind: DeclaredKind) -> Self {
        AttributeDeclaration {
            category,
            name: name.to_owned(),
            kind,
        }
    }
}

/// The stock 20-attribute layout, five per category.
pub fn default_declaration() -> Vec<AttributeDeclaration> {
    use AttrCategory::*;
    use DeclaredKind::*;
    let table: [(AttrCategory, &str, DeclaredKind); 20] = [
        (Owner, "owner_campaigns", Numeric),
        (Owner, "owner_backed", Numeric),
        (Owner, "owner_friends", Numeric),
        (Owner, "owner_country", Categorical),
        (Owner, "owner_verified", Categorical),
        (Backer, "backer_prior_count", Numeric),
        (Backer, "backer_comments", Numeric),
        (Backer, "backer_followers", Numeric),
        (Backer, "backer_repeat_rate", Numeric),
        (Backer, "backer_region", Categorical),
        (Perks, "perk_count", Numeric),
        (Perks, "perk_min_price", Numeric),
        (Perks, "perk_max_price", Numeric),
        (Perks, "perk_shipping", Categorical),
        (Perks, "perk_limited", Categorical),
        (Other, "goal", Numeric),
        (Other, "duration", Numeric),
        (Other, "category", Categorical),
        (Other, "currency", Categorical),
        (Other, "has_video", Categorical),
    ];
    table
        .iter()
        .map(|&(c, n, k)| AttributeDeclaration::new(c, n, k))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric {
        min: f64,
        max: f64,
    },
    /// Known levels in first-seen order; an extra "unknown" slot follows them.
    Categorical {
        levels: Vec<String>,
    },
}

impl AttributeKind {
    pub fn width(&self) -> usize {
        match self {
            AttributeKind::Numeric { .. } => 1,
            AttributeKind::Categorical { levels } => levels.len() + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub category: AttrCategory,
    pub name: String,
    #[serde(flatten)]
    pub kind: AttributeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub attributes: Vec<AttributeSchema>,
    pub bucket_count: usize,
}

impl FeatureSchema {
    pub fn static_width(&self) -> usize {
        self.attributes.iter().map(|a| a.kind.width()).sum()
    }

    /// Width of a full daily vector: funds block plus review summary.
    pub fn daily_width(&self) -> usize {
        self.bucket_count + REVIEW_SUMMARY_WIDTH
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeSchema> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

/// Fits a schema whose attributes are inferred from the data: numbers become
/// numeric attributes, strings categorical ones.
pub fn fit_schema(training: &[Campaign], bucket_count: usize) -> Result<FeatureSchema> {
    if training.is_empty() {
        return Err(DctError::invalid("cannot fit a schema on an empty training set"));
    }
    let mut inferred: BTreeMap<(AttrCategory, String), DeclaredKind> = BTreeMap::new();
    for c in training {
        for (cat, name, value) in c.static_attrs.iter() {
            let kind = match value {
                AttrValue::Numeric(_) => DeclaredKind::Numeric,
                AttrValue::Categorical(_) => DeclaredKind::Categorical,
            };
            match inferred.get(&(cat, name.clone())) {
                Some(k) if *k != kind => {
                    return Err(DctError::SchemaMismatch(format!(
                        "attribute {name:?} mixes numeric and categorical values"
                    )))
                }
                Some(_) => {}
                None => {
                    inferred.insert((cat, name.clone()), kind);
                }
            }
        }
    }
    let declaration: Vec<_> = inferred
        .into_iter()
        .map(|((category, name), kind)| AttributeDeclaration { category, name, kind })
        .collect();
    fit_schema_declared(&declaration, training, bucket_count)
}

/// Fits normalization statistics and level lists for a declared attribute set.
pub fn fit_schema_declared(
    declaration: &[AttributeDeclaration],
    training: &[Campaign],
    bucket_count: usize,
) -> Result<FeatureSchema> {
    if training.is_empty() {
        return Err(DctError::invalid("cannot fit a schema on an empty training set"));
    }
    if bucket_count < 2 {
        return Err(DctError::invalid(format!(
            "bucket count must be >= 2, got {bucket_count}"
        )));
    }
    let mut names = HashSet::new();
    for d in declaration {
        if !names.insert(d.name.as_str()) {
            return Err(DctError::SchemaMismatch(format!(
                "attribute {:?} declared twice",
                d.name
            )));
        }
    }

    let mut ordered: Vec<&AttributeDeclaration> = declaration.iter().collect();
    ordered.sort_by_key(|d| d.category);

    let mut attributes = Vec::with_capacity(ordered.len());
    for d in ordered {
        let values = training
            .iter()
            .filter_map(|c| c.static_attrs.category(d.category).get(&d.name));
        let kind = match d.kind {
            DeclaredKind::Numeric => {
                let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
                for v in values {
                    match v {
                        AttrValue::Numeric(x) => {
                            min = min.min(*x);
                            max = max.max(*x);
                        }
                        AttrValue::Categorical(_) => return Err(kind_mismatch(&d.name, "numeric")),
                    }
                }
                if min > max {
                    // never observed
                    min = 0.0;
                    max = 0.0;
                }
                AttributeKind::Numeric { min, max }
            }
            DeclaredKind::Categorical => {
                let mut levels: Vec<String> = Vec::new();
                for v in values {
                    match v {
                        AttrValue::Categorical(s) => {
                            if !levels.contains(s) {
                                levels.push(s.clone());
                            }
                        }
                        AttrValue::Numeric(_) => return Err(kind_mismatch(&d.name, "categorical")),
                    }
                }
                AttributeKind::Categorical { levels }
            }
        };
        attributes.push(AttributeSchema {
            category: d.category,
            name: d.name.clone(),
            kind,
        });
    }
    let schema = FeatureSchema {
        attributes,
        bucket_count,
    };
    for c in training {
        check_against_schema(&c.static_attrs, &schema)?;
    }
    Ok(schema)
}

fn kind_mismatch(name: &str, expected: &str) -> DctError {
    DctError::SchemaMismatch(format!("attribute {name:?} is declared {expected}"))
}

fn check_against_schema(attrs: &StaticAttributes, schema: &FeatureSchema) -> Result<()> {
    for (cat, name, value) in attrs.iter() {
        let Some(a) = schema.attribute(name) else {
            return Err(DctError::SchemaMismatch(format!(
                "attribute {name:?} is not in the schema"
            )));
        };
        if a.category != cat {
            return Err(DctError::SchemaMismatch(format!(
                "attribute {name:?} is in category {cat:?}, schema says {:?}",
                a.category
            )));
        }
        match (&a.kind, value) {
            (AttributeKind::Numeric { .. }, AttrValue::Numeric(_))
            | (AttributeKind::Categorical { .. }, AttrValue::Categorical(_)) => {}
            (AttributeKind::Numeric { .. }, _) => return Err(kind_mismatch(name, "numeric")),
            (AttributeKind::Categorical { .. }, _) => return Err(kind_mismatch(name, "categorical")),
        }
    }
    Ok(())
}

/// Encodes static attributes in schema order (owner, backer, perks, other).
/// Missing numeric attributes encode as 0 and missing categoricals as "unknown".
pub fn encode_static(attrs: &StaticAttributes, schema: &FeatureSchema) -> Result<Vec<f64>> {
    check_against_schema(attrs, schema)?;
    let mut out = Vec::with_capacity(schema.static_width());
    for a in &schema.attributes {
        let value = attrs.category(a.category).get(&a.name);
        match &a.kind {
            AttributeKind::Numeric { min, max } => {
                let x = match value {
                    Some(AttrValue::Numeric(v)) if max > min => ((v - min) / (max - min)).clamp(0.0, 1.0),
                    _ => 0.0,
                };
                out.push(x);
            }
            AttributeKind::Categorical { levels } => {
                let slot = match value {
                    Some(AttrValue::Categorical(s)) => levels.iter().position(|l| l == s),
                    _ => None,
                }
                .unwrap_or(levels.len());
                out.extend((0..=levels.len()).map(|i| if i == slot { 1.0 } else { 0.0 }));
            }
        }
    }
    Ok(out)
}

/// `min(floor(log2(1 + amount)), B - 1)`.
pub fn funds_bucket(amount: f64, bucket_count: usize) -> Result<usize> {
    if bucket_count < 2 {
        return Err(DctError::invalid(format!(
            "bucket count must be >= 2, got {bucket_count}"
        )));
    }
    if !(amount.is_finite() && amount >= 0.0) {
        return Err(DctError::invalid(format!("funds amount must be >= 0, got {amount}")));
    }
    let k = (1.0 + amount).log2().floor() as usize;
    Ok(k.min(bucket_count - 1))
}

pub fn bucket_funds(amount: f64, bucket_count: usize) -> Result<Vec<f64>> {
    let k = funds_bucket(amount, bucket_count)?;
    let mut v = vec![0.0; bucket_count];
    v[k] = 1.0;
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailySentimentStats {
    pub day: usize,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl DailySentimentStats {
    pub fn n_total(&self) -> usize {
        self.n_pos + self.n_neg
    }

    /// Positive and negative shares of the day's reviews; (0, 0) on a quiet day.
    pub fn fractions(&self) -> (f64, f64) {
        let n = self.n_total();
        if n == 0 {
            (0.0, 0.0)
        } else {
            (self.n_pos as f64 / n as f64, self.n_neg as f64 / n as f64)
        }
    }

    /// Majority polarity, or `None` on a tie (including a day without reviews).
    pub fn majority(&self) -> Option<Polarity> {
        match self.n_pos.cmp(&self.n_neg) {
            std::cmp::Ordering::Greater => Some(Polarity::Positive),
            std::cmp::Ordering::Less => Some(Polarity::Negative),
            std::cmp::Ordering::Equal => None,
        }
    }
}

pub fn aggregate_day(record: &DailyRecord) -> Result<DailySentimentStats> {
    let mut stats = DailySentimentStats {
        day: record.day,
        n_pos: 0,
        n_neg: 0,
    };
    for r in &record.reviews {
        let p = r.p_pos.ok_or(DctError::UntaggedReview { day: record.day })?;
        match Polarity::from_probability(p) {
            Polarity::Positive => stats.n_pos += 1,
            Polarity::Negative => stats.n_neg += 1,
        }
    }
    Ok(stats)
}

/// Funds one-hot followed by `[n_pos/(1+n), n_neg/(1+n), mean p_pos, log-count]`.
pub fn build_daily_feature(record: &DailyRecord, schema: &FeatureSchema) -> Result<Vec<f64>> {
    let stats = aggregate_day(record)?;
    let mut v = bucket_funds(record.funds_received, schema.bucket_count)?;
    let n = stats.n_total() as f64;
    let mean_p = if record.reviews.is_empty() {
        0.5
    } else {
        record.reviews.iter().map(|r| r.p_pos.unwrap_or(0.0)).sum::<f64>() / n
    };
    v.push(stats.n_pos as f64 / (1.0 + n));
    v.push(stats.n_neg as f64 / (1.0 + n));
    v.push(mean_p);
    v.push(((1.0 + n).ln() / (1.0 + REVIEW_COUNT_CAP).ln()).min(1.0));
    Ok(v)
}

/// The funds block alone; reviews are never inspected.
pub fn build_funds_feature(record: &DailyRecord, schema: &FeatureSchema) -> Result<Vec<f64>> {
    bucket_funds(record.funds_received, schema.bucket_count)
}
