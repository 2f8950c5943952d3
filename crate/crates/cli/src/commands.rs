use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::json;

use dct_core::datagen::{generate, GenConfig};
use dct_core::features::{aggregate_day, fit_schema, load_campaigns, Campaign, DEFAULT_BUCKET_COUNT};
use dct_core::io::{read_jsonl_file, to_jsonl_string};
use dct_core::nn::GradcheckOptions;
use dct_core::sentiment::{train_sentiment, LabeledDocument, SentimentModel};
use dct_core::tracker::{
    evaluate, gradcheck_model, track, train, DctParameters, DctWeights, Example, Sizes, TrainConfig, Variant,
};

use crate::artifacts;

pub enum Status {
    Ok,
    CheckFailed,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic campaign dataset and sentiment corpus
    Simulate(SimulateArgs),
    /// Train the review tagger or tag a dataset with it
    #[command(subcommand)]
    Sentiment(SentimentCommand),
    /// Train a tracking model
    Train(TrainArgs),
    /// Final-day accuracy, AUC and cross-entropy of a model
    Evaluate(EvaluateArgs),
    /// Per-day success curve of one campaign
    Track(TrackArgs),
    /// Per-day review polarity counts of one campaign
    Stats(StatsArgs),
    /// Compare analytic and numeric gradients of a random model
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Subcommand)]
pub enum SentimentCommand {
    /// Fit the bag-of-words tagger on a labeled corpus
    Train(SentimentTrainArgs),
    /// Write p_pos into every review of a dataset
    Tag(SentimentTagArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Generator settings (JSON); omitted fields take their defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
pub struct SentimentTrainArgs {
    /// Labeled corpus (JSONL)
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
pub struct SentimentTagArgs {
    #[arg(long)]
    model: PathBuf,
    /// Campaign dataset (JSONL)
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    variant: VariantArg,
    /// Training settings (JSON); omitted fields take their defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint path
    #[arg(long)]
    out: PathBuf,
    /// Loss history CSV [default: <out stem>.loss.csv]
    #[arg(long)]
    history: Option<PathBuf>,
    /// Overrides the seed in the config
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the epoch count in the config
    #[arg(long)]
    epochs: Option<usize>,
    /// Number of funds buckets
    #[arg(long, default_value_t = DEFAULT_BUCKET_COUNT)]
    buckets: usize,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Full,
    FundsOnly,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Full => Variant::Full,
            VariantArg::FundsOnly => Variant::FundsOnly,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Also write the metrics JSON here
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Checkpoint of the full model
    #[arg(long)]
    model: PathBuf,
    /// Checkpoint of the funds-only model
    #[arg(long)]
    funds_model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    campaign: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Pattern {
    /// day,n_pos,n_neg
    Tile,
    /// day,n_total,frac_pos,frac_neg
    Stack,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    campaign: String,
    #[arg(long, value_enum)]
    pattern: Pattern,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Width of the encoded static attribute vector
    #[arg(long, default_value_t = 6)]
    static_input: usize,
    /// Width of the static representation
    #[arg(long, default_value_t = 4)]
    static_dim: usize,
    #[arg(long, default_value_t = 3)]
    hidden: usize,
    /// Width of the daily input vector
    #[arg(long, default_value_t = 8)]
    input: usize,
    #[arg(long, default_value_t = 4)]
    days: usize,
    #[arg(long, default_value_t = 0.2)]
    aux_weight: f64,
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    /// Largest relative error accepted for every group
    #[arg(long, default_value_t = 1e-4)]
    threshold: f64,
    /// Also write the report here
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    force: bool,
}

pub fn run(command: Command) -> Result<Status> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Sentiment(SentimentCommand::Train(a)) => sentiment_train(a),
        Command::Sentiment(SentimentCommand::Tag(a)) => sentiment_tag(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Track(a) => track_cmd(a),
        Command::Stats(a) => stats(a),
        Command::Gradcheck(a) => gradcheck(a),
    }
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn load_dataset(path: &Path) -> Result<Vec<Campaign>> {
    load_campaigns(path).with_context(|| format!("loading {}", path.display()))
}

fn load_model(path: &Path) -> Result<DctParameters> {
    DctParameters::load(path).with_context(|| format!("loading {}", path.display()))
}

fn find<'a>(campaigns: &'a [Campaign], id: &str) -> Result<&'a Campaign> {
    campaigns
        .iter()
        .find(|c| c.id == id)
        .with_context(|| format!("no campaign with id {id:?}"))
}

fn simulate(a: SimulateArgs) -> Result<Status> {
    let mut cfg: GenConfig = read_config(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let campaigns_path = a.out.join("campaigns.jsonl");
    let corpus_path = a.out.join("sentiment_corpus.jsonl");
    let mut run = artifacts::Run::new("simulate", a.force);
    if let Some(p) = &a.config {
        run.input(p);
    }
    run.manifest_at(a.out.join("manifest.json"));
    run.claim(&[&campaigns_path, &corpus_path])?;

    let data = generate(&cfg)?;
    log::info!(
        "generated {} campaigns and {} corpus documents",
        data.campaigns.len(),
        data.corpus.len()
    );
    run.add(&campaigns_path, to_jsonl_string(&data.campaigns)?);
    run.add(&corpus_path, to_jsonl_string(&data.corpus)?);
    run.commit(&serde_json::to_value(&cfg)?, Some(cfg.seed))?;
    Ok(Status::Ok)
}

fn sentiment_train(a: SentimentTrainArgs) -> Result<Status> {
    let mut run = artifacts::Run::new("sentiment train", a.force);
    run.input(&a.data)
        .manifest_at(artifacts::sibling(&a.out, "manifest.json"));
    run.claim(&[&a.out])?;
    let corpus: Vec<LabeledDocument> =
        read_jsonl_file(&a.data).with_context(|| format!("loading {}", a.data.display()))?;
    let model = train_sentiment(&corpus, a.epochs, a.learning_rate, a.seed)?;
    log::info!("vocabulary of {} tokens", model.vocabulary().len());
    run.add(&a.out, model.to_json()? + "\n");
    let config = json!({"epochs": a.epochs, "learning_rate": a.learning_rate});
    run.commit(&config, Some(a.seed))?;
    Ok(Status::Ok)
}

fn sentiment_tag(a: SentimentTagArgs) -> Result<Status> {
    let mut run = artifacts::Run::new("sentiment tag", a.force);
    run.input(&a.model)
        .input(&a.data)
        .manifest_at(artifacts::sibling(&a.out, "manifest.json"));
    run.claim(&[&a.out])?;
    let model = SentimentModel::load(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let mut campaigns = load_dataset(&a.data)?;
    let mut reviews = 0;
    for c in &mut campaigns {
        c.tag_reviews(&model);
        reviews += c.days.iter().map(|d| d.reviews.len()).sum::<usize>();
    }
    log::info!("tagged {reviews} reviews in {} campaigns", campaigns.len());
    run.add(&a.out, to_jsonl_string(&campaigns)?);
    run.commit(&json!({}), None)?;
    Ok(Status::Ok)
}

fn loss_csv(history: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (k, loss) in history.iter().enumerate() {
        writeln!(out, "{},{loss:.6}", k + 1).expect("writing to a String");
    }
    out
}

fn train_cmd(a: TrainArgs) -> Result<Status> {
    let mut cfg: TrainConfig = read_config(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(epochs) = a.epochs {
        cfg.epochs = epochs;
    }
    cfg.validate()?;
    let variant = Variant::from(a.variant);
    let history_path = a
        .history
        .clone()
        .unwrap_or_else(|| artifacts::sibling(&a.out, "loss.csv"));
    let mut run = artifacts::Run::new("train", a.force);
    run.input(&a.data)
        .manifest_at(artifacts::sibling(&a.out, "manifest.json"));
    if let Some(p) = &a.config {
        run.input(p);
    }
    run.claim(&[&a.out, &history_path])?;

    let campaigns = load_dataset(&a.data)?;
    if variant == Variant::Full {
        if let Some(c) = campaigns.iter().find(|c| !c.is_tagged()) {
            bail!(
                "campaign {:?} has untagged reviews; run `dct sentiment tag` first or train the funds-only variant",
                c.id
            );
        }
    }
    let schema = fit_schema(&campaigns, a.buckets)?;
    log::info!("training {variant} model on {} campaigns", campaigns.len());
    let (params, history) = train(&campaigns, &schema, &cfg, variant)?;
    log::info!("final training loss {:.6}", history.last().copied().unwrap_or(f64::NAN));
    if let Ok(m) = evaluate(&campaigns, &params) {
        log::debug!("training-set metrics {m:?}");
    }
    run.add(&a.out, params.to_json()? + "\n");
    run.add(&history_path, loss_csv(&history));
    let mut config = serde_json::to_value(&cfg)?;
    config["variant"] = json!(variant);
    config["buckets"] = json!(a.buckets);
    run.commit(&config, Some(cfg.seed))?;
    Ok(Status::Ok)
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<Status> {
    let mut run = artifacts::Run::new("evaluate", a.force);
    run.input(&a.model).input(&a.data);
    if let Some(out) = &a.out {
        run.manifest_at(artifacts::sibling(out, "manifest.json"));
        run.claim(&[out])?;
    }
    let params = load_model(&a.model)?;
    let campaigns = load_dataset(&a.data)?;
    let metrics = evaluate(&campaigns, &params)?;
    let report = serde_json::to_string_pretty(&metrics)? + "\n";
    print!("{report}");
    if let Some(out) = &a.out {
        run.add(out, report);
        run.commit(&json!({}), None)?;
    }
    Ok(Status::Ok)
}

fn track_cmd(a: TrackArgs) -> Result<Status> {
    let mut run = artifacts::Run::new("track", a.force);
    run.input(&a.model)
        .input(&a.funds_model)
        .input(&a.data)
        .manifest_at(artifacts::sibling(&a.out, "manifest.json"));
    run.claim(&[&a.out])?;
    let full = load_model(&a.model)?;
    let funds = load_model(&a.funds_model)?;
    let campaigns = load_dataset(&a.data)?;
    let campaign = find(&campaigns, &a.campaign)?;
    let curve = track(campaign, &full, &funds)?;
    run.add(&a.out, curve.to_csv());
    run.commit(&json!({"campaign": a.campaign}), None)?;
    Ok(Status::Ok)
}

fn stats_csv(campaign: &Campaign, pattern: Pattern) -> Result<String> {
    let mut out = String::from(match pattern {
        Pattern::Tile => "day,n_pos,n_neg\n",
        Pattern::Stack => "day,n_total,frac_pos,frac_neg\n",
    });
    for record in &campaign.days {
        let s = aggregate_day(record)?;
        match pattern {
            Pattern::Tile => writeln!(out, "{},{},{}", s.day, s.n_pos, s.n_neg),
            Pattern::Stack => {
                let (pos, neg) = s.fractions();
                writeln!(out, "{},{},{pos:.6},{neg:.6}", s.day, s.n_total())
            }
        }
        .expect("writing to a String");
    }
    Ok(out)
}

fn stats(a: StatsArgs) -> Result<Status> {
    let mut run = artifacts::Run::new("stats", a.force);
    run.input(&a.data)
        .manifest_at(artifacts::sibling(&a.out, "manifest.json"));
    run.claim(&[&a.out])?;
    let campaigns = load_dataset(&a.data)?;
    let csv = stats_csv(find(&campaigns, &a.campaign)?, a.pattern)?;
    run.add(&a.out, csv);
    let pattern = format!("{:?}", a.pattern).to_lowercase();
    run.commit(&json!({"campaign": a.campaign, "pattern": pattern}), None)?;
    Ok(Status::Ok)
}

fn gradcheck(a: GradcheckArgs) -> Result<Status> {
    if a.days == 0 {
        bail!("--days must be at least 1");
    }
    if [a.static_input, a.static_dim, a.hidden, a.input].contains(&0) {
        bail!("layer sizes must be positive");
    }
    let mut run = artifacts::Run::new("gradcheck", a.force);
    if let Some(out) = &a.out {
        run.manifest_at(artifacts::sibling(out, "manifest.json"));
        run.claim(&[out])?;
    }
    let sizes = Sizes {
        static_input_dim: a.static_input,
        static_dim: a.static_dim,
        hidden_dim: a.hidden,
        input_dim: a.input,
    };
    let weights = DctWeights::init(&sizes, a.seed);
    let example = Example::synthetic(&sizes, a.days, a.seed);
    let opts = GradcheckOptions {
        epsilon: a.epsilon,
        seed: a.seed,
        ..Default::default()
    };
    let report = gradcheck_model(&weights, &example, a.aux_weight, &opts)?;
    let passed = report.passes(a.threshold);
    for g in &report.groups {
        log::debug!("{:<22} {:.3e}", g.group, g.max_relative_error);
    }
    let doc = json!({
        "sizes": sizes,
        "days": a.days,
        "aux_weight": a.aux_weight,
        "threshold": a.threshold,
        "passed": passed,
        "max_relative_error": report.max_relative_error(),
        "epsilon": report.epsilon,
        "seed": report.seed,
        "groups": report.groups,
    });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    print!("{text}");
    if let Some(out) = &a.out {
        run.add(out, text);
        run.commit(&json!({"threshold": a.threshold, "epsilon": a.epsilon}), Some(a.seed))?;
    }
    if passed {
        Ok(Status::Ok)
    } else {
        log::warn!(
            "max relative error {:.3e} is not below {:.1e}",
            report.max_relative_error(),
            a.threshold
        );
        Ok(Status::CheckFailed)
    }
}
