//! `psirec` command-line pipeline.
//!
//! Each subcommand runs one stage and exchanges files with the next stage
//! through a work directory:
//!
//! | stage        | reads                                   | writes                         |
//! |--------------|-----------------------------------------|--------------------------------|
//! | `ingest`     | `data.input` or `data.synthetic`        | `interactions.tsv`             |
//! | `split`      | `interactions.tsv`                      | `dataset/*.tsv`                |
//! | `walk`       | `dataset/`                              | `train_effective.tsv`, `walks.txt` |
//! | `pairs`      | `walks.txt`                             | `pairs.tsv`                    |
//! | `confidence` | `pairs.tsv` or `train_effective.tsv`    | `confidence.tsv`               |
//! | `train`      | `confidence.tsv`                        | `model.txt`                    |
//! | `recommend`  | `model.txt`, `train_effective.tsv`      | `recommendations.tsv`          |
//! | `evaluate`   | `recommendations.tsv`, `dataset/`       | `report.tsv`, `report.json`    |
//! | `experiment` | config only                             | `experiment.tsv`, `experiment.json` |

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use psirec::config::{Method, PipelineConfig};
use psirec::confidence::{ConfidenceMatrix, Measure};
use psirec::dataset::{self, Dataset};
use psirec::experiment::{self, ExperimentReport, ExperimentRow};
use psirec::factorization::{als_fit, FactorModel};
use psirec::io::{read_file, write_file};
use psirec::pairs::{sample_pairs, PairCorpusStats};
use psirec::recommend::{self, item_pop_scores, ItemPop};
use psirec::walks::WalkCorpus;

#[derive(Parser, Debug)]
#[command(name = "psirec", version, about = "Random-walk pseudo-implicit feedback recommender")]
struct Cli {
    /// TOML config file. Defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Directory for stage inputs and outputs.
    #[arg(short, long, global = true, default_value = "work")]
    work_dir: PathBuf,

    /// Overrides the config's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = one per core). Outputs do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Read, binarize and filter raw interactions.
    Ingest,
    /// Split interactions into train/valid/test.
    Split,
    /// Sparsify the training split and sample random walks.
    Walk,
    /// Extract windowed user-item pair counts from the walks.
    Pairs,
    /// Build the confidence matrix from pair counts.
    Confidence,
    /// Fit the factor model with ALS.
    Train,
    /// Write top-K lists for every user.
    Recommend {
        /// Rank by training popularity instead of the fitted model.
        #[arg(long)]
        popularity: bool,
    },
    /// Score recommendations against the test split.
    Evaluate {
        /// Label the report as the popularity baseline.
        #[arg(long)]
        popularity: bool,
    },
    /// Run the full experiment grid.
    Experiment,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Split => "split",
            Command::Walk => "walk",
            Command::Pairs => "pairs",
            Command::Confidence => "confidence",
            Command::Train => "train",
            Command::Recommend { .. } => "recommend",
            Command::Evaluate { .. } => "evaluate",
            Command::Experiment => "experiment",
        }
    }
}

struct Ctx {
    config: PipelineConfig,
    base_dir: PathBuf,
    work: PathBuf,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.work.join(name)
    }

    fn read(&self, name: &str) -> Result<String> {
        Ok(read_file(&self.path(name))?)
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        Ok(write_file(&self.path(name), contents)?)
    }

    fn dataset(&self) -> Result<Dataset> {
        Ok(Dataset::load(&self.path("dataset"))?)
    }

    fn effective_train(&self) -> Result<dataset::Interactions> {
        Ok(dataset::parse_interactions(&self.read("train_effective.tsv")?)?)
    }
}

fn load_config(cli: &Cli) -> Result<(PipelineConfig, PathBuf)> {
    let (mut config, base_dir) = match &cli.config {
        Some(path) => {
            let text = read_file(path)?;
            let config = PipelineConfig::from_toml(&text)?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (config, base)
        }
        None => (PipelineConfig::default(), PathBuf::from(".")),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(workers) = cli.workers {
        config.workers = workers;
    }
    Ok((config.resolve()?, base_dir))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (config, base_dir) = load_config(&cli).context("invalid configuration")?;
    let ctx = Ctx {
        config,
        base_dir,
        work: cli.work_dir.clone(),
    };
    let stage = cli.command;
    experiment::with_workers(ctx.config.workers, || run(&ctx, stage))?
        .with_context(|| format!("stage {} failed", stage.name()))
}

fn run(ctx: &Ctx, command: Command) -> Result<()> {
    let cfg = &ctx.config;
    match command {
        Command::Ingest => {
            let pairs = experiment::load_pairs(cfg, &ctx.base_dir)?;
            ctx.write("interactions.tsv", &dataset::format_key_pairs(&pairs)?)?;
            eprintln!("ingest: {} interactions", pairs.len());
        }
        Command::Split => {
            let pairs = dataset::parse_key_pairs(&ctx.read("interactions.tsv")?)?;
            let ds = dataset::split(&pairs, cfg.split.ratios, cfg.split_seed())?;
            ds.save(&ctx.path("dataset"))?;
            eprintln!(
                "split: {} users, {} items, train/valid/test = {}/{}/{}",
                ds.num_users(),
                ds.num_items(),
                ds.train.len(),
                ds.valid.len(),
                ds.test.len()
            );
        }
        Command::Walk => {
            let ds = ctx.dataset()?;
            let train = experiment::cell_train(&ds, cfg.sparsify.keep_fraction, cfg.seed)?;
            ctx.write("train_effective.tsv", &dataset::format_interactions(&train))?;
            let corpus = experiment::cell_walks(cfg, &train, ds.num_users(), ds.num_items(), cfg.seed)?;
            ctx.write("walks.txt", &corpus.to_text())?;
            eprintln!("walk: {} walks over {} training edges", corpus.len(), train.len());
        }
        Command::Pairs => {
            let ds = ctx.dataset()?;
            let corpus = WalkCorpus::from_text(&ctx.read("walks.txt")?, ds.num_users(), ds.num_items())?;
            let stats = sample_pairs(&corpus, cfg.pairs.sigma)?;
            ctx.write("pairs.tsv", &stats.to_text())?;
            eprintln!("pairs: |C| = {}, {} distinct", stats.total(), stats.distinct_pairs());
        }
        Command::Confidence => {
            let method = Method::from_measure(cfg.confidence.measure);
            let ds = ctx.dataset()?;
            let train = ctx.effective_train()?;
            let stats = match cfg.confidence.measure {
                Measure::Binary => None,
                _ => Some(PairCorpusStats::from_text(&ctx.read("pairs.tsv")?)?),
            };
            let s = experiment::confidence_for(method, cfg, stats.as_ref(), &train, ds.num_users(), ds.num_items())?;
            ctx.write("confidence.tsv", &s.to_text())?;
            eprintln!("confidence: {} nonzeros ({})", s.nnz(), s.measure);
        }
        Command::Train => {
            let s = ConfidenceMatrix::from_text(&ctx.read("confidence.tsv")?)?;
            let model = als_fit(&s, &cfg.als_config(cfg.seed))?;
            ctx.write("model.txt", &model.to_text())?;
            eprintln!("train: final loss {:?}", model.loss_trace.last());
        }
        Command::Recommend { popularity } => {
            let ds = ctx.dataset()?;
            let train = ctx.effective_train()?;
            let depth = experiment::ranking_depth(cfg);
            let lists = if popularity {
                let pop = ItemPop { scores: item_pop_scores(&train, ds.num_items()) };
                recommend::recommend_all(&pop, &train, ds.num_users(), depth, cfg.recommend.mask_train)?
            } else {
                let model = FactorModel::from_text(&ctx.read("model.txt")?)?;
                recommend::recommend_all(&model, &train, ds.num_users(), depth, cfg.recommend.mask_train)?
            };
            ctx.write("recommendations.tsv", &recommend::format_recommendations(&lists))?;
        }
        Command::Evaluate { popularity } => {
            let ds = ctx.dataset()?;
            let lists = recommend::parse_recommendations(&ctx.read("recommendations.tsv")?, ds.num_users())?;
            let metrics = psirec::evaluation::evaluate(&lists, &ds.test, ds.num_users(), &cfg.evaluate.cutoffs)?;
            let method = if popularity {
                Method::ItemPop
            } else {
                Method::from_measure(cfg.confidence.measure)
            };
            let report = ExperimentReport {
                config: cfg.clone(),
                rows: vec![ExperimentRow {
                    method,
                    seed: cfg.seed,
                    keep_fraction: cfg.sparsify.keep_fraction,
                    sigma: method.uses_walks().then_some(cfg.pairs.sigma),
                    metrics,
                }],
            };
            ctx.write("report.tsv", &report.to_tsv())?;
            ctx.write("report.json", &report.to_json())?;
            print!("{}", report.to_tsv());
        }
        Command::Experiment => {
            let ds = experiment::prepare_dataset(cfg, &ctx.base_dir)?;
            let rows = experiment::run_experiment(&ds, cfg)?;
            let report = ExperimentReport { config: cfg.clone(), rows };
            ctx.write("experiment.tsv", &report.to_tsv())?;
            ctx.write("experiment.json", &report.to_json())?;
            print!("{}", report.to_tsv());
        }
    }
    Ok(())
}
