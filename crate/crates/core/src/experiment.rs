//! End-to-end experiment grids.
//!
//! One grid cell is `(seed, keep_fraction, method, sigma)`. For each cell the
//! training split is sparsified, walks and pairs are sampled from it, the
//! confidence matrix is fitted with ALS, and the ranked lists are scored
//! against the full test split. The walk corpus depends only on the seed and
//! the sparsified training set, so it is shared by every method and window
//! size of the same `(seed, keep_fraction)`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::confidence::{binary_matrix, co_matrix, sppmi_matrix, ConfidenceMatrix};
use crate::config::{Method, PipelineConfig};
use crate::dataset::{self, binarize, filter_min_interactions, sparsify, Dataset, Interactions, KeyPairs};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, MetricsReport};
use crate::factorization::als_fit;
use crate::graph::BipartiteGraph;
use crate::pairs::{sample_pairs, PairCorpusStats};
use crate::recommend::{item_pop_scores, recommend_all, ItemPop, Scorer};
use crate::rng::{derive_seed, Stage};
use crate::synthetic;
use crate::walks::{generate_walks, WalkCorpus};

/// Runs `f` on a pool of `workers` threads (0 = one per core).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Reads (or generates) the raw interactions, binarizes and filters them.
pub fn load_pairs(config: &PipelineConfig, base_dir: &Path) -> Result<KeyPairs> {
    let pairs = match (&config.data.synthetic, &config.data.input) {
        (Some(syn), _) => synthetic::generate(syn, derive_seed(config.seed, Stage::Synthetic))?,
        (None, Some(input)) => {
            let path = base_dir.join(input);
            let file = std::fs::File::open(&path).map_err(|source| Error::File { path, source })?;
            binarize(&dataset::ingest(std::io::BufReader::new(file), &config.data.format)?)
        }
        (None, None) => {
            return Err(Error::config("data.input", "either data.input or data.synthetic must be set"));
        }
    };
    Ok(filter_min_interactions(&pairs, config.data.min_count))
}

pub fn prepare_dataset(config: &PipelineConfig, base_dir: &Path) -> Result<Dataset> {
    dataset::split(&load_pairs(config, base_dir)?, config.split.ratios, config.split_seed())
}

/// Training set seen by a cell with the given seed and keep fraction.
pub fn cell_train(dataset: &Dataset, keep_fraction: f64, seed: u64) -> Result<Interactions> {
    sparsify(&dataset.train, keep_fraction, derive_seed(seed, Stage::Sparsify))
}

pub fn cell_walks(config: &PipelineConfig, train: &Interactions, num_users: usize, num_items: usize, seed: u64) -> Result<WalkCorpus> {
    let graph = BipartiteGraph::build(train, num_users, num_items)?;
    generate_walks(&graph, &config.walk_config(seed))
}

/// The matrix ALS is fitted to for a factorization method.
pub fn confidence_for(
    method: Method,
    config: &PipelineConfig,
    stats: Option<&PairCorpusStats>,
    train: &Interactions,
    num_users: usize,
    num_items: usize,
) -> Result<ConfidenceMatrix> {
    let need_stats = || stats.ok_or_else(|| Error::InvalidArgument(format!("{method} needs pair statistics")));
    match method {
        Method::Pmi => sppmi_matrix(need_stats()?, config.confidence.shift_k),
        Method::Co => Ok(co_matrix(need_stats()?)),
        Method::Mf => binary_matrix(train, num_users, num_items),
        Method::ItemPop => Err(Error::InvalidArgument("ItemPop has no confidence matrix".into())),
    }
}

/// List length needed to serve both `recommend.k_items` and the largest cutoff.
pub fn ranking_depth(config: &PipelineConfig) -> usize {
    config
        .recommend
        .k_items
        .max(config.evaluate.cutoffs.iter().copied().max().unwrap_or(0))
}

/// Ranks with `scorer`, masking `train`, and evaluates on the test split.
pub fn score_and_evaluate<S: Scorer + ?Sized>(
    scorer: &S,
    config: &PipelineConfig,
    train: &Interactions,
    dataset: &Dataset,
) -> Result<MetricsReport> {
    let recs = recommend_all(scorer, train, dataset.num_users(), ranking_depth(config), config.recommend.mask_train)?;
    evaluate(&recs, &dataset.test, dataset.num_users(), &config.evaluate.cutoffs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub method: Method,
    pub seed: u64,
    pub keep_fraction: f64,
    /// Window size; `None` for methods that do not sample walks.
    pub sigma: Option<usize>,
    pub metrics: MetricsReport,
}

/// Runs every cell of the resolved grid in `config.experiment`.
pub fn run_experiment(dataset: &Dataset, config: &PipelineConfig) -> Result<Vec<ExperimentRow>> {
    config.validate()?;
    let (m, n) = (dataset.num_users(), dataset.num_items());
    let grid = &config.experiment;
    let seeds = if grid.seeds.is_empty() { vec![config.seed] } else { grid.seeds.clone() };
    let keeps = if grid.keep_fractions.is_empty() {
        vec![config.sparsify.keep_fraction]
    } else {
        grid.keep_fractions.clone()
    };
    let sigmas = if grid.sigmas.is_empty() { vec![config.pairs.sigma] } else { grid.sigmas.clone() };

    let mut rows = Vec::new();
    for &seed in &seeds {
        for &keep in &keeps {
            let train = cell_train(dataset, keep, seed)?;
            let walks = if grid.methods.iter().any(|m| m.uses_walks()) {
                Some(cell_walks(config, &train, m, n, seed)?)
            } else {
                None
            };
            let mut stats: BTreeMap<usize, PairCorpusStats> = BTreeMap::new();
            for &method in &grid.methods {
                let cell_sigmas: Vec<Option<usize>> = if method.uses_walks() {
                    sigmas.iter().copied().map(Some).collect()
                } else {
                    vec![None]
                };
                for sigma in cell_sigmas {
                    let metrics = match method {
                        Method::ItemPop => {
                            let pop = ItemPop { scores: item_pop_scores(&train, n) };
                            score_and_evaluate(&pop, config, &train, dataset)?
                        }
                        _ => {
                            let st = match sigma {
                                Some(s) => {
                                    if let Entry::Vacant(slot) = stats.entry(s) {
                                        let corpus = walks.as_ref().expect("walks sampled for walk methods");
                                        slot.insert(sample_pairs(corpus, s)?);
                                    }
                                    stats.get(&s)
                                }
                                None => None,
                            };
                            let conf = confidence_for(method, config, st, &train, m, n)?;
                            let model = als_fit(&conf, &config.als_config(seed))?;
                            score_and_evaluate(&model, config, &train, dataset)?
                        }
                    };
                    rows.push(ExperimentRow { method, seed, keep_fraction: keep, sigma, metrics });
                }
            }
        }
    }
    Ok(rows)
}

/// Grid results plus the resolved config that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: PipelineConfig,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentReport {
    /// Tab-separated table: config knobs, then P/R/F1 per cutoff as
    /// percentages with three decimals.
    pub fn to_tsv(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        out.push_str(
            "method\tseed\tkeep_fraction\tsigma\tbeta\tgamma\tshift_k\tfactors\tlambda\tsweeps\tinit_scale\tk_items\tmask_train",
        );
        for k in &c.evaluate.cutoffs {
            let _ = write!(out, "\tP@{k}\tR@{k}\tF1@{k}");
        }
        out.push('\n');
        for row in &self.rows {
            let sigma = row.sigma.map_or_else(|| "-".to_string(), |s| s.to_string());
            let shift = if row.method == Method::Pmi { c.confidence.shift_k.to_string() } else { "-".into() };
            let _ = write!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                row.method,
                row.seed,
                row.keep_fraction,
                sigma,
                c.walk.beta,
                c.walk.gamma,
                shift,
                c.als.factors,
                c.als.lambda,
                c.als.sweeps,
                c.als.init_scale,
                c.recommend.k_items,
                c.recommend.mask_train
            );
            for k in &c.evaluate.cutoffs {
                match row.metrics.at(*k) {
                    Some(m) => {
                        let _ = write!(
                            out,
                            "\t{:.3}\t{:.3}\t{:.3}",
                            100.0 * m.precision,
                            100.0 * m.recall,
                            100.0 * m.f1
                        );
                    }
                    None => out.push_str("\t-\t-\t-"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Loads the data, splits it and runs the grid on `config.workers` threads.
pub fn run(config: &PipelineConfig, base_dir: &Path) -> Result<ExperimentReport> {
    let config = config.clone().resolve()?;
    with_workers(config.workers, || {
        let dataset = prepare_dataset(&config, base_dir)?;
        let rows = run_experiment(&dataset, &config)?;
        Ok(ExperimentReport { config: config.clone(), rows })
    })?
}
