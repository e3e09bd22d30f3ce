//! Pipeline configuration, read from TOML.
//!
//! Every section and key is optional; missing keys take the defaults below.
//! Unknown keys are rejected so typos surface as errors naming the key.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::confidence::Measure;
use crate::dataset::InputFormat;
use crate::error::{Error, Result};
use crate::factorization::AlsConfig;
use crate::rng::{derive_seed, Stage};
use crate::synthetic::SyntheticConfig;
use crate::walks::WalkConfig;

/// A model family evaluated by the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// ALS on shifted positive PMI of walk pairs.
    Pmi,
    /// ALS on walk-pair co-occurrence counts.
    Co,
    /// ALS directly on the binary training matrix.
    Mf,
    /// Popularity ranking.
    ItemPop,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Pmi => "PsiRec-PMI",
            Method::Co => "PsiRec-CO",
            Method::Mf => "MF",
            Method::ItemPop => "ItemPop",
        }
    }

    /// The walk-based methods depend on the window size.
    pub fn uses_walks(self) -> bool {
        matches!(self, Method::Pmi | Method::Co)
    }

    pub fn from_measure(measure: Measure) -> Self {
        match measure {
            Measure::Pmi => Method::Pmi,
            Measure::Co => Method::Co,
            Measure::Binary => Method::Mf,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pmi" | "psirec-pmi" => Ok(Method::Pmi),
            "co" | "psirec-co" => Ok(Method::Co),
            "mf" => Ok(Method::Mf),
            "itempop" => Ok(Method::ItemPop),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Raw interaction log. Relative paths resolve against the config file.
    pub input: Option<PathBuf>,
    pub format: InputFormat,
    /// Users and items below this many interactions are dropped.
    pub min_count: usize,
    /// Generate data instead of reading `input`.
    pub synthetic: Option<SyntheticConfig>,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub ratios: [f64; 3],
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection { ratios: [0.8, 0.1, 0.1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparsifySection {
    pub keep_fraction: f64,
}

impl Default for SparsifySection {
    fn default() -> Self {
        SparsifySection { keep_fraction: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSection {
    pub beta: usize,
    pub gamma: usize,
}

impl Default for WalkSection {
    fn default() -> Self {
        WalkSection { beta: 10, gamma: 80 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairsSection {
    pub sigma: usize,
}

impl Default for PairsSection {
    fn default() -> Self {
        PairsSection { sigma: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfidenceSection {
    pub measure: Measure,
    pub shift_k: f64,
}

impl Default for ConfidenceSection {
    fn default() -> Self {
        ConfidenceSection { measure: Measure::Pmi, shift_k: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlsSection {
    pub factors: usize,
    pub lambda: f64,
    pub sweeps: usize,
    pub init_scale: f64,
}

impl Default for AlsSection {
    fn default() -> Self {
        let d = AlsConfig::default();
        AlsSection {
            factors: d.factors,
            lambda: d.lambda,
            sweeps: d.sweeps,
            init_scale: d.init_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecommendSection {
    pub k_items: usize,
    pub mask_train: bool,
}

impl Default for RecommendSection {
    fn default() -> Self {
        RecommendSection { k_items: 10, mask_train: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub cutoffs: Vec<usize>,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection { cutoffs: vec![5, 10] }
    }
}

/// Grid axes. Empty lists fall back to the single value of the matching
/// stage section (or the top-level seed) when the config is resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub methods: Vec<Method>,
    pub sigmas: Vec<usize>,
    pub keep_fractions: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            methods: vec![Method::Pmi, Method::Co, Method::Mf, Method::ItemPop],
            sigmas: Vec::new(),
            keep_fractions: Vec::new(),
            seeds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Base seed; every stage derives its own stream from it.
    pub seed: u64,
    /// Worker threads, 0 for one per core. Never affects outputs.
    #[serde(skip_serializing)]
    pub workers: usize,
    pub data: DataConfig,
    pub split: SplitSection,
    pub sparsify: SparsifySection,
    pub walk: WalkSection,
    pub pairs: PairsSection,
    pub confidence: ConfidenceSection,
    pub als: AlsSection,
    pub recommend: RecommendSection,
    pub evaluate: EvaluateSection,
    pub experiment: ExperimentSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            workers: 0,
            data: DataConfig::default(),
            split: SplitSection::default(),
            sparsify: SparsifySection::default(),
            walk: WalkSection::default(),
            pairs: PairsSection::default(),
            confidence: ConfidenceSection::default(),
            als: AlsSection::default(),
            recommend: RecommendSection::default(),
            evaluate: EvaluateSection::default(),
            experiment: ExperimentSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| {
            let key = e
                .message()
                .split('`')
                .nth(1)
                .unwrap_or("<config>")
                .to_string();
            Error::config(key, e.to_string().trim_end())
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fills empty grid axes from the stage sections and validates every key.
    pub fn resolve(mut self) -> Result<Self> {
        let e = &mut self.experiment;
        if e.sigmas.is_empty() {
            e.sigmas.push(self.pairs.sigma);
        }
        if e.keep_fractions.is_empty() {
            e.keep_fractions.push(self.sparsify.keep_fraction);
        }
        if e.seeds.is_empty() {
            e.seeds.push(self.seed);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.split.ratios;
        if r.iter().any(|x| x.is_nan() || *x <= 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("split.ratios", "must be three positive fractions summing to 1"));
        }
        check_keep("sparsify.keep_fraction", self.sparsify.keep_fraction)?;
        self.walk_config(0).validate()?;
        check_sigma("pairs.sigma", self.pairs.sigma)?;
        if !(self.confidence.shift_k >= 1.0 && self.confidence.shift_k.is_finite()) {
            return Err(Error::config("confidence.shift_k", "must be >= 1"));
        }
        self.als_config(0).validate()?;
        if self.recommend.k_items == 0 {
            return Err(Error::config("recommend.k_items", "must be >= 1"));
        }
        if self.evaluate.cutoffs.is_empty() || self.evaluate.cutoffs.contains(&0) {
            return Err(Error::config("evaluate.cutoffs", "must be a non-empty list of positive integers"));
        }
        if self.experiment.methods.is_empty() {
            return Err(Error::config("experiment.methods", "must not be empty"));
        }
        for &s in &self.experiment.sigmas {
            check_sigma("experiment.sigmas", s)?;
        }
        for &k in &self.experiment.keep_fractions {
            check_keep("experiment.keep_fractions", k)?;
        }
        if let Some(s) = &self.data.synthetic {
            s.validate()?;
        }
        Ok(())
    }

    pub fn split_seed(&self) -> u64 {
        derive_seed(self.seed, Stage::Split)
    }

    pub fn walk_config(&self, seed: u64) -> WalkConfig {
        WalkConfig {
            beta: self.walk.beta,
            gamma: self.walk.gamma,
            seed: derive_seed(seed, Stage::Walk),
        }
    }

    pub fn als_config(&self, seed: u64) -> AlsConfig {
        AlsConfig {
            factors: self.als.factors,
            lambda: self.als.lambda,
            sweeps: self.als.sweeps,
            seed: derive_seed(seed, Stage::Init),
            init_scale: self.als.init_scale,
        }
    }
}

fn check_sigma(key: &str, sigma: usize) -> Result<()> {
    if sigma == 0 || sigma.is_multiple_of(2) {
        return Err(Error::config(key, format!("window size must be odd and >= 1, got {sigma}")));
    }
    Ok(())
}

fn check_keep(key: &str, keep: f64) -> Result<()> {
    if !(keep > 0.0 && keep <= 1.0) {
        return Err(Error::config(key, format!("must be in (0, 1], got {keep}")));
    }
    Ok(())
}
