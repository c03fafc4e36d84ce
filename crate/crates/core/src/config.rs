//! Experiment configuration: a flat `key = value` file (TOML syntax) where
//! every key is optional and falls back to the defaults below.
//!
//! ```toml
//! language = "en"
//! n = 2
//! R = 8
//! method = "cbow"
//! k_grid = [5, 10, 20]
//! h_grid = [0.0]
//! alpha = 0.05
//! seed = 7
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embeddings::{Method, TrainConfig};
use crate::error::{Error, Result};
use crate::wishart::WishartParams;

/// Noise-penalty exponent per language tag.
pub const DEFAULT_T: [(&str, f64); 4] = [("ru", 2.0), ("en", 4.0), ("de", 2.0), ("vi", 2.0)];

pub fn default_t(language: &str) -> Option<f64> {
    DEFAULT_T
        .iter()
        .find(|(lang, _)| *lang == language)
        .map(|&(_, t)| t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub language: String,
    pub n: usize,
    #[serde(rename = "R")]
    pub dim: usize,
    pub method: String,
    pub min_count: u64,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_rate: f64,
    pub subsample_threshold: f64,
    pub power_iters: usize,
    pub k: usize,
    pub h: f64,
    pub k_grid: Vec<usize>,
    pub h_grid: Vec<f64>,
    /// Overrides the per-language default when set.
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub alpha: f64,
    pub subset_sizes: Vec<usize>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        ExperimentConfig {
            language: "en".into(),
            n: 2,
            dim: 8,
            method: Method::Cbow.tag().into(),
            min_count: 1,
            window: train.window,
            negatives: train.negatives,
            epochs: train.epochs,
            initial_rate: train.initial_rate,
            subsample_threshold: train.subsample_threshold,
            power_iters: 4,
            k: 10,
            h: 0.0,
            k_grid: vec![5, 10, 15, 20, 30],
            h_grid: vec![0.0],
            t: None,
            alpha: 0.05,
            subset_sizes: vec![1000, 2000, 4000, 8000],
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Format(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dim == 0 {
            return Err(Error::invalid("n and R must be positive"));
        }
        if self.min_count == 0 {
            return Err(Error::invalid("min_count must be positive"));
        }
        self.method()?;
        self.train_config().validate()?;
        WishartParams::new(self.k, self.h)?;
        if self.k_grid.is_empty() || self.h_grid.is_empty() {
            return Err(Error::invalid("k_grid and h_grid must be non-empty"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha must lie in (0, 1)"));
        }
        self.t()?;
        Ok(())
    }

    pub fn method(&self) -> Result<Method> {
        self.method.parse()
    }

    /// Explicit `T`, else the language default.
    pub fn t(&self) -> Result<f64> {
        let t = match self.t {
            Some(t) => t,
            None => default_t(&self.language).ok_or_else(|| {
                Error::invalid(format!(
                    "no default T for language {:?}; set T explicitly",
                    self.language
                ))
            })?,
        };
        if !(t >= 0.0) {
            return Err(Error::invalid("T must be ≥ 0"));
        }
        Ok(t)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            initial_rate: self.initial_rate,
            seed: self.seed,
            subsample_threshold: self.subsample_threshold,
        }
    }

    pub fn wishart_params(&self) -> Result<WishartParams> {
        WishartParams::new(self.k, self.h)
    }
}
