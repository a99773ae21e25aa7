//! Hyperparameters and paths, read from a `key = value` file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enhance::{EnhanceError, QueryDependencyDag};
use crate::tv::SimilarityParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Parse(String),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Embedding dimension D (must match the model file when one is given).
    pub dim: usize,
    pub max_vectors: usize,
    pub w_max: f64,
    pub w_avg: f64,
    /// Bound on lineage columns per tuple; 0 disables dropping.
    pub b: usize,
    /// Defaults to 1.0 without a bound and 0.5 with one.
    pub containment_threshold: Option<f64>,
    /// S
    pub dag_max_nodes: usize,
    /// H
    pub dag_max_height: usize,
    pub w_outsider: f64,
    pub boost: f64,
    pub seed: u64,
    pub model_path: Option<PathBuf>,
    pub store_path: PathBuf,
    pub key_every_columns: usize,
    pub key_every_tuples: usize,
    /// Name lineage columns by attribute only, merging same-named columns
    /// of different tables.
    pub prefix_stripping: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            dim: 64,
            max_vectors: 4,
            w_max: 1.0,
            w_avg: 1.0,
            b: 0,
            containment_threshold: None,
            dag_max_nodes: 1024,
            dag_max_height: 10,
            w_outsider: 0.25,
            boost: 2.0,
            seed: 1,
            model_path: None,
            store_path: PathBuf::from("lineage.jsonl"),
            key_every_columns: 4,
            key_every_tuples: 8,
            prefix_stripping: false,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut config = Self::from_toml(&text)?;
        // relative paths in the file are relative to the file
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(m) = &config.model_path {
            config.model_path = Some(base.join(m));
        }
        config.store_path = base.join(&config.store_path);
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        if self.max_vectors == 0 {
            return bad("max_vectors must be positive".into());
        }
        if self.key_every_columns == 0 || self.key_every_tuples == 0 {
            return bad("key injection intervals must be positive".into());
        }
        if !(self.boost.is_finite() && self.boost >= 1.0) {
            return bad(format!("boost must be at least 1, got {}", self.boost));
        }
        if let Some(t) = self.containment_threshold {
            if !(0.0..=1.0).contains(&t) {
                return bad(format!("containment_threshold must be in [0, 1], got {t}"));
            }
        }
        SimilarityParams::new(self.w_max, self.w_avg)
            .map_err(|_| ConfigError::Invalid("w_max and w_avg must be nonnegative with a positive sum".into()))?;
        self.dag().map_err(|e: EnhanceError| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn similarity(&self) -> SimilarityParams {
        SimilarityParams::new(self.w_max, self.w_avg).expect("validated")
    }

    pub fn bound(&self) -> Option<usize> {
        (self.b > 0).then_some(self.b)
    }

    pub fn containment_threshold(&self) -> f64 {
        self.containment_threshold.unwrap_or(if self.bound().is_some() { 0.5 } else { 1.0 })
    }

    /// An empty dependency DAG with the configured limits.
    pub fn dag(&self) -> Result<QueryDependencyDag, EnhanceError> {
        QueryDependencyDag::new(self.dag_max_nodes, self.dag_max_height, self.w_outsider)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = Config::from_toml("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.max_vectors, 4);
        assert_eq!(c.containment_threshold(), 1.0);
        assert_eq!(c.bound(), None);
    }

    #[test]
    fn bound_changes_threshold_default() {
        let c = Config::from_toml("b = 3").unwrap();
        assert_eq!(c.bound(), Some(3));
        assert_eq!(c.containment_threshold(), 0.5);
        let c = Config::from_toml("b = 3\ncontainment_threshold = 0.8").unwrap();
        assert_eq!(c.containment_threshold(), 0.8);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Config::from_toml("max_vectors = 0").is_err());
        assert!(Config::from_toml("w_outsider = 0.6").is_err());
        assert!(Config::from_toml("w_max = -1.0").is_err());
        assert!(Config::from_toml("bogus = 1").is_err());
        assert!(Config::from_toml("containment_threshold = 2.0").is_err());
    }

    #[test]
    fn paths_resolve_against_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lineage.toml");
        std::fs::write(&path, "store_path = \"db.jsonl\"\nseed = 9\n").unwrap();
        let c = Config::load(&path).unwrap();
        assert_eq!(c.store_path, dir.path().join("db.jsonl"));
        assert_eq!(c.seed, 9);
    }
}
