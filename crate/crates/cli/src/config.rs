//! Pipeline settings: defaults, overridden by a TOML file, overridden by flags.

use std::path::{Path, PathBuf};

use navcbn_core::counterfactual::{SearchConfig, DEFAULT_EPSILON, DEFAULT_MIN_COUNT};
use navcbn_core::evaluation::F1Mode;
use navcbn_core::features::TotalRotationMode;
use navcbn_core::pipeline::FitConfig;
use navcbn_core::variables::Cardinalities;
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// `initial,total,pos,rot[,human]`.
    pub cardinalities: String,
    /// `;`-separated settings for `tune`; the built-in grid when absent.
    pub grid: Option<String>,
    pub alpha: f64,
    pub epsilon: f64,
    pub min_count: u64,
    pub seed: u64,
    pub f1_mode: F1Mode,
    pub total_rotation_mode: TotalRotationMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            model: None,
            output_dir: PathBuf::from("."),
            cardinalities: Cardinalities::default().to_string(),
            grid: None,
            alpha: navcbn_core::cbn::DEFAULT_ALPHA,
            epsilon: DEFAULT_EPSILON,
            min_count: DEFAULT_MIN_COUNT,
            seed: 0,
            f1_mode: F1Mode::default(),
            total_rotation_mode: TotalRotationMode::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| UsageError(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        self.parsed_cardinalities()?;
        self.parsed_grid()?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(UsageError(format!("alpha must be finite and non-negative, got {}", self.alpha)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(UsageError(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        Ok(())
    }

    pub fn parsed_cardinalities(&self) -> Result<Cardinalities, UsageError> {
        self.cardinalities
            .parse()
            .map_err(|e| UsageError(format!("cardinalities: {e}")))
    }

    pub fn parsed_grid(&self) -> Result<Vec<Cardinalities>, UsageError> {
        match &self.grid {
            Some(g) => Cardinalities::parse_grid(g).map_err(|e| UsageError(format!("grid: {e}"))),
            None => Ok(Cardinalities::default_grid()),
        }
    }

    pub fn fit_config(&self) -> Result<FitConfig, UsageError> {
        Ok(FitConfig {
            cardinalities: self.parsed_cardinalities()?,
            alpha: self.alpha,
            seed: self.seed,
            total_rotation_mode: self.total_rotation_mode,
            ..FitConfig::default()
        })
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            epsilon: self.epsilon,
            min_count: self.min_count,
            ..SearchConfig::default()
        }
    }

    /// `explicit`, else `fallback`, else `output_dir/default_name`.
    pub fn output_path(&self, explicit: Option<&PathBuf>, fallback: Option<&PathBuf>, default_name: &str) -> PathBuf {
        explicit
            .or(fallback)
            .cloned()
            .unwrap_or_else(|| self.output_dir.join(default_name))
    }
}
