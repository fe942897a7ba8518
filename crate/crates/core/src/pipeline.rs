//! End-to-end fitting: features in, a self-contained model bundle out.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cbn::{fit_parameters, robot_following_dag, CbnModel, Prediction, DEFAULT_ALPHA};
use crate::counterfactual::SearchConfig;
use crate::discretization::{default_specs, fit_discretization_with, DiscreteSample, DiscretizationModel, KMeansConfig};
use crate::error::{Error, Result};
use crate::features::{FeatureSample, TotalRotationMode};
use crate::variables::Cardinalities;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub cardinalities: Cardinalities,
    pub alpha: f64,
    pub seed: u64,
    pub kmeans: KMeansConfig,
    pub total_rotation_mode: TotalRotationMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            cardinalities: Cardinalities::default(),
            alpha: DEFAULT_ALPHA,
            seed: 0,
            kmeans: KMeansConfig::default(),
            total_rotation_mode: TotalRotationMode::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.cardinalities.validate().map_err(Error::Domain)?;
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::domain(format!("alpha must be finite and non-negative, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Discretizes `train`, then fits CPTs on the graph sized to the intervals
/// actually produced (tied quantile edges can lower a count).
pub fn fit_model(train: &[FeatureSample], config: &FitConfig) -> Result<CbnModel> {
    config.validate()?;
    let specs = default_specs(&config.cardinalities);
    let disc = fit_discretization_with(train, &specs, config.seed, &config.kmeans)?;
    let data = disc.assign_all(train)?;
    let dag = robot_following_dag(&config.cardinalities).with_cardinalities(&disc.cardinalities());
    Ok(fit_parameters(&dag, &data, config.alpha)?.with_discretization(disc))
}

pub fn discretization(model: &CbnModel) -> Result<&DiscretizationModel> {
    model
        .discretization
        .as_ref()
        .ok_or_else(|| Error::schema("model carries no discretization"))
}

pub fn discretize(model: &CbnModel, f: &FeatureSample) -> Result<DiscreteSample> {
    discretization(model)?.assign(f)
}

pub fn predict_features(model: &CbnModel, f: &FeatureSample) -> Result<Prediction> {
    model.predict(&discretize(model, f)?)
}

/// Fit configuration, search defaults and the fitted network in one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub config: FitConfig,
    pub search: SearchConfig,
    pub model: CbnModel,
}

impl ModelBundle {
    pub fn fit(train: &[FeatureSample], config: FitConfig, search: SearchConfig) -> Result<Self> {
        search.validate()?;
        let model = fit_model(train, &config)?;
        Ok(Self {
            format_version: BUNDLE_FORMAT_VERSION,
            config,
            search,
            model,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ModelBundle = serde_json::from_str(text)?;
        if raw.format_version != BUNDLE_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: raw.format_version,
                expected: BUNDLE_FORMAT_VERSION,
            });
        }
        let model = raw.model.finish()?;
        discretization(&model)?.check_version()?;
        Ok(Self { model, ..raw })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
