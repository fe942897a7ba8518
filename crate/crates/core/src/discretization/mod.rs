//! Turns continuous features into interval and cluster indices.
//!
//! Time-series variables are clustered with k-means and stored as centroids
//! in a canonical order (ascending terminal value, then midpoint, then mean),
//! so that neighboring indices describe behaviorally adjacent motions.
//! Scalar variables are cut at equal-frequency quantiles. Categorical
//! variables keep their distinct values.

pub mod kmeans;
pub mod quantile;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureSample, Series, STEPS};
use crate::variables::{self as vars, Cardinalities};

pub use kmeans::{kmeans, kmeans_with, KMeansConfig, KMeansFit};
pub use quantile::{bin_index, quantile_edges};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    TimeSeries,
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VariableKind,
    /// Requested interval count; ignored for categorical variables.
    pub cardinality: usize,
    /// Values a categorical variable always carries, observed or not.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub domain: Vec<i64>,
}

impl VariableSpec {
    pub fn new(name: &str, kind: VariableKind, cardinality: usize) -> Self {
        Self {
            name: name.to_string(),
            kind,
            cardinality,
            domain: Vec::new(),
        }
    }

    pub fn binary(name: &str) -> Self {
        Self {
            domain: vec![0, 1],
            ..Self::new(name, VariableKind::Categorical, 2)
        }
    }
}

/// Variable specs for the robot-following feature set.
pub fn default_specs(cards: &Cardinalities) -> Vec<VariableSpec> {
    use VariableKind::*;
    vec![
        VariableSpec::new(vars::INITIAL_ROBOT_ROTATION, Continuous, cards.initial_robot_rotation),
        VariableSpec::new(vars::TOTAL_ROBOT_ROTATION, Continuous, cards.total_robot_rotation),
        VariableSpec::new(vars::ROBOT_ROTATION_CHANGE, TimeSeries, cards.robot_rotation_change),
        VariableSpec::new(vars::ROBOT_POS_CHANGE, TimeSeries, cards.robot_pos_change),
        VariableSpec::binary(vars::COMPETENCE),
        VariableSpec::binary(vars::INTENTION),
        VariableSpec::new(vars::HUMAN_POS_CHANGE, TimeSeries, cards.human_pos_change),
    ]
}

/// A feature value looked up by variable name.
#[derive(Debug, Clone, Copy)]
pub enum FeatureValue<'a> {
    Scalar(f64),
    Series(&'a Series),
    Category(i64),
}

pub fn feature_value<'a>(f: &'a FeatureSample, name: &str) -> Option<FeatureValue<'a>> {
    Some(match name {
        vars::INITIAL_ROBOT_ROTATION => FeatureValue::Scalar(f.initial_robot_rotation),
        vars::TOTAL_ROBOT_ROTATION => FeatureValue::Scalar(f.total_robot_rotation),
        vars::ROBOT_ROTATION_CHANGE => FeatureValue::Series(&f.robot_rotation_change),
        vars::ROBOT_POS_CHANGE => FeatureValue::Series(&f.robot_pos_change),
        vars::HUMAN_POS_CHANGE => FeatureValue::Series(&f.human_pos_change),
        vars::COMPETENCE => FeatureValue::Category(f.competence as i64),
        vars::INTENTION => FeatureValue::Category(f.intention as i64),
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariableIntervals {
    TimeSeries {
        centroids: Vec<Series>,
        iterations: usize,
        inertia: f64,
    },
    Continuous {
        edges: Vec<f64>,
    },
    Categorical {
        categories: Vec<i64>,
    },
}

impl VariableIntervals {
    pub fn cardinality(&self) -> usize {
        match self {
            VariableIntervals::TimeSeries { centroids, .. } => centroids.len(),
            VariableIntervals::Continuous { edges } => edges.len() + 1,
            VariableIntervals::Categorical { categories } => categories.len(),
        }
    }
}

/// Fitted intervals for every variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationModel {
    pub format_version: u32,
    pub seed: u64,
    pub kmeans: KMeansConfig,
    pub specs: Vec<VariableSpec>,
    pub variables: BTreeMap<String, VariableIntervals>,
}

/// Per-variable indices of one sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteSample {
    pub participant_id: String,
    pub scenario_id: String,
    pub values: BTreeMap<String, usize>,
}

impl DiscreteSample {
    pub fn get(&self, name: &str) -> Option<usize> {
        self.values.get(name).copied()
    }

    /// Binary label of a target. Label categories are `{0, 1}`, so the
    /// category index is the label itself.
    pub fn label(&self, target: vars::Target) -> Option<u8> {
        self.get(target.name()).map(|v| v as u8)
    }
}

/// Canonical ordering permutation: `order[new] = old`.
pub fn canonical_order(centroids: &[Series]) -> Vec<usize> {
    let mean = |c: &Series| c.iter().sum::<f64>() / STEPS as f64;
    let mut order: Vec<usize> = (0..centroids.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&centroids[a], &centroids[b]);
        ca[STEPS - 1]
            .total_cmp(&cb[STEPS - 1])
            .then(ca[STEPS / 2].total_cmp(&cb[STEPS / 2]))
            .then(mean(ca).total_cmp(&mean(cb)))
            .then(a.cmp(&b))
    });
    order
}

fn check_specs(specs: &[VariableSpec]) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for s in specs {
        if !seen.insert(s.name.as_str()) {
            return Err(Error::schema(format!("duplicate variable spec `{}`", s.name)));
        }
        if s.kind != VariableKind::Categorical && s.cardinality < 2 {
            return Err(Error::schema(format!(
                "variable `{}` needs cardinality >= 2, got {}",
                s.name, s.cardinality
            )));
        }
    }
    Ok(())
}

pub fn fit_discretization(dataset: &[FeatureSample], specs: &[VariableSpec], seed: u64) -> Result<DiscretizationModel> {
    fit_discretization_with(dataset, specs, seed, &KMeansConfig::default())
}

pub fn fit_discretization_with(
    dataset: &[FeatureSample],
    specs: &[VariableSpec],
    seed: u64,
    kmeans_config: &KMeansConfig,
) -> Result<DiscretizationModel> {
    if dataset.is_empty() {
        return Err(Error::domain("cannot fit discretization on an empty dataset"));
    }
    check_specs(specs)?;

    let mut variables = BTreeMap::new();
    for spec in specs {
        let fitted = fit_variable(dataset, spec, seed, kmeans_config).map_err(|e| e.in_variable(&spec.name))?;
        variables.insert(spec.name.clone(), fitted);
    }
    Ok(DiscretizationModel {
        format_version: FORMAT_VERSION,
        seed,
        kmeans: kmeans_config.clone(),
        specs: specs.to_vec(),
        variables,
    })
}

fn lookup_feature<'a>(f: &'a FeatureSample, name: &str) -> Result<FeatureValue<'a>> {
    feature_value(f, name).ok_or_else(|| Error::schema(format!("unknown feature `{name}`")))
}

fn fit_variable(dataset: &[FeatureSample], spec: &VariableSpec, seed: u64, config: &KMeansConfig) -> Result<VariableIntervals> {
    let lookup = |f| lookup_feature(f, &spec.name);
    match spec.kind {
        VariableKind::TimeSeries => {
            let series = dataset
                .iter()
                .map(|f| match lookup(f)? {
                    FeatureValue::Series(s) => Ok(*s),
                    _ => Err(Error::schema("variable is not a time series")),
                })
                .collect::<Result<Vec<_>>>()?;
            let fit = kmeans_with(&series, spec.cardinality, seed, config)?;
            let order = canonical_order(&fit.centroids);
            Ok(VariableIntervals::TimeSeries {
                centroids: order.iter().map(|&i| fit.centroids[i]).collect(),
                iterations: fit.iterations,
                inertia: fit.inertia,
            })
        }
        VariableKind::Continuous => {
            let values = dataset
                .iter()
                .map(|f| match lookup(f)? {
                    FeatureValue::Scalar(v) => Ok(v),
                    _ => Err(Error::schema("variable is not a scalar")),
                })
                .collect::<Result<Vec<_>>>()?;
            let mut edges = quantile_edges(&values, spec.cardinality)?;
            let before = edges.len();
            edges.dedup();
            if edges.len() < before {
                log::debug!(
                    "{}: {} tied quantile edges merged, {} bins remain",
                    spec.name,
                    before - edges.len(),
                    edges.len() + 1
                );
            }
            Ok(VariableIntervals::Continuous { edges })
        }
        VariableKind::Categorical => {
            let mut categories = spec.domain.clone();
            for f in dataset {
                match lookup(f)? {
                    FeatureValue::Category(c) => categories.push(c),
                    _ => return Err(Error::schema("variable is not categorical")),
                }
            }
            categories.sort_unstable();
            categories.dedup();
            Ok(VariableIntervals::Categorical { categories })
        }
    }
}

impl DiscretizationModel {
    pub fn cardinality(&self, name: &str) -> Option<usize> {
        self.variables.get(name).map(VariableIntervals::cardinality)
    }

    pub fn cardinalities(&self) -> BTreeMap<String, usize> {
        self.variables.iter().map(|(k, v)| (k.clone(), v.cardinality())).collect()
    }

    pub fn centroids(&self, name: &str) -> Option<&[Series]> {
        match self.variables.get(name)? {
            VariableIntervals::TimeSeries { centroids, .. } => Some(centroids),
            _ => None,
        }
    }

    pub fn assign(&self, f: &FeatureSample) -> Result<DiscreteSample> {
        let mut values = BTreeMap::new();
        for spec in &self.specs {
            let intervals = self
                .variables
                .get(&spec.name)
                .ok_or_else(|| Error::schema(format!("model lacks variable `{}`", spec.name)))?;
            let value = lookup_feature(f, &spec.name)?;
            let index = match (intervals, value) {
                (VariableIntervals::TimeSeries { centroids, .. }, FeatureValue::Series(s)) => {
                    kmeans::nearest(s, centroids).0
                }
                (VariableIntervals::Continuous { edges }, FeatureValue::Scalar(v)) => bin_index(edges, v),
                (VariableIntervals::Categorical { categories }, FeatureValue::Category(c)) => {
                    categories.binary_search(&c).map_err(|_| {
                        Error::domain(format!("unseen category {c} for `{}`", spec.name))
                    })?
                }
                _ => return Err(Error::schema(format!("kind mismatch for `{}`", spec.name))),
            };
            values.insert(spec.name.clone(), index);
        }
        Ok(DiscreteSample {
            participant_id: f.participant_id.clone(),
            scenario_id: f.scenario_id.clone(),
            values,
        })
    }

    pub fn assign_all(&self, features: &[FeatureSample]) -> Result<Vec<DiscreteSample>> {
        features.iter().map(|f| self.assign(f)).collect()
    }

    /// Writes cluster means of a time-series variable as CSV rows
    /// `cluster,t0,...,t8`.
    pub fn write_cluster_csv(&self, name: &str, writer: impl std::io::Write) -> Result<()> {
        let centroids = self
            .centroids(name)
            .ok_or_else(|| Error::domain(format!("`{name}` is not a clustered variable")))?;
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["cluster".to_string()];
        header.extend((0..STEPS).map(|t| format!("t{t}")));
        w.write_record(&header)?;
        for (i, c) in centroids.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(c.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn check_version(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: self.format_version,
                expected: FORMAT_VERSION,
            });
        }
        Ok(())
    }
}
