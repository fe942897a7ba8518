use std::cmp::Ordering;

use log::warn;
use serde::{Deserialize, Serialize};

use super::loocv::{loocv, participants, score, split_out, FoldResult, MetricsReport};
use super::metrics::F1Mode;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::features::FeatureSample;
use crate::pipeline::{fit_model, FitConfig};
use crate::variables::Cardinalities;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    pub grid: Vec<Cardinalities>,
    /// Everything but the interval counts, which come from the grid.
    pub base: FitConfig,
    pub f1_mode: F1Mode,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            grid: Cardinalities::default_grid(),
            base: FitConfig::default(),
            f1_mode: F1Mode::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub cardinalities: Cardinalities,
    /// Inner-loop mean F1; `None` when the candidate could not be fit.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneFold {
    pub participant: String,
    pub candidates: Vec<CandidateScore>,
    pub selected: Cardinalities,
    pub test: FoldResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub folds: Vec<TuneFold>,
    /// Setting chosen most often across outer folds.
    pub modal: Cardinalities,
    pub modal_votes: usize,
    /// Outer-loop scores of the per-fold selections.
    pub report: MetricsReport,
}

impl TuneConfig {
    fn with(&self, cards: Cardinalities) -> FitConfig {
        FitConfig {
            cardinalities: cards,
            ..self.base.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::domain("tuning grid is empty"));
        }
        for c in &self.grid {
            c.validate().map_err(Error::Domain)?;
        }
        self.base.validate()
    }
}

/// Inner cross-validated score of every grid point on `train`.
pub fn score_grid(train: &[FeatureSample], config: &TuneConfig, exec: Execution) -> Vec<CandidateScore> {
    exec::map_indexed(exec, &config.grid, |_, cards| {
        let score = match loocv(train, &config.with(*cards), config.f1_mode, exec) {
            Ok(r) => Some(r.mean_f1()),
            Err(e) => {
                warn!("skipping interval counts {cards}: {e}");
                None
            }
        };
        CandidateScore {
            cardinalities: *cards,
            score,
        }
    })
}

/// Highest score wins; ties go to the smaller total interval count, then
/// to the earlier grid position.
pub fn select_best(candidates: &[CandidateScore]) -> Option<Cardinalities> {
    candidates
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.score.map(|s| (i, s, c.cardinalities)))
        .min_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then(a.2.total().cmp(&b.2.total()))
                .then(a.0.cmp(&b.0))
        })
        .map(|(_, _, c)| c)
}

/// Most frequent selection, with the same tie-breaking as [`select_best`].
pub fn modal_selection(grid: &[Cardinalities], selected: &[Cardinalities]) -> Option<(Cardinalities, usize)> {
    grid.iter()
        .enumerate()
        .map(|(i, c)| (i, *c, selected.iter().filter(|s| *s == c).count()))
        .filter(|(_, _, n)| *n > 0)
        .min_by(|a, b| b.2.cmp(&a.2).then(a.1.total().cmp(&b.1.total())).then(a.0.cmp(&b.0)))
        .map(|(_, c, n)| (c, n))
}

/// Nested leave-one-participant-out tuning: each outer fold picks interval
/// counts by an inner cross-validation over its training participants, then
/// is scored on the held-out participant with that choice.
pub fn nested_tune(dataset: &[FeatureSample], config: &TuneConfig, exec: Execution) -> Result<TuneResult> {
    config.validate()?;
    let people = participants(dataset);
    if people.len() < 3 {
        return Err(Error::domain(format!(
            "nested tuning needs at least 3 participants, found {}",
            people.len()
        )));
    }
    let folds = exec::map_indexed(exec, &people, |_, p| -> Result<TuneFold> {
        let (train, test) = split_out(dataset, p);
        let candidates = score_grid(&train, config, exec);
        let selected = select_best(&candidates)
            .ok_or_else(|| Error::domain(format!("no grid point could be fit without participant {p}")))?;
        let model = fit_model(&train, &config.with(selected))?;
        Ok(TuneFold {
            participant: p.clone(),
            test: score(&model, &test, p, config.f1_mode)?,
            candidates,
            selected,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let choices: Vec<_> = folds.iter().map(|f| f.selected).collect();
    let (modal, modal_votes) = modal_selection(&config.grid, &choices).expect("at least one fold");
    let report = MetricsReport::from_folds(folds.iter().map(|f| f.test.clone()).collect(), config.f1_mode)?;
    Ok(TuneResult {
        folds,
        modal,
        modal_votes,
        report,
    })
}
