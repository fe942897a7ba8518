use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::metrics::{binary_metrics, BinaryMetrics, F1Mode, MetricSummary};
use crate::cbn::CbnModel;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::features::FeatureSample;
use crate::pipeline::{fit_model, predict_features, FitConfig};

/// Scores of one held-out participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub participant: String,
    pub n_test: usize,
    pub competence: BinaryMetrics,
    pub intention: BinaryMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub f1_mode: F1Mode,
    pub folds: Vec<FoldResult>,
    pub competence: MetricSummary,
    pub intention: MetricSummary,
}

impl MetricsReport {
    pub fn from_folds(folds: Vec<FoldResult>, f1_mode: F1Mode) -> Result<Self> {
        let comp: Vec<_> = folds.iter().map(|f| f.competence).collect();
        let int: Vec<_> = folds.iter().map(|f| f.intention).collect();
        Ok(Self {
            f1_mode,
            competence: MetricSummary::of(&comp)?,
            intention: MetricSummary::of(&int)?,
            folds,
        })
    }

    /// Mean of the two targets' mean F1.
    pub fn mean_f1(&self) -> f64 {
        (self.competence.f1.mean + self.intention.f1.mean) / 2.0
    }

    /// Plain-text table: one row per target, mean ± std per metric.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<11} {:>15} {:>15} {:>15} {:>15}\n",
            "target", "accuracy", "precision", "recall", "f1"
        );
        for (name, s) in [("competence", &self.competence), ("intention", &self.intention)] {
            out.push_str(&format!(
                "{:<11} {:>15} {:>15} {:>15} {:>15}\n",
                name,
                s.accuracy.to_string(),
                s.precision.to_string(),
                s.recall.to_string(),
                s.f1.to_string()
            ));
        }
        out
    }
}

/// Distinct participant ids in sorted order.
pub fn participants(dataset: &[FeatureSample]) -> Vec<String> {
    dataset
        .iter()
        .map(|f| f.participant_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

pub fn split_out(dataset: &[FeatureSample], participant: &str) -> (Vec<FeatureSample>, Vec<FeatureSample>) {
    dataset.iter().cloned().partition(|f| f.participant_id != participant)
}

/// Model trained on everyone except `participant`.
pub fn fold_model(dataset: &[FeatureSample], participant: &str, config: &FitConfig) -> Result<CbnModel> {
    let (train, _) = split_out(dataset, participant);
    fit_model(&train, config)
}

pub fn score(model: &CbnModel, test: &[FeatureSample], participant: &str, mode: F1Mode) -> Result<FoldResult> {
    let mut pred_c = Vec::with_capacity(test.len());
    let mut pred_i = Vec::with_capacity(test.len());
    for f in test {
        let p = predict_features(model, f)?;
        pred_c.push(p.competence);
        pred_i.push(p.intention);
    }
    let truth_c: Vec<u8> = test.iter().map(|f| f.competence).collect();
    let truth_i: Vec<u8> = test.iter().map(|f| f.intention).collect();
    Ok(FoldResult {
        participant: participant.to_string(),
        n_test: test.len(),
        competence: binary_metrics(&truth_c, &pred_c, mode)?,
        intention: binary_metrics(&truth_i, &pred_i, mode)?,
    })
}

pub fn evaluate_fold(dataset: &[FeatureSample], participant: &str, config: &FitConfig, mode: F1Mode) -> Result<FoldResult> {
    let (train, test) = split_out(dataset, participant);
    let model = fit_model(&train, config)?;
    score(&model, &test, participant, mode)
}

/// Leave-one-participant-out cross-validation. Discretization and CPTs are
/// refit inside every fold from the training participants only.
pub fn loocv(dataset: &[FeatureSample], config: &FitConfig, mode: F1Mode, exec: Execution) -> Result<MetricsReport> {
    let people = participants(dataset);
    if people.len() < 2 {
        return Err(Error::domain(format!(
            "cross-validation needs at least 2 participants, found {}",
            people.len()
        )));
    }
    let folds = exec::map_indexed(exec, &people, |_, p| evaluate_fold(dataset, p, config, mode))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    MetricsReport::from_folds(folds, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{compute_all, TotalRotationMode};
    use crate::synthdata::{generate_raw, GeneratorConfig};

    fn dataset(participants: usize) -> Vec<FeatureSample> {
        let cfg = GeneratorConfig {
            participants,
            samples_per_participant: 30,
            ..Default::default()
        };
        compute_all(&generate_raw(&cfg, Execution::Sequential).unwrap(), TotalRotationMode::AsWritten).unwrap()
    }

    #[test]
    fn one_fold_per_participant_in_order() {
        let d = dataset(4);
        let r = loocv(&d, &FitConfig::default(), F1Mode::Positive, Execution::Parallel).unwrap();
        let ids: Vec<_> = r.folds.iter().map(|f| f.participant.as_str()).collect();
        assert_eq!(ids, ["P00", "P01", "P02", "P03"]);
        assert!(r.folds.iter().all(|f| f.n_test == 30));
        let seq = loocv(&d, &FitConfig::default(), F1Mode::Positive, Execution::Sequential).unwrap();
        assert_eq!(r, seq);
    }

    #[test]
    fn held_out_data_never_reaches_the_fold_model() {
        let d = dataset(4);
        let cfg = FitConfig::default();
        let before = fold_model(&d, "P02", &cfg).unwrap();
        let mut poisoned = d.clone();
        for f in poisoned.iter_mut().filter(|f| f.participant_id == "P02") {
            f.robot_pos_change = [100.0; 9];
            f.initial_robot_rotation = 3.0;
            f.competence = 1 - f.competence;
        }
        assert_eq!(fold_model(&poisoned, "P02", &cfg).unwrap(), before);
        assert_ne!(fold_model(&poisoned, "P01", &cfg).unwrap(), fold_model(&d, "P01", &cfg).unwrap());
    }

    #[test]
    fn table_lists_both_targets() {
        let r = loocv(&dataset(3), &FitConfig::default(), F1Mode::Positive, Execution::Sequential).unwrap();
        let t = r.table();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("competence") && lines[2].starts_with("intention"));
        assert!(lines[1].contains(&r.competence.f1.to_string()));
    }

    #[test]
    fn single_participant_is_rejected() {
        let d = dataset(1);
        assert!(loocv(&d, &FitConfig::default(), F1Mode::Positive, Execution::Sequential).is_err());
    }
}
