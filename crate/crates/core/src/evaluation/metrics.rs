use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How precision, recall and F1 are aggregated over the two classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum F1Mode {
    /// Class 1 is the positive class.
    #[default]
    Positive,
    /// Unweighted mean of the per-class scores.
    MacroClass,
}

impl fmt::Display for F1Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            F1Mode::Positive => "positive",
            F1Mode::MacroClass => "macro-class",
        })
    }
}

impl FromStr for F1Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(F1Mode::Positive),
            "macro-class" => Ok(F1Mode::MacroClass),
            other => Err(format!("unknown F1 mode `{other}` (expected positive or macro-class)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_labels(truth: &[u8], predicted: &[u8]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::domain("label vectors differ in length"));
        }
        if truth.is_empty() {
            return Err(Error::domain("no labels to score"));
        }
        let mut c = Confusion::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (1, 0) => c.fn_ += 1,
                (0, 0) => c.tn += 1,
                _ => return Err(Error::domain(format!("labels must be 0 or 1, got ({t}, {p})"))),
            }
        }
        Ok(c)
    }

    /// The same table with the classes swapped.
    pub fn flipped(self) -> Self {
        Confusion {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn positive_scores(c: Confusion) -> (f64, f64, f64) {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

impl BinaryMetrics {
    pub fn from_confusion(c: Confusion, mode: F1Mode) -> Self {
        let accuracy = ratio(c.tp + c.tn, c.total());
        let (precision, recall, f1) = match mode {
            F1Mode::Positive => positive_scores(c),
            F1Mode::MacroClass => {
                let (p1, r1, f1) = positive_scores(c);
                let (p0, r0, f0) = positive_scores(c.flipped());
                ((p1 + p0) / 2.0, (r1 + r0) / 2.0, (f1 + f0) / 2.0)
            }
        };
        Self {
            accuracy,
            precision,
            recall,
            f1,
        }
    }
}

pub fn binary_metrics(truth: &[u8], predicted: &[u8], mode: F1Mode) -> Result<BinaryMetrics> {
    Ok(BinaryMetrics::from_confusion(Confusion::from_labels(truth, predicted)?, mode))
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("cannot summarize an empty list"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Ok(Self { mean, std: var.sqrt() })
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
}

impl MetricSummary {
    pub fn of(per_fold: &[BinaryMetrics]) -> Result<Self> {
        let pick = |f: fn(&BinaryMetrics) -> f64| MeanStd::of(&per_fold.iter().map(f).collect::<Vec<_>>());
        Ok(Self {
            accuracy: pick(|m| m.accuracy)?,
            precision: pick(|m| m.precision)?,
            recall: pick(|m| m.recall)?,
            f1: pick(|m| m.f1)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_computed_table() {
        // TP=2, FP=1, FN=1, TN=0.
        let truth = [1, 1, 0, 1];
        let pred = [1, 1, 1, 0];
        let m = binary_metrics(&truth, &pred, F1Mode::Positive).unwrap();
        assert_abs_diff_eq!(m.precision, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.recall, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.f1, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.accuracy, 0.5, epsilon = 1e-12);
        let macro_ = binary_metrics(&truth, &pred, F1Mode::MacroClass).unwrap();
        assert_abs_diff_eq!(macro_.f1, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn perfect_and_degenerate() {
        let y = [0, 1, 1, 0, 1];
        let m = binary_metrics(&y, &y, F1Mode::Positive).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
        let none = binary_metrics(&[0, 0], &[0, 0], F1Mode::Positive).unwrap();
        assert_eq!((none.precision, none.recall, none.f1), (0.0, 0.0, 0.0));
        assert!(binary_metrics(&[], &[], F1Mode::Positive).is_err());
        assert!(binary_metrics(&[1], &[1, 0], F1Mode::Positive).is_err());
        assert!(binary_metrics(&[2], &[1], F1Mode::Positive).is_err());
    }

    #[test]
    fn matches_counting_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let truth: Vec<u8> = (0..1000).map(|_| rng.random_range(0..2)).collect();
        let pred: Vec<u8> = (0..1000).map(|_| rng.random_range(0..2)).collect();
        let m = binary_metrics(&truth, &pred, F1Mode::Positive).unwrap();
        let hits = |t: u8, p: u8| truth.iter().zip(&pred).filter(|(a, b)| **a == t && **b == p).count() as f64;
        let precision = hits(1, 1) / (hits(1, 1) + hits(0, 1));
        let recall = hits(1, 1) / (hits(1, 1) + hits(1, 0));
        assert_abs_diff_eq!(m.precision, precision, epsilon = 1e-12);
        assert_abs_diff_eq!(m.recall, recall, epsilon = 1e-12);
        assert_abs_diff_eq!(m.f1, 2.0 * precision * recall / (precision + recall), epsilon = 1e-12);
        assert_abs_diff_eq!(m.accuracy, (hits(1, 1) + hits(0, 0)) / 1000.0, epsilon = 1e-12);
    }

    #[test]
    fn population_std() {
        let s = MeanStd::of(&[1.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.std), (2.0, 1.0));
        assert!(MeanStd::of(&[]).is_err());
        assert_eq!("macro-class".parse::<F1Mode>().unwrap(), F1Mode::MacroClass);
        assert!("micro".parse::<F1Mode>().is_err());
    }
}
