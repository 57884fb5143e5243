//! Confusion matrices and precision/recall/F1 summaries.
//!
//! Zero denominators score 0: a class never predicted has precision 0, a
//! class with no support has recall 0 and F1 0, and still counts toward the
//! macro mean.

use serde::{Deserialize, Serialize};

use crate::dataset::LabelMap;
use crate::error::{Error, Result};

/// Rows are truth, columns are prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    class_names: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(class_names: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = class_names.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::DimMismatch(format!("confusion counts are not {k}x{k}")));
        }
        Ok(ConfusionMatrix {
            class_names,
            counts,
        })
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth][pred]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.class_count()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    /// Submatrix over the given classes, in the given order.
    pub fn restrict(&self, classes: &[usize]) -> ConfusionMatrix {
        ConfusionMatrix {
            class_names: classes.iter().map(|&c| self.class_names[c].clone()).collect(),
            counts: classes
                .iter()
                .map(|&r| classes.iter().map(|&c| self.counts[r][c]).collect())
                .collect(),
        }
    }
}

/// Tallies `(truth, pred)` pairs into a `K × K` matrix with numeric names.
pub fn confusion(truth: &[usize], pred: &[usize], k: usize) -> Result<ConfusionMatrix> {
    let names = (0..k).map(|i| i.to_string()).collect();
    confusion_with_names(truth, pred, names)
}

pub fn confusion_with_names(
    truth: &[usize],
    pred: &[usize],
    class_names: Vec<String>,
) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return Err(Error::DimMismatch(format!(
            "{} truth labels vs {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    let k = class_names.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (&t, &p) in truth.iter().zip(pred) {
        for l in [t, p] {
            if l >= k {
                return Err(Error::LabelOutOfRange { label: l, classes: k });
            }
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        class_names,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn class_scores(cm: &ConfusionMatrix) -> Vec<ClassScore> {
    (0..cm.class_count())
        .map(|c| {
            let tp = cm.get(c, c);
            let support = cm.row_sum(c);
            let precision = ratio(tp, cm.col_sum(c));
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassScore {
                name: cm.class_names()[c].clone(),
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
}

/// Macro and support-weighted F1, plus accuracy as support-weighted recall.
pub fn aggregate(scores: &[ClassScore]) -> Aggregate {
    let k = scores.len().max(1) as f64;
    let total: u64 = scores.iter().map(|s| s.support).sum();
    let macro_f1 = scores.iter().map(|s| s.f1).sum::<f64>() / k;
    let (weighted_f1, accuracy) = if total == 0 {
        (0.0, 0.0)
    } else {
        let t = total as f64;
        (
            scores.iter().map(|s| s.support as f64 * s.f1).sum::<f64>() / t,
            scores.iter().map(|s| s.support as f64 * s.recall).sum::<f64>() / t,
        )
    };
    Aggregate {
        macro_f1,
        weighted_f1,
        accuracy,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassScore>,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
}

impl EvaluationReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        let per_class = class_scores(&confusion);
        let agg = aggregate(&per_class);
        EvaluationReport {
            confusion,
            per_class,
            macro_f1: agg.macro_f1,
            weighted_f1: agg.weighted_f1,
            accuracy: agg.accuracy,
        }
    }

    pub fn class_f1(&self, name: &str) -> Option<f64> {
        self.per_class.iter().find(|s| s.name == name).map(|s| s.f1)
    }
}

/// Full report for predictions over the classes of `label_map`.
pub fn evaluate(truth: &[usize], pred: &[usize], label_map: &LabelMap) -> Result<EvaluationReport> {
    let cm = confusion_with_names(truth, pred, label_map.names().to_vec())?;
    Ok(EvaluationReport::from_confusion(cm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_labels_give_diagonal() {
        let cm = confusion(&[0, 1, 1, 2], &[0, 1, 1, 2], 3).unwrap();
        assert_eq!(cm.counts(), &[vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn binary_hand_tally() {
        let cm = confusion(&[0, 0, 0, 0, 1, 1], &[0, 0, 0, 1, 1, 0], 2).unwrap();
        assert_eq!(cm.counts(), &[vec![3, 1], vec![1, 1]]);
    }

    #[test]
    fn out_of_range_label() {
        assert!(matches!(
            confusion(&[0, 3], &[0, 1], 2),
            Err(Error::LabelOutOfRange { label: 3, .. })
        ));
    }

    #[test]
    fn two_by_two_fixture() {
        let cm = ConfusionMatrix::from_counts(
            vec!["a".into(), "b".into()],
            vec![vec![2, 0], vec![1, 1]],
        )
        .unwrap();
        let s = class_scores(&cm);
        assert!((s[0].precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s[0].recall, 1.0);
        assert!((s[0].f1 - 0.8).abs() < 1e-15);
        assert_eq!(s[1].precision, 1.0);
        assert_eq!(s[1].recall, 0.5);
        assert!((s[1].f1 - 2.0 / 3.0).abs() < 1e-15);
        let agg = aggregate(&s);
        assert!((agg.macro_f1 - (0.8 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!((agg.accuracy - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_support_class_scores_zero() {
        let cm = confusion(&[0, 0], &[0, 0], 2).unwrap();
        let s = class_scores(&cm);
        assert_eq!((s[1].precision, s[1].recall, s[1].f1, s[1].support), (0.0, 0.0, 0.0, 0));
        assert_eq!(aggregate(&s).macro_f1, 0.5);
    }

    #[test]
    fn single_class_perfect() {
        let cm = confusion(&[0, 0, 0], &[0, 0, 0], 1).unwrap();
        let agg = aggregate(&class_scores(&cm));
        assert_eq!((agg.macro_f1, agg.weighted_f1, agg.accuracy), (1.0, 1.0, 1.0));
    }
}
