//! Metric suite over description-level predictions: confusion matrix,
//! per-class precision/recall/F1 with support, accuracy, top-k accuracy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocabulary::{AttributeKind, LabelSet};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("gold and prediction lists differ in length: {golds} vs {preds}")]
    LengthMismatch { golds: usize, preds: usize },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("k must lie in 1..={max}, got {k}")]
    InvalidK { k: usize, max: usize },
}

/// Square count matrix indexed `[gold][predicted]` over a label set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> usize {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> usize {
        self.counts.iter().map(|row| row[j]).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("gold\\predicted");
        for label in &self.labels {
            out.push(',');
            out.push_str(label);
        }
        out.push('\n');
        for (i, label) in self.labels.iter().enumerate() {
            out.push_str(label);
            for count in &self.counts[i] {
                out.push(',');
                out.push_str(&count.to_string());
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Full metric report; metrics stored at full precision and rounded only
/// at presentation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub attribute: AttributeKind,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub total: usize,
    /// top-k accuracy for k = 1, 2, 3 (entry k-1), when ranked labels were supplied.
    pub top_k_accuracy: Vec<f64>,
}

impl EvaluationReport {
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<16} {:>9} {:>9} {:>9} {:>8}\n",
            "class", "precision", "recall", "f1", "support"
        ));
        for m in &self.per_class {
            out.push_str(&format!(
                "{:<16} {:>9.2} {:>9.2} {:>9.2} {:>8}\n",
                m.label, m.precision, m.recall, m.f1, m.support
            ));
        }
        out.push_str(&format!(
            "{:<16} {:>9.2} {:>9.2} {:>9.2} {:>8}\n",
            "macro avg", self.macro_precision, self.macro_recall, self.macro_f1, self.total
        ));
        out.push_str(&format!(
            "{:<16} {:>9.2} {:>9.2} {:>9.2} {:>8}\n",
            "weighted avg",
            self.weighted_precision,
            self.weighted_recall,
            self.weighted_f1,
            self.total
        ));
        out.push_str(&format!("accuracy {:.2} on {} items\n", self.accuracy, self.total));
        for (i, acc) in self.top_k_accuracy.iter().enumerate() {
            out.push_str(&format!("top-{} accuracy {:.2}\n", i + 1, acc));
        }
        out
    }
}

/// Counts (gold, predicted) pairs into a confusion matrix.
pub fn confusion(
    golds: &[String],
    preds: &[String],
    label_set: &LabelSet,
) -> Result<ConfusionMatrix, EvaluationError> {
    if golds.len() != preds.len() {
        return Err(EvaluationError::LengthMismatch {
            golds: golds.len(),
            preds: preds.len(),
        });
    }
    let n = label_set.len();
    let mut counts = vec![vec![0usize; n]; n];
    for (gold, pred) in golds.iter().zip(preds) {
        let g = label_set
            .index_of(gold)
            .ok_or_else(|| EvaluationError::UnknownLabel(gold.clone()))?;
        let p = label_set
            .index_of(pred)
            .ok_or_else(|| EvaluationError::UnknownLabel(pred.clone()))?;
        counts[g][p] += 1;
    }
    Ok(ConfusionMatrix {
        labels: label_set.classes.clone(),
        counts,
    })
}

/// Precision = diag/col-sum, recall = diag/row-sum, F1 = harmonic mean;
/// zero-denominator cells report 0.
pub fn metrics(matrix: &ConfusionMatrix, attribute: AttributeKind) -> EvaluationReport {
    let n = matrix.labels.len();
    let total = matrix.total();
    let mut per_class = Vec::with_capacity(n);
    for i in 0..n {
        let diag = matrix.counts[i][i] as f64;
        let col = matrix.col_sum(i) as f64;
        let row = matrix.row_sum(i) as f64;
        let precision = if col > 0.0 { diag / col } else { 0.0 };
        let recall = if row > 0.0 { diag / row } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(ClassMetrics {
            label: matrix.labels[i].clone(),
            precision,
            recall,
            f1,
            support: matrix.row_sum(i),
        });
    }
    let k = n as f64;
    let macro_precision = per_class.iter().map(|m| m.precision).sum::<f64>() / k;
    let macro_recall = per_class.iter().map(|m| m.recall).sum::<f64>() / k;
    let macro_f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / k;
    let weight = |f: &dyn Fn(&ClassMetrics) -> f64| -> f64 {
        if total == 0 {
            return 0.0;
        }
        per_class
            .iter()
            .map(|m| f(m) * m.support as f64)
            .sum::<f64>()
            / total as f64
    };
    EvaluationReport {
        attribute,
        accuracy: if total > 0 {
            matrix.trace() as f64 / total as f64
        } else {
            0.0
        },
        macro_precision,
        macro_recall,
        macro_f1,
        weighted_precision: weight(&|m| m.precision),
        weighted_recall: weight(&|m| m.recall),
        weighted_f1: weight(&|m| m.f1),
        total,
        top_k_accuracy: Vec::new(),
        per_class,
    }
}

/// Fraction of items whose gold label appears in the first k ranked labels.
pub fn top_k_accuracy(
    golds: &[String],
    ranked: &[Vec<String>],
    k: usize,
) -> Result<f64, EvaluationError> {
    if golds.len() != ranked.len() {
        return Err(EvaluationError::LengthMismatch {
            golds: golds.len(),
            preds: ranked.len(),
        });
    }
    let max = ranked.iter().map(|r| r.len()).min().unwrap_or(0);
    if k == 0 || k > max {
        return Err(EvaluationError::InvalidK { k, max });
    }
    let hits = golds
        .iter()
        .zip(ranked)
        .filter(|(gold, labels)| labels[..k].contains(gold))
        .count();
    Ok(hits as f64 / golds.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label_set(labels: &[&str]) -> LabelSet {
        LabelSet::new(
            AttributeKind::Color,
            labels.iter().map(|s| s.to_string()).collect(),
            labels.len() - 1,
        )
    }

    #[test]
    fn perfect_predictions_are_diagonal() {
        let set = label_set(&["a", "b", "no-color"]);
        let golds: Vec<String> = ["a", "b", "a"].iter().map(|s| s.to_string()).collect();
        let matrix = confusion(&golds, &golds, &set).unwrap();
        assert_eq!(matrix.trace(), 3);
        assert_eq!(matrix.total(), 3);
        let report = metrics(&matrix, AttributeKind::Color);
        assert_eq!(report.accuracy, 1.0);
    }

    #[test]
    fn single_miss_lands_in_the_right_cell() {
        let set = label_set(&["white", "no-color"]);
        let golds = vec!["white".to_string()];
        let preds = vec!["no-color".to_string()];
        let matrix = confusion(&golds, &preds, &set).unwrap();
        assert_eq!(matrix.counts[0][1], 1);
        assert_eq!(matrix.trace(), 0);
    }

    #[test]
    fn length_mismatch_rejected() {
        let set = label_set(&["a", "no-color"]);
        let err = confusion(&["a".to_string()], &[], &set).unwrap_err();
        assert!(matches!(err, EvaluationError::LengthMismatch { .. }));
    }

    #[test]
    fn zero_support_class_reports_zeros() {
        // matches the 0.00 rows for crinolines/kimono/sweater
        let set = label_set(&["dress", "crinolines", "no_work_type"]);
        let golds = vec!["dress".to_string(), "dress".to_string()];
        let preds = golds.clone();
        let matrix = confusion(&golds, &preds, &set).unwrap();
        let report = metrics(&matrix, AttributeKind::WorkType);
        let crin = &report.per_class[1];
        assert_eq!((crin.precision, crin.recall, crin.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_computed_three_class_matrix() {
        // [[2,1,0],[0,3,0],[1,0,3]]
        // precision: a 2/3, b 3/4, c 3/3; recall: a 2/3, b 3/3, c 3/4
        let matrix = ConfusionMatrix {
            labels: vec!["a".to_string(), "b".to_string(), "c".to_string()],
            counts: vec![vec![2, 1, 0], vec![0, 3, 0], vec![1, 0, 3]],
        };
        let report = metrics(&matrix, AttributeKind::Color);
        let close = |x: f64, y: f64| (x - y).abs() < 1e-12;
        assert!(close(report.per_class[0].precision, 2.0 / 3.0));
        assert!(close(report.per_class[0].recall, 2.0 / 3.0));
        assert!(close(report.per_class[1].precision, 3.0 / 4.0));
        assert!(close(report.per_class[1].recall, 1.0));
        assert!(close(report.per_class[2].precision, 1.0));
        assert!(close(report.per_class[2].recall, 3.0 / 4.0));
        assert!(close(report.accuracy, 8.0 / 10.0));
        assert_eq!(report.per_class[0].support, 3);
        // f1(b) = 2 * 0.75 * 1 / 1.75
        assert!(close(report.per_class[1].f1, 2.0 * 0.75 / 1.75));
    }

    #[test]
    fn top_k_accuracy_basics() {
        let golds: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let ranked = vec![
            vec!["a".to_string(), "b".to_string(), "c".to_string(), "d".to_string()],
            vec!["a".to_string(), "c".to_string(), "b".to_string(), "d".to_string()],
            vec!["a".to_string(), "b".to_string(), "d".to_string(), "c".to_string()],
        ];
        // gold at ranks 1, 3, 4
        assert!((top_k_accuracy(&golds, &ranked, 1).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((top_k_accuracy(&golds, &ranked, 3).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((top_k_accuracy(&golds, &ranked, 4).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            top_k_accuracy(&golds, &ranked, 5),
            Err(EvaluationError::InvalidK { .. })
        ));
    }

    #[test]
    fn top_k_non_decreasing_and_saturates() {
        let golds: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let ranked = vec![
            vec!["b".to_string(), "a".to_string(), "c".to_string()],
            vec!["c".to_string(), "a".to_string(), "b".to_string()],
            vec!["a".to_string(), "b".to_string(), "c".to_string()],
        ];
        let mut prev = 0.0;
        for k in 1..=3 {
            let acc = top_k_accuracy(&golds, &ranked, k).unwrap();
            assert!(acc >= prev);
            prev = acc;
        }
        assert_eq!(prev, 1.0);
    }

    #[test]
    fn report_round_trips_through_json() {
        let set = label_set(&["a", "b", "no-color"]);
        let golds: Vec<String> = ["a", "b", "a"].iter().map(|s| s.to_string()).collect();
        let matrix = confusion(&golds, &golds, &set).unwrap();
        let report = metrics(&matrix, AttributeKind::Color);
        let json = serde_json::to_string(&report).unwrap();
        let back: EvaluationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
