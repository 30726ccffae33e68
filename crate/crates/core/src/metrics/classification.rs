use std::fmt;

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Two-way contradiction verdict. Class order is fixed: NonContradiction first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    NonContradiction,
    Contradiction,
}

impl Verdict {
    pub const CLASSES: [Verdict; 2] = [Verdict::NonContradiction, Verdict::Contradiction];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_bool(contradiction: bool) -> Verdict {
        if contradiction {
            Verdict::Contradiction
        } else {
            Verdict::NonContradiction
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::NonContradiction => "NonContradiction",
            Verdict::Contradiction => "Contradiction",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `counts[gold][pred]` over the two verdict classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 2]; 2],
}

impl ConfusionMatrix {
    pub fn from_labels(gold: &[Verdict], pred: &[Verdict]) -> Self {
        let mut m = ConfusionMatrix::default();
        for (g, p) in gold.iter().zip(pred) {
            m.counts[g.index()][p.index()] += 1;
        }
        m
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        self.counts[0][0] + self.counts[1][1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Precision, recall and F1 from raw counts, with 0/0 taken as 0.
pub fn prf_from_counts(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Indexed by [`Verdict::index`].
    pub per_class: [ClassMetrics; 2],
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    /// Notes about undefined ratios that were reported as 0.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl MetricsReport {
    pub fn class(&self, verdict: Verdict) -> &ClassMetrics {
        &self.per_class[verdict.index()]
    }

    pub fn from_confusion(confusion: ConfusionMatrix) -> Result<Self, MetricsError> {
        let total = confusion.total();
        if total == 0 {
            return Err(MetricsError::Empty);
        }
        let mut warnings = Vec::new();
        let per_class = Verdict::CLASSES.map(|class| {
            let k = class.index();
            let tp = confusion.counts[k][k];
            let fp = confusion.counts[1 - k][k];
            let fn_ = confusion.counts[k][1 - k];
            if tp + fp == 0 {
                warnings.push(format!("precision of {class} is 0/0, reported as 0"));
            }
            if tp + fn_ == 0 {
                warnings.push(format!("recall of {class} is 0/0, reported as 0"));
            }
            let (precision, recall, f1) = prf_from_counts(tp, fp, fn_);
            ClassMetrics {
                precision,
                recall,
                f1,
                support: tp + fn_,
            }
        });
        let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / 2.0;
        Ok(MetricsReport {
            macro_precision: mean(|c| c.precision),
            macro_recall: mean(|c| c.recall),
            macro_f1: mean(|c| c.f1),
            accuracy: confusion.correct() as f64 / total as f64,
            per_class,
            confusion,
            warnings,
        })
    }

    /// Plain-text table in the column order P, R, F1, Acc (percentages).
    pub fn render_table(&self, name: &str) -> String {
        let width = name.len().max(18);
        let mut out = format!(
            "{:<width$} {:>7} {:>7} {:>7} {:>7}\n",
            "Model", "P", "R", "F1", "Acc"
        );
        out.push_str(&format!(
            "{:<width$} {:>7.2} {:>7.2} {:>7.2} {:>7.2}\n",
            name,
            100.0 * self.macro_precision,
            100.0 * self.macro_recall,
            100.0 * self.macro_f1,
            100.0 * self.accuracy
        ));
        out
    }
}

/// Macro-averaged two-class metrics over aligned gold and predicted verdicts.
pub fn compute_metrics(gold: &[Verdict], pred: &[Verdict]) -> Result<MetricsReport, MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            left: gold.len(),
            right: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(MetricsError::Empty);
    }
    MetricsReport::from_confusion(ConfusionMatrix::from_labels(gold, pred))
}

/// Macro F1 over the labels that occur in either list; `None` for empty input.
pub fn macro_f1_present<L: Ord + Copy>(gold: &[L], pred: &[L]) -> Option<f64> {
    if gold.is_empty() || gold.len() != pred.len() {
        return None;
    }
    let mut labels: Vec<L> = gold.iter().chain(pred).copied().collect();
    labels.sort();
    labels.dedup();
    let total: f64 = labels
        .iter()
        .map(|&label| {
            let mut tp = 0;
            let mut fp = 0;
            let mut fn_ = 0;
            for (g, p) in gold.iter().zip(pred) {
                match (*g == label, *p == label) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    _ => {}
                }
            }
            prf_from_counts(tp, fp, fn_).2
        })
        .sum();
    Some(total / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Verdict::*;

    #[test]
    fn perfect_predictions_score_one() {
        let gold = [Contradiction, NonContradiction, Contradiction];
        let r = compute_metrics(&gold, &gold).unwrap();
        assert_eq!(r.macro_f1, 1.0);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.macro_precision, 1.0);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn worked_example() {
        // C: TP1 FN1 FP0, N: TP2 FP1 FN0
        let gold = [Contradiction, NonContradiction, Contradiction, NonContradiction];
        let pred = [Contradiction, NonContradiction, NonContradiction, NonContradiction];
        let r = compute_metrics(&gold, &pred).unwrap();
        assert!((r.class(Contradiction).f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.class(NonContradiction).f1 - 0.8).abs() < 1e-12);
        assert!((r.macro_f1 - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-12);
        assert_eq!(r.accuracy, 0.75);
    }

    #[test]
    fn one_class_predictions() {
        let gold = [Contradiction, NonContradiction, NonContradiction];
        let pred = [NonContradiction; 3];
        let r = compute_metrics(&gold, &pred).unwrap();
        assert_eq!(r.class(NonContradiction).recall, 1.0);
        assert_eq!(r.class(Contradiction).recall, 0.0);
        assert_eq!(r.class(Contradiction).f1, 0.0);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn errors() {
        assert!(matches!(compute_metrics(&[], &[]), Err(MetricsError::Empty)));
        assert!(matches!(
            compute_metrics(&[Contradiction], &[]),
            Err(MetricsError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn table_has_fixed_columns() {
        let r = compute_metrics(&[Contradiction], &[Contradiction]).unwrap();
        let table = r.render_table("toy");
        assert!(table.lines().next().unwrap().split_whitespace().eq(["Model", "P", "R", "F1", "Acc"]));
    }

    #[test]
    fn macro_over_present_labels() {
        assert_eq!(macro_f1_present(&[1, 1], &[1, 1]), Some(1.0));
        assert_eq!(macro_f1_present::<u8>(&[], &[]), None);
        let f = macro_f1_present(&[1, 2], &[1, 1]).unwrap();
        assert!((f - (2.0 / 3.0) / 2.0).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn macro_fields_are_class_means(pairs in proptest::collection::vec((proptest::bool::ANY, proptest::bool::ANY), 1..80)) {
            let gold: Vec<Verdict> = pairs.iter().map(|p| Verdict::from_bool(p.0)).collect();
            let pred: Vec<Verdict> = pairs.iter().map(|p| Verdict::from_bool(p.1)).collect();
            let r = compute_metrics(&gold, &pred).unwrap();
            let mean = |f: fn(&ClassMetrics) -> f64| (f(&r.per_class[0]) + f(&r.per_class[1])) / 2.0;
            proptest::prop_assert!((r.macro_precision - mean(|c| c.precision)).abs() < 1e-12);
            proptest::prop_assert!((r.macro_recall - mean(|c| c.recall)).abs() < 1e-12);
            proptest::prop_assert!((r.macro_f1 - mean(|c| c.f1)).abs() < 1e-12);
            for v in [r.macro_precision, r.macro_recall, r.macro_f1, r.accuracy] {
                proptest::prop_assert!((0.0..=1.0).contains(&v));
            }
            proptest::prop_assert_eq!(r.per_class[0].support + r.per_class[1].support, gold.len());
        }
    }
}
