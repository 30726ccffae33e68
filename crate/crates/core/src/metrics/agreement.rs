use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub observed: f64,
    pub expected: f64,
    pub kappa: f64,
    pub items: usize,
}

/// Cohen's kappa between two raters using their empirical label marginals.
pub fn cohen_kappa<L: Ord>(labels_a: &[L], labels_b: &[L]) -> Result<AgreementReport, MetricsError> {
    if labels_a.len() != labels_b.len() {
        return Err(MetricsError::LengthMismatch {
            left: labels_a.len(),
            right: labels_b.len(),
        });
    }
    if labels_a.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = labels_a.len() as f64;
    let mut marginals: BTreeMap<&L, (usize, usize)> = BTreeMap::new();
    let mut agree = 0usize;
    for (a, b) in labels_a.iter().zip(labels_b) {
        marginals.entry(a).or_default().0 += 1;
        marginals.entry(b).or_default().1 += 1;
        if a == b {
            agree += 1;
        }
    }
    let observed = agree as f64 / n;
    let expected: f64 = marginals
        .values()
        .map(|&(ca, cb)| (ca as f64 / n) * (cb as f64 / n))
        .sum();
    // expected == 1 only when both raters used one and the same label throughout
    let kappa = if (1.0 - expected).abs() < 1e-15 {
        1.0
    } else {
        (observed - expected) / (1.0 - expected)
    };
    Ok(AgreementReport {
        observed,
        expected,
        kappa,
        items: labels_a.len(),
    })
}

/// Mean Cohen's kappa over all annotator pairs, each computed on the items both annotated.
/// Pairs without shared items are skipped; `None` when no pair qualifies.
pub fn average_pairwise_kappa<L: Ord + Clone>(
    annotations: &BTreeMap<String, BTreeMap<String, L>>,
) -> Option<f64> {
    let annotators: Vec<&BTreeMap<String, L>> = annotations.values().collect();
    let mut kappas = Vec::new();
    for (i, a) in annotators.iter().enumerate() {
        for b in &annotators[i + 1..] {
            let (la, lb): (Vec<L>, Vec<L>) = a
                .iter()
                .filter_map(|(item, la)| b.get(item).map(|lb| (la.clone(), lb.clone())))
                .unzip();
            if let Ok(report) = cohen_kappa(&la, &lb) {
                kappas.push(report.kappa);
            }
        }
    }
    (!kappas.is_empty()).then(|| kappas.iter().sum::<f64>() / kappas.len() as f64)
}
