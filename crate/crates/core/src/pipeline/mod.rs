//! Reviews in, contradiction findings out. Each review of a paper is labeled
//! once, every canonical review pair is searched for opposed comment pairs, and
//! each candidate is classified.

mod render;

pub use render::{render_html, render_text};

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    generate_pairs, segment::segment_with, AspectCategory, CharSpan, CorpusError, LabelSet, Paper, Review,
    RuleSegmenter,
};
use crate::disagreement::{DisagreementError, PairClassifier};
use crate::metrics::Verdict;
use crate::sdap::{extract_labeled, label_review, CommentLabeler, LabelSource, SdapCandidate, SdapError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("paper {paper_id} has {count} review(s); at least 2 are needed")]
    TooFewReviews { paper_id: String, count: usize },
    #[error("review text is empty")]
    EmptyText,
    #[error("segmenting review {review_id}: {source}")]
    Segmentation {
        review_id: String,
        #[source]
        source: CorpusError,
    },
    #[error("labeling review {review_id}: {source}")]
    Labeling {
        review_id: String,
        #[source]
        source: SdapError,
    },
    #[error("classifying pair {pair_id}: {source}")]
    Classification {
        pair_id: String,
        #[source]
        source: DisagreementError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindingComment {
    pub review_id: String,
    pub comment_id: String,
    pub text: String,
    pub span: CharSpan,
    /// Labels that produced the match.
    pub labels: LabelSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContradictionFinding {
    pub paper_id: String,
    pub pair_id: String,
    pub rpc_id: String,
    pub comment_a: FindingComment,
    pub comment_b: FindingComment,
    pub opposed_aspects: Vec<AspectCategory>,
    pub probability: f64,
    pub label: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Aspect detection threshold; `None` when gold labels were used.
    pub aspect: Option<f64>,
    pub decision: f64,
}

/// Which models produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportManifest {
    #[serde(rename = "aspect_ckpt")]
    pub aspect_checkpoint: Option<String>,
    #[serde(rename = "disagree_ckpt")]
    pub disagreement_checkpoint: Option<String>,
    pub thresholds: Thresholds,
    pub label_source: LabelSource,
    /// Whether the classifier averages both comment orders.
    pub symmetrized: bool,
    pub crate_version: String,
}

impl ReportManifest {
    pub fn new(thresholds: Thresholds, label_source: LabelSource, symmetrized: bool) -> Self {
        ReportManifest {
            aspect_checkpoint: None,
            disagreement_checkpoint: None,
            thresholds,
            label_source,
            symmetrized,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub pair_id: String,
    pub review_a_id: String,
    pub review_b_id: String,
    pub findings: usize,
    pub contradictions: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectCount {
    pub findings: usize,
    pub contradictions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperReport {
    pub paper_id: String,
    pub generated_at: DateTime<Utc>,
    pub manifest: ReportManifest,
    /// Every finding, including those below the decision threshold, most probable first.
    pub findings: Vec<ContradictionFinding>,
    pub pairs: Vec<PairSummary>,
    pub aspect_counts: BTreeMap<AspectCategory, AspectCount>,
}

impl PaperReport {
    fn assemble(paper_id: &str, manifest: ReportManifest, mut pairs: Vec<PairSummary>, mut findings: Vec<ContradictionFinding>) -> Self {
        sort_findings(&mut findings);
        for pair in &mut pairs {
            let own = findings.iter().filter(|f| f.pair_id == pair.pair_id);
            pair.findings = own.clone().count();
            pair.contradictions = own.filter(|f| f.label == Verdict::Contradiction).count();
        }
        PaperReport {
            paper_id: paper_id.to_string(),
            generated_at: Utc::now(),
            manifest,
            aspect_counts: aspect_counts(&findings),
            findings,
            pairs,
        }
    }

    pub fn contradictions(&self) -> impl Iterator<Item = &ContradictionFinding> {
        self.findings.iter().filter(|f| f.label == Verdict::Contradiction)
    }

    /// Whether the per-pair and per-aspect counts agree with the finding list.
    pub fn is_consistent(&self) -> bool {
        let pairs_ok = self.pairs.iter().all(|p| {
            let own: Vec<_> = self.findings.iter().filter(|f| f.pair_id == p.pair_id).collect();
            own.len() == p.findings && own.iter().filter(|f| f.label == Verdict::Contradiction).count() == p.contradictions
        });
        let total: usize = self.pairs.iter().map(|p| p.findings).sum();
        pairs_ok && total == self.findings.len() && self.aspect_counts == aspect_counts(&self.findings)
    }
}

fn aspect_counts(findings: &[ContradictionFinding]) -> BTreeMap<AspectCategory, AspectCount> {
    let mut counts: BTreeMap<AspectCategory, AspectCount> = BTreeMap::new();
    for f in findings {
        for &aspect in &f.opposed_aspects {
            let c = counts.entry(aspect).or_default();
            c.findings += 1;
            if f.label == Verdict::Contradiction {
                c.contradictions += 1;
            }
        }
    }
    counts
}

/// Descending probability; ties by pair then comment pair id.
fn sort_findings(findings: &mut [ContradictionFinding]) {
    findings.sort_by(|x, y| {
        y.probability
            .total_cmp(&x.probability)
            .then_with(|| x.pair_id.cmp(&y.pair_id))
            .then_with(|| x.rpc_id.cmp(&y.rpc_id))
    });
}

/// The two stage models plus the manifest describing them.
pub struct Detector<'m> {
    pub labeler: &'m dyn CommentLabeler,
    pub classifier: &'m dyn PairClassifier,
    pub manifest: ReportManifest,
}

impl<'m> Detector<'m> {
    pub fn new(labeler: &'m dyn CommentLabeler, classifier: &'m dyn PairClassifier, manifest: ReportManifest) -> Self {
        Detector { labeler, classifier, manifest }
    }

    fn label(&self, review: &Review) -> Result<Review, PipelineError> {
        let mut review = review.clone();
        if review.comments.is_empty() {
            review.comments = segment_with(&RuleSegmenter::default(), &format!("{}#", review.review_id), &review.raw_text)
                .map_err(|source| PipelineError::Segmentation { review_id: review.review_id.clone(), source })?;
        }
        let labels = label_review(&review, Some(self.labeler))
            .map_err(|source| PipelineError::Labeling { review_id: review.review_id.clone(), source })?;
        for (comment, labels) in review.comments.iter_mut().zip(labels) {
            comment.labels = labels;
        }
        Ok(review)
    }

    fn findings(&self, paper_id: &str, pair_id: &str, a: &Review, b: &Review) -> Result<Vec<ContradictionFinding>, PipelineError> {
        let la: Vec<LabelSet> = a.comments.iter().map(|c| c.labels.clone()).collect();
        let lb: Vec<LabelSet> = b.comments.iter().map(|c| c.labels.clone()).collect();
        extract_labeled(a, &la, b, &lb, self.labeler.source())
            .into_iter()
            .map(|candidate| self.finding(paper_id, pair_id, a, b, candidate))
            .collect()
    }

    fn finding(
        &self,
        paper_id: &str,
        pair_id: &str,
        a: &Review,
        b: &Review,
        candidate: SdapCandidate,
    ) -> Result<ContradictionFinding, PipelineError> {
        let prediction = self
            .classifier
            .classify(&candidate)
            .map_err(|source| PipelineError::Classification { pair_id: pair_id.to_string(), source })?;
        let side = |review: &Review, c: crate::corpus::ReviewComment| FindingComment {
            review_id: review.review_id.clone(),
            comment_id: c.comment_id,
            text: c.text,
            span: c.char_span,
            labels: c.labels,
        };
        Ok(ContradictionFinding {
            paper_id: paper_id.to_string(),
            pair_id: pair_id.to_string(),
            rpc_id: prediction.rpc_id,
            opposed_aspects: candidate.opposed_aspects.into_iter().collect(),
            comment_a: side(a, candidate.comment_a),
            comment_b: side(b, candidate.comment_b),
            probability: prediction.probability_contradiction,
            label: prediction.label,
        })
    }

    /// Findings for every review pair of a paper.
    pub fn detect(&self, paper: &Paper) -> Result<PaperReport, PipelineError> {
        if paper.reviews.len() < 2 {
            return Err(PipelineError::TooFewReviews {
                paper_id: paper.paper_id.clone(),
                count: paper.reviews.len(),
            });
        }
        let labeled: BTreeMap<String, Review> = paper
            .reviews
            .par_iter()
            .map(|r| Ok((r.review_id.clone(), self.label(r)?)))
            .collect::<Result<_, PipelineError>>()?;
        let pairs = generate_pairs(paper);
        let findings: Vec<ContradictionFinding> = pairs
            .par_iter()
            .map(|p| self.findings(&paper.paper_id, &p.pair_id, &labeled[&p.review_a_id], &labeled[&p.review_b_id]))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .collect();
        let summaries = pairs
            .iter()
            .map(|p| PairSummary {
                pair_id: p.pair_id.clone(),
                review_a_id: p.review_a_id.clone(),
                review_b_id: p.review_b_id.clone(),
                findings: 0,
                contradictions: 0,
            })
            .collect();
        Ok(PaperReport::assemble(&paper.paper_id, self.manifest.clone(), summaries, findings))
    }

    /// Findings for two raw review texts outside any corpus. The reviews are
    /// named `a` and `b`; comment ids are `a#0`, `b#0`, ...
    pub fn detect_pair(&self, review_a: &str, review_b: &str) -> Result<Vec<ContradictionFinding>, PipelineError> {
        if review_a.trim().is_empty() || review_b.trim().is_empty() {
            return Err(PipelineError::EmptyText);
        }
        let raw = |id: &str, text: &str| Review {
            review_id: id.to_string(),
            paper_id: "adhoc".to_string(),
            reviewer_alias: id.to_string(),
            raw_text: text.to_string(),
            comments: Vec::new(),
            unlabeled: true,
        };
        let a = self.label(&raw("a", review_a))?;
        let b = self.label(&raw("b", review_b))?;
        let mut findings = self.findings("adhoc", "a|b", &a, &b)?;
        sort_findings(&mut findings);
        Ok(findings)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::corpus::{AspectLabel, ReviewComment, Sentiment, Venue};
    use crate::disagreement::{decide, ContradictionPrediction};
    use crate::sdap::extract_sdaps;
    use std::collections::BTreeSet;

    /// Labels by keyword: "sound"/"proof" → Soundness, "comparison"/"baseline" →
    /// MeaningfulComparison; "not", "unfortunately", "weak" or "wrong" flip to Negative.
    pub(crate) struct KeywordLabeler;

    impl CommentLabeler for KeywordLabeler {
        fn label(&self, comment: &ReviewComment) -> Result<LabelSet, SdapError> {
            let text = comment.text.to_lowercase();
            let negative = ["not ", "unfortunately", "weak", "wrong"].iter().any(|w| text.contains(w));
            let sentiment = if negative { Sentiment::Negative } else { Sentiment::Positive };
            let mut labels = LabelSet::new();
            for (keys, aspect) in [
                (&["sound", "proof"][..], AspectCategory::Soundness),
                (&["comparison", "baseline"][..], AspectCategory::MeaningfulComparison),
            ] {
                if keys.iter().any(|k| text.contains(k)) {
                    labels.insert(AspectLabel::new(aspect, Some(sentiment)).unwrap()).unwrap();
                }
            }
            Ok(labels)
        }

        fn source(&self) -> LabelSource {
            LabelSource::Predicted
        }
    }

    /// Order-insensitive score from text lengths; "but" anywhere makes it confident.
    pub(crate) struct LengthClassifier;

    impl PairClassifier for LengthClassifier {
        fn classify(&self, c: &SdapCandidate) -> Result<ContradictionPrediction, DisagreementError> {
            let (x, y) = (c.comment_a.text.len() as f64, c.comment_b.text.len() as f64);
            let mut p = x.min(y) / x.max(y);
            if c.comment_a.text.contains("but") || c.comment_b.text.contains("but") {
                p = 0.5 + p / 2.0;
            }
            Ok(ContradictionPrediction { rpc_id: c.rpc_id(), probability_contradiction: p, label: decide(p, 0.5) })
        }
    }

    pub(crate) fn manifest() -> ReportManifest {
        ReportManifest::new(Thresholds { aspect: None, decision: 0.5 }, LabelSource::Predicted, true)
    }

    pub(crate) fn paper(texts: &[&str]) -> Paper {
        Paper {
            paper_id: "P1".into(),
            venue: Venue::Iclr,
            year: 2020,
            title: "t".into(),
            r#abstract: String::new(),
            reviews: texts
                .iter()
                .enumerate()
                .map(|(i, t)| Review {
                    review_id: format!("r{i}"),
                    paper_id: "P1".into(),
                    reviewer_alias: format!("R{i}"),
                    raw_text: t.to_string(),
                    comments: Vec::new(),
                    unlabeled: true,
                })
                .collect(),
        }
    }

    #[test]
    fn soundness_disagreement_is_found() {
        let d = Detector::new(&KeywordLabeler, &LengthClassifier, manifest());
        let p = paper(&[
            "The method is technically sound and well motivated. Writing is good.",
            "The writing is fine, but the proof is not sound.",
        ]);
        let report = d.detect(&p).unwrap();
        assert_eq!(report.findings.len(), 1);
        let f = &report.findings[0];
        assert_eq!(f.opposed_aspects, vec![AspectCategory::Soundness]);
        assert_eq!(f.label, Verdict::Contradiction);
        assert_eq!(f.comment_b.text, "The writing is fine, but the proof is not sound.");
        assert_eq!(report.aspect_counts[&AspectCategory::Soundness], AspectCount { findings: 1, contradictions: 1 });
        assert!(report.is_consistent());
    }

    #[test]
    fn no_opposition_means_no_findings() {
        let d = Detector::new(&KeywordLabeler, &LengthClassifier, manifest());
        let report = d.detect(&paper(&["The proof is sound.", "Nice figures."])).unwrap();
        assert!(report.findings.is_empty());
        assert_eq!(report.pairs.len(), 1);
    }

    #[test]
    fn four_reviews_make_six_pairs() {
        let d = Detector::new(&KeywordLabeler, &LengthClassifier, manifest());
        let report = d
            .detect(&paper(&["The proof is sound.", "The proof is wrong.", "Weak baseline comparison.", "Good comparison."]))
            .unwrap();
        assert_eq!(report.pairs.len(), 6);
        assert!(report.is_consistent());
        assert!(report.findings.windows(2).all(|w| w[0].probability >= w[1].probability));
        assert!(matches!(
            d.detect(&paper(&["only one"])),
            Err(PipelineError::TooFewReviews { count: 1, .. })
        ));
    }

    #[test]
    fn composition_equals_manual_staging() {
        let d = Detector::new(&KeywordLabeler, &LengthClassifier, manifest());
        let mut p = paper(&[
            "The proof is sound. The baseline comparison is thorough.",
            "The proof is wrong. The comparison is weak.",
            "Unfortunately the proof is not sound, but the comparison is good.",
        ]);
        for r in &mut p.reviews {
            r.comments = crate::corpus::segment_review(&r.raw_text).unwrap();
        }
        let report = d.detect(&p).unwrap();
        let mut manual = Vec::new();
        for pair in generate_pairs(&p) {
            let find = |id: &str| p.reviews.iter().find(|r| r.review_id == id).unwrap();
            for c in extract_sdaps(find(&pair.review_a_id), find(&pair.review_b_id), Some(&KeywordLabeler)).unwrap() {
                let pred = LengthClassifier.classify(&c).unwrap();
                manual.push((pair.pair_id.clone(), pred.rpc_id, pred.probability_contradiction, pred.label));
            }
        }
        let mut got: Vec<_> = report
            .findings
            .iter()
            .map(|f| (f.pair_id.clone(), f.rpc_id.clone(), f.probability, f.label))
            .collect();
        manual.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
        got.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
        assert!(!got.is_empty());
        assert_eq!(got, manual);
    }

    #[test]
    fn adhoc_pairs() {
        let d = Detector::new(&KeywordLabeler, &LengthClassifier, manifest());
        let text = "The proof is sound. The comparison is weak.";
        assert!(d.detect_pair(text, text).unwrap().is_empty());
        assert!(matches!(d.detect_pair(" ", text), Err(PipelineError::EmptyText)));
        let a = "The comparison to JPEG2000 is thorough and convincing.";
        let b = "The comparison to JPEG2000 is unfortunately not that interesting.";
        let forward = d.detect_pair(a, b).unwrap();
        assert_eq!(forward.len(), 1);
        assert_eq!(forward[0].opposed_aspects, vec![AspectCategory::MeaningfulComparison]);
        let key = |fs: &[ContradictionFinding]| -> BTreeSet<(String, String, u64)> {
            fs.iter()
                .map(|f| {
                    let (x, y) = (f.comment_a.text.clone(), f.comment_b.text.clone());
                    let (x, y) = if x <= y { (x, y) } else { (y, x) };
                    (x, y, f.probability.to_bits())
                })
                .collect()
        };
        assert_eq!(key(&forward), key(&d.detect_pair(b, a).unwrap()));
    }

    #[test]
    fn manifest_keys() {
        let json = serde_json::to_value(manifest()).unwrap();
        assert!(json.get("aspect_ckpt").is_some() && json.get("disagree_ckpt").is_some());
        assert_eq!(json["thresholds"]["decision"], 0.5);
    }
}
