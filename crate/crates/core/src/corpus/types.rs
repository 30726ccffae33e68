use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CorpusError;

/// The eight review facets a comment may address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AspectCategory {
    Motivation,
    Clarity,
    Soundness,
    Substance,
    Originality,
    MeaningfulComparison,
    Replicability,
    Summary,
}

impl AspectCategory {
    /// Canonical head order. Checkpoints record this so head indices survive reloads.
    pub const ALL: [AspectCategory; 8] = [
        AspectCategory::Motivation,
        AspectCategory::Clarity,
        AspectCategory::Soundness,
        AspectCategory::Substance,
        AspectCategory::Originality,
        AspectCategory::MeaningfulComparison,
        AspectCategory::Replicability,
        AspectCategory::Summary,
    ];

    /// Summary describes the paper and carries no opinion.
    pub fn sentiment_bearing(self) -> bool {
        !matches!(self, AspectCategory::Summary)
    }

    pub fn sentiment_bearing_aspects() -> impl Iterator<Item = AspectCategory> {
        Self::ALL.into_iter().filter(|a| a.sentiment_bearing())
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AspectCategory::Motivation => "Motivation",
            AspectCategory::Clarity => "Clarity",
            AspectCategory::Soundness => "Soundness",
            AspectCategory::Substance => "Substance",
            AspectCategory::Originality => "Originality",
            AspectCategory::MeaningfulComparison => "MeaningfulComparison",
            AspectCategory::Replicability => "Replicability",
            AspectCategory::Summary => "Summary",
        }
    }
}

impl fmt::Display for AspectCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AspectCategory {
    type Err = CorpusError;

    /// Case-insensitive; `meaningful_comparison` and `Meaningful Comparison` are accepted too.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        AspectCategory::ALL
            .into_iter()
            .find(|a| a.as_str().to_lowercase() == folded)
            .ok_or_else(|| CorpusError::UnknownAspectName(s.to_string()))
    }
}

impl Serialize for AspectCategory {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for AspectCategory {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sentiment {
    Positive,
    Negative,
}

impl Sentiment {
    pub fn opposite(self) -> Sentiment {
        match self {
            Sentiment::Positive => Sentiment::Negative,
            Sentiment::Negative => Sentiment::Positive,
        }
    }
}

impl FromStr for Sentiment {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "positive" | "pos" | "+" => Ok(Sentiment::Positive),
            "negative" | "neg" | "-" => Ok(Sentiment::Negative),
            _ => Err(CorpusError::UnknownSentiment(s.to_string())),
        }
    }
}

/// One aspect tag on a comment. The sentiment is absent exactly for [`AspectCategory::Summary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AspectLabel {
    pub aspect: AspectCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment: Option<Sentiment>,
}

impl AspectLabel {
    pub fn new(aspect: AspectCategory, sentiment: Option<Sentiment>) -> Result<Self, CorpusError> {
        if aspect.sentiment_bearing() != sentiment.is_some() {
            return Err(CorpusError::InvalidLabel {
                aspect,
                sentiment,
            });
        }
        Ok(AspectLabel { aspect, sentiment })
    }

    pub fn positive(aspect: AspectCategory) -> Self {
        Self::new(aspect, Some(Sentiment::Positive)).expect("sentiment-bearing aspect")
    }

    pub fn negative(aspect: AspectCategory) -> Self {
        Self::new(aspect, Some(Sentiment::Negative)).expect("sentiment-bearing aspect")
    }

    pub fn summary() -> Self {
        AspectLabel {
            aspect: AspectCategory::Summary,
            sentiment: None,
        }
    }
}

/// Aspect labels of one comment, keyed by aspect so each aspect carries at most one sentiment.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LabelSet(BTreeMap<AspectCategory, Option<Sentiment>>);

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn try_from_labels<I: IntoIterator<Item = AspectLabel>>(
        labels: I,
    ) -> Result<Self, CorpusError> {
        let mut set = LabelSet::new();
        for label in labels {
            set.insert(label)?;
        }
        Ok(set)
    }

    /// Fails when the aspect is already present with a different sentiment.
    pub fn insert(&mut self, label: AspectLabel) -> Result<(), CorpusError> {
        match self.0.get(&label.aspect) {
            Some(existing) if *existing != label.sentiment => {
                Err(CorpusError::DuplicateAspect(label.aspect))
            }
            _ => {
                self.0.insert(label.aspect, label.sentiment);
                Ok(())
            }
        }
    }

    pub fn remove(&mut self, aspect: AspectCategory) -> Option<AspectLabel> {
        self.0.remove(&aspect).map(|sentiment| AspectLabel { aspect, sentiment })
    }

    pub fn sentiment(&self, aspect: AspectCategory) -> Option<Sentiment> {
        self.0.get(&aspect).copied().flatten()
    }

    pub fn contains(&self, aspect: AspectCategory) -> bool {
        self.0.contains_key(&aspect)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = AspectLabel> + '_ {
        self.0
            .iter()
            .map(|(&aspect, &sentiment)| AspectLabel { aspect, sentiment })
    }

    pub fn aspects(&self) -> impl Iterator<Item = AspectCategory> + '_ {
        self.0.keys().copied()
    }

    /// Aspects present in both sets with opposite sentiments. Summary never qualifies.
    pub fn opposed_aspects(&self, other: &LabelSet) -> BTreeSet<AspectCategory> {
        self.0
            .iter()
            .filter_map(|(&aspect, &sentiment)| {
                let mine = sentiment?;
                (other.sentiment(aspect) == Some(mine.opposite())).then_some(aspect)
            })
            .collect()
    }
}

impl FromIterator<AspectLabel> for LabelSet {
    /// Later labels override earlier ones on the same aspect.
    fn from_iter<T: IntoIterator<Item = AspectLabel>>(iter: T) -> Self {
        LabelSet(
            iter.into_iter()
                .map(|l| (l.aspect, l.sentiment))
                .collect(),
        )
    }
}

impl Serialize for LabelSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for LabelSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let labels = Vec::<AspectLabel>::deserialize(d)?;
        LabelSet::try_from_labels(labels).map_err(serde::de::Error::custom)
    }
}

/// Character offsets (Unicode scalar values, end exclusive) into the parent review text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        CharSpan { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Returns `None` when the span runs past the end of `text` or is inverted.
    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        if self.start > self.end {
            return None;
        }
        let mut indices = text
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(text.len()));
        let start = indices.nth(self.start)?;
        let end = if self.end == self.start {
            start
        } else {
            indices.nth(self.end - self.start - 1)?
        };
        Some(&text[start..end])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewComment {
    pub comment_id: String,
    pub text: String,
    pub char_span: CharSpan,
    #[serde(default)]
    pub labels: LabelSet,
}

impl ReviewComment {
    pub fn is_labeled(&self) -> bool {
        !self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub review_id: String,
    pub paper_id: String,
    pub reviewer_alias: String,
    pub raw_text: String,
    pub comments: Vec<ReviewComment>,
    /// Set when the source carried no aspect labels for any comment.
    #[serde(default)]
    pub unlabeled: bool,
}

impl Review {
    pub fn has_labeled_comments(&self) -> bool {
        self.comments.iter().any(ReviewComment::is_labeled)
    }

    pub fn comment(&self, comment_id: &str) -> Option<&ReviewComment> {
        self.comments.iter().find(|c| c.comment_id == comment_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Venue {
    #[serde(rename = "ICLR")]
    Iclr,
    #[serde(rename = "NeurIPS")]
    NeurIps,
    Other,
}

impl Venue {
    pub const ALL: [Venue; 3] = [Venue::Iclr, Venue::NeurIps, Venue::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Venue::Iclr => "ICLR",
            Venue::NeurIps => "NeurIPS",
            Venue::Other => "Other",
        }
    }

    /// Unrecognised venue strings map to `Other`.
    pub fn parse_lenient(s: &str) -> Venue {
        match s.trim().to_lowercase().as_str() {
            "iclr" => Venue::Iclr,
            "neurips" | "nips" => Venue::NeurIps,
            _ => Venue::Other,
        }
    }
}

impl fmt::Display for Venue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paper {
    pub paper_id: String,
    pub venue: Venue,
    pub year: i32,
    pub title: String,
    pub r#abstract: String,
    pub reviews: Vec<Review>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeakLabel {
    NoContradiction,
    Candidate,
}

/// Unordered pair of reviews of one paper, stored with `review_a_id < review_b_id`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReviewPair {
    pub pair_id: String,
    pub paper_id: String,
    pub review_a_id: String,
    pub review_b_id: String,
    pub weak_label: Option<WeakLabel>,
}

impl ReviewPair {
    /// Orders the two ids canonically; the pair id is derived from the ordered ids.
    pub fn canonical(paper_id: &str, first: &str, second: &str) -> Self {
        let (a, b) = if first <= second {
            (first, second)
        } else {
            (second, first)
        };
        ReviewPair {
            pair_id: pair_id(a, b),
            paper_id: paper_id.to_string(),
            review_a_id: a.to_string(),
            review_b_id: b.to_string(),
            weak_label: None,
        }
    }
}

pub fn pair_id(review_a_id: &str, review_b_id: &str) -> String {
    format!("{review_a_id}|{review_b_id}")
}

pub fn rpc_id(comment_a_id: &str, comment_b_id: &str) -> String {
    format!("{comment_a_id}|{comment_b_id}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GoldLabel {
    Contradiction,
    NonContradiction,
    CannotDecide,
}

impl GoldLabel {
    /// Annotation-file token: `C`, `N` or `CNT`.
    pub fn token(self) -> &'static str {
        match self {
            GoldLabel::Contradiction => "C",
            GoldLabel::NonContradiction => "N",
            GoldLabel::CannotDecide => "CNT",
        }
    }

    pub fn from_token(token: &str) -> Option<GoldLabel> {
        match token {
            "C" => Some(GoldLabel::Contradiction),
            "N" => Some(GoldLabel::NonContradiction),
            "CNT" => Some(GoldLabel::CannotDecide),
            _ => None,
        }
    }

    /// CNT items stay in the corpus but never reach training or evaluation.
    pub fn is_trainable(self) -> bool {
        !matches!(self, GoldLabel::CannotDecide)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReviewPairComment {
    pub rpc_id: String,
    pub pair_id: String,
    pub comment_a_id: String,
    pub comment_b_id: String,
    pub shared_opposed_aspects: BTreeSet<AspectCategory>,
    pub gold_label: Option<GoldLabel>,
}

/// A whole dataset: papers keyed by id plus the derived pairs and review pair comments.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub papers: BTreeMap<String, Paper>,
    #[serde(default)]
    pub pairs: Vec<ReviewPair>,
    #[serde(default)]
    pub rpcs: Vec<ReviewPairComment>,
}

impl Corpus {
    pub fn paper(&self, paper_id: &str) -> Option<&Paper> {
        self.papers.get(paper_id)
    }

    pub fn reviews(&self) -> impl Iterator<Item = &Review> {
        self.papers.values().flat_map(|p| p.reviews.iter())
    }

    pub fn review(&self, review_id: &str) -> Option<&Review> {
        // review ids carry no paper prefix guarantee, so this is a scan
        self.reviews().find(|r| r.review_id == review_id)
    }

    pub fn review_index(&self) -> BTreeMap<&str, &Review> {
        self.reviews().map(|r| (r.review_id.as_str(), r)).collect()
    }

    pub fn pair(&self, pair_id: &str) -> Option<&ReviewPair> {
        self.pairs.iter().find(|p| p.pair_id == pair_id)
    }

    pub fn rpc(&self, rpc_id: &str) -> Option<&ReviewPairComment> {
        self.rpcs.iter().find(|r| r.rpc_id == rpc_id)
    }

    /// Checks the cross-object invariants: unique review ids, matching paper ids,
    /// ordered non-overlapping spans, and every RPC pointing at a known pair.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = BTreeSet::new();
        for (key, paper) in &self.papers {
            if key != &paper.paper_id {
                return Err(CorpusError::Inconsistent(format!(
                    "paper stored under key {key} has id {}",
                    paper.paper_id
                )));
            }
            for review in &paper.reviews {
                if review.paper_id != paper.paper_id {
                    return Err(CorpusError::Inconsistent(format!(
                        "review {} claims paper {} but sits under {}",
                        review.review_id, review.paper_id, paper.paper_id
                    )));
                }
                if !seen.insert(review.review_id.as_str()) {
                    return Err(CorpusError::DuplicateId(review.review_id.clone()));
                }
                validate_comments(review)?;
            }
        }
        let pair_ids: BTreeSet<&str> = self.pairs.iter().map(|p| p.pair_id.as_str()).collect();
        for rpc in &self.rpcs {
            if !pair_ids.contains(rpc.pair_id.as_str()) {
                return Err(CorpusError::Inconsistent(format!(
                    "rpc {} references unknown pair {}",
                    rpc.rpc_id, rpc.pair_id
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn validate_comments(review: &Review) -> Result<(), CorpusError> {
    let mut last_end = 0;
    for comment in &review.comments {
        let span = comment.char_span;
        if comment.text.is_empty() {
            return Err(CorpusError::Inconsistent(format!(
                "comment {} has empty text",
                comment.comment_id
            )));
        }
        if span.start < last_end {
            return Err(CorpusError::Inconsistent(format!(
                "comment {} overlaps or precedes the previous comment",
                comment.comment_id
            )));
        }
        match span.slice(&review.raw_text) {
            Some(slice) if slice == comment.text => {}
            _ => {
                return Err(CorpusError::Inconsistent(format!(
                    "span {}..{} of comment {} does not slice to its text",
                    span.start, span.end, comment.comment_id
                )))
            }
        }
        last_end = span.end;
    }
    Ok(())
}
