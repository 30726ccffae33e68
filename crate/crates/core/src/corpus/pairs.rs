use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::types::{
    rpc_id, AspectCategory, Corpus, GoldLabel, Paper, Review, ReviewComment, ReviewPair,
    ReviewPairComment, WeakLabel,
};
use super::CorpusError;

/// All `n(n-1)/2` unordered review pairs of a paper, canonical and sorted by id.
pub fn generate_pairs(paper: &Paper) -> Vec<ReviewPair> {
    let mut ids: Vec<&str> = paper.reviews.iter().map(|r| r.review_id.as_str()).collect();
    ids.sort_unstable();
    let mut pairs = Vec::with_capacity(ids.len() * ids.len().saturating_sub(1) / 2);
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            pairs.push(ReviewPair::canonical(&paper.paper_id, a, b));
        }
    }
    pairs
}

fn pair_reviews<'c>(pair: &ReviewPair, corpus: &'c Corpus) -> Result<(&'c Review, &'c Review), CorpusError> {
    let paper = corpus
        .paper(&pair.paper_id)
        .ok_or_else(|| CorpusError::Inconsistent(format!("unknown paper {}", pair.paper_id)))?;
    let find = |id: &str| {
        paper
            .reviews
            .iter()
            .find(|r| r.review_id == id)
            .ok_or_else(|| CorpusError::UnknownReview(id.to_string()))
    };
    Ok((find(&pair.review_a_id)?, find(&pair.review_b_id)?))
}

/// Cross comment pairs of two reviews that share at least one aspect with opposite sentiment.
pub(crate) fn opposed_comment_pairs<'r>(
    a: &'r Review,
    b: &'r Review,
) -> impl Iterator<Item = (&'r ReviewComment, &'r ReviewComment, BTreeSet<AspectCategory>)> + 'r {
    a.comments.iter().flat_map(move |ca| {
        b.comments.iter().filter_map(move |cb| {
            let opposed = ca.labels.opposed_aspects(&cb.labels);
            (!opposed.is_empty()).then_some((ca, cb, opposed))
        })
    })
}

/// Marks a pair `Candidate` when any cross comment pair opposes on a shared aspect,
/// otherwise `NoContradiction`.
pub fn weak_label_pair(pair: &ReviewPair, corpus: &Corpus) -> Result<ReviewPair, CorpusError> {
    let (a, b) = pair_reviews(pair, corpus)?;
    for review in [a, b] {
        if !review.has_labeled_comments() {
            return Err(CorpusError::UnlabeledComments(review.review_id.clone()));
        }
    }
    let label = if opposed_comment_pairs(a, b).next().is_some() {
        WeakLabel::Candidate
    } else {
        WeakLabel::NoContradiction
    };
    Ok(ReviewPair {
        weak_label: Some(label),
        ..pair.clone()
    })
}

/// One RPC per opposed cross comment pair, aspects accumulated, gold label unset.
pub fn compile_rpcs(pair: &ReviewPair, corpus: &Corpus) -> Result<Vec<ReviewPairComment>, CorpusError> {
    if pair.weak_label != Some(WeakLabel::Candidate) {
        return Err(CorpusError::NotACandidate(pair.pair_id.clone()));
    }
    let (a, b) = pair_reviews(pair, corpus)?;
    Ok(opposed_comment_pairs(a, b)
        .map(|(ca, cb, opposed)| ReviewPairComment {
            rpc_id: rpc_id(&ca.comment_id, &cb.comment_id),
            pair_id: pair.pair_id.clone(),
            comment_a_id: ca.comment_id.clone(),
            comment_b_id: cb.comment_id.clone(),
            shared_opposed_aspects: opposed,
            gold_label: None,
        })
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildSummary {
    pub pairs: usize,
    pub candidate_pairs: usize,
    pub no_contradiction_pairs: usize,
    /// Pairs left without a weak label because a review has no labeled comments.
    pub unlabeled_pairs: usize,
    pub rpcs: usize,
}

/// Regenerates pairs, weak labels and RPCs for every paper. Gold labels already
/// present on RPCs with the same id are carried over.
pub fn build_corpus(corpus: &Corpus) -> Result<(Corpus, BuildSummary), CorpusError> {
    let previous: BTreeMap<&str, Option<GoldLabel>> = corpus
        .rpcs
        .iter()
        .map(|r| (r.rpc_id.as_str(), r.gold_label))
        .collect();
    let mut summary = BuildSummary::default();
    let mut pairs = Vec::new();
    let mut rpcs = Vec::new();
    for paper in corpus.papers.values() {
        for pair in generate_pairs(paper) {
            summary.pairs += 1;
            let pair = match weak_label_pair(&pair, corpus) {
                Ok(p) => p,
                Err(CorpusError::UnlabeledComments(_)) => {
                    summary.unlabeled_pairs += 1;
                    pairs.push(pair);
                    continue;
                }
                Err(e) => return Err(e),
            };
            match pair.weak_label {
                Some(WeakLabel::Candidate) => {
                    summary.candidate_pairs += 1;
                    for mut rpc in compile_rpcs(&pair, corpus)? {
                        rpc.gold_label = previous.get(rpc.rpc_id.as_str()).copied().flatten();
                        rpcs.push(rpc);
                    }
                }
                _ => summary.no_contradiction_pairs += 1,
            }
            pairs.push(pair);
        }
    }
    summary.rpcs = rpcs.len();
    Ok((
        Corpus {
            papers: corpus.papers.clone(),
            pairs,
            rpcs,
        },
        summary,
    ))
}
