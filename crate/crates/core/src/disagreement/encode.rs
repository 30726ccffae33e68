use serde::{Deserialize, Serialize};

use super::DisagreementError;
use crate::text::{tokenize, Vocabulary};

/// Joint encoding `[CLS] a [SEP] b [SEP]` of an ordered comment pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEncoding {
    pub ids: Vec<u32>,
    /// 0 for `[CLS]`, segment a and its `[SEP]`; 1 for segment b and the final `[SEP]`.
    pub segments: Vec<u8>,
    /// Tokens of each segment kept after truncation.
    pub len_a: usize,
    pub len_b: usize,
    pub truncated_a: usize,
    pub truncated_b: usize,
}

impl PairEncoding {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Positions of the segment a tokens.
    pub fn range_a(&self) -> std::ops::Range<usize> {
        1..1 + self.len_a
    }

    pub fn range_b(&self) -> std::ops::Range<usize> {
        2 + self.len_a..2 + self.len_a + self.len_b
    }
}

/// Kept lengths after longest-first truncation to a budget; on ties the second segment shrinks.
pub fn truncate_longest_first(len_a: usize, len_b: usize, budget: usize) -> (usize, usize) {
    let (mut a, mut b) = (len_a, len_b);
    while a + b > budget {
        if a > b {
            a -= 1;
        } else {
            b -= 1;
        }
    }
    (a, b)
}

/// Encodes two comments within `max_tokens`, three of which go to the special markers.
pub fn encode_pair(
    vocabulary: &Vocabulary,
    comment_a: &str,
    comment_b: &str,
    max_tokens: usize,
) -> Result<PairEncoding, DisagreementError> {
    let tokens_a = tokenize(comment_a);
    let tokens_b = tokenize(comment_b);
    if tokens_a.is_empty() || tokens_b.is_empty() {
        return Err(DisagreementError::EmptyText);
    }
    let budget = max_tokens.saturating_sub(3).max(2);
    let (len_a, len_b) = truncate_longest_first(tokens_a.len(), tokens_b.len(), budget);
    let mut ids = Vec::with_capacity(len_a + len_b + 3);
    let mut segments = Vec::with_capacity(ids.capacity());
    ids.push(vocabulary.cls());
    ids.extend(tokens_a[..len_a].iter().map(|t| vocabulary.id(t)));
    ids.push(vocabulary.sep());
    segments.resize(ids.len(), 0);
    ids.extend(tokens_b[..len_b].iter().map(|t| vocabulary.id(t)));
    ids.push(vocabulary.sep());
    segments.resize(ids.len(), 1);
    Ok(PairEncoding {
        ids,
        segments,
        len_a,
        len_b,
        truncated_a: tokens_a.len() - len_a,
        truncated_b: tokens_b.len() - len_b,
    })
}
