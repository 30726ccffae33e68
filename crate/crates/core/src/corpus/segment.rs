//! Rule-based sentence segmentation of review text.
//!
//! Reviews are split on sentence-final punctuation followed by whitespace, on blank
//! lines, and before bullet or numbered list items. A guard list of abbreviations
//! common in scientific writing ("et al.", "Fig.", "e.g.") suppresses false breaks.
//! All offsets are in Unicode scalar values so spans line up with the corpus format.

use super::types::{CharSpan, ReviewComment};
use super::CorpusError;

/// Lowercased abbreviations (without the final dot) that never end a sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "al", "e.g", "eg", "i.e", "ie", "cf", "vs", "viz", "resp", "approx", "ca", "incl", "esp",
    "fig", "figs", "eq", "eqs", "eqn", "eqns", "sec", "secs", "sect", "tab", "tbl", "ref", "refs",
    "app", "appx", "alg", "algo", "thm", "def", "lem", "prop", "cor", "ch", "chap", "vol", "pp",
    "no", "nos", "dr", "prof", "mr", "mrs", "ms", "st", "w.r.t", "wrt", "i.i.d", "iid", "a.k.a",
    "e.t.c", "u.s", "u.k",
];

/// A sentence splitter. Returned spans must be non-empty, ordered, non-overlapping,
/// and separated only by whitespace.
pub trait Segmenter: Send + Sync {
    fn split(&self, text: &str) -> Vec<CharSpan>;
}

#[derive(Debug, Clone)]
pub struct RuleSegmenter {
    abbreviations: Vec<String>,
}

impl Default for RuleSegmenter {
    fn default() -> Self {
        RuleSegmenter {
            abbreviations: ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl RuleSegmenter {
    pub fn with_extra_abbreviations<I, S>(extra: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seg = Self::default();
        seg.abbreviations
            .extend(extra.into_iter().map(|s| s.into().to_lowercase()));
        seg
    }

    fn is_abbreviation(&self, word: &str) -> bool {
        let lower = word.to_lowercase();
        self.abbreviations.contains(&lower)
    }

    /// Decides whether the terminator run ending at `end` (exclusive) closes a sentence.
    fn is_boundary(&self, chars: &[char], sentence_start: usize, term_start: usize, next: Option<char>) -> bool {
        if let Some(c) = next {
            if c.is_lowercase() {
                return false;
            }
        }
        // only a lone '.' can belong to an abbreviation or list marker
        if chars[term_start] != '.' {
            return true;
        }
        let mut word_start = term_start;
        while word_start > sentence_start
            && (chars[word_start - 1].is_alphanumeric() || chars[word_start - 1] == '.')
        {
            word_start -= 1;
        }
        let word: String = chars[word_start..term_start].iter().collect();
        if word.is_empty() {
            return true;
        }
        if self.is_abbreviation(&word) {
            return false;
        }
        let mut letters = word.chars();
        let single_initial =
            matches!((letters.next(), letters.next()), (Some(c), None) if c.is_uppercase());
        if single_initial && next.is_some_and(char::is_uppercase) {
            return false;
        }
        // "1." or "(a." at the very start of a sentence is a list marker
        let prefix_is_marker = chars[sentence_start..word_start]
            .iter()
            .all(|c| matches!(c, '(' | '[' | '-' | '*' | '•'));
        if prefix_is_marker
            && (word.chars().all(|c| c.is_ascii_digit())
                || (word.chars().count() == 1 && word.chars().all(char::is_lowercase))
                || is_roman(&word))
        {
            return false;
        }
        true
    }
}

fn is_roman(word: &str) -> bool {
    !word.is_empty() && word.len() <= 4 && word.chars().all(|c| matches!(c, 'i' | 'v' | 'x'))
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

fn is_closer(c: char) -> bool {
    matches!(c, ')' | ']' | '"' | '\'' | '”' | '’' | '»')
}

/// True when the line starting at `i` opens with a bullet or a numbered item.
fn starts_list_item(chars: &[char], i: usize) -> bool {
    let mut j = i;
    while j < chars.len() && (chars[j] == ' ' || chars[j] == '\t') {
        j += 1;
    }
    match chars.get(j) {
        Some('-') | Some('*') | Some('•') => chars.get(j + 1).is_some_and(|c| c.is_whitespace()),
        Some(c) if c.is_ascii_digit() => {
            let mut k = j;
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
            matches!(chars.get(k), Some('.') | Some(')'))
                && chars.get(k + 1).is_some_and(|c| c.is_whitespace())
        }
        _ => false,
    }
}

impl Segmenter for RuleSegmenter {
    fn split(&self, text: &str) -> Vec<CharSpan> {
        let chars: Vec<char> = text.chars().collect();
        let n = chars.len();
        let mut spans = Vec::new();
        let mut start: Option<usize> = None;

        let close = |spans: &mut Vec<CharSpan>, s: usize, e: usize| {
            let mut e = e;
            while e > s && chars[e - 1].is_whitespace() {
                e -= 1;
            }
            if e > s {
                spans.push(CharSpan::new(s, e));
            }
        };

        let mut i = 0;
        while i < n {
            let c = chars[i];
            if start.is_none() {
                if !c.is_whitespace() {
                    start = Some(i);
                }
                i += 1;
                continue;
            }
            let s = start.unwrap();
            if c == '\n' {
                let mut j = i + 1;
                while j < n && chars[j] != '\n' && chars[j].is_whitespace() {
                    j += 1;
                }
                let blank_line = j < n && chars[j] == '\n';
                if blank_line || starts_list_item(&chars, i + 1) {
                    close(&mut spans, s, i);
                    start = None;
                }
                i += 1;
                continue;
            }
            if is_terminator(c) {
                let term_start = i;
                let mut j = i;
                while j < n && is_terminator(chars[j]) {
                    j += 1;
                }
                while j < n && is_closer(chars[j]) {
                    j += 1;
                }
                let followed_by_space = j == n || chars[j].is_whitespace();
                if followed_by_space {
                    let mut k = j;
                    while k < n && chars[k].is_whitespace() {
                        k += 1;
                    }
                    let next = chars.get(k).copied();
                    if self.is_boundary(&chars, s, term_start, next) {
                        close(&mut spans, s, j);
                        start = None;
                    }
                }
                i = j;
                continue;
            }
            i += 1;
        }
        if let Some(s) = start {
            close(&mut spans, s, n);
        }
        spans
    }
}

/// Splits a review into comments with ids `c0`, `c1`, ... using the default segmenter.
pub fn segment_review(raw_text: &str) -> Result<Vec<ReviewComment>, CorpusError> {
    segment_with(&RuleSegmenter::default(), "c", raw_text)
}

/// Splits `raw_text` with `segmenter`; comment ids are `{id_prefix}{index}`.
pub fn segment_with(
    segmenter: &dyn Segmenter,
    id_prefix: &str,
    raw_text: &str,
) -> Result<Vec<ReviewComment>, CorpusError> {
    if raw_text.trim().is_empty() {
        return Err(CorpusError::EmptyReview);
    }
    let spans = segmenter.split(raw_text);
    let mut comments = Vec::with_capacity(spans.len());
    for (index, span) in spans.into_iter().enumerate() {
        let text = span
            .slice(raw_text)
            .ok_or_else(|| CorpusError::Inconsistent("segmenter produced an out-of-range span".into()))?;
        comments.push(ReviewComment {
            comment_id: format!("{id_prefix}{index}"),
            text: text.to_string(),
            char_span: span,
            labels: Default::default(),
        });
    }
    Ok(comments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(raw: &str) -> Vec<String> {
        segment_review(raw)
            .unwrap()
            .into_iter()
            .map(|c| c.text)
            .collect()
    }

    #[test]
    fn two_terminated_sentences() {
        assert_eq!(
            texts("The paper is clear. Results are weak."),
            vec!["The paper is clear.", "Results are weak."]
        );
    }

    #[test]
    fn unterminated_text_is_one_comment() {
        assert_eq!(texts("Interesting idea"), vec!["Interesting idea"]);
    }

    #[test]
    fn empty_review_is_rejected() {
        assert!(matches!(segment_review(" \n\t "), Err(CorpusError::EmptyReview)));
    }

    #[test]
    fn abbreviations_do_not_split() {
        assert_eq!(
            texts("As shown by Smith et al. in Fig. 2, the loss drops. See e.g. Sec. 4 for details."),
            vec![
                "As shown by Smith et al. in Fig. 2, the loss drops.",
                "See e.g. Sec. 4 for details."
            ]
        );
    }

    #[test]
    fn lowercase_continuation_does_not_split() {
        assert_eq!(texts("The value is approx. ten. fine"), vec!["The value is approx. ten. fine"]);
    }

    #[test]
    fn closing_quotes_stay_with_the_sentence() {
        assert_eq!(
            texts("They call it \"novel.\" It is not."),
            vec!["They call it \"novel.\"", "It is not."]
        );
    }

    #[test]
    fn paragraphs_and_bullets_split() {
        assert_eq!(
            texts("Summary of claims\n\nPros:\n- clear writing\n- good results\n1. minor typo"),
            vec!["Summary of claims", "Pros:", "- clear writing", "- good results", "1. minor typo"]
        );
    }

    #[test]
    fn numbered_marker_is_not_a_sentence() {
        assert_eq!(
            texts("1. The proof is wrong. 2. The bound is loose."),
            vec!["1. The proof is wrong.", "2. The bound is loose."]
        );
    }

    #[test]
    fn question_and_exclamation_split() {
        assert_eq!(
            texts("Why this loss? It is odd! Fine..."),
            vec!["Why this loss?", "It is odd!", "Fine..."]
        );
    }

    #[test]
    fn extra_abbreviations_are_honoured() {
        let seg = RuleSegmenter::with_extra_abbreviations(["Thm2"]);
        let spans = seg.split("By Thm2. This holds.");
        assert_eq!(spans.len(), 1);
    }

    proptest! {
        #[test]
        fn spans_reconstruct_the_text(raw in "[A-Za-z .!?\n\"()e]{1,120}") {
            prop_assume!(!raw.trim().is_empty());
            let comments = segment_review(&raw).unwrap();
            let chars: Vec<char> = raw.chars().collect();
            let mut cursor = 0;
            for c in &comments {
                prop_assert!(!c.text.is_empty());
                prop_assert!(c.char_span.start >= cursor);
                prop_assert!(chars[cursor..c.char_span.start].iter().all(|ch| ch.is_whitespace()));
                prop_assert_eq!(c.char_span.slice(&raw), Some(c.text.as_str()));
                cursor = c.char_span.end;
            }
            prop_assert!(chars[cursor..].iter().all(|ch| ch.is_whitespace()));
        }
    }
}
