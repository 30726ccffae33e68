use serde::{Deserialize, Serialize};

use crate::metrics::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParsedVerdict {
    Contradiction,
    NonContradiction,
    Unparseable,
}

impl ParsedVerdict {
    /// Unparseable answers score as NonContradiction.
    pub fn scored(self) -> Verdict {
        match self {
            ParsedVerdict::Contradiction => Verdict::Contradiction,
            _ => Verdict::NonContradiction,
        }
    }
}

const AFFIRMATIVE: &[&str] = &["yes", "yeah", "yep", "affirmative", "correct", "true", "indeed", "absolutely"];
const NEGATIVE: &[&str] = &["no", "nope", "not", "negative", "false", "none"];
const NEGATION_CUES: &[&str] = &["no", "not", "never", "neither", "nor", "without", "don't", "doesn't", "didn't", "isn't", "aren't", "cannot", "can't"];
/// Words before a "contradict" mention that are checked for negation.
const NEGATION_WINDOW: usize = 3;

fn words(clause: &str) -> Vec<String> {
    clause
        .split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '’'))
        .filter(|w| !w.is_empty())
        .map(|w| w.replace('’', "'").to_lowercase())
        .collect()
}

/// Whether "contradict…" occurs without a nearby negation, and whether it occurs negated.
fn contradiction_mentions(text: &str) -> (bool, bool) {
    let mut affirmed = false;
    let mut negated = false;
    for clause in text.split(['.', ';', ',', '!', '?', ':', '\n']) {
        let ws = words(clause);
        for (i, w) in ws.iter().enumerate() {
            if !w.starts_with("contradict") {
                continue;
            }
            let window = &ws[i.saturating_sub(NEGATION_WINDOW)..i];
            if window.iter().any(|p| NEGATION_CUES.contains(&p.as_str())) {
                negated = true;
            } else {
                affirmed = true;
            }
        }
    }
    (affirmed, negated)
}

/// Maps a free-text answer to a verdict. A leading affirmative word or an
/// un-negated "contradict" means Contradiction; otherwise a leading negative
/// word or a negated "contradiction" means NonContradiction.
pub fn parse_verdict(response: &str) -> ParsedVerdict {
    let leading = words(response).into_iter().next().unwrap_or_default();
    let (affirmed, negated) = contradiction_mentions(response);
    let leads_negative = NEGATIVE.contains(&leading.as_str());
    if AFFIRMATIVE.contains(&leading.as_str()) || (affirmed && !leads_negative) {
        ParsedVerdict::Contradiction
    } else if leads_negative || negated {
        ParsedVerdict::NonContradiction
    } else {
        ParsedVerdict::Unparseable
    }
}
