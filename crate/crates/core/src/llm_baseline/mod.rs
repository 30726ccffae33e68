//! Zero-shot contradiction judgments from a hosted chat model, with a response
//! cache so repeated runs are reproducible and cheap.

mod client;
mod verdict;

pub use client::{
    cache_key, CacheEntry, CallFailure, ChatService, Clock, HttpChatService, LlmClient, LlmClientConfig,
    SystemClock, VirtualClock,
};
pub use verdict::{parse_verdict, ParsedVerdict};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disagreement::LabeledPair;
use crate::metrics::{compute_metrics, MetricsReport, Verdict};

pub const DEFAULT_TEMPLATE: &str = "Do these two peer-review comments contradict each other? \
Answer Yes or No, then explain. Review 1: {review1} Review 2: {review2}";
pub const DEFAULT_TEMPLATE_VERSION: &str = "yes-no-v1";

const REVIEW1: &str = "{review1}";
const REVIEW2: &str = "{review2}";

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("template must contain {0} exactly once")]
    MissingPlaceholder(&'static str),
    #[error("credential environment variable {0} is not set")]
    AuthError(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimitExhausted { attempts: u32 },
    #[error("chat service error: {0}")]
    ServiceError(String),
    #[error("invalid client configuration: {0}")]
    InvalidConfig(String),
    #[error("nothing to evaluate")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub text: String,
    pub version: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            text: DEFAULT_TEMPLATE.into(),
            version: DEFAULT_TEMPLATE_VERSION.into(),
        }
    }
}

impl PromptTemplate {
    pub fn new(text: impl Into<String>, version: impl Into<String>) -> Result<Self, LlmError> {
        let template = PromptTemplate {
            text: text.into(),
            version: version.into(),
        };
        template.validate()?;
        Ok(template)
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        for placeholder in [REVIEW1, REVIEW2] {
            if self.text.matches(placeholder).count() != 1 {
                return Err(LlmError::MissingPlaceholder(placeholder));
            }
        }
        Ok(())
    }
}

/// Substitutes both placeholders verbatim in a single pass, so review text that
/// itself contains a placeholder is left alone.
pub fn build_prompt(template: &PromptTemplate, review1: &str, review2: &str) -> Result<String, LlmError> {
    template.validate()?;
    let text = &template.text;
    let i1 = text.find(REVIEW1).expect("validated");
    let i2 = text.find(REVIEW2).expect("validated");
    let (first, first_value, second, second_value) = if i1 < i2 {
        ((i1, REVIEW1.len()), review1, (i2, REVIEW2.len()), review2)
    } else {
        ((i2, REVIEW2.len()), review2, (i1, REVIEW1.len()), review1)
    };
    let mut out = String::with_capacity(text.len() + review1.len() + review2.len());
    out.push_str(&text[..first.0]);
    out.push_str(first_value);
    out.push_str(&text[first.0 + first.1..second.0]);
    out.push_str(second_value);
    out.push_str(&text[second.0 + second.1..]);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemVerdict {
    pub id: String,
    pub gold: Verdict,
    pub parsed: ParsedVerdict,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRunManifest {
    pub model: String,
    pub endpoint: String,
    pub template_version: String,
    pub timestamp: DateTime<Utc>,
    pub items: usize,
    pub network_calls: usize,
    pub cache_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmEvaluation {
    pub metrics: MetricsReport,
    pub verdicts: Vec<ItemVerdict>,
    /// Answers that matched no rule; scored as NonContradiction.
    pub unparseable: Vec<String>,
    pub manifest: LlmRunManifest,
}

/// Asks the model about every labeled pair and scores the parsed answers.
pub fn evaluate_llm(client: &LlmClient, template: &PromptTemplate, items: &[LabeledPair]) -> Result<LlmEvaluation, LlmError> {
    if items.is_empty() {
        return Err(LlmError::Empty);
    }
    let calls_before = client.network_calls();
    let hits_before = client.cache_hits();
    let mut verdicts = Vec::with_capacity(items.len());
    for item in items {
        let prompt = build_prompt(template, &item.text_a, &item.text_b)?;
        let response = client.query(&prompt)?;
        verdicts.push(ItemVerdict {
            id: item.id.clone(),
            gold: item.label,
            parsed: parse_verdict(&response),
            response,
        });
    }
    let gold: Vec<Verdict> = verdicts.iter().map(|v| v.gold).collect();
    let pred: Vec<Verdict> = verdicts.iter().map(|v| v.parsed.scored()).collect();
    let metrics = compute_metrics(&gold, &pred).map_err(|_| LlmError::Empty)?;
    Ok(LlmEvaluation {
        metrics,
        unparseable: verdicts
            .iter()
            .filter(|v| v.parsed == ParsedVerdict::Unparseable)
            .map(|v| v.id.clone())
            .collect(),
        manifest: LlmRunManifest {
            model: client.config.model.clone(),
            endpoint: client.config.endpoint.clone(),
            template_version: template.version.clone(),
            timestamp: Utc::now(),
            items: items.len(),
            network_calls: client.network_calls() - calls_before,
            cache_hits: client.cache_hits() - hits_before,
        },
        verdicts,
    })
}
