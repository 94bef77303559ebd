//! Language-model access: prompt templates, the unique-response loop, goal
//! and action retrieval, and pluggable clients (live HTTP, cassette
//! record/replay, and a deterministic synthetic model).

mod cassette;
mod live;
mod retrieval;
mod synthetic;
mod template;

pub use cassette::{fingerprint, Cassette, CassetteClient, CassetteEntry, CassetteMode};
pub use live::{LiveClient, LiveConfig};
pub use retrieval::{
    get_unique_responses, keep_first_word, normalize_response, rank, retrieve_actions, retrieve_potential_goals,
    temperature_for_call, ActionRetrieval, GatewayError, WordCandidate, ACTION_ATTEMPTS, ACTION_RESPONSES,
    GOAL_ATTEMPTS, GOAL_RESPONSES, HIGH_TEMP, KNOWN_WORD_THRESHOLD, LOW_TEMP, MAX_GOAL_TEMP, TOP_WORDS,
    UNKNOWN_WORD_THRESHOLD,
};
pub use synthetic::{CompletionCard, GoalCard, ModelCards, StepCard, SyntheticModel};
pub use template::{PromptContext, PromptTemplate, TemplateError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which retrieval loop a query belongs to; goals may escalate to 1.0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Goal,
    Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmQuery {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Single-token mode returning the top alternatives with logprobs.
    pub want_top_alternatives: bool,
}

impl LlmQuery {
    pub fn completion(prompt: impl Into<String>, temperature: f64) -> LlmQuery {
        LlmQuery {
            prompt: prompt.into(),
            temperature,
            max_tokens: 64,
            want_top_alternatives: false,
        }
    }

    pub fn top_words(prompt: impl Into<String>) -> LlmQuery {
        LlmQuery {
            prompt: prompt.into(),
            temperature: 0.0,
            max_tokens: 1,
            want_top_alternatives: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprob {
    pub token: String,
    pub logprob: f64,
}

impl TokenLogprob {
    pub fn new(token: impl Into<String>, logprob: f64) -> Self {
        TokenLogprob {
            token: token.into(),
            logprob,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub text: String,
    pub tokens: Vec<TokenLogprob>,
    pub temperature: f64,
    pub mean_logprob: f64,
    /// Top alternatives for the first token, single-token mode only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alternatives: Vec<TokenLogprob>,
}

impl LlmResponse {
    /// Builds a response whose mean is computed from `tokens` (0 when empty).
    pub fn new(
        text: impl Into<String>,
        tokens: Vec<TokenLogprob>,
        temperature: f64,
        alternatives: Vec<TokenLogprob>,
    ) -> LlmResponse {
        let mean_logprob = mean_logprob(&tokens);
        LlmResponse {
            text: text.into(),
            tokens,
            temperature,
            mean_logprob,
            alternatives,
        }
    }

    /// exp(mean logprob), the value shown to people.
    pub fn probability(&self) -> f64 {
        self.mean_logprob.exp()
    }
}

pub fn mean_logprob(tokens: &[TokenLogprob]) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    tokens.iter().map(|t| t.logprob).sum::<f64>() / tokens.len() as f64
}

/// `0.915` style rendering used in dialogue and reports.
pub fn format_probability(p: f64) -> String {
    format!("{p:.3}")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClientError {
    #[error("request timed out")]
    Timeout,
    #[error("rate limited (retry after {retry_after_secs:?} s)")]
    RateLimited { retry_after_secs: Option<f64> },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("cassette mismatch: {0}")]
    Mismatch(String),
}

/// Anything that answers completion queries.
pub trait LlmClient {
    fn send(&mut self, query: &LlmQuery) -> Result<LlmResponse, ClientError>;
}

impl<C: LlmClient + ?Sized> LlmClient for &mut C {
    fn send(&mut self, query: &LlmQuery) -> Result<LlmResponse, ClientError> {
        (**self).send(query)
    }
}

impl<C: LlmClient + ?Sized> LlmClient for Box<C> {
    fn send(&mut self, query: &LlmQuery) -> Result<LlmResponse, ClientError> {
        (**self).send(query)
    }
}

/// One client call as seen by a [`CallLog`].
#[derive(Debug, Clone, PartialEq)]
pub struct CallRecord {
    pub query: LlmQuery,
    pub result: Result<LlmResponse, ClientError>,
}

/// Wraps a client and remembers every call.
pub struct CallLog<C> {
    pub inner: C,
    pub calls: Vec<CallRecord>,
}

impl<C: LlmClient> CallLog<C> {
    pub fn new(inner: C) -> Self {
        CallLog {
            inner,
            calls: Vec::new(),
        }
    }

    pub fn drain(&mut self) -> Vec<CallRecord> {
        std::mem::take(&mut self.calls)
    }
}

impl<C: LlmClient> LlmClient for CallLog<C> {
    fn send(&mut self, query: &LlmQuery) -> Result<LlmResponse, ClientError> {
        let result = self.inner.send(query);
        self.calls.push(CallRecord {
            query: query.clone(),
            result: result.clone(),
        });
        result
    }
}

/// Client for conditions without a language model; every call fails.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoModel;

impl LlmClient for NoModel {
    fn send(&mut self, _query: &LlmQuery) -> Result<LlmResponse, ClientError> {
        Err(ClientError::Protocol("no language model configured".into()))
    }
}
