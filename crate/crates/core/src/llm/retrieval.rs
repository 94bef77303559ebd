use super::template::{PromptContext, PromptTemplate, TemplateError};
use super::{ClientError, LlmClient, LlmQuery, LlmResponse, QueryKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

pub const LOW_TEMP: f64 = 0.0;
pub const HIGH_TEMP: f64 = 0.9;
pub const MAX_GOAL_TEMP: f64 = 1.0;
pub const GOAL_RESPONSES: usize = 3;
pub const GOAL_ATTEMPTS: usize = 10;
pub const ACTION_RESPONSES: usize = 2;
pub const ACTION_ATTEMPTS: usize = 5;
pub const TOP_WORDS: usize = 5;
pub const KNOWN_WORD_THRESHOLD: f64 = 0.09;
pub const UNKNOWN_WORD_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("client error on attempt {attempt}: {source}")]
    Client { source: ClientError, attempt: usize },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("no first word passed the thresholds")]
    EmptyAfterFiltering { first_words: Vec<WordCandidate> },
}

/// A first-word alternative and the filter's verdict on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordCandidate {
    pub word: String,
    pub probability: f64,
    pub known: bool,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionRetrieval {
    pub first_words: Vec<WordCandidate>,
    pub responses: Vec<LlmResponse>,
}

/// Temperature of the `call`-th query (1-based) in a unique-response loop.
pub fn temperature_for_call(call: usize, max_attempts: usize, kind: QueryKind) -> f64 {
    if call <= 1 {
        LOW_TEMP
    } else if kind == QueryKind::Goal && call as f64 > max_attempts as f64 / 2.0 {
        MAX_GOAL_TEMP
    } else {
        HIGH_TEMP
    }
}

/// Strips whitespace and template delimiters; action completions also stop
/// at the end of their line.
pub fn normalize_response(text: &str, kind: QueryKind) -> String {
    let mut t = text;
    for d in ["(END RESULT)", "(END TASK)"] {
        if let Some(i) = t.find(d) {
            t = &t[..i];
        }
    }
    let mut t = t.trim();
    if kind == QueryKind::Action {
        if let Some(i) = t.find('\n') {
            t = t[..i].trim();
        }
    }
    t.to_string()
}

/// Up to `desired` distinct non-empty responses in at most `max_attempts` calls.
pub fn get_unique_responses(
    prompt: &str,
    desired: usize,
    max_attempts: usize,
    kind: QueryKind,
    client: &mut dyn LlmClient,
) -> Result<Vec<LlmResponse>, GatewayError> {
    let mut out: Vec<LlmResponse> = Vec::new();
    for call in 1..=max_attempts {
        if out.len() >= desired {
            break;
        }
        let query = LlmQuery::completion(prompt, temperature_for_call(call, max_attempts, kind));
        let mut response = client
            .send(&query)
            .map_err(|source| GatewayError::Client { source, attempt: call })?;
        response.text = normalize_response(&response.text, kind);
        if response.text.is_empty() || out.iter().any(|r| r.text == response.text) {
            continue;
        }
        out.push(response);
    }
    Ok(out)
}

pub fn retrieve_potential_goals(
    ctx: &PromptContext,
    client: &mut dyn LlmClient,
) -> Result<Vec<LlmResponse>, GatewayError> {
    let prompt = PromptTemplate::goal().instantiate(ctx)?;
    get_unique_responses(&prompt, GOAL_RESPONSES, GOAL_ATTEMPTS, QueryKind::Goal, client)
}

/// The two-threshold first-word filter.
pub fn keep_first_word(word: &str, probability: f64, known_verbs: &BTreeSet<String>) -> bool {
    if known_verbs.contains(&word.to_lowercase()) {
        probability >= KNOWN_WORD_THRESHOLD
    } else {
        probability >= UNKNOWN_WORD_THRESHOLD
    }
}

/// Candidate next steps for `goal_text`: top first words, filtered, each
/// completed in its own prompt.
pub fn retrieve_actions(
    goal_text: &str,
    ctx: &PromptContext,
    known_verbs: &BTreeSet<String>,
    client: &mut dyn LlmClient,
) -> Result<ActionRetrieval, GatewayError> {
    let template = PromptTemplate::action();
    let base = PromptContext {
        goal_text: Some(goal_text.to_string()),
        partial_word: None,
        ..ctx.clone()
    };
    let prompt = template.instantiate(&base)?;
    let top = client
        .send(&LlmQuery::top_words(prompt))
        .map_err(|source| GatewayError::Client { source, attempt: 1 })?;

    let mut first_words = Vec::new();
    for alt in top.alternatives.iter().take(TOP_WORDS) {
        let word = alt.token.trim().to_string();
        if word.is_empty() {
            continue;
        }
        let probability = alt.logprob.exp();
        first_words.push(WordCandidate {
            known: known_verbs.contains(&word.to_lowercase()),
            kept: keep_first_word(&word, probability, known_verbs),
            word,
            probability,
        });
    }
    if !first_words.iter().any(|w| w.kept) {
        return Err(GatewayError::EmptyAfterFiltering { first_words });
    }

    let mut responses: Vec<LlmResponse> = Vec::new();
    for w in first_words.iter().filter(|w| w.kept) {
        let prompt = template.instantiate(&PromptContext {
            partial_word: Some(w.word.clone()),
            ..base.clone()
        })?;
        for mut r in get_unique_responses(&prompt, ACTION_RESPONSES, ACTION_ATTEMPTS, QueryKind::Action, client)? {
            r.text = format!("{} {}", w.word, r.text);
            if !responses.iter().any(|x| x.text == r.text) {
                responses.push(r);
            }
        }
    }
    Ok(ActionRetrieval { first_words, responses })
}

/// Descending by mean logprob; ties keep retrieval order.
pub fn rank(mut responses: Vec<LlmResponse>) -> Vec<LlmResponse> {
    responses.sort_by(|a, b| b.mean_logprob.total_cmp(&a.mean_logprob));
    responses
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::TokenLogprob;

    /// Replies from a fixed list, cycling, and logs temperatures.
    struct Stub {
        texts: Vec<&'static str>,
        temps: Vec<f64>,
    }

    impl LlmClient for Stub {
        fn send(&mut self, q: &LlmQuery) -> Result<LlmResponse, ClientError> {
            let text = self.texts[self.temps.len() % self.texts.len()];
            self.temps.push(q.temperature);
            Ok(LlmResponse::new(
                text,
                vec![TokenLogprob::new(text, -0.1)],
                q.temperature,
                vec![],
            ))
        }
    }

    #[test]
    fn temperature_schedule_for_duplicates() {
        let mut stub = Stub {
            texts: vec!["same"],
            temps: vec![],
        };
        let out = get_unique_responses("p", 3, 10, QueryKind::Goal, &mut stub).unwrap();
        assert_eq!(out.len(), 1);
        let mut expected = vec![0.0];
        expected.extend([0.9; 4]);
        expected.extend([1.0; 5]);
        assert_eq!(stub.temps, expected);

        let mut stub = Stub {
            texts: vec!["same"],
            temps: vec![],
        };
        get_unique_responses("p", 2, 5, QueryKind::Action, &mut stub).unwrap();
        assert_eq!(stub.temps, vec![0.0, 0.9, 0.9, 0.9, 0.9]);
    }

    #[test]
    fn distinct_texts_stop_early() {
        let mut stub = Stub {
            texts: vec!["a", "b", "c", "d"],
            temps: vec![],
        };
        let out = get_unique_responses("p", 3, 10, QueryKind::Goal, &mut stub).unwrap();
        assert_eq!(out.iter().map(|r| r.text.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        assert_eq!(stub.temps.len(), 3);
    }

    #[test]
    fn empty_completions_are_discarded() {
        let mut stub = Stub {
            texts: vec!["  ", "(END RESULT)"],
            temps: vec![],
        };
        let out = get_unique_responses("p", 3, 10, QueryKind::Goal, &mut stub).unwrap();
        assert!(out.is_empty());
        assert_eq!(stub.temps.len(), 10);
    }

    #[test]
    fn normalization() {
        assert_eq!(
            normalize_response(" The goal is that x(END RESULT)\nSteps:", QueryKind::Goal),
            "The goal is that x"
        );
        assert_eq!(
            normalize_response(" up ceramic-plate\n3. Put", QueryKind::Action),
            "up ceramic-plate"
        );
    }

    #[test]
    fn first_word_filter() {
        let known: BTreeSet<String> = ["open", "pick", "go"].iter().map(|s| s.to_string()).collect();
        let kept: Vec<&str> = [
            ("Open", 0.549),
            ("Pick", 0.206),
            ("Check", 0.067),
            ("Go", 0.065),
            ("If", 0.027),
        ]
        .into_iter()
        .filter(|(w, p)| keep_first_word(w, *p, &known))
        .map(|(w, _)| w)
        .collect();
        assert_eq!(kept, ["Open", "Pick"]);
        assert!(keep_first_word("Take", 0.5, &known));
        assert!(!keep_first_word("Take", 0.49, &known));
    }

    #[test]
    fn rank_is_stable_descending() {
        let r = |t: &str, lp: f64| LlmResponse::new(t, vec![TokenLogprob::new(t, lp)], 0.0, vec![]);
        let ranked = rank(vec![r("a", -0.2), r("b", -0.1), r("c", -0.2), r("d", -0.05)]);
        assert_eq!(
            ranked.iter().map(|r| r.text.as_str()).collect::<Vec<_>>(),
            ["d", "b", "a", "c"]
        );
        assert!(rank(vec![]).is_empty());
    }
}
