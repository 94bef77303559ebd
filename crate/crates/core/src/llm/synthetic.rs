//! A deterministic stand-in for a completion model, driven by per-category
//! "model cards". It reads the object and goal back out of the prompt and
//! answers in the style of the prompt examples. Cards pin exact candidate
//! lists and probabilities where a scenario needs them; otherwise the next
//! step is derived from the goal stated in the prompt.
//!
//! Used to author cassettes; tests and experiments replay those cassettes.

use super::{ClientError, LlmClient, LlmQuery, LlmResponse, TokenLogprob};
use crate::language::{parse_goal, GoalPredicate, GoalSource, Term};
use crate::lexicon::Lexicon;
use crate::world::{Category, Property};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

const BUILTIN: &str = include_str!("../../data/models/kitchen_cards.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordProb {
    pub word: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalCard {
    pub text: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionCard {
    pub text: String,
    pub prob: f64,
}

/// Pinned answers for the step with a given number of prior steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCard {
    pub words: Vec<WordProb>,
    #[serde(default)]
    pub completions: BTreeMap<String, CompletionCard>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryCard {
    #[serde(default)]
    pub goals: Vec<GoalCard>,
    #[serde(default)]
    pub steps: Vec<StepCard>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCards {
    pub schema_version: u32,
    /// Probability of the verb that begins the expected next step.
    pub main_word_prob: f64,
    /// Filler first words, most likely first.
    pub first_word_noise: Vec<WordProb>,
    pub completion_prob: f64,
    pub cards: BTreeMap<Category, CategoryCard>,
}

impl ModelCards {
    pub fn builtin() -> ModelCards {
        ModelCards::from_json(BUILTIN).expect("builtin model cards are valid")
    }

    pub fn from_json(text: &str) -> Result<ModelCards, String> {
        let cards: ModelCards = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if cards.schema_version != 1 {
            return Err(format!("unsupported model card version {}", cards.schema_version));
        }
        Ok(cards)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<ModelCards, String> {
        let path = path.as_ref();
        ModelCards::from_json(&std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?)
    }
}

/// What the synthetic model reads out of a prompt.
#[derive(Debug, Clone, PartialEq)]
struct PromptView {
    object: Category,
    goal_text: Option<String>,
    prior_steps: Vec<String>,
    partial_word: Option<String>,
}

fn read_prompt(prompt: &str) -> Option<PromptView> {
    let task = &prompt[prompt.rfind("(TASK) Task name:")?..];
    let aware = &task[task.find("Aware of ")? + "Aware of ".len()..];
    let object = Category::new(aware.split_whitespace().next()?.trim_end_matches('.'));
    let after_result = &task[task.find("(RESULT)")? + "(RESULT)".len()..];
    if after_result.is_empty() {
        return Some(PromptView {
            object,
            goal_text: None,
            prior_steps: vec![],
            partial_word: None,
        });
    }
    let end = after_result.find("(END RESULT)")?;
    let goal_text = after_result[..end].trim().to_string();
    let steps = after_result[end..].split_once("Steps:\n")?.1;
    let mut prior_steps = Vec::new();
    let mut partial_word = None;
    let lines: Vec<&str> = steps.split('\n').collect();
    for (i, line) in lines.iter().enumerate() {
        let (_, rest) = line.split_once('.')?;
        let rest = rest.trim();
        if i + 1 == lines.len() {
            partial_word = (!rest.is_empty()).then(|| rest.to_string());
        } else {
            prior_steps.push(rest.to_string());
        }
    }
    Some(PromptView {
        object,
        goal_text: Some(goal_text),
        prior_steps,
        partial_word,
    })
}

fn tokens_for(text: &str, prob: f64) -> Vec<TokenLogprob> {
    let lp = prob.ln();
    let mut out = Vec::new();
    for (i, w) in text.split_whitespace().enumerate() {
        let token = if i == 0 && !text.starts_with(' ') {
            w.to_string()
        } else {
            format!(" {w}")
        };
        out.push(TokenLogprob::new(token, lp));
    }
    out
}

fn same_step(a: &str, b: &str) -> bool {
    let norm = |s: &str| s.trim().trim_end_matches('.').to_lowercase();
    norm(a) == norm(b)
}

pub struct SyntheticModel {
    cards: ModelCards,
    lexicon: Lexicon,
    calls: HashMap<String, usize>,
}

impl SyntheticModel {
    pub fn new(cards: ModelCards, lexicon: Lexicon) -> SyntheticModel {
        SyntheticModel {
            cards,
            lexicon,
            calls: HashMap::new(),
        }
    }

    pub fn builtin() -> SyntheticModel {
        SyntheticModel::new(ModelCards::builtin(), Lexicon::builtin())
    }

    /// Steps a model would list for the goal, as imperative text.
    fn canonical_steps(&self, view: &PromptView) -> Vec<String> {
        let Some(text) = &view.goal_text else { return vec![] };
        let Ok(goal) = parse_goal(text, Some(&view.object), GoalSource::Llm, &self.lexicon) else {
            return vec![];
        };
        let mut steps = Vec::new();
        let mut closes = Vec::new();
        for p in &goal.predicates {
            if let GoalPredicate::Property {
                subject: Term::Category(c),
                property: Property::Closed,
            } = p
            {
                steps.push(format!("Open {c}"));
                closes.push(format!("Close {c}"));
            }
        }
        for p in &goal.predicates {
            if let GoalPredicate::In {
                subject: Term::Object,
                container,
            } = p
            {
                steps.push(format!("Pick up {}", view.object));
                steps.push(format!("Put {} into {container}", view.object));
            }
        }
        steps.extend(closes);
        steps
    }

    fn next_steps(&self, view: &PromptView) -> Vec<String> {
        self.canonical_steps(view)
            .into_iter()
            .filter(|s| !view.prior_steps.iter().any(|p| same_step(p, s)))
            .collect()
    }

    fn pinned_step(&self, view: &PromptView) -> Option<&StepCard> {
        self.cards.cards.get(&view.object)?.steps.get(view.prior_steps.len())
    }

    fn first_words(&self, view: &PromptView) -> Vec<WordProb> {
        if let Some(step) = self.pinned_step(view) {
            return step.words.clone();
        }
        let mut words = Vec::new();
        if let Some(main) = self.next_steps(view).first().and_then(|s| s.split_whitespace().next()) {
            words.push(WordProb {
                word: main.to_string(),
                prob: self.cards.main_word_prob,
            });
        }
        for n in &self.cards.first_word_noise {
            if words.len() == 5 {
                break;
            }
            if !words.iter().any(|w| w.word.eq_ignore_ascii_case(&n.word)) {
                words.push(n.clone());
            }
        }
        words.sort_by(|a, b| b.prob.total_cmp(&a.prob));
        words
    }

    fn completion(&self, view: &PromptView, word: &str) -> Option<CompletionCard> {
        if let Some(c) = self.pinned_step(view).and_then(|s| s.completions.get(word)) {
            return Some(c.clone());
        }
        let step = self.next_steps(view).into_iter().find(|s| {
            s.split_whitespace()
                .next()
                .is_some_and(|w| w.eq_ignore_ascii_case(word))
        })?;
        let rest = step.split_once(' ').map(|(_, r)| r.to_string()).unwrap_or_default();
        Some(CompletionCard {
            text: format!(" {rest}"),
            prob: self.cards.completion_prob,
        })
    }
}

impl LlmClient for SyntheticModel {
    fn send(&mut self, query: &LlmQuery) -> Result<LlmResponse, ClientError> {
        let n = {
            let c = self.calls.entry(query.prompt.clone()).or_insert(0);
            *c += 1;
            *c - 1
        };
        let empty = || LlmResponse::new("", vec![], query.temperature, vec![]);
        let Some(view) = read_prompt(&query.prompt) else {
            return Ok(empty());
        };

        if query.want_top_alternatives {
            let words = self.first_words(&view);
            let alternatives: Vec<TokenLogprob> = words
                .iter()
                .map(|w| TokenLogprob::new(format!(" {}", w.word), w.prob.ln()))
                .collect();
            let Some(top) = alternatives.first().cloned() else {
                return Ok(empty());
            };
            return Ok(LlmResponse::new(
                top.token.clone(),
                vec![top],
                query.temperature,
                alternatives,
            ));
        }

        if view.goal_text.is_none() {
            let Some(goals) = self
                .cards
                .cards
                .get(&view.object)
                .map(|c| &c.goals)
                .filter(|g| !g.is_empty())
            else {
                return Ok(empty());
            };
            let g = if query.temperature == 0.0 {
                &goals[0]
            } else {
                &goals[n % goals.len()]
            };
            return Ok(LlmResponse::new(
                g.text.clone(),
                tokens_for(&g.text, g.prob),
                query.temperature,
                vec![],
            ));
        }

        let Some(word) = view.partial_word.clone() else {
            return Ok(empty());
        };
        match self.completion(&view, &word) {
            Some(c) => Ok(LlmResponse::new(
                format!("{}\n", c.text),
                tokens_for(&c.text, c.prob),
                query.temperature,
                vec![],
            )),
            None => Ok(empty()),
        }
    }
}
