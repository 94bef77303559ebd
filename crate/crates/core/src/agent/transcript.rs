//! Session transcripts: an ordered event log plus tallies derived from it.
//!
//! ```json
//! { "schema_version": 1, "condition": "instruction+search2+llm",
//!   "fixture": "plate",
//!   "events": [ {"event":"instructor_yesno", "topic":"goal", ...}, ... ],
//!   "counters": { "llm_queries": 14, ... } }
//! ```
//!
//! `counters` is written for convenience and checked on load; it is
//! always recomputed from `events`.

use super::Condition;
use crate::instructor::{yesno_text, DialogueTurn, Topic, TurnKind};
use crate::language::GoalSource;
use crate::llm::{QueryKind, WordCandidate};
use crate::world::{Category, GoalAssertion, ObjectId, PrimitiveAction};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const TRANSCRIPT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSource {
    Policy,
    Search,
    Llm,
    Instructor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    ObjectStarted {
        task: String,
        object: ObjectId,
        category: Category,
    },
    GoalRecalled {
        task: String,
        category: Category,
        goal: String,
    },
    LlmQuery {
        kind: QueryKind,
        temperature: f64,
        max_tokens: u32,
        top_alternatives: bool,
        prompt_sha256: String,
        text: String,
        mean_logprob: f64,
    },
    LlmFirstWords {
        words: Vec<WordCandidate>,
    },
    LlmCandidateShown {
        kind: QueryKind,
        rank: usize,
        text: String,
        probability: f64,
    },
    InstructorYesno {
        topic: Topic,
        question: String,
        llm_tag: bool,
        answer: bool,
    },
    InstructorUtterance {
        topic: Topic,
        question: String,
        text: String,
        word_count: usize,
    },
    GoalLearned {
        task: String,
        category: Category,
        goal: String,
        source: GoalSource,
    },
    Search {
        object: ObjectId,
        max_depth: usize,
        found: bool,
        plan_length: Option<usize>,
        expanded: u64,
    },
    ActionExecuted {
        action: PrimitiveAction,
        text: String,
        source: ActionSource,
    },
    ActionFailed {
        text: String,
        source: ActionSource,
        reason: String,
    },
    ObjectCompleted {
        object: ObjectId,
    },
    ObjectFailed {
        object: ObjectId,
        reason: String,
    },
    RulesLearned {
        object: ObjectId,
        new_rules: usize,
        total_rules: usize,
    },
    GoalOutcome {
        assertion: GoalAssertion,
        achieved: bool,
    },
}

/// Tallies over a transcript's events.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub llm_queries: usize,
    pub candidates_shown: usize,
    pub yesno_questions: usize,
    pub yes_answers: usize,
    pub utterances: usize,
    pub words: usize,
    pub searches: usize,
    pub actions_executed: usize,
    pub actions_failed: usize,
    pub objects_completed: usize,
    pub objects_failed: usize,
    pub rules_learned: usize,
    pub goals_achieved: usize,
    pub goals_total: usize,
}

impl Counters {
    pub fn from_events(events: &[Event]) -> Counters {
        let mut c = Counters::default();
        for e in events {
            match e {
                Event::LlmQuery { .. } => c.llm_queries += 1,
                Event::LlmCandidateShown { .. } => c.candidates_shown += 1,
                Event::InstructorYesno { answer, .. } => {
                    c.yesno_questions += 1;
                    c.yes_answers += usize::from(*answer);
                }
                Event::InstructorUtterance { word_count, .. } => {
                    c.utterances += 1;
                    c.words += word_count;
                }
                Event::Search { .. } => c.searches += 1,
                Event::ActionExecuted { .. } => c.actions_executed += 1,
                Event::ActionFailed { .. } => c.actions_failed += 1,
                Event::ObjectCompleted { .. } => c.objects_completed += 1,
                Event::ObjectFailed { .. } => c.objects_failed += 1,
                Event::RulesLearned { new_rules, .. } => c.rules_learned += new_rules,
                Event::GoalOutcome { achieved, .. } => {
                    c.goals_total += 1;
                    c.goals_achieved += usize::from(*achieved);
                }
                Event::ObjectStarted { .. }
                | Event::GoalRecalled { .. }
                | Event::LlmFirstWords { .. }
                | Event::GoalLearned { .. } => {}
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    /// `None` for sessions that run purely on learned knowledge.
    pub condition: Option<Condition>,
    pub fixture: String,
    pub events: Vec<Event>,
}

#[derive(Serialize, Deserialize)]
struct TranscriptFile {
    schema_version: u32,
    condition: Option<Condition>,
    fixture: String,
    events: Vec<Event>,
    counters: Counters,
}

impl Transcript {
    pub fn counters(&self) -> Counters {
        Counters::from_events(&self.events)
    }

    /// The dialogue as alternating agent and instructor turns.
    pub fn dialogue(&self) -> Vec<DialogueTurn> {
        let mut out = Vec::new();
        for e in &self.events {
            match e {
                Event::InstructorYesno {
                    question,
                    llm_tag,
                    answer,
                    ..
                } => {
                    out.push(DialogueTurn::agent(TurnKind::YesnoQuestion, question.clone(), *llm_tag));
                    out.push(DialogueTurn::instructor(TurnKind::Answer, yesno_text(*answer)));
                }
                Event::InstructorUtterance { question, text, .. } => {
                    out.push(DialogueTurn::agent(TurnKind::OpenQuestion, question.clone(), false));
                    out.push(DialogueTurn::instructor(TurnKind::Utterance, text.clone()));
                }
                _ => {}
            }
        }
        out
    }

    pub fn executed_actions(&self) -> Vec<(PrimitiveAction, ActionSource)> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::ActionExecuted { action, source, .. } => Some((action.clone(), *source)),
                _ => None,
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let file = TranscriptFile {
            schema_version: TRANSCRIPT_VERSION,
            condition: self.condition,
            fixture: self.fixture.clone(),
            events: self.events.clone(),
            counters: self.counters(),
        };
        serde_json::to_string_pretty(&file).expect("transcripts serialize") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Transcript, String> {
        let file: TranscriptFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if file.schema_version != TRANSCRIPT_VERSION {
            return Err(format!("unsupported transcript version {}", file.schema_version));
        }
        let t = Transcript {
            condition: file.condition,
            fixture: file.fixture,
            events: file.events,
        };
        if t.counters() != file.counters {
            return Err("stored counters disagree with the events".into());
        }
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Transcript, String> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Transcript::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}
