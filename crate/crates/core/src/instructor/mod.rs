//! The instructor side of the dialogue.
//!
//! Every source of instruction implements [`Instructor`]: a scripted
//! instructor replaying an answer file, an oracle that answers from a
//! fixture's hidden answer key (used to author scripts), a terminal
//! instructor, and a channel instructor fed by the WebSocket console.

mod oracle;
mod script;
pub mod server;
mod terminal;

pub use oracle::OracleInstructor;
pub use script::{ActionKey, Decision, GoalKey, Script, ScriptRecorder, ScriptedInstructor};
pub use terminal::TerminalInstructor;

use crate::world::{Category, ObjectId, WorldState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// What a question is about; selects the script section that answers it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topic {
    TaskName,
    Subtask,
    Goal,
    Action,
}

/// A question from the agent together with the keys a script needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub topic: Topic,
    pub text: String,
    /// Set when the question presents language-model content.
    pub llm_tag: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<ObjectId>,
    /// 1-based index of the next action for the object.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    /// Candidate text under a yes/no question.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
}

impl Question {
    pub fn open(topic: Topic, text: impl Into<String>) -> Question {
        Question {
            topic,
            text: text.into(),
            llm_tag: false,
            task: None,
            category: None,
            object: None,
            step: None,
            candidate: None,
            probability: None,
        }
    }

    /// Script key for goal and action questions.
    pub fn key(&self) -> String {
        let task = self.task.as_deref().unwrap_or("-");
        let cat = self.category.as_ref().map(Category::as_str).unwrap_or("-");
        match self.topic {
            Topic::TaskName => "task_name".into(),
            Topic::Subtask => "subtask".into(),
            Topic::Goal => format!("goal/{task}/{cat}"),
            Topic::Action => format!("action/{task}/{cat}/{}", self.step.unwrap_or(0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AgentToInstructor,
    InstructorToAgent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnKind {
    YesnoQuestion,
    OpenQuestion,
    Answer,
    Utterance,
}

/// One line of the dialogue as a person reads it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueTurn {
    pub direction: Direction,
    pub kind: TurnKind,
    pub text: String,
    #[serde(default)]
    pub llm_tag: bool,
}

impl DialogueTurn {
    pub fn agent(kind: TurnKind, text: impl Into<String>, llm_tag: bool) -> DialogueTurn {
        DialogueTurn {
            direction: Direction::AgentToInstructor,
            kind,
            text: text.into(),
            llm_tag,
        }
    }

    pub fn instructor(kind: TurnKind, text: impl Into<String>) -> DialogueTurn {
        DialogueTurn {
            direction: Direction::InstructorToAgent,
            kind,
            text: text.into(),
            llm_tag: false,
        }
    }

    /// "Agent: ..." / "Instructor: ..."
    pub fn line(&self) -> String {
        let who = match self.direction {
            Direction::AgentToInstructor => "Agent",
            Direction::InstructorToAgent => "Instructor",
        };
        format!("{who}: {}", self.text)
    }
}

/// "yes." / "no." as the instructor's reply turn.
pub fn yesno_text(answer: bool) -> &'static str {
    if answer {
        "yes."
    } else {
        "no."
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstructorError {
    #[error("script has no answer for `{key}`")]
    ScriptGap { key: String },
    #[error("no answer within {0} s")]
    Timeout(u64),
    #[error("instructor session closed: {0}")]
    Closed(String),
    #[error("instructor io: {0}")]
    Io(String),
    #[error("answer key cannot answer `{key}`: {reason}")]
    Unanswerable { key: String, reason: String },
}

/// A source of answers. `world` is what the instructor can see.
pub trait Instructor {
    fn ask_yesno(&mut self, question: &Question, world: &WorldState) -> Result<bool, InstructorError>;

    fn ask_open(&mut self, question: &Question, world: &WorldState) -> Result<String, InstructorError>;

    /// Called with the ranked candidates before they are asked one by one.
    fn show_candidates(&mut self, _topic: Topic, _candidates: &[(String, f64)]) {}
}

impl<I: Instructor + ?Sized> Instructor for &mut I {
    fn ask_yesno(&mut self, question: &Question, world: &WorldState) -> Result<bool, InstructorError> {
        (**self).ask_yesno(question, world)
    }

    fn ask_open(&mut self, question: &Question, world: &WorldState) -> Result<String, InstructorError> {
        (**self).ask_open(question, world)
    }

    fn show_candidates(&mut self, topic: Topic, candidates: &[(String, f64)]) {
        (**self).show_candidates(topic, candidates)
    }
}

impl<I: Instructor + ?Sized> Instructor for Box<I> {
    fn ask_yesno(&mut self, question: &Question, world: &WorldState) -> Result<bool, InstructorError> {
        (**self).ask_yesno(question, world)
    }

    fn ask_open(&mut self, question: &Question, world: &WorldState) -> Result<String, InstructorError> {
        (**self).ask_open(question, world)
    }

    fn show_candidates(&mut self, topic: Topic, candidates: &[(String, f64)]) {
        (**self).show_candidates(topic, candidates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys() {
        let mut q = Question::open(Topic::Action, "What do I do next for clear?");
        q.task = Some("clear".into());
        q.category = Some(Category::new("ceramic-plate"));
        q.step = Some(3);
        assert_eq!(q.key(), "action/clear/ceramic-plate/3");
        q.topic = Topic::Goal;
        assert_eq!(q.key(), "goal/clear/ceramic-plate");
    }

    #[test]
    fn turn_lines() {
        assert_eq!(
            DialogueTurn::instructor(TurnKind::Answer, yesno_text(false)).line(),
            "Instructor: no."
        );
    }
}
