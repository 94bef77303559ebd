//! Instructor script files.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "task_intro": ["Tidy the kitchen.", "Clear the table.", "Done."],
//!   "goals": [
//!     { "task": "clear", "category": "ceramic-plate",
//!       "decisions": [ { "candidate": "The goal is that ...", "yes": false } ],
//!       "fallback": "If the object is a ceramic-plate then the goal is ..." }
//!   ],
//!   "actions": [
//!     { "task": "clear", "category": "ceramic-plate", "step": 1,
//!       "decisions": [ { "candidate": "Open dishwasher", "yes": true } ] }
//!   ]
//! }
//! ```
//!
//! Yes/no decisions are keyed by candidate text under a (task, category)
//! or (task, category, step) key; `fallback` answers the open question.
//! `task_intro` is consumed in order by task-name and subtask questions.

use super::{Instructor, InstructorError, Question, Topic};
use crate::world::{Category, WorldState};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCRIPT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decision {
    pub candidate: String,
    pub yes: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalKey {
    pub task: String,
    pub category: Category,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub decisions: Vec<Decision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionKey {
    pub task: String,
    pub category: Category,
    pub step: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub decisions: Vec<Decision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    pub schema_version: u32,
    pub task_intro: Vec<String>,
    #[serde(default)]
    pub goals: Vec<GoalKey>,
    #[serde(default)]
    pub actions: Vec<ActionKey>,
}

impl Default for Script {
    fn default() -> Self {
        Script {
            schema_version: SCRIPT_VERSION,
            task_intro: Vec::new(),
            goals: Vec::new(),
            actions: Vec::new(),
        }
    }
}

/// The decisions and fallback stored under one question key.
struct Entry<'a> {
    decisions: &'a [Decision],
    fallback: Option<&'a str>,
}

impl Script {
    pub fn from_json(text: &str) -> Result<Script, String> {
        let script: Script = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if script.schema_version != SCRIPT_VERSION {
            return Err(format!("unsupported script version {}", script.schema_version));
        }
        Ok(script)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Script, String> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Script::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("script serializes") + "\n"
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    fn entry(&self, q: &Question) -> Option<Entry<'_>> {
        let task = q.task.as_deref()?;
        let cat = q.category.as_ref()?;
        match q.topic {
            Topic::Goal => self
                .goals
                .iter()
                .find(|g| g.task == task && &g.category == cat)
                .map(|g| Entry {
                    decisions: &g.decisions,
                    fallback: g.fallback.as_deref(),
                }),
            Topic::Action => {
                let step = q.step?;
                self.actions
                    .iter()
                    .find(|a| a.task == task && &a.category == cat && a.step == step)
                    .map(|a| Entry {
                        decisions: &a.decisions,
                        fallback: a.fallback.as_deref(),
                    })
            }
            Topic::TaskName | Topic::Subtask => None,
        }
    }

    fn decisions_mut(&mut self, q: &Question) -> Option<(&mut Vec<Decision>, &mut Option<String>)> {
        let task = q.task.clone()?;
        let cat = q.category.clone()?;
        match q.topic {
            Topic::Goal => {
                let i = match self.goals.iter().position(|g| g.task == task && g.category == cat) {
                    Some(i) => i,
                    None => {
                        self.goals.push(GoalKey {
                            task,
                            category: cat,
                            decisions: Vec::new(),
                            fallback: None,
                        });
                        self.goals.len() - 1
                    }
                };
                let g = &mut self.goals[i];
                Some((&mut g.decisions, &mut g.fallback))
            }
            Topic::Action => {
                let step = q.step?;
                let i = match self
                    .actions
                    .iter()
                    .position(|a| a.task == task && a.category == cat && a.step == step)
                {
                    Some(i) => i,
                    None => {
                        self.actions.push(ActionKey {
                            task,
                            category: cat,
                            step,
                            decisions: Vec::new(),
                            fallback: None,
                        });
                        self.actions.len() - 1
                    }
                };
                let a = &mut self.actions[i];
                Some((&mut a.decisions, &mut a.fallback))
            }
            Topic::TaskName | Topic::Subtask => None,
        }
    }
}

/// Answers from a [`Script`]; any miss is a [`InstructorError::ScriptGap`].
#[derive(Debug, Clone)]
pub struct ScriptedInstructor {
    script: Script,
    intro_cursor: usize,
}

impl ScriptedInstructor {
    pub fn new(script: Script) -> Self {
        ScriptedInstructor {
            script,
            intro_cursor: 0,
        }
    }

    pub fn script(&self) -> &Script {
        &self.script
    }
}

fn gap(key: String) -> InstructorError {
    InstructorError::ScriptGap { key }
}

impl Instructor for ScriptedInstructor {
    fn ask_yesno(&mut self, q: &Question, _world: &WorldState) -> Result<bool, InstructorError> {
        let candidate = q.candidate.as_deref().unwrap_or(&q.text);
        let key = format!("{} [{candidate}]", q.key());
        let entry = self.script.entry(q).ok_or_else(|| gap(key.clone()))?;
        entry
            .decisions
            .iter()
            .find(|d| d.candidate == candidate)
            .map(|d| d.yes)
            .ok_or_else(|| gap(key))
    }

    fn ask_open(&mut self, q: &Question, _world: &WorldState) -> Result<String, InstructorError> {
        let text = match q.topic {
            Topic::TaskName | Topic::Subtask => {
                let i = self.intro_cursor;
                self.intro_cursor += 1;
                self.script
                    .task_intro
                    .get(i)
                    .cloned()
                    .ok_or_else(|| gap(format!("task_intro[{i}]")))?
            }
            Topic::Goal | Topic::Action => self
                .script
                .entry(q)
                .and_then(|e| e.fallback.map(str::to_string))
                .ok_or_else(|| gap(q.key()))?,
        };
        if text.trim().is_empty() {
            return Err(gap(q.key()));
        }
        Ok(text)
    }
}

/// Wraps an instructor and writes every answer into a [`Script`].
///
/// Conflicting answers under one key are reported as errors so that an
/// authored script never depends on question order.
pub struct ScriptRecorder<I> {
    inner: I,
    script: Script,
}

impl<I: Instructor> ScriptRecorder<I> {
    pub fn new(inner: I) -> Self {
        ScriptRecorder {
            inner,
            script: Script::default(),
        }
    }

    pub fn script(&self) -> &Script {
        &self.script
    }

    pub fn into_script(self) -> Script {
        self.script
    }
}

fn conflict(key: String, reason: String) -> InstructorError {
    InstructorError::Unanswerable { key, reason }
}

impl<I: Instructor> Instructor for ScriptRecorder<I> {
    fn ask_yesno(&mut self, q: &Question, world: &WorldState) -> Result<bool, InstructorError> {
        let answer = self.inner.ask_yesno(q, world)?;
        let candidate = q.candidate.clone().unwrap_or_else(|| q.text.clone());
        let key = q.key();
        let (decisions, _) = self
            .script
            .decisions_mut(q)
            .ok_or_else(|| conflict(key.clone(), "yes/no question without a key".into()))?;
        match decisions.iter().find(|d| d.candidate == candidate) {
            Some(d) if d.yes != answer => return Err(conflict(key, format!("`{candidate}` answered both ways"))),
            Some(_) => {}
            None => decisions.push(Decision { candidate, yes: answer }),
        }
        Ok(answer)
    }

    fn ask_open(&mut self, q: &Question, world: &WorldState) -> Result<String, InstructorError> {
        let text = self.inner.ask_open(q, world)?;
        match q.topic {
            Topic::TaskName | Topic::Subtask => self.script.task_intro.push(text.clone()),
            Topic::Goal | Topic::Action => {
                let key = q.key();
                let (_, fallback) = self
                    .script
                    .decisions_mut(q)
                    .ok_or_else(|| conflict(key.clone(), "open question without a key".into()))?;
                match fallback {
                    Some(f) if *f != text => return Err(conflict(key, format!("fallback `{f}` vs `{text}`"))),
                    Some(_) => {}
                    None => *fallback = Some(text.clone()),
                }
            }
        }
        Ok(text)
    }

    fn show_candidates(&mut self, topic: Topic, candidates: &[(String, f64)]) {
        self.inner.show_candidates(topic, candidates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::load_world;

    fn world() -> WorldState {
        load_world(r#"{"schema_version":1,"room":{"id":"k","category":"kitchen"},"objects":[]}"#).unwrap()
    }

    fn goal_q(candidate: Option<&str>) -> Question {
        let mut q = Question::open(Topic::Goal, "What is the next goal or subtask of clear?");
        q.task = Some("clear".into());
        q.category = Some(Category::new("ceramic-plate"));
        q.candidate = candidate.map(str::to_string);
        q
    }

    fn script() -> Script {
        Script {
            task_intro: vec!["Tidy the kitchen.".into(), "Done.".into()],
            goals: vec![GoalKey {
                task: "clear".into(),
                category: Category::new("ceramic-plate"),
                decisions: vec![Decision {
                    candidate: "The goal is that the ceramic-plate is in the cupboard".into(),
                    yes: false,
                }],
                fallback: Some(
                    "If the object is a ceramic-plate then the goal is that the object is in the dishwasher.".into(),
                ),
            }],
            ..Script::default()
        }
    }

    #[test]
    fn answers_from_keys() {
        let mut s = ScriptedInstructor::new(script());
        let w = world();
        let q = goal_q(Some("The goal is that the ceramic-plate is in the cupboard"));
        assert!(!s.ask_yesno(&q, &w).unwrap());
        assert!(s.ask_open(&goal_q(None), &w).unwrap().starts_with("If the object"));
        let intro = Question::open(Topic::TaskName, "What task should I learn?");
        assert_eq!(s.ask_open(&intro, &w).unwrap(), "Tidy the kitchen.");
    }

    #[test]
    fn key_miss_is_script_gap_naming_key() {
        let mut s = ScriptedInstructor::new(script());
        let err = s.ask_yesno(&goal_q(Some("something else")), &world()).unwrap_err();
        match err {
            InstructorError::ScriptGap { key } => assert!(key.contains("goal/clear/ceramic-plate"), "{key}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn empty_answer_is_script_gap() {
        let mut sc = script();
        sc.goals[0].fallback = Some("  ".into());
        let mut s = ScriptedInstructor::new(sc);
        assert!(matches!(
            s.ask_open(&goal_q(None), &world()),
            Err(InstructorError::ScriptGap { .. })
        ));
    }

    #[test]
    fn intro_exhaustion_is_script_gap() {
        let mut s = ScriptedInstructor::new(script());
        let q = Question::open(Topic::Subtask, "What is the next subtask of tidy kitchen?");
        let w = world();
        s.ask_open(&q, &w).unwrap();
        s.ask_open(&q, &w).unwrap();
        assert!(s.ask_open(&q, &w).is_err());
    }

    #[test]
    fn recorder_round_trips() {
        let mut rec = ScriptRecorder::new(ScriptedInstructor::new(script()));
        let w = world();
        rec.ask_open(&Question::open(Topic::TaskName, "?"), &w).unwrap();
        rec.ask_yesno(
            &goal_q(Some("The goal is that the ceramic-plate is in the cupboard")),
            &w,
        )
        .unwrap();
        rec.ask_open(&goal_q(None), &w).unwrap();
        let recorded = rec.into_script();
        let back = Script::from_json(&recorded.to_json()).unwrap();
        assert_eq!(back, recorded);
        assert_eq!(back.goals, script().goals);
    }
}
