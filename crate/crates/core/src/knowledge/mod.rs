//! Learned task knowledge: goal memory, policy rules, and the task
//! structure, plus the JSON snapshot that carries them between sessions.

mod generalize;
mod rules;

pub use generalize::{retrospective_generalize, Episode, InvalidEpisode};
pub use rules::{bindings, ground_outcome, MatchContext, PolicyRule, RuleKind, RuleOutcome, Test, Var};

use crate::language::{ConditionalGoal, Subtask};
use crate::world::{applicable, Category, ObjectId, PrimitiveAction, WorldState};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const SNAPSHOT_VERSION: u32 = 1;

/// Goals keyed by (task, object category).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoalMemory {
    entries: BTreeMap<(String, Category), ConditionalGoal>,
}

impl GoalMemory {
    pub fn lookup(&self, task: &str, category: &Category) -> Option<&ConditionalGoal> {
        self.entries.get(&(task.to_string(), category.clone()))
    }

    pub fn store(&mut self, task: &str, category: &Category, goal: ConditionalGoal) {
        self.entries.insert((task.to_string(), category.clone()), goal);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Category, &ConditionalGoal)> {
        self.entries.iter().map(|((t, c), g)| (t.as_str(), c, g))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskStructure {
    pub name: String,
    pub subtasks: Vec<Subtask>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeStore {
    pub goals: GoalMemory,
    pub rules: Vec<PolicyRule>,
    pub tasks: BTreeMap<String, TaskStructure>,
}

#[derive(Serialize, Deserialize)]
struct GoalEntry {
    task: String,
    category: Category,
    goal: ConditionalGoal,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    schema_version: u32,
    tasks: Vec<TaskStructure>,
    goals: Vec<GoalEntry>,
    rules: Vec<PolicyRule>,
}

impl KnowledgeStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup_goal(&self, task: &str, category: &Category) -> Option<&ConditionalGoal> {
        self.goals.lookup(task, category)
    }

    pub fn store_goal(&mut self, task: &str, category: &Category, goal: ConditionalGoal) {
        self.goals.store(task, category, goal);
    }

    /// Stable id for the goal learned for (task, category).
    pub fn goal_id(task: &str, category: &Category) -> String {
        format!("{task}-{category}-goal")
    }

    /// Adds a rule unless an equivalent one is already known.
    pub fn add_rule(&mut self, rule: PolicyRule) -> bool {
        if self.rules.iter().any(|r| r.equivalent(&rule)) {
            return false;
        }
        self.rules.push(rule);
        true
    }

    /// Generalizes an episode and keeps the new rules; returns how many were new.
    pub fn learn_from(&mut self, episode: &Episode) -> Result<usize, InvalidEpisode> {
        let rules = retrospective_generalize(episode)?;
        Ok(rules.into_iter().filter(|r| self.add_rule(r.clone())).count())
    }

    /// Actions both proposed and selected for `obj` under `goal`, in rule
    /// order then binding order. Empty means the policy has no advice.
    pub fn match_rules(
        &self,
        state: &WorldState,
        task: &str,
        goal: &ConditionalGoal,
        obj: &ObjectId,
    ) -> Vec<PrimitiveAction> {
        let mut proposed: Vec<PrimitiveAction> = Vec::new();
        let empty: [PrimitiveAction; 0] = [];
        let ctx = MatchContext {
            state,
            task,
            object: obj,
            goal: Some(&goal.predicates),
            proposed: &empty,
        };
        for rule in self.rules.iter().filter(|r| r.kind == RuleKind::Proposal) {
            for b in bindings(rule, &ctx) {
                if let Some(a) = ground_outcome(rule, &b) {
                    if !proposed.contains(&a) {
                        proposed.push(a);
                    }
                }
            }
        }
        if proposed.is_empty() {
            return Vec::new();
        }
        let ctx = MatchContext {
            proposed: &proposed,
            ..ctx
        };
        let mut selected = Vec::new();
        for rule in self.rules.iter().filter(|r| r.kind == RuleKind::Selection) {
            for b in bindings(rule, &ctx) {
                if let Some(a) = ground_outcome(rule, &b) {
                    if !selected.contains(&a) && applicable(state, &a) {
                        selected.push(a);
                    }
                }
            }
        }
        selected
    }

    pub fn to_json(&self) -> String {
        let snap = Snapshot {
            schema_version: SNAPSHOT_VERSION,
            tasks: self.tasks.values().cloned().collect(),
            goals: self
                .goals
                .iter()
                .map(|(t, c, g)| GoalEntry {
                    task: t.to_string(),
                    category: c.clone(),
                    goal: g.clone(),
                })
                .collect(),
            rules: self.rules.clone(),
        };
        serde_json::to_string_pretty(&snap).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<KnowledgeStore, String> {
        let snap: Snapshot = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if snap.schema_version != SNAPSHOT_VERSION {
            return Err(format!("unsupported snapshot version {}", snap.schema_version));
        }
        let mut store = KnowledgeStore::new();
        for t in snap.tasks {
            store.tasks.insert(t.name.clone(), t);
        }
        for g in snap.goals {
            store.goals.store(&g.task, &g.category, g.goal);
        }
        store.rules = snap.rules;
        Ok(store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<KnowledgeStore, String> {
        let path = path.as_ref();
        KnowledgeStore::from_json(&std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?)
    }
}
