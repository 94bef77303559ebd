//! Retrospective generalization by goal regression over an episode trace.
//!
//! Walking backwards from the goal literals, the support set before each
//! action is its preconditions plus whatever later steps still need that
//! the action did not itself produce. Proposal rules test the action's
//! preconditions; selection rules test the support set and the goal.

use super::rules::{PolicyRule, RuleKind, RuleOutcome, Test, Var};
use crate::language::{goal_binding, ConditionalGoal, GoalPredicate, Term};
use crate::world::{apply, Affordance, Category, ObjectId, PrimitiveAction, Property, WorldState};
use std::collections::BTreeSet;
use thiserror::Error;

/// One solved object: the start state, the goal, and the executed actions.
#[derive(Debug, Clone)]
pub struct Episode {
    pub task: String,
    pub object: ObjectId,
    pub goal: ConditionalGoal,
    pub goal_id: String,
    pub start_state: WorldState,
    pub trace: Vec<PrimitiveAction>,
}

impl Episode {
    /// Replays the trace; the end state if every step applies.
    pub fn end_state(&self) -> Result<WorldState, InvalidEpisode> {
        let mut s = self.start_state.clone();
        for (i, a) in self.trace.iter().enumerate() {
            s = apply(&s, a).map_err(|_| InvalidEpisode(format!("step {} `{a}` does not apply", i + 1)))?;
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid episode: {0}")]
pub struct InvalidEpisode(pub String);

/// Grounded literal used during regression.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Lit {
    Prop(ObjectId, Property),
    In(ObjectId, ObjectId),
    Holding(bool),
    Aff(ObjectId, Affordance),
    Cat(ObjectId, Category),
}

fn preconditions(a: &PrimitiveAction, s: &WorldState) -> Vec<Lit> {
    match a {
        PrimitiveAction::Open(o) => vec![Lit::Prop(o.clone(), Property::Closed), Lit::Holding(false)],
        PrimitiveAction::Close(o) => vec![Lit::Prop(o.clone(), Property::Open), Lit::Holding(false)],
        PrimitiveAction::PickUp(o) => vec![
            Lit::Holding(false),
            Lit::Prop(o.clone(), Property::NotGrabbed),
            Lit::Aff(o.clone(), Affordance::Grabbable),
        ],
        PrimitiveAction::PutDown(o, d) => {
            let mut v = vec![Lit::Prop(o.clone(), Property::Grabbed)];
            if s.has_affordance(d, Affordance::Openable) {
                v.push(Lit::Prop(d.clone(), Property::Open));
            }
            v.push(Lit::Aff(d.clone(), Affordance::Receptacle));
            if let Some(c) = s.category(d) {
                v.push(Lit::Cat(d.clone(), c.clone()));
            }
            v
        }
    }
}

/// Literals made true by the action.
fn adds(a: &PrimitiveAction) -> Vec<Lit> {
    match a {
        PrimitiveAction::Open(o) => vec![Lit::Prop(o.clone(), Property::Open)],
        PrimitiveAction::Close(o) => vec![Lit::Prop(o.clone(), Property::Closed)],
        PrimitiveAction::PickUp(o) => vec![Lit::Prop(o.clone(), Property::Grabbed), Lit::Holding(true)],
        PrimitiveAction::PutDown(o, d) => vec![
            Lit::In(o.clone(), d.clone()),
            Lit::Prop(o.clone(), Property::NotGrabbed),
            Lit::Holding(false),
        ],
    }
}

fn goal_literals(goal: &ConditionalGoal, obj: &ObjectId, end: &WorldState) -> Option<BTreeSet<Lit>> {
    let binding = goal_binding(goal, obj, end)?;
    let bind = |t: &Term| match t {
        Term::Object => obj.clone(),
        Term::Category(c) => binding[c].clone(),
    };
    Some(
        goal.predicates
            .iter()
            .map(|p| match p {
                GoalPredicate::In { subject, container } => Lit::In(bind(subject), binding[container].clone()),
                GoalPredicate::Property { subject, property } => Lit::Prop(bind(subject), *property),
            })
            .collect(),
    )
}

/// Assigns rule variables to object ids in first-seen order.
struct Vars(Vec<ObjectId>);

impl Vars {
    fn of(&mut self, id: &ObjectId) -> Var {
        match self.0.iter().position(|x| x == id) {
            Some(i) => Var(i as u8 + 1),
            None => {
                self.0.push(id.clone());
                Var(self.0.len() as u8)
            }
        }
    }
}

fn outcome(a: &PrimitiveAction, vars: &mut Vars) -> RuleOutcome {
    RuleOutcome::Action {
        verb: a.verb(),
        args: a.args().into_iter().map(|id| vars.of(id)).collect(),
    }
}

fn lit_test(l: &Lit, vars: &mut Vars) -> Test {
    match l {
        Lit::Prop(o, p) => Test::Property {
            var: vars.of(o),
            property: *p,
        },
        Lit::In(o, d) => Test::In {
            var: vars.of(o),
            container: vars.of(d),
        },
        Lit::Holding(b) => Test::Holding { value: *b },
        Lit::Aff(o, a) => Test::Affordance {
            var: vars.of(o),
            affordance: *a,
        },
        Lit::Cat(o, c) => Test::Category {
            var: vars.of(o),
            category: c.clone(),
        },
    }
}

/// Adds detection and category tests for every variable except the task object.
fn finish(conditions: &mut Vec<Test>, vars: &Vars, object: &ObjectId, state: &WorldState) {
    for (i, id) in vars.0.iter().enumerate() {
        let var = Var(i as u8 + 1);
        conditions.push(Test::Detected { var });
        if id != object {
            if let Some(c) = state.category(id) {
                let t = Test::Category {
                    var,
                    category: c.clone(),
                };
                if !conditions.contains(&t) {
                    conditions.push(t);
                }
            }
        }
    }
}

fn proposal(task: &str, object: &ObjectId, a: &PrimitiveAction, state: &WorldState) -> PolicyRule {
    let mut vars = Vars(Vec::new());
    let outcome = outcome(a, &mut vars);
    let task_var = a.args().iter().position(|id| *id == object).map(|i| Var(i as u8 + 1));
    let mut conditions = vec![Test::Task {
        name: task.to_string(),
        object: task_var,
    }];
    let pre: Vec<Test> = preconditions(a, state).iter().map(|l| lit_test(l, &mut vars)).collect();
    finish(&mut conditions, &vars, object, state);
    for t in pre {
        if !conditions.contains(&t) {
            conditions.push(t);
        }
    }
    PolicyRule {
        kind: RuleKind::Proposal,
        conditions,
        outcome,
    }
}

fn selection(ep: &Episode, a: &PrimitiveAction, support: &BTreeSet<Lit>, state: &WorldState) -> PolicyRule {
    let mut vars = Vars(vec![ep.object.clone()]);
    let outcome = outcome(a, &mut vars);
    let RuleOutcome::Action { verb, args } = &outcome else {
        unreachable!()
    };
    let mut conditions = vec![
        Test::Task {
            name: ep.task.clone(),
            object: Some(Var(1)),
        },
        Test::ProposedAction {
            verb: *verb,
            args: args.clone(),
        },
    ];
    let mut tests = Vec::new();
    for l in support {
        let keep = match l {
            Lit::Prop(_, p) => matches!(
                p,
                Property::Open | Property::Closed | Property::Grabbed | Property::NotGrabbed
            ),
            Lit::In(..) => true,
            Lit::Holding(_) | Lit::Aff(..) | Lit::Cat(..) => false,
        };
        if keep {
            tests.push(lit_test(l, &mut vars));
        }
    }
    finish(&mut conditions, &vars, &ep.object, state);
    conditions.extend(tests);
    conditions.push(Test::CurrentGoal {
        predicates: ep.goal.predicates.clone(),
    });
    PolicyRule {
        kind: RuleKind::Selection,
        conditions,
        outcome,
    }
}

/// The goal-selection rule plus one proposal and one selection rule per
/// executed action, latest action first.
pub fn retrospective_generalize(ep: &Episode) -> Result<Vec<PolicyRule>, InvalidEpisode> {
    let end = ep.end_state()?;
    if ep.start_state.category(&ep.object) != Some(&ep.goal.condition_category) {
        return Err(InvalidEpisode(format!(
            "goal is for {} but the object is not one",
            ep.goal.condition_category
        )));
    }
    let mut support = goal_literals(&ep.goal, &ep.object, &end)
        .ok_or_else(|| InvalidEpisode("goal not satisfied at the end".into()))?;

    let mut rules = vec![PolicyRule {
        kind: RuleKind::GoalSelection,
        conditions: vec![
            Test::Task {
                name: ep.task.clone(),
                object: Some(Var(1)),
            },
            Test::Detected { var: Var(1) },
            Test::Category {
                var: Var(1),
                category: ep.goal.condition_category.clone(),
            },
        ],
        outcome: RuleOutcome::SelectGoal {
            goal_id: ep.goal_id.clone(),
        },
    }];

    let mut states = vec![ep.start_state.clone()];
    for a in &ep.trace {
        let next = apply(states.last().expect("non-empty"), a).expect("checked by end_state");
        states.push(next);
    }
    let mut action_rules = Vec::new();
    for (i, a) in ep.trace.iter().enumerate().rev() {
        let before = &states[i];
        let added = adds(a);
        let mut s: BTreeSet<Lit> = support.into_iter().filter(|l| !added.contains(l)).collect();
        s.extend(preconditions(a, before));
        support = s;
        action_rules.push(proposal(&ep.task, &ep.object, a, before));
        action_rules.push(selection(ep, a, &support, before));
    }
    rules.extend(action_rules);
    Ok(rules)
}
