//! Variable-lifted production rules and their matcher.

use crate::language::GoalPredicate;
use crate::world::{Affordance, Category, ObjectId, PrimitiveAction, Property, Verb, WorldState};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Rule variable; `Var(1)` prints as `O1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Var(pub u8);

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "O{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum Test {
    /// `current_task = name` or `current_task = name(O1)`.
    Task {
        name: String,
        object: Option<Var>,
    },
    Detected {
        var: Var,
    },
    Category {
        var: Var,
        category: Category,
    },
    Property {
        var: Var,
        property: Property,
    },
    Affordance {
        var: Var,
        affordance: Affordance,
    },
    Holding {
        value: bool,
    },
    In {
        var: Var,
        container: Var,
    },
    ProposedAction {
        verb: Verb,
        args: Vec<Var>,
    },
    /// Exact match on the current goal's predicates.
    CurrentGoal {
        predicates: Vec<GoalPredicate>,
    },
}

impl Test {
    fn vars(&self) -> Vec<Var> {
        match self {
            Test::Task { object, .. } => object.iter().copied().collect(),
            Test::Detected { var }
            | Test::Category { var, .. }
            | Test::Property { var, .. }
            | Test::Affordance { var, .. } => vec![*var],
            Test::In { var, container } => vec![*var, *container],
            Test::ProposedAction { args, .. } => args.clone(),
            Test::Holding { .. } | Test::CurrentGoal { .. } => vec![],
        }
    }

    fn rename(&self, map: &dyn Fn(Var) -> Var) -> Test {
        match self {
            Test::Task { name, object } => Test::Task {
                name: name.clone(),
                object: object.map(map),
            },
            Test::Detected { var } => Test::Detected { var: map(*var) },
            Test::Category { var, category } => Test::Category {
                var: map(*var),
                category: category.clone(),
            },
            Test::Property { var, property } => Test::Property {
                var: map(*var),
                property: *property,
            },
            Test::Affordance { var, affordance } => Test::Affordance {
                var: map(*var),
                affordance: *affordance,
            },
            Test::In { var, container } => Test::In {
                var: map(*var),
                container: map(*container),
            },
            Test::ProposedAction { verb, args } => Test::ProposedAction {
                verb: *verb,
                args: args.iter().copied().map(map).collect(),
            },
            t @ (Test::Holding { .. } | Test::CurrentGoal { .. }) => t.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    GoalSelection,
    Proposal,
    Selection,
}

/// What a rule does when its conditions match.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleOutcome {
    SelectGoal { goal_id: String },
    Action { verb: Verb, args: Vec<Var> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyRule {
    pub kind: RuleKind,
    pub conditions: Vec<Test>,
    pub outcome: RuleOutcome,
}

impl PolicyRule {
    pub fn task(&self) -> Option<&str> {
        self.conditions.iter().find_map(|t| match t {
            Test::Task { name, .. } => Some(name.as_str()),
            _ => None,
        })
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut vs: BTreeSet<Var> = self.conditions.iter().flat_map(Test::vars).collect();
        if let RuleOutcome::Action { args, .. } = &self.outcome {
            vs.extend(args.iter().copied());
        }
        vs
    }

    /// The same rule with every variable passed through `map`.
    pub fn renamed(&self, map: &dyn Fn(Var) -> Var) -> PolicyRule {
        PolicyRule {
            kind: self.kind,
            conditions: self.conditions.iter().map(|t| t.rename(map)).collect(),
            outcome: match &self.outcome {
                RuleOutcome::Action { verb, args } => RuleOutcome::Action {
                    verb: *verb,
                    args: args.iter().copied().map(map).collect(),
                },
                o => o.clone(),
            },
        }
    }

    /// Sorted conditions and outcome under the variable renaming that
    /// gives the smallest such form; equal keys mean equivalent rules.
    pub fn canonical_key(&self) -> (RuleKind, Vec<Test>, RuleOutcome) {
        let vars: Vec<Var> = self.vars().into_iter().collect();
        let mut best: Option<(RuleKind, Vec<Test>, RuleOutcome)> = None;
        for perm in permutations(vars.len()) {
            let map = |v: Var| {
                let k = vars.iter().position(|x| *x == v).expect("variable collected");
                Var(perm[k] as u8 + 1)
            };
            let r = self.renamed(&map);
            let mut conds = r.conditions;
            conds.sort();
            conds.dedup();
            let outcome = r.outcome;
            let key = (self.kind, conds, outcome);
            if best.as_ref().is_none_or(|b| key < *b) {
                best = Some(key);
            }
        }
        best.expect("at least the identity permutation")
    }

    pub fn equivalent(&self, other: &PolicyRule) -> bool {
        self.canonical_key() == other.canonical_key()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

impl fmt::Display for PolicyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cat_var = |c: &Category| {
            self.conditions.iter().find_map(|t| match t {
                Test::Category { var, category } if category == c => Some(var.to_string()),
                _ => None,
            })
        };
        let term = |t: &crate::language::Term| match t {
            crate::language::Term::Object => "O1".to_string(),
            crate::language::Term::Category(c) => cat_var(c).unwrap_or_else(|| c.to_string()),
        };
        let mut parts = Vec::new();
        let detected: Vec<String> = self
            .conditions
            .iter()
            .filter_map(|t| match t {
                Test::Detected { var } => Some(var.to_string()),
                _ => None,
            })
            .collect();
        for t in &self.conditions {
            parts.push(match t {
                Test::Task { name, object: Some(v) } => format!("current_task = {name}({v})"),
                Test::Task { name, object: None } => format!("current_task = {name}"),
                Test::Detected { .. } => continue,
                Test::Category { var, category } => format!("category({var}) = {category}"),
                Test::Property { var, property } => format!("property({var}) = {property}"),
                Test::Affordance { var, affordance } => format!("affordance({var}) = {affordance}"),
                Test::Holding { value } => format!("holding_object = {value}"),
                Test::In { var, container } => format!("{var} in {container}"),
                Test::ProposedAction { verb, args } => format!(
                    "proposed_action = {}({})",
                    verb.symbol(),
                    args.iter().map(Var::to_string).collect::<Vec<_>>().join(",")
                ),
                Test::CurrentGoal { predicates } => format!(
                    "current_goals = {{{}}}",
                    predicates
                        .iter()
                        .map(|p| match p {
                            GoalPredicate::In { subject, container } => format!(
                                "{} in {}",
                                term(subject),
                                cat_var(container).unwrap_or_else(|| container.to_string())
                            ),
                            GoalPredicate::Property { subject, property } => {
                                format!("property({}) = {property}", term(subject))
                            }
                        })
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            });
        }
        if !detected.is_empty() {
            let word = if detected.len() == 1 { "object" } else { "objects" };
            let pos = usize::from(matches!(self.conditions.first(), Some(Test::Task { .. })));
            parts.insert(pos.min(parts.len()), format!("detected {word} {}", detected.join(",")));
        }
        writeln!(f, "If {}", parts.join("\nAND "))?;
        writeln!(f, "Then:")?;
        match &self.outcome {
            RuleOutcome::SelectGoal { goal_id } => write!(f, "propose select-next-goal {goal_id}"),
            RuleOutcome::Action { verb, args } => {
                let word = if self.kind == RuleKind::Selection {
                    "select"
                } else {
                    "propose"
                };
                write!(
                    f,
                    "{word} action {}({})",
                    verb.symbol(),
                    args.iter().map(Var::to_string).collect::<Vec<_>>().join(",")
                )
            }
        }
    }
}

/// Context a rule is matched against.
pub struct MatchContext<'a> {
    pub state: &'a WorldState,
    pub task: &'a str,
    pub object: &'a ObjectId,
    pub goal: Option<&'a [GoalPredicate]>,
    /// Grounded proposals, for `ProposedAction` tests.
    pub proposed: &'a [PrimitiveAction],
}

fn holds(test: &Test, binding: &[Option<ObjectId>], ctx: &MatchContext<'_>) -> bool {
    let b = |v: &Var| binding[v.0 as usize].as_ref().expect("all variables bound");
    let s = ctx.state;
    match test {
        Test::Task { name, object } => name == ctx.task && object.is_none_or(|v| b(&v) == ctx.object),
        Test::Detected { var } => s.contains(b(var)) && b(var) != s.robot_location(),
        Test::Category { var, category } => s.category(b(var)) == Some(category),
        Test::Property { var, property } => s.has_property(b(var), *property),
        Test::Affordance { var, affordance } => s.has_affordance(b(var), *affordance),
        Test::Holding { value } => s.gripper().is_some() == *value,
        Test::In { var, container } => s.is_in(b(var), b(container)),
        Test::ProposedAction { verb, args } => {
            let ids: Vec<ObjectId> = args.iter().map(|v| b(v).clone()).collect();
            PrimitiveAction::from_parts(*verb, &ids).is_some_and(|a| ctx.proposed.contains(&a))
        }
        Test::CurrentGoal { predicates } => ctx.goal.is_some_and(|g| {
            let mut a = g.to_vec();
            let mut b = predicates.clone();
            a.sort();
            b.sort();
            a == b
        }),
    }
}

/// Every injective binding of the rule's variables that satisfies all
/// conditions, in ascending id order.
pub fn bindings(rule: &PolicyRule, ctx: &MatchContext<'_>) -> Vec<Vec<Option<ObjectId>>> {
    let vars: Vec<Var> = rule.vars().into_iter().collect();
    let max = vars.iter().map(|v| v.0 as usize).max().unwrap_or(0);
    let mut candidates: Vec<Vec<ObjectId>> = Vec::new();
    for v in &vars {
        let task_bound = rule
            .conditions
            .iter()
            .any(|t| matches!(t, Test::Task { object: Some(x), .. } if x == v));
        let category = rule.conditions.iter().find_map(|t| match t {
            Test::Category { var, category } if var == v => Some(category),
            _ => None,
        });
        let list: Vec<ObjectId> = if task_bound {
            vec![ctx.object.clone()]
        } else if let Some(c) = category {
            ctx.state.objects_of_category(c).cloned().collect()
        } else {
            ctx.state
                .ids_sorted()
                .filter(|id| *id != ctx.state.robot_location())
                .cloned()
                .collect()
        };
        candidates.push(list);
    }
    let mut out = Vec::new();
    let mut binding: Vec<Option<ObjectId>> = vec![None; max + 1];
    search(rule, ctx, &vars, &candidates, 0, &mut binding, &mut out);
    out
}

fn search(
    rule: &PolicyRule,
    ctx: &MatchContext<'_>,
    vars: &[Var],
    candidates: &[Vec<ObjectId>],
    k: usize,
    binding: &mut Vec<Option<ObjectId>>,
    out: &mut Vec<Vec<Option<ObjectId>>>,
) {
    if k == vars.len() {
        if rule.conditions.iter().all(|t| holds(t, binding, ctx)) {
            out.push(binding.clone());
        }
        return;
    }
    for id in &candidates[k] {
        if binding.iter().any(|b| b.as_ref() == Some(id)) {
            continue;
        }
        binding[vars[k].0 as usize] = Some(id.clone());
        search(rule, ctx, vars, candidates, k + 1, binding, out);
        binding[vars[k].0 as usize] = None;
    }
}

/// The grounded action a matched rule fires.
pub fn ground_outcome(rule: &PolicyRule, binding: &[Option<ObjectId>]) -> Option<PrimitiveAction> {
    match &rule.outcome {
        RuleOutcome::Action { verb, args } => {
            let ids: Option<Vec<ObjectId>> = args.iter().map(|v| binding[v.0 as usize].clone()).collect();
            PrimitiveAction::from_parts(*verb, &ids?)
        }
        RuleOutcome::SelectGoal { .. } => None,
    }
}
