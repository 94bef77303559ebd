//! Depth-bounded iterative deepening over the primitive actions.

use crate::language::{satisfied, ConditionalGoal};
use crate::world::{ObjectId, PrimitiveAction, WorldState};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PrimitiveAction>,
    pub depth_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotFound {
    pub depth_exhausted: usize,
}

/// Work done by one search, for transcripts and benchmarks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub expanded: u64,
    pub iterations: usize,
}

/// Shortest plan (ties broken by action order) reaching a state where
/// `goal` holds for `obj`, or `NotFound` when none exists within `max_depth`.
pub fn plan_iddfs(
    state: &WorldState,
    goal: &ConditionalGoal,
    obj: &ObjectId,
    max_depth: usize,
) -> Result<Plan, NotFound> {
    plan_with_stats(state, goal, obj, max_depth).0
}

pub fn plan_with_stats(
    state: &WorldState,
    goal: &ConditionalGoal,
    obj: &ObjectId,
    max_depth: usize,
) -> (Result<Plan, NotFound>, SearchStats) {
    iddfs(state, max_depth, |s| satisfied(goal, obj, s))
}

/// Iterative deepening against an arbitrary goal test.
pub fn iddfs(
    state: &WorldState,
    max_depth: usize,
    goal: impl Fn(&WorldState) -> bool,
) -> (Result<Plan, NotFound>, SearchStats) {
    let mut stats = SearchStats::default();
    for bound in 0..=max_depth {
        stats.iterations += 1;
        // states already shown to have no solution within the stored depth
        let mut dead: HashMap<WorldState, usize> = HashMap::new();
        let mut path = Vec::with_capacity(bound);
        if dfs(state, bound, &goal, &mut path, &mut dead, &mut stats) {
            return (
                Ok(Plan {
                    depth_used: path.len(),
                    steps: path,
                }),
                stats,
            );
        }
    }
    (
        Err(NotFound {
            depth_exhausted: max_depth,
        }),
        stats,
    )
}

fn dfs(
    state: &WorldState,
    remaining: usize,
    goal: &impl Fn(&WorldState) -> bool,
    path: &mut Vec<PrimitiveAction>,
    dead: &mut HashMap<WorldState, usize>,
    stats: &mut SearchStats,
) -> bool {
    if goal(state) {
        return true;
    }
    if remaining == 0 {
        return false;
    }
    if dead.get(state).is_some_and(|&r| r >= remaining) {
        return false;
    }
    stats.expanded += 1;
    for action in state.applicable_actions() {
        let next = state.apply_unchecked(&action);
        path.push(action);
        if dfs(&next, remaining - 1, goal, path, dead, stats) {
            return true;
        }
        path.pop();
    }
    dead.insert(state.clone(), remaining);
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::{GoalPredicate, GoalSource, Term};
    use crate::world::{apply, load_world, Category, Property};
    use std::collections::{HashSet, VecDeque};

    const PLATE: &str = r#"{"schema_version":1,"room":{"id":"kitchen","category":"kitchen"},"objects":[
        {"id":"table-1","category":"table","affordances":["receptacle"],"location":"kitchen"},
        {"id":"ceramic-plate-1","category":"ceramic-plate","properties":["not_grabbed"],"affordances":["grabbable"],"location":"table-1"},
        {"id":"dishwasher-1","category":"dishwasher","properties":["closed"],"affordances":["openable","closeable","receptacle"],"location":"kitchen"}]}"#;

    fn goal() -> ConditionalGoal {
        ConditionalGoal {
            condition_category: Category::new("ceramic-plate"),
            predicates: vec![
                GoalPredicate::In {
                    subject: Term::Object,
                    container: Category::new("dishwasher"),
                },
                GoalPredicate::Property {
                    subject: Term::Category(Category::new("dishwasher")),
                    property: Property::Closed,
                },
            ],
            source: GoalSource::Instructor,
        }
    }

    fn id(s: &str) -> ObjectId {
        ObjectId::new(s)
    }

    /// Naive breadth-first oracle: shortest plan length, if any.
    fn bfs(state: &WorldState, max_depth: usize, goal: impl Fn(&WorldState) -> bool) -> Option<usize> {
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([(state.clone(), 0usize)]);
        seen.insert(state.clone());
        while let Some((s, d)) = queue.pop_front() {
            if goal(&s) {
                return Some(d);
            }
            if d == max_depth {
                continue;
            }
            for a in crate::world::applicable_actions(&s) {
                let n = apply(&s, &a).unwrap();
                if seen.insert(n.clone()) {
                    queue.push_back((n, d + 1));
                }
            }
        }
        None
    }

    #[test]
    fn plate_needs_four_steps() {
        let s = load_world(PLATE).unwrap();
        let plate = id("ceramic-plate-1");
        assert_eq!(plan_iddfs(&s, &goal(), &plate, 2), Err(NotFound { depth_exhausted: 2 }));
        let plan = plan_iddfs(&s, &goal(), &plate, 4).unwrap();
        assert_eq!(
            plan.steps,
            vec![
                PrimitiveAction::Open(id("dishwasher-1")),
                PrimitiveAction::PickUp(plate.clone()),
                PrimitiveAction::PutDown(plate.clone(), id("dishwasher-1")),
                PrimitiveAction::Close(id("dishwasher-1")),
            ]
        );
        assert_eq!(plan.depth_used, 4);
        assert_eq!(bfs(&s, 6, |x| satisfied(&goal(), &plate, x)), Some(4));
    }

    #[test]
    fn two_steps_remain_after_open_and_pick_up() {
        let s = load_world(PLATE).unwrap();
        let plate = id("ceramic-plate-1");
        let s = apply(&s, &PrimitiveAction::Open(id("dishwasher-1"))).unwrap();
        let s = apply(&s, &PrimitiveAction::PickUp(plate.clone())).unwrap();
        let plan = plan_iddfs(&s, &goal(), &plate, 2).unwrap();
        assert_eq!(
            plan.steps,
            vec![
                PrimitiveAction::PutDown(plate.clone(), id("dishwasher-1")),
                PrimitiveAction::Close(id("dishwasher-1")),
            ]
        );
    }

    #[test]
    fn satisfied_start_gives_empty_plan() {
        let s = load_world(PLATE).unwrap();
        let (plan, stats) = iddfs(&s, 0, |_| true);
        assert_eq!(plan.unwrap().steps, vec![]);
        assert_eq!(stats.expanded, 0);
    }

    #[test]
    fn input_state_untouched() {
        let s = load_world(PLATE).unwrap();
        let before = s.clone();
        let _ = plan_iddfs(&s, &goal(), &id("ceramic-plate-1"), 4);
        assert_eq!(s, before);
    }
}
