use super::{Instructor, InstructorError, Question, Topic};
use crate::language::{
    parse_action, parse_goal, render_goal_with, satisfied, ConditionalGoal, GoalPredicate, GoalSource, Term,
};
use crate::lexicon::Lexicon;
use crate::planner::plan_iddfs;
use crate::world::{apply, Category, GoalAssertion, ObjectId, PrimitiveAction, TaskIntro, WorldFixture, WorldState};
use std::collections::BTreeSet;

/// Deep enough for any single-object goal in the kitchen domain.
const ORACLE_DEPTH: usize = 8;

/// Answers from a fixture's answer key, the way a consistent human expert
/// would: goals are accepted only when they match the key, actions only
/// when they make progress on an optimal plan.
#[derive(Debug, Clone)]
pub struct OracleInstructor {
    assertions: Vec<GoalAssertion>,
    intro: TaskIntro,
    lexicon: Lexicon,
    subtask_cursor: usize,
}

impl OracleInstructor {
    pub fn new(fixture: &WorldFixture, lexicon: Lexicon) -> Result<Self, InstructorError> {
        let intro = fixture.intro.clone().ok_or_else(|| InstructorError::Unanswerable {
            key: "task_intro".into(),
            reason: format!("fixture `{}` has no intro", fixture.name),
        })?;
        Ok(OracleInstructor {
            assertions: fixture.assertions.clone(),
            intro,
            lexicon,
            subtask_cursor: 0,
        })
    }

    /// The goal the answer key implies for `obj`.
    pub fn true_goal(&self, obj: &ObjectId, world: &WorldState) -> Option<ConditionalGoal> {
        let category = world.category(obj)?.clone();
        let destination = self.assertions.iter().find_map(|a| match a {
            GoalAssertion::Placement {
                object, destination, ..
            } if object == obj => Some(destination.clone()),
            _ => None,
        })?;
        let mut predicates = vec![GoalPredicate::In {
            subject: Term::Object,
            container: destination.clone(),
        }];
        let closes = self
            .assertions
            .iter()
            .any(|a| matches!(a, GoalAssertion::Closure { category, .. } if *category == destination));
        if closes {
            predicates.push(GoalPredicate::Property {
                subject: Term::Category(destination),
                property: crate::world::Property::Closed,
            });
        }
        Some(ConditionalGoal {
            condition_category: category,
            predicates,
            source: GoalSource::Instructor,
        })
    }

    fn goal_for(&self, q: &Question, world: &WorldState) -> Result<(ObjectId, ConditionalGoal), InstructorError> {
        let unanswerable = |reason: &str| InstructorError::Unanswerable {
            key: q.key(),
            reason: reason.into(),
        };
        let obj = q
            .object
            .clone()
            .ok_or_else(|| unanswerable("question names no object"))?;
        let goal = self
            .true_goal(&obj, world)
            .ok_or_else(|| unanswerable("object has no placement in the answer key"))?;
        Ok((obj, goal))
    }

    fn plan(&self, world: &WorldState, goal: &ConditionalGoal, obj: &ObjectId) -> Option<Vec<PrimitiveAction>> {
        plan_iddfs(world, goal, obj, ORACLE_DEPTH).ok().map(|p| p.steps)
    }

    /// Imperative sentence in the instructor's style ("Pick up the plastic bottle.").
    pub fn phrase_action(&self, action: &PrimitiveAction, world: &WorldState) -> String {
        let noun = |id: &ObjectId| {
            world
                .category(id)
                .map(|c| c.as_str().replace('-', " "))
                .unwrap_or_else(|| id.to_string())
        };
        match action {
            PrimitiveAction::Open(o) => format!("Open the {}.", noun(o)),
            PrimitiveAction::Close(o) => format!("Close the {}.", noun(o)),
            PrimitiveAction::PickUp(o) => format!("Pick up the {}.", noun(o)),
            PrimitiveAction::PutDown(o, d) => format!("Put the {} in the {}.", noun(o), noun(d)),
        }
    }
}

fn predicate_set(goal: &ConditionalGoal) -> (Category, BTreeSet<GoalPredicate>) {
    (
        goal.condition_category.clone(),
        goal.predicates.iter().cloned().collect(),
    )
}

impl Instructor for OracleInstructor {
    fn ask_yesno(&mut self, q: &Question, world: &WorldState) -> Result<bool, InstructorError> {
        let candidate = q.candidate.as_deref().unwrap_or(&q.text);
        let (obj, goal) = self.goal_for(q, world)?;
        match q.topic {
            Topic::Goal => Ok(parse_goal(
                candidate,
                Some(&goal.condition_category),
                GoalSource::Llm,
                &self.lexicon,
            )
            .is_ok_and(|g| predicate_set(&g) == predicate_set(&goal))),
            Topic::Action => {
                let Ok(action) = parse_action(candidate, world, &self.lexicon, Some(&obj)) else {
                    return Ok(false);
                };
                let Ok(next) = apply(world, &action) else {
                    return Ok(false);
                };
                let before = self.plan(world, &goal, &obj).map(|p| p.len());
                let after = if satisfied(&goal, &obj, &next) {
                    Some(0)
                } else {
                    self.plan(&next, &goal, &obj).map(|p| p.len())
                };
                Ok(matches!((before, after), (Some(b), Some(a)) if a + 1 == b))
            }
            Topic::TaskName | Topic::Subtask => Ok(false),
        }
    }

    fn ask_open(&mut self, q: &Question, world: &WorldState) -> Result<String, InstructorError> {
        match q.topic {
            Topic::TaskName => Ok(self.intro.task.clone()),
            Topic::Subtask => {
                let i = self.subtask_cursor;
                self.subtask_cursor += 1;
                Ok(self
                    .intro
                    .subtasks
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| "Done.".to_string()))
            }
            Topic::Goal => {
                let (_, goal) = self.goal_for(q, world)?;
                Ok(format!("{}.", render_goal_with(&goal, &self.lexicon)))
            }
            Topic::Action => {
                let (obj, goal) = self.goal_for(q, world)?;
                let steps = self
                    .plan(world, &goal, &obj)
                    .ok_or_else(|| InstructorError::Unanswerable {
                        key: q.key(),
                        reason: "goal unreachable from the current state".into(),
                    })?;
                let first = steps.first().ok_or_else(|| InstructorError::Unanswerable {
                    key: q.key(),
                    reason: "goal already satisfied".into(),
                })?;
                Ok(self.phrase_action(first, world))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::WorldFixture;

    const PLATE: &str = include_str!("../../data/worlds/plate.json");

    fn setup() -> (WorldFixture, OracleInstructor) {
        let f = WorldFixture::from_json(PLATE).unwrap();
        let o = OracleInstructor::new(&f, Lexicon::builtin()).unwrap();
        (f, o)
    }

    fn q(topic: Topic, candidate: Option<&str>) -> Question {
        let mut q = Question::open(topic, "?");
        q.task = Some("clear".into());
        q.category = Some(Category::new("ceramic-plate"));
        q.object = Some(ObjectId::new("ceramic-plate-1"));
        q.step = Some(1);
        q.candidate = candidate.map(str::to_string);
        q
    }

    #[test]
    fn goal_fallback_is_the_conditional_sentence() {
        let (f, mut o) = setup();
        assert_eq!(
            o.ask_open(&q(Topic::Goal, None), &f.state).unwrap(),
            "If the object is a ceramic-plate then the goal is that the object is in the dishwasher and the dishwasher is closed."
        );
    }

    #[test]
    fn rejects_wrong_goals_accepts_key() {
        let (f, mut o) = setup();
        let no = [
            "The goal is that the ceramic-plate is in the cupboard and the cupboard is closed",
            "The goal is that the ceramic-plate is in the dishwasher and the dishwasher is turned on",
        ];
        for c in no {
            assert!(!o.ask_yesno(&q(Topic::Goal, Some(c)), &f.state).unwrap(), "{c}");
        }
        let yes = "The goal is that the ceramic-plate is in the dishwasher and the dishwasher is closed";
        assert!(o.ask_yesno(&q(Topic::Goal, Some(yes)), &f.state).unwrap());
    }

    #[test]
    fn accepts_progress_actions_only() {
        let (f, mut o) = setup();
        assert!(o
            .ask_yesno(&q(Topic::Action, Some("Open dishwasher")), &f.state)
            .unwrap());
        // opening needs a free hand, so picking up first is a detour
        assert!(!o
            .ask_yesno(&q(Topic::Action, Some("Pick up ceramic-plate from table.")), &f.state)
            .unwrap());
        assert!(!o
            .ask_yesno(&q(Topic::Action, Some("Close dishwasher")), &f.state)
            .unwrap());
        assert!(!o
            .ask_yesno(&q(Topic::Action, Some("Go to the table")), &f.state)
            .unwrap());
        assert_eq!(
            o.ask_open(&q(Topic::Action, None), &f.state).unwrap(),
            "Open the dishwasher."
        );
    }
}
