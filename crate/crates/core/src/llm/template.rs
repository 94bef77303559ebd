use super::QueryKind;
use thiserror::Error;

const STORE_OBJECT: &str = include_str!("../../data/prompts/store_object.txt");
const DELIVER_PACKAGE: &str = include_str!("../../data/prompts/deliver_package.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("missing prompt slot `{0}`")]
    MissingSlot(&'static str),
}

/// Slot values for one instantiation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PromptContext {
    pub task: String,
    pub agent_location: String,
    pub object_description: String,
    /// e.g. "on table"
    pub object_location: String,
    pub goal_text: Option<String>,
    pub prior_steps: Vec<String>,
    pub partial_word: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub kind: QueryKind,
    pub example_blocks: Vec<String>,
}

impl PromptTemplate {
    /// The goal-eliciting template with the two shipped examples.
    pub fn goal() -> PromptTemplate {
        PromptTemplate {
            kind: QueryKind::Goal,
            example_blocks: builtin_examples(),
        }
    }

    pub fn action() -> PromptTemplate {
        PromptTemplate {
            kind: QueryKind::Action,
            example_blocks: builtin_examples(),
        }
    }

    pub fn for_kind(kind: QueryKind) -> PromptTemplate {
        match kind {
            QueryKind::Goal => PromptTemplate::goal(),
            QueryKind::Action => PromptTemplate::action(),
        }
    }

    pub fn instantiate(&self, ctx: &PromptContext) -> Result<String, TemplateError> {
        fn required<'a>(value: &'a str, name: &'static str) -> Result<&'a str, TemplateError> {
            if value.trim().is_empty() {
                Err(TemplateError::MissingSlot(name))
            } else {
                Ok(value)
            }
        }
        let task = required(&ctx.task, "task")?;
        let location = required(&ctx.agent_location, "agent_location")?;
        let object = required(&ctx.object_description, "object_description")?;
        let object_location = required(&ctx.object_location, "object_location")?;

        let mut out = String::from("(EXAMPLES)");
        out.push_str(&self.example_blocks.join("\n"));
        out.push_str("\n(END EXAMPLES)\n");
        out.push_str(&format!(
            "(TASK) Task name: {task}. Task context: I am in {location}. Aware of {object} {object_location}.\n(RESULT)"
        ));
        if self.kind == QueryKind::Action {
            let goal = ctx
                .goal_text
                .as_deref()
                .filter(|g| !g.trim().is_empty())
                .ok_or(TemplateError::MissingSlot("goal_text"))?;
            out.push_str(goal);
            out.push_str("(END RESULT)\nSteps:\n");
            for (i, step) in ctx.prior_steps.iter().enumerate() {
                out.push_str(&format!("{}. {step}\n", i + 1));
            }
            out.push_str(&format!("{}.", ctx.prior_steps.len() + 1));
            if let Some(word) = ctx.partial_word.as_deref().filter(|w| !w.is_empty()) {
                out.push(' ');
                out.push_str(word);
            }
        }
        Ok(out)
    }
}

fn builtin_examples() -> Vec<String> {
    vec![
        STORE_OBJECT.trim_end().to_string(),
        DELIVER_PACKAGE.trim_end().to_string(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plate() -> PromptContext {
        PromptContext {
            task: "tidy kitchen".into(),
            agent_location: "kitchen".into(),
            object_description: "ceramic-plate".into(),
            object_location: "on table".into(),
            ..Default::default()
        }
    }

    const GOAL: &str = "If the object is a ceramic-plate then the goal is that the object is in the dishwasher and the dishwasher is closed";

    #[test]
    fn goal_prompt_matches_golden_file() {
        let golden = include_str!("../../data/golden/plate_goal_prompt.txt");
        assert_eq!(PromptTemplate::goal().instantiate(&plate()).unwrap(), golden);
    }

    #[test]
    fn action_prompt_matches_golden_file() {
        let golden = include_str!("../../data/golden/plate_action_prompt_step2_pick.txt");
        let ctx = PromptContext {
            goal_text: Some(GOAL.into()),
            prior_steps: vec!["Open dishwasher".into()],
            partial_word: Some("Pick".into()),
            ..plate()
        };
        assert_eq!(PromptTemplate::action().instantiate(&ctx).unwrap(), golden);
    }

    #[test]
    fn action_prompt_tails() {
        let mut ctx = PromptContext {
            goal_text: Some(GOAL.into()),
            ..plate()
        };
        let t = PromptTemplate::action();
        assert!(t.instantiate(&ctx).unwrap().ends_with("(END RESULT)\nSteps:\n1."));
        ctx.prior_steps.push("Open dishwasher".into());
        assert!(t.instantiate(&ctx).unwrap().ends_with("1. Open dishwasher\n2."));
        ctx.prior_steps.clear();
        ctx.partial_word = Some("Pick".into());
        assert!(t.instantiate(&ctx).unwrap().ends_with("Steps:\n1. Pick"));
    }

    #[test]
    fn goal_prompt_ends_after_result_marker() {
        assert!(PromptTemplate::goal()
            .instantiate(&plate())
            .unwrap()
            .ends_with("(RESULT)"));
    }

    #[test]
    fn missing_slots() {
        let mut ctx = plate();
        ctx.task.clear();
        assert_eq!(
            PromptTemplate::goal().instantiate(&ctx),
            Err(TemplateError::MissingSlot("task"))
        );
        assert_eq!(
            PromptTemplate::action().instantiate(&plate()),
            Err(TemplateError::MissingSlot("goal_text"))
        );
    }
}
