//! Instantiates the goal and action prompts for the plate.

use itl_core::llm::{PromptContext, PromptTemplate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = PromptContext {
        task: "tidy kitchen".into(),
        agent_location: "kitchen".into(),
        object_description: "ceramic-plate".into(),
        object_location: "on table".into(),
        ..PromptContext::default()
    };
    println!("{}\n", PromptTemplate::goal().instantiate(&ctx)?);
    let action = PromptContext {
        goal_text: Some(
            "If the object is a ceramic-plate then the goal is that the object is in the dishwasher and the dishwasher is closed"
                .into(),
        ),
        prior_steps: vec!["Open dishwasher".into()],
        partial_word: Some("Pick".into()),
        ..ctx
    };
    println!("{}", PromptTemplate::action().instantiate(&action)?);
    Ok(())
}
