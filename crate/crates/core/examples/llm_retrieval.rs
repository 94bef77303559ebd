//! Goal and action retrieval against the synthetic model, showing the
//! temperature of every call and the first-word filter.

use itl_core::lexicon::Lexicon;
use itl_core::llm::{rank, retrieve_actions, retrieve_potential_goals, CallLog, PromptContext, SyntheticModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut model = CallLog::new(SyntheticModel::builtin());
    let ctx = PromptContext {
        task: "tidy kitchen".into(),
        agent_location: "kitchen".into(),
        object_description: "ceramic-plate".into(),
        object_location: "on table".into(),
        ..PromptContext::default()
    };
    let goals = rank(retrieve_potential_goals(&ctx, &mut model)?);
    let temps: Vec<String> = model
        .drain()
        .iter()
        .map(|c| format!("{:.1}", c.query.temperature))
        .collect();
    println!("goal calls at temperatures [{}]", temps.join(", "));
    for g in &goals {
        println!("  {:.3} {}", g.probability(), g.text);
    }

    let goal = "If the object is a ceramic-plate then the goal is that the object is in the dishwasher and the dishwasher is closed";
    let found = retrieve_actions(goal, &ctx, &Lexicon::builtin().known_verbs(), &mut model)?;
    println!("first words:");
    for w in &found.first_words {
        println!("  {:<6} {:.3} known={} kept={}", w.word, w.probability, w.known, w.kept);
    }
    for r in rank(found.responses) {
        println!("  {:.3} {}", r.probability(), r.text);
    }
    println!("{} action calls", model.drain().len());
    Ok(())
}
