//! Rules learned from the plate carry over to a fork with the same goal,
//! and the whole task then runs from knowledge alone.

use itl_core::agent::{Agent, Condition, SessionConfig};
use itl_core::harness::ArtifactPaths;
use itl_core::instructor::ScriptedInstructor;
use itl_core::knowledge::KnowledgeStore;
use itl_core::language::{parse_goal, GoalSource};
use itl_core::lexicon::Lexicon;
use itl_core::llm::{CassetteClient, NoModel};
use itl_core::world::{ObjectId, WorldFixture};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let plate = WorldFixture::from_path(format!("{data}/worlds/plate.json"))?;
    let (cassette, script) = ArtifactPaths::named(data, "plate").load()?;
    let mut client = CassetteClient::replay(cassette);
    let mut instructor = ScriptedInstructor::new(script);
    let mut agent = Agent::new(
        SessionConfig::for_condition(Condition::InstructionSearch2Llm),
        plate.state.clone(),
        KnowledgeStore::new(),
        &mut instructor,
        &mut client,
    );
    agent.learn_task(&plate)?;
    let mut knowledge = agent.knowledge.clone();
    println!("learned {} rules from the plate", knowledge.rules.len());

    // a fork on a fresh table, with the goal already known
    let world = WorldFixture::from_json(
        &std::fs::read_to_string(format!("{data}/worlds/plate.json"))?.replace("ceramic-plate", "metal-fork"),
    )?;
    let goal = parse_goal(
        "If the object is a metal-fork then the goal is that the object is in the dishwasher and the dishwasher is closed.",
        None,
        GoalSource::Instructor,
        &Lexicon::builtin(),
    )?;
    knowledge.store_goal("clear", &goal.condition_category, goal.clone());
    let mut nobody = ScriptedInstructor::new(Default::default());
    let mut no_model = NoModel;
    let mut agent = Agent::new(
        SessionConfig::knowledge_only(),
        world.state.clone(),
        knowledge,
        &mut nobody,
        &mut no_model,
    );
    agent.set_task("tidy kitchen");
    agent.process_object("clear", &ObjectId::new("metal-fork-1"))?;
    let t = agent.transcript(&world.name);
    for (a, s) in t.executed_actions() {
        println!("{a:<40} {s:?}");
    }
    let c = t.counters();
    println!(
        "model calls {}, searches {}, questions {}",
        c.llm_queries,
        c.searches,
        c.yesno_questions + c.utterances
    );

    // learn the whole kitchen once, then redo it from a fresh start alone
    let kitchen = WorldFixture::from_path(format!("{data}/worlds/tidy_kitchen.json"))?;
    let (cassette, script) = ArtifactPaths::for_condition(data, Condition::InstructionSearch2Llm).load()?;
    let mut client = CassetteClient::replay(cassette);
    let mut instructor = ScriptedInstructor::new(script);
    let mut agent = Agent::new(
        SessionConfig::for_condition(Condition::InstructionSearch2Llm),
        kitchen.state.clone(),
        KnowledgeStore::new(),
        &mut instructor,
        &mut client,
    );
    let first = agent.learn_task(&kitchen)?;
    let knowledge = agent.knowledge.clone();
    let c = first.counters();
    println!(
        "learning run: {} model calls, {} searches, {} instructions",
        c.llm_queries,
        c.searches,
        c.yesno_questions + c.utterances
    );
    let mut nobody = ScriptedInstructor::new(Default::default());
    let mut agent = Agent::new(
        SessionConfig::knowledge_only(),
        kitchen.state.clone(),
        knowledge,
        &mut nobody,
        &mut no_model,
    );
    let again = agent.perform_known_task(&kitchen, "tidy kitchen")?;
    let c = again.counters();
    println!(
        "rerun: {}/{} goals, {} model calls, {} searches, {} instructions",
        c.goals_achieved,
        c.goals_total,
        c.llm_queries,
        c.searches,
        c.yesno_questions + c.utterances
    );
    Ok(())
}
