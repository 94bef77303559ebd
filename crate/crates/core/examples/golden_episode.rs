//! The single-plate episode: three rejected goal suggestions, a typed
//! goal, two confirmed model steps, then search finishes the job.

use itl_core::agent::Condition;
use itl_core::harness::{run_condition, ArtifactPaths};
use itl_core::world::WorldFixture;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let fixture = WorldFixture::from_path(format!("{data}/worlds/plate.json"))?;
    let (cassette, script) = ArtifactPaths::named(data, "plate").load()?;
    let (transcript, measures) = run_condition(Condition::InstructionSearch2Llm, &fixture, cassette, script)?;
    for turn in transcript.dialogue() {
        println!("{}", turn.line());
    }
    println!();
    for (action, source) in transcript.executed_actions() {
        println!("{action:<40} {source:?}");
    }
    println!("\ncompletion {:.1}%", measures.completion_rate);
    Ok(())
}
