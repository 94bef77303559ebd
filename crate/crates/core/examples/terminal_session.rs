//! Teach the plate task yourself on stdin/stdout, with model suggestions
//! replayed from the shipped cassette.
//!
//! Answer yes/no questions with `y` or `n`. Good answers to the open
//! questions are "Tidy the kitchen.", "Clear the table.", "Done." and
//! "If the object is a ceramic-plate then the goal is that the object is
//! in the dishwasher and the dishwasher is closed."

use itl_core::agent::Condition;
use itl_core::harness::{compute_measures, run_with, ArtifactPaths};
use itl_core::instructor::TerminalInstructor;
use itl_core::llm::CassetteClient;
use itl_core::world::WorldFixture;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let fixture = WorldFixture::from_path(format!("{data}/worlds/plate.json"))?;
    let (cassette, _) = ArtifactPaths::named(data, "plate").load()?;
    let mut client = CassetteClient::replay(cassette);
    let mut instructor = TerminalInstructor::stdio();
    let transcript = run_with(Condition::InstructionSearch2Llm, &fixture, &mut instructor, &mut client)?;
    let m = compute_measures(&transcript);
    println!(
        "completion {:.1}% after {} instructions",
        m.completion_rate, m.n_instructions
    );
    Ok(())
}
