//! Regenerates the shipped cassettes and instructor scripts.
//!
//! The synthetic model stands in for the language model and the
//! answer-key instructor answers every question; both are recorded.
//!
//! ```text
//! cargo run --example author_fixtures [data-dir]
//! ```

use itl_core::agent::Condition;
use itl_core::harness::{author, compute_measures, ArtifactPaths};
use itl_core::llm::SyntheticModel;
use itl_core::world::WorldFixture;
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    let kitchen = WorldFixture::from_path(data.join("worlds/tidy_kitchen.json"))?;
    for condition in Condition::ALL {
        let (cassette, script, transcript) = author(condition, &kitchen, SyntheticModel::builtin())?;
        let paths = ArtifactPaths::for_condition(&data, condition);
        paths.save(&cassette, &script)?;
        let m = compute_measures(&transcript);
        println!(
            "{condition:<24} {:>3} cassette entries, completion {:.1}%",
            cassette.entries.len(),
            m.completion_rate
        );
    }

    let plate = WorldFixture::from_path(data.join("worlds/plate.json"))?;
    let (cassette, script, _) = author(Condition::InstructionSearch2Llm, &plate, SyntheticModel::builtin())?;
    ArtifactPaths::named(&data, "plate").save(&cassette, &script)?;
    println!(
        "plate           {:>3} cassette entries",
        cassette.entries.len()
    );
    Ok(())
}
