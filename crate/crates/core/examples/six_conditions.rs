//! Replays all six conditions from the shipped cassettes and scripts and
//! prints the comparison table.

use itl_core::agent::Condition;
use itl_core::harness::{report_table, run_condition, ArtifactPaths, ConditionResult};
use itl_core::world::WorldFixture;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let fixture = WorldFixture::from_path(format!("{data}/worlds/tidy_kitchen.json"))?;
    let mut results = Vec::new();
    for condition in Condition::ALL {
        let (cassette, script) = ArtifactPaths::for_condition(data, condition).load()?;
        let (_, measures) = run_condition(condition, &fixture, cassette, script)?;
        results.push(ConditionResult { condition, measures });
    }
    print!("{}", report_table(&results));
    Ok(())
}
