//! Bounded iterative deepening on the plate fixture at increasing depths.

use itl_core::language::{parse_goal, GoalSource};
use itl_core::lexicon::Lexicon;
use itl_core::planner::plan_with_stats;
use itl_core::world::{ObjectId, WorldFixture};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixture = WorldFixture::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/data/worlds/plate.json"))?;
    let goal = parse_goal(
        "If the object is a ceramic-plate then the goal is that the object is in the dishwasher and the dishwasher is closed.",
        None,
        GoalSource::Instructor,
        &Lexicon::builtin(),
    )?;
    let plate = ObjectId::new("ceramic-plate-1");
    for depth in 0..=5 {
        let (result, stats) = plan_with_stats(&fixture.state, &goal, &plate, depth);
        match result {
            Ok(plan) => {
                let steps: Vec<String> = plan.steps.iter().map(ToString::to_string).collect();
                println!("depth {depth}: {} ({} nodes)", steps.join(", "), stats.expanded);
            }
            Err(nf) => println!(
                "depth {depth}: no plan within {} ({} nodes)",
                nf.depth_exhausted, stats.expanded
            ),
        }
    }
    Ok(())
}
