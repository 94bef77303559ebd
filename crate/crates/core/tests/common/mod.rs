#![allow(dead_code)]

use itl_core::agent::{Agent, Condition, Event, SessionConfig, Transcript};
use itl_core::harness::{run_condition, ArtifactPaths};
use itl_core::instructor::{Script, ScriptedInstructor};
use itl_core::knowledge::KnowledgeStore;
use itl_core::language::{ConditionalGoal, GoalPredicate, GoalSource, Term};
use itl_core::llm::{Cassette, CassetteClient, NoModel};
use itl_core::world::{
    applicable_actions, apply, Category, ObjectId, PrimitiveAction, Property, WorldFixture, WorldState,
};
use proptest::prelude::*;
use std::collections::{HashSet, VecDeque};

pub const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

pub fn world(name: &str) -> WorldFixture {
    WorldFixture::from_path(format!("{DATA}/worlds/{name}.json")).expect("shipped fixture")
}

pub fn plate() -> WorldFixture {
    world("plate")
}

pub fn kitchen() -> WorldFixture {
    world("tidy_kitchen")
}

pub fn plate_artifacts() -> (Cassette, Script) {
    ArtifactPaths::named(DATA, "plate")
        .load()
        .expect("shipped plate artifacts")
}

pub fn condition_artifacts(c: Condition) -> (Cassette, Script) {
    ArtifactPaths::for_condition(DATA, c)
        .load()
        .expect("shipped condition artifacts")
}

pub fn golden_plate() -> Transcript {
    let (cassette, script) = plate_artifacts();
    run_condition(Condition::InstructionSearch2Llm, &plate(), cassette, script)
        .expect("golden episode runs")
        .0
}

pub fn run_shipped(c: Condition) -> Transcript {
    let (cassette, script) = condition_artifacts(c);
    run_condition(c, &kitchen(), cassette, script)
        .expect("shipped condition runs")
        .0
}

pub const GOAL_SENTENCE: &str =
    "If the object is a ceramic-plate then the goal is that the object is in the dishwasher and the dishwasher is closed.";

/// Expected plate dialogue, one line per turn.
pub fn golden_dialogue() -> Vec<String> {
    [
        "Agent: What task should I learn?",
        "Instructor: Tidy the kitchen.",
        "Agent: What is the next subtask of tidy kitchen?",
        "Instructor: Clear the table.",
        "Agent: What is the next subtask of tidy kitchen?",
        "Instructor: Done.",
        "Agent: [LM] For a ceramic-plate on the table is the goal is that the ceramic-plate is in the cupboard and the cupboard is closed?",
        "Instructor: no.",
        "Agent: [LM] For a ceramic-plate on the table is the goal is that the ceramic-plate is in the dishwasher and the dishwasher is turned on?",
        "Instructor: no.",
        "Agent: [LM] For a ceramic-plate on the table is the goal is that the ceramic-plate is in the sink and the sink is full of water?",
        "Instructor: no.",
        "Agent: What is the next goal or subtask of clear?",
        &format!("Instructor: {GOAL_SENTENCE}"),
        "Agent: [LM] For the ceramic-plate should I `Open dishwasher'?",
        "Instructor: yes.",
        "Agent: [LM] For the ceramic-plate should I `Pick up ceramic-plate'?",
        "Instructor: yes.",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

pub fn golden_actions() -> Vec<PrimitiveAction> {
    let plate = ObjectId::new("ceramic-plate-1");
    let dw = ObjectId::new("dishwasher-1");
    vec![
        PrimitiveAction::Open(dw.clone()),
        PrimitiveAction::PickUp(plate.clone()),
        PrimitiveAction::PutDown(plate, dw.clone()),
        PrimitiveAction::Close(dw),
    ]
}

/// The plate fixture with a metal fork in place of the plate.
pub fn fork() -> WorldFixture {
    let text = std::fs::read_to_string(format!("{DATA}/worlds/plate.json")).unwrap();
    WorldFixture::from_json(&text.replace("ceramic-plate", "metal-fork")).unwrap()
}

pub fn fork_goal() -> ConditionalGoal {
    ConditionalGoal {
        condition_category: Category::new("metal-fork"),
        predicates: vec![
            GoalPredicate::In {
                subject: Term::Object,
                container: Category::new("dishwasher"),
            },
            GoalPredicate::Property {
                subject: Term::Category(Category::new("dishwasher")),
                property: Property::Closed,
            },
        ],
        source: GoalSource::Instructor,
    }
}

/// Knowledge after the golden plate episode.
pub fn plate_knowledge() -> KnowledgeStore {
    let f = plate();
    let (cassette, script) = plate_artifacts();
    let mut client = CassetteClient::replay(cassette);
    let mut instructor = ScriptedInstructor::new(script);
    let mut agent = Agent::new(
        SessionConfig::for_condition(Condition::InstructionSearch2Llm),
        f.state.clone(),
        KnowledgeStore::new(),
        &mut instructor,
        &mut client,
    );
    agent.learn_task(&f).expect("plate episode");
    agent.knowledge.clone()
}

/// Runs the fork with only the plate's knowledge plus a stored goal. Any
/// question or model call would fail the run.
pub fn fork_transfer() -> Transcript {
    let mut knowledge = plate_knowledge();
    knowledge.store_goal("clear", &Category::new("metal-fork"), fork_goal());
    let f = fork();
    let mut nobody = ScriptedInstructor::new(Script::default());
    let mut no_model = NoModel;
    let mut agent = Agent::new(
        SessionConfig::knowledge_only(),
        f.state.clone(),
        knowledge,
        &mut nobody,
        &mut no_model,
    );
    agent.set_task("tidy kitchen");
    agent
        .process_object("clear", &ObjectId::new("metal-fork-1"))
        .expect("fork from knowledge");
    agent.assess(&f);
    agent.transcript(&f.name)
}

/// Learns the kitchen under `c`, then reruns it from the start on stored
/// knowledge alone.
pub fn kitchen_rerun(c: Condition) -> (Transcript, Transcript) {
    let f = kitchen();
    let (cassette, script) = condition_artifacts(c);
    let mut client = CassetteClient::replay(cassette);
    let mut instructor = ScriptedInstructor::new(script);
    let mut agent = Agent::new(
        SessionConfig::for_condition(c),
        f.state.clone(),
        KnowledgeStore::new(),
        &mut instructor,
        &mut client,
    );
    let first = agent.learn_task(&f).expect("learning run");
    let knowledge = agent.knowledge.clone();
    let mut nobody = ScriptedInstructor::new(Script::default());
    let mut no_model = NoModel;
    let mut agent = Agent::new(
        SessionConfig::knowledge_only(),
        f.state.clone(),
        knowledge,
        &mut nobody,
        &mut no_model,
    );
    let again = agent
        .perform_known_task(&f, "tidy kitchen")
        .expect("rerun from knowledge");
    (first, again)
}

pub fn external_queries(t: &Transcript) -> usize {
    t.events
        .iter()
        .filter(|e| {
            matches!(
                e,
                Event::LlmQuery { .. }
                    | Event::Search { .. }
                    | Event::InstructorYesno { .. }
                    | Event::InstructorUtterance { .. }
            )
        })
        .count()
}

/// The tidy kitchen with every object already where it belongs.
pub fn tidied_kitchen() -> WorldFixture {
    let text = std::fs::read_to_string(format!("{DATA}/worlds/tidy_kitchen.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let objects = v["objects"].as_array().unwrap().clone();
    let id_of = |cat: &str| {
        objects
            .iter()
            .find(|o| o["category"] == cat)
            .map(|o| o["id"].clone())
            .unwrap()
    };
    for o in v["objects"].as_array_mut().unwrap() {
        if let Some(target) = o.get("target").and_then(|t| t.as_str()).map(str::to_string) {
            o["location"] = id_of(&target);
        }
    }
    WorldFixture::from_json(&v.to_string()).unwrap()
}

/// A transcript whose tallies are exactly the given counts.
pub fn transcript_from_tallies(achieved: usize, total: usize, yes: usize, yesno: usize) -> Transcript {
    use itl_core::instructor::Topic;
    use itl_core::world::GoalAssertion;
    let mut events = Vec::new();
    for i in 0..yesno {
        events.push(Event::InstructorYesno {
            topic: Topic::Action,
            question: format!("[LM] q{i}?"),
            llm_tag: true,
            answer: i < yes,
        });
    }
    for i in 0..total {
        events.push(Event::GoalOutcome {
            assertion: GoalAssertion::Closure {
                object: ObjectId::new(format!("box-{i}")),
                category: Category::new("box"),
            },
            achieved: i < achieved,
        });
    }
    Transcript {
        condition: None,
        fixture: "tallies".into(),
        events,
    }
}

/// A random small world with one item to place.
#[derive(Debug, Clone)]
pub struct RandomCase {
    pub json: String,
    pub fixture: WorldFixture,
    pub object: ObjectId,
    pub goal: ConditionalGoal,
    pub destination: Category,
    pub needs_closed: bool,
}

const SURFACES: [&str; 2] = ["table", "counter"];
const BOXES: [&str; 2] = ["cupboard", "drawer"];
const ITEMS: [&str; 3] = ["cup", "plate", "fork"];

#[derive(Debug, Clone)]
struct Layout {
    surfaces: usize,
    boxes: Vec<bool>,
    items: Vec<(usize, u8)>,
    held: Option<usize>,
    destination: u8,
    needs_closed: bool,
}

fn layout() -> impl Strategy<Value = Layout> {
    (
        1..=SURFACES.len(),
        prop::collection::vec(any::<bool>(), 0..=BOXES.len()),
        prop::collection::vec((0..ITEMS.len(), any::<u8>()), 1..=3),
        prop::option::of(0usize..3),
        any::<u8>(),
        any::<bool>(),
    )
        .prop_map(|(surfaces, boxes, items, held, destination, needs_closed)| Layout {
            surfaces,
            boxes,
            held: held.filter(|h| *h < items.len()),
            items,
            destination,
            needs_closed,
        })
}

fn build(l: &Layout) -> RandomCase {
    let mut objects = Vec::new();
    let mut places = Vec::new();
    for cat in &SURFACES[..l.surfaces] {
        let id = format!("{cat}-1");
        objects
            .push(serde_json::json!({"id": id, "category": cat, "affordances": ["receptacle"], "location": "kitchen"}));
        places.push((id, cat.to_string(), false));
    }
    for (cat, open) in BOXES.iter().zip(&l.boxes) {
        let id = format!("{cat}-1");
        objects.push(serde_json::json!({
            "id": id, "category": cat, "properties": [if *open { "open" } else { "closed" }],
            "affordances": ["openable", "closeable", "receptacle"], "location": "kitchen"
        }));
        places.push((id, cat.to_string(), true));
    }
    let mut ids = Vec::new();
    let mut cats = Vec::new();
    for (i, (kind, at)) in l.items.iter().enumerate() {
        let cat = ITEMS[*kind];
        let id = format!("{cat}-{}", i + 1);
        let held = l.held == Some(i);
        let location = if held {
            "gripper".to_string()
        } else {
            places[*at as usize % places.len()].0.clone()
        };
        objects.push(serde_json::json!({
            "id": id, "category": cat, "properties": [if held { "grabbed" } else { "not_grabbed" }],
            "affordances": ["grabbable"], "location": location
        }));
        ids.push(id);
        cats.push(cat);
    }
    let json = serde_json::json!({
        "schema_version": 1,
        "name": "random",
        "room": {"id": "kitchen", "category": "kitchen"},
        "objects": objects,
    })
    .to_string();
    let fixture = WorldFixture::from_json(&json).expect("generated fixtures are valid");
    let (_, dest_cat, closeable) = &places[l.destination as usize % places.len()];
    let destination = Category::new(dest_cat.clone());
    // a closed surface makes the goal impossible now and then
    let needs_closed = l.needs_closed && (*closeable || l.destination.is_multiple_of(5));
    let mut predicates = vec![GoalPredicate::In {
        subject: Term::Object,
        container: destination.clone(),
    }];
    if needs_closed {
        predicates.push(GoalPredicate::Property {
            subject: Term::Category(destination.clone()),
            property: Property::Closed,
        });
    }
    RandomCase {
        json,
        fixture,
        object: ObjectId::new(ids[0].clone()),
        goal: ConditionalGoal {
            condition_category: Category::new(cats[0]),
            predicates,
            source: GoalSource::Instructor,
        },
        destination,
        needs_closed,
    }
}

/// Worlds with at most 8 objects including the room.
pub fn random_case() -> impl Strategy<Value = RandomCase> {
    layout().prop_map(|l| build(&l))
}

/// Goal test written out directly against the world accessors.
pub fn oracle_goal(case: &RandomCase, s: &WorldState) -> bool {
    s.objects_of_category(&case.destination)
        .any(|d| s.is_in(&case.object, d) && (!case.needs_closed || s.has_property(d, Property::Closed)))
}

/// Breadth-first shortest plan length within `limit`, if any.
pub fn bfs_oracle(case: &RandomCase, limit: usize) -> Option<usize> {
    let start = case.fixture.state.clone();
    let mut seen: HashSet<WorldState> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some((s, d)) = queue.pop_front() {
        if oracle_goal(case, &s) {
            return Some(d);
        }
        if d == limit {
            continue;
        }
        for a in applicable_actions(&s) {
            let next = apply(&s, &a).expect("listed actions apply");
            if seen.insert(next.clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    None
}

/// Checks the planner against the oracle at depths 1 to 6.
pub fn check_planner(case: &RandomCase) -> Result<(), String> {
    let optimal = bfs_oracle(case, 6);
    for depth in 1..=6 {
        let got = itl_core::planner::plan_iddfs(&case.fixture.state, &case.goal, &case.object, depth);
        match (got, optimal.filter(|n| *n <= depth)) {
            (Ok(plan), Some(n)) => {
                if plan.steps.len() != n {
                    return Err(format!(
                        "depth {depth}: plan of {} steps, oracle {n}\n{}",
                        plan.steps.len(),
                        case.json
                    ));
                }
                let mut s = case.fixture.state.clone();
                for a in &plan.steps {
                    s = apply(&s, a).map_err(|e| format!("depth {depth}: {e}\n{}", case.json))?;
                }
                if !oracle_goal(case, &s) {
                    return Err(format!("depth {depth}: plan ends short of the goal\n{}", case.json));
                }
            }
            (Err(_), None) => {}
            (Ok(plan), None) => {
                return Err(format!(
                    "depth {depth}: planner found {} steps, oracle none\n{}",
                    plan.steps.len(),
                    case.json
                ))
            }
            (Err(_), Some(n)) => return Err(format!("depth {depth}: planner failed, oracle {n}\n{}", case.json)),
        }
    }
    Ok(())
}
