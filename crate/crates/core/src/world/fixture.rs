//! World fixture documents.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "plate",
//!   "room": { "id": "kitchen", "category": "kitchen" },
//!   "objects": [
//!     { "id": "table-1", "category": "table",
//!       "affordances": ["receptacle"], "location": "kitchen" },
//!     { "id": "ceramic-plate-1", "category": "ceramic-plate",
//!       "properties": ["not_grabbed"], "affordances": ["grabbable"],
//!       "location": "table-1", "target": "dishwasher" },
//!     { "id": "dishwasher-1", "category": "dishwasher",
//!       "properties": ["closed"],
//!       "affordances": ["openable", "closeable", "receptacle"],
//!       "location": "kitchen", "must_close": true }
//!   ]
//! }
//! ```
//!
//! `location` is an object id or the reserved word `gripper`. `target`
//! names the destination category an object must end up in and
//! `must_close` marks a destination that must be closed at the end; both
//! only feed the completion measure and are invisible to the agent.

use super::state::WorldState;
use super::{Affordance, Category, Location, ObjectId, Property, WorldObject};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct FixtureError {
    /// JSON-pointer-like path to the offending entry, e.g. `objects[3].properties[0]`.
    pub path: String,
    pub message: String,
}

impl FixtureError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        FixtureError {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRoom {
    id: String,
    category: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObject {
    id: String,
    category: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    properties: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    affordances: Vec<String>,
    location: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    must_close: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFixture {
    schema_version: u32,
    #[serde(default)]
    name: String,
    room: RawRoom,
    objects: Vec<RawObject>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intro: Option<TaskIntro>,
}

/// How the instructor introduces the task: its name, then one utterance
/// per subtask. Part of the answer key, never shown to the agent directly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskIntro {
    pub task: String,
    pub subtasks: Vec<String>,
}

/// One of the atomic conditions counted by the completion measure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoalAssertion {
    Placement {
        object: ObjectId,
        category: Category,
        destination: Category,
    },
    Closure {
        object: ObjectId,
        category: Category,
    },
}

impl GoalAssertion {
    pub fn holds(&self, state: &WorldState) -> bool {
        match self {
            GoalAssertion::Placement {
                object, destination, ..
            } => state
                .container_of(object)
                .and_then(|c| state.category(c))
                .is_some_and(|c| c == destination),
            GoalAssertion::Closure { object, .. } => state.has_property(object, Property::Closed),
        }
    }

    pub fn category(&self) -> &Category {
        match self {
            GoalAssertion::Placement { category, .. } | GoalAssertion::Closure { category, .. } => category,
        }
    }

    pub fn object(&self) -> &ObjectId {
        match self {
            GoalAssertion::Placement { object, .. } | GoalAssertion::Closure { object, .. } => object,
        }
    }
}

/// A loaded fixture: the initial state plus the hidden answer key.
#[derive(Debug, Clone)]
pub struct WorldFixture {
    pub name: String,
    pub state: WorldState,
    pub assertions: Vec<GoalAssertion>,
    pub intro: Option<TaskIntro>,
}

impl WorldFixture {
    pub fn from_json(text: &str) -> Result<WorldFixture, FixtureError> {
        let raw: RawFixture = serde_json::from_str(text)
            .map_err(|e| FixtureError::new(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(FixtureError::new(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", raw.schema_version),
            ));
        }
        let room = ObjectId::new(raw.room.id.clone());
        let mut objects = vec![WorldObject {
            id: room.clone(),
            category: Category::new(raw.room.category.clone()),
            properties: BTreeSet::new(),
            affordances: BTreeSet::new(),
            location: None,
        }];
        for (i, o) in raw.objects.iter().enumerate() {
            let mut properties = BTreeSet::new();
            for (k, p) in o.properties.iter().enumerate() {
                let prop = Property::from_symbol(p).ok_or_else(|| {
                    FixtureError::new(
                        format!("objects[{i}].properties[{k}]"),
                        format!("unknown property `{p}`"),
                    )
                })?;
                properties.insert(prop);
            }
            let mut affordances = BTreeSet::new();
            for (k, a) in o.affordances.iter().enumerate() {
                let aff = Affordance::from_symbol(a).ok_or_else(|| {
                    FixtureError::new(
                        format!("objects[{i}].affordances[{k}]"),
                        format!("unknown affordance `{a}`"),
                    )
                })?;
                affordances.insert(aff);
            }
            if o.category.is_empty() || o.category.contains(char::is_whitespace) {
                return Err(FixtureError::new(
                    format!("objects[{i}].category"),
                    "categories are hyphenated lowercase symbols",
                ));
            }
            let location = if o.location == "gripper" {
                Location::Gripper
            } else {
                Location::In(ObjectId::new(o.location.clone()))
            };
            objects.push(WorldObject {
                id: ObjectId::new(o.id.clone()),
                category: Category::new(o.category.clone()),
                properties,
                affordances,
                location: Some(location),
            });
        }

        let state = WorldState::build(&room, objects).map_err(|(id, msg)| {
            let path = match id {
                Some(id) if id == room => "room".to_string(),
                Some(id) => raw
                    .objects
                    .iter()
                    .position(|o| o.id == id.as_str())
                    .map(|i| format!("objects[{i}]"))
                    .unwrap_or_else(|| format!("objects[id={id}]")),
                None => "objects".to_string(),
            };
            FixtureError::new(path, msg)
        })?;

        let categories: BTreeSet<&str> = raw.objects.iter().map(|o| o.category.as_str()).collect();
        let mut assertions = Vec::new();
        for (i, o) in raw.objects.iter().enumerate() {
            let id = ObjectId::new(o.id.clone());
            if let Some(target) = &o.target {
                if !categories.contains(target.as_str()) {
                    return Err(FixtureError::new(
                        format!("objects[{i}].target"),
                        format!("no object has category `{target}`"),
                    ));
                }
                if !state.has_affordance(&id, Affordance::Grabbable) {
                    return Err(FixtureError::new(
                        format!("objects[{i}].target"),
                        "only grabbable objects can have a target",
                    ));
                }
                assertions.push(GoalAssertion::Placement {
                    object: id.clone(),
                    category: Category::new(o.category.clone()),
                    destination: Category::new(target.clone()),
                });
            }
        }
        for (i, o) in raw.objects.iter().enumerate() {
            if o.must_close {
                let id = ObjectId::new(o.id.clone());
                if !state.has_affordance(&id, Affordance::Closeable) {
                    return Err(FixtureError::new(
                        format!("objects[{i}].must_close"),
                        "only closeable objects can be required closed",
                    ));
                }
                assertions.push(GoalAssertion::Closure {
                    object: id,
                    category: Category::new(o.category.clone()),
                });
            }
        }
        Ok(WorldFixture {
            name: raw.name,
            state,
            assertions,
            intro: raw.intro,
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<WorldFixture, FixtureError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| FixtureError::new(path.display().to_string(), e.to_string()))?;
        WorldFixture::from_json(&text)
    }
}

/// Parses a fixture document into a validated [`WorldState`].
pub fn load_world(text: &str) -> Result<WorldState, FixtureError> {
    WorldFixture::from_json(text).map(|f| f.state)
}

/// Loads a fixture file including its answer key.
pub fn load_fixture(path: impl AsRef<Path>) -> Result<WorldFixture, FixtureError> {
    WorldFixture::from_path(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(objects: &str) -> String {
        format!(
            r#"{{"schema_version":1,"name":"t","room":{{"id":"kitchen","category":"kitchen"}},"objects":[{objects}]}}"#
        )
    }

    const TABLE: &str = r#"{"id":"table-1","category":"table","affordances":["receptacle"],"location":"kitchen"}"#;

    #[test]
    fn loads_minimal_fixture() {
        let text = doc(&format!(
            r#"{TABLE},{{"id":"plate-1","category":"ceramic-plate","properties":["not_grabbed"],"affordances":["grabbable"],"location":"table-1","target":"table"}}"#
        ));
        let fixture = WorldFixture::from_json(&text).unwrap();
        assert_eq!(fixture.state.ids().len(), 3);
        assert_eq!(fixture.assertions.len(), 1);
        assert!(fixture.assertions[0].holds(&fixture.state));
    }

    #[test]
    fn rejects_unknown_property_with_path() {
        let text = doc(&format!(
            r#"{TABLE},{{"id":"plate-1","category":"ceramic-plate","properties":["dirty"],"affordances":["grabbable"],"location":"table-1"}}"#
        ));
        let err = load_world(&text).unwrap_err();
        assert_eq!(err.path, "objects[1].properties[0]");
        assert!(err.message.contains("dirty"));
    }

    #[test]
    fn rejects_missing_open_closed() {
        let text = doc(
            r#"{"id":"dw","category":"dishwasher","affordances":["openable","closeable","receptacle"],"location":"kitchen"}"#,
        );
        let err = load_world(&text).unwrap_err();
        assert_eq!(err.path, "objects[0]");
    }

    #[test]
    fn rejects_dangling_location() {
        let text = doc(
            r#"{"id":"plate-1","category":"ceramic-plate","properties":["not_grabbed"],"affordances":["grabbable"],"location":"nowhere"}"#,
        );
        let err = load_world(&text).unwrap_err();
        assert_eq!(err.path, "objects[0]");
        assert!(err.message.contains("nowhere"));
    }

    #[test]
    fn rejects_two_objects_in_gripper() {
        let text = doc(
            r#"{"id":"a","category":"cup","properties":["grabbed"],"affordances":["grabbable"],"location":"gripper"},
               {"id":"b","category":"cup","properties":["grabbed"],"affordances":["grabbable"],"location":"gripper"}"#,
        );
        let err = load_world(&text).unwrap_err();
        assert!(err.message.contains("more than one"), "{err}");
    }

    #[test]
    fn rejects_containment_cycle() {
        let text = doc(
            r#"{"id":"a","category":"box","affordances":["receptacle"],"location":"b"},
               {"id":"b","category":"box","affordances":["receptacle"],"location":"a"}"#,
        );
        let err = load_world(&text).unwrap_err();
        assert!(err.message.contains("cycle"), "{err}");
    }

    #[test]
    fn rejects_wrong_schema_version() {
        let text = r#"{"schema_version":2,"room":{"id":"k","category":"kitchen"},"objects":[]}"#;
        assert_eq!(load_world(text).unwrap_err().path, "schema_version");
    }

    #[test]
    fn rejects_unknown_field() {
        let text = doc(r#"{"id":"t","category":"table","color":"red","location":"kitchen"}"#);
        assert!(load_world(&text).is_err());
    }
}
