//! Deterministic simulation of the office-kitchen domain.
//!
//! A [`WorldState`] holds objects with categories, affordances and a small
//! closed vocabulary of properties, plus a single-armed robot. The four
//! primitive actions have STRIPS-like preconditions and effects; [`apply`]
//! returns a fresh state and never mutates its input, so states can be
//! shared freely by the planner.
//!
//! Locomotion is implicit: every object in the robot's room counts as
//! reachable for the primitives.

mod fixture;
mod state;

pub use fixture::{load_fixture, load_world, FixtureError, GoalAssertion, TaskIntro, WorldFixture};
pub use state::{WorldObject, WorldState};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Opaque, unique object token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(String);

impl ObjectId {
    pub fn new(id: impl Into<String>) -> Self {
        ObjectId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Hyphenated lowercase category symbol such as `ceramic-plate`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Category(String);

impl Category {
    pub fn new(name: impl Into<String>) -> Self {
        Category(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Open,
    Closed,
    Grabbed,
    NotGrabbed,
    Reachable,
    NotReachable,
}

impl Property {
    pub const ALL: [Property; 6] = [
        Property::Open,
        Property::Closed,
        Property::Grabbed,
        Property::NotGrabbed,
        Property::Reachable,
        Property::NotReachable,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Property::Open => "open",
            Property::Closed => "closed",
            Property::Grabbed => "grabbed",
            Property::NotGrabbed => "not_grabbed",
            Property::Reachable => "reachable",
            Property::NotReachable => "not_reachable",
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Property> {
        Property::ALL.into_iter().find(|p| p.symbol() == symbol)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Affordance {
    Grabbable,
    Openable,
    Closeable,
    Receptacle,
}

impl Affordance {
    pub const ALL: [Affordance; 4] = [
        Affordance::Grabbable,
        Affordance::Openable,
        Affordance::Closeable,
        Affordance::Receptacle,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Affordance::Grabbable => "grabbable",
            Affordance::Openable => "openable",
            Affordance::Closeable => "closeable",
            Affordance::Receptacle => "receptacle",
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Affordance> {
        Affordance::ALL.into_iter().find(|a| a.symbol() == symbol)
    }
}

impl fmt::Display for Affordance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Where an object sits: inside another object (or the room) or in the gripper.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Location {
    Gripper,
    In(ObjectId),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Gripper => f.write_str("gripper"),
            Location::In(id) => write!(f, "{id}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verb {
    Open,
    Close,
    PickUp,
    PutDown,
}

impl Verb {
    pub fn symbol(self) -> &'static str {
        match self {
            Verb::Open => "open",
            Verb::Close => "close",
            Verb::PickUp => "pick-up",
            Verb::PutDown => "put-down",
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Verb> {
        [Verb::Open, Verb::Close, Verb::PickUp, Verb::PutDown]
            .into_iter()
            .find(|v| v.symbol() == symbol)
    }
}

/// A grounded primitive. The derived ordering (`open < close < pick-up <
/// put-down`, then object ids) is the planner's tie-break order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrimitiveAction {
    Open(ObjectId),
    Close(ObjectId),
    PickUp(ObjectId),
    PutDown(ObjectId, ObjectId),
}

impl PrimitiveAction {
    pub fn verb(&self) -> Verb {
        match self {
            PrimitiveAction::Open(_) => Verb::Open,
            PrimitiveAction::Close(_) => Verb::Close,
            PrimitiveAction::PickUp(_) => Verb::PickUp,
            PrimitiveAction::PutDown(..) => Verb::PutDown,
        }
    }

    pub fn args(&self) -> Vec<&ObjectId> {
        match self {
            PrimitiveAction::Open(o) | PrimitiveAction::Close(o) | PrimitiveAction::PickUp(o) => {
                vec![o]
            }
            PrimitiveAction::PutDown(o, d) => vec![o, d],
        }
    }

    pub fn from_parts(verb: Verb, args: &[ObjectId]) -> Option<PrimitiveAction> {
        match (verb, args) {
            (Verb::Open, [o]) => Some(PrimitiveAction::Open(o.clone())),
            (Verb::Close, [o]) => Some(PrimitiveAction::Close(o.clone())),
            (Verb::PickUp, [o]) => Some(PrimitiveAction::PickUp(o.clone())),
            (Verb::PutDown, [o, d]) => Some(PrimitiveAction::PutDown(o.clone(), d.clone())),
            _ => None,
        }
    }
}

impl fmt::Display for PrimitiveAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<&str> = self.args().into_iter().map(ObjectId::as_str).collect();
        write!(f, "{}({})", self.verb().symbol(), args.join(", "))
    }
}

#[derive(Serialize, Deserialize)]
struct ActionRepr {
    verb: Verb,
    args: Vec<ObjectId>,
}

impl Serialize for PrimitiveAction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ActionRepr {
            verb: self.verb(),
            args: self.args().into_iter().cloned().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PrimitiveAction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = ActionRepr::deserialize(deserializer)?;
        PrimitiveAction::from_parts(repr.verb, &repr.args).ok_or_else(|| {
            serde::de::Error::custom(format!(
                "{} takes {} argument(s), got {}",
                repr.verb.symbol(),
                if repr.verb == Verb::PutDown { 2 } else { 1 },
                repr.args.len()
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("precondition violated for {0}")]
    PreconditionViolation(PrimitiveAction),
}

/// True iff the action's preconditions hold in `state`.
///
/// Unknown object references make the action inapplicable rather than an
/// error.
pub fn applicable(state: &WorldState, action: &PrimitiveAction) -> bool {
    state.applicable(action)
}

/// Successor state for an applicable action.
pub fn apply(state: &WorldState, action: &PrimitiveAction) -> Result<WorldState, WorldError> {
    if !state.applicable(action) {
        return Err(WorldError::PreconditionViolation(action.clone()));
    }
    Ok(state.apply_unchecked(action))
}

/// Every applicable action in tie-break order.
pub fn applicable_actions(state: &WorldState) -> Vec<PrimitiveAction> {
    state.applicable_actions()
}
