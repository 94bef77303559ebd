use super::{Affordance, Category, Location, ObjectId, PrimitiveAction, Property};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Materialized view of one object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldObject {
    pub id: ObjectId,
    pub category: Category,
    pub properties: BTreeSet<Property>,
    pub affordances: BTreeSet<Affordance>,
    /// `None` only for the room itself.
    #[serde(with = "location_serde")]
    pub location: Option<Location>,
}

mod location_serde {
    use super::{Location, ObjectId};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(loc: &Option<Location>, s: S) -> Result<S::Ok, S::Error> {
        match loc {
            None => s.serialize_none(),
            Some(Location::Gripper) => s.serialize_str("gripper"),
            Some(Location::In(id)) => s.serialize_str(id.as_str()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Location>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        Ok(raw.map(|s| {
            if s == "gripper" {
                Location::Gripper
            } else {
                Location::In(ObjectId::new(s))
            }
        }))
    }
}

#[derive(Debug)]
struct Catalog {
    ids: Vec<ObjectId>,
    categories: Vec<Category>,
    affordances: Vec<u8>,
    index: HashMap<ObjectId, usize>,
    by_id: Vec<usize>,
    room: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Slot {
    Root,
    Gripper,
    In(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Status {
    slot: Slot,
    open: bool,
    reach: Option<bool>,
}

fn bit(a: Affordance) -> u8 {
    1 << (a as u8)
}

/// Immutable-by-convention world value. Cloning is cheap: the static catalog
/// is shared and only per-object status is copied.
#[derive(Debug, Clone)]
pub struct WorldState {
    catalog: Arc<Catalog>,
    status: Vec<Status>,
    gripper: Option<u32>,
}

impl PartialEq for WorldState {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.catalog, &other.catalog) || self.catalog.ids == other.catalog.ids)
            && self.status == other.status
            && self.gripper == other.gripper
    }
}

impl Eq for WorldState {}

impl Hash for WorldState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.status.hash(state);
        self.gripper.hash(state);
    }
}

/// Invariant violation found while building a state: (offending object, message).
pub(crate) type BuildError = (Option<ObjectId>, String);

impl WorldState {
    /// Builds a state from object views, checking every invariant.
    pub fn from_objects(room: &ObjectId, objects: Vec<WorldObject>) -> Result<WorldState, String> {
        Self::build(room, objects).map_err(|(id, msg)| match id {
            Some(id) => format!("{id}: {msg}"),
            None => msg,
        })
    }

    pub(crate) fn build(room: &ObjectId, objects: Vec<WorldObject>) -> Result<WorldState, BuildError> {
        let mut index = HashMap::new();
        for (i, obj) in objects.iter().enumerate() {
            if obj.id.as_str() == "gripper" {
                return Err((Some(obj.id.clone()), "`gripper` is a reserved id".into()));
            }
            if index.insert(obj.id.clone(), i).is_some() {
                return Err((Some(obj.id.clone()), "duplicate object id".into()));
            }
        }
        let room_idx = *index
            .get(room)
            .ok_or_else(|| (Some(room.clone()), "room is not among the objects".to_string()))?;

        let mut status = Vec::with_capacity(objects.len());
        let mut gripper = None;
        for (i, obj) in objects.iter().enumerate() {
            let err = |msg: &str| (Some(obj.id.clone()), msg.to_string());
            let aff = &obj.affordances;
            let props = &obj.properties;
            let openable = aff.contains(&Affordance::Openable);
            let grabbable = aff.contains(&Affordance::Grabbable);
            if openable != aff.contains(&Affordance::Closeable) {
                return Err(err("openable and closeable must be declared together"));
            }
            let open = props.contains(&Property::Open);
            let closed = props.contains(&Property::Closed);
            if openable && open == closed {
                return Err(err("openable object needs exactly one of open/closed"));
            }
            if !openable && (open || closed) {
                return Err(err("open/closed only allowed on openable objects"));
            }
            let grabbed = props.contains(&Property::Grabbed);
            let not_grabbed = props.contains(&Property::NotGrabbed);
            if grabbable && grabbed == not_grabbed {
                return Err(err("grabbable object needs exactly one of grabbed/not_grabbed"));
            }
            if !grabbable && (grabbed || not_grabbed) {
                return Err(err("grabbed/not_grabbed only allowed on grabbable objects"));
            }
            let reachable = props.contains(&Property::Reachable);
            let not_reachable = props.contains(&Property::NotReachable);
            if reachable && not_reachable {
                return Err(err("reachable and not_reachable are exclusive"));
            }
            let reach = match (reachable, not_reachable) {
                (true, _) => Some(true),
                (_, true) => Some(false),
                _ => None,
            };
            let slot = match (&obj.location, i == room_idx) {
                (None, true) => Slot::Root,
                (None, false) => return Err(err("only the room may lack a location")),
                (Some(_), true) => return Err(err("the room cannot have a location")),
                (Some(Location::Gripper), false) => {
                    if !grabbed {
                        return Err(err("object in gripper must have property grabbed"));
                    }
                    if gripper.replace(i as u32).is_some() {
                        return Err(err("gripper holds more than one object"));
                    }
                    Slot::Gripper
                }
                (Some(Location::In(parent)), false) => {
                    if grabbed {
                        return Err(err("grabbed object must be located in the gripper"));
                    }
                    let p = *index
                        .get(parent)
                        .ok_or_else(|| err(&format!("location `{parent}` does not exist")))?;
                    if p != room_idx && !objects[p].affordances.contains(&Affordance::Receptacle) {
                        return Err(err(&format!("location `{parent}` is not a receptacle")));
                    }
                    Slot::In(p as u32)
                }
            };
            status.push(Status { slot, open, reach });
        }

        let mut by_id: Vec<usize> = (0..objects.len()).collect();
        by_id.sort_by(|a, b| objects[*a].id.cmp(&objects[*b].id));
        let catalog = Catalog {
            ids: objects.iter().map(|o| o.id.clone()).collect(),
            categories: objects.iter().map(|o| o.category.clone()).collect(),
            affordances: objects
                .iter()
                .map(|o| o.affordances.iter().fold(0u8, |acc, a| acc | bit(*a)))
                .collect(),
            index,
            by_id,
            room: room_idx,
        };
        let state = WorldState {
            catalog: Arc::new(catalog),
            status,
            gripper,
        };
        for i in 0..state.len() {
            if state.ancestor_chain_cycles(i) {
                return Err((Some(state.catalog.ids[i].clone()), "containment cycle".into()));
            }
        }
        Ok(state)
    }

    fn len(&self) -> usize {
        self.status.len()
    }

    fn ancestor_chain_cycles(&self, start: usize) -> bool {
        let mut cur = start;
        for _ in 0..=self.len() {
            match self.status[cur].slot {
                Slot::In(p) => cur = p as usize,
                Slot::Root | Slot::Gripper => return false,
            }
            if cur == start {
                return true;
            }
        }
        true
    }

    /// Re-checks every invariant; used by property tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        let rebuilt = Self::from_objects(self.robot_location(), self.objects().collect())?;
        if rebuilt != *self {
            return Err("state does not round-trip through its object views".into());
        }
        Ok(())
    }

    pub fn robot_location(&self) -> &ObjectId {
        &self.catalog.ids[self.catalog.room]
    }

    pub fn gripper(&self) -> Option<&ObjectId> {
        self.gripper.map(|i| &self.catalog.ids[i as usize])
    }

    pub fn contains(&self, id: &ObjectId) -> bool {
        self.catalog.index.contains_key(id)
    }

    fn idx(&self, id: &ObjectId) -> Option<usize> {
        self.catalog.index.get(id).copied()
    }

    pub fn category(&self, id: &ObjectId) -> Option<&Category> {
        self.idx(id).map(|i| &self.catalog.categories[i])
    }

    pub fn has_affordance(&self, id: &ObjectId, affordance: Affordance) -> bool {
        self.idx(id)
            .is_some_and(|i| self.catalog.affordances[i] & bit(affordance) != 0)
    }

    fn aff(&self, i: usize, affordance: Affordance) -> bool {
        self.catalog.affordances[i] & bit(affordance) != 0
    }

    fn prop(&self, i: usize, property: Property) -> bool {
        let s = &self.status[i];
        match property {
            Property::Open => self.aff(i, Affordance::Openable) && s.open,
            Property::Closed => self.aff(i, Affordance::Openable) && !s.open,
            Property::Grabbed => s.slot == Slot::Gripper,
            Property::NotGrabbed => self.aff(i, Affordance::Grabbable) && s.slot != Slot::Gripper,
            Property::Reachable => s.reach == Some(true),
            Property::NotReachable => s.reach == Some(false),
        }
    }

    pub fn has_property(&self, id: &ObjectId, property: Property) -> bool {
        self.idx(id).is_some_and(|i| self.prop(i, property))
    }

    pub fn location(&self, id: &ObjectId) -> Option<Location> {
        self.idx(id).and_then(|i| self.slot_location(i))
    }

    fn slot_location(&self, i: usize) -> Option<Location> {
        match self.status[i].slot {
            Slot::Root => None,
            Slot::Gripper => Some(Location::Gripper),
            Slot::In(p) => Some(Location::In(self.catalog.ids[p as usize].clone())),
        }
    }

    /// The object directly containing `id`, if it is not held.
    pub fn container_of(&self, id: &ObjectId) -> Option<&ObjectId> {
        match self.status[self.idx(id)?].slot {
            Slot::In(p) => Some(&self.catalog.ids[p as usize]),
            _ => None,
        }
    }

    /// True iff `id` sits (directly) inside `container`.
    pub fn is_in(&self, id: &ObjectId, container: &ObjectId) -> bool {
        match (self.idx(id), self.idx(container)) {
            (Some(i), Some(c)) => self.status[i].slot == Slot::In(c as u32),
            _ => false,
        }
    }

    pub fn object(&self, id: &ObjectId) -> Option<WorldObject> {
        self.idx(id).map(|i| self.view(i))
    }

    fn view(&self, i: usize) -> WorldObject {
        WorldObject {
            id: self.catalog.ids[i].clone(),
            category: self.catalog.categories[i].clone(),
            properties: Property::ALL.into_iter().filter(|p| self.prop(i, *p)).collect(),
            affordances: Affordance::ALL.into_iter().filter(|a| self.aff(i, *a)).collect(),
            location: self.slot_location(i),
        }
    }

    /// Objects in fixture order.
    pub fn objects(&self) -> impl Iterator<Item = WorldObject> + '_ {
        (0..self.len()).map(|i| self.view(i))
    }

    /// Object ids in fixture order.
    pub fn ids(&self) -> &[ObjectId] {
        &self.catalog.ids
    }

    /// Object ids in ascending id order.
    pub fn ids_sorted(&self) -> impl Iterator<Item = &ObjectId> + '_ {
        self.catalog.by_id.iter().map(|i| &self.catalog.ids[*i])
    }

    /// Objects of `category` in ascending id order.
    pub fn objects_of_category<'a>(&'a self, category: &'a Category) -> impl Iterator<Item = &'a ObjectId> + 'a {
        self.catalog
            .by_id
            .iter()
            .filter(move |i| &self.catalog.categories[**i] == category)
            .map(|i| &self.catalog.ids[*i])
    }

    /// Objects directly inside `container`, fixture order.
    pub fn contents(&self, container: &ObjectId) -> Vec<ObjectId> {
        let Some(c) = self.idx(container) else {
            return Vec::new();
        };
        (0..self.len())
            .filter(|i| self.status[*i].slot == Slot::In(c as u32))
            .map(|i| self.catalog.ids[i].clone())
            .collect()
    }

    fn inside(&self, mut i: usize, ancestor: usize) -> bool {
        for _ in 0..=self.len() {
            if i == ancestor {
                return true;
            }
            match self.status[i].slot {
                Slot::In(p) => i = p as usize,
                _ => return false,
            }
        }
        false
    }

    pub(crate) fn applicable(&self, action: &PrimitiveAction) -> bool {
        let empty = self.gripper.is_none();
        match action {
            PrimitiveAction::PickUp(o) => self
                .idx(o)
                .is_some_and(|i| empty && self.aff(i, Affordance::Grabbable) && self.prop(i, Property::NotGrabbed)),
            PrimitiveAction::PutDown(o, d) => match (self.idx(o), self.idx(d)) {
                (Some(i), Some(j)) => {
                    self.gripper == Some(i as u32)
                        && self.aff(j, Affordance::Receptacle)
                        && (!self.aff(j, Affordance::Openable) || self.status[j].open)
                        && !self.inside(j, i)
                }
                _ => false,
            },
            PrimitiveAction::Open(o) => self
                .idx(o)
                .is_some_and(|i| empty && self.aff(i, Affordance::Openable) && !self.status[i].open),
            PrimitiveAction::Close(o) => self
                .idx(o)
                .is_some_and(|i| empty && self.aff(i, Affordance::Closeable) && self.status[i].open),
        }
    }

    pub(crate) fn apply_unchecked(&self, action: &PrimitiveAction) -> WorldState {
        let mut next = self.clone();
        let idx = |id: &ObjectId| self.catalog.index[id];
        match action {
            PrimitiveAction::PickUp(o) => {
                let i = idx(o);
                next.status[i].slot = Slot::Gripper;
                next.gripper = Some(i as u32);
            }
            PrimitiveAction::PutDown(o, d) => {
                let (i, j) = (idx(o), idx(d));
                next.status[i].slot = Slot::In(j as u32);
                next.gripper = None;
            }
            PrimitiveAction::Open(o) => next.status[idx(o)].open = true,
            PrimitiveAction::Close(o) => next.status[idx(o)].open = false,
        }
        next
    }

    pub(crate) fn applicable_actions(&self) -> Vec<PrimitiveAction> {
        let ids = &self.catalog.ids;
        let order = &self.catalog.by_id;
        let mut out = Vec::new();
        if self.gripper.is_none() {
            for &i in order {
                let a = PrimitiveAction::Open(ids[i].clone());
                if self.applicable(&a) {
                    out.push(a);
                }
            }
            for &i in order {
                let a = PrimitiveAction::Close(ids[i].clone());
                if self.applicable(&a) {
                    out.push(a);
                }
            }
            for &i in order {
                let a = PrimitiveAction::PickUp(ids[i].clone());
                if self.applicable(&a) {
                    out.push(a);
                }
            }
        } else if let Some(h) = self.gripper {
            let held = &ids[h as usize];
            for &j in order {
                let a = PrimitiveAction::PutDown(held.clone(), ids[j].clone());
                if self.applicable(&a) {
                    out.push(a);
                }
            }
        }
        out
    }
}
