//! Scene grammar and the behavioural-rule oracles.
//!
//! A scene frame has two object slots (upper left and upper right) and three
//! actor slots along the bottom. Animate actors pursue the object they
//! interacted with; inanimate actors repeat the side they moved to before.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    TargetObject,
    AnimateActor,
    InanimateActor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitTag {
    TrainOnly,
    TestNovelT1,
    TestNovelT2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Slot {
    UpperLeft,
    UpperRight,
    Bottom,
    BottomLeft,
    BottomRight,
}

impl Slot {
    pub const ALL: [Slot; 5] = [
        Slot::UpperLeft,
        Slot::UpperRight,
        Slot::Bottom,
        Slot::BottomLeft,
        Slot::BottomRight,
    ];

    pub fn is_object_slot(self) -> bool {
        matches!(self, Slot::UpperLeft | Slot::UpperRight)
    }

    pub fn is_actor_slot(self) -> bool {
        !self.is_object_slot()
    }

    /// Horizontal side of the slot; `Bottom` is centred.
    pub fn side(self) -> Option<Side> {
        match self {
            Slot::UpperLeft | Slot::BottomLeft => Some(Side::Left),
            Slot::UpperRight | Slot::BottomRight => Some(Side::Right),
            Slot::Bottom => None,
        }
    }

    pub fn object_slot(side: Side) -> Slot {
        match side {
            Side::Left => Slot::UpperLeft,
            Side::Right => Slot::UpperRight,
        }
    }

    pub fn actor_slot(side: Side) -> Slot {
        match side {
            Side::Left => Slot::BottomLeft,
            Side::Right => Slot::BottomRight,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Side {
        if i == 0 {
            Side::Left
        } else {
            Side::Right
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Animacy {
    Animate,
    Inanimate,
}

/// The animacy class used as a label in the self-propulsion task.
pub type AnimacyLabel = Animacy;

impl Animacy {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Animacy {
        if i == 0 {
            Animacy::Animate
        } else {
            Animacy::Inanimate
        }
    }
}

/// One snapshot of a scene: a partial map from slots to entities.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Frame {
    occupancy: BTreeMap<Slot, EntityId>,
}

impl Frame {
    pub fn get(&self, slot: Slot) -> Option<EntityId> {
        self.occupancy.get(&slot).copied()
    }

    pub fn occupancy(&self) -> &BTreeMap<Slot, EntityId> {
        &self.occupancy
    }

    pub fn objects(&self) -> Option<(EntityId, EntityId)> {
        Some((self.get(Slot::UpperLeft)?, self.get(Slot::UpperRight)?))
    }

    /// The actor and the slot it occupies, if any.
    pub fn actor(&self) -> Option<(EntityId, Slot)> {
        self.occupancy
            .iter()
            .find(|(s, _)| s.is_actor_slot())
            .map(|(s, e)| (*e, *s))
    }

    /// Side of the object slot holding `entity`.
    pub fn object_side(&self, entity: EntityId) -> Option<Side> {
        Side::BOTH
            .into_iter()
            .find(|&side| self.get(Slot::object_slot(side)) == Some(entity))
    }

    /// Checks the frame invariants on data read from outside.
    pub fn validate(&self) -> Result<()> {
        let actors = self.occupancy.keys().filter(|s| s.is_actor_slot()).count();
        if actors > 1 {
            return Err(Error::BadSlot("more than one actor slot occupied".into()));
        }
        let mut seen: Vec<EntityId> = self.occupancy.values().copied().collect();
        seen.sort();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEntity(w[0].0));
        }
        Ok(())
    }
}

/// Builds a frame with optional objects at (UpperLeft, UpperRight) and an
/// optional actor in one of the bottom slots.
pub fn build_frame(
    objects: Option<(EntityId, EntityId)>,
    actor: Option<(EntityId, Slot)>,
) -> Result<Frame> {
    let mut occupancy = BTreeMap::new();
    if let Some((left, right)) = objects {
        if left == right {
            return Err(Error::DuplicateEntity(left.0));
        }
        occupancy.insert(Slot::UpperLeft, left);
        occupancy.insert(Slot::UpperRight, right);
    }
    if let Some((id, slot)) = actor {
        if !slot.is_actor_slot() {
            return Err(Error::BadSlot(format!("{slot:?}")));
        }
        if occupancy.values().any(|&e| e == id) {
            return Err(Error::DuplicateEntity(id.0));
        }
        occupancy.insert(slot, id);
    }
    Ok(Frame { occupancy })
}

/// Exchanges the two objects; the actor stays where it is.
pub fn swap_objects(frame: &Frame) -> Result<Frame> {
    let (left, right) = frame.objects().ok_or(Error::MissingObjects)?;
    let mut out = frame.clone();
    out.occupancy.insert(Slot::UpperLeft, right);
    out.occupancy.insert(Slot::UpperRight, left);
    Ok(out)
}

/// Returns a copy of `frame` with the actor moved to `slot`.
pub fn move_actor(frame: &Frame, slot: Slot) -> Result<Frame> {
    let (actor, _) = frame
        .actor()
        .ok_or_else(|| Error::IncompleteInstance("frame has no actor".into()))?;
    build_frame(frame.objects(), Some((actor, slot)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Paradigm {
    ThreeFrame,
    FiveFrame,
    SevenFrame,
    OneFrameGoal,
    TwoFrameMotion,
}

impl Paradigm {
    pub const ALL: [Paradigm; 5] = [
        Paradigm::ThreeFrame,
        Paradigm::FiveFrame,
        Paradigm::SevenFrame,
        Paradigm::OneFrameGoal,
        Paradigm::TwoFrameMotion,
    ];

    pub fn frame_count(self) -> usize {
        match self {
            Paradigm::ThreeFrame => 3,
            Paradigm::FiveFrame => 5,
            Paradigm::SevenFrame => 7,
            Paradigm::OneFrameGoal => 1,
            Paradigm::TwoFrameMotion => 2,
        }
    }

    /// Paradigms whose label is the actor's next side.
    pub fn is_prediction(self) -> bool {
        self != Paradigm::TwoFrameMotion
    }

    pub fn name(self) -> &'static str {
        match self {
            Paradigm::ThreeFrame => "three-frame",
            Paradigm::FiveFrame => "five-frame",
            Paradigm::SevenFrame => "seven-frame",
            Paradigm::OneFrameGoal => "one-frame-goal",
            Paradigm::TwoFrameMotion => "two-frame-motion",
        }
    }
}

impl std::str::FromStr for Paradigm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Paradigm::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown paradigm `{s}`"))
    }
}

/// Generalisation tier the instance was generated for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    T1,
    T2,
}

impl std::str::FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "T1" | "t1" => Ok(Condition::T1),
            "T2" | "t2" => Ok(Condition::T2),
            _ => Err(format!("unknown condition `{s}` (expected T1 or T2)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Side(Side),
    Animacy(Animacy),
}

impl Label {
    /// Class index used by the classifier (Left/Animate = 0).
    pub fn class_index(self) -> usize {
        match self {
            Label::Side(s) => s.index(),
            Label::Animacy(a) => a.index(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParadigmInstance {
    pub paradigm: Paradigm,
    pub frames: Vec<Frame>,
    pub actor: EntityId,
    pub animacy: Animacy,
    pub goal: Option<EntityId>,
    pub interaction_side: Option<Side>,
    pub label: Label,
    pub condition: Condition,
    pub seed: u64,
    pub index: u64,
}

impl ParadigmInstance {
    pub fn last_frame(&self) -> Option<&Frame> {
        self.frames.last()
    }

    /// Label derived from the behavioural rules.
    pub fn oracle_label(&self) -> Result<Label> {
        if self.paradigm == Paradigm::TwoFrameMotion {
            animacy_oracle(self).map(Label::Animacy)
        } else {
            behavior_oracle(self).map(Label::Side)
        }
    }

    /// Every target object appearing in any frame, in first-seen order.
    pub fn objects(&self) -> Vec<EntityId> {
        let mut out = Vec::new();
        for f in &self.frames {
            for slot in [Slot::UpperLeft, Slot::UpperRight] {
                if let Some(e) = f.get(slot) {
                    if !out.contains(&e) {
                        out.push(e);
                    }
                }
            }
        }
        out
    }
}

/// Side the actor moves to next.
///
/// Animate actors go to wherever their goal object sits in the final frame;
/// inanimate actors repeat their earlier interaction side.
pub fn behavior_oracle(instance: &ParadigmInstance) -> Result<Side> {
    if !instance.paradigm.is_prediction() {
        return Err(Error::IncompleteInstance(
            "behaviour oracle needs a prediction paradigm".into(),
        ));
    }
    let last = instance
        .last_frame()
        .ok_or_else(|| Error::IncompleteInstance("no frames".into()))?;
    let goal_side = || -> Result<Side> {
        let goal = instance
            .goal
            .ok_or_else(|| Error::IncompleteInstance("animate actor without goal".into()))?;
        last.object_side(goal).ok_or_else(|| {
            Error::IncompleteInstance(format!("goal {goal} absent from final frame"))
        })
    };
    if instance.paradigm == Paradigm::OneFrameGoal {
        return goal_side();
    }
    match instance.animacy {
        Animacy::Animate => goal_side(),
        Animacy::Inanimate => instance
            .interaction_side
            .ok_or_else(|| Error::IncompleteInstance("missing interaction side".into())),
    }
}

/// Self-propulsion rule over the first two frames: animate iff the actor
/// changed slot.
pub fn animacy_oracle(instance: &ParadigmInstance) -> Result<Animacy> {
    if instance.frames.len() < 2 {
        return Err(Error::IncompleteInstance(
            "animacy oracle needs two motion frames".into(),
        ));
    }
    let slot = |f: &Frame| {
        f.actor()
            .map(|(_, s)| s)
            .ok_or_else(|| Error::IncompleteInstance("motion frame without actor".into()))
    };
    let (a, b) = (slot(&instance.frames[0])?, slot(&instance.frames[1])?);
    Ok(if a != b {
        Animacy::Animate
    } else {
        Animacy::Inanimate
    })
}

/// Sizes of the entity pools in each split region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogSizes {
    pub objects_per_region: usize,
    pub animate_per_region: usize,
    pub inanimate_per_region: usize,
}

impl Default for CatalogSizes {
    fn default() -> Self {
        CatalogSizes {
            objects_per_region: 48,
            animate_per_region: 32,
            inanimate_per_region: 32,
        }
    }
}

/// The universe of entity ids together with their kinds and split regions.
///
/// Objects exist in all three regions; actors exist in `TrainOnly` (shared by
/// training data and T1 tests) and `TestNovelT2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub object_pool: Vec<EntityId>,
    pub animate_pool: Vec<EntityId>,
    pub inanimate_pool: Vec<EntityId>,
    /// Indexed by entity id.
    pub split_assignment: Vec<SplitTag>,
}

impl Catalog {
    pub fn new(sizes: CatalogSizes) -> Catalog {
        let mut split_assignment = Vec::new();
        let mut alloc = |n: usize, tag: SplitTag, pool: &mut Vec<EntityId>| {
            for _ in 0..n {
                pool.push(EntityId(split_assignment.len() as u32));
                split_assignment.push(tag);
            }
        };
        let mut object_pool = Vec::new();
        let mut animate_pool = Vec::new();
        let mut inanimate_pool = Vec::new();
        for tag in [SplitTag::TrainOnly, SplitTag::TestNovelT1, SplitTag::TestNovelT2] {
            alloc(sizes.objects_per_region, tag, &mut object_pool);
        }
        for tag in [SplitTag::TrainOnly, SplitTag::TestNovelT2] {
            alloc(sizes.animate_per_region, tag, &mut animate_pool);
        }
        for tag in [SplitTag::TrainOnly, SplitTag::TestNovelT2] {
            alloc(sizes.inanimate_per_region, tag, &mut inanimate_pool);
        }
        Catalog {
            object_pool,
            animate_pool,
            inanimate_pool,
            split_assignment,
        }
    }

    pub fn len(&self) -> usize {
        self.split_assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.split_assignment.is_empty()
    }

    pub fn kind(&self, id: EntityId) -> Option<EntityKind> {
        if self.object_pool.contains(&id) {
            Some(EntityKind::TargetObject)
        } else if self.animate_pool.contains(&id) {
            Some(EntityKind::AnimateActor)
        } else if self.inanimate_pool.contains(&id) {
            Some(EntityKind::InanimateActor)
        } else {
            None
        }
    }

    pub fn tag(&self, id: EntityId) -> Option<SplitTag> {
        self.split_assignment.get(id.0 as usize).copied()
    }

    pub fn pool(&self, kind: EntityKind) -> &[EntityId] {
        match kind {
            EntityKind::TargetObject => &self.object_pool,
            EntityKind::AnimateActor => &self.animate_pool,
            EntityKind::InanimateActor => &self.inanimate_pool,
        }
    }

    /// Entities of `kind` assigned to `tag`, in id order.
    pub fn region(&self, kind: EntityKind, tag: SplitTag) -> Vec<EntityId> {
        self.pool(kind)
            .iter()
            .copied()
            .filter(|&e| self.tag(e) == Some(tag))
            .collect()
    }

    pub fn actor_pool(&self, animacy: Animacy) -> &[EntityId] {
        match animacy {
            Animacy::Animate => &self.animate_pool,
            Animacy::Inanimate => &self.inanimate_pool,
        }
    }

    pub fn actor_kind(animacy: Animacy) -> EntityKind {
        match animacy {
            Animacy::Animate => EntityKind::AnimateActor,
            Animacy::Inanimate => EntityKind::InanimateActor,
        }
    }

    /// Pools must be pairwise disjoint and cover every id exactly once.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![0u8; self.len()];
        for id in self
            .object_pool
            .iter()
            .chain(&self.animate_pool)
            .chain(&self.inanimate_pool)
        {
            let slot = seen
                .get_mut(id.0 as usize)
                .ok_or_else(|| Error::BadGenConfig(format!("entity {id} has no split tag")))?;
            *slot += 1;
        }
        if let Some(i) = seen.iter().position(|&c| c != 1) {
            return Err(Error::BadGenConfig(format!(
                "entity e{i} belongs to {} pools",
                seen[i]
            )));
        }
        Ok(())
    }
}

impl Default for Catalog {
    fn default() -> Self {
        Catalog::new(CatalogSizes::default())
    }
}
