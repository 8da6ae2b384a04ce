//! Sensory, working, and long-term memory, plus the scoped view through
//! which cognitive resources reach them.
//!
//! Resources never hold a [`SensoryMemory`] handle: a [`ResourceView`]
//! borrows working memory mutably and long-term memory immutably, and every
//! sensory request through it is denied and recorded.

use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::condition::{lookup_social, Lookup, Selector};
use crate::model::{
    CognitiveResource, CognitiveSocialFrame, EntityId, FrameId, Percept, ResourceId, Scalar,
    SocialContext,
};

/// Raw percepts awaiting interpretation.
#[derive(Debug, Clone, Default)]
pub struct SensoryMemory {
    percepts: Vec<Percept>,
    reads: u64,
}

impl SensoryMemory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces any stale content with a fresh snapshot.
    pub fn write(&mut self, percepts: Vec<Percept>) {
        self.percepts = percepts;
    }

    /// Takes the current percepts, leaving the store empty.
    pub fn drain(&mut self) -> Vec<Percept> {
        self.reads += 1;
        std::mem::take(&mut self.percepts)
    }

    pub fn is_empty(&self) -> bool {
        self.percepts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.percepts.len()
    }

    /// Number of reads served so far. Used to audit who touched the store.
    pub fn read_count(&self) -> u64 {
        self.reads
    }
}

/// Short-lived state shared by the frame mechanism and deployed resources.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorkingMemory {
    pub social_context: SocialContext,
    pub salient_frames: BTreeSet<FrameId>,
    /// Deployed resource → residual salience in `[0, 1]`.
    pub deployed: BTreeMap<ResourceId, f64>,
    pub scratch: BTreeMap<String, Scalar>,
}

impl WorkingMemory {
    pub fn deployed_ids(&self) -> BTreeSet<ResourceId> {
        self.deployed.keys().cloned().collect()
    }
}

/// Frames and resource definitions. Read-only while a simulation runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LongTermMemory {
    pub frames: BTreeMap<FrameId, CognitiveSocialFrame>,
    pub resources: BTreeMap<ResourceId, CognitiveResource>,
}

impl LongTermMemory {
    pub fn new(
        frames: impl IntoIterator<Item = CognitiveSocialFrame>,
        resources: impl IntoIterator<Item = CognitiveResource>,
    ) -> Self {
        Self {
            frames: frames.into_iter().map(|f| (f.id.clone(), f)).collect(),
            resources: resources.into_iter().map(|r| (r.id.clone(), r)).collect(),
        }
    }

    pub fn frame(&self, id: &FrameId) -> Option<&CognitiveSocialFrame> {
        self.frames.get(id)
    }

    pub fn resource(&self, id: &ResourceId) -> Option<&CognitiveResource> {
        self.resources.get(id)
    }

    /// SHA-256 over the canonical JSON encoding.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("long-term memory serializes");
        hex::encode(Sha256::digest(bytes))
    }

    /// Facts of the deployed knowledge resources, in resource-id order.
    pub fn facts<'a>(
        &'a self,
        deployed: impl IntoIterator<Item = &'a ResourceId>,
        name: &'a str,
    ) -> impl Iterator<Item = &'a Scalar> {
        deployed
            .into_iter()
            .filter_map(|r| self.resources.get(r))
            .filter_map(move |r| r.facts().and_then(|f| f.get(name)))
    }
}

/// Read-only evaluation context over working memory, used by fitness
/// functions and by ascription.
#[derive(Debug, Clone, Copy)]
pub struct MemorySnapshot<'a> {
    pub working: &'a WorkingMemory,
    pub ltm: &'a LongTermMemory,
    pub self_id: &'a EntityId,
}

impl<'a> MemorySnapshot<'a> {
    pub fn new(working: &'a WorkingMemory, ltm: &'a LongTermMemory, self_id: &'a EntityId) -> Self {
        Self {
            working,
            ltm,
            self_id,
        }
    }
}

fn lookup_working(
    working: &WorkingMemory,
    ltm: &LongTermMemory,
    sel: &Selector,
    self_id: &EntityId,
    focus: Option<&EntityId>,
) -> Vec<Scalar> {
    if let Some(values) = lookup_social(&working.social_context, sel, self_id, focus) {
        return values;
    }
    match sel {
        Selector::Fact(name) => ltm.facts(working.deployed.keys(), name).cloned().collect(),
        Selector::Scratch(key) => working.scratch.get(key).cloned().into_iter().collect(),
        Selector::Deployed(r) if working.deployed.contains_key(r) => vec![Scalar::Bool(true)],
        _ => Vec::new(),
    }
}

impl Lookup for MemorySnapshot<'_> {
    fn lookup(&self, sel: &Selector) -> Vec<Scalar> {
        lookup_working(self.working, self.ltm, sel, self.self_id, None)
    }
}

/// Numbered access rules for cognitive resources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccessRule {
    /// Rule 1: no access to sensory memory.
    NoSensoryAccess,
    /// Rule 2: full access to working memory.
    SharedWorkingMemory,
    /// Rule 3: read access to frames in long-term memory.
    FramesReadable,
}

impl AccessRule {
    pub fn number(self) -> u8 {
        match self {
            AccessRule::NoSensoryAccess => 1,
            AccessRule::SharedWorkingMemory => 2,
            AccessRule::FramesReadable => 3,
        }
    }
}

impl fmt::Display for AccessRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            AccessRule::NoSensoryAccess => "cognitive resources cannot access sensory memory",
            AccessRule::SharedWorkingMemory => "cognitive resources share working memory",
            AccessRule::FramesReadable => "cognitive resources may read frames",
        };
        write!(f, "rule {}: {}", self.number(), text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("access violation ({rule}) during `{operation}`")]
pub struct AccessViolation {
    pub rule: AccessRule,
    pub operation: String,
}

impl AccessViolation {
    fn sensory(operation: &str) -> Self {
        Self {
            rule: AccessRule::NoSensoryAccess,
            operation: operation.to_string(),
        }
    }
}

/// Scoped handle given to executing resources.
pub struct ResourceView<'a> {
    working: &'a mut WorkingMemory,
    ltm: &'a LongTermMemory,
    self_id: &'a EntityId,
    focus: Option<EntityId>,
    denied: Cell<u64>,
    first_violation: RefCell<Option<AccessViolation>>,
}

impl<'a> ResourceView<'a> {
    pub fn open(
        working: &'a mut WorkingMemory,
        ltm: &'a LongTermMemory,
        self_id: &'a EntityId,
    ) -> Self {
        Self {
            working,
            ltm,
            self_id,
            focus: None,
            denied: Cell::new(0),
            first_violation: RefCell::new(None),
        }
    }

    pub fn agent(&self) -> &EntityId {
        self.self_id
    }

    pub fn read_social_context(&self) -> &SocialContext {
        &self.working.social_context
    }

    pub fn salient_frames(&self) -> &BTreeSet<FrameId> {
        &self.working.salient_frames
    }

    pub fn deployed(&self) -> &BTreeMap<ResourceId, f64> {
        &self.working.deployed
    }

    pub fn scratch(&self, key: &str) -> Option<&Scalar> {
        self.working.scratch.get(key)
    }

    pub fn write_scratch(&mut self, key: impl Into<String>, value: Scalar) {
        self.working.scratch.insert(key.into(), value);
    }

    pub fn read_frame(&self, id: &FrameId) -> Option<&'a CognitiveSocialFrame> {
        self.ltm.frame(id)
    }

    pub fn frame_ids(&self) -> impl Iterator<Item = &'a FrameId> {
        self.ltm.frames.keys()
    }

    pub fn read_resource(&self, id: &ResourceId) -> Option<&'a CognitiveResource> {
        self.ltm.resource(id)
    }

    /// Always denied.
    pub fn read_sensory(&self) -> Result<Vec<Percept>, AccessViolation> {
        Err(self.deny("read_sensory"))
    }

    /// Always denied.
    pub fn write_sensory(&mut self, _percepts: Vec<Percept>) -> Result<(), AccessViolation> {
        Err(self.deny("write_sensory"))
    }

    pub fn set_focus(&mut self, focus: Option<EntityId>) {
        self.focus = focus;
    }

    pub fn focus(&self) -> Option<&EntityId> {
        self.focus.as_ref()
    }

    /// Number of denied sensory requests made through this view.
    pub fn denied_count(&self) -> u64 {
        self.denied.get()
    }

    /// First violation recorded by a lookup, if any.
    pub fn take_violation(&self) -> Option<AccessViolation> {
        self.first_violation.borrow_mut().take()
    }

    fn deny(&self, operation: &str) -> AccessViolation {
        self.denied.set(self.denied.get() + 1);
        AccessViolation::sensory(operation)
    }
}

impl Lookup for ResourceView<'_> {
    fn lookup(&self, sel: &Selector) -> Vec<Scalar> {
        if sel.is_perceptual() {
            // Percept selectors would read raw sensory data; record and yield nothing.
            let violation = self.deny(&format!("lookup {sel}"));
            self.first_violation.borrow_mut().get_or_insert(violation);
            return Vec::new();
        }
        lookup_working(
            self.working,
            self.ltm,
            sel,
            self.self_id,
            self.focus.as_ref(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::{Atom, Comparator};
    use crate::model::{FitnessExpr, SocialPercept};

    fn p(subject: &str) -> Percept {
        Percept::from_pairs(subject, [("location", Scalar::from("home"))], 0)
    }

    #[test]
    fn write_replaces_stale_percepts() {
        let mut s = SensoryMemory::new();
        s.write(vec![p("a"), p("b")]);
        s.write(vec![p("c")]);
        assert_eq!(s.drain(), vec![p("c")]);
        s.write(vec![]);
        assert!(s.is_empty());
    }

    #[test]
    fn write_keeps_order_of_many() {
        let mut s = SensoryMemory::new();
        let batch: Vec<Percept> = (0..1000).map(|i| p(&format!("e{i}"))).collect();
        s.write(batch.clone());
        assert_eq!(s.len(), 1000);
        assert_eq!(s.drain(), batch);
    }

    #[test]
    fn drain_empties_the_store() {
        let mut s = SensoryMemory::new();
        assert!(s.drain().is_empty());
        s.write(vec![p("a"), p("b")]);
        assert_eq!(s.drain(), vec![p("a"), p("b")]);
        assert!(s.drain().is_empty());
    }

    #[test]
    fn interleaved_write_drain() {
        let mut s = SensoryMemory::new();
        for round in 0..10 {
            let batch: Vec<Percept> = (0..round).map(|i| p(&format!("r{round}_{i}"))).collect();
            s.write(batch.clone());
            assert_eq!(s.drain(), batch);
        }
        assert_eq!(s.read_count(), 10);
    }

    fn ltm() -> LongTermMemory {
        let frame = CognitiveSocialFrame {
            id: FrameId::new("librarian"),
            construal: vec![],
            fitness: FitnessExpr::default(),
            resources: Default::default(),
        };
        LongTermMemory::new([frame], [])
    }

    #[test]
    fn view_denies_sensory_and_names_rule_one() {
        let mut wm = WorkingMemory::default();
        let ltm = ltm();
        let me = EntityId::new("me");
        let mut view = ResourceView::open(&mut wm, &ltm, &me);
        let err = view.read_sensory().unwrap_err();
        assert_eq!(err.rule, AccessRule::NoSensoryAccess);
        assert_eq!(err.rule.number(), 1);
        assert!(err.to_string().contains("rule 1"));
        assert!(view.write_sensory(vec![p("x")]).is_err());
        assert_eq!(view.denied_count(), 2);
    }

    #[test]
    fn view_reads_context_and_frames() {
        let mut wm = WorkingMemory::default();
        wm.social_context.insert(SocialPercept::new(
            "p1",
            "interaction",
            "quiet_peer",
            "librarian",
            1.0,
        ));
        let ltm = ltm();
        let me = EntityId::new("me");
        let view = ResourceView::open(&mut wm, &ltm, &me);
        assert_eq!(view.read_social_context().len(), 1);
        assert!(view.read_frame(&FrameId::new("librarian")).is_some());
        assert!(view.read_frame(&FrameId::new("ghost")).is_none());
    }

    #[test]
    fn percept_selector_through_view_is_recorded() {
        let mut wm = WorkingMemory::default();
        let ltm = ltm();
        let me = EntityId::new("me");
        let view = ResourceView::open(&mut wm, &ltm, &me);
        let atom = Atom::new(Selector::Attr("location".into()), Comparator::Eq, "home");
        assert!(!atom.holds(&view));
        let v = view.take_violation().expect("violation recorded");
        assert_eq!(v.rule, AccessRule::NoSensoryAccess);
    }

    #[test]
    fn scratch_is_shared() {
        let mut wm = WorkingMemory::default();
        let ltm = ltm();
        let me = EntityId::new("me");
        {
            let mut view = ResourceView::open(&mut wm, &ltm, &me);
            view.write_scratch("flag", Scalar::Bool(true));
            assert!(Atom::new(Selector::Scratch("flag".into()), Comparator::Eq, true).holds(&view));
        }
        assert_eq!(wm.scratch.get("flag"), Some(&Scalar::Bool(true)));
    }

    #[test]
    fn content_hash_is_stable() {
        assert_eq!(ltm().content_hash(), ltm().content_hash());
        assert_ne!(
            ltm().content_hash(),
            LongTermMemory::default().content_hash()
        );
    }
}
