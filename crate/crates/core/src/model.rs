//! Domain types shared across the framework.
//!
//! Percepts are raw observations of one entity. Social percepts are their
//! interpretation along a social dimension; a [`SocialContext`] is the merged
//! set of social percepts an agent holds at one time.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::condition::Condition;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

string_id!(
    /// Identifier of an entity in the environment. Agents are entities too.
    EntityId
);
string_id!(
    /// Identifier of a cognitive social frame.
    FrameId
);
string_id!(
    /// Identifier of a cognitive resource.
    ResourceId
);

/// Agents are addressed by the id of their entity.
pub type AgentId = EntityId;

/// Returns true when `id` matches `[a-z][a-z0-9_]*`.
pub fn is_valid_id(id: &str) -> bool {
    let mut chars = id.chars();
    matches!(chars.next(), Some('a'..='z'))
        && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_'))
}

/// Attribute or social value: text, number, or boolean.
///
/// Numbers compare by value with a total order, so scalars can be used as
/// map keys and inside identity keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl Scalar {
    pub fn text(s: impl Into<String>) -> Self {
        Scalar::Text(s.into())
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Scalar::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Scalar::Number(n) => Some(*n),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Scalar::Bool(_) => 0,
            Scalar::Number(_) => 1,
            Scalar::Text(_) => 2,
        }
    }

    /// Same-type comparison; `None` when the variants differ.
    pub fn partial_compare(&self, other: &Scalar) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Bool(a), Scalar::Bool(b)) => Some(a.cmp(b)),
            (Scalar::Number(a), Scalar::Number(b)) => a.partial_cmp(b),
            (Scalar::Text(a), Scalar::Text(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scalar {}

impl std::hash::Hash for Scalar {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Scalar::Bool(b) => b.hash(state),
            Scalar::Number(n) => (n + 0.0).to_bits().hash(state),
            Scalar::Text(s) => s.hash(state),
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Bool(a), Scalar::Bool(b)) => a.cmp(b),
            // -0.0 and 0.0 are the same value here.
            (Scalar::Number(a), Scalar::Number(b)) => (a + 0.0).total_cmp(&(b + 0.0)),
            (Scalar::Text(a), Scalar::Text(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Bool(b) => write!(f, "{b}"),
            Scalar::Number(n) => write!(f, "{n}"),
            Scalar::Text(s) => f.write_str(s),
        }
    }
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::Text(s.to_string())
    }
}

impl From<f64> for Scalar {
    fn from(n: f64) -> Self {
        Scalar::Number(n)
    }
}

impl From<bool> for Scalar {
    fn from(b: bool) -> Self {
        Scalar::Bool(b)
    }
}

/// Attribute name → scalar. Names are unique by construction.
pub type Attributes = BTreeMap<String, Scalar>;

/// A raw observation of one entity, held in sensory memory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Percept {
    pub subject: EntityId,
    pub attributes: Attributes,
    pub tick: u64,
}

/// Identity of a percept: subject plus the attributes in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PerceptKey {
    pub subject: EntityId,
    pub attributes: Vec<(String, Scalar)>,
}

impl Percept {
    pub fn new(subject: impl Into<EntityId>, attributes: Attributes, tick: u64) -> Self {
        Self {
            subject: subject.into(),
            attributes,
            tick,
        }
    }

    /// Builds a percept from attribute pairs in any order. Later duplicates
    /// overwrite earlier ones.
    pub fn from_pairs<I, K>(subject: impl Into<EntityId>, pairs: I, tick: u64) -> Self
    where
        I: IntoIterator<Item = (K, Scalar)>,
        K: Into<String>,
    {
        let attributes = pairs.into_iter().map(|(k, v)| (k.into(), v)).collect();
        Self::new(subject, attributes, tick)
    }

    pub fn attribute(&self, name: &str) -> Option<&Scalar> {
        self.attributes.get(name)
    }
}

/// Order-insensitive identity of a percept. The tick is not part of it.
pub fn percept_identity(p: &Percept) -> PerceptKey {
    PerceptKey {
        subject: p.subject.clone(),
        attributes: p
            .attributes
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect(),
    }
}

/// Identity of a social percept: `(subject, dimension, value)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SocialKey {
    pub subject: EntityId,
    pub dimension: String,
    pub value: Scalar,
}

impl fmt::Display for SocialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.subject, self.dimension, self.value)
    }
}

/// An interpreted percept along one social dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialPercept {
    pub subject: EntityId,
    pub dimension: String,
    pub value: Scalar,
    pub sources: BTreeSet<FrameId>,
    pub strength: f64,
}

impl SocialPercept {
    pub fn new(
        subject: impl Into<EntityId>,
        dimension: impl Into<String>,
        value: impl Into<Scalar>,
        source: impl Into<FrameId>,
        strength: f64,
    ) -> Self {
        Self {
            subject: subject.into(),
            dimension: dimension.into(),
            value: value.into(),
            sources: BTreeSet::from([source.into()]),
            strength,
        }
    }

    pub fn key(&self) -> SocialKey {
        social_percept_identity(self)
    }

    /// Merges a percept with an equal identity key: sources are unioned and
    /// the strength is the maximum of both.
    pub fn merge(&mut self, other: &SocialPercept) {
        debug_assert_eq!(self.key(), other.key());
        self.sources.extend(other.sources.iter().cloned());
        self.strength = self.strength.max(other.strength);
    }
}

pub fn social_percept_identity(sp: &SocialPercept) -> SocialKey {
    SocialKey {
        subject: sp.subject.clone(),
        dimension: sp.dimension.clone(),
        value: sp.value.clone(),
    }
}

/// Two social percepts conflict when they describe the same subject along
/// the same dimension with different values.
pub fn conflicts(a: &SocialPercept, b: &SocialPercept) -> bool {
    a.subject == b.subject && a.dimension == b.dimension && a.value != b.value
}

/// The agent's interpretation of its surroundings: social percepts keyed by
/// identity. Conflicting percepts coexist.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SocialContext {
    percepts: BTreeMap<SocialKey, SocialPercept>,
}

impl SocialContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a percept, merging with an existing one of equal identity.
    pub fn insert(&mut self, sp: SocialPercept) {
        match self.percepts.get_mut(&sp.key()) {
            Some(existing) => existing.merge(&sp),
            None => {
                self.percepts.insert(sp.key(), sp);
            }
        }
    }

    /// Merges every percept of `other` into `self`.
    pub fn union_with(&mut self, other: SocialContext) {
        for sp in other.percepts.into_values() {
            self.insert(sp);
        }
    }

    pub fn get(&self, key: &SocialKey) -> Option<&SocialPercept> {
        self.percepts.get(key)
    }

    pub fn len(&self) -> usize {
        self.percepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.percepts.is_empty()
    }

    /// Percepts in identity-key order.
    pub fn iter(&self) -> impl Iterator<Item = &SocialPercept> {
        self.percepts.values()
    }

    pub fn subjects(&self) -> BTreeSet<&EntityId> {
        self.percepts.keys().map(|k| &k.subject).collect()
    }

    pub fn about<'a>(&'a self, subject: &'a EntityId) -> impl Iterator<Item = &'a SocialPercept> {
        self.iter().filter(move |sp| &sp.subject == subject)
    }

    /// The sub-context holding only percepts about `subject`.
    pub fn restricted_to(&self, subject: &EntityId) -> SocialContext {
        self.about(subject).cloned().collect()
    }
}

impl FromIterator<SocialPercept> for SocialContext {
    fn from_iter<I: IntoIterator<Item = SocialPercept>>(iter: I) -> Self {
        let mut ctx = SocialContext::new();
        for sp in iter {
            ctx.insert(sp);
        }
        ctx
    }
}

/// Where an annotated social value comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueSource {
    /// A fixed value.
    Value(Scalar),
    /// Copied from an attribute of the matched percept.
    ValueFrom(String),
}

/// Interpretation phase of a construal rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub dimension: String,
    #[serde(flatten)]
    pub value: ValueSource,
    #[serde(default = "default_strength")]
    pub strength: f64,
}

fn default_strength() -> f64 {
    1.0
}

/// Attention filter plus social annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstrualRule {
    #[serde(rename = "when")]
    pub filter: Condition,
    pub annotate: Annotation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitnessTerm {
    pub when: Condition,
    pub weight: f64,
}

/// `bias + Σ weight·[condition holds]`, clamped into `]0, 1]` at evaluation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitnessExpr {
    #[serde(default)]
    pub bias: f64,
    #[serde(default)]
    pub terms: Vec<FitnessTerm>,
}

/// A cognitive social frame: construal, fitness, and the resources it deploys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CognitiveSocialFrame {
    pub id: FrameId,
    /// Required in documents; an empty list is the explicit "no construal" marker.
    pub construal: Vec<ConstrualRule>,
    #[serde(default)]
    pub fitness: FitnessExpr,
    #[serde(default)]
    pub resources: BTreeSet<ResourceId>,
}

/// Who an action or effect is aimed at.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TargetRef {
    /// The subject the rule is currently focused on (`$subject`).
    Subject,
    /// The acting agent (`$self`).
    Actor,
    Entity(EntityId),
}

impl fmt::Display for TargetRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetRef::Subject => f.write_str("$subject"),
            TargetRef::Actor => f.write_str("$self"),
            TargetRef::Entity(id) => write!(f, "{id}"),
        }
    }
}

impl Serialize for TargetRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TargetRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(match s.as_str() {
            "$subject" => TargetRef::Subject,
            "$self" => TargetRef::Actor,
            _ => TargetRef::Entity(EntityId::new(s)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectTemplate {
    pub on: TargetRef,
    pub set: Attributes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionTemplate {
    pub verb: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetRef>,
    #[serde(default, skip_serializing_if = "Attributes::is_empty")]
    pub args: Attributes,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effects: Vec<EffectTemplate>,
}

/// Condition → action rule of a mechanism. Rules with a higher priority fire
/// first; ties keep declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismRule {
    #[serde(default)]
    pub priority: i64,
    pub when: Condition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emit: Option<ActionTemplate>,
    /// Working-memory scratch writes performed when the rule fires.
    #[serde(default, skip_serializing_if = "Attributes::is_empty")]
    pub set: Attributes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResourceBody {
    Knowledge {
        #[serde(default)]
        facts: Attributes,
    },
    Mechanism {
        #[serde(default)]
        rules: Vec<MechanismRule>,
        /// Actions emitted once when the resource is removed under the
        /// undeploy-hook policy.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        on_undeploy: Vec<ActionTemplate>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Knowledge,
    Mechanism,
}

/// Deployable unit of cognition: knowledge facts or an executable mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CognitiveResource {
    pub id: ResourceId,
    #[serde(flatten)]
    pub body: ResourceBody,
}

impl CognitiveResource {
    pub fn kind(&self) -> ResourceKind {
        match self.body {
            ResourceBody::Knowledge { .. } => ResourceKind::Knowledge,
            ResourceBody::Mechanism { .. } => ResourceKind::Mechanism,
        }
    }

    pub fn facts(&self) -> Option<&Attributes> {
        match &self.body {
            ResourceBody::Knowledge { facts } => Some(facts),
            ResourceBody::Mechanism { .. } => None,
        }
    }

    pub fn rules(&self) -> &[MechanismRule] {
        match &self.body {
            ResourceBody::Mechanism { rules, .. } => rules,
            ResourceBody::Knowledge { .. } => &[],
        }
    }

    pub fn on_undeploy(&self) -> &[ActionTemplate] {
        match &self.body {
            ResourceBody::Mechanism { on_undeploy, .. } => on_undeploy,
            ResourceBody::Knowledge { .. } => &[],
        }
    }
}

/// An agent's personal inclinations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    /// Frame → preference in `[-1, 1]`. Absent frames are neutral.
    #[serde(default)]
    pub preferences: BTreeMap<FrameId, f64>,
    /// Weight of fitness against preference in the salience balance.
    pub alpha: f64,
    #[serde(default)]
    pub default_salient: BTreeSet<FrameId>,
}

impl Profile {
    pub fn new(alpha: f64) -> Self {
        Self {
            preferences: BTreeMap::new(),
            alpha,
            default_salient: BTreeSet::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(subject: &str, dim: &str, value: &str, source: &str, strength: f64) -> SocialPercept {
        SocialPercept::new(subject, dim, value, source, strength)
    }

    #[test]
    fn percept_identity_ignores_attribute_order() {
        let a = Percept::from_pairs(
            "p1",
            [
                ("loc", Scalar::from("library")),
                ("person", Scalar::from(true)),
            ],
            0,
        );
        let b = Percept::from_pairs(
            "p1",
            [
                ("person", Scalar::from(true)),
                ("loc", Scalar::from("library")),
            ],
            3,
        );
        assert_eq!(percept_identity(&a), percept_identity(&b));
    }

    #[test]
    fn percept_identity_distinguishes_subjects() {
        let a = Percept::from_pairs("p1", [("loc", Scalar::from("library"))], 0);
        let b = Percept::from_pairs("p2", [("loc", Scalar::from("library"))], 0);
        assert_ne!(percept_identity(&a), percept_identity(&b));
    }

    #[test]
    fn social_identity_excludes_sources_and_strength() {
        let coach = sp("son", "team_value", "liability", "coach", 0.2);
        let scout = sp("son", "team_value", "liability", "scout", 0.9);
        assert_eq!(coach.key(), scout.key());
        let father = sp("son", "team_value", "deserves_chance", "father", 0.2);
        assert_ne!(coach.key(), father.key());
    }

    #[test]
    fn conflict_examples() {
        let liability = sp("son", "team_value", "liability", "coach", 1.0);
        let chance = sp("son", "team_value", "deserves_chance", "father", 1.0);
        let mood = sp("son", "mood", "sad", "father", 1.0);
        assert!(conflicts(&liability, &chance));
        assert!(!conflicts(&liability, &liability));
        assert!(!conflicts(&liability, &mood));
    }

    #[test]
    fn context_merges_equal_keys() {
        let ctx: SocialContext = [
            sp("son", "team_value", "liability", "coach", 0.2),
            sp("son", "team_value", "liability", "scout", 0.9),
        ]
        .into_iter()
        .collect();
        assert_eq!(ctx.len(), 1);
        let merged = ctx.iter().next().unwrap();
        assert_eq!(merged.sources.len(), 2);
        assert_eq!(merged.strength, 0.9);
    }

    #[test]
    fn scalar_order_is_total_across_variants() {
        let mut values = vec![
            Scalar::from("b"),
            Scalar::from(2.0),
            Scalar::from(true),
            Scalar::from("a"),
            Scalar::from(-1.0),
        ];
        values.sort();
        assert_eq!(
            values,
            vec![
                Scalar::from(true),
                Scalar::from(-1.0),
                Scalar::from(2.0),
                Scalar::from("a"),
                Scalar::from("b"),
            ]
        );
        assert_eq!(Scalar::from(0.0), Scalar::from(-0.0));
    }

    #[test]
    fn id_syntax() {
        assert!(is_valid_id("coach_father2"));
        assert!(!is_valid_id("Coach"));
        assert!(!is_valid_id("2coach"));
        assert!(!is_valid_id(""));
        assert!(!is_valid_id("a-b"));
    }

    #[test]
    fn scalar_json_is_untagged() {
        let v: Scalar = serde_json::from_str("3").unwrap();
        assert_eq!(v, Scalar::Number(3.0));
        let v: Scalar = serde_json::from_str("\"x\"").unwrap();
        assert_eq!(v, Scalar::from("x"));
        let v: Scalar = serde_json::from_str("false").unwrap();
        assert_eq!(v, Scalar::Bool(false));
    }
}
