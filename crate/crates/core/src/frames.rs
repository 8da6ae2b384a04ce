//! The frame mechanism: construal, fitness, preference, salience, the
//! interpret and update stages, conflict detection, and the deployment
//! policies that move the deployed resource set between cycles.
//!
//! Frames are always visited in frame-id order so every output is
//! reproducible.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::condition::Lookup;
use crate::error::EngineError;
use crate::memory::{LongTermMemory, MemorySnapshot, WorkingMemory};
use crate::model::{
    conflicts, CognitiveSocialFrame, EntityId, FrameId, Percept, Profile, ResourceId,
    SocialContext, SocialPercept, ValueSource,
};

/// How the deployed resource set follows the salient frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeploymentPolicy {
    /// Deployed set is replaced by the target set.
    #[default]
    Instant,
    /// As `Instant`, and each removed resource gets its undeploy hook run.
    UndeployHook,
    /// Residual salience decays for resources that leave the target set.
    Decay,
}

impl std::str::FromStr for DeploymentPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "instant" => Ok(Self::Instant),
            "undeploy_hook" => Ok(Self::UndeployHook),
            "decay" => Ok(Self::Decay),
            other => Err(format!("unknown policy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineParams {
    #[serde(default)]
    pub epsilon_salience: f64,
    #[serde(default = "default_alpha")]
    pub alpha_default: f64,
    #[serde(default = "default_floor")]
    pub fitness_floor: f64,
    #[serde(default)]
    pub policy: DeploymentPolicy,
    #[serde(default = "default_lambda")]
    pub decay_lambda: f64,
    #[serde(default)]
    pub decay_theta: f64,
}

fn default_alpha() -> f64 {
    0.5
}

fn default_floor() -> f64 {
    1e-6
}

fn default_lambda() -> f64 {
    0.25
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            epsilon_salience: 0.0,
            alpha_default: default_alpha(),
            fitness_floor: default_floor(),
            policy: DeploymentPolicy::Instant,
            decay_lambda: default_lambda(),
            decay_theta: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeploymentKind {
    Deployed,
    Refreshed,
    Undeployed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentEvent {
    pub kind: DeploymentKind,
    pub resource: ResourceId,
    pub tick: u64,
}

/// Applies a frame's construal to raw percepts.
///
/// Each rule whose filter admits a percept emits one social percept about
/// that percept's subject. Percepts no filter admits are ignored.
pub fn construe(frame: &CognitiveSocialFrame, percepts: &[Percept]) -> SocialContext {
    let mut out = SocialContext::new();
    for percept in percepts {
        for rule in &frame.construal {
            if !rule.filter.holds(percept) {
                continue;
            }
            let value = match &rule.annotate.value {
                ValueSource::Value(v) => v.clone(),
                ValueSource::ValueFrom(attr) => match percept.attribute(attr) {
                    Some(v) => v.clone(),
                    None => continue,
                },
            };
            out.insert(SocialPercept {
                subject: percept.subject.clone(),
                dimension: rule.annotate.dimension.clone(),
                value,
                sources: BTreeSet::from([frame.id.clone()]),
                strength: rule.annotate.strength.clamp(0.0, 1.0),
            });
        }
    }
    out
}

/// Fitness of a frame in `[floor, 1]`.
pub fn evaluate_fitness<C: Lookup + ?Sized>(
    frame: &CognitiveSocialFrame,
    memory: &C,
    params: &EngineParams,
) -> f64 {
    let raw = frame
        .fitness
        .terms
        .iter()
        .fold(frame.fitness.bias, |acc, term| {
            if term.when.holds(memory) {
                acc + term.weight
            } else {
                acc
            }
        });
    // NaN bias or weights collapse to the floor rather than escaping the range.
    if raw.is_nan() {
        return params.fitness_floor;
    }
    raw.clamp(params.fitness_floor, 1.0)
}

pub fn evaluate_preference(profile: &Profile, frame: &FrameId) -> f64 {
    profile.preferences.get(frame).copied().unwrap_or(0.0)
}

/// Combines fitness and preference into a salience value.
pub trait SalienceCombiner {
    fn combine(&self, fitness: f64, preference: f64, alpha: f64) -> f64;
}

/// `α·(2·fitness − 1) + (1 − α)·preference`.
///
/// Maps fitness in `]0, 1]` onto `]−1, 1]` so both inputs share a range, then
/// takes the convex combination.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearBalance;

impl SalienceCombiner for LinearBalance {
    fn combine(&self, fitness: f64, preference: f64, alpha: f64) -> f64 {
        alpha * (2.0 * fitness - 1.0) + (1.0 - alpha) * preference
    }
}

pub fn salience(fitness: f64, preference: f64, alpha: f64) -> f64 {
    LinearBalance.combine(fitness, preference, alpha)
}

/// Per-frame record of one salience decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame: FrameId,
    pub fitness: f64,
    pub preference: f64,
    pub salience: f64,
    pub salient: bool,
}

/// Builds the social context from the previously salient frames.
///
/// The context starts empty and receives the merged union of every salient
/// frame's construal. Conflicting percepts are all kept.
pub fn interpret(
    percepts: &[Percept],
    salient: &BTreeSet<FrameId>,
    ltm: &LongTermMemory,
) -> Result<SocialContext, EngineError> {
    let mut context = SocialContext::new();
    for id in salient {
        let frame = ltm
            .frame(id)
            .ok_or_else(|| EngineError::UnknownFrame(id.clone()))?;
        context.union_with(construe(frame, percepts));
    }
    Ok(context)
}

/// Result of the update stage.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub scores: Vec<FrameScore>,
    pub salient: BTreeSet<FrameId>,
    /// Resources the salient frames ask for.
    pub target: BTreeSet<ResourceId>,
    /// Deployed set after the policy, with residual salience.
    pub deployed: BTreeMap<ResourceId, f64>,
    pub events: Vec<DeploymentEvent>,
}

/// Scores every frame in long-term memory against the new context,
/// keeps those strictly above the threshold, and moves the deployed set
/// toward the union of their resources under the active policy.
pub fn update(
    social_context: &SocialContext,
    ltm: &LongTermMemory,
    profile: &Profile,
    params: &EngineParams,
    previous: &WorkingMemory,
    self_id: &EntityId,
    tick: u64,
) -> UpdateOutcome {
    update_with(
        &LinearBalance,
        social_context,
        ltm,
        profile,
        params,
        previous,
        self_id,
        tick,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn update_with<S: SalienceCombiner + ?Sized>(
    combiner: &S,
    social_context: &SocialContext,
    ltm: &LongTermMemory,
    profile: &Profile,
    params: &EngineParams,
    previous: &WorkingMemory,
    self_id: &EntityId,
    tick: u64,
) -> UpdateOutcome {
    let working = WorkingMemory {
        social_context: social_context.clone(),
        ..previous.clone()
    };
    let snapshot = MemorySnapshot::new(&working, ltm, self_id);

    let mut scores = Vec::with_capacity(ltm.frames.len());
    let mut salient = BTreeSet::new();
    let mut target = BTreeSet::new();
    for (id, frame) in &ltm.frames {
        let fitness = evaluate_fitness(frame, &snapshot, params);
        let preference = evaluate_preference(profile, id);
        let value = combiner.combine(fitness, preference, profile.alpha);
        let is_salient = value > params.epsilon_salience;
        if is_salient {
            salient.insert(id.clone());
            target.extend(frame.resources.iter().cloned());
        }
        scores.push(FrameScore {
            frame: id.clone(),
            fitness,
            preference,
            salience: value,
            salient: is_salient,
        });
    }

    let (deployed, events) = apply_policy(&previous.deployed, &target, params, tick);
    UpdateOutcome {
        scores,
        salient,
        target,
        deployed,
        events,
    }
}

/// Transitions the deployed set toward `target`.
///
/// * instant / undeploy_hook: the deployed set becomes `target`; removals are
///   reported before additions.
/// * decay: target resources are (re)set to residual 1.0; others lose
///   `decay_lambda` per tick and are dropped once the residual falls strictly
///   below `decay_theta`.
pub fn apply_policy(
    previous: &BTreeMap<ResourceId, f64>,
    target: &BTreeSet<ResourceId>,
    params: &EngineParams,
    tick: u64,
) -> (BTreeMap<ResourceId, f64>, Vec<DeploymentEvent>) {
    let event = |kind, resource: &ResourceId| DeploymentEvent {
        kind,
        resource: resource.clone(),
        tick,
    };
    let mut events = Vec::new();
    let mut deployed = BTreeMap::new();

    match params.policy {
        DeploymentPolicy::Instant | DeploymentPolicy::UndeployHook => {
            for id in previous.keys().filter(|id| !target.contains(*id)) {
                events.push(event(DeploymentKind::Undeployed, id));
            }
            for id in target {
                if !previous.contains_key(id) {
                    events.push(event(DeploymentKind::Deployed, id));
                }
                deployed.insert(id.clone(), 1.0);
            }
        }
        DeploymentPolicy::Decay => {
            let mut added = Vec::new();
            for (id, &residual) in previous {
                if target.contains(id) {
                    if residual < 1.0 {
                        events.push(event(DeploymentKind::Refreshed, id));
                    }
                    deployed.insert(id.clone(), 1.0);
                    continue;
                }
                let next = residual - params.decay_lambda;
                if next < params.decay_theta {
                    events.push(event(DeploymentKind::Undeployed, id));
                } else {
                    deployed.insert(id.clone(), next);
                }
            }
            for id in target {
                if !previous.contains_key(id) {
                    added.push(event(DeploymentKind::Deployed, id));
                    deployed.insert(id.clone(), 1.0);
                }
            }
            events.extend(added);
        }
    }
    (deployed, events)
}

/// Every unordered pair of conflicting percepts, in key order.
pub fn detect_conflicts(context: &SocialContext) -> Vec<(SocialPercept, SocialPercept)> {
    let percepts: Vec<&SocialPercept> = context.iter().collect();
    let mut pairs = Vec::new();
    for (i, a) in percepts.iter().enumerate() {
        // Conflicting percepts are adjacent in key order: same subject and
        // dimension sort together.
        for b in &percepts[i + 1..] {
            if a.subject != b.subject || a.dimension != b.dimension {
                break;
            }
            if conflicts(a, b) {
                pairs.push(((*a).clone(), (*b).clone()));
            }
        }
    }
    pairs
}
