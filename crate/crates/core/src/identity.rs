//! Social identity: ascribing frames to other actors, grouping actors into
//! categories, and scoring the agent's own identification with a group.
//!
//! Other minds' preferences are unobservable, so ascription projects each
//! frame with a neutral preference.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::EngineError;
use crate::frames::{evaluate_fitness, salience, EngineParams};
use crate::memory::{LongTermMemory, MemorySnapshot, WorkingMemory};
use crate::model::{EntityId, FrameId, Profile, ResourceId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ascription {
    pub target: EntityId,
    pub frame: FrameId,
    pub estimated_salience: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocialGroup {
    pub key_frame: FrameId,
    pub members: BTreeSet<EntityId>,
}

/// Estimates which of the observer's frames are salient for `target`.
///
/// For another actor, fitness is evaluated against a hypothetical working
/// memory holding only the observer's social percepts about that actor, with
/// the actor in the `self` position. For the observer itself the full
/// working memory is used. Results above the salience threshold are returned
/// in descending salience, ties broken by frame id.
pub fn ascribe_frames(
    observer: &EntityId,
    working: &WorkingMemory,
    alpha: f64,
    target: &EntityId,
    ltm: &LongTermMemory,
    params: &EngineParams,
) -> Result<Vec<Ascription>, EngineError> {
    if working.social_context.about(target).next().is_none() {
        return Err(EngineError::UnknownTarget(target.clone()));
    }
    let projected;
    let view = if target == observer {
        working
    } else {
        projected = WorkingMemory {
            social_context: working.social_context.restricted_to(target),
            ..WorkingMemory::default()
        };
        &projected
    };
    let snapshot = MemorySnapshot::new(view, ltm, target);

    let mut out: Vec<Ascription> = ltm
        .frames
        .values()
        .filter_map(|frame| {
            let fitness = evaluate_fitness(frame, &snapshot, params);
            let estimated = salience(fitness, 0.0, alpha);
            (estimated > params.epsilon_salience).then(|| Ascription {
                target: target.clone(),
                frame: frame.id.clone(),
                estimated_salience: estimated,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        b.estimated_salience
            .total_cmp(&a.estimated_salience)
            .then_with(|| a.frame.cmp(&b.frame))
    });
    Ok(out)
}

fn top(ascriptions: &[Ascription]) -> Option<&Ascription> {
    ascriptions.iter().min_by(|a, b| {
        b.estimated_salience
            .total_cmp(&a.estimated_salience)
            .then_with(|| a.frame.cmp(&b.frame))
    })
}

/// Groups actors by their top ascribed frame. Actors without ascriptions are
/// left out. Groups come back in key-frame order.
pub fn categorize(ascriptions: &BTreeMap<EntityId, Vec<Ascription>>) -> Vec<SocialGroup> {
    let mut groups: BTreeMap<FrameId, BTreeSet<EntityId>> = BTreeMap::new();
    for (actor, list) in ascriptions {
        if let Some(best) = top(list) {
            groups
                .entry(best.frame.clone())
                .or_default()
                .insert(actor.clone());
        }
    }
    groups
        .into_iter()
        .map(|(key_frame, members)| SocialGroup { key_frame, members })
        .collect()
}

/// Bonus for groups keyed by a frame the agent itself holds salient.
pub const SALIENT_MEMBERSHIP_BONUS: f64 = 0.5;

/// How strongly the agent identifies with a group, in `[-1, 1]`.
pub fn identification(
    profile: &Profile,
    group: &SocialGroup,
    agent_salient: &BTreeSet<FrameId>,
) -> f64 {
    let preference = crate::frames::evaluate_preference(profile, &group.key_frame);
    let bonus = if agent_salient.contains(&group.key_frame) {
        SALIENT_MEMBERSHIP_BONUS
    } else {
        0.0
    };
    (preference + bonus).clamp(-1.0, 1.0)
}

pub fn is_in_group(identification: f64) -> bool {
    identification > 0.0
}

/// The observer's model of the target's deployed resources.
pub fn predict_resources(ascriptions: &[Ascription], ltm: &LongTermMemory) -> BTreeSet<ResourceId> {
    ascriptions
        .iter()
        .filter_map(|a| ltm.frame(&a.frame))
        .flat_map(|f| f.resources.iter().cloned())
        .collect()
}
