use std::sync::Arc;

use crate::memory::{LongTermMemory, SensoryMemory, WorkingMemory};
use crate::model::{AgentId, Profile};

/// Everything one agent owns: its profile and its three memory stores.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub id: AgentId,
    pub profile: Profile,
    pub sensory: SensoryMemory,
    pub working: WorkingMemory,
    pub ltm: Arc<LongTermMemory>,
    /// Sensory reads observed while resources executed. Stays 0.
    pub resource_sensory_reads: u64,
    /// Sensory requests refused to resources.
    pub denied_sensory_requests: u64,
}

impl AgentState {
    /// A fresh agent whose salient set is its profile's default.
    pub fn new(id: AgentId, profile: Profile, ltm: Arc<LongTermMemory>) -> Self {
        let working = WorkingMemory {
            salient_frames: profile.default_salient.clone(),
            ..WorkingMemory::default()
        };
        Self {
            id,
            profile,
            sensory: SensoryMemory::new(),
            working,
            ltm,
            resource_sensory_reads: 0,
            denied_sensory_requests: 0,
        }
    }
}
