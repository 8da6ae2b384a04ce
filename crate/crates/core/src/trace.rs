//! Line-delimited JSON traces.
//!
//! One event per line with keys in the fixed order `tick`, `agent`, `stage`,
//! `payload`. Every line parses on its own.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::Action;
use crate::frames::{DeploymentEvent, FrameScore};
use crate::identity::Ascription;
use crate::model::{AgentId, EntityId, FrameId, Percept, ResourceId, Scalar, SocialPercept};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Perceive,
    Interpret,
    Update,
    Execute,
    Act,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Perceive,
        Stage::Interpret,
        Stage::Update,
        Stage::Execute,
        Stage::Act,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Perceive => "perceive",
            Stage::Interpret => "interpret",
            Stage::Update => "update",
            Stage::Execute => "execute",
            Stage::Act => "act",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceivePayload {
    pub percepts: Vec<Percept>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretPayload {
    /// Salient frames carried over from the previous cycle.
    pub frames: Vec<FrameId>,
    pub context: Vec<SocialPercept>,
    pub conflicts: Vec<[SocialPercept; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub key_frame: FrameId,
    pub members: Vec<EntityId>,
    pub identification: f64,
    pub in_group: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdatePayload {
    pub epsilon: f64,
    pub alpha: f64,
    pub scores: Vec<FrameScore>,
    pub salient: Vec<FrameId>,
    pub deployed: BTreeMap<ResourceId, f64>,
    pub events: Vec<DeploymentEvent>,
    pub ascriptions: BTreeMap<EntityId, Vec<Ascription>>,
    pub groups: Vec<GroupRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutePayload {
    pub actions: Vec<Action>,
    /// Undeploy-hook actions of resources removed this tick.
    pub finalizers: Vec<Action>,
    pub scratch: BTreeMap<String, Scalar>,
    /// Sensory reads performed while resources ran. Always 0.
    pub sensory_reads: u64,
    pub denied_sensory_requests: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActPayload {
    pub queued: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Payload {
    Perceive(PerceivePayload),
    Interpret(InterpretPayload),
    Update(UpdatePayload),
    Execute(ExecutePayload),
    Act(ActPayload),
}

impl Payload {
    pub fn stage(&self) -> Stage {
        match self {
            Payload::Perceive(_) => Stage::Perceive,
            Payload::Interpret(_) => Stage::Interpret,
            Payload::Update(_) => Stage::Update,
            Payload::Execute(_) => Stage::Execute,
            Payload::Act(_) => Stage::Act,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEvent {
    pub tick: u64,
    pub agent: AgentId,
    pub stage: Stage,
    pub payload: Payload,
}

impl TraceEvent {
    pub fn new(tick: u64, agent: AgentId, payload: Payload) -> Self {
        Self {
            tick,
            agent,
            stage: payload.stage(),
            payload,
        }
    }

    pub fn update(&self) -> Option<&UpdatePayload> {
        match &self.payload {
            Payload::Update(p) => Some(p),
            _ => None,
        }
    }

    pub fn interpret(&self) -> Option<&InterpretPayload> {
        match &self.payload {
            Payload::Interpret(p) => Some(p),
            _ => None,
        }
    }

    pub fn execute(&self) -> Option<&ExecutePayload> {
        match &self.payload {
            Payload::Execute(p) => Some(p),
            _ => None,
        }
    }

    pub fn perceive(&self) -> Option<&PerceivePayload> {
        match &self.payload {
            Payload::Perceive(p) => Some(p),
            _ => None,
        }
    }
}

impl<'de> Deserialize<'de> for TraceEvent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;

        #[derive(Deserialize)]
        struct Raw {
            tick: u64,
            agent: AgentId,
            stage: Stage,
            payload: serde_json::Value,
        }
        let raw = Raw::deserialize(d)?;
        let v = raw.payload;
        let payload = match raw.stage {
            Stage::Perceive => serde_json::from_value(v).map(Payload::Perceive),
            Stage::Interpret => serde_json::from_value(v).map(Payload::Interpret),
            Stage::Update => serde_json::from_value(v).map(Payload::Update),
            Stage::Execute => serde_json::from_value(v).map(Payload::Execute),
            Stage::Act => serde_json::from_value(v).map(Payload::Act),
        }
        .map_err(D::Error::custom)?;
        Ok(TraceEvent {
            tick: raw.tick,
            agent: raw.agent,
            stage: raw.stage,
            payload,
        })
    }
}

pub fn to_line(event: &TraceEvent) -> String {
    serde_json::to_string(event).expect("trace events serialize")
}

pub fn write_jsonl<W: Write>(events: &[TraceEvent], mut out: W) -> io::Result<()> {
    for event in events {
        out.write_all(to_line(event).as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn to_jsonl(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for event in events {
        out.push_str(&to_line(event));
        out.push('\n');
    }
    out
}

pub fn parse_line(line: &str) -> Result<TraceEvent, serde_json::Error> {
    serde_json::from_str(line)
}

/// Parses a whole trace; blank lines are skipped. Errors carry the 1-based line.
pub fn parse_jsonl(text: &str) -> Result<Vec<TraceEvent>, (usize, serde_json::Error)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_line(l).map_err(|e| (i + 1, e)))
        .collect()
}

/// SHA-256 of the serialized trace, hex encoded.
pub fn digest(events: &[TraceEvent]) -> String {
    hex::encode(Sha256::digest(to_jsonl(events).as_bytes()))
}
