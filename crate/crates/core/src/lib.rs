//! Agents that interpret their surroundings through cognitive social frames,
//! deploy the cognitive resources of the frames that are salient, and act
//! through those resources, plus a deterministic batch simulator.
//!
//! The cycle of one agent is perceive, interpret, update, execute, act:
//!
//! * [`engine::perceive`] copies co-located entities into sensory memory.
//! * [`frames::interpret`] builds the social context from the frames that
//!   were salient on the previous cycle.
//! * [`frames::update`] rescores every frame and moves the deployed resource
//!   set toward the union of the salient frames' resources.
//! * [`engine::execute`] runs deployed mechanisms against working memory
//!   through a [`memory::ResourceView`], which denies sensory access.
//! * queued actions reach the environment at the tick barrier.

pub mod agent;
pub mod condition;
pub mod engine;
pub mod error;
pub mod frames;
pub mod identity;
pub mod memory;
pub mod model;
pub mod scenario;
pub mod trace;

pub use agent::AgentState;
pub use engine::{cycle, execute, perceive, run, Action, Effect, Environment, Simulation};
pub use error::EngineError;
pub use frames::{detect_conflicts, interpret, salience, update, DeploymentPolicy, EngineParams};
pub use scenario::{
    builtin, parse_scenario, serialize_scenario, validate, Scenario, ScenarioError,
};
pub use trace::{Stage, TraceEvent};
