use thiserror::Error;

use crate::memory::AccessViolation;
use crate::model::{EntityId, FrameId, ResourceId};
use crate::scenario::Diagnostic;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("unknown frame `{0}`")]
    UnknownFrame(FrameId),
    #[error("unknown resource `{0}`")]
    UnknownResource(ResourceId),
    #[error("unknown agent `{0}`")]
    UnknownAgent(EntityId),
    #[error("no social percept about `{0}`")]
    UnknownTarget(EntityId),
    #[error("resource `{resource}`: {violation}")]
    AccessViolation {
        resource: ResourceId,
        violation: AccessViolation,
    },
    #[error("scenario is invalid ({} error(s))", .0.len())]
    Validation(Vec<Diagnostic>),
}
