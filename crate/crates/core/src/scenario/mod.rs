//! Scenario documents: schema, parsing, serialization, validation, and the
//! built-in scenarios.
//!
//! A scenario is one self-contained UTF-8 JSON document with the top-level
//! keys `name`, `params`, `entities`, `frames`, `resources`, `agents`, and
//! `events`. See `docs/scenario-format.md` for the full schema.

mod builtin;
mod spans;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builtin::{builtin, builtin_names, builtin_source, BUILTINS};
pub use spans::{Location, SpanIndex};
pub use validate::{validate, Diagnostic, DiagnosticCode, Severity};

use crate::frames::{DeploymentPolicy, EngineParams};
use crate::memory::LongTermMemory;
use crate::model::{
    Attributes, CognitiveResource, CognitiveSocialFrame, EntityId, FrameId, Profile, ResourceId,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityDecl {
    pub id: EntityId,
    pub attributes: Attributes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDecl {
    pub id: EntityId,
    /// Frames in the agent's long-term memory. Defaults to every declared frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<BTreeSet<FrameId>>,
    #[serde(default)]
    pub preferences: BTreeMap<FrameId, f64>,
    /// Defaults to `params.alpha_default`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub default_salient: BTreeSet<FrameId>,
}

impl AgentDecl {
    pub fn profile(&self, params: &EngineParams) -> Profile {
        Profile {
            preferences: self.preferences.clone(),
            alpha: self.alpha.unwrap_or(params.alpha_default),
            default_salient: self.default_salient.clone(),
        }
    }
}

/// Entity attribute mutation applied at the start of a tick, before
/// perception. Events with a probability below 1 fire on a seeded draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedEvent {
    pub tick: u64,
    pub entity: EntityId,
    pub set: Attributes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
}

impl ScriptedEvent {
    pub fn is_stochastic(&self) -> bool {
        self.probability.is_some_and(|p| p < 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub params: EngineParams,
    pub entities: Vec<EntityDecl>,
    pub frames: Vec<CognitiveSocialFrame>,
    pub resources: Vec<CognitiveResource>,
    pub agents: Vec<AgentDecl>,
    #[serde(default)]
    pub events: Vec<ScriptedEvent>,
}

impl Scenario {
    /// Fills omitted agent fields from the scenario-level defaults.
    pub fn fill_defaults(&mut self) {
        let all: BTreeSet<FrameId> = self.frames.iter().map(|f| f.id.clone()).collect();
        let alpha = self.params.alpha_default;
        for agent in &mut self.agents {
            agent.frames.get_or_insert_with(|| all.clone());
            agent.alpha.get_or_insert(alpha);
        }
    }

    pub fn frame(&self, id: &FrameId) -> Option<&CognitiveSocialFrame> {
        self.frames.iter().find(|f| &f.id == id)
    }

    pub fn resource(&self, id: &ResourceId) -> Option<&CognitiveResource> {
        self.resources.iter().find(|r| &r.id == id)
    }

    pub fn agent(&self, id: &EntityId) -> Option<&AgentDecl> {
        self.agents.iter().find(|a| &a.id == id)
    }

    pub fn has_stochastic_events(&self) -> bool {
        self.events.iter().any(ScriptedEvent::is_stochastic)
    }

    /// Long-term memory of one agent: its frames and every resource they name.
    pub fn long_term_memory(&self, agent: &AgentDecl) -> Arc<LongTermMemory> {
        let frames: Vec<CognitiveSocialFrame> = self
            .frames
            .iter()
            .filter(|f| agent.frames.as_ref().is_none_or(|set| set.contains(&f.id)))
            .cloned()
            .collect();
        let needed: BTreeSet<ResourceId> = frames
            .iter()
            .flat_map(|f| f.resources.iter().cloned())
            .collect();
        let resources = self
            .resources
            .iter()
            .filter(|r| needed.contains(&r.id))
            .cloned();
        Arc::new(LongTermMemory::new(frames, resources))
    }

    /// Applies command-line style overrides. An alpha override replaces the
    /// default and every agent's own alpha.
    pub fn apply_overrides(&mut self, overrides: &ParamOverrides) {
        if let Some(e) = overrides.epsilon {
            self.params.epsilon_salience = e;
        }
        if let Some(a) = overrides.alpha {
            self.params.alpha_default = a;
            for agent in &mut self.agents {
                agent.alpha = Some(a);
            }
        }
        if let Some(p) = overrides.policy {
            self.params.policy = p;
        }
        if let Some(l) = overrides.lambda {
            self.params.decay_lambda = l;
        }
        if let Some(t) = overrides.theta {
            self.params.decay_theta = t;
        }
    }
}

/// Parameter overrides that take precedence over the document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamOverrides {
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub policy: Option<DeploymentPolicy>,
    pub lambda: Option<f64>,
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown reference `{id}`: {diagnostic}")]
    Reference {
        id: String,
        diagnostic: Box<Diagnostic>,
    },
    #[error("{diagnostic}")]
    Domain { diagnostic: Box<Diagnostic> },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}

impl ScenarioError {
    fn from_diagnostic(diagnostic: Diagnostic) -> Self {
        let diagnostic = Box::new(diagnostic);
        match (&diagnostic.code, &diagnostic.id) {
            (code, Some(id)) if code.is_reference() => ScenarioError::Reference {
                id: id.clone(),
                diagnostic,
            },
            _ => ScenarioError::Domain { diagnostic },
        }
    }

    pub fn location(&self) -> Option<Location> {
        match self {
            ScenarioError::Parse { line, column, .. } => Some(Location {
                line: *line,
                column: *column,
            }),
            ScenarioError::Reference { diagnostic, .. } | ScenarioError::Domain { diagnostic } => {
                diagnostic.location
            }
            ScenarioError::UnknownScenario(_) => None,
        }
    }
}

/// A syntactically valid document with every diagnostic located.
#[derive(Debug, Clone)]
pub struct CheckedDocument {
    pub scenario: Scenario,
    pub diagnostics: Vec<Diagnostic>,
}

impl CheckedDocument {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Error)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }
}

/// Parses a document, fills defaults, and collects located diagnostics
/// without rejecting semantic errors.
pub fn check_document(document: &str) -> Result<CheckedDocument, ScenarioError> {
    let mut scenario: Scenario = serde_json::from_str(document).map_err(|e| {
        let text = e.to_string();
        let message = match text.rfind(" at line ") {
            Some(i) => text[..i].to_string(),
            None => text,
        };
        ScenarioError::Parse {
            line: e.line().max(1),
            column: e.column().max(1),
            message,
        }
    })?;
    scenario.fill_defaults();
    let spans = SpanIndex::build(document);
    let diagnostics = validate(&scenario)
        .into_iter()
        .map(|mut d| {
            d.location = spans.locate(&d.path, d.id.as_deref());
            d
        })
        .collect();
    Ok(CheckedDocument {
        scenario,
        diagnostics,
    })
}

/// Parses and validates a scenario document. Warnings are tolerated; the
/// first error is returned.
pub fn parse_scenario(document: &str) -> Result<Scenario, ScenarioError> {
    let checked = check_document(document)?;
    if let Some(first) = checked.errors().next() {
        return Err(ScenarioError::from_diagnostic(first.clone()));
    }
    Ok(checked.scenario)
}

/// Canonical pretty-printed JSON document.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    let mut text = serde_json::to_string_pretty(scenario).expect("scenario serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
  "name": "minimal",
  "entities": [{"id": "solo", "attributes": {"location": "room"}}],
  "frames": [{"id": "alone", "construal": [], "resources": ["musing"]}],
  "resources": [{"id": "musing", "kind": "knowledge", "facts": {"calm": true}}],
  "agents": [{"id": "solo"}]
}"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.params, EngineParams::default());
        assert_eq!(s.params.alpha_default, 0.5);
        assert_eq!(s.params.epsilon_salience, 0.0);
        assert_eq!(s.params.policy, DeploymentPolicy::Instant);
        assert_eq!(s.params.decay_lambda, 0.25);
        assert_eq!(s.params.decay_theta, 0.0);
        assert_eq!(s.agents[0].alpha, Some(0.5));
        assert_eq!(
            s.agents[0].frames,
            Some(BTreeSet::from([FrameId::new("alone")]))
        );
        assert!(s.events.is_empty());
    }

    #[test]
    fn dangling_resource_is_a_reference_error() {
        let doc = MINIMAL.replace(r#""resources": ["musing"]"#, r#""resources": ["r9"]"#);
        match parse_scenario(&doc) {
            Err(ScenarioError::Reference { id, diagnostic }) => {
                assert_eq!(id, "r9");
                let loc = diagnostic.location.unwrap();
                assert_eq!(loc.line, 4);
                let line = doc.lines().nth(loc.line - 1).unwrap();
                assert!(line
                    .chars()
                    .skip(loc.column - 1)
                    .collect::<String>()
                    .starts_with("\"r9\""));
            }
            other => panic!("expected reference error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_preference_is_a_domain_error() {
        let doc = MINIMAL.replace(
            r#"{"id": "solo"}"#,
            r#"{"id": "solo", "preferences": {"alone": 1.5}}"#,
        );
        assert!(matches!(
            parse_scenario(&doc),
            Err(ScenarioError::Domain { .. })
        ));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_scenario("{\n  \"name\": ,\n}").unwrap_err();
        match err {
            ScenarioError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        let doc = MINIMAL.replace(r#""name": "minimal","#, r#""name": "minimal", "extra": 1,"#);
        assert!(matches!(
            parse_scenario(&doc),
            Err(ScenarioError::Parse { .. })
        ));
        let doc = MINIMAL.replace(r#""facts": {"calm": true}"#, r#""rules": []"#);
        assert!(matches!(
            parse_scenario(&doc),
            Err(ScenarioError::Parse { .. })
        ));
    }

    #[test]
    fn round_trip_minimal() {
        let s = parse_scenario(MINIMAL).unwrap();
        let again = parse_scenario(&serialize_scenario(&s)).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut s = parse_scenario(MINIMAL).unwrap();
        s.apply_overrides(&ParamOverrides {
            epsilon: Some(1.0),
            alpha: Some(0.9),
            policy: Some(DeploymentPolicy::Decay),
            lambda: Some(0.5),
            theta: Some(0.1),
        });
        assert_eq!(s.params.epsilon_salience, 1.0);
        assert_eq!(s.agents[0].alpha, Some(0.9));
        assert_eq!(s.params.policy, DeploymentPolicy::Decay);
        assert_eq!(s.params.decay_lambda, 0.5);
        assert_eq!(s.params.decay_theta, 0.1);
    }
}
