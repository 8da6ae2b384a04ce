//! Semantic checks over a parsed scenario.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::spans::{escape_token, Location};
use super::Scenario;
use crate::condition::{Comparator, Condition, Selector};
use crate::model::{
    is_valid_id, ActionTemplate, CognitiveResource, EntityId, ResourceBody, Scalar, TargetRef,
    ValueSource,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticCode {
    DanglingReference,
    AgentWithoutEntity,
    DuplicateId,
    InvalidId,
    OutOfRange,
    MissingLocation,
    UndeclaredAttribute,
    UnguardedAttribute,
    MisplacedSelector,
    SensorySelector,
    UnboundSubject,
    MissingComparand,
    EmptyResources,
}

impl DiagnosticCode {
    pub fn is_reference(self) -> bool {
        matches!(
            self,
            DiagnosticCode::DanglingReference | DiagnosticCode::AgentWithoutEntity
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::DanglingReference => "dangling-reference",
            DiagnosticCode::AgentWithoutEntity => "agent-without-entity",
            DiagnosticCode::DuplicateId => "duplicate-id",
            DiagnosticCode::InvalidId => "invalid-id",
            DiagnosticCode::OutOfRange => "out-of-range",
            DiagnosticCode::MissingLocation => "missing-location",
            DiagnosticCode::UndeclaredAttribute => "undeclared-attribute",
            DiagnosticCode::UnguardedAttribute => "unguarded-attribute",
            DiagnosticCode::MisplacedSelector => "misplaced-selector",
            DiagnosticCode::SensorySelector => "sensory-selector",
            DiagnosticCode::UnboundSubject => "unbound-subject",
            DiagnosticCode::MissingComparand => "missing-comparand",
            DiagnosticCode::EmptyResources => "empty-resources",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub message: String,
    /// JSON pointer of the offending value (or its container).
    pub path: String,
    /// The offending identifier, when there is one.
    pub id: Option<String>,
    pub location: Option<Location>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.severity, self.code.as_str())?;
        if let Some(loc) = self.location {
            write!(f, " {loc}")?;
        }
        write!(
            f,
            " {}: {}",
            if self.path.is_empty() {
                "/"
            } else {
                &self.path
            },
            self.message
        )
    }
}

/// A numeric range with optionally open ends.
#[derive(Debug, Clone, Copy)]
struct Interval {
    lo: f64,
    hi: f64,
    lo_open: bool,
    hi_open: bool,
}

const SIGNED: Interval = Interval {
    lo: -1.0,
    hi: 1.0,
    lo_open: false,
    hi_open: false,
};
const UNIT: Interval = Interval {
    lo: 0.0,
    hi: 1.0,
    lo_open: false,
    hi_open: false,
};
const UNIT_OPEN_LOW: Interval = Interval {
    lo: 0.0,
    hi: 1.0,
    lo_open: true,
    hi_open: false,
};
const UNIT_OPEN_HIGH: Interval = Interval {
    lo: 0.0,
    hi: 1.0,
    lo_open: false,
    hi_open: true,
};

impl Interval {
    fn contains(self, value: f64) -> bool {
        value.is_finite()
            && (if self.lo_open {
                value > self.lo
            } else {
                value >= self.lo
            })
            && (if self.hi_open {
                value < self.hi
            } else {
                value <= self.hi
            })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_open { ']' } else { '[' };
        let h = if self.hi_open { '[' } else { ']' };
        write!(f, "{l}{}, {}{h}", self.lo, self.hi)
    }
}

struct Checker<'a> {
    scenario: &'a Scenario,
    out: Vec<Diagnostic>,
    entities: BTreeSet<&'a EntityId>,
    resources: BTreeSet<&'a str>,
    frames: BTreeSet<&'a str>,
    attributes: BTreeSet<&'a str>,
}

impl<'a> Checker<'a> {
    fn push(
        &mut self,
        severity: Severity,
        code: DiagnosticCode,
        path: String,
        id: Option<&str>,
        message: String,
    ) {
        self.out.push(Diagnostic {
            severity,
            code,
            message,
            path,
            id: id.map(str::to_string),
            location: None,
        });
    }

    fn error(&mut self, code: DiagnosticCode, path: String, id: Option<&str>, message: String) {
        self.push(Severity::Error, code, path, id, message);
    }

    fn range(&mut self, path: String, value: f64, interval: Interval, what: &str) {
        if !interval.contains(value) {
            self.error(
                DiagnosticCode::OutOfRange,
                path,
                None,
                format!("{what} {value} is outside {interval}"),
            );
        }
    }

    fn id_syntax(&mut self, path: String, id: &str, what: &str) {
        if !is_valid_id(id) {
            self.error(
                DiagnosticCode::InvalidId,
                path,
                Some(id),
                format!("{what} id `{id}` must match [a-z][a-z0-9_]*"),
            );
        }
    }

    fn duplicates<'b>(&mut self, section: &str, ids: impl Iterator<Item = &'b str>) {
        let mut seen = BTreeSet::new();
        for (i, id) in ids.enumerate() {
            if !seen.insert(id) {
                self.error(
                    DiagnosticCode::DuplicateId,
                    format!("/{section}/{i}/id"),
                    Some(id),
                    format!("duplicate {section} id `{id}`"),
                );
            }
        }
    }

    fn comparands(&mut self, path: &str, condition: &Condition) {
        for (i, atom) in condition.atoms.iter().enumerate() {
            if atom.op != Comparator::Exists && atom.value.is_none() {
                self.error(
                    DiagnosticCode::MissingComparand,
                    format!("{path}/{i}"),
                    None,
                    format!("comparator `{}` needs a value", atom.op),
                );
            }
            if let Selector::Deployed(r) = &atom.sel {
                if !self.resources.contains(r.as_str()) {
                    self.error(
                        DiagnosticCode::DanglingReference,
                        format!("{path}/{i}/sel"),
                        Some(r.as_str()),
                        format!("selector names unknown resource `{r}`"),
                    );
                }
            }
        }
    }

    /// Construal filters see percepts only.
    fn construal_filter(&mut self, path: &str, condition: &Condition) {
        self.comparands(path, condition);
        for (i, atom) in condition.atoms.iter().enumerate() {
            match &atom.sel {
                Selector::Attr(name) => {
                    if !self.attributes.contains(name.as_str()) {
                        self.error(
                            DiagnosticCode::UndeclaredAttribute,
                            format!("{path}/{i}/sel"),
                            Some(name),
                            format!("attribute `{name}` is not declared by any entity or event"),
                        );
                    }
                }
                Selector::Subject => {}
                other => self.error(
                    DiagnosticCode::MisplacedSelector,
                    format!("{path}/{i}/sel"),
                    None,
                    format!("construal filters see raw percepts; `{other}` is not available"),
                ),
            }
        }
    }

    /// Fitness terms and mechanism rules see working memory only.
    fn memory_condition(
        &mut self,
        path: &str,
        condition: &Condition,
        code: DiagnosticCode,
        why: &str,
    ) {
        self.comparands(path, condition);
        for (i, atom) in condition.atoms.iter().enumerate() {
            if atom.sel.is_perceptual() {
                self.error(
                    code,
                    format!("{path}/{i}/sel"),
                    None,
                    format!("`{}` reads raw percepts; {why}", atom.sel),
                );
            }
        }
    }

    fn target(&mut self, path: String, target: &TargetRef, focused: bool) {
        match target {
            TargetRef::Subject if !focused => self.error(
                DiagnosticCode::UnboundSubject,
                path,
                None,
                "`$subject` needs a condition on `social.*` or `conflict.*`".to_string(),
            ),
            TargetRef::Entity(id) if !self.entities.contains(id) => self.error(
                DiagnosticCode::DanglingReference,
                path,
                Some(id.as_str()),
                format!("unknown entity `{id}`"),
            ),
            _ => {}
        }
    }

    fn action(&mut self, path: &str, action: &ActionTemplate, focused: bool) {
        if let Some(t) = &action.target {
            self.target(format!("{path}/target"), t, focused);
        }
        for (i, effect) in action.effects.iter().enumerate() {
            self.target(format!("{path}/effects/{i}/on"), &effect.on, focused);
            self.location_value(
                format!("{path}/effects/{i}/set/location"),
                effect.set.get("location"),
            );
        }
    }

    fn location_value(&mut self, path: String, value: Option<&Scalar>) {
        if let Some(v) = value {
            if v.as_text().is_none() {
                self.error(
                    DiagnosticCode::MissingLocation,
                    path,
                    None,
                    "`location` must be text".to_string(),
                );
            }
        }
    }

    fn resource(&mut self, i: usize, resource: &CognitiveResource) {
        let ResourceBody::Mechanism { rules, on_undeploy } = &resource.body else {
            return;
        };
        for (j, rule) in rules.iter().enumerate() {
            let path = format!("/resources/{i}/rules/{j}");
            self.memory_condition(
                &format!("{path}/when"),
                &rule.when,
                DiagnosticCode::SensorySelector,
                "cognitive resources have no access to sensory memory (rule 1)",
            );
            if let Some(emit) = &rule.emit {
                self.action(&format!("{path}/emit"), emit, rule.when.is_focus_relative());
            }
        }
        for (j, action) in on_undeploy.iter().enumerate() {
            self.action(&format!("/resources/{i}/on_undeploy/{j}"), action, false);
        }
    }
}

/// Checks cross-references, ranges, and rule well-formedness. The scenario
/// is runnable iff no diagnostic has error severity.
pub fn validate(scenario: &Scenario) -> Vec<Diagnostic> {
    let mut attributes: BTreeSet<&str> = scenario
        .entities
        .iter()
        .flat_map(|e| e.attributes.keys().map(String::as_str))
        .collect();
    attributes.extend(
        scenario
            .events
            .iter()
            .flat_map(|e| e.set.keys().map(String::as_str)),
    );
    for r in &scenario.resources {
        for rule in r.rules() {
            for effect in rule.emit.iter().flat_map(|a| a.effects.iter()) {
                attributes.extend(effect.set.keys().map(String::as_str));
            }
        }
    }

    let mut c = Checker {
        scenario,
        out: Vec::new(),
        entities: scenario.entities.iter().map(|e| &e.id).collect(),
        resources: scenario.resources.iter().map(|r| r.id.as_str()).collect(),
        frames: scenario.frames.iter().map(|f| f.id.as_str()).collect(),
        attributes,
    };
    let s = c.scenario;

    let p = &s.params;
    c.range(
        "/params/epsilon_salience".into(),
        p.epsilon_salience,
        SIGNED,
        "epsilon_salience",
    );
    c.range(
        "/params/alpha_default".into(),
        p.alpha_default,
        UNIT,
        "alpha_default",
    );
    c.range(
        "/params/fitness_floor".into(),
        p.fitness_floor,
        UNIT_OPEN_LOW,
        "fitness_floor",
    );
    c.range(
        "/params/decay_lambda".into(),
        p.decay_lambda,
        UNIT_OPEN_LOW,
        "decay_lambda",
    );
    c.range(
        "/params/decay_theta".into(),
        p.decay_theta,
        UNIT_OPEN_HIGH,
        "decay_theta",
    );

    c.duplicates("entities", s.entities.iter().map(|e| e.id.as_str()));
    for (i, e) in s.entities.iter().enumerate() {
        c.id_syntax(format!("/entities/{i}/id"), e.id.as_str(), "entity");
        match e.attributes.get("location") {
            Some(v) => c.location_value(format!("/entities/{i}/attributes/location"), Some(v)),
            None => c.error(
                DiagnosticCode::MissingLocation,
                format!("/entities/{i}/attributes"),
                None,
                format!("entity `{}` has no `location` attribute", e.id),
            ),
        }
    }

    c.duplicates("resources", s.resources.iter().map(|r| r.id.as_str()));
    for (i, r) in s.resources.iter().enumerate() {
        c.id_syntax(format!("/resources/{i}/id"), r.id.as_str(), "resource");
        c.resource(i, r);
    }

    c.duplicates("frames", s.frames.iter().map(|f| f.id.as_str()));
    for (i, frame) in s.frames.iter().enumerate() {
        c.id_syntax(format!("/frames/{i}/id"), frame.id.as_str(), "frame");
        for (j, rule) in frame.construal.iter().enumerate() {
            let path = format!("/frames/{i}/construal/{j}");
            c.construal_filter(&format!("{path}/when"), &rule.filter);
            c.range(
                format!("{path}/annotate/strength"),
                rule.annotate.strength,
                UNIT,
                "strength",
            );
            if let ValueSource::ValueFrom(attr) = &rule.annotate.value {
                let guarded = rule
                    .filter
                    .selectors()
                    .any(|s| matches!(s, Selector::Attr(a) if a == attr));
                if !guarded {
                    c.error(
                        DiagnosticCode::UnguardedAttribute,
                        format!("{path}/annotate/value_from"),
                        Some(attr),
                        format!("`value_from: {attr}` needs an `attr.{attr}` atom in the filter"),
                    );
                }
            }
        }
        for (j, term) in frame.fitness.terms.iter().enumerate() {
            let path = format!("/frames/{i}/fitness/terms/{j}");
            c.memory_condition(
                &format!("{path}/when"),
                &term.when,
                DiagnosticCode::MisplacedSelector,
                "fitness reads working memory",
            );
            if !term.weight.is_finite() {
                c.error(
                    DiagnosticCode::OutOfRange,
                    format!("{path}/weight"),
                    None,
                    "weight must be finite".into(),
                );
            }
        }
        if !frame.fitness.bias.is_finite() {
            c.error(
                DiagnosticCode::OutOfRange,
                format!("/frames/{i}/fitness/bias"),
                None,
                "bias must be finite".into(),
            );
        }
        for r in &frame.resources {
            if !c.resources.contains(r.as_str()) {
                c.error(
                    DiagnosticCode::DanglingReference,
                    format!("/frames/{i}/resources"),
                    Some(r.as_str()),
                    format!("frame `{}` references unknown resource `{r}`", frame.id),
                );
            }
        }
        if frame.resources.is_empty() {
            c.push(
                Severity::Warning,
                DiagnosticCode::EmptyResources,
                format!("/frames/{i}"),
                None,
                format!("frame `{}` deploys no resources", frame.id),
            );
        }
    }

    c.duplicates("agents", s.agents.iter().map(|a| a.id.as_str()));
    for (i, agent) in s.agents.iter().enumerate() {
        if !c.entities.contains(&agent.id) {
            c.error(
                DiagnosticCode::AgentWithoutEntity,
                format!("/agents/{i}/id"),
                Some(agent.id.as_str()),
                format!("agent `{}` has no entity", agent.id),
            );
        }
        let own: BTreeSet<&str> = match &agent.frames {
            Some(frames) => {
                for f in frames {
                    if !c.frames.contains(f.as_str()) {
                        c.error(
                            DiagnosticCode::DanglingReference,
                            format!("/agents/{i}/frames"),
                            Some(f.as_str()),
                            format!("agent `{}` references unknown frame `{f}`", agent.id),
                        );
                    }
                }
                frames
                    .iter()
                    .map(|f| f.as_str())
                    .filter(|f| c.frames.contains(f))
                    .collect()
            }
            None => c.frames.clone(),
        };
        for (f, &value) in &agent.preferences {
            let path = format!("/agents/{i}/preferences/{}", escape_token(f.as_str()));
            if !own.contains(f.as_str()) {
                c.error(
                    DiagnosticCode::DanglingReference,
                    format!("/agents/{i}/preferences"),
                    Some(f.as_str()),
                    format!("preference for unknown frame `{f}`"),
                );
            }
            c.range(path, value, SIGNED, "preference");
        }
        if let Some(alpha) = agent.alpha {
            c.range(format!("/agents/{i}/alpha"), alpha, UNIT, "alpha");
        }
        for f in &agent.default_salient {
            if !own.contains(f.as_str()) {
                c.error(
                    DiagnosticCode::DanglingReference,
                    format!("/agents/{i}/default_salient"),
                    Some(f.as_str()),
                    format!("default salient frame `{f}` is not one of the agent's frames"),
                );
            }
        }
    }

    let mut per_tick: BTreeMap<u64, usize> = BTreeMap::new();
    for (i, event) in s.events.iter().enumerate() {
        *per_tick.entry(event.tick).or_default() += 1;
        if event.tick == 0 {
            c.error(
                DiagnosticCode::OutOfRange,
                format!("/events/{i}/tick"),
                None,
                "ticks start at 1".into(),
            );
        }
        if !c.entities.contains(&event.entity) {
            c.error(
                DiagnosticCode::DanglingReference,
                format!("/events/{i}/entity"),
                Some(event.entity.as_str()),
                format!("event targets unknown entity `{}`", event.entity),
            );
        }
        if let Some(p) = event.probability {
            c.range(format!("/events/{i}/probability"), p, UNIT, "probability");
        }
        c.location_value(
            format!("/events/{i}/set/location"),
            event.set.get("location"),
        );
    }

    c.out
}

#[cfg(test)]
mod tests {
    use super::super::{check_document, parse_scenario, tests::MINIMAL};
    use super::*;

    fn diags(doc: &str) -> Vec<Diagnostic> {
        check_document(doc).unwrap().diagnostics
    }

    #[test]
    fn minimal_is_clean() {
        assert!(diags(MINIMAL).is_empty());
    }

    #[test]
    fn ghost_default_salient_is_one_error() {
        let doc = MINIMAL.replace(
            r#"{"id": "solo"}"#,
            r#"{"id": "solo", "default_salient": ["ghost"]}"#,
        );
        let d = diags(&doc);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Error);
        assert_eq!(d[0].id.as_deref(), Some("ghost"));
    }

    #[test]
    fn empty_resources_is_one_warning() {
        let doc = MINIMAL.replace(r#""resources": ["musing"]"#, r#""resources": []"#);
        let d = diags(&doc);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);
        assert_eq!(d[0].code, DiagnosticCode::EmptyResources);
        // warnings do not block parsing
        assert!(parse_scenario(&doc).is_ok());
    }

    #[test]
    fn sensory_selector_in_mechanism_is_rejected() {
        let doc = MINIMAL.replace(
            r#"{"id": "musing", "kind": "knowledge", "facts": {"calm": true}}"#,
            r#"{"id": "musing", "kind": "mechanism", "rules": [{"when": [{"sel": "attr.location", "op": "exists"}], "emit": {"verb": "peek"}}]}"#,
        );
        let d = diags(&doc);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagnosticCode::SensorySelector);
    }

    #[test]
    fn unbound_subject_is_rejected() {
        let doc = MINIMAL.replace(
            r#"{"id": "musing", "kind": "knowledge", "facts": {"calm": true}}"#,
            r#"{"id": "musing", "kind": "mechanism", "rules": [{"when": [], "emit": {"verb": "wave", "target": "$subject"}}]}"#,
        );
        let d = diags(&doc);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagnosticCode::UnboundSubject);
    }

    #[test]
    fn undeclared_and_unguarded_attributes() {
        let doc = MINIMAL.replace(
            r#""construal": []"#,
            r#""construal": [{"when": [{"sel": "attr.colour", "op": "exists"}], "annotate": {"dimension": "d", "value_from": "location"}}]"#,
        );
        let codes: Vec<_> = diags(&doc).into_iter().map(|d| d.code).collect();
        assert_eq!(
            codes,
            vec![
                DiagnosticCode::UndeclaredAttribute,
                DiagnosticCode::UnguardedAttribute
            ]
        );
    }

    #[test]
    fn missing_location_and_bad_ids() {
        let doc = MINIMAL.replace(
            r#""attributes": {"location": "room"}"#,
            r#""attributes": {"x": 1}"#,
        );
        assert_eq!(diags(&doc)[0].code, DiagnosticCode::MissingLocation);
        let doc = MINIMAL.replace(
            r#""name": "minimal""#,
            r#""name": "minimal", "params": {"decay_lambda": 0}"#,
        );
        assert_eq!(diags(&doc)[0].code, DiagnosticCode::OutOfRange);
    }

    #[test]
    fn diagnostics_are_located_inside_document() {
        let doc = MINIMAL
            .replace(r#""resources": ["musing"]"#, r#""resources": ["r9"]"#)
            .replace(
                r#"{"id": "solo"}"#,
                r#"{"id": "solo", "default_salient": ["ghost"], "alpha": 3}"#,
            );
        let lines: Vec<&str> = doc.lines().collect();
        let d = diags(&doc);
        assert_eq!(d.len(), 3);
        for diag in d {
            let loc = diag.location.expect("located");
            assert!(loc.line >= 1 && loc.line <= lines.len());
            assert!(loc.column >= 1 && loc.column <= lines[loc.line - 1].chars().count());
        }
    }
}
