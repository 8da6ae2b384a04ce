//! Scenarios shipped with the library.

use super::{parse_scenario, Scenario, ScenarioError};

/// Name, one-line description, and document of every built-in.
pub const BUILTINS: &[(&str, &str, &str)] = &[
    (
        "coach_father",
        "a father coaching his son's team holds two conflicting views of the son",
        include_str!("../../scenarios/coach_father.json"),
    ),
    (
        "library_dance",
        "dancing with a fellow reader is fine at home and out of place in a library",
        include_str!("../../scenarios/library_dance.json"),
    ),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(name, _, _)| *name)
}

/// The raw document of a built-in.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, _, source)| *source)
}

pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
    let source =
        builtin_source(name).ok_or_else(|| ScenarioError::UnknownScenario(name.to_string()))?;
    parse_scenario(source)
}
