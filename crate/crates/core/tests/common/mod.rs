//! Shared helpers for the integration tests: the fixture corpus, a
//! brute-force reference model of interpretation and update, random
//! scenario generation, and dangling-reference mutants.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use csf_core::condition::{Atom, Comparator, Condition, Selector};
use csf_core::frames::EngineParams;
use csf_core::memory::LongTermMemory;
use csf_core::model::{
    Annotation, Attributes, CognitiveResource, CognitiveSocialFrame, ConstrualRule, EntityId,
    FitnessExpr, FitnessTerm, FrameId, Percept, Profile, ResourceBody, ResourceId, Scalar,
    ValueSource,
};
use csf_core::scenario::builtin_names;
use rand::{Rng, RngCore};
use serde_json::Value;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(name: &str) -> String {
    let path = fixture_dir().join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Every valid document: the fixtures plus the built-ins, by name.
pub fn corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(fixture_dir())
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    for name in builtin_names() {
        let source = csf_core::scenario::builtin_source(name).unwrap();
        out.push((format!("builtin:{name}"), source.to_string()));
    }
    out
}

// ---------------------------------------------------------------------------
// Reference model
// ---------------------------------------------------------------------------

/// Comparison written out case by case, independent of the library's.
fn compare(value: &Scalar, op: Comparator, literal: Option<&Scalar>) -> bool {
    use Comparator::*;
    if op == Exists {
        return true;
    }
    let Some(literal) = literal else { return false };
    match (value, literal) {
        (Scalar::Number(a), Scalar::Number(b)) => match op {
            Eq => a == b,
            Ne => a != b,
            Lt => a < b,
            Le => a <= b,
            Gt => a > b,
            Ge => a >= b,
            Exists => unreachable!(),
        },
        (Scalar::Text(a), Scalar::Text(b)) => match op {
            Eq => a == b,
            Ne => a != b,
            Lt => a < b,
            Le => a <= b,
            Gt => a > b,
            Ge => a >= b,
            Exists => unreachable!(),
        },
        (Scalar::Bool(a), Scalar::Bool(b)) => match op {
            Eq => a == b,
            Ne => a != b,
            _ => false,
        },
        _ => op == Ne,
    }
}

fn percept_atom(p: &Percept, atom: &Atom) -> bool {
    let value = match &atom.sel {
        Selector::Subject => Scalar::Text(p.subject.to_string()),
        Selector::Attr(name) => match p.attributes.get(name) {
            Some(v) => v.clone(),
            None => return false,
        },
        _ => return false,
    };
    compare(&value, atom.op, atom.value.as_ref())
}

/// (subject, dimension, value) → (sources, max strength).
pub type Triples = BTreeMap<(String, String, String), (BTreeSet<String>, f64)>;

pub fn triple_key(subject: &str, dimension: &str, value: &Scalar) -> (String, String, String) {
    (
        subject.to_string(),
        dimension.to_string(),
        serde_json::to_string(value).unwrap(),
    )
}

pub fn oracle_interpret(
    percepts: &[Percept],
    salient: &BTreeSet<FrameId>,
    ltm: &LongTermMemory,
) -> Triples {
    let mut out = Triples::new();
    for fid in salient {
        let frame = &ltm.frames[fid];
        for p in percepts {
            for rule in &frame.construal {
                if !rule.filter.atoms.iter().all(|a| percept_atom(p, a)) {
                    continue;
                }
                let value = match &rule.annotate.value {
                    ValueSource::Value(v) => v.clone(),
                    ValueSource::ValueFrom(attr) => match p.attributes.get(attr) {
                        Some(v) => v.clone(),
                        None => continue,
                    },
                };
                let entry = out
                    .entry(triple_key(
                        p.subject.as_str(),
                        &rule.annotate.dimension,
                        &value,
                    ))
                    .or_insert_with(|| (BTreeSet::new(), f64::MIN));
                entry.0.insert(fid.to_string());
                entry.1 = entry.1.max(rule.annotate.strength);
            }
        }
    }
    out
}

fn context_atom(ctx: &Triples, self_id: &str, atom: &Atom) -> bool {
    let (subject, dim) = match &atom.sel {
        Selector::AnySocial(d) => (None, d),
        Selector::SelfSocial(d) => (Some(self_id), d),
        _ => return false,
    };
    ctx.keys().any(|(s, d, v)| {
        d == dim
            && subject.is_none_or(|want| want == s)
            && compare(
                &serde_json::from_str(v).unwrap(),
                atom.op,
                atom.value.as_ref(),
            )
    })
}

pub struct OracleUpdate {
    pub saliences: BTreeMap<String, f64>,
    pub salient: BTreeSet<String>,
    pub target: BTreeSet<String>,
}

pub fn oracle_update(
    ctx: &Triples,
    ltm: &LongTermMemory,
    profile: &Profile,
    params: &EngineParams,
    self_id: &str,
) -> OracleUpdate {
    let mut saliences = BTreeMap::new();
    let mut salient = BTreeSet::new();
    let mut target = BTreeSet::new();
    for (fid, frame) in &ltm.frames {
        let mut raw = frame.fitness.bias;
        for term in &frame.fitness.terms {
            if term
                .when
                .atoms
                .iter()
                .all(|a| context_atom(ctx, self_id, a))
            {
                raw += term.weight;
            }
        }
        let fitness = if raw.is_nan() {
            params.fitness_floor
        } else {
            raw.max(params.fitness_floor).min(1.0)
        };
        let preference = profile.preferences.get(fid).copied().unwrap_or(0.0);
        let a = profile.alpha;
        let s = a * (2.0 * fitness - 1.0) + (1.0 - a) * preference;
        saliences.insert(fid.to_string(), s);
        if s > params.epsilon_salience {
            salient.insert(fid.to_string());
            target.extend(frame.resources.iter().map(|r| r.to_string()));
        }
    }
    OracleUpdate {
        saliences,
        salient,
        target,
    }
}

// ---------------------------------------------------------------------------
// Random small worlds
// ---------------------------------------------------------------------------

const SUBJECTS: [&str; 4] = ["me", "ann", "bob", "cat"];
const ATTRS: [&str; 3] = ["colour", "size", "busy"];
const DIMS: [&str; 3] = ["role", "mood", "tie"];

fn random_value<R: RngCore>(rng: &mut R, attr: &str) -> Scalar {
    match attr {
        "colour" => Scalar::text(["red", "blue", "green"][rng.random_range(0..3)]),
        "size" => Scalar::Number(rng.random_range(0..4) as f64),
        _ => Scalar::Bool(rng.random_bool(0.5)),
    }
}

fn random_op<R: RngCore>(rng: &mut R) -> Comparator {
    use Comparator::*;
    [Eq, Ne, Lt, Le, Gt, Ge, Exists][rng.random_range(0..7)]
}

pub struct World {
    pub ltm: LongTermMemory,
    pub percepts: Vec<Percept>,
    pub profile: Profile,
    pub params: EngineParams,
}

/// A world with at most four frames and six percepts.
pub fn random_world<R: RngCore>(rng: &mut R) -> World {
    let resources: Vec<CognitiveResource> = (0..4)
        .map(|i| CognitiveResource {
            id: ResourceId::new(format!("r{i}")),
            body: ResourceBody::Knowledge {
                facts: Attributes::new(),
            },
        })
        .collect();
    let n_frames = rng.random_range(1..=4);
    let mut frames = Vec::new();
    let mut profile = Profile::new(rng.random_range(0.0..=1.0));
    for i in 0..n_frames {
        let id = FrameId::new(format!("f{i}"));
        let construal = (0..rng.random_range(0..=3))
            .map(|_| {
                let atoms = (0..rng.random_range(0..=2))
                    .map(|_| {
                        let attr = ATTRS[rng.random_range(0..ATTRS.len())];
                        let op = random_op(rng);
                        let value = (op != Comparator::Exists).then(|| random_value(rng, attr));
                        Atom {
                            sel: Selector::Attr(attr.into()),
                            op,
                            value,
                        }
                    })
                    .collect::<Vec<_>>();
                let dim = DIMS[rng.random_range(0..DIMS.len())];
                let value = if rng.random_bool(0.3) {
                    ValueSource::ValueFrom(ATTRS[rng.random_range(0..ATTRS.len())].into())
                } else {
                    ValueSource::Value(Scalar::text(["x", "y"][rng.random_range(0..2)]))
                };
                ConstrualRule {
                    filter: Condition::all(atoms),
                    annotate: Annotation {
                        dimension: dim.into(),
                        value,
                        strength: rng.random_range(0.0..=1.0),
                    },
                }
            })
            .collect();
        let terms = (0..rng.random_range(0..=3))
            .map(|_| {
                let dim = DIMS[rng.random_range(0..DIMS.len())];
                let sel = if rng.random_bool(0.5) {
                    Selector::AnySocial(dim.into())
                } else {
                    Selector::SelfSocial(dim.into())
                };
                let atom = if rng.random_bool(0.3) {
                    Atom::exists(sel)
                } else {
                    Atom::new(sel, Comparator::Eq, ["x", "y"][rng.random_range(0..2)])
                };
                FitnessTerm {
                    when: Condition::all([atom]),
                    weight: rng.random_range(-1.0..=1.0),
                }
            })
            .collect();
        let res: BTreeSet<ResourceId> = (0..4)
            .filter(|_| rng.random_bool(0.4))
            .map(|i| ResourceId::new(format!("r{i}")))
            .collect();
        if rng.random_bool(0.7) {
            profile
                .preferences
                .insert(id.clone(), rng.random_range(-1.0..=1.0));
        }
        frames.push(CognitiveSocialFrame {
            id,
            construal,
            fitness: FitnessExpr {
                bias: rng.random_range(-0.5..=1.2),
                terms,
            },
            resources: res,
        });
    }
    let percepts = (0..rng.random_range(0..=6))
        .map(|_| {
            let subject = SUBJECTS[rng.random_range(0..SUBJECTS.len())];
            let mut attributes = Attributes::new();
            for a in ATTRS {
                if rng.random_bool(0.7) {
                    attributes.insert(a.to_string(), random_value(rng, a));
                }
            }
            Percept::new(subject, attributes, 1)
        })
        .collect();
    let params = EngineParams {
        epsilon_salience: rng.random_range(-0.5..=0.5),
        ..EngineParams::default()
    };
    World {
        ltm: LongTermMemory::new(frames, resources),
        percepts,
        profile,
        params,
    }
}

pub fn me() -> EntityId {
    EntityId::new("me")
}

// ---------------------------------------------------------------------------
// Mutants
// ---------------------------------------------------------------------------

pub const DANGLING: &str = "zz_dangling";

/// One mutant per reference site in `doc`, each renaming that single
/// reference to an undeclared id. Returns (site pointer, mutated document).
pub fn dangling_mutants(doc: &str) -> Vec<(String, String)> {
    let root: Value = serde_json::from_str(doc).unwrap();
    let mut sites: Vec<String> = Vec::new();
    let arr = |v: &Value, k: &str| {
        v.get(k)
            .and_then(Value::as_array)
            .cloned()
            .unwrap_or_default()
    };

    for (i, frame) in arr(&root, "frames").iter().enumerate() {
        for j in 0..arr(frame, "resources").len() {
            sites.push(format!("/frames/{i}/resources/{j}"));
        }
    }
    for (i, agent) in arr(&root, "agents").iter().enumerate() {
        sites.push(format!("/agents/{i}/id"));
        for j in 0..arr(agent, "frames").len() {
            sites.push(format!("/agents/{i}/frames/{j}"));
        }
        for j in 0..arr(agent, "default_salient").len() {
            sites.push(format!("/agents/{i}/default_salient/{j}"));
        }
        if let Some(prefs) = agent.get("preferences").and_then(Value::as_object) {
            for key in prefs.keys() {
                sites.push(format!("/agents/{i}/preferences#{key}"));
            }
        }
    }
    for i in 0..arr(&root, "events").len() {
        sites.push(format!("/events/{i}/entity"));
    }

    sites
        .into_iter()
        .map(|site| {
            let mut v = root.clone();
            if let Some((obj, key)) = site.split_once('#') {
                let prefs = v.pointer_mut(obj).unwrap().as_object_mut().unwrap();
                let value = prefs.remove(key).unwrap();
                prefs.insert(DANGLING.to_string(), value);
            } else {
                *v.pointer_mut(&site).unwrap() = Value::String(DANGLING.into());
            }
            (site, serde_json::to_string_pretty(&v).unwrap())
        })
        .collect()
}
