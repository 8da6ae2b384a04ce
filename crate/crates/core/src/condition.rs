//! Conjunctive conditions over percepts and working memory.
//!
//! A condition is a list of atoms `(selector, comparator, literal)` that must
//! all hold. Selectors resolve to zero or more values in an evaluation
//! context; an atom holds when some resolved value satisfies the comparator.
//! Selectors a context cannot answer resolve to nothing, so evaluation is
//! total: `exists` is false and every other comparator is false.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{EntityId, Percept, ResourceId, Scalar};

/// What an atom looks at.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Selector {
    /// `subject`: the subject id of a percept.
    Subject,
    /// `attr.<name>`: a percept attribute.
    Attr(String),
    /// `social.<dim>`: values about the focused subject, or any subject when
    /// nothing is focused.
    Social(String),
    /// `self.<dim>`: values about the evaluating agent itself.
    SelfSocial(String),
    /// `any.<dim>`: values about any subject.
    AnySocial(String),
    /// `conflict.<dim>`: `true` when the focused subject (or any subject)
    /// carries conflicting values on the dimension.
    Conflict(String),
    /// `fact.<name>`: facts of deployed knowledge resources.
    Fact(String),
    /// `wm.<key>`: working-memory scratch data.
    Scratch(String),
    /// `deployed.<resource>`: `true` when the resource is deployed.
    Deployed(ResourceId),
}

impl Selector {
    /// Percept-level selectors; only construal filters may use them.
    pub fn is_perceptual(&self) -> bool {
        matches!(self, Selector::Subject | Selector::Attr(_))
    }

    /// Selectors whose meaning depends on a focused subject.
    pub fn is_focus_relative(&self) -> bool {
        matches!(self, Selector::Social(_) | Selector::Conflict(_))
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::Subject => f.write_str("subject"),
            Selector::Attr(n) => write!(f, "attr.{n}"),
            Selector::Social(d) => write!(f, "social.{d}"),
            Selector::SelfSocial(d) => write!(f, "self.{d}"),
            Selector::AnySocial(d) => write!(f, "any.{d}"),
            Selector::Conflict(d) => write!(f, "conflict.{d}"),
            Selector::Fact(n) => write!(f, "fact.{n}"),
            Selector::Scratch(k) => write!(f, "wm.{k}"),
            Selector::Deployed(r) => write!(f, "deployed.{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid selector `{0}`")]
pub struct SelectorParseError(String);

impl FromStr for Selector {
    type Err = SelectorParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "subject" {
            return Ok(Selector::Subject);
        }
        let (prefix, name) = s
            .split_once('.')
            .ok_or_else(|| SelectorParseError(s.to_string()))?;
        if name.is_empty() {
            return Err(SelectorParseError(s.to_string()));
        }
        let name = name.to_string();
        Ok(match prefix {
            "attr" => Selector::Attr(name),
            "social" => Selector::Social(name),
            "self" => Selector::SelfSocial(name),
            "any" => Selector::AnySocial(name),
            "conflict" => Selector::Conflict(name),
            "fact" => Selector::Fact(name),
            "wm" => Selector::Scratch(name),
            "deployed" => Selector::Deployed(ResourceId::new(name)),
            _ => return Err(SelectorParseError(s.to_string())),
        })
    }
}

impl Serialize for Selector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Selector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "exists")]
    Exists,
}

impl Comparator {
    fn test(self, value: &Scalar, literal: Option<&Scalar>) -> bool {
        let literal = match (self, literal) {
            (Comparator::Exists, _) => return true,
            (_, Some(l)) => l,
            (_, None) => return false,
        };
        match self {
            Comparator::Eq => value == literal,
            Comparator::Ne => value != literal,
            _ => match value.partial_compare(literal) {
                // Booleans are not ordered for comparison purposes.
                Some(_) if matches!(value, Scalar::Bool(_)) => false,
                Some(ord) => match self {
                    Comparator::Lt => ord == Ordering::Less,
                    Comparator::Le => ord != Ordering::Greater,
                    Comparator::Gt => ord == Ordering::Greater,
                    Comparator::Ge => ord != Ordering::Less,
                    _ => unreachable!(),
                },
                None => false,
            },
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::Eq => "==",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Exists => "exists",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub sel: Selector,
    pub op: Comparator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Scalar>,
}

impl Atom {
    pub fn new(sel: Selector, op: Comparator, value: impl Into<Scalar>) -> Self {
        Self {
            sel,
            op,
            value: Some(value.into()),
        }
    }

    pub fn exists(sel: Selector) -> Self {
        Self {
            sel,
            op: Comparator::Exists,
            value: None,
        }
    }

    pub fn holds<C: Lookup + ?Sized>(&self, ctx: &C) -> bool {
        ctx.lookup(&self.sel)
            .iter()
            .any(|v| self.op.test(v, self.value.as_ref()))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            Some(v) => write!(f, "{} {} {}", self.sel, self.op, v),
            None => write!(f, "{} {}", self.sel, self.op),
        }
    }
}

/// Conjunction of atoms. The empty condition always holds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Condition {
    pub atoms: Vec<Atom>,
}

impl Condition {
    pub fn all(atoms: impl IntoIterator<Item = Atom>) -> Self {
        Self {
            atoms: atoms.into_iter().collect(),
        }
    }

    pub fn always() -> Self {
        Self::default()
    }

    pub fn holds<C: Lookup + ?Sized>(&self, ctx: &C) -> bool {
        self.atoms.iter().all(|a| a.holds(ctx))
    }

    pub fn selectors(&self) -> impl Iterator<Item = &Selector> {
        self.atoms.iter().map(|a| &a.sel)
    }

    pub fn is_focus_relative(&self) -> bool {
        self.selectors().any(Selector::is_focus_relative)
    }
}

/// Resolves selectors to values. Unknown selectors resolve to nothing.
pub trait Lookup {
    fn lookup(&self, sel: &Selector) -> Vec<Scalar>;
}

impl Lookup for Percept {
    fn lookup(&self, sel: &Selector) -> Vec<Scalar> {
        match sel {
            Selector::Subject => vec![Scalar::Text(self.subject.as_str().to_string())],
            Selector::Attr(name) => self.attribute(name).cloned().into_iter().collect(),
            _ => Vec::new(),
        }
    }
}

/// Looks up social selectors in a context for a given self and focus.
pub(crate) fn lookup_social(
    ctx: &crate::model::SocialContext,
    sel: &Selector,
    self_id: &EntityId,
    focus: Option<&EntityId>,
) -> Option<Vec<Scalar>> {
    let values_for = |subject: Option<&EntityId>, dim: &str| -> Vec<Scalar> {
        ctx.iter()
            .filter(|sp| sp.dimension == dim && subject.is_none_or(|s| &sp.subject == s))
            .map(|sp| sp.value.clone())
            .collect()
    };
    Some(match sel {
        Selector::Social(dim) => values_for(focus, dim),
        Selector::SelfSocial(dim) => values_for(Some(self_id), dim),
        Selector::AnySocial(dim) => values_for(None, dim),
        Selector::Conflict(dim) => {
            let mut seen: std::collections::BTreeMap<&EntityId, &Scalar> = Default::default();
            let conflicted = ctx
                .iter()
                .filter(|sp| sp.dimension == *dim && focus.is_none_or(|f| &sp.subject == f))
                .any(|sp| match seen.insert(&sp.subject, &sp.value) {
                    Some(prev) => prev != &sp.value,
                    None => false,
                });
            if conflicted {
                vec![Scalar::Bool(true)]
            } else {
                Vec::new()
            }
        }
        _ => return None,
    })
}
