//! Domain descriptions: fluents, actions, instants and the four kinds of
//! propositions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on probability sums (i-proposition and c-proposition heads).
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FluentDecl {
    pub name: String,
    /// Declaration order defines the value index of each entry.
    pub values: Vec<String>,
}

impl FluentDecl {
    pub fn new<S: Into<String>>(name: impl Into<String>, values: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            values: values.into_iter().map(Into::into).collect(),
        }
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// A consistent set of `fluent = value` assignments.
///
/// The empty state is valid and is entailed by every fluent state.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartialFluentState(BTreeMap<String, String>);

impl PartialFluentState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a state from pairs. A repeated fluent is rejected.
    pub fn from_pairs<F, V>(pairs: impl IntoIterator<Item = (F, V)>) -> Result<Self, DuplicateFluent>
    where
        F: Into<String>,
        V: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (f, v) in pairs {
            let f = f.into();
            if map.contains_key(&f) {
                return Err(DuplicateFluent(f));
            }
            map.insert(f, v.into());
        }
        Ok(Self(map))
    }

    /// Set (or overwrite) one assignment.
    pub fn assign(&mut self, fluent: impl Into<String>, value: impl Into<String>) {
        self.0.insert(fluent.into(), value.into());
    }

    pub fn get(&self, fluent: &str) -> Option<&str> {
        self.0.get(fluent).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(f, v)| (f.as_str(), v.as_str()))
    }

    /// True when some total state extends both `self` and `other`.
    pub fn compatible_with(&self, other: &PartialFluentState) -> bool {
        self.iter().all(|(f, v)| other.get(f).is_none_or(|w| w == v))
    }

    /// True when every assignment of `self` also appears in `other`.
    pub fn is_subset_of(&self, other: &PartialFluentState) -> bool {
        self.iter().all(|(f, v)| other.get(f) == Some(v))
    }
}

impl FromIterator<(String, String)> for PartialFluentState {
    fn from_iter<T: IntoIterator<Item = (String, String)>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("fluent `{0}` assigned more than once")]
pub struct DuplicateFluent(pub String);

/// A total assignment over a domain's fluents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FluentState(PartialFluentState);

impl FluentState {
    /// Wraps `state` if it assigns every declared fluent a declared value.
    pub fn total(domain: &Domain, state: PartialFluentState) -> Result<Self, EntailmentError> {
        domain.check_partial(&state)?;
        if let Some(missing) = domain.fluents.iter().find(|f| state.get(&f.name).is_none()) {
            return Err(EntailmentError::NotTotal(missing.name.clone()));
        }
        Ok(Self(state))
    }

    pub(crate) fn new_unchecked(state: PartialFluentState) -> Self {
        Self(state)
    }

    pub fn as_partial(&self) -> &PartialFluentState {
        &self.0
    }

    pub fn into_partial(self) -> PartialFluentState {
        self.0
    }

    pub fn get(&self, fluent: &str) -> Option<&str> {
        self.0.get(fluent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntailmentError {
    #[error("unknown fluent `{0}`")]
    UnknownFluent(String),
    #[error("`{value}` is not a value of fluent `{fluent}`")]
    UnknownValue { fluent: String, value: String },
    #[error("fluent `{0}` has no value in a state that must be total")]
    NotTotal(String),
}

/// One weighted outcome of an i- or c-proposition head.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub state: PartialFluentState,
    pub probability: f64,
}

impl Outcome {
    pub fn new(state: PartialFluentState, probability: f64) -> Self {
        Self { state, probability }
    }
}

/// `initially-one-of { (S1, P1), ... }`. Every state must be total.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IProposition {
    pub outcomes: Vec<Outcome>,
}

/// `theta causes-one-of { (X1, P1), ... }`, with `theta` a conjunction of
/// performed actions and fluent literals.
#[derive(Debug, Clone, PartialEq)]
pub struct CProposition {
    pub body_actions: BTreeSet<String>,
    pub body_conditions: PartialFluentState,
    pub outcomes: Vec<Outcome>,
}

/// `A performed-at I with-prob P if-holds X`.
#[derive(Debug, Clone, PartialEq)]
pub struct PProposition {
    pub action: String,
    pub instant: String,
    pub probability: f64,
    pub condition: PartialFluentState,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Domain {
    pub fluents: Vec<FluentDecl>,
    pub actions: Vec<String>,
    /// Instant labels in temporal order.
    pub instants: Vec<String>,
    pub iprop: IProposition,
    pub cprops: Vec<CProposition>,
    pub pprops: Vec<PProposition>,
}

impl Domain {
    pub fn fluent(&self, name: &str) -> Option<&FluentDecl> {
        self.fluents.iter().find(|f| f.name == name)
    }

    pub fn fluent_index(&self, name: &str) -> Option<usize> {
        self.fluents.iter().position(|f| f.name == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn instant_index(&self, label: &str) -> Option<usize> {
        self.instants.iter().position(|i| i == label)
    }

    /// Checks that every assignment names a declared fluent and value.
    pub fn check_partial(&self, state: &PartialFluentState) -> Result<(), EntailmentError> {
        for (f, v) in state.iter() {
            let decl = self
                .fluent(f)
                .ok_or_else(|| EntailmentError::UnknownFluent(f.to_string()))?;
            if decl.value_index(v).is_none() {
                return Err(EntailmentError::UnknownValue {
                    fluent: f.to_string(),
                    value: v.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Number of total fluent states, saturating on overflow.
    pub fn state_count(&self) -> usize {
        self.fluents
            .iter()
            .try_fold(1usize, |acc, f| acc.checked_mul(f.values.len()))
            .unwrap_or(usize::MAX)
    }

    /// Same domain with its p-propositions replaced.
    pub fn with_pprops(&self, pprops: Vec<PProposition>) -> Domain {
        Domain {
            pprops,
            ..self.clone()
        }
    }
}

/// `state ⊨ cond`: every assignment of `cond` appears in `state`.
pub fn entails(domain: &Domain, state: &FluentState, cond: &PartialFluentState) -> Result<bool, EntailmentError> {
    domain.check_partial(state.as_partial())?;
    domain.check_partial(cond)?;
    Ok(cond.is_subset_of(state.as_partial()))
}

impl fmt::Display for PartialFluentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}
