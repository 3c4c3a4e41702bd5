//! Numeric encodings of instants, fluent states and action-taking situations.

use std::collections::{BTreeSet, HashMap};

use itertools::Itertools;

use crate::domain::{Domain, EntailmentError, FluentState, PartialFluentState};

use super::CompileError;

/// Order-preserving bijection between instant labels and time steps
/// `0..n_I`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstantMap {
    labels: Vec<String>,
    steps: HashMap<String, usize>,
}

impl InstantMap {
    pub fn step_of(&self, label: &str) -> Option<usize> {
        self.steps.get(label).copied()
    }

    pub fn label_of(&self, step: usize) -> Option<&str> {
        self.labels.get(step).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Renumber the domain's instants onto `0..n_I`, keeping their order.
pub fn normalize_instants(domain: &Domain) -> InstantMap {
    let labels = domain.instants.clone();
    let steps = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
    InstantMap { labels, steps }
}

/// Mixed-radix encoding of total fluent states, fluent 0 most significant.
///
/// Index order coincides with lexicographic order on value-index vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateCodec {
    fluents: Vec<String>,
    values: Vec<Vec<String>>,
    radices: Vec<usize>,
    strides: Vec<usize>,
    n_states: usize,
}

/// A condition resolved to `(fluent index, value index)` pairs.
pub type IndexedCondition = Vec<(usize, usize)>;

impl StateCodec {
    pub fn fluent_names(&self) -> &[String] {
        &self.fluents
    }

    pub fn values_of(&self, fluent: usize) -> &[String] {
        &self.values[fluent]
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn n_fluents(&self) -> usize {
        self.fluents.len()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn fluent_index(&self, name: &str) -> Option<usize> {
        self.fluents.iter().position(|f| f == name)
    }

    pub fn value_index(&self, fluent: usize, value: &str) -> Option<usize> {
        self.values.get(fluent)?.iter().position(|v| v == value)
    }

    /// Resolve a partial state against this codec's tables.
    pub fn index_condition(&self, cond: &PartialFluentState) -> Result<IndexedCondition, EntailmentError> {
        let mut out = Vec::with_capacity(cond.len());
        for (f, v) in cond.iter() {
            let fi = self
                .fluent_index(f)
                .ok_or_else(|| EntailmentError::UnknownFluent(f.to_string()))?;
            let vi = self.value_index(fi, v).ok_or_else(|| EntailmentError::UnknownValue {
                fluent: f.to_string(),
                value: v.to_string(),
            })?;
            out.push((fi, vi));
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Value-index vector of a total state.
    pub fn vectorize(&self, state: &FluentState) -> Result<Vec<usize>, EntailmentError> {
        let mut x = vec![0; self.fluents.len()];
        for (fi, name) in self.fluents.iter().enumerate() {
            let v = state
                .get(name)
                .ok_or_else(|| EntailmentError::NotTotal(name.clone()))?;
            x[fi] = self.value_index(fi, v).ok_or_else(|| EntailmentError::UnknownValue {
                fluent: name.clone(),
                value: v.to_string(),
            })?;
        }
        Ok(x)
    }

    pub fn encode_vector(&self, x: &[usize]) -> usize {
        debug_assert_eq!(x.len(), self.strides.len());
        x.iter().zip(&self.strides).map(|(v, s)| v * s).sum()
    }

    pub fn decode_vector(&self, mut s: usize) -> Vec<usize> {
        debug_assert!(s < self.n_states);
        let mut x = vec![0; self.radices.len()];
        for i in (0..self.radices.len()).rev() {
            x[i] = s % self.radices[i];
            s /= self.radices[i];
        }
        x
    }

    /// Value index of fluent `fluent` in state `s`, without decoding the
    /// whole vector.
    pub fn digit(&self, s: usize, fluent: usize) -> usize {
        (s / self.strides[fluent]) % self.radices[fluent]
    }

    pub fn encode(&self, state: &FluentState) -> Result<usize, EntailmentError> {
        Ok(self.encode_vector(&self.vectorize(state)?))
    }

    pub fn decode(&self, s: usize) -> FluentState {
        let x = self.decode_vector(s);
        FluentState::new_unchecked(self.partial_from_vector(&x, 0..self.fluents.len()))
    }

    /// The assignments of `x` restricted to the listed fluents.
    pub fn partial_from_vector(&self, x: &[usize], fluents: impl IntoIterator<Item = usize>) -> PartialFluentState {
        fluents
            .into_iter()
            .map(|fi| (self.fluents[fi].clone(), self.values[fi][x[fi]].clone()))
            .collect()
    }

    pub fn satisfies(&self, s: usize, cond: &[(usize, usize)]) -> bool {
        cond.iter().all(|&(f, v)| self.digit(s, f) == v)
    }
}

/// Build the state codec, refusing state spaces larger than `max_states`.
pub fn build_state_codec(domain: &Domain, max_states: usize) -> Result<StateCodec, CompileError> {
    let radices: Vec<usize> = domain.fluents.iter().map(|f| f.values.len()).collect();
    let n_states = radices
        .iter()
        .try_fold(1usize, |acc, &r| acc.checked_mul(r))
        .filter(|&n| n <= max_states)
        .ok_or(CompileError::Capacity {
            what: "states",
            size: domain.state_count(),
            cap: max_states,
        })?;
    let mut strides = vec![1; radices.len()];
    for i in (0..radices.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * radices[i + 1];
    }
    Ok(StateCodec {
        fluents: domain.fluents.iter().map(|f| f.name.clone()).collect(),
        values: domain.fluents.iter().map(|f| f.values.clone()).collect(),
        radices,
        strides,
        n_states,
    })
}

pub type Situation = BTreeSet<String>;

/// Index of action-taking situations. Index 0 is always the null situation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSituationCodec {
    situations: Vec<Situation>,
    index: HashMap<Situation, usize>,
}

pub const NULL_SITUATION: usize = 0;

impl ActionSituationCodec {
    /// Sorts by size, then lexicographically by action declaration order.
    fn from_sets(domain: &Domain, sets: impl IntoIterator<Item = Situation>) -> Self {
        let mut all: BTreeSet<Vec<usize>> = BTreeSet::new();
        all.insert(Vec::new());
        let mut unknown: BTreeSet<Situation> = BTreeSet::new();
        for set in sets {
            let keys: Option<Vec<usize>> = set.iter().map(|a| domain.action_index(a)).collect();
            match keys {
                Some(mut k) => {
                    k.sort_unstable();
                    all.insert(k);
                }
                None => {
                    unknown.insert(set);
                }
            }
        }
        let mut ordered: Vec<Vec<usize>> = all.into_iter().collect();
        ordered.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        let mut situations: Vec<Situation> = ordered
            .into_iter()
            .map(|k| k.into_iter().map(|i| domain.actions[i].clone()).collect())
            .collect();
        situations.extend(unknown);
        let index = situations.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Self { situations, index }
    }

    /// Codec from an explicit list of situations, in the given order. The
    /// null situation must come first.
    pub fn from_list(situations: Vec<Situation>) -> Option<Self> {
        if situations.first().is_none_or(|s| !s.is_empty()) {
            return None;
        }
        let index: HashMap<Situation, usize> = situations.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        (index.len() == situations.len()).then_some(Self { situations, index })
    }

    pub fn len(&self) -> usize {
        self.situations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.situations.is_empty()
    }

    pub fn situation(&self, a: usize) -> &Situation {
        &self.situations[a]
    }

    pub fn situations(&self) -> &[Situation] {
        &self.situations
    }

    pub fn index_of(&self, set: &Situation) -> Option<usize> {
        self.index.get(set).copied()
    }
}

/// Union over instants of the powerset of the actions performable there.
pub fn build_action_situations(domain: &Domain) -> ActionSituationCodec {
    build_action_situations_capped(domain, usize::MAX).expect("uncapped")
}

pub(crate) fn build_action_situations_capped(
    domain: &Domain,
    max_situations: usize,
) -> Result<ActionSituationCodec, CompileError> {
    let mut per_instant: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); domain.instants.len()];
    for p in &domain.pprops {
        if let (Some(t), Some(a)) = (domain.instant_index(&p.instant), domain.action_index(&p.action)) {
            per_instant[t].insert(a);
        }
    }
    let mut sets: BTreeSet<Situation> = BTreeSet::new();
    for acts in &per_instant {
        let acts: Vec<usize> = acts.iter().copied().collect();
        for k in 0..=acts.len() {
            for combo in acts.iter().combinations(k) {
                sets.insert(combo.into_iter().map(|&i| domain.actions[i].clone()).collect());
                if sets.len() > max_situations {
                    return Err(CompileError::Capacity {
                        what: "action situations",
                        size: sets.len(),
                        cap: max_situations,
                    });
                }
            }
        }
    }
    // Every c-proposition's action component gets an index so that the
    // transition function is total over referenced situations.
    for c in &domain.cprops {
        sets.insert(c.body_actions.clone());
    }
    let codec = ActionSituationCodec::from_sets(domain, sets);
    if codec.len() > max_situations {
        return Err(CompileError::Capacity {
            what: "action situations",
            size: codec.len(),
            cap: max_situations,
        });
    }
    Ok(codec)
}
