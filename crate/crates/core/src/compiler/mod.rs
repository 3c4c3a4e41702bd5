//! Translation of a validated domain into a numerically encoded MDP without
//! rewards: state and situation codecs, initial distribution `p0`,
//! transition tensor `T` and the non-stationary occurrence policy `mu`.

mod build;
mod codec;
mod json;
mod table;

use thiserror::Error;

use crate::domain::{Domain, EntailmentError};
use crate::scalar::Scalar;
use crate::validate::{validate, ValidationReport};

pub use build::{apply_outcome, build_initial_distribution, build_policy_tensor, build_transition_tensor, PolicyTensors};
pub use codec::{
    build_action_situations, build_state_codec, normalize_instants, ActionSituationCodec, IndexedCondition,
    InstantMap, Situation, StateCodec, NULL_SITUATION,
};
pub use json::{MdpArtifact, TableArtifact, MDP_FORMAT};
pub use table::StochasticTable;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("domain is not well formed:\n{0}")]
    Invalid(ValidationReport),
    #[error("{what} ({size}) exceed the configured cap of {cap}")]
    Capacity { what: &'static str, size: usize, cap: usize },
    #[error(transparent)]
    Entailment(#[from] EntailmentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub max_states: usize,
    pub max_situations: usize,
    /// Largest number of entries stored densely per tensor; larger tensors
    /// switch to sparse rows.
    pub dense_entry_limit: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            max_states: 1 << 24,
            max_situations: 1 << 12,
            dense_entry_limit: 1 << 24,
        }
    }
}

/// Compiled domain. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PecMdp<S> {
    pub codec: StateCodec,
    pub acodec: ActionSituationCodec,
    pub instants: InstantMap,
    /// Domain actions in declaration order.
    pub actions: Vec<String>,
    pub p0: Vec<S>,
    transitions: StochasticTable<S>,
    policy: StochasticTable<S>,
    occurrence: Vec<S>,
}

impl<S: Scalar> PecMdp<S> {
    /// Number of time steps `n_I`.
    pub fn horizon(&self) -> usize {
        self.instants.len()
    }

    pub fn n_states(&self) -> usize {
        self.codec.n_states()
    }

    pub fn n_situations(&self) -> usize {
        self.acodec.len()
    }

    pub fn transitions(&self) -> &StochasticTable<S> {
        &self.transitions
    }

    pub fn policy_table(&self) -> &StochasticTable<S> {
        &self.policy
    }

    pub fn transition_row_index(&self, s: usize, a: usize) -> usize {
        s * self.n_situations() + a
    }

    pub fn transition(&self, s: usize, a: usize, next: usize) -> S {
        self.transitions.get(self.transition_row_index(s, a), next)
    }

    pub fn transition_row(&self, s: usize, a: usize) -> Vec<(usize, S)> {
        self.transitions.row_entries(self.transition_row_index(s, a))
    }

    pub fn for_each_successor(&self, s: usize, a: usize, f: impl FnMut(usize, &S)) {
        self.transitions.for_each_nonzero(self.transition_row_index(s, a), f)
    }

    /// `mu(a | s, t)`.
    pub fn mu(&self, t: usize, s: usize, a: usize) -> S {
        self.policy.get(t * self.n_states() + s, a)
    }

    pub fn mu_row(&self, t: usize, s: usize) -> Vec<(usize, S)> {
        self.policy.row_entries(t * self.n_states() + s)
    }

    /// Probability that atomic action `k` (declaration index) occurs at
    /// step `t` in state `s`.
    pub fn occurrence_probability(&self, t: usize, s: usize, k: usize) -> S {
        let n_a = self.actions.len();
        self.occurrence[(t * self.n_states() + s) * n_a + k].clone()
    }

    /// Situations with nonzero probability at step `t` in some state.
    pub fn supported_situations(&self, t: usize) -> Vec<bool> {
        let mut out = vec![false; self.n_situations()];
        for s in 0..self.n_states() {
            self.policy
                .for_each_nonzero(t * self.n_states() + s, |a, _| out[a] = true);
        }
        out
    }

    /// Situation names for index `a`, in action declaration order.
    pub fn situation_actions(&self, a: usize) -> Vec<String> {
        let sit = self.acodec.situation(a);
        self.actions.iter().filter(|x| sit.contains(*x)).cloned().collect()
    }
}

/// Compile with default options.
pub fn compile<S: Scalar>(domain: &Domain) -> Result<PecMdp<S>, CompileError> {
    compile_with(domain, &CompileOptions::default())
}

pub fn compile_with<S: Scalar>(domain: &Domain, options: &CompileOptions) -> Result<PecMdp<S>, CompileError> {
    let report = validate(domain);
    if !report.is_empty() {
        return Err(CompileError::Invalid(report));
    }
    let codec = build_state_codec(domain, options.max_states)?;
    let acodec = codec::build_action_situations_capped(domain, options.max_situations)?;
    let instants = normalize_instants(domain);
    let n = codec.n_states();
    let n_u = acodec.len();
    let dense_t = n.saturating_mul(n).saturating_mul(n_u) <= options.dense_entry_limit;
    let dense_mu = instants.len().saturating_mul(n).saturating_mul(n_u) <= options.dense_entry_limit;

    let p0 = build_initial_distribution(domain, &codec)?;
    let transitions = build_transition_tensor(domain, &codec, &acodec, dense_t)?;
    let PolicyTensors { occurrence, policy } = build_policy_tensor(domain, &codec, &acodec, &instants, dense_mu)?;
    Ok(PecMdp {
        codec,
        acodec,
        instants,
        actions: domain.actions.clone(),
        p0,
        transitions,
        policy,
        occurrence,
    })
}
