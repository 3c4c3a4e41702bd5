//! Deterministic policies back to probability-1 p-propositions.
//!
//! A policy first becomes one p-proposition per (instant, state, atomic
//! action), conditioned on the full state. Pruning then drops the (state,
//! instant) pairs the policy never reaches, and minimization shortens each
//! condition to the fewest assignments that still tell its state apart from
//! every other state in scope at that instant.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;
use rayon::prelude::*;
use thiserror::Error;

use crate::compiler::{compile, CompileError, PecMdp, NULL_SITUATION};
use crate::domain::{Domain, PProposition};
use crate::parser::render_pprop;
use crate::planning::{policy_chain, PlanningError, PolicyTable};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompileError {
    #[error(transparent)]
    Policy(#[from] PlanningError),
    #[error("recompiling the decompiled domain failed: {0}")]
    Recompile(#[from] CompileError),
}

/// A generated p-proposition together with the (step, state) it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompiledProp {
    pub prop: PProposition,
    pub step: usize,
    pub state: usize,
}

/// Ordered by step, then state, then action declaration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PPropSet {
    pub entries: Vec<DecompiledProp>,
}

impl PPropSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn props(&self) -> Vec<PProposition> {
        self.entries.iter().map(|e| e.prop.clone()).collect()
    }

    /// Distinct states carrying p-propositions at each step.
    pub fn mapped_states(&self, horizon: usize) -> Vec<BTreeSet<usize>> {
        let mut out = vec![BTreeSet::new(); horizon];
        for e in &self.entries {
            out[e.step].insert(e.state);
        }
        out
    }

    /// One `.pec` line per p-proposition.
    pub fn render(&self, domain: &Domain) -> String {
        self.entries.iter().map(|e| render_pprop(domain, &e.prop) + "\n").collect()
    }
}

/// One probability-1 p-proposition per atomic action of every non-null
/// choice, conditioned on the full state.
pub fn policy_to_pprops<S: Scalar>(mdp: &PecMdp<S>, policy: &PolicyTable) -> Result<PPropSet, DecompileError> {
    policy.check_shape(mdp)?;
    let mut entries = Vec::new();
    for t in 0..mdp.horizon() {
        let label = mdp.instants.label_of(t).expect("step within horizon");
        for s in 0..mdp.n_states() {
            let a = policy.action(s, t);
            if a == NULL_SITUATION {
                continue;
            }
            let condition = mdp.codec.decode(s).into_partial();
            for action in mdp.situation_actions(a) {
                entries.push(DecompiledProp {
                    prop: PProposition {
                        action,
                        instant: label.to_string(),
                        probability: 1.0,
                        condition: condition.clone(),
                    },
                    step: t,
                    state: s,
                });
            }
        }
    }
    Ok(PPropSet { entries })
}

/// Keep entries whose (state, step) has probability above `threshold`
/// under the policy-induced chain.
pub fn reachability_prune<S: Scalar>(mdp: &PecMdp<S>, policy: &PolicyTable, pprops: &PPropSet, threshold: f64) -> PPropSet {
    let chain = policy_chain(mdp, policy);
    let cut = S::from_real(threshold);
    PPropSet {
        entries: pprops
            .entries
            .iter()
            .filter(|e| chain[e.step][e.state] > cut)
            .cloned()
            .collect(),
    }
}

/// States a minimized condition must be distinguished from, per step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateScope {
    pub per_step: Vec<BTreeSet<usize>>,
}

impl StateScope {
    /// Only the states that carry p-propositions at each step.
    pub fn mapped(pprops: &PPropSet, horizon: usize) -> Self {
        Self {
            per_step: pprops.mapped_states(horizon),
        }
    }

    /// Every state at every step.
    pub fn all(n_states: usize, horizon: usize) -> Self {
        Self {
            per_step: vec![(0..n_states).collect(); horizon],
        }
    }

    /// Mapped states plus every state the policy reaches with probability
    /// above `threshold`, including those where it idles.
    pub fn reachable<S: Scalar>(mdp: &PecMdp<S>, policy: &PolicyTable, pprops: &PPropSet, threshold: f64) -> Self {
        let chain = policy_chain(mdp, policy);
        let cut = S::from_real(threshold);
        let mut per_step = pprops.mapped_states(mdp.horizon());
        for (t, p) in chain.iter().enumerate() {
            per_step[t].extend((0..p.len()).filter(|&s| p[s] > cut));
        }
        Self { per_step }
    }
}

/// Smallest set of fluent positions on which `x` differs from every
/// competitor, searching by size and then lexicographically.
pub fn distinguishing_fluents(x: &[usize], competitors: &[Vec<usize>]) -> Vec<usize> {
    for k in 0..=x.len() {
        for subset in (0..x.len()).combinations(k) {
            if competitors.iter().all(|y| subset.iter().any(|&f| y[f] != x[f])) {
                return subset;
            }
        }
    }
    // Only reachable when a competitor equals `x`, which callers exclude.
    (0..x.len()).collect()
}

/// Replace each full-state condition by a minimal distinguishing partial
/// state within `scope`.
pub fn minimize_conditions<S: Scalar>(mdp: &PecMdp<S>, pprops: &PPropSet, scope: &StateScope) -> PPropSet {
    let codec = &mdp.codec;
    let mapped = pprops.mapped_states(mdp.horizon());
    let conditions: BTreeMap<(usize, usize), _> = mapped
        .par_iter()
        .enumerate()
        .flat_map_iter(|(t, states)| {
            let pool: BTreeSet<usize> = states.iter().chain(&scope.per_step[t]).copied().collect();
            states.iter().map(move |&s| {
                let x = codec.decode_vector(s);
                let competitors: Vec<Vec<usize>> =
                    pool.iter().filter(|&&o| o != s).map(|&o| codec.decode_vector(o)).collect();
                let keep = distinguishing_fluents(&x, &competitors);
                ((t, s), codec.partial_from_vector(&x, keep))
            })
            .collect::<Vec<_>>()
        })
        .collect();
    PPropSet {
        entries: pprops
            .entries
            .iter()
            .map(|e| DecompiledProp {
                prop: PProposition {
                    condition: conditions[&(e.step, e.state)].clone(),
                    ..e.prop.clone()
                },
                ..e.clone()
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub step: usize,
    pub state: usize,
    pub expected: Vec<String>,
    /// Recompiled situation distribution, by action names.
    pub found: Vec<(Vec<String>, f64)>,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {} state {}: expected {:?}, found {:?}", self.step, self.state, self.expected, self.found)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripReport {
    /// The source domain with its p-propositions replaced.
    pub domain: Domain,
    pub mismatches: Vec<Mismatch>,
}

impl RoundtripReport {
    pub fn is_ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Recompile `domain` with `pprops` in place of its p-propositions and check
/// that the new occurrence distribution picks the policy's situation with
/// probability 1 wherever the policy reaches with probability above
/// `threshold`.
pub fn roundtrip_check<S: Scalar>(
    domain: &Domain,
    mdp: &PecMdp<S>,
    pprops: &PPropSet,
    policy: &PolicyTable,
    threshold: f64,
) -> Result<RoundtripReport, DecompileError> {
    let rebuilt = domain.with_pprops(pprops.props());
    let remdp: PecMdp<S> = compile(&rebuilt)?;
    let chain = policy_chain(mdp, policy);
    let cut = S::from_real(threshold);
    let mut mismatches = Vec::new();
    for (t, p) in chain.iter().enumerate() {
        for s in (0..p.len()).filter(|&s| p[s] > cut) {
            let expected = mdp.situation_actions(policy.action(s, t));
            let row = remdp.mu_row(t, s);
            let ok = matches!(row.as_slice(), [(a, w)] if w.is_one() && remdp.situation_actions(*a) == expected);
            if !ok {
                mismatches.push(Mismatch {
                    step: t,
                    state: s,
                    expected,
                    found: row.iter().map(|(a, w)| (remdp.situation_actions(*a), w.as_f64())).collect(),
                });
            }
        }
    }
    Ok(RoundtripReport {
        domain: rebuilt,
        mismatches,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecompileOptions {
    /// Drop (state, instant) pairs reached with probability at most this.
    pub prune: Option<f64>,
    pub minimize: bool,
}

/// Translate, then optionally prune and minimize.
pub fn decompile<S: Scalar>(
    mdp: &PecMdp<S>,
    policy: &PolicyTable,
    options: DecompileOptions,
) -> Result<PPropSet, DecompileError> {
    let mut set = policy_to_pprops(mdp, policy)?;
    if let Some(threshold) = options.prune {
        set = reachability_prune(mdp, policy, &set, threshold);
    }
    if options.minimize {
        let scope = StateScope::reachable(mdp, policy, &set, options.prune.unwrap_or(0.0));
        set = minimize_conditions(mdp, &set, &scope);
    }
    Ok(set)
}
