//! Reference computations shared by the integration suites. They work from
//! the domain text and the raw compiled tables, not from the projection,
//! planning or decompiler code they check.

#![allow(dead_code)]

use std::collections::BTreeSet;

use itertools::Itertools;
use pec_core::compiler::PecMdp;
use pec_core::planning::{PolicyTable, RewardSpec};
use pec_core::{Domain, PartialFluentState};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Occurrence probability of `action` at `instant` in `state`: the first
/// p-proposition whose action, instant and condition match.
pub fn occurrence(domain: &Domain, action: &str, instant: &str, state: &PartialFluentState) -> f64 {
    domain
        .pprops
        .iter()
        .find(|p| p.action == action && p.instant == instant && p.condition.iter().all(|(f, v)| state.get(f) == Some(v)))
        .map_or(0.0, |p| p.probability)
}

/// `p_t` for every instant under a deterministic policy, by direct
/// forward propagation over the transition rows.
pub fn induced_chain(mdp: &PecMdp<f64>, policy: &PolicyTable) -> Vec<Vec<f64>> {
    let mut out = vec![mdp.p0.clone()];
    for t in 0..mdp.horizon().saturating_sub(1) {
        let p = &out[t];
        let mut next = vec![0.0; p.len()];
        for (s, &ps) in p.iter().enumerate() {
            if ps == 0.0 {
                continue;
            }
            for (s2, q) in mdp.transition_row(s, policy.action(s, t)) {
                next[s2] += ps * q;
            }
        }
        out.push(next);
    }
    out
}

/// Whether the state at index `s` satisfies every assignment of `cond`.
pub fn holds(mdp: &PecMdp<f64>, s: usize, cond: &PartialFluentState) -> bool {
    let state = mdp.codec.decode(s);
    cond.iter().all(|(f, v)| state.get(f) == Some(v))
}

/// `R(s, a, s')` straight from the reward specification.
pub fn reward_of(mdp: &PecMdp<f64>, spec: &RewardSpec, a: usize, next: usize) -> f64 {
    let goal = match &spec.goal {
        Some(g) if holds(mdp, next, g) => spec.goal_reward,
        _ => 0.0,
    };
    let cost: f64 = mdp
        .situation_actions(a)
        .iter()
        .map(|u| spec.action_costs.get(u).copied().unwrap_or(0.0))
        .sum();
    goal - cost - spec.step_penalty
}

/// Situations the planner may pick at step `t` (default availability):
/// null plus any situation with occurrence support at some state.
pub fn available(mdp: &PecMdp<f64>, t: usize) -> Vec<usize> {
    (0..mdp.n_situations())
        .filter(|&a| a == 0 || (0..mdp.n_states()).any(|s| mdp.mu(t, s, a) > 0.0))
        .collect()
}

/// Exact expected return of a deterministic policy by forward propagation.
pub fn policy_return(mdp: &PecMdp<f64>, spec: &RewardSpec, policy: &PolicyTable) -> f64 {
    let chain = induced_chain(mdp, policy);
    let mut total = 0.0;
    let mut discount = 1.0;
    for (t, p) in chain.iter().enumerate().take(mdp.horizon().saturating_sub(1)) {
        for (s, &ps) in p.iter().enumerate() {
            let a = policy.action(s, t);
            for (s2, q) in mdp.transition_row(s, a) {
                total += discount * ps * q * reward_of(mdp, spec, a, s2);
            }
        }
        discount *= spec.discount;
    }
    total
}

/// Result of exhaustive policy search.
pub struct BruteForce {
    pub best: f64,
    pub policies: u64,
}

/// Best expected return over every deterministic nonstationary policy.
///
/// Choices only matter in states with positive probability, so at each
/// step the search enumerates one situation per supported state. Returns
/// `None` once more than `budget` joint assignments would be visited.
pub fn brute_force(mdp: &PecMdp<f64>, spec: &RewardSpec, budget: u64) -> Option<BruteForce> {
    let mut visited = 0u64;
    let best = search(mdp, spec, 0, mdp.p0.clone(), 1.0, &mut visited, budget)?;
    Some(BruteForce { best, policies: visited })
}

fn search(
    mdp: &PecMdp<f64>,
    spec: &RewardSpec,
    t: usize,
    p: Vec<f64>,
    discount: f64,
    visited: &mut u64,
    budget: u64,
) -> Option<f64> {
    if t + 1 >= mdp.horizon() {
        *visited += 1;
        return (*visited <= budget).then_some(0.0);
    }
    let support: Vec<usize> = (0..p.len()).filter(|&s| p[s] > 0.0).collect();
    let avail = available(mdp, t);
    let mut best = f64::NEG_INFINITY;
    for choice in support.iter().map(|_| avail.iter().copied()).multi_cartesian_product() {
        let mut immediate = 0.0;
        let mut next = vec![0.0; p.len()];
        for (&s, &a) in support.iter().zip(&choice) {
            for (s2, q) in mdp.transition_row(s, a) {
                immediate += p[s] * q * reward_of(mdp, spec, a, s2);
                next[s2] += p[s] * q;
            }
        }
        let rest = search(mdp, spec, t + 1, next, discount * spec.discount, visited, budget)?;
        best = best.max(discount * immediate + rest);
    }
    Some(best)
}

/// A reward specification drawn over the domain's names.
pub fn random_reward(rng: &mut ChaCha8Rng, domain: &Domain) -> RewardSpec {
    let f = domain.fluents.choose(rng).expect("fluents");
    let v = f.values.choose(rng).expect("values");
    let mut spec = RewardSpec::goal(PartialFluentState::from_pairs([(f.name.as_str(), v.as_str())]).unwrap(), 1.0);
    for a in &domain.actions {
        if rng.gen_bool(0.5) {
            spec.action_costs.insert(a.clone(), f64::from(rng.gen_range(0..=6)) / 20.0);
        }
    }
    if rng.gen_bool(0.3) {
        spec.step_penalty = 0.1;
    }
    if rng.gen_bool(0.5) {
        spec.discount = 0.9;
    }
    spec
}

/// All single-fluent assignments of a domain.
pub fn single_fluent_queries(domain: &Domain) -> Vec<PartialFluentState> {
    domain
        .fluents
        .iter()
        .flat_map(|f| {
            f.values
                .iter()
                .map(|v| PartialFluentState::from_pairs([(f.name.as_str(), v.as_str())]).unwrap())
        })
        .collect()
}

/// Situations of a domain as produced by brute force: every per-instant
/// powerset of p-proposition actions together with every c-proposition
/// action set, sorted by size and then by declaration order.
pub fn expected_situations(domain: &Domain) -> Vec<Vec<String>> {
    let mut sets: BTreeSet<Vec<usize>> = BTreeSet::new();
    sets.insert(vec![]);
    for i in &domain.instants {
        let acts: BTreeSet<usize> = domain
            .pprops
            .iter()
            .filter(|p| &p.instant == i)
            .map(|p| domain.action_index(&p.action).unwrap())
            .collect();
        for k in 0..=acts.len() {
            for c in acts.iter().copied().combinations(k) {
                sets.insert(c);
            }
        }
    }
    for c in &domain.cprops {
        let mut v: Vec<usize> = c.body_actions.iter().map(|a| domain.action_index(a).unwrap()).collect();
        v.sort_unstable();
        sets.insert(v);
    }
    let mut sorted: Vec<Vec<usize>> = sets.into_iter().collect();
    sorted.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sorted
        .into_iter()
        .map(|v| v.into_iter().map(|i| domain.actions[i].clone()).collect())
        .collect()
}
