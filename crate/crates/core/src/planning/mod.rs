//! Reward specifications and exact dynamic-programming solvers.
//!
//! Decision epochs are the transitions between consecutive instants, so a
//! domain with `n_I` instants has `n_I - 1` epochs and a terminal value of
//! zero at its last instant. The choice recorded for the last instant is
//! always the null situation.

mod policy;
mod simulate;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{PecMdp, NULL_SITUATION};
use crate::domain::{EntailmentError, PartialFluentState};
use crate::projection::filter_vector;
use crate::scalar::Scalar;

pub use policy::{expected_return, policy_chain, policy_step, PolicyArtifact, PolicyKind, PolicyTable};
pub use simulate::{simulate, EpisodePolicy, ReturnStats, SimulationOptions, SimulationReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanningError {
    #[error("unknown action `{0}` in the cost table")]
    UnknownAction(String),
    #[error("invalid reward specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Goal(#[from] EntailmentError),
    #[error("policy is stochastic at state {state}, step {step}")]
    RequiresDeterministic { state: usize, step: usize },
    #[error("policy does not fit the domain: {0}")]
    PolicyShape(String),
    #[error("value iteration did not converge within {0} sweeps")]
    NotConverged(usize),
}

fn one() -> f64 {
    1.0
}

/// Declarative reward: goal bonus, per-action costs, per-step penalty and
/// discount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<PartialFluentState>,
    #[serde(default = "one")]
    pub goal_reward: f64,
    #[serde(default)]
    pub action_costs: BTreeMap<String, f64>,
    #[serde(default)]
    pub step_penalty: f64,
    #[serde(default = "one")]
    pub discount: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        Self {
            goal: None,
            goal_reward: 1.0,
            action_costs: BTreeMap::new(),
            step_penalty: 0.0,
            discount: 1.0,
        }
    }
}

impl RewardSpec {
    pub fn goal(goal: PartialFluentState, reward: f64) -> Self {
        Self {
            goal: Some(goal),
            goal_reward: reward,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<(), PlanningError> {
        let bad = |m: &str| Err(PlanningError::InvalidSpec(m.to_string()));
        if self.goal.is_none() && self.action_costs.is_empty() && self.step_penalty == 0.0 {
            return bad("set at least one of goal, action_costs, step_penalty");
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return bad("discount must lie in (0, 1]");
        }
        if !self.goal_reward.is_finite() {
            return bad("goal_reward must be finite");
        }
        if !(self.step_penalty >= 0.0 && self.step_penalty.is_finite()) {
            return bad("step_penalty must be a finite non-negative number");
        }
        if let Some((a, _)) = self.action_costs.iter().find(|(_, c)| !(**c >= 0.0 && c.is_finite())) {
            return Err(PlanningError::InvalidSpec(format!("cost of `{a}` must be a finite non-negative number")));
        }
        Ok(())
    }
}

/// `R(s, a, s') = r_goal [s' |= goal] - C(a) - step_penalty`, stored in
/// factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel<S> {
    pub goal: Vec<bool>,
    pub goal_reward: S,
    /// `C(a)`, summed over the atomic actions of each situation.
    pub situation_cost: Vec<S>,
    pub step_penalty: S,
    pub discount: S,
}

pub fn build_reward<S: Scalar>(mdp: &PecMdp<S>, spec: &RewardSpec) -> Result<RewardModel<S>, PlanningError> {
    spec.check()?;
    if let Some(a) = spec.action_costs.keys().find(|a| !mdp.actions.contains(a)) {
        return Err(PlanningError::UnknownAction(a.clone()));
    }
    let goal = match &spec.goal {
        Some(g) => filter_vector(&mdp.codec, g)?,
        None => vec![false; mdp.n_states()],
    };
    let situation_cost = (0..mdp.n_situations())
        .map(|a| {
            S::sum_all(
                mdp.acodec
                    .situation(a)
                    .iter()
                    .map(|u| S::from_real(spec.action_costs.get(u).copied().unwrap_or(0.0))),
            )
        })
        .collect();
    Ok(RewardModel {
        goal,
        goal_reward: S::from_real(spec.goal_reward),
        situation_cost,
        step_penalty: S::from_real(spec.step_penalty),
        discount: S::from_real(spec.discount),
    })
}

impl<S: Scalar> RewardModel<S> {
    pub fn get(&self, a: usize, next: usize) -> S {
        let bonus = if self.goal[next] { self.goal_reward.clone() } else { S::zero() };
        bonus - self.situation_cost[a].clone() - self.step_penalty.clone()
    }

    /// Dense `R[s][a][s']`.
    pub fn tensor(&self, n_states: usize) -> Vec<Vec<Vec<S>>> {
        (0..n_states)
            .map(|_| {
                (0..self.situation_cost.len())
                    .map(|a| (0..n_states).map(|s2| self.get(a, s2)).collect())
                    .collect()
            })
            .collect()
    }

    /// `sum_s' T(s, a, s') R(s, a, s')`.
    pub fn expected(&self, mdp: &PecMdp<S>, s: usize, a: usize) -> S {
        let mut terms = Vec::new();
        mdp.for_each_successor(s, a, |s2, p| terms.push(p.clone() * self.get(a, s2)));
        S::sum_all(terms)
    }

    /// `sum_s' T(s, a, s') (R(s, a, s') + discount V(s'))`.
    pub fn q_value(&self, mdp: &PecMdp<S>, s: usize, a: usize, next_values: &[S]) -> S {
        let mut terms = Vec::new();
        mdp.for_each_successor(s, a, |s2, p| {
            terms.push(p.clone() * (self.get(a, s2) + self.discount.clone() * next_values[s2].clone()));
        });
        S::sum_all(terms)
    }
}

/// Which situations the planner may pick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Availability {
    /// Situations with occurrence support in some state at the same step.
    #[default]
    PerStep,
    /// Situations with occurrence support in the same state and step.
    Strict,
}

/// Available situations at `(t, s)` in ascending index order, always
/// including the null situation.
pub fn available_situations<S: Scalar>(mdp: &PecMdp<S>, availability: Availability, t: usize) -> Vec<Vec<usize>> {
    let n = mdp.n_states();
    match availability {
        Availability::PerStep => {
            let mut support = mdp.supported_situations(t);
            support[NULL_SITUATION] = true;
            let list: Vec<usize> = (0..support.len()).filter(|&a| support[a]).collect();
            vec![list; n]
        }
        Availability::Strict => (0..n)
            .map(|s| {
                let mut list = vec![NULL_SITUATION];
                list.extend(mdp.mu_row(t, s).into_iter().map(|(a, _)| a).filter(|&a| a != NULL_SITUATION));
                list.sort_unstable();
                list
            })
            .collect(),
    }
}

/// Number of decision epochs: transitions between consecutive instants.
pub fn decision_epochs<S: Scalar>(mdp: &PecMdp<S>) -> usize {
    mdp.horizon().saturating_sub(1)
}

fn greedy<S: Scalar>(
    mdp: &PecMdp<S>,
    reward: &RewardModel<S>,
    s: usize,
    candidates: &[usize],
    next_values: &[S],
) -> (usize, S) {
    let mut best = (candidates[0], reward.q_value(mdp, s, candidates[0], next_values));
    for &a in &candidates[1..] {
        let q = reward.q_value(mdp, s, a, next_values);
        if q > best.1 && !S::ties(&q, &best.1) {
            best = (a, q);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHorizonSolution<S> {
    pub policy: PolicyTable,
    /// `V[t][s]` for every instant; the last row is zero.
    pub values: Vec<Vec<S>>,
}

/// Backward induction over the decision epochs. Ties go to the lowest
/// situation index.
pub fn solve_finite_horizon<S: Scalar>(
    mdp: &PecMdp<S>,
    reward: &RewardModel<S>,
    availability: Availability,
) -> FiniteHorizonSolution<S> {
    let n = mdp.n_states();
    let rows = mdp.horizon().max(1);
    let mut values = vec![vec![S::zero(); n]; rows];
    let mut choice = vec![vec![NULL_SITUATION; n]; rows];
    for t in (0..decision_epochs(mdp)).rev() {
        let avail = available_situations(mdp, availability, t);
        let next = &values[t + 1];
        let backed: Vec<(usize, S)> = (0..n)
            .into_par_iter()
            .map(|s| greedy(mdp, reward, s, &avail[s], next))
            .collect();
        for (s, (a, v)) in backed.into_iter().enumerate() {
            choice[t][s] = a;
            values[t][s] = v;
        }
    }
    FiniteHorizonSolution {
        policy: PolicyTable::nonstationary(choice),
        values,
    }
}

/// Largest `|V[t][s] - max_a Q(s, a, t)|` over all decision epochs.
pub fn bellman_residual<S: Scalar>(
    mdp: &PecMdp<S>,
    reward: &RewardModel<S>,
    availability: Availability,
    solution: &FiniteHorizonSolution<S>,
) -> S {
    let mut worst = S::zero();
    for t in 0..decision_epochs(mdp) {
        let avail = available_situations(mdp, availability, t);
        for (s, candidates) in avail.iter().enumerate() {
            let best = candidates
                .iter()
                .map(|&a| reward.q_value(mdp, s, a, &solution.values[t + 1]))
                .reduce(S::max_of)
                .expect("null situation is always available");
            worst = S::max_of(worst, (best - solution.values[t][s].clone()).abs_val());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryOptions {
    pub epsilon: f64,
    pub max_sweeps: usize,
    pub availability: Availability,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-9,
            max_sweeps: 1_000_000,
            availability: Availability::PerStep,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarySolution<S> {
    pub policy: PolicyTable,
    pub values: Vec<S>,
    pub sweeps: usize,
}

/// Value iteration to an `epsilon`-optimal stationary policy. Available
/// situations are pooled over all steps.
pub fn solve_stationary<S: Scalar>(
    mdp: &PecMdp<S>,
    reward: &RewardModel<S>,
    options: &StationaryOptions,
) -> Result<StationarySolution<S>, PlanningError> {
    let gamma = reward.discount.as_f64();
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(PlanningError::InvalidSpec("stationary planning needs a discount in (0, 1)".into()));
    }
    if options.epsilon.is_nan() || options.epsilon <= 0.0 {
        return Err(PlanningError::InvalidSpec("epsilon must be positive".into()));
    }
    let n = mdp.n_states();
    let mut pooled = vec![vec![false; mdp.n_situations()]; n];
    for t in 0..mdp.horizon() {
        for (s, list) in available_situations(mdp, options.availability, t).into_iter().enumerate() {
            for a in list {
                pooled[s][a] = true;
            }
        }
    }
    let avail: Vec<Vec<usize>> = pooled
        .iter()
        .map(|row| {
            let mut l: Vec<usize> = (0..row.len()).filter(|&a| row[a]).collect();
            if l.first() != Some(&NULL_SITUATION) {
                l.insert(0, NULL_SITUATION);
            }
            l
        })
        .collect();

    let stop = options.epsilon * (1.0 - gamma) / (2.0 * gamma);
    let mut values = vec![S::zero(); n];
    for sweep in 1..=options.max_sweeps {
        let backed: Vec<(usize, S)> = (0..n)
            .into_par_iter()
            .map(|s| greedy(mdp, reward, s, &avail[s], &values))
            .collect();
        let delta = backed
            .iter()
            .zip(&values)
            .map(|((_, v), old)| (v.clone() - old.clone()).abs_val().as_f64())
            .fold(0.0, f64::max);
        values = backed.into_iter().map(|(_, v)| v).collect();
        if delta < stop {
            let choice = (0..n).map(|s| greedy(mdp, reward, s, &avail[s], &values).0).collect();
            return Ok(StationarySolution {
                policy: PolicyTable::stationary(choice),
                values,
                sweeps: sweep,
            });
        }
    }
    Err(PlanningError::NotConverged(options.max_sweeps))
}
