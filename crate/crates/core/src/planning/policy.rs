use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::compiler::{PecMdp, NULL_SITUATION};
use crate::scalar::Scalar;

use super::{PlanningError, RewardModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Stationary,
    Nonstationary,
}

/// Deterministic policy over situation indices.
///
/// A stationary table has a single row; a nonstationary table has one row
/// per time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyTable {
    pub kind: PolicyKind,
    pub choice: Vec<Vec<usize>>,
}

impl PolicyTable {
    pub fn stationary(choice: Vec<usize>) -> Self {
        Self {
            kind: PolicyKind::Stationary,
            choice: vec![choice],
        }
    }

    pub fn nonstationary(choice: Vec<Vec<usize>>) -> Self {
        Self {
            kind: PolicyKind::Nonstationary,
            choice,
        }
    }

    /// The all-null policy.
    pub fn idle(kind: PolicyKind, n_states: usize, horizon: usize) -> Self {
        let rows = match kind {
            PolicyKind::Stationary => 1,
            PolicyKind::Nonstationary => horizon,
        };
        Self {
            kind,
            choice: vec![vec![NULL_SITUATION; n_states]; rows],
        }
    }

    pub fn action(&self, state: usize, step: usize) -> usize {
        match self.kind {
            PolicyKind::Stationary => self.choice[0][state],
            PolicyKind::Nonstationary => self.choice[step][state],
        }
    }

    pub fn n_states(&self) -> usize {
        self.choice.first().map_or(0, Vec::len)
    }

    /// Read a deterministic policy off the domain's own occurrence
    /// distribution `mu`.
    pub fn from_mu<S: Scalar>(mdp: &PecMdp<S>) -> Result<Self, PlanningError> {
        let mut choice = vec![vec![NULL_SITUATION; mdp.n_states()]; mdp.horizon()];
        for (t, row) in choice.iter_mut().enumerate() {
            for (s, c) in row.iter_mut().enumerate() {
                match mdp.mu_row(t, s).as_slice() {
                    [(a, p)] if p.is_one() => *c = *a,
                    _ => return Err(PlanningError::RequiresDeterministic { state: s, step: t }),
                }
            }
        }
        Ok(Self::nonstationary(choice))
    }

    pub fn check_shape<S: Scalar>(&self, mdp: &PecMdp<S>) -> Result<(), PlanningError> {
        let rows_ok = match self.kind {
            PolicyKind::Stationary => self.choice.len() == 1,
            PolicyKind::Nonstationary => self.choice.len() == mdp.horizon(),
        };
        if !rows_ok || self.choice.iter().any(|r| r.len() != mdp.n_states()) {
            return Err(PlanningError::PolicyShape(format!(
                "expected {} rows of {} states",
                if self.kind == PolicyKind::Stationary { 1 } else { mdp.horizon() },
                mdp.n_states()
            )));
        }
        if let Some(&a) = self.choice.iter().flatten().find(|&&a| a >= mdp.n_situations()) {
            return Err(PlanningError::PolicyShape(format!("situation index {a} out of range")));
        }
        Ok(())
    }

    pub fn to_artifact<S: Scalar>(&self, mdp: &PecMdp<S>, values: Option<&[Vec<S>]>) -> PolicyArtifact {
        PolicyArtifact {
            kind: self.kind,
            situations: (0..mdp.n_situations()).map(|a| mdp.situation_actions(a)).collect(),
            choice: self.choice.clone(),
            values: values.map(|v| v.iter().map(|row| row.iter().map(Scalar::as_f64).collect()).collect()),
        }
    }

    /// Rebuild a table against `mdp`, mapping situations by their action
    /// names rather than by index.
    pub fn from_artifact<S: Scalar>(artifact: &PolicyArtifact, mdp: &PecMdp<S>) -> Result<Self, PlanningError> {
        let map: Vec<usize> = artifact
            .situations
            .iter()
            .map(|names| {
                let set: BTreeSet<String> = names.iter().cloned().collect();
                mdp.acodec
                    .index_of(&set)
                    .ok_or_else(|| PlanningError::PolicyShape(format!("situation {names:?} is not in the domain")))
            })
            .collect::<Result<_, _>>()?;
        let choice = artifact
            .choice
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&a| {
                        map.get(a)
                            .copied()
                            .ok_or_else(|| PlanningError::PolicyShape(format!("situation index {a} out of range")))
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        let table = Self {
            kind: artifact.kind,
            choice,
        };
        table.check_shape(mdp)?;
        Ok(table)
    }
}

/// JSON form of a policy. `choice[t][s]` (a single row when stationary)
/// indexes into `situations`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyArtifact {
    pub kind: PolicyKind,
    pub situations: Vec<Vec<String>>,
    pub choice: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Vec<f64>>>,
}

/// State distributions `p_0 .. p_{n_I - 1}` of the chain obtained by
/// substituting `policy` for `mu`.
pub fn policy_chain<S: Scalar>(mdp: &PecMdp<S>, policy: &PolicyTable) -> Vec<Vec<S>> {
    let mut out = Vec::with_capacity(mdp.horizon());
    let mut p = mdp.p0.clone();
    for t in 0..mdp.horizon() {
        let next = (t + 1 < mdp.horizon()).then(|| policy_step(mdp, policy, &p, t));
        out.push(p);
        match next {
            Some(n) => p = n,
            None => break,
        }
    }
    out
}

/// One step of the policy-induced chain.
pub fn policy_step<S: Scalar>(mdp: &PecMdp<S>, policy: &PolicyTable, p: &[S], t: usize) -> Vec<S> {
    let mut next = vec![S::zero(); p.len()];
    for (s, ps) in p.iter().enumerate() {
        if ps.is_zero() {
            continue;
        }
        mdp.for_each_successor(s, policy.action(s, t), |s2, prob| {
            next[s2] = next[s2].clone() + ps.clone() * prob.clone();
        });
    }
    next
}

/// Exact expected discounted return of `policy` over the decision epochs,
/// computed from the policy-induced state distributions.
pub fn expected_return<S: Scalar>(mdp: &PecMdp<S>, reward: &RewardModel<S>, policy: &PolicyTable) -> S {
    let chain = policy_chain(mdp, policy);
    let mut terms = Vec::new();
    let mut discount = S::one();
    for (t, p) in chain.iter().enumerate().take(super::decision_epochs(mdp)) {
        for (s, ps) in p.iter().enumerate() {
            if !ps.is_zero() {
                terms.push(discount.clone() * ps.clone() * reward.expected(mdp, s, policy.action(s, t)));
            }
        }
        discount = discount * reward.discount.clone();
    }
    S::sum_all(terms)
}
