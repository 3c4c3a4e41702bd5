//! Possible-worlds semantics by exhaustive enumeration.
//!
//! Works on fluent and action names directly, without the state or
//! situation codecs, so it can serve as a reference for the compiled
//! matrix engine. It does share the exact-match rule for c-propositions:
//! an effect fires only when the performed action set equals its action
//! component.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::domain::{Domain, FluentState, PartialFluentState};
use crate::projection::{ProjectionError, Query, MIN_CONDITION_PROBABILITY};
use crate::scalar::Scalar;
use crate::validate::{validate, ValidationReport};

pub const DEFAULT_MAX_WORLDS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("domain is not well formed:\n{0}")]
    Invalid(ValidationReport),
    #[error("more than {0} possible worlds")]
    Capacity(usize),
    #[error(transparent)]
    Query(#[from] ProjectionError),
}

/// One branch of the domain's evolution: the state at every instant and the
/// actions performed there.
#[derive(Debug, Clone, PartialEq)]
pub struct World<S> {
    pub trace: Vec<(FluentState, BTreeSet<String>)>,
    pub weight: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PossibleWorlds<S> {
    pub instants: Vec<String>,
    pub worlds: Vec<World<S>>,
}

pub fn enumerate_worlds<S: Scalar>(domain: &Domain) -> Result<PossibleWorlds<S>, OracleError> {
    enumerate_worlds_capped(domain, DEFAULT_MAX_WORLDS)
}

pub fn enumerate_worlds_capped<S: Scalar>(domain: &Domain, max_worlds: usize) -> Result<PossibleWorlds<S>, OracleError> {
    let report = validate(domain);
    if !report.is_empty() {
        return Err(OracleError::Invalid(report));
    }
    let mut walker = Walker {
        domain,
        max_worlds,
        worlds: Vec::new(),
    };
    for o in &domain.iprop.outcomes {
        let weight = S::from_real(o.probability);
        if weight.is_zero() {
            continue;
        }
        let state = FluentState::total(domain, o.state.clone()).map_err(ProjectionError::from)?;
        walker.visit(0, state, weight, &mut Vec::new())?;
    }
    Ok(PossibleWorlds {
        instants: domain.instants.clone(),
        worlds: walker.worlds,
    })
}

struct Walker<'a, S> {
    domain: &'a Domain,
    max_worlds: usize,
    worlds: Vec<World<S>>,
}

impl<S: Scalar> Walker<'_, S> {
    fn visit(
        &mut self,
        t: usize,
        state: FluentState,
        weight: S,
        trace: &mut Vec<(FluentState, BTreeSet<String>)>,
    ) -> Result<(), OracleError> {
        let instant = &self.domain.instants[t];
        let last = t + 1 == self.domain.instants.len();
        let chances: Vec<(&str, S)> = self
            .domain
            .actions
            .iter()
            .map(|a| {
                let p = self
                    .domain
                    .pprops
                    .iter()
                    .find(|p| &p.action == a && &p.instant == instant && p.condition.is_subset_of(state.as_partial()))
                    .map_or_else(S::zero, |p| S::from_real(p.probability));
                (a.as_str(), p)
            })
            .collect();

        for (performed, w) in occurrence_branches(&chances) {
            let weight = weight.clone() * w;
            if weight.is_zero() {
                continue;
            }
            trace.push((state.clone(), performed.clone()));
            if last {
                if self.worlds.len() >= self.max_worlds {
                    return Err(OracleError::Capacity(self.max_worlds));
                }
                self.worlds.push(World {
                    trace: trace.clone(),
                    weight,
                });
            } else {
                let effect = self
                    .domain
                    .cprops
                    .iter()
                    .find(|c| c.body_actions == performed && c.body_conditions.is_subset_of(state.as_partial()));
                match effect {
                    None => self.visit(t + 1, state.clone(), weight, trace)?,
                    Some(c) => {
                        for o in &c.outcomes {
                            let w = weight.clone() * S::from_real(o.probability);
                            if w.is_zero() {
                                continue;
                            }
                            self.visit(t + 1, overwrite(&state, &o.state), w, trace)?;
                        }
                    }
                }
            }
            trace.pop();
        }
        Ok(())
    }
}

/// Every subset of actions with its independent-occurrence weight.
fn occurrence_branches<S: Scalar>(chances: &[(&str, S)]) -> Vec<(BTreeSet<String>, S)> {
    let mut branches = vec![(BTreeSet::new(), S::one())];
    for (action, p) in chances {
        let mut next = Vec::with_capacity(branches.len() * 2);
        for (set, w) in branches {
            let skip = S::one() - p.clone();
            if !skip.is_zero() {
                next.push((set.clone(), w.clone() * skip));
            }
            if !p.is_zero() {
                let mut with = set;
                with.insert(action.to_string());
                next.push((with, w * p.clone()));
            }
        }
        branches = next;
    }
    branches
}

fn overwrite(state: &FluentState, outcome: &PartialFluentState) -> FluentState {
    let mut next = state.as_partial().clone();
    for (f, v) in outcome.iter() {
        next.assign(f, v);
    }
    FluentState::new_unchecked(next)
}

impl<S: Scalar> PossibleWorlds<S> {
    pub fn total_weight(&self) -> S {
        S::sum_all(self.worlds.iter().map(|w| w.weight.clone()))
    }

    fn step(&self, label: &str) -> Result<usize, ProjectionError> {
        self.instants
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| ProjectionError::UnknownInstant(label.to_string()))
    }

    /// Total weight of worlds in which `x` holds at step `t`.
    pub fn weight_where(&self, x: &PartialFluentState, t: usize) -> S {
        S::sum_all(
            self.worlds
                .iter()
                .filter(|w| x.is_subset_of(w.trace[t].0.as_partial()))
                .map(|w| w.weight.clone()),
        )
    }

    /// Answer a query by summing world weights. Fluent names in the query
    /// are not checked against the domain.
    pub fn probability(&self, q: &Query) -> Result<S, ProjectionError> {
        let t_q = self.step(&q.at)?;
        match &q.given {
            None => Ok(self.weight_where(&q.target, t_q)),
            Some((cond, label)) => {
                let t_c = self.step(label)?;
                if t_c > t_q {
                    return Err(ProjectionError::ConditionAfterQuery {
                        given: label.clone(),
                        at: q.at.clone(),
                    });
                }
                let denom = self.weight_where(cond, t_c);
                if denom.as_f64() < MIN_CONDITION_PROBABILITY || denom.is_zero() {
                    return Err(ProjectionError::ZeroConditionProbability(denom.as_f64()));
                }
                let numer = S::sum_all(
                    self.worlds
                        .iter()
                        .filter(|w| {
                            cond.is_subset_of(w.trace[t_c].0.as_partial())
                                && q.target.is_subset_of(w.trace[t_q].0.as_partial())
                        })
                        .map(|w| w.weight.clone()),
                );
                Ok(numer / denom)
            }
        }
    }
}

/// Enumerate the worlds of `domain` and answer `q` over them.
pub fn oracle_project<S: Scalar>(domain: &Domain, q: &Query) -> Result<S, OracleError> {
    domain.check_partial(&q.target).map_err(ProjectionError::from)?;
    if let Some((c, _)) = &q.given {
        domain.check_partial(c).map_err(ProjectionError::from)?;
    }
    Ok(enumerate_worlds::<S>(domain)?.probability(q)?)
}
