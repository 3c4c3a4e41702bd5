//! Temporal projection by forward propagation of state distributions.
//!
//! The distribution at step `t + 1` is `p_t` times the policy-weighted
//! matrix `M_t[s][s'] = sum_a mu(a | s, t) T(s, a, s')`. Propagation works
//! row by row and never materializes `M_t` or any product of them.

use std::fmt;

use thiserror::Error;

use crate::compiler::{PecMdp, StateCodec};
use crate::domain::{EntailmentError, PartialFluentState};
use crate::scalar::Scalar;

/// Conditions less likely than this cannot be conditioned on.
pub const MIN_CONDITION_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("time step {step} outside the horizon of {horizon} steps")]
    StepOutOfRange { step: usize, horizon: usize },
    #[error("cannot propagate backwards from step {from} to step {to}")]
    Backwards { from: usize, to: usize },
    #[error("unknown instant `{0}`")]
    UnknownInstant(String),
    #[error("condition instant `{given}` is later than query instant `{at}`")]
    ConditionAfterQuery { given: String, at: String },
    #[error("condition has probability {0}, too small to condition on")]
    ZeroConditionProbability(f64),
    #[error(transparent)]
    Condition(#[from] EntailmentError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution<S> {
    pub probs: Vec<S>,
    pub time: usize,
}

impl<S: Scalar> StateDistribution<S> {
    pub fn initial(mdp: &PecMdp<S>) -> Self {
        Self {
            probs: mdp.p0.clone(),
            time: 0,
        }
    }

    pub fn point_mass(n_states: usize, state: usize, time: usize) -> Self {
        let mut probs = vec![S::zero(); n_states];
        probs[state] = S::one();
        Self { probs, time }
    }

    pub fn total(&self) -> S {
        S::sum_all(self.probs.iter().cloned())
    }

    /// `sum_s f[s] * p[s]`.
    pub fn mass_on(&self, filter: &[bool]) -> S {
        S::sum_all(
            self.probs
                .iter()
                .zip(filter)
                .filter(|(_, keep)| **keep)
                .map(|(p, _)| p.clone()),
        )
    }
}

/// A basic or conditional projection query over instant labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub target: PartialFluentState,
    pub at: String,
    pub given: Option<(PartialFluentState, String)>,
}

impl Query {
    pub fn new(target: PartialFluentState, at: impl Into<String>) -> Self {
        Self {
            target,
            at: at.into(),
            given: None,
        }
    }

    pub fn given(mut self, condition: PartialFluentState, at: impl Into<String>) -> Self {
        self.given = Some((condition, at.into()));
        self
    }

    /// Build from `F=V, G=W@label` terms.
    pub fn from_terms(target: &str, given: Option<&str>) -> Result<Self, QuerySyntaxError> {
        let (t, at) = parse_term(target)?;
        let mut q = Query::new(t, at);
        if let Some(g) = given {
            let (c, at) = parse_term(g)?;
            q = q.given(c, at);
        }
        Ok(q)
    }

    /// Parse the long form: `project "F=V" at I [given "G=W" at J]`.
    pub fn parse(text: &str) -> Result<Self, QuerySyntaxError> {
        let err = || QuerySyntaxError(format!("expected `project \"F=V\" at I [given \"G=W\" at J]`, got `{text}`"));
        let rest = text.trim().strip_prefix("project").ok_or_else(err)?;
        let (target, rest) = quoted(rest).ok_or_else(err)?;
        let rest = rest.trim_start().strip_prefix("at").ok_or_else(err)?;
        let rest = rest.trim_start();
        let (at, rest) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
        if at.is_empty() {
            return Err(err());
        }
        let mut q = Query::new(parse_assignments(target)?, at);
        let rest = rest.trim();
        if rest.is_empty() {
            return Ok(q);
        }
        let rest = rest.strip_prefix("given").ok_or_else(err)?;
        let (cond, rest) = quoted(rest).ok_or_else(err)?;
        let label = rest.trim_start().strip_prefix("at").ok_or_else(err)?.trim();
        if label.is_empty() || label.contains(char::is_whitespace) {
            return Err(err());
        }
        q = q.given(parse_assignments(cond)?, label);
        Ok(q)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = |s: &PartialFluentState| {
            s.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
        };
        write!(f, "project \"{}\" at {}", body(&self.target), self.at)?;
        if let Some((c, at)) = &self.given {
            write!(f, " given \"{}\" at {}", body(c), at)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed query: {0}")]
pub struct QuerySyntaxError(pub String);

fn quoted(text: &str) -> Option<(&str, &str)> {
    let text = text.trim_start().strip_prefix('"')?;
    let end = text.find('"')?;
    Some((&text[..end], &text[end + 1..]))
}

/// `F=V, G=W` (possibly empty) into a partial state.
pub fn parse_assignments(text: &str) -> Result<PartialFluentState, QuerySyntaxError> {
    let mut state = PartialFluentState::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (f, v) = part
            .split_once('=')
            .map(|(f, v)| (f.trim(), v.trim()))
            .filter(|(f, v)| !f.is_empty() && !v.is_empty())
            .ok_or_else(|| QuerySyntaxError(format!("expected `Fluent=Value`, got `{part}`")))?;
        if state.get(f).is_some() {
            return Err(QuerySyntaxError(format!("fluent `{f}` assigned twice")));
        }
        state.assign(f, v);
    }
    Ok(state)
}

/// `F=V, G=W@label`.
pub fn parse_term(text: &str) -> Result<(PartialFluentState, String), QuerySyntaxError> {
    let (body, at) = text
        .rsplit_once('@')
        .ok_or_else(|| QuerySyntaxError(format!("missing `@instant` in `{text}`")))?;
    let at = at.trim();
    if at.is_empty() {
        return Err(QuerySyntaxError(format!("missing instant after `@` in `{text}`")));
    }
    Ok((parse_assignments(body)?, at.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProjectionOptions {
    /// Allow steps past the last instant, treating every later step as
    /// pure persistence.
    pub extrapolate: bool,
}

/// Dense `M_t`.
pub fn policy_weighted_matrix<S: Scalar>(mdp: &PecMdp<S>, t: usize) -> Result<Vec<Vec<S>>, ProjectionError> {
    check_step(mdp, t)?;
    let n = mdp.n_states();
    let mut m = vec![vec![S::zero(); n]; n];
    for (s, row) in m.iter_mut().enumerate() {
        for (a, w) in mdp.mu_row(t, s) {
            mdp.for_each_successor(s, a, |next, p| {
                row[next] = row[next].clone() + w.clone() * p.clone();
            });
        }
    }
    Ok(m)
}

fn check_step<S: Scalar>(mdp: &PecMdp<S>, t: usize) -> Result<(), ProjectionError> {
    if t >= mdp.horizon() {
        return Err(ProjectionError::StepOutOfRange {
            step: t,
            horizon: mdp.horizon(),
        });
    }
    Ok(())
}

/// One application of `M_t`: returns `p^T M_t`.
pub fn step_distribution<S: Scalar>(mdp: &PecMdp<S>, p: &[S], t: usize) -> Vec<S> {
    let mut next = vec![S::zero(); p.len()];
    for (s, ps) in p.iter().enumerate() {
        if ps.is_zero() {
            continue;
        }
        for (a, w) in mdp.mu_row(t, s) {
            let weight = ps.clone() * w;
            mdp.for_each_successor(s, a, |s2, prob| {
                next[s2] = next[s2].clone() + weight.clone() * prob.clone();
            });
        }
    }
    next
}

pub fn propagate<S: Scalar>(
    mdp: &PecMdp<S>,
    p: &StateDistribution<S>,
    to_time: usize,
) -> Result<StateDistribution<S>, ProjectionError> {
    propagate_with(mdp, p, to_time, ProjectionOptions::default())
}

/// Propagate `p` from `p.time` to `to_time`.
pub fn propagate_with<S: Scalar>(
    mdp: &PecMdp<S>,
    p: &StateDistribution<S>,
    to_time: usize,
    options: ProjectionOptions,
) -> Result<StateDistribution<S>, ProjectionError> {
    if !options.extrapolate {
        check_step(mdp, to_time)?;
    }
    if to_time < p.time {
        return Err(ProjectionError::Backwards {
            from: p.time,
            to: to_time,
        });
    }
    let last = mdp.horizon().saturating_sub(1);
    let mut probs = p.probs.clone();
    for t in p.time..to_time.min(last) {
        probs = step_distribution(mdp, &probs, t);
    }
    Ok(StateDistribution { probs, time: to_time })
}

/// Indicator of the states that entail `query`.
pub fn filter_vector(codec: &StateCodec, query: &PartialFluentState) -> Result<Vec<bool>, EntailmentError> {
    let cond = codec.index_condition(query)?;
    Ok((0..codec.n_states()).map(|s| codec.satisfies(s, &cond)).collect())
}

/// Map an instant label to a step. With extrapolation, integer labels past
/// the last integer instant resolve to steps past the horizon.
pub fn resolve_instant<S: Scalar>(
    mdp: &PecMdp<S>,
    label: &str,
    options: ProjectionOptions,
) -> Result<usize, ProjectionError> {
    if let Some(step) = mdp.instants.step_of(label) {
        return Ok(step);
    }
    let unknown = || ProjectionError::UnknownInstant(label.to_string());
    if !options.extrapolate {
        return Err(unknown());
    }
    let wanted: u64 = label.parse().map_err(|_| unknown())?;
    let last_label = mdp.instants.labels().last().ok_or_else(unknown)?;
    let last: u64 = last_label.parse().map_err(|_| unknown())?;
    if wanted <= last {
        return Err(unknown());
    }
    let beyond = usize::try_from(wanted - last).map_err(|_| unknown())?;
    Ok(mdp.horizon() - 1 + beyond)
}

pub fn project<S: Scalar>(mdp: &PecMdp<S>, q: &Query) -> Result<S, ProjectionError> {
    project_with(mdp, q, ProjectionOptions::default())
}

/// `P(target @ at)` or `P(target @ at | given @ t_C)`.
pub fn project_with<S: Scalar>(mdp: &PecMdp<S>, q: &Query, options: ProjectionOptions) -> Result<S, ProjectionError> {
    let t_q = resolve_instant(mdp, &q.at, options)?;
    let f_q = filter_vector(&mdp.codec, &q.target)?;
    let start = match &q.given {
        None => StateDistribution::initial(mdp),
        Some((cond, label)) => {
            let t_c = resolve_instant(mdp, label, options)?;
            if t_c > t_q {
                return Err(ProjectionError::ConditionAfterQuery {
                    given: label.clone(),
                    at: q.at.clone(),
                });
            }
            let f_c = filter_vector(&mdp.codec, cond)?;
            let p_c = propagate_with(mdp, &StateDistribution::initial(mdp), t_c, options)?;
            condition_on(p_c, &f_c)?
        }
    };
    let p_q = propagate_with(mdp, &start, t_q, options)?;
    Ok(p_q.mass_on(&f_q))
}

/// Mask `p` with `filter` and renormalize.
pub fn condition_on<S: Scalar>(p: StateDistribution<S>, filter: &[bool]) -> Result<StateDistribution<S>, ProjectionError> {
    let mass = p.mass_on(filter);
    if mass.as_f64() < MIN_CONDITION_PROBABILITY || mass.is_zero() {
        return Err(ProjectionError::ZeroConditionProbability(mass.as_f64()));
    }
    let probs = p
        .probs
        .into_iter()
        .zip(filter)
        .map(|(x, keep)| if *keep { x / mass.clone() } else { S::zero() })
        .collect();
    Ok(StateDistribution { probs, time: p.time })
}
