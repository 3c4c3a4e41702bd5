//! Well-formedness checks for parsed domains.
//!
//! Violations name propositions by their rendered text rather than their
//! position, so a report does not depend on the order propositions were
//! written in.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::domain::{Domain, Outcome, PartialFluentState, PROBABILITY_TOLERANCE};
use crate::parser::{render_cprop, render_pprop};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Violation {
    NoFluents,
    NoInstants,
    TooFewValues { fluent: String },
    DuplicateFluent { fluent: String },
    DuplicateValue { fluent: String, value: String },
    DuplicateAction { action: String },
    DuplicateInstant { instant: String },
    UnknownFluent { context: String, fluent: String },
    UnknownValue { context: String, fluent: String, value: String },
    UnknownAction { context: String, action: String },
    UnknownInstant { context: String, instant: String },
    ProbabilityOutOfRange { context: String, value: String },
    ProbabilitySum { context: String, sum: String },
    EmptyInitial,
    IncompleteInitialState { state: String, missing: String },
    RepeatedInitialState { state: String },
    ActionlessBody { context: String },
    /// Two c-proposition bodies can hold in the same state.
    CausalOverlap { first: String, second: String },
    /// Two p-propositions give different probabilities for the same action,
    /// instant and some fluent state.
    AmbiguousOccurrence { first: String, second: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoFluents => write!(f, "domain declares no fluents"),
            NoInstants => write!(f, "domain declares no instants"),
            TooFewValues { fluent } => write!(f, "fluent `{fluent}` needs at least two values"),
            DuplicateFluent { fluent } => write!(f, "fluent `{fluent}` declared more than once"),
            DuplicateValue { fluent, value } => write!(f, "value `{value}` repeated in fluent `{fluent}`"),
            DuplicateAction { action } => write!(f, "action `{action}` declared more than once"),
            DuplicateInstant { instant } => write!(f, "instant `{instant}` declared more than once"),
            UnknownFluent { context, fluent } => write!(f, "unknown fluent `{fluent}` in `{context}`"),
            UnknownValue { context, fluent, value } => {
                write!(f, "`{value}` is not a value of `{fluent}` in `{context}`")
            }
            UnknownAction { context, action } => write!(f, "undeclared action `{action}` in `{context}`"),
            UnknownInstant { context, instant } => write!(f, "undeclared instant `{instant}` in `{context}`"),
            ProbabilityOutOfRange { context, value } => {
                write!(f, "probability {value} out of range in `{context}`")
            }
            ProbabilitySum { context, sum } => write!(f, "outcome probabilities sum to {sum} in `{context}`"),
            EmptyInitial => write!(f, "initially-one-of lists no outcomes"),
            IncompleteInitialState { state, missing } => {
                write!(f, "initial state {state} does not assign fluent `{missing}`")
            }
            RepeatedInitialState { state } => write!(f, "initial state {state} listed more than once"),
            ActionlessBody { context } => write!(f, "c-proposition body has no action: `{context}`"),
            CausalOverlap { first, second } => {
                write!(f, "c-proposition bodies overlap: `{first}` and `{second}`")
            }
            AmbiguousOccurrence { first, second } => {
                write!(f, "ambiguous p-propositions: `{first}` and `{second}`")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: BTreeSet<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, v: Violation) {
        self.violations.insert(v);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

fn pair(a: String, b: String) -> (String, String) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn check_state(domain: &Domain, context: &str, state: &PartialFluentState, report: &mut ValidationReport) {
    for (f, v) in state.iter() {
        match domain.fluent(f) {
            None => report.push(Violation::UnknownFluent {
                context: context.to_string(),
                fluent: f.to_string(),
            }),
            Some(decl) if decl.value_index(v).is_none() => report.push(Violation::UnknownValue {
                context: context.to_string(),
                fluent: f.to_string(),
                value: v.to_string(),
            }),
            Some(_) => {}
        }
    }
}

fn check_head(domain: &Domain, context: &str, outcomes: &[Outcome], report: &mut ValidationReport) {
    for o in outcomes {
        check_state(domain, context, &o.state, report);
        if !(0.0..=1.0).contains(&o.probability) {
            report.push(Violation::ProbabilityOutOfRange {
                context: context.to_string(),
                value: o.probability.to_string(),
            });
        }
    }
    let sum: f64 = outcomes.iter().map(|o| o.probability).sum();
    let error = (sum - 1.0).abs();
    if error.is_nan() || error > PROBABILITY_TOLERANCE {
        report.push(Violation::ProbabilitySum {
            context: context.to_string(),
            sum: sum.to_string(),
        });
    }
}

/// Collect every well-formedness violation of `domain`.
pub fn validate(domain: &Domain) -> ValidationReport {
    let mut report = ValidationReport::default();

    if domain.fluents.is_empty() {
        report.push(Violation::NoFluents);
    }
    if domain.instants.is_empty() {
        report.push(Violation::NoInstants);
    }
    let mut seen = HashSet::new();
    for f in &domain.fluents {
        if !seen.insert(&f.name) {
            report.push(Violation::DuplicateFluent { fluent: f.name.clone() });
        }
        if f.values.len() < 2 {
            report.push(Violation::TooFewValues { fluent: f.name.clone() });
        }
        let mut vals = HashSet::new();
        for v in &f.values {
            if !vals.insert(v) {
                report.push(Violation::DuplicateValue {
                    fluent: f.name.clone(),
                    value: v.clone(),
                });
            }
        }
    }
    let mut seen = HashSet::new();
    for a in &domain.actions {
        if !seen.insert(a) {
            report.push(Violation::DuplicateAction { action: a.clone() });
        }
    }
    let mut seen = HashSet::new();
    for i in &domain.instants {
        if !seen.insert(i) {
            report.push(Violation::DuplicateInstant { instant: i.clone() });
        }
    }

    // i-proposition
    let outcomes = &domain.iprop.outcomes;
    if outcomes.is_empty() {
        report.push(Violation::EmptyInitial);
    } else {
        check_head(domain, "initially-one-of", outcomes, &mut report);
    }
    let mut seen = HashSet::new();
    for o in outcomes {
        if let Some(missing) = domain.fluents.iter().find(|f| o.state.get(&f.name).is_none()) {
            report.push(Violation::IncompleteInitialState {
                state: o.state.to_string(),
                missing: missing.name.clone(),
            });
        }
        if !seen.insert(&o.state) {
            report.push(Violation::RepeatedInitialState {
                state: o.state.to_string(),
            });
        }
    }

    // c-propositions
    let ctexts: Vec<String> = domain.cprops.iter().map(|c| render_cprop(domain, c)).collect();
    for (c, text) in domain.cprops.iter().zip(&ctexts) {
        if c.body_actions.is_empty() {
            report.push(Violation::ActionlessBody { context: text.clone() });
        }
        for a in &c.body_actions {
            if domain.action_index(a).is_none() {
                report.push(Violation::UnknownAction {
                    context: text.clone(),
                    action: a.clone(),
                });
            }
        }
        check_state(domain, text, &c.body_conditions, &mut report);
        check_head(domain, text, &c.outcomes, &mut report);
    }
    // Exact-match action semantics: bodies can only fire together when
    // their action sets are equal.
    for i in 0..domain.cprops.len() {
        for j in i + 1..domain.cprops.len() {
            let (a, b) = (&domain.cprops[i], &domain.cprops[j]);
            if a.body_actions == b.body_actions && a.body_conditions.compatible_with(&b.body_conditions) {
                let (first, second) = pair(ctexts[i].clone(), ctexts[j].clone());
                report.push(Violation::CausalOverlap { first, second });
            }
        }
    }

    // p-propositions
    let ptexts: Vec<String> = domain.pprops.iter().map(|p| render_pprop(domain, p)).collect();
    for (p, text) in domain.pprops.iter().zip(&ptexts) {
        if domain.action_index(&p.action).is_none() {
            report.push(Violation::UnknownAction {
                context: text.clone(),
                action: p.action.clone(),
            });
        }
        if domain.instant_index(&p.instant).is_none() {
            report.push(Violation::UnknownInstant {
                context: text.clone(),
                instant: p.instant.clone(),
            });
        }
        if !(p.probability > 0.0 && p.probability <= 1.0) {
            report.push(Violation::ProbabilityOutOfRange {
                context: text.clone(),
                value: p.probability.to_string(),
            });
        }
        check_state(domain, text, &p.condition, &mut report);
    }
    for i in 0..domain.pprops.len() {
        for j in i + 1..domain.pprops.len() {
            let (a, b) = (&domain.pprops[i], &domain.pprops[j]);
            if a.action == b.action
                && a.instant == b.instant
                && a.probability != b.probability
                && a.condition.compatible_with(&b.condition)
            {
                let (first, second) = pair(ptexts[i].clone(), ptexts[j].clone());
                report.push(Violation::AmbiguousOccurrence { first, second });
            }
        }
    }

    report
}
