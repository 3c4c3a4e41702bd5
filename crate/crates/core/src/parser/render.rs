use std::fmt::Write;

use crate::domain::{CProposition, Domain, Outcome, PProposition, PartialFluentState};

/// Pretty-print a domain as `.pec` text that parses back to an equal domain.
pub fn render_domain(domain: &Domain) -> String {
    let mut out = String::new();
    for f in &domain.fluents {
        let _ = writeln!(out, "fluent {} takes-values {{{}}}", f.name, f.values.join(", "));
    }
    for a in &domain.actions {
        let _ = writeln!(out, "action {a}");
    }
    let _ = writeln!(out, "instants {}", render_instants(&domain.instants));
    let _ = writeln!(
        out,
        "initially-one-of {}",
        render_outcomes(domain, &domain.iprop.outcomes)
    );
    for c in &domain.cprops {
        let _ = writeln!(out, "{}", render_cprop(domain, c));
    }
    for p in &domain.pprops {
        let _ = writeln!(out, "{}", render_pprop(domain, p));
    }
    out
}

fn render_instants(labels: &[String]) -> String {
    let as_ints: Option<Vec<u64>> = labels
        .iter()
        .map(|l| l.parse::<u64>().ok().filter(|n| n.to_string() == *l))
        .collect();
    if let Some(ints) = as_ints {
        let consecutive = ints.windows(2).all(|w| w[1] == w[0] + 1);
        if consecutive && !ints.is_empty() {
            return format!("{}..{}", ints[0], ints[ints.len() - 1]);
        }
    }
    format!("{{{}}}", labels.join(", "))
}

/// Assignments in fluent declaration order; undeclared fluents go last.
fn render_state(domain: &Domain, state: &PartialFluentState) -> String {
    let mut pairs: Vec<(usize, &str, &str)> = state
        .iter()
        .map(|(f, v)| (domain.fluent_index(f).unwrap_or(usize::MAX), f, v))
        .collect();
    pairs.sort();
    let body: Vec<String> = pairs.iter().map(|(_, f, v)| format!("{f}={v}")).collect();
    format!("{{{}}}", body.join(", "))
}

fn render_outcomes(domain: &Domain, outcomes: &[Outcome]) -> String {
    let parts: Vec<String> = outcomes
        .iter()
        .map(|o| format!("({}, {})", render_state(domain, &o.state), o.probability))
        .collect();
    format!("{{{}}}", parts.join(", "))
}

pub fn render_cprop(domain: &Domain, c: &CProposition) -> String {
    let mut actions: Vec<&String> = c.body_actions.iter().collect();
    actions.sort_by_key(|a| (domain.action_index(a).unwrap_or(usize::MAX), *a));
    let mut terms: Vec<String> = actions.into_iter().cloned().collect();
    let cond = render_state(domain, &c.body_conditions);
    let cond = &cond[1..cond.len() - 1];
    terms.extend(cond.split(", ").filter(|s| !s.is_empty()).map(String::from));
    format!(
        "{} causes-one-of {}",
        terms.join(" & "),
        render_outcomes(domain, &c.outcomes)
    )
}

pub fn render_pprop(domain: &Domain, p: &PProposition) -> String {
    let mut line = format!("{} performed-at {} with-prob {}", p.action, p.instant, p.probability);
    if !p.condition.is_empty() {
        let _ = write!(line, " if-holds {}", render_state(domain, &p.condition));
    }
    line
}
