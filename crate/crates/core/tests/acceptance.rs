//! Acceptance suite: one PASS/FAIL line per criterion, with the measured
//! figures and the pinned tolerances. Exits non-zero if any criterion fails.

mod common;

use std::panic;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use itertools::Itertools;
use pec_core::compiler::{compile, PecMdp};
use pec_core::corpus::{corpus, random_domain, CorpusLimits, COIN_LAMP};
use pec_core::decompiler::{decompile, DecompileOptions, PPropSet};
use pec_core::oracle::enumerate_worlds;
use pec_core::parser::{parse_domain, parse_domain_bytes, render_domain};
use pec_core::planning::{
    build_reward, simulate, solve_finite_horizon, solve_stationary, Availability, EpisodePolicy, PolicyTable,
    RewardSpec, SimulationOptions, StationaryOptions,
};
use pec_core::projection::{condition_on, filter_vector, propagate, Query, StateDistribution};
use pec_core::{Domain, Exact, PartialFluentState, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CORPUS_SEED: u64 = 20_240_601;
const CORPUS_SIZE: usize = 200;
const PROB_TOL: f64 = 1e-9;
const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(60);
const PLANNING_TIME_LIMIT: Duration = Duration::from_secs(120);
const CONDITION_FLOOR: f64 = 1e-6;
const PLANNING_DOMAINS: usize = 50;
const PLANNING_MAX_STATES: usize = 8;
const PLANNING_MAX_EPOCHS: usize = 3;
const PLANNING_MAX_SITUATIONS: usize = 4;
const BRUTE_FORCE_BUDGET: u64 = 200_000;
const FUZZ_CASES: usize = 100_000;
const SIM_EPISODES: usize = 100_000;
const SIM_SEED: u64 = 42;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

fn oracle_equivalence(domains: &[Domain]) -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut queries = 0usize;
    let mut failures = Vec::new();
    for (i, d) in domains.iter().enumerate() {
        let mdp: PecMdp<f64> = compile(d).unwrap();
        let worlds = enumerate_worlds::<f64>(d).unwrap();
        let p0 = StateDistribution::initial(&mdp);
        for (t, label) in d.instants.iter().enumerate() {
            let pt = propagate(&mdp, &p0, t).unwrap();
            for q in common::single_fluent_queries(d) {
                let matrix = pt.mass_on(&filter_vector(&mdp.codec, &q).unwrap());
                let oracle = worlds.probability(&Query::new(q.clone(), label)).unwrap();
                let delta = (matrix - oracle).abs();
                worst = worst.max(delta);
                queries += 1;
                if delta > PROB_TOL {
                    failures.push(format!("domain {i} {q}@{label}: {matrix} vs {oracle}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        "oracle equivalence",
        failures.is_empty() && elapsed <= ORACLE_TIME_LIMIT && domains.len() >= 200,
        format!(
            "{} domains, {queries} queries, max |delta| {worst:.2e} (tol {PROB_TOL:.0e}), {:.1} s (limit {} s){}",
            domains.len(),
            elapsed.as_secs_f64(),
            ORACLE_TIME_LIMIT.as_secs(),
            first(&failures)
        ),
    )
}

fn conditional_equivalence(domains: &[Domain]) -> Outcome {
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    let mut failures = Vec::new();
    for (i, d) in domains.iter().enumerate() {
        let mdp: PecMdp<f64> = compile(d).unwrap();
        let worlds = enumerate_worlds::<f64>(d).unwrap();
        let singles = common::single_fluent_queries(d);
        let p0 = StateDistribution::initial(&mdp);
        for (t_c, label_c) in d.instants.iter().enumerate() {
            let pc = propagate(&mdp, &p0, t_c).unwrap();
            for cond in &singles {
                let f_c = filter_vector(&mdp.codec, cond).unwrap();
                if worlds.weight_where(cond, t_c) <= CONDITION_FLOOR {
                    continue;
                }
                let mut p = condition_on(pc.clone(), &f_c).unwrap();
                for (t_q, label_q) in d.instants.iter().enumerate().skip(t_c) {
                    p = propagate(&mdp, &p, t_q).unwrap();
                    for q in &singles {
                        let matrix = p.mass_on(&filter_vector(&mdp.codec, q).unwrap());
                        let query = Query::new(q.clone(), label_q).given(cond.clone(), label_c);
                        let oracle = worlds.probability(&query).unwrap();
                        let delta = (matrix - oracle).abs();
                        worst = worst.max(delta);
                        pairs += 1;
                        if delta > PROB_TOL {
                            failures.push(format!("domain {i} {query}: {matrix} vs {oracle}"));
                        }
                    }
                }
            }
        }
    }
    outcome(
        "conditional projection equivalence",
        failures.is_empty() && pairs > 0,
        format!(
            "{pairs} conditional queries (condition probability > {CONDITION_FLOOR:.0e}), max |delta| {worst:.2e} (tol {PROB_TOL:.0e}){}",
            first(&failures)
        ),
    )
}

fn stochasticity(domains: &[Domain]) -> Outcome {
    let mut worst_sum = 0.0f64;
    let mut worst_marginal = 0.0f64;
    let mut negatives = 0usize;
    let mut failures = Vec::new();
    for (i, d) in domains.iter().enumerate() {
        let mdp: PecMdp<f64> = compile(d).unwrap();
        let mut check_row = |what: &str, row: Vec<(usize, f64)>| {
            negatives += row.iter().filter(|(_, p)| *p < 0.0).count();
            let dev = (row.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs();
            worst_sum = worst_sum.max(dev);
            if dev > PROB_TOL {
                failures.push(format!("domain {i}: {what} sums to 1{dev:+e}"));
            }
        };
        check_row("p0", mdp.p0.iter().copied().enumerate().collect());
        for s in 0..mdp.n_states() {
            for a in 0..mdp.n_situations() {
                check_row("T row", mdp.transition_row(s, a));
            }
            for t in 0..mdp.horizon() {
                check_row("mu row", mdp.mu_row(t, s));
            }
        }
        for (t, label) in d.instants.iter().enumerate() {
            for s in 0..mdp.n_states() {
                let state = mdp.codec.decode(s).into_partial();
                for action in &d.actions {
                    let marginal: f64 = mdp
                        .mu_row(t, s)
                        .iter()
                        .filter(|(a, _)| mdp.acodec.situation(*a).contains(action))
                        .map(|(_, p)| p)
                        .sum();
                    let expected = common::occurrence(d, action, label, &state);
                    let dev = (marginal - expected).abs();
                    worst_marginal = worst_marginal.max(dev);
                    if dev > PROB_TOL {
                        failures.push(format!("domain {i}: marginal of {action} at {label} in {state}: {marginal} vs {expected}"));
                    }
                }
            }
        }
    }
    outcome(
        "stochasticity and marginal coherence",
        failures.is_empty() && negatives == 0,
        format!(
            "{} domains, max row-sum deviation {worst_sum:.2e}, max marginal deviation {worst_marginal:.2e} (tol {PROB_TOL:.0e}), {negatives} negative entries{}",
            domains.len(),
            first(&failures)
        ),
    )
}

fn codec_laws(domains: &[Domain]) -> Outcome {
    let mut checked = 0usize;
    let mut states = 0usize;
    let mut failures = Vec::new();
    for (i, d) in domains.iter().enumerate() {
        if d.state_count() > 256 {
            continue;
        }
        let mdp: PecMdp<f64> = compile(d).unwrap();
        let codec = &mdp.codec;
        checked += 1;
        // All value vectors in lexicographic order must receive 0, 1, 2, ...
        let vectors: Vec<Vec<usize>> = d.fluents.iter().map(|f| 0..f.values.len()).multi_cartesian_product().collect();
        if vectors.len() != codec.n_states() {
            failures.push(format!("domain {i}: {} vectors for {} states", vectors.len(), codec.n_states()));
        }
        for (rank, x) in vectors.iter().enumerate() {
            states += 1;
            let s = codec.encode_vector(x);
            if s != rank || codec.decode_vector(s) != *x {
                failures.push(format!("domain {i}: vector {x:?} encodes to {s}, expected {rank}"));
            }
            let named: PartialFluentState = d
                .fluents
                .iter()
                .zip(x)
                .map(|(f, &v)| (f.name.clone(), f.values[v].clone()))
                .collect();
            let total = pec_core::FluentState::total(d, named.clone()).unwrap();
            if codec.encode(&total).unwrap() != rank || codec.decode(rank).into_partial() != named {
                failures.push(format!("domain {i}: named state {named} does not round-trip"));
            }
        }
        let expected = common::expected_situations(d);
        let got: Vec<Vec<String>> = (0..mdp.n_situations()).map(|a| mdp.situation_actions(a)).collect();
        if got != expected {
            failures.push(format!("domain {i}: situations {got:?}, expected {expected:?}"));
        }
    }
    outcome(
        "codec laws",
        failures.is_empty() && checked > 0,
        format!(
            "{checked} domains with at most 256 states, {states} states checked exhaustively{}",
            first(&failures)
        ),
    )
}

struct Solved {
    domain: Domain,
    mdp: PecMdp<f64>,
    policies: Vec<PolicyTable>,
}

fn planning_optimality() -> (Outcome, Vec<Solved>) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + 1);
    let limits = CorpusLimits::default();
    let mut solved = Vec::new();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut enumerated = 0u64;
    let mut drawn = 0usize;
    while solved.len() < PLANNING_DOMAINS && drawn < 20_000 {
        drawn += 1;
        let d = random_domain(&mut rng, &limits);
        if d.state_count() > PLANNING_MAX_STATES || d.instants.len() > PLANNING_MAX_EPOCHS + 1 || d.instants.len() < 2 {
            continue;
        }
        let mdp: PecMdp<f64> = compile(&d).unwrap();
        let has_choice = (0..d.instants.len() - 1).any(|t| common::available(&mdp, t).len() > 1);
        if mdp.n_situations() > PLANNING_MAX_SITUATIONS || !has_choice {
            continue;
        }
        let spec = common::random_reward(&mut rng, &d);
        let Some(brute) = common::brute_force(&mdp, &spec, BRUTE_FORCE_BUDGET) else {
            continue;
        };
        enumerated += brute.policies;
        let reward = build_reward(&mdp, &spec).unwrap();
        let sol = solve_finite_horizon(&mdp, &reward, Availability::PerStep);
        let solver_value: f64 = mdp.p0.iter().zip(&sol.values[0]).map(|(p, v)| p * v).sum();
        let achieved = common::policy_return(&mdp, &spec, &sol.policy);
        let delta = (solver_value - brute.best).abs().max((achieved - brute.best).abs());
        worst = worst.max(delta);
        if delta > PROB_TOL {
            failures.push(format!(
                "domain {}: solver {solver_value}, achieved {achieved}, brute force {}",
                solved.len(),
                brute.best
            ));
        }
        let mut policies = vec![sol.policy];
        let discounted = RewardSpec { discount: 0.9, ..spec };
        let st = solve_stationary(&mdp, &build_reward(&mdp, &discounted).unwrap(), &StationaryOptions::default()).unwrap();
        policies.push(st.policy);
        solved.push(Solved {
            domain: d,
            mdp,
            policies,
        });
    }
    let elapsed = start.elapsed();
    let o = outcome(
        "planning optimality",
        failures.is_empty() && solved.len() >= PLANNING_DOMAINS && elapsed <= PLANNING_TIME_LIMIT,
        format!(
            "{} domains (<= {PLANNING_MAX_STATES} states, <= {PLANNING_MAX_EPOCHS} decision epochs), {enumerated} policies enumerated, max |delta| {worst:.2e} (tol {PROB_TOL:.0e}), {:.1} s (limit {} s){}",
            solved.len(),
            elapsed.as_secs_f64(),
            PLANNING_TIME_LIMIT.as_secs(),
            first(&failures)
        ),
    );
    (o, solved)
}

/// Random deterministic policies over every situation of each domain, to
/// exercise the decompiler beyond what optimal policies happen to pick.
fn random_policy_cases(domains: &[Domain]) -> Vec<Solved> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + 3);
    domains
        .iter()
        .filter(|d| d.state_count() <= 256)
        .map(|d| {
            let mdp: PecMdp<f64> = compile(d).unwrap();
            let (n, n_u, h) = (mdp.n_states(), mdp.n_situations(), mdp.horizon());
            let mut draw = |rows: usize| -> Vec<Vec<usize>> {
                (0..rows).map(|_| (0..n).map(|_| rng.gen_range(0..n_u)).collect()).collect()
            };
            let stationary = PolicyTable::stationary(draw(1).remove(0));
            let nonstationary = PolicyTable::nonstationary(draw(h));
            Solved {
                domain: d.clone(),
                mdp,
                policies: vec![stationary, nonstationary],
            }
        })
        .collect()
}

struct Decompiled<'a> {
    solved: &'a Solved,
    policy: &'a PolicyTable,
    set: PPropSet,
}

fn decompiler_round_trip<'a>(solved: &[&'a Solved], n_planned: usize) -> (Outcome, Vec<Decompiled<'a>>) {
    let mut failures = Vec::new();
    let mut out = Vec::new();
    let mut checked_pairs = 0usize;
    let mut worst = 0.0f64;
    let options = DecompileOptions {
        prune: Some(0.0),
        minimize: true,
    };
    for (i, &sv) in solved.iter().enumerate() {
        for policy in &sv.policies {
            let set = decompile(&sv.mdp, policy, options).unwrap();
            let text = render_domain(&sv.domain.with_pprops(set.props()));
            let reparsed = match parse_domain(&text) {
                Ok(d) => d,
                Err(e) => {
                    failures.push(format!("domain {i}: decompiled text does not parse: {e}"));
                    continue;
                }
            };
            let remdp: PecMdp<f64> = match compile(&reparsed) {
                Ok(m) => m,
                Err(e) => {
                    failures.push(format!("domain {i}: decompiled domain does not compile: {e}"));
                    continue;
                }
            };
            let chain = common::induced_chain(&sv.mdp, policy);
            for (t, p) in chain.iter().enumerate() {
                for s in (0..p.len()).filter(|&s| p[s] > 0.0) {
                    checked_pairs += 1;
                    let want = sv.mdp.situation_actions(policy.action(s, t));
                    let row = remdp.mu_row(t, s);
                    let ok = row.len() == 1 && row[0].1 == 1.0 && remdp.situation_actions(row[0].0) == want;
                    if !ok {
                        failures.push(format!("domain {i}: step {t} state {s} wants {want:?}, recompiled mu {row:?}"));
                    }
                }
            }
            let p0 = StateDistribution::initial(&remdp);
            for (t, label) in reparsed.instants.iter().enumerate() {
                let pt = propagate(&remdp, &p0, t).unwrap();
                for q in common::single_fluent_queries(&reparsed) {
                    let projected = pt.mass_on(&filter_vector(&remdp.codec, &q).unwrap());
                    let induced: f64 = (0..chain[t].len())
                        .filter(|&s| common::holds(&sv.mdp, s, &q))
                        .map(|s| chain[t][s])
                        .sum();
                    let delta = (projected - induced).abs();
                    worst = worst.max(delta);
                    if delta > PROB_TOL {
                        failures.push(format!("domain {i}: {q}@{label}: recompiled {projected} vs chain {induced}"));
                    }
                }
            }
            out.push(Decompiled { solved: sv, policy, set });
        }
    }
    let o = outcome(
        "decompiler round trip",
        failures.is_empty() && !out.is_empty(),
        format!(
            "{} policies ({} from the planners, the rest random) over {} domains, {checked_pairs} reachable (state, step) pairs, max projection |delta| {worst:.2e} (tol {PROB_TOL:.0e}){}",
            out.len(),
            2 * n_planned,
            solved.len(),
            first(&failures)
        ),
    );
    (o, out)
}

fn minimality(decompiled: &[Decompiled<'_>]) -> Outcome {
    let mut conditions = 0usize;
    let mut failures = Vec::new();
    for (i, dc) in decompiled.iter().enumerate() {
        let mdp = &dc.solved.mdp;
        let chain = common::induced_chain(mdp, dc.policy);
        for e in &dc.set.entries {
            conditions += 1;
            let competitors: Vec<PartialFluentState> = (0..mdp.n_states())
                .filter(|&s| s != e.state)
                .filter(|&s| chain[e.step][s] > 0.0 || dc.set.entries.iter().any(|o| o.step == e.step && o.state == s))
                .map(|s| mdp.codec.decode(s).into_partial())
                .collect();
            let matches = |cond: &PartialFluentState, x: &PartialFluentState| cond.iter().all(|(f, v)| x.get(f) == Some(v));
            let own = mdp.codec.decode(e.state).into_partial();
            if !matches(&e.prop.condition, &own) {
                failures.push(format!("policy {i}: condition {} does not hold in its own state", e.prop.condition));
            }
            if let Some(c) = competitors.iter().find(|c| matches(&e.prop.condition, c)) {
                failures.push(format!("policy {i}: condition {} also matches {c}", e.prop.condition));
            }
            for (f, _) in e.prop.condition.iter() {
                let weaker: PartialFluentState = e
                    .prop
                    .condition
                    .iter()
                    .filter(|(g, _)| *g != f)
                    .map(|(g, v)| (g.to_string(), v.to_string()))
                    .collect();
                if !competitors.iter().any(|c| matches(&weaker, c)) {
                    failures.push(format!("policy {i}: {} stays distinguishing without {f}", e.prop.condition));
                }
            }
        }
    }
    outcome(
        "minimality",
        failures.is_empty() && conditions > 0,
        format!("{conditions} minimized conditions checked by removing each assignment{}", first(&failures)),
    )
}

fn fuzz_input(rng: &mut ChaCha8Rng, seeds: &[String]) -> Vec<u8> {
    const FRAGMENTS: &[&str] = &[
        "fluent ", "action ", "instants ", "initially-one-of ", "causes-one-of ", "performed-at ", "with-prob ",
        "if-holds ", "takes-values ", "{", "}", "(", ")", ",", "=", "&", "/", "..", "\n", "0.5", "1", "F", "a",
        "Lamp", "on", "#", " ",
    ];
    match rng.gen_range(0..3) {
        0 => {
            let len = rng.gen_range(0..160);
            (0..len).map(|_| rng.gen()).collect()
        }
        1 => {
            let mut s = Vec::new();
            for _ in 0..rng.gen_range(0..40) {
                s.extend_from_slice(FRAGMENTS[rng.gen_range(0..FRAGMENTS.len())].as_bytes());
            }
            s
        }
        _ => {
            // A valid domain with a few random byte edits.
            let mut s = seeds[rng.gen_range(0..seeds.len())].clone().into_bytes();
            for _ in 0..rng.gen_range(0..4) {
                if s.is_empty() {
                    break;
                }
                let at = rng.gen_range(0..s.len());
                match rng.gen_range(0..3) {
                    0 => s[at] = rng.gen(),
                    1 => {
                        s.remove(at);
                    }
                    _ => s.insert(at, rng.gen()),
                }
            }
            s
        }
    }
}

fn parser(domains: &[Domain]) -> Outcome {
    let mut failures = Vec::new();
    for (i, d) in domains.iter().enumerate() {
        match parse_domain(&render_domain(d)) {
            Ok(back) if back == *d => {}
            Ok(_) => failures.push(format!("domain {i}: re-parsed domain differs")),
            Err(e) => failures.push(format!("domain {i}: rendered text fails to parse: {e}")),
        }
    }
    let seeds: Vec<String> = domains.iter().map(render_domain).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + 2);
    let mut parsed = 0usize;
    let mut rejected = 0usize;
    let mut crashes = 0usize;
    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    for _ in 0..FUZZ_CASES {
        let bytes = fuzz_input(&mut rng, &seeds);
        match panic::catch_unwind(|| parse_domain_bytes(&bytes)) {
            Ok(Ok(_)) => parsed += 1,
            Ok(Err(_)) => rejected += 1,
            Err(_) => crashes += 1,
        }
    }
    panic::set_hook(hook);
    outcome(
        "parser round trip and fuzzing",
        failures.is_empty() && crashes == 0,
        format!(
            "{} domains round-tripped, {FUZZ_CASES} fuzz inputs: {parsed} parsed, {rejected} rejected, {crashes} crashes{}",
            domains.len(),
            first(&failures)
        ),
    )
}

fn simulation() -> Outcome {
    let domain = parse_domain(COIN_LAMP).unwrap();
    let target = PartialFluentState::from_pairs([("Lamp", "on")]).unwrap();
    let exact = enumerate_worlds::<Exact>(&domain).unwrap().weight_where(&target, 2).as_f64();
    let mdp: PecMdp<f64> = compile(&domain).unwrap();
    let report = simulate(
        &mdp,
        EpisodePolicy::Domain,
        None,
        SimulationOptions {
            episodes: SIM_EPISODES,
            seed: SIM_SEED,
            keep_trajectories: false,
        },
    );
    let empirical = report.frequency(&filter_vector(&mdp.codec, &target).unwrap(), 2);
    let sigma = (exact * (1.0 - exact) / SIM_EPISODES as f64).sqrt();
    let z = (empirical - exact) / sigma;
    outcome(
        "simulation consistency",
        z.abs() <= 3.0,
        format!(
            "coin-lamp, seed {SIM_SEED}, {SIM_EPISODES} episodes: empirical P(Lamp=on @ 2) = {empirical:.5}, exact {exact}, {z:+.2} sigma (limit 3)"
        ),
    )
}

fn first(failures: &[String]) -> String {
    match failures.first() {
        None => String::new(),
        Some(f) => format!("; {} failures, first: {f}", failures.len()),
    }
}

fn main() -> ExitCode {
    let domains = corpus(CORPUS_SEED, CORPUS_SIZE, &CorpusLimits::default());
    let mut results = vec![
        oracle_equivalence(&domains),
        conditional_equivalence(&domains),
        stochasticity(&domains),
        codec_laws(&domains),
    ];
    let (planning, solved) = planning_optimality();
    results.push(planning);
    let random = random_policy_cases(&domains);
    let mut cases: Vec<&Solved> = solved.iter().collect();
    cases.extend(&random);
    let (round_trip, decompiled) = decompiler_round_trip(&cases, solved.len());
    results.push(round_trip);
    results.push(minimality(&decompiled));
    results.push(parser(&domains));
    results.push(simulation());

    for r in &results {
        println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    if results.iter().all(|r| r.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
