//! Seeded generator of small random well-formed domains.

use std::collections::BTreeSet;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{CProposition, Domain, FluentDecl, IProposition, Outcome, PProposition, PartialFluentState};
use crate::validate::validate;

/// The coin-lamp fixture source.
pub const COIN_LAMP: &str = include_str!("../fixtures/coin_lamp.pec");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusLimits {
    pub max_fluents: usize,
    pub max_values: usize,
    pub max_actions: usize,
    pub max_instants: usize,
    pub max_cprops: usize,
    pub max_pprops: usize,
}

impl Default for CorpusLimits {
    fn default() -> Self {
        Self {
            max_fluents: 4,
            max_values: 3,
            max_actions: 3,
            max_instants: 4,
            max_cprops: 3,
            max_pprops: 4,
        }
    }
}

/// Probabilities are drawn as multiples of 1/20 so their decimal forms are
/// short and sums are exact in rational arithmetic.
const GRID: u32 = 20;

fn split_unit(rng: &mut ChaCha8Rng, parts: usize) -> Vec<f64> {
    let mut cuts: Vec<u32> = (1..GRID).choose_multiple(rng, parts - 1);
    cuts.sort_unstable();
    cuts.push(GRID);
    let mut prev = 0;
    cuts.into_iter()
        .map(|c| {
            let p = f64::from(c - prev) / f64::from(GRID);
            prev = c;
            p
        })
        .collect()
}

fn random_partial(rng: &mut ChaCha8Rng, fluents: &[FluentDecl], max_size: usize) -> PartialFluentState {
    let size = rng.gen_range(0..=max_size.min(fluents.len()));
    fluents
        .choose_multiple(rng, size)
        .map(|f| (f.name.clone(), f.values.choose(rng).expect("values").clone()))
        .collect()
}

fn random_total(rng: &mut ChaCha8Rng, fluents: &[FluentDecl]) -> PartialFluentState {
    fluents
        .iter()
        .map(|f| (f.name.clone(), f.values.choose(rng).expect("values").clone()))
        .collect()
}

/// One random domain within `limits`. Rejection sampling guarantees the
/// result validates.
pub fn random_domain(rng: &mut ChaCha8Rng, limits: &CorpusLimits) -> Domain {
    loop {
        let d = draw(rng, limits);
        if validate(&d).is_empty() {
            return d;
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, limits: &CorpusLimits) -> Domain {
    let n_fluents = rng.gen_range(1..=limits.max_fluents);
    let fluents: Vec<FluentDecl> = (0..n_fluents)
        .map(|i| {
            let n_values = rng.gen_range(2..=limits.max_values.max(2));
            FluentDecl::new(format!("F{i}"), (0..n_values).map(|v| format!("v{v}")))
        })
        .collect();
    let n_actions = rng.gen_range(0..=limits.max_actions);
    let actions: Vec<String> = (0..n_actions).map(|i| format!("A{i}")).collect();
    let n_instants = rng.gen_range(1..=limits.max_instants);
    let instants: Vec<String> = if rng.gen_bool(0.2) {
        ["dawn", "noon", "dusk", "night", "late"].iter().take(n_instants).map(|s| s.to_string()).collect()
    } else {
        let offset = if rng.gen_bool(0.2) { rng.gen_range(1..5) } else { 0 };
        (offset..offset + n_instants).map(|i| i.to_string()).collect()
    };

    let mut initial: Vec<PartialFluentState> = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let s = random_total(rng, &fluents);
        if !initial.contains(&s) {
            initial.push(s);
        }
    }
    let iprop = IProposition {
        outcomes: initial
            .iter()
            .cloned()
            .zip(split_unit(rng, initial.len()))
            .map(|(s, p)| Outcome::new(s, p))
            .collect(),
    };

    let mut cprops = Vec::new();
    if !actions.is_empty() {
        for _ in 0..rng.gen_range(0..=limits.max_cprops) {
            let k = rng.gen_range(1..=actions.len().min(2));
            let body_actions: BTreeSet<String> = actions.choose_multiple(rng, k).cloned().collect();
            let n_out = rng.gen_range(1..=3);
            let outcomes = split_unit(rng, n_out)
                .into_iter()
                .map(|p| Outcome::new(random_partial(rng, &fluents, fluents.len()), p))
                .collect();
            cprops.push(CProposition {
                body_actions,
                body_conditions: random_partial(rng, &fluents, 2),
                outcomes,
            });
        }
    }

    let mut pprops = Vec::new();
    if !actions.is_empty() {
        for _ in 0..rng.gen_range(0..=limits.max_pprops) {
            pprops.push(PProposition {
                action: actions.choose(rng).expect("actions").clone(),
                instant: instants.choose(rng).expect("instants").clone(),
                probability: f64::from(rng.gen_range(1..=GRID)) / f64::from(GRID),
                condition: random_partial(rng, &fluents, 2),
            });
        }
    }

    Domain {
        fluents,
        actions,
        instants,
        iprop,
        cprops,
        pprops,
    }
}

/// `count` random domains from `seed`.
pub fn corpus(seed: u64, count: usize, limits: &CorpusLimits) -> Vec<Domain> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_domain(&mut rng, limits)).collect()
}
