//! Seeded Monte-Carlo rollouts.
//!
//! Episodes are split into fixed-size shards. Shard `i` draws from its own
//! ChaCha stream `i` under the user seed, so results do not depend on the
//! number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::compiler::PecMdp;
use crate::scalar::Scalar;

use super::{decision_epochs, PolicyTable, RewardModel};

const SHARD_EPISODES: usize = 4096;

/// Where situations come from during a rollout.
#[derive(Debug, Clone, Copy)]
pub enum EpisodePolicy<'a> {
    /// Sample from the domain's occurrence distribution `mu`.
    Domain,
    Table(&'a PolicyTable),
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationOptions {
    pub episodes: usize,
    pub seed: u64,
    pub keep_trajectories: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnStats {
    pub mean: f64,
    /// Unbiased sample variance; zero for fewer than two episodes.
    pub variance: f64,
    pub min: f64,
    pub max: f64,
}

impl ReturnStats {
    pub fn standard_error(&self, episodes: usize) -> f64 {
        if episodes == 0 {
            0.0
        } else {
            (self.variance / episodes as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub episodes: usize,
    /// `state_counts[t][s]`: episodes in state `s` at step `t`.
    pub state_counts: Vec<Vec<u64>>,
    pub returns: Option<ReturnStats>,
    /// `(state, situation)` per step, when requested.
    pub trajectories: Vec<Vec<(usize, usize)>>,
}

impl SimulationReport {
    /// Fraction of episodes whose state at step `t` passes `filter`.
    pub fn frequency(&self, filter: &[bool], t: usize) -> f64 {
        if self.episodes == 0 {
            return 0.0;
        }
        let hits: u64 = self.state_counts[t]
            .iter()
            .zip(filter)
            .filter(|(_, keep)| **keep)
            .map(|(c, _)| c)
            .sum();
        hits as f64 / self.episodes as f64
    }
}

struct Shard {
    counts: Vec<Vec<u64>>,
    returns: Vec<f64>,
    trajectories: Vec<Vec<(usize, usize)>>,
}

fn sample(rng: &mut ChaCha8Rng, row: &[(usize, f64)]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(i, p) in row {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.last().expect("stochastic rows are never empty").0
}

fn as_f64_row<S: Scalar>(row: Vec<(usize, S)>) -> Vec<(usize, f64)> {
    row.into_iter().map(|(i, p)| (i, p.as_f64())).collect()
}

/// Roll out `options.episodes` episodes over every instant of the domain.
/// Returns are tracked when a reward model is supplied.
pub fn simulate<S: Scalar>(
    mdp: &PecMdp<S>,
    policy: EpisodePolicy<'_>,
    reward: Option<&RewardModel<S>>,
    options: SimulationOptions,
) -> SimulationReport {
    let n = mdp.n_states();
    let horizon = mdp.horizon();
    let epochs = decision_epochs(mdp);
    let p0: Vec<(usize, f64)> = mdp
        .p0
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_zero())
        .map(|(s, p)| (s, p.as_f64()))
        .collect();
    let rewards = reward.map(|r| {
        (
            (0..mdp.n_situations())
                .map(|a| (0..n).map(|s2| r.get(a, s2).as_f64()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            r.discount.as_f64(),
        )
    });

    let n_shards = options.episodes.div_ceil(SHARD_EPISODES);
    let shards: Vec<Shard> = (0..n_shards)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(i as u64);
            let size = SHARD_EPISODES.min(options.episodes - i * SHARD_EPISODES);
            let mut shard = Shard {
                counts: vec![vec![0; n]; horizon],
                returns: Vec::with_capacity(if rewards.is_some() { size } else { 0 }),
                trajectories: Vec::new(),
            };
            for _ in 0..size {
                let mut s = sample(&mut rng, &p0);
                let mut ret = 0.0;
                let mut discount = 1.0;
                let mut trace = Vec::new();
                for t in 0..horizon {
                    shard.counts[t][s] += 1;
                    let a = match policy {
                        EpisodePolicy::Domain => sample(&mut rng, &as_f64_row(mdp.mu_row(t, s))),
                        EpisodePolicy::Table(table) => table.action(s, t),
                    };
                    if options.keep_trajectories {
                        trace.push((s, a));
                    }
                    if t >= epochs {
                        break;
                    }
                    let next = sample(&mut rng, &as_f64_row(mdp.transition_row(s, a)));
                    if let Some((r, gamma)) = &rewards {
                        ret += discount * r[a][next];
                        discount *= gamma;
                    }
                    s = next;
                }
                if rewards.is_some() {
                    shard.returns.push(ret);
                }
                if options.keep_trajectories {
                    shard.trajectories.push(trace);
                }
            }
            shard
        })
        .collect();

    let mut state_counts = vec![vec![0u64; n]; horizon];
    let mut returns = Vec::new();
    let mut trajectories = Vec::new();
    for shard in shards {
        for (acc, row) in state_counts.iter_mut().zip(shard.counts) {
            for (a, c) in acc.iter_mut().zip(row) {
                *a += c;
            }
        }
        returns.extend(shard.returns);
        trajectories.extend(shard.trajectories);
    }
    SimulationReport {
        episodes: options.episodes,
        state_counts,
        returns: (rewards.is_some() && !returns.is_empty()).then(|| return_stats(&returns)),
        trajectories,
    }
}

fn return_stats(values: &[f64]) -> ReturnStats {
    let n = values.len() as f64;
    let mean = f64::sum_all(values.iter().copied()) / n;
    let variance = if values.len() > 1 {
        f64::sum_all(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0)
    } else {
        0.0
    };
    ReturnStats {
        mean,
        variance,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}
