use crate::domain::{Domain, EntailmentError, PartialFluentState};
use crate::scalar::Scalar;

use super::codec::{ActionSituationCodec, IndexedCondition, InstantMap, StateCodec};
use super::table::StochasticTable;
use super::CompileError;

/// `p0[index(S_i)] = P_i` for every initial outcome, zero elsewhere.
pub fn build_initial_distribution<S: Scalar>(domain: &Domain, codec: &StateCodec) -> Result<Vec<S>, CompileError> {
    let mut p0 = vec![S::zero(); codec.n_states()];
    for o in &domain.iprop.outcomes {
        let total = crate::domain::FluentState::total(domain, o.state.clone())?;
        let s = codec.encode(&total)?;
        p0[s] = p0[s].clone() + S::from_real(o.probability);
    }
    Ok(p0)
}

/// Overwrite the positions of `x` named by `outcome`; keep the rest.
pub fn apply_outcome(codec: &StateCodec, outcome: &PartialFluentState, x: &[usize]) -> Result<Vec<usize>, EntailmentError> {
    Ok(apply_indexed(&codec.index_condition(outcome)?, x))
}

pub(crate) fn apply_indexed(outcome: &[(usize, usize)], x: &[usize]) -> Vec<usize> {
    let mut y = x.to_vec();
    for &(f, v) in outcome {
        y[f] = v;
    }
    y
}

struct CompiledEffect<S> {
    conditions: IndexedCondition,
    outcomes: Vec<(IndexedCondition, S)>,
}

/// Sum probabilities that land on the same column.
fn merge_row<S: Scalar>(mut pairs: Vec<(usize, S)>) -> Vec<(usize, S)> {
    pairs.sort_by_key(|(c, _)| *c);
    let mut row: Vec<(usize, S)> = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let col = pairs[i].0;
        let mut j = i;
        while j < pairs.len() && pairs[j].0 == col {
            j += 1;
        }
        let p = S::sum_all(pairs[i..j].iter().map(|(_, p)| p.clone()));
        if !p.is_zero() {
            row.push((col, p));
        }
        i = j;
    }
    row
}

/// `T[s][a][s']`, stored with row index `s * n_U + a`.
///
/// A c-proposition applies to `(s, a)` only when its action component is
/// exactly situation `a` and `s` entails its fluent preconditions; all
/// other pairs, including the null situation, self-loop.
pub fn build_transition_tensor<S: Scalar>(
    domain: &Domain,
    codec: &StateCodec,
    acodec: &ActionSituationCodec,
    dense: bool,
) -> Result<StochasticTable<S>, CompileError> {
    let n_u = acodec.len();
    let mut by_situation: Vec<Vec<CompiledEffect<S>>> = (0..n_u).map(|_| Vec::new()).collect();
    for c in &domain.cprops {
        let a = acodec
            .index_of(&c.body_actions)
            .expect("every c-proposition action set has a situation index");
        let outcomes = c
            .outcomes
            .iter()
            .map(|o| Ok((codec.index_condition(&o.state)?, S::from_real(o.probability))))
            .collect::<Result<Vec<_>, EntailmentError>>()?;
        by_situation[a].push(CompiledEffect {
            conditions: codec.index_condition(&c.body_conditions)?,
            outcomes,
        });
    }

    let n = codec.n_states();
    let mut rows = Vec::with_capacity(n * n_u);
    for s in 0..n {
        let x = codec.decode_vector(s);
        for effects in &by_situation {
            let effect = effects.iter().find(|e| codec.satisfies(s, &e.conditions));
            let row = match effect {
                None => vec![(s, S::one())],
                Some(e) => merge_row(
                    e.outcomes
                        .iter()
                        .map(|(out, p)| (codec.encode_vector(&apply_indexed(out, &x)), p.clone()))
                        .collect(),
                ),
            };
            rows.push(row);
        }
    }
    Ok(StochasticTable::from_rows(rows, n, dense))
}

/// Per-step occurrence probabilities `p[t][s][k]` and the situation
/// distribution `mu[t][s][a]` (row index `t * n_states + s`).
pub struct PolicyTensors<S> {
    pub occurrence: Vec<S>,
    pub policy: StochasticTable<S>,
}

pub fn build_policy_tensor<S: Scalar>(
    domain: &Domain,
    codec: &StateCodec,
    acodec: &ActionSituationCodec,
    instants: &InstantMap,
    dense: bool,
) -> Result<PolicyTensors<S>, CompileError> {
    let n = codec.n_states();
    let n_t = instants.len();
    let n_a = domain.actions.len();

    // (condition, probability) per (step, action), in source order.
    let mut props: Vec<Vec<Vec<(IndexedCondition, S)>>> = vec![(0..n_a).map(|_| Vec::new()).collect(); n_t];
    for p in &domain.pprops {
        let (Some(t), Some(k)) = (instants.step_of(&p.instant), domain.action_index(&p.action)) else {
            continue;
        };
        props[t][k].push((codec.index_condition(&p.condition)?, S::from_real(p.probability)));
    }

    let members: Vec<Vec<bool>> = acodec
        .situations()
        .iter()
        .map(|sit| domain.actions.iter().map(|a| sit.contains(a)).collect())
        .collect();

    let mut occurrence = vec![S::zero(); n_t * n * n_a];
    let mut rows = Vec::with_capacity(n_t * n);
    for (t, step_props) in props.iter().enumerate() {
        for s in 0..n {
            let base = (t * n + s) * n_a;
            for (k, list) in step_props.iter().enumerate() {
                if let Some((_, p)) = list.iter().find(|(cond, _)| codec.satisfies(s, cond)) {
                    occurrence[base + k] = p.clone();
                }
            }
            let probs = &occurrence[base..base + n_a];
            let mut row = Vec::new();
            for (a, member) in members.iter().enumerate() {
                let mut prob = S::one();
                for (k, p) in probs.iter().enumerate() {
                    let factor = if member[k] { p.clone() } else { S::one() - p.clone() };
                    prob = prob * factor;
                    if prob.is_zero() {
                        break;
                    }
                }
                if !prob.is_zero() {
                    row.push((a, prob));
                }
            }
            rows.push(row);
        }
    }
    Ok(PolicyTensors {
        occurrence,
        policy: StochasticTable::from_rows(rows, acodec.len(), dense),
    })
}
