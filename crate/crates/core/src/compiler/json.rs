use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::{PecMdp, StochasticTable};

pub const MDP_FORMAT: &str = "pec-mdp/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluentArtifact {
    pub name: String,
    pub values: Vec<String>,
}

/// Three-index tensor: `data[i][j][k]`, or nonzero `[i, j, k, p]` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "snake_case")]
pub enum TableArtifact {
    Dense { data: Vec<Vec<Vec<f64>>> },
    Sparse { entries: Vec<(usize, usize, usize, f64)> },
}

/// On-disk form of a compiled MDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpArtifact {
    pub format: String,
    pub fluents: Vec<FluentArtifact>,
    pub actions: Vec<String>,
    /// Instant labels; position is the time step.
    pub instants: Vec<String>,
    pub n_states: usize,
    /// Action-taking situations; position is the situation index.
    pub situations: Vec<Vec<String>>,
    pub p0: Vec<f64>,
    /// `T[s][a][s']`.
    pub transitions: TableArtifact,
    /// `mu[t][s][a]`.
    pub policy: TableArtifact,
}

fn table_artifact<S: Scalar>(table: &StochasticTable<S>, outer: usize, inner: usize) -> TableArtifact {
    if table.is_sparse() {
        let mut entries = Vec::new();
        for i in 0..outer {
            for j in 0..inner {
                table.for_each_nonzero(i * inner + j, |k, p| entries.push((i, j, k, p.as_f64())));
            }
        }
        TableArtifact::Sparse { entries }
    } else {
        let data = (0..outer)
            .map(|i| {
                (0..inner)
                    .map(|j| table.dense_row(i * inner + j).iter().map(Scalar::as_f64).collect())
                    .collect()
            })
            .collect();
        TableArtifact::Dense { data }
    }
}

impl<S: Scalar> PecMdp<S> {
    pub fn to_artifact(&self) -> MdpArtifact {
        let codec = &self.codec;
        MdpArtifact {
            format: MDP_FORMAT.to_string(),
            fluents: (0..codec.n_fluents())
                .map(|f| FluentArtifact {
                    name: codec.fluent_names()[f].clone(),
                    values: codec.values_of(f).to_vec(),
                })
                .collect(),
            actions: self.actions.clone(),
            instants: self.instants.labels().to_vec(),
            n_states: self.n_states(),
            situations: (0..self.n_situations()).map(|a| self.situation_actions(a)).collect(),
            p0: self.p0.iter().map(Scalar::as_f64).collect(),
            transitions: table_artifact(self.transitions(), self.n_states(), self.n_situations()),
            policy: table_artifact(self.policy_table(), self.horizon(), self.n_states()),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::compiler::{compile, compile_with, CompileOptions};
    use crate::parser::parse_domain;

    use super::*;

    #[test]
    fn coin_lamp_artifact() {
        let d = parse_domain(include_str!("../../fixtures/coin_lamp.pec")).unwrap();
        let a = compile::<f64>(&d).unwrap().to_artifact();
        let text = serde_json::to_string(&a).unwrap();
        assert!(text.starts_with(r#"{"format":"pec-mdp/1","fluents":[{"name":"Lamp","values":["off","on"]}]"#));
        let back: MdpArtifact = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
        let TableArtifact::Dense { data } = &a.transitions else { panic!() };
        assert_eq!(data[0][1], vec![0.1, 0.9]);
        assert_eq!(a.situations, vec![Vec::<String>::new(), vec!["Flip".to_string()]]);
    }

    #[test]
    fn sparse_artifact_uses_triplets() {
        let d = parse_domain(include_str!("../../fixtures/coin_lamp.pec")).unwrap();
        let opts = CompileOptions {
            dense_entry_limit: 0,
            ..Default::default()
        };
        let a = compile_with::<f64>(&d, &opts).unwrap().to_artifact();
        let TableArtifact::Sparse { entries } = &a.transitions else { panic!() };
        assert!(entries.contains(&(0, 1, 1, 0.9)));
        let text = serde_json::to_string(&a.transitions).unwrap();
        assert!(text.starts_with(r#"{"encoding":"sparse","entries":[[0,0,0,1.0]"#));
    }
}
