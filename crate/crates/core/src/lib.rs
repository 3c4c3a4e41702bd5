//! Probabilistic Event Calculus domains as Markov decision processes.
//!
//! A `.pec` domain is parsed ([`parser`]), checked ([`validate`]), and
//! compiled ([`compiler`]) into a numerically encoded MDP. Temporal
//! projection queries are answered by propagating state distributions
//! ([`projection`]); reward-driven policies are computed by exact dynamic
//! programming ([`planning`]) and translated back into p-propositions
//! ([`decompiler`]). [`oracle`] enumerates possible worlds directly and
//! serves as an independent reference on small domains.
//!
//! All numeric code is generic over [`Scalar`]; the aliases below fix the
//! common choices.

pub mod compiler;
pub mod corpus;
pub mod decompiler;
pub mod domain;
pub mod oracle;
pub mod parser;
pub mod planning;
pub mod projection;
pub mod scalar;
pub mod validate;

pub use compiler::{compile, compile_with, CompileError, CompileOptions, PecMdp};
pub use decompiler::{decompile, DecompileOptions, PPropSet};
pub use domain::{
    entails, CProposition, Domain, FluentDecl, FluentState, IProposition, Outcome, PProposition,
    PartialFluentState,
};
pub use oracle::{enumerate_worlds, oracle_project};
pub use parser::{parse_domain, render_domain, ParseError, SourceSpan};
pub use planning::{build_reward, solve_finite_horizon, solve_stationary, PolicyTable, RewardSpec};
pub use projection::{project, propagate, Query, StateDistribution};
pub use scalar::Scalar;
pub use validate::{validate, ValidationReport, Violation};

/// Arbitrary-precision rational used by the exact engine.
pub type Exact = num_rational::BigRational;

/// Compiled MDP over binary floating point.
pub type Mdp = PecMdp<f64>;
/// Compiled MDP over exact rationals.
pub type ExactMdp = PecMdp<Exact>;
