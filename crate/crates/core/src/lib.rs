//! Numerics for the block-counting process of Beta(a,b)-coalescents.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: log-Gamma, Digamma, Trigamma and signed Gamma values.
//! * [`rates`]: merger rates, total rates and jump laws of the block-counting chain.
//! * [`ratefn`]: the large-deviation rate function and its Legendre dual (a > 1).
//! * [`laplace`]: exact Laplace transforms of integral functionals by first-jump
//!   recursion, the closed-form test sequences, record probabilities and
//!   Kolmogorov-distance bounds.
//! * [`simulator`]: Monte Carlo simulation of the chain, used as an independent
//!   cross-check of the exact engine.
//! * [`verify`]: the acceptance checks, shared by the test suite and the CLI.

pub mod export;
pub mod laplace;
pub mod parallel;
pub mod quad;
pub mod ratefn;
pub mod rates;
pub mod root;
pub mod simulator;
pub mod specfun;
pub mod verify;

pub use laplace::{Functional, LaplaceSeries};
pub use parallel::ExecPolicy;
pub use ratefn::RateFunctionContext;
pub use rates::{BetaParams, RateContext, Regime};

/// Errors reported by the numerics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{op}: argument {value} outside the domain ({reason})")]
    Domain { op: &'static str, value: f64, reason: &'static str },
    #[error("{op}: parameters {params} not supported ({condition})")]
    Regime { op: &'static str, params: String, condition: &'static str },
    #[error("admissibility violated at state {state}: theta*psi = {value} >= lambda = {rate}; the transform is infinite for n >= {state}")]
    Admissibility { state: usize, value: f64, rate: f64 },
    #[error("index out of range: {0}")]
    Index(String),
    #[error("root finder failed: {0}")]
    Root(String),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
