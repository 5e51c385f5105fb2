//! Numerical toolkit for Hausdorff-dimension upper bounds of ergodic invariant
//! measures of iterated function systems with place-dependent probabilities.
//!
//! The bound is `dim_H(μ) ≤ -h(μ)/λ(μ)`, where `h` is an entropy-like rate
//! built from infima of word probabilities over Bowen balls and `λ` a
//! Lyapunov-like rate built from suprema of contraction ratios. The crate
//! simulates the Markov chain and skew product of a system, builds empirical
//! invariant measures, evaluates both rates, and checks the bound against an
//! independent local-dimension estimate.

pub mod battery;
pub mod chain;
pub mod config;
pub mod dimension;
pub mod error;
pub mod estimators;
pub mod interval;
pub mod measure;
pub mod skew;
pub mod system;

pub use error::{Error, Result};
pub use interval::{IntervalSet, Span};
pub use measure::EmpiricalMeasure;
pub use system::{compose_map, word_probability, Domain, IfsMap, IfsSystem, ProbabilityFn, Symbol, Word};
