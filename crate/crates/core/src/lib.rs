//! memlang: a small probabilistic language with Bernoulli choice, fresh name
//! generation and stochastic memoization of atom-indexed boolean functions.
//!
//! The crate provides three semantics for the same programs:
//!
//! * a small-step machine over configurations (environment, extended term,
//!   partial memo-table bigraph, closures) with a seeded sampler and an
//!   exhaustive exact enumerator ([`opsem`]);
//! * a denotational evaluator for the probabilistic local state monad on
//!   total bigraphs, with canonical garbage-collected classes ([`denot`]);
//! * law checkers comparing them exactly ([`laws`]).
//!
//! Probabilities are exact rationals ([`Prob`]). The distribution layer is
//! generic over the weight scalar so the same code also backs floating
//! point summaries of sampled runs.

pub mod bigraph;
pub mod cli;
pub mod denot;
pub mod dist;
pub mod gen;
pub mod laws;
pub mod opsem;
pub mod scalar;
pub mod syntax;
pub mod typecheck;

use num_bigint::BigInt;
use num_rational::BigRational;

/// Exact probability / rational literal.
pub type Prob = BigRational;

/// Distribution with exact rational weights; every semantic value uses this.
pub type ExactDist<T> = dist::FinDist<T, Prob>;

/// Distribution with `f64` weights, used for empirical summaries of samples.
pub type FloatDist<T> = dist::FinDist<T, f64>;

/// Builds `num/den` as an exact rational. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Prob {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub use bigraph::{AtomLabel, Edge, FunLabel, PartialBigraph, TotalBigraph};
pub use dist::FinDist;
pub use scalar::Weight;
pub use syntax::{Comp, Ident, Ty, Val};
