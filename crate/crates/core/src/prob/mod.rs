//! Exact finite probability distributions over named coordinates.
//!
//! A [`Schema`] is an ordered list of named coordinates, each with a finite
//! [`Alphabet`] of symbols. A [`Distribution`] stores a sparse map from
//! outcomes (one symbol index per coordinate) to positive rational masses
//! summing to exactly one. [`ConditionalDistribution`] keeps one row per
//! outcome of a given-schema, including rows of conditioning probability
//! zero, which are filled with the uniform distribution unless a caller
//! supplies a different fill.
//!
//! Everything in this module is exact; the only floating-point results are
//! entropies and the entropy-style report bounds, which are transcendental.

mod dist;
mod reports;
mod schema;

pub use dist::{ConditionalDistribution, Distribution};
pub use reports::{
    block_independence_report, conditioning_report, markov_deficiency, BlockIndependenceReport,
    ConditioningReport,
};
pub use schema::{mixed_radix_index, mixed_radix_split, Alphabet, Outcome, Schema};
