//! Exact-arithmetic toolkit for finite two-prover games.
//!
//! The crate covers the full pipeline around parallel repetition of such
//! games: exact probability distributions over named finite coordinates
//! ([`prob`]), game values by strategy enumeration ([`games`]), the
//! no-signaling relaxation via an exact rational simplex ([`nosignaling`]),
//! correlated sampling and strategy embeddings ([`sampling`]), fractional
//! covers of the winning predicate ([`covers`]), and the closed-form and
//! recurrence decay bounds for repeated game values ([`bounds`]).
//!
//! All probabilities are exact `BigRational`s; floating point appears only
//! where a quantity is genuinely transcendental (entropies, square-root
//! bounds), always in base-2 logarithms.

pub mod bounds;
pub mod covers;
mod error;
pub mod games;
pub mod json;
pub mod nosignaling;
pub mod prob;
pub mod rational;
pub mod sampling;
pub mod simplex;

pub use error::Error;
pub use rational::Rational;

pub type Result<T> = std::result::Result<T, Error>;
