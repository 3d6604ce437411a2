//! Exact and simulated winning-probability surfaces for the unconstrained
//! prisoners search game.
//!
//! `n` prisoners look for their own key among `N >= n` boxes, each opening at
//! most `a` boxes. A strategy's *P-function* is the table `P(a, w)` of
//! probabilities that exactly `w` prisoners succeed with budget `a`. This
//! crate computes P-functions three ways:
//!
//! * [`exact`]: closed-form combinatorics in unbounded-precision rationals,
//! * [`oracle`]: exhaustive enumeration of key placements for small `N`,
//! * [`mc`]: seeded, reproducible Monte Carlo estimation,
//!
//! and compares strategies with the quantifiers in [`metrics`].

pub mod boundedness;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod game;
pub mod io;
pub mod mc;
pub mod metrics;
pub mod oracle;
pub mod pfunction;
pub mod strategy;

pub use boundedness::{classify_boundedness, BoundednessClass, Classification, Evidence};
pub use error::{Error, Result};
pub use game::{
    enumerate_placements, play, play_traced, sample_placement, GameConfig, KeyPlacement, PlayOutcome, Slot,
};
pub use mc::{estimate_pfunction, margin_of_error, EstimatedPFunction, SamplingPlan};
pub use pfunction::{min_from_exact, PFunction, Probability, Provenance, WinnerKind};
pub use strategy::{Escape, MainRule, Offset, StrategySpec};

/// Exact rational probability.
pub type Rational = num_rational::BigRational;
