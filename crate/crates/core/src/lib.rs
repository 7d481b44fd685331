//! Multitype branching random walks in a static random environment on a
//! finite state space.
//!
//! Particles carry a type from a finite directed type graph and a position
//! on a finite site set. Each generation every particle spawns offspring
//! along the outgoing type edges (site-dependent random mean counts, fixed
//! for all time) and each newborn makes one step of a Markov chain on the
//! sites. The crate computes
//!
//! * exact expected population sizes for a fixed environment, both as
//!   powers of the mean matrix on types × sites and as path sums
//!   ([`expectation`]),
//! * environment statistics for Weibull-tailed offspring means, with the
//!   exact log-moment generating function `log Γ(ρt + 1)`
//!   ([`environment`]),
//! * environment-averaged moments by an exact occupation-count dynamic
//!   program or by Monte Carlo ([`annealed`]),
//! * the two coupled variational constants governing the `(n!)^λ e^{-nχ}`
//!   moment growth: the maximum cycle mean `λ(ρ)` and the entropy-energy
//!   constant `χ(ρ)` ([`variational`]),
//! * the simple-cycle machinery behind them ([`typegraph`]) and empirical
//!   pair measures of the product chain ([`chain`]).
//!
//! All randomness flows through the explicit-seed [`rng::SplitMix64`]
//! generator; every stochastic entry point takes a seed and is
//! reproducible bit for bit.

pub mod annealed;
pub mod chain;
pub mod config;
pub mod environment;
pub mod error;
pub mod expectation;
pub mod numeric;
pub mod rng;
pub mod typegraph;
pub mod variational;

pub use chain::{PairMeasure, ProductPath, SpatialChain};
pub use environment::{Environment, OffspringLaw};
pub use error::{Error, Result};
pub use expectation::{MeanMatrix, PopulationState};
pub use typegraph::{SimpleCycle, TypeGraph, TypePairMeasure};
