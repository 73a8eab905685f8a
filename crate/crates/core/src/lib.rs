//! Logistic birth–death chain: the mean-field reduction of a spatial
//! population model with birth rate `b`, death rate `μ` and pairwise
//! competition `γ/L`.
//!
//! * [`stationary`]: exact stationary law in log space, local CLT and
//!   large-deviation rate.
//! * [`special`]: the confluent hypergeometric corner `F(A, z)` and its
//!   large-`A` regimes.
//! * [`passage`]: mean first-passage and exit times.
//! * [`simulation`], [`lattice`]: exact event-driven simulators.
//! * [`limits`]: fluid limit, Gaussian fluctuations, OU exit rates.
//! * [`oracles`], [`stats`], [`validation`]: reference computations and
//!   the acceptance suite.

// `!(x > 0.0)` is how inputs reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod error;
pub mod lattice;
pub mod limits;
pub mod logspace;
pub mod oracles;
pub mod passage;
pub mod quadrature;
pub mod rng;
pub mod simulation;
pub mod special;
pub mod stationary;
pub mod stats;
pub mod trajectory_io;
pub mod validation;

pub use chain::{ChainParams, RatePair, Variant};
pub use error::{Error, Result};
pub use lattice::{CompetitionPairs, LatticeOptions, LatticeRun, LatticeState};
pub use limits::{FluidState, GaussMoments, OuProcess};
pub use passage::{PassageEstimate, PassageMethod, SymmetricExit};
pub use simulation::{Event, StopReason, StopRule, Trajectory};
pub use special::{HypergeomValue, RegimeKind, RegimeTag};
pub use stationary::StationaryLaw;
