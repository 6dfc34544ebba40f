//! Capacity–distortion toolkit for channels whose state is drawn from an
//! action chosen by the encoder and revealed to the channel encoder strictly
//! causally.
//!
//! The crate is organised around the quantities a user needs in order to
//! compute, audit and exercise a capacity–distortion curve:
//!
//! | Module | What it provides |
//! |--------|------------------|
//! | [`channel`] | channel/MAC specifications, validation, state and output transforms |
//! | [`infotheory`] | policies, induced joint pmfs, (conditional) mutual information, estimators |
//! | [`solver`] | capacity–distortion points and curves in the three operating modes |
//! | [`gaussian`] | closed-form Gaussian curves with additive action-dependent state |
//! | [`oracle`] | brute-force lattice references for tiny alphabets |
//! | [`sim`] | Monte Carlo block-Markov random coding with binning |
//!
//! All discrete information quantities are reported in bits.

pub mod channel;
mod error;
pub mod gaussian;
pub mod infotheory;
pub mod oracle;
pub mod sim;
pub mod simplex;
pub mod solver;

pub use channel::{ChannelSpec, MacSpec, Violation};
pub use error::{Error, Result};
pub use infotheory::{Estimator, JointDistribution, Policy, Var, VarSet};
pub use solver::{Curve, CurvePoint, Mode, SolveOptions};

/// Normalization tolerance for every conditional pmf slice.
pub const PROB_TOL: f64 = 1e-9;

/// Slack applied when checking distortion and information constraints.
pub const CONSTRAINT_SLACK: f64 = 1e-9;
