//! Robust adaptive estimation of bandlimited graph signals.
//!
//! The crate centres on the half-quadratic-criterion (HQC) estimator: an
//! online update of a graph-signal estimate that weights each sampled node's
//! error by `1/sqrt(1 + tau * e^2)`. Large residuals (impulses, heavy-tailed
//! noise) are attenuated while small residuals behave like least squares.
//!
//! Layout:
//!
//! * [`graph`] builds geographic k-NN graphs, the adjacency eigenbasis, the
//!   graph Fourier transform and recoverable sampling sets.
//! * [`noise`] draws Bernoulli-Gaussian, alpha-stable, Laplace and Gaussian
//!   noise from seeded streams and evaluates absolute moments.
//! * [`algorithms`] holds error-weighting kernels and the update rule for
//!   HQC and the LMS, NLMS, MCC, GMCC and LOG baselines.
//! * [`analysis`] computes step-size bounds, per-mode contraction factors and
//!   the closed-form steady-state MSD.
//! * [`experiments`] runs seeded multi-trial learning curves, sweeps,
//!   step-size switching and threshold-crossing counts.
//! * [`io`] covers station CSV ingestion, JSON configuration, result files
//!   and the operation-count report; [`cli`] wires them into a command line.

pub mod algorithms;
pub mod analysis;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod noise;

pub use error::{Error, Result};
