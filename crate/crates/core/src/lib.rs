//! Two-stage diffusion model of pre-training and fine-tuning.
//!
//! SGD near a minimum of a quadratic loss is an Ornstein–Uhlenbeck chain
//! whose stationary law is Gaussian with a covariance fixed by a continuous
//! Lyapunov equation. This crate provides:
//!
//! * [`linalg`]: SPD matrices, Cholesky log-determinants, Lyapunov and Stein
//!   solvers, seeded random SPD generation and the matrix text format.
//! * [`gaussian`]: Gaussian measures, stationary laws built from dynamics,
//!   closed-form and Monte-Carlo KL divergence, sampling and moments.
//! * [`sgd`]: the discrete SGD chain, stability checks, stationarity
//!   estimation and the pre-train → fine-tune pipeline.
//! * [`bounds`]: McAllester-style PAC-Bayes bounds for both stages, the two
//!   domain discrepancies and the reports built on them.
//! * [`risk`]: a linear-regression testbed with exactly quadratic risks used
//!   to measure generalization gaps against the bounds.

pub mod bounds;
pub mod error;
pub mod format;
pub mod gaussian;
pub mod linalg;
pub mod risk;
pub mod seed;
pub mod sgd;

pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};
