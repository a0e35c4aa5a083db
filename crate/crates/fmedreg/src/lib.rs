//! Nonparametric multivariate L1-median (spatial median) regression with
//! functional covariates.
//!
//! Given curves `X_i` observed on a common grid and vector responses
//! `Y_i ∈ R^d`, the conditional L1-median at a new curve `x` is estimated by
//! the minimizer of the kernel-weighted objective
//!
//! ```text
//! G(u) = Σ_i w_i(x) ‖Y_i − u‖,    w_i(x) ∝ K(d(x, X_i) / h),
//! ```
//!
//! where `d` is a semi-metric between curves (derivative-based, FPCA-score
//! based, or raw L2). The crate provides:
//!
//! * [`fda`] — grids, functional samples, FPCA, semi-metrics;
//! * [`kernel`] — kernel weights and small-ball/kernel-moment estimates;
//! * [`geomedian`] — a weighted spatial-median solver with optimality
//!   certificates at data points;
//! * [`regression`] — conditional-median predictors (component-wise and
//!   vector-valued), bandwidth selection by L1 cross-validation;
//! * [`inference`] — plug-in asymptotic confidence ellipsoids;
//! * [`simulation`] — Brownian-path data generation and coverage studies;
//! * [`mod@bench`] — CSV dataset handling and learn/test benchmark evaluation.
//!
//! A thin `fmedreg` binary exposes the same pipeline as subcommands
//! (`fit`, `predict`, `ellipse`, `simulate`, `benchmark`, `fpca`); the
//! `examples/` directory shows the library API end to end.
//!
//! # Quick start
//!
//! ```
//! use fmedreg::geomedian::{solve_median, PointCloud};
//! use fmedreg::kernel::WeightVector;
//! use nalgebra::DMatrix;
//!
//! // Four points in the plane, equal weights.
//! let points = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0]);
//! let cloud = PointCloud::new(points, WeightVector::uniform(4))?;
//! let sol = solve_median(&cloud, 1e-9, 500)?;
//! assert!((sol.point[0] - 1.0).abs() < 1e-6 && (sol.point[1] - 1.0).abs() < 1e-6);
//! # Ok::<(), fmedreg::Error>(())
//! ```

pub mod bench;
pub mod cli;
pub mod error;
pub mod fda;
pub mod geomedian;
pub mod inference;
pub mod kernel;
pub mod regression;
pub mod simulation;
pub(crate) mod stats;

pub use error::{Error, Result};
