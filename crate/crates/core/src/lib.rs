//! Locally coupled Gaussian process regression for nonstationary time series.
//!
//! A series is covered by overlapping Gaussian windows, each carrying a local
//! stationary GP whose hyper-parameter is a hidden Markov state. Forward–
//! backward smoothing of the per-window marginal likelihoods yields
//! point estimates of the local parameters, which are combined into one
//! nonstationary covariance for denoising the whole series.
//!
//! Modules, bottom up:
//! - [`kernels`]: stationary covariance functions and window bases
//! - [`gp`]: exact GP regression arithmetic
//! - [`markov`]: transition models and forward–backward smoothing
//! - [`coupled`]: the end-to-end locally coupled fit
//! - [`signals`]: synthetic signals, metrics and stationary baselines
//! - [`cli`]: configuration, presets and the command implementations

pub mod cli;
pub mod coupled;
pub mod error;
pub mod gp;
pub mod kernels;
pub mod markov;
pub mod signals;

pub use error::{Error, Result};
