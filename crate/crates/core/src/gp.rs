//! Exact GP regression at the sample points: posterior mean, pointwise
//! posterior variance and log marginal likelihood, all through one jittered
//! Cholesky factorization of `K + λI`.

use std::f64::consts::PI;

use log::debug;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Measured values paired with strictly increasing sample times (seconds).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Input(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::Input("time series is empty".into()));
        }
        if let Some(j) = times
            .iter()
            .zip(&values)
            .position(|(t, v)| !t.is_finite() || !v.is_finite())
        {
            return Err(Error::Input(format!("non-finite entry at sample {j}")));
        }
        if let Some(j) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Input(format!(
                "times not strictly increasing at sample {}: {} then {}",
                j + 1,
                times[j],
                times[j + 1]
            )));
        }
        Ok(TimeSeries { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Values restricted to the given sample indices.
    pub fn values_at(&self, indices: &[usize]) -> DVector<f64> {
        DVector::from_iterator(indices.len(), indices.iter().map(|&j| self.values[j]))
    }
}

/// White measurement noise with variance `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub lambda: f64,
}

impl NoiseModel {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(NoiseModel { lambda })
        } else {
            Err(Error::Config(format!("noise variance must be finite and > 0, got {lambda}")))
        }
    }

    pub fn from_std(std: f64) -> Result<Self> {
        Self::new(std * std)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub posterior_mean: Vec<f64>,
    pub posterior_variance: Vec<f64>,
}

/// Cholesky factor of a symmetric matrix plus the diagonal jitter that was
/// needed to obtain it.
#[derive(Debug, Clone)]
pub struct Factor {
    chol: Cholesky<f64, Dyn>,
    pub jitter: f64,
}

impl Factor {
    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }

    /// `log |A + jitter·I|`
    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }
}

const JITTER_FIRST: f64 = 1e-10;
const JITTER_LAST: f64 = 1e-4;

/// Cholesky factorization with geometric jitter escalation.
///
/// Tries the bare matrix first, then adds `c · trace/n · I` for
/// `c = 1e-10, 1e-9, …, 1e-4`.
pub fn robust_factorize(matrix: &DMatrix<f64>) -> Result<Factor> {
    let n = matrix.nrows();
    if n == 0 || matrix.ncols() != n {
        return Err(Error::Input(format!(
            "expected a non-empty square matrix, got {}×{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    let scale = matrix.trace() / n as f64;
    let mut levels = vec![0.0];
    if scale > 0.0 {
        let mut c = JITTER_FIRST;
        while c <= JITTER_LAST * (1.0 + 1e-9) {
            levels.push(c * scale);
            c *= 10.0;
        }
    }
    let mut tried = Vec::with_capacity(levels.len());
    for jitter in levels {
        tried.push(jitter);
        let mut candidate = matrix.clone();
        if jitter > 0.0 {
            for i in 0..n {
                candidate[(i, i)] += jitter;
            }
        }
        if let Some(chol) = Cholesky::new(candidate) {
            if jitter > 0.0 {
                debug!("factorized {n}×{n} matrix with jitter {jitter:e}");
            }
            return Ok(Factor { chol, jitter });
        }
    }
    Err(Error::Numerical {
        message: format!("{n}×{n} matrix is not positive definite"),
        jitter_levels: tried,
    })
}

/// A Gram matrix together with the factorization of `K + λI`, shared by the
/// likelihood, mean and variance computations.
#[derive(Debug, Clone)]
pub struct GpSystem {
    gram: DMatrix<f64>,
    factor: Factor,
}

impl GpSystem {
    pub fn new(gram: DMatrix<f64>, noise: NoiseModel) -> Result<Self> {
        let mut noisy = gram.clone();
        for i in 0..noisy.nrows().min(noisy.ncols()) {
            noisy[(i, i)] += noise.lambda;
        }
        let factor = robust_factorize(&noisy)?;
        Ok(GpSystem { gram, factor })
    }

    pub fn factor(&self) -> &Factor {
        &self.factor
    }

    fn check_len(&self, values: &DVector<f64>) -> Result<()> {
        if values.len() != self.factor.dim() {
            return Err(Error::Input(format!(
                "{} values for a {}-point Gram matrix",
                values.len(),
                self.factor.dim()
            )));
        }
        Ok(())
    }

    pub fn log_marginal_likelihood(&self, values: &DVector<f64>) -> Result<f64> {
        self.check_len(values)?;
        let n = values.len() as f64;
        let whitened = self
            .factor
            .chol
            .l_dirty()
            .solve_lower_triangular(values)
            .expect("cholesky factor has a positive diagonal");
        Ok(-0.5 * n * (2.0 * PI).ln() - 0.5 * self.factor.log_det() - 0.5 * whitened.norm_squared())
    }

    pub fn posterior_mean(&self, values: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(values)?;
        Ok(&self.gram * self.factor.solve(values))
    }

    /// `diag(K − K (K + λI)⁻¹ K)`, clamped to `[0, K_jj]`.
    pub fn posterior_variance(&self) -> Vec<f64> {
        let l = self.factor.chol.l();
        let v = l
            .solve_lower_triangular(&self.gram)
            .expect("cholesky factor has a positive diagonal");
        (0..self.gram.nrows())
            .map(|j| {
                let prior = self.gram[(j, j)];
                let explained = v.column(j).norm_squared();
                (prior - explained).clamp(0.0, prior.max(0.0))
            })
            .collect()
    }

    pub fn regress(&self, values: &DVector<f64>) -> Result<RegressionResult> {
        Ok(RegressionResult {
            posterior_mean: self.posterior_mean(values)?.iter().copied().collect(),
            posterior_variance: self.posterior_variance(),
        })
    }
}

pub fn log_marginal_likelihood(gram: &DMatrix<f64>, noise: NoiseModel, values: &[f64]) -> Result<f64> {
    GpSystem::new(gram.clone(), noise)?.log_marginal_likelihood(&DVector::from_column_slice(values))
}

pub fn posterior_mean(gram: &DMatrix<f64>, noise: NoiseModel, values: &[f64]) -> Result<Vec<f64>> {
    let mean = GpSystem::new(gram.clone(), noise)?.posterior_mean(&DVector::from_column_slice(values))?;
    Ok(mean.iter().copied().collect())
}

pub fn posterior_variance(gram: &DMatrix<f64>, noise: NoiseModel) -> Result<Vec<f64>> {
    Ok(GpSystem::new(gram.clone(), noise)?.posterior_variance())
}

/// Mean and variance from a single factorization.
pub fn regress(gram: DMatrix<f64>, noise: NoiseModel, values: &[f64]) -> Result<RegressionResult> {
    GpSystem::new(gram, noise)?.regress(&DVector::from_column_slice(values))
}
