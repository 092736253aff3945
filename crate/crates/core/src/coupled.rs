//! Locally coupled GP regression.
//!
//! The series is covered by overlapping Gaussian windows. Each window has its
//! own stationary kernel whose hyper-parameter is a hidden state; per-window
//! marginal likelihoods are the emissions of a Markov chain over those
//! states. Smoothed point estimates of the states then define a single
//! nonstationary covariance `Σ_i w_i(t) w_i(t') k_i(t, t')` over the whole
//! series, which is used for one exact regression.

use log::info;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{self, GpSystem, NoiseModel, RegressionResult, TimeSeries};
use crate::kernels::{build_windows, KernelSpec, WindowSet};
use crate::markov::{
    build_random_walk_transitions, build_two_state_transitions, forward_backward, point_estimate_mean,
    point_estimate_mode, EmissionMatrix, PosteriorMarginals, StateGrid, TransitionModel,
};

/// Maps a hidden-state value to the local stationary kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocalModelFamily {
    /// state = peak frequency in Hz of an oscillatory kernel with width `d`.
    Frequency {
        #[serde(rename = "d_s")]
        d: f64,
    },
    /// state = α selecting between a broadband and an oscillatory kernel.
    Switch {
        broadband: KernelSpec,
        oscillatory: KernelSpec,
    },
}

impl LocalModelFamily {
    pub fn kernel_for(&self, state: f64) -> KernelSpec {
        match self {
            LocalModelFamily::Frequency { d } => KernelSpec::oscillatory(*d, state),
            LocalModelFamily::Switch {
                broadband,
                oscillatory,
            } => KernelSpec::two_state(state, broadband.clone(), oscillatory.clone()),
        }
    }

    /// Checks that every grid value maps to a valid kernel.
    pub fn validate(&self, grid: &StateGrid) -> Result<()> {
        grid.values()
            .iter()
            .try_for_each(|&v| self.kernel_for(v).validate())
    }
}

/// Sample indices that each window touches after truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationPlan {
    pub segments: Vec<Vec<usize>>,
}

impl SegmentationPlan {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

pub fn plan_segments(windows: &WindowSet) -> Result<SegmentationPlan> {
    let segments: Vec<Vec<usize>> = (0..windows.num_support_points())
        .map(|i| {
            (0..windows.num_samples())
                .filter(|&j| windows.weight(i, j) > 0.0)
                .collect()
        })
        .collect();
    if let Some(i) = segments.iter().position(Vec::is_empty) {
        return Err(Error::Config(format!(
            "window centred at {} s contains no samples; the window is too narrow \
             for the sample spacing",
            windows.support_points[i]
        )));
    }
    Ok(SegmentationPlan { segments })
}

/// `(w wᵀ) ⊙ K` restricted to one segment.
fn windowed_gram(kernel: &KernelSpec, times: &[f64], weights: &[f64], indices: &[usize]) -> DMatrix<f64> {
    let n = indices.len();
    let mut gram = DMatrix::zeros(n, n);
    for a in 0..n {
        let (ja, wa) = (indices[a], weights[a]);
        gram[(a, a)] = wa * wa * kernel.at_lag(0.0);
        for b in 0..a {
            let v = wa * weights[b] * kernel.at_lag(times[indices[b]] - times[ja]);
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
    }
    gram
}

/// Log marginal likelihood of every segment under every state.
pub fn segment_emissions(
    series: &TimeSeries,
    windows: &WindowSet,
    plan: &SegmentationPlan,
    family: &LocalModelFamily,
    grid: &StateGrid,
    noise: NoiseModel,
) -> Result<EmissionMatrix> {
    if windows.num_samples() != series.len() {
        return Err(Error::Input(format!(
            "window set built for {} samples, series has {}",
            windows.num_samples(),
            series.len()
        )));
    }
    if plan.len() != windows.num_support_points() {
        return Err(Error::Input("segmentation plan does not match the window set".into()));
    }
    family.validate(grid)?;
    let m = grid.len();
    let cells: Vec<(usize, usize)> = (0..plan.len()).flat_map(|i| (0..m).map(move |a| (i, a))).collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(i, a)| {
            let indices = &plan.segments[i];
            let weights: Vec<f64> = indices.iter().map(|&j| windows.weight(i, j)).collect();
            let kernel = family.kernel_for(grid.values()[a]);
            let gram = windowed_gram(&kernel, series.times(), &weights, indices);
            GpSystem::new(gram, noise)
                .and_then(|sys| sys.log_marginal_likelihood(&series.values_at(indices)))
                .map_err(|e| e.in_stage(format!("segment {i}, state {}", grid.values()[a])))
        })
        .collect::<Result<_>>()?;
    EmissionMatrix::new(DMatrix::from_row_slice(plan.len(), m, &values))
}

/// The assembled nonstationary Gram matrix at the sample points.
#[derive(Debug, Clone)]
pub struct GlobalCovariance {
    pub matrix: DMatrix<f64>,
    pub point_estimates: Vec<f64>,
}

/// `C[j][k] = Σ_i w(t_j; t_i) w(t_k; t_i) k_i(t_j, t_k)`, with `k_i` the
/// family kernel at segment `i`'s point estimate.
pub fn assemble_global_covariance(
    windows: &WindowSet,
    family: &LocalModelFamily,
    point_estimates: &[f64],
    times: &[f64],
) -> Result<GlobalCovariance> {
    let m = windows.num_support_points();
    if point_estimates.len() != m {
        return Err(Error::Input(format!(
            "{} point estimates for {m} support points",
            point_estimates.len()
        )));
    }
    if times.len() != windows.num_samples() {
        return Err(Error::Input(format!(
            "window set built for {} samples, got {} times",
            windows.num_samples(),
            times.len()
        )));
    }
    let kernels: Vec<KernelSpec> = point_estimates.iter().map(|&v| family.kernel_for(v)).collect();
    for k in &kernels {
        k.validate()?;
    }
    let n = times.len();
    let mut matrix = DMatrix::zeros(n, n);
    for (i, kernel) in kernels.iter().enumerate() {
        let support: Vec<(usize, f64)> = (0..n)
            .map(|j| (j, windows.weight(i, j)))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        for (a, &(ja, wa)) in support.iter().enumerate() {
            for &(jb, wb) in &support[..=a] {
                matrix[(ja, jb)] += wa * wb * kernel.at_lag(times[jb] - times[ja]);
            }
        }
    }
    // only the lower triangle was accumulated
    for j in 0..n {
        for k in 0..j {
            matrix[(k, j)] = matrix[(j, k)];
        }
    }
    Ok(GlobalCovariance {
        matrix,
        point_estimates: point_estimates.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Mean,
    Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransitionSpec {
    RandomWalk { step_std: f64, autoregressive_coeff: f64 },
    TwoState { stay_probability: f64 },
}

impl TransitionSpec {
    pub fn build(&self, grid: &StateGrid) -> Result<TransitionModel> {
        match *self {
            TransitionSpec::RandomWalk {
                step_std,
                autoregressive_coeff,
            } => build_random_walk_transitions(grid.clone(), step_std, autoregressive_coeff),
            TransitionSpec::TwoState { stay_probability } => {
                if grid.values() != StateGrid::binary().values() {
                    return Err(Error::Config(
                        "two-state transitions require the binary grid {0, 1}".into(),
                    ));
                }
                build_two_state_transitions(stay_probability)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub spacing_s: f64,
    pub width_s: f64,
    #[serde(default = "default_truncation")]
    pub truncation_radius: f64,
}

pub fn default_truncation() -> f64 {
    3.0
}

#[derive(Debug, Clone)]
pub struct CoupledModelConfig {
    pub family: LocalModelFamily,
    pub grid: StateGrid,
    pub transition: TransitionSpec,
    pub windows: WindowConfig,
    /// Noise used for the per-segment emissions.
    pub noise: NoiseModel,
    /// Noise for the final whole-series regression; defaults to `noise`.
    pub regression_noise: Option<NoiseModel>,
    pub estimator: Estimator,
}

/// Every intermediate product of a fit.
#[derive(Debug, Clone)]
pub struct CoupledFit {
    pub windows: WindowSet,
    pub plan: SegmentationPlan,
    pub emissions: EmissionMatrix,
    pub marginals: PosteriorMarginals,
    pub point_estimates: Vec<f64>,
    pub global_cov: GlobalCovariance,
    pub regression: RegressionResult,
}

/// windows → segments → emissions → smoothing → point estimates → global
/// covariance → regression.
pub fn fit(series: &TimeSeries, config: &CoupledModelConfig) -> Result<CoupledFit> {
    let stage = |name: &'static str| move |e: Error| e.in_stage(name);

    let transition = config.transition.build(&config.grid).map_err(stage("transition model"))?;
    let windows = build_windows(
        series.times(),
        config.windows.spacing_s,
        config.windows.width_s,
        config.windows.truncation_radius,
    )
    .map_err(stage("windows"))?;
    let plan = plan_segments(&windows).map_err(stage("segmentation"))?;
    info!(
        "fitting {} samples with {} windows × {} states",
        series.len(),
        plan.len(),
        config.grid.len()
    );
    let emissions = segment_emissions(series, &windows, &plan, &config.family, &config.grid, config.noise)
        .map_err(stage("emissions"))?;
    let marginals = forward_backward(&transition, &emissions).map_err(stage("forward-backward"))?;
    let point_estimates = match config.estimator {
        Estimator::Mean => point_estimate_mean(&marginals, &config.grid),
        Estimator::Mode => point_estimate_mode(&marginals, &config.grid),
    };
    let global_cov = assemble_global_covariance(&windows, &config.family, &point_estimates, series.times())
        .map_err(stage("global covariance"))?;
    let regression = gp::regress(
        global_cov.matrix.clone(),
        config.regression_noise.unwrap_or(config.noise),
        series.values(),
    )
    .map_err(stage("regression"))?;
    Ok(CoupledFit {
        windows,
        plan,
        emissions,
        marginals,
        point_estimates,
        global_cov,
        regression,
    })
}
