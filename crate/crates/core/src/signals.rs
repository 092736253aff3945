//! Synthetic test signals, evaluation metrics and stationary baselines.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coupled::LocalModelFamily;
use crate::error::{Error, Result};
use crate::gp::{self, GpSystem, NoiseModel, RegressionResult, TimeSeries};
use crate::kernels::{build_gram, KernelSpec};

/// Deterministic part of a synthetic signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "signal", rename_all = "snake_case")]
pub enum SignalShape {
    /// `sin(2πt + 4πt²)`, instantaneous frequency `1 + 4t` Hz.
    Chirp {
        t_start_s: f64,
        t_end_s: f64,
        sample_rate_hz: f64,
    },
    /// Two slow Gaussian bumps at ±2 s around a 5 Hz burst at 0 s.
    TwoState {
        t_start_s: f64,
        t_end_s: f64,
        step_s: f64,
        /// Envelope level above which the oscillatory state is the truth.
        #[serde(default = "default_state_threshold")]
        state_threshold: f64,
    },
    /// Slow broadband activity with a tapered 10 Hz burst.
    AlphaBurst {
        duration_s: f64,
        sample_rate_hz: f64,
        burst_start_s: f64,
        burst_end_s: f64,
        burst_freq_hz: f64,
    },
}

fn default_state_threshold() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(flatten)]
    pub shape: SignalShape,
    pub noise_std: f64,
    pub seed: u64,
}

/// Clean and noise-corrupted versions of a generated signal plus the
/// ground-truth hidden quantity (frequency in Hz or oscillatory indicator).
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub clean: TimeSeries,
    pub noisy: TimeSeries,
    pub truth: Vec<f64>,
}

impl SyntheticSpec {
    pub fn chirp_paper(seed: u64) -> Self {
        SyntheticSpec {
            shape: SignalShape::Chirp {
                t_start_s: 0.0,
                t_end_s: 2.5,
                sample_rate_hz: 100.0,
            },
            noise_std: 0.5,
            seed,
        }
    }

    pub fn two_state_paper(seed: u64) -> Self {
        SyntheticSpec {
            shape: SignalShape::TwoState {
                t_start_s: -2.5,
                t_end_s: 2.5,
                step_s: 0.01,
                state_threshold: default_state_threshold(),
            },
            noise_std: 0.3,
            seed,
        }
    }

    pub fn alpha_burst(seed: u64) -> Self {
        SyntheticSpec {
            shape: SignalShape::AlphaBurst {
                duration_s: 6.0,
                sample_rate_hz: 300.0,
                burst_start_s: 2.0,
                burst_end_s: 4.5,
                burst_freq_hz: 10.0,
            },
            noise_std: 0.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::Config(format!("noise std must be >= 0, got {}", self.noise_std)));
        }
        let ok = match self.shape {
            SignalShape::Chirp {
                t_start_s,
                t_end_s,
                sample_rate_hz,
            } => t_end_s > t_start_s && sample_rate_hz > 0.0,
            SignalShape::TwoState {
                t_start_s,
                t_end_s,
                step_s,
                ..
            } => t_end_s > t_start_s && step_s > 0.0,
            SignalShape::AlphaBurst {
                duration_s,
                sample_rate_hz,
                burst_start_s,
                burst_end_s,
                burst_freq_hz,
            } => {
                duration_s > 0.0
                    && sample_rate_hz > 0.0
                    && burst_end_s > burst_start_s
                    && burst_freq_hz > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid synthetic signal specification {:?}", self.shape)))
        }
    }
}

/// `t_start, t_start + step, …` up to `t_end` inclusive.
fn regular_times(t_start: f64, t_end: f64, step: f64) -> Vec<f64> {
    let n = ((t_end - t_start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|k| t_start + k as f64 * step).collect()
}

/// Seeded white Gaussian noise, ChaCha20 stream.
pub fn white_noise(n: usize, std: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            std * z
        })
        .collect()
}

fn finish(times: Vec<f64>, clean: Vec<f64>, truth: Vec<f64>, spec: &SyntheticSpec) -> Result<Synthetic> {
    let noise = white_noise(times.len(), spec.noise_std, spec.seed);
    let noisy = clean.iter().zip(&noise).map(|(c, e)| c + e).collect();
    Ok(Synthetic {
        clean: TimeSeries::new(times.clone(), clean)?,
        noisy: TimeSeries::new(times, noisy)?,
        truth,
    })
}

pub fn chirp_value(t: f64) -> f64 {
    (2.0 * PI * t + 4.0 * PI * t * t).sin()
}

pub fn chirp_frequency(t: f64) -> f64 {
    1.0 + 4.0 * t
}

pub fn two_state_value(t: f64) -> f64 {
    let bump = |c: f64| (-(t - c).powi(2) / (2.0 * 0.7 * 0.7)).exp();
    bump(-2.0) + two_state_envelope(t) * (2.0 * PI * 5.0 * t).cos() + bump(2.0)
}

pub fn two_state_envelope(t: f64) -> f64 {
    (-t * t / (2.0 * 0.3 * 0.3)).exp()
}

pub fn gen_chirp(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    let SignalShape::Chirp {
        t_start_s,
        t_end_s,
        sample_rate_hz,
    } = spec.shape
    else {
        return Err(Error::Config("gen_chirp needs a chirp specification".into()));
    };
    let times = regular_times(t_start_s, t_end_s, 1.0 / sample_rate_hz);
    let clean = times.iter().map(|&t| chirp_value(t)).collect();
    let truth = times.iter().map(|&t| chirp_frequency(t)).collect();
    finish(times, clean, truth, spec)
}

pub fn gen_two_state(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    let SignalShape::TwoState {
        t_start_s,
        t_end_s,
        step_s,
        state_threshold,
    } = spec.shape
    else {
        return Err(Error::Config("gen_two_state needs a two-state specification".into()));
    };
    let times = regular_times(t_start_s, t_end_s, step_s);
    let clean = times.iter().map(|&t| two_state_value(t)).collect();
    let truth = times
        .iter()
        .map(|&t| if two_state_envelope(t) > state_threshold { 1.0 } else { 0.0 })
        .collect();
    finish(times, clean, truth, spec)
}

pub fn gen_alpha_burst(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    let SignalShape::AlphaBurst {
        duration_s,
        sample_rate_hz,
        burst_start_s,
        burst_end_s,
        burst_freq_hz,
    } = spec.shape
    else {
        return Err(Error::Config("gen_alpha_burst needs an alpha-burst specification".into()));
    };
    let n = (duration_s * sample_rate_hz).round() as usize;
    let times: Vec<f64> = (0..n).map(|k| k as f64 / sample_rate_hz).collect();
    let ramp = 0.2;
    let envelope = |t: f64| {
        let rise = ((t - burst_start_s) / ramp).clamp(0.0, 1.0);
        let fall = ((burst_end_s - t) / ramp).clamp(0.0, 1.0);
        (0.5 - 0.5 * (PI * rise).cos()) * (0.5 - 0.5 * (PI * fall).cos())
    };
    let clean = times
        .iter()
        .map(|&t| {
            let slow = 0.6 * (2.0 * PI * 0.7 * t + 0.3).sin() + 0.4 * (2.0 * PI * 1.9 * t + 1.1).sin();
            slow * (1.0 - envelope(t)) + 1.2 * envelope(t) * (2.0 * PI * burst_freq_hz * t).sin()
        })
        .collect();
    let truth = times.iter().map(|&t| if envelope(t) > 0.5 { 1.0 } else { 0.0 }).collect();
    finish(times, clean, truth, spec)
}

pub fn generate(spec: &SyntheticSpec) -> Result<Synthetic> {
    match spec.shape {
        SignalShape::Chirp { .. } => gen_chirp(spec),
        SignalShape::TwoState { .. } => gen_two_state(spec),
        SignalShape::AlphaBurst { .. } => gen_alpha_burst(spec),
    }
}

pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Metric(format!(
            "correlation needs two equal-length vectors of length >= 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Metric("correlation undefined for a zero-variance input".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone)]
pub struct BaselineFit {
    pub best_param: f64,
    pub log_likelihoods: Vec<f64>,
    pub regression: RegressionResult,
}

/// Stationary GP whose single free parameter is chosen from `params` by
/// maximum marginal likelihood; ties go to the earlier grid entry.
pub fn stationary_baseline_fit(
    series: &TimeSeries,
    family: &LocalModelFamily,
    params: &[f64],
    noise: NoiseModel,
) -> Result<BaselineFit> {
    if params.is_empty() {
        return Err(Error::Config("baseline parameter grid is empty".into()));
    }
    let mut log_likelihoods = Vec::with_capacity(params.len());
    let mut best: Option<(usize, GpSystem)> = None;
    for (idx, &p) in params.iter().enumerate() {
        let gram = build_gram(&family.kernel_for(p), series.times())?;
        let system = GpSystem::new(gram, noise)?;
        let ll = system.log_marginal_likelihood(&series.values_at(&(0..series.len()).collect::<Vec<_>>()))?;
        log_likelihoods.push(ll);
        let better = match &best {
            None => true,
            Some((b, _)) => ll > log_likelihoods[*b],
        };
        if better {
            best = Some((idx, system));
        }
    }
    let (idx, system) = best.expect("parameter grid is non-empty");
    let values = nalgebra::DVector::from_column_slice(series.values());
    Ok(BaselineFit {
        best_param: params[idx],
        log_likelihoods,
        regression: system.regress(&values)?,
    })
}

/// Regression with one fixed stationary kernel over the whole series.
pub fn stationary_fit(series: &TimeSeries, spec: &KernelSpec, noise: NoiseModel) -> Result<RegressionResult> {
    gp::regress(build_gram(spec, series.times())?, noise, series.values())
}
