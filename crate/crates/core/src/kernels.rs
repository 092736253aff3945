//! Stationary covariance functions and normalized Gaussian window bases.
//!
//! Every kernel here has unit prior variance: `k(t, t) = 1`. Overall signal
//! amplitude relative to the measurement noise is carried by the noise
//! variance of the regression, not by the kernel.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One stationary covariance family together with its hyper-parameters.
///
/// Time scales are in seconds and frequencies in Hz; the oscillatory kernel
/// evaluates `cos(2π · freq_hz · τ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `exp(-τ² / (2 δ²))`
    SquaredExponential {
        #[serde(rename = "delta_s")]
        delta: f64,
    },
    /// `exp(-τ² / (2 d²)) · cos(2π f τ)`
    Oscillatory {
        #[serde(rename = "d_s")]
        d: f64,
        freq_hz: f64,
    },
    /// `exp(-|τ| / ℓ)`
    Exponential {
        #[serde(rename = "ell_s")]
        ell: f64,
    },
    /// `α · broadband + (1 − α) · oscillatory`.
    ///
    /// α is a state indicator (0 or 1) in the switching model. Values in
    /// between give a convex mixture, which is still a valid kernel.
    TwoStateMix {
        alpha: f64,
        broadband: Box<KernelSpec>,
        oscillatory: Box<KernelSpec>,
    },
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite and > 0, got {value}")))
    }
}

impl KernelSpec {
    pub fn squared_exponential(delta: f64) -> Self {
        KernelSpec::SquaredExponential { delta }
    }

    pub fn oscillatory(d: f64, freq_hz: f64) -> Self {
        KernelSpec::Oscillatory { d, freq_hz }
    }

    pub fn exponential(ell: f64) -> Self {
        KernelSpec::Exponential { ell }
    }

    pub fn two_state(alpha: f64, broadband: KernelSpec, oscillatory: KernelSpec) -> Self {
        KernelSpec::TwoStateMix {
            alpha,
            broadband: Box::new(broadband),
            oscillatory: Box::new(oscillatory),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::SquaredExponential { delta } => positive("squared exponential delta", *delta),
            KernelSpec::Oscillatory { d, freq_hz } => {
                positive("oscillatory width d", *d)?;
                if freq_hz.is_finite() && *freq_hz >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "oscillatory frequency must be finite and >= 0 Hz, got {freq_hz}"
                    )))
                }
            }
            KernelSpec::Exponential { ell } => positive("exponential time scale", *ell),
            KernelSpec::TwoStateMix {
                alpha,
                broadband,
                oscillatory,
            } => {
                if !(0.0..=1.0).contains(alpha) {
                    return Err(Error::Config(format!(
                        "two-state mixing weight must lie in [0, 1], got {alpha}"
                    )));
                }
                broadband.validate()?;
                oscillatory.validate()
            }
        }
    }

    /// Covariance at lag `tau = t' - t`. Assumes the spec has been validated.
    pub fn at_lag(&self, tau: f64) -> f64 {
        match self {
            KernelSpec::SquaredExponential { delta } => (-tau * tau / (2.0 * delta * delta)).exp(),
            KernelSpec::Oscillatory { d, freq_hz } => {
                (-tau * tau / (2.0 * d * d)).exp() * (2.0 * PI * freq_hz * tau).cos()
            }
            KernelSpec::Exponential { ell } => (-tau.abs() / ell).exp(),
            KernelSpec::TwoStateMix {
                alpha,
                broadband,
                oscillatory,
            } => {
                // skip the inactive branch so a binary alpha reproduces its
                // component bit for bit
                if *alpha == 1.0 {
                    broadband.at_lag(tau)
                } else if *alpha == 0.0 {
                    oscillatory.at_lag(tau)
                } else {
                    alpha * broadband.at_lag(tau) + (1.0 - alpha) * oscillatory.at_lag(tau)
                }
            }
        }
    }
}

/// Evaluates `k(t, t')` after validating the kernel parameters.
pub fn eval_kernel(spec: &KernelSpec, t: f64, t_prime: f64) -> Result<f64> {
    spec.validate()?;
    Ok(spec.at_lag(t_prime - t))
}

/// Gram matrix `K[j][k] = k(times[j], times[k])`.
pub fn build_gram(spec: &KernelSpec, times: &[f64]) -> Result<DMatrix<f64>> {
    spec.validate()?;
    if times.is_empty() {
        return Err(Error::Input("cannot build a Gram matrix from zero time points".into()));
    }
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::Input(format!("non-finite time point {t}")));
    }
    let n = times.len();
    let mut gram = DMatrix::zeros(n, n);
    for j in 0..n {
        gram[(j, j)] = spec.at_lag(0.0);
        for k in 0..j {
            let v = spec.at_lag(times[k] - times[j]);
            gram[(j, k)] = v;
            gram[(k, j)] = v;
        }
    }
    Ok(gram)
}

/// Normalized Gaussian window basis over a regular grid of support points.
///
/// `weights` is `m × n` (support points × samples). For every sample the
/// squared weights sum to one across support points.
#[derive(Debug, Clone)]
pub struct WindowSet {
    pub support_points: Vec<f64>,
    pub width: f64,
    pub truncation_radius: f64,
    pub weights: DMatrix<f64>,
}

impl WindowSet {
    /// Builds windows centred on explicitly given support points.
    pub fn from_support_points(
        times: &[f64],
        support_points: Vec<f64>,
        width: f64,
        truncation_radius: f64,
    ) -> Result<Self> {
        positive("window width", width)?;
        positive("truncation radius", truncation_radius)?;
        if support_points.is_empty() {
            return Err(Error::Config("window set needs at least one support point".into()));
        }
        if support_points.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::Config("support points must be strictly increasing".into()));
        }
        // relative slack so samples sitting exactly on the cutoff survive rounding
        let cutoff = truncation_radius * width * (1.0 + 1e-9);
        let mut weights = DMatrix::zeros(support_points.len(), times.len());
        for (j, &t) in times.iter().enumerate() {
            let mut sum_sq = 0.0;
            for (i, &c) in support_points.iter().enumerate() {
                let dist = t - c;
                if dist.abs() <= cutoff {
                    let w = (-dist * dist / (2.0 * width * width)).exp();
                    weights[(i, j)] = w;
                    sum_sq += w * w;
                }
            }
            if sum_sq == 0.0 {
                return Err(Error::Config(format!(
                    "sample at t = {t} s is not covered by any window \
                     (width {width} s, truncation {truncation_radius}×width)"
                )));
            }
            let norm = sum_sq.sqrt();
            for i in 0..support_points.len() {
                weights[(i, j)] /= norm;
            }
        }
        Ok(WindowSet {
            support_points,
            width,
            truncation_radius,
            weights,
        })
    }

    pub fn num_support_points(&self) -> usize {
        self.support_points.len()
    }

    pub fn num_samples(&self) -> usize {
        self.weights.ncols()
    }

    /// `w(t_j; t_i)` for support point `i` and sample `j`.
    pub fn weight(&self, support: usize, sample: usize) -> f64 {
        self.weights[(support, sample)]
    }
}

/// Regular support grid starting at `min(times)`; the last point is the
/// first one that reaches `max(times) - spacing` or beyond.
pub fn support_grid(times: &[f64], spacing: f64) -> Result<Vec<f64>> {
    positive("window spacing", spacing)?;
    let (lo, hi) = times
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Input("window grid needs at least one finite time point".into()));
    }
    let span = (hi - lo) / spacing;
    // tolerate representation error in e.g. 2.5 / 0.1
    let steps = (span + 1e-9).floor() as usize;
    Ok((0..=steps).map(|i| lo + i as f64 * spacing).collect())
}

/// Builds a normalized window set covering `times` on a regular grid.
pub fn build_windows(
    times: &[f64],
    spacing: f64,
    width: f64,
    truncation_radius: f64,
) -> Result<WindowSet> {
    let support = support_grid(times, spacing)?;
    WindowSet::from_support_points(times, support, width, truncation_radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn all_variants() -> Vec<KernelSpec> {
        vec![
            KernelSpec::squared_exponential(0.7),
            KernelSpec::oscillatory(0.4, 5.0),
            KernelSpec::exponential(0.3),
            KernelSpec::two_state(
                1.0,
                KernelSpec::squared_exponential(0.2),
                KernelSpec::oscillatory(0.2, 5.0),
            ),
            KernelSpec::two_state(
                0.0,
                KernelSpec::exponential(0.3),
                KernelSpec::oscillatory(0.17, 10.0),
            ),
        ]
    }

    #[test]
    fn kernel_reference_values() {
        let se = KernelSpec::squared_exponential(1.0);
        assert_eq!(eval_kernel(&se, 0.0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(eval_kernel(&se, 0.0, 1.0).unwrap(), (-0.5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(eval_kernel(&se, 0.0, 1.0).unwrap(), 0.60653, epsilon = 1e-5);

        let ex = KernelSpec::exponential(0.3);
        assert_abs_diff_eq!(eval_kernel(&ex, 0.0, 0.3).unwrap(), 0.36788, epsilon = 1e-5);

        // exp(-0.1² / (2·0.4²)) · cos(2π·5·0.1)
        let osc = KernelSpec::oscillatory(0.4, 5.0);
        assert_abs_diff_eq!(eval_kernel(&osc, 0.0, 0.1).unwrap(), -0.969_233_234_476_344_1, epsilon = 1e-12);
    }

    #[test]
    fn two_state_selects_component() {
        let bb = KernelSpec::exponential(0.3);
        let os = KernelSpec::oscillatory(0.2, 10.0);
        let on = KernelSpec::two_state(1.0, bb.clone(), os.clone());
        let off = KernelSpec::two_state(0.0, bb.clone(), os.clone());
        for lag in [-0.5, -0.01, 0.0, 0.033, 0.25, 2.0] {
            assert_eq!(on.at_lag(lag), bb.at_lag(lag));
            assert_eq!(off.at_lag(lag), os.at_lag(lag));
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        for bad in [
            KernelSpec::squared_exponential(0.0),
            KernelSpec::oscillatory(-1.0, 5.0),
            KernelSpec::oscillatory(0.4, -5.0),
            KernelSpec::exponential(f64::NAN),
            KernelSpec::two_state(1.5, KernelSpec::exponential(1.0), KernelSpec::oscillatory(1.0, 1.0)),
            KernelSpec::two_state(1.0, KernelSpec::exponential(0.0), KernelSpec::oscillatory(1.0, 1.0)),
        ] {
            assert!(matches!(eval_kernel(&bad, 0.0, 1.0), Err(Error::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn gram_small_cases() {
        let se = KernelSpec::squared_exponential(1.0);
        let g = build_gram(&se, &[3.0]).unwrap();
        assert_eq!(g, DMatrix::from_element(1, 1, 1.0));
        let g = build_gram(&se, &[0.0, 1.0]).unwrap();
        let e = (-0.5f64).exp();
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[1.0, e, e, 1.0]));
        assert!(build_gram(&se, &[]).is_err());
    }

    #[test]
    fn oscillatory_gram_is_psd() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        let g = build_gram(&KernelSpec::oscillatory(0.4, 5.0), &times).unwrap();
        let trace = g.trace();
        let eig = g.symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-8 * trace, "min eigenvalue {min}");
    }

    #[test]
    fn single_support_point_gives_unit_weights() {
        let times = [0.0, 0.1, 0.2, 0.3];
        let w = WindowSet::from_support_points(&times, vec![0.15], 1.0, 3.0).unwrap();
        assert!(w.weights.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn symmetric_pair_of_windows() {
        let times = [-0.05, 0.0, 0.05];
        let w = build_windows(&times, 0.1, 0.25, 3.0).unwrap();
        assert_eq!(w.num_support_points(), 2);
        assert_abs_diff_eq!(w.support_points[0], -0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(w.support_points[1], 0.05, epsilon = 1e-15);
        // equal raw Gaussians at ±0.05 s: ratio 1, so each is 1/√2 after normalization
        let raw = |d: f64| (-d * d / (2.0 * 0.25 * 0.25)).exp();
        let expected = raw(0.05) / (2.0 * raw(0.05) * raw(0.05)).sqrt();
        assert_abs_diff_eq!(w.weight(0, 1), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(w.weight(1, 1), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn support_grid_placement() {
        let times: Vec<f64> = (0..=250).map(|i| i as f64 * 0.01).collect();
        let grid = support_grid(&times, 0.1).unwrap();
        assert_eq!(grid.len(), 26);
        assert_eq!(grid[0], 0.0);
        assert!(*grid.last().unwrap() >= 2.5 - 0.1);

        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.033).collect();
        let grid = support_grid(&times, 0.1).unwrap();
        assert!(*grid.last().unwrap() >= 0.33 - 0.1);
        assert!(*grid.last().unwrap() <= 0.33 + 1e-12);
    }

    #[test]
    fn coverage_gap_is_reported() {
        let times = [0.0, 0.5, 1.0];
        let err = WindowSet::from_support_points(&times, vec![0.0, 1.0], 0.05, 3.0).unwrap_err();
        match err {
            Error::Config(msg) => assert!(msg.contains("0.5"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn kernels_symmetric_stationary_bounded(
            t in -10.0f64..10.0, tp in -10.0f64..10.0, shift in -5.0f64..5.0, which in 0usize..5
        ) {
            let spec = &all_variants()[which];
            let a = eval_kernel(spec, t, tp).unwrap();
            prop_assert_eq!(a, eval_kernel(spec, tp, t).unwrap());
            let shifted = eval_kernel(spec, t + shift, tp + shift).unwrap();
            prop_assert!((a - shifted).abs() < 1e-9);
            prop_assert!(a.abs() <= 1.0 + 1e-15);
            prop_assert_eq!(eval_kernel(spec, t, t).unwrap(), 1.0);
        }

        #[test]
        fn window_columns_normalized(
            n in 2usize..80, dt in 0.002f64..0.05, spacing in 0.01f64..0.3,
            width_ratio in 0.8f64..4.0, trunc in 2.0f64..5.0
        ) {
            let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
            let width = spacing * width_ratio;
            let w = build_windows(&times, spacing, width, trunc).unwrap();
            for j in 0..n {
                let s: f64 = w.weights.column(j).iter().map(|x| x * x).sum();
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
            prop_assert!(w.weights.iter().all(|&x| x >= 0.0));
        }
    }
}
