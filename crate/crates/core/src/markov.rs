//! Finite-state hidden Markov chain over kernel hyper-parameters.
//!
//! Emissions arrive as log marginal likelihoods per (segment, state). The
//! forward and backward passes work on probabilities rescaled at every step:
//! each emission row is shifted by its maximum before exponentiation and the
//! forward vector is renormalized, with the discarded log-scales accumulated
//! into the evidence.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Ordered values the hidden state can take (frequencies in Hz, or α).
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    values: Vec<f64>,
}

impl StateGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("state grid is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("state grid has non-finite values".into()));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("state grid must be strictly increasing".into()));
        }
        Ok(StateGrid { values })
    }

    /// `min, min + step, …` up to and including `max` (with a small tolerance
    /// for accumulated rounding).
    pub fn range(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(max >= min) {
            return Err(Error::Config(format!(
                "invalid state range {min}..={max} step {step}"
            )));
        }
        let count = ((max - min) / step + 1e-9).floor() as usize + 1;
        Self::new((0..count).map(|i| min + i as f64 * step).collect())
    }

    /// The α grid `{0, 1}` of the two-state switch.
    pub fn binary() -> Self {
        StateGrid {
            values: vec![0.0, 1.0],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct TransitionModel {
    pub grid: StateGrid,
    pub initial: Vec<f64>,
    /// Row-stochastic: `transitions[(a, b)] = p(next = b | current = a)`.
    pub transitions: DMatrix<f64>,
}

impl TransitionModel {
    pub fn new(grid: StateGrid, initial: Vec<f64>, transitions: DMatrix<f64>) -> Result<Self> {
        let m = grid.len();
        if initial.len() != m || transitions.nrows() != m || transitions.ncols() != m {
            return Err(Error::Config(format!(
                "transition model dimensions do not match a {m}-state grid"
            )));
        }
        let bad = |x: &f64| !x.is_finite() || *x < 0.0;
        if initial.iter().any(bad) || transitions.iter().any(bad) {
            return Err(Error::Config("probabilities must be finite and non-negative".into()));
        }
        if (initial.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Config("initial distribution does not sum to 1".into()));
        }
        for (a, row) in transitions.row_iter().enumerate() {
            if (row.sum() - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("transition row {a} does not sum to 1")));
            }
        }
        Ok(TransitionModel {
            grid,
            initial,
            transitions,
        })
    }

    pub fn num_states(&self) -> usize {
        self.grid.len()
    }
}

fn uniform(m: usize) -> Vec<f64> {
    vec![1.0 / m as f64; m]
}

/// Discretized autoregressive step `next = coeff · current + N(0, step_std²)`,
/// renormalized over the finite grid. Uniform initial distribution.
pub fn build_random_walk_transitions(
    grid: StateGrid,
    step_std: f64,
    autoregressive_coeff: f64,
) -> Result<TransitionModel> {
    if !(step_std.is_finite() && step_std > 0.0) {
        return Err(Error::Config(format!("step std must be finite and > 0, got {step_std}")));
    }
    if !autoregressive_coeff.is_finite() {
        return Err(Error::Config("autoregressive coefficient must be finite".into()));
    }
    let m = grid.len();
    let v = grid.values();
    let mut transitions = DMatrix::zeros(m, m);
    for a in 0..m {
        let centre = autoregressive_coeff * v[a];
        let log_w: Vec<f64> = v
            .iter()
            .map(|&b| -(b - centre).powi(2) / (2.0 * step_std * step_std))
            .collect();
        // shift so the closest state has weight 1 and the row never underflows
        let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        for b in 0..m {
            transitions[(a, b)] = w[b] / total;
        }
    }
    TransitionModel::new(grid, uniform(m), transitions)
}

/// Symmetric two-state switch with persistence `stay_probability`.
pub fn build_two_state_transitions(stay_probability: f64) -> Result<TransitionModel> {
    let p = stay_probability;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Config(format!("stay probability must lie in (0, 1), got {p}")));
    }
    let transitions = DMatrix::from_row_slice(2, 2, &[p, 1.0 - p, 1.0 - p, p]);
    TransitionModel::new(StateGrid::binary(), uniform(2), transitions)
}

/// Per-segment log marginal likelihoods, `segments × states`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionMatrix {
    pub log_lik: DMatrix<f64>,
}

impl EmissionMatrix {
    pub fn new(log_lik: DMatrix<f64>) -> Result<Self> {
        if log_lik.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("emission log-likelihoods must be finite".into()));
        }
        Ok(EmissionMatrix { log_lik })
    }

    pub fn num_segments(&self) -> usize {
        self.log_lik.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMarginals {
    /// Smoothed `p(state_i = a | all segments)`, `segments × states`.
    pub gamma: DMatrix<f64>,
    pub log_evidence: f64,
}

/// Exact smoothed marginals of a finite-state chain.
pub fn forward_backward(model: &TransitionModel, emissions: &EmissionMatrix) -> Result<PosteriorMarginals> {
    let m = model.num_states();
    let segments = emissions.num_segments();
    if emissions.log_lik.ncols() != m {
        return Err(Error::Input(format!(
            "emission matrix has {} state columns, model has {m}",
            emissions.log_lik.ncols()
        )));
    }
    if segments == 0 {
        return Err(Error::Input("emission matrix has no segments".into()));
    }

    // scaled emissions e[i][a] = exp(log_lik - row max)
    let mut scaled = DMatrix::zeros(segments, m);
    let mut shifts = vec![0.0; segments];
    for i in 0..segments {
        let row = emissions.log_lik.row(i);
        let top = row.max();
        shifts[i] = top;
        for a in 0..m {
            scaled[(i, a)] = (row[a] - top).exp();
        }
    }

    let trans = &model.transitions;
    let mut alpha = DMatrix::zeros(segments, m);
    let mut log_evidence = 0.0;
    let mut scale = vec![0.0; segments];
    for i in 0..segments {
        let mut total = 0.0;
        for b in 0..m {
            let prior = if i == 0 {
                model.initial[b]
            } else {
                (0..m).map(|a| alpha[(i - 1, a)] * trans[(a, b)]).sum()
            };
            let v = prior * scaled[(i, b)];
            alpha[(i, b)] = v;
            total += v;
        }
        if !(total > 0.0) {
            return Err(Error::Numerical {
                message: format!("forward pass has zero mass at segment {i}"),
                jitter_levels: Vec::new(),
            });
        }
        for b in 0..m {
            alpha[(i, b)] /= total;
        }
        scale[i] = total;
        log_evidence += total.ln() + shifts[i];
    }

    // beta scaled by the same per-step totals
    let mut beta = DMatrix::from_element(segments, m, 1.0);
    for i in (0..segments - 1).rev() {
        for a in 0..m {
            let v: f64 = (0..m)
                .map(|b| trans[(a, b)] * scaled[(i + 1, b)] * beta[(i + 1, b)])
                .sum();
            beta[(i, a)] = v / scale[i + 1];
        }
    }

    let mut gamma = alpha.component_mul(&beta);
    for i in 0..segments {
        let total: f64 = gamma.row(i).sum();
        for a in 0..m {
            gamma[(i, a)] /= total;
        }
    }
    Ok(PosteriorMarginals { gamma, log_evidence })
}

/// Posterior-mean state value per segment.
pub fn point_estimate_mean(marginals: &PosteriorMarginals, grid: &StateGrid) -> Vec<f64> {
    marginals
        .gamma
        .row_iter()
        .map(|row| row.iter().zip(grid.values()).map(|(p, v)| p * v).sum())
        .collect()
}

/// Most probable state value per segment; ties go to the lower grid index.
pub fn point_estimate_mode(marginals: &PosteriorMarginals, grid: &StateGrid) -> Vec<f64> {
    marginals
        .gamma
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for a in 1..row.len() {
                if row[a] > row[best] {
                    best = a;
                }
            }
            grid.values()[best]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn marginals(rows: &[&[f64]]) -> PosteriorMarginals {
        let m = rows[0].len();
        PosteriorMarginals {
            gamma: DMatrix::from_row_iterator(rows.len(), m, rows.iter().flat_map(|r| r.iter().copied())),
            log_evidence: 0.0,
        }
    }

    /// Enumerates every path of a two-segment, two-state chain.
    fn two_segment_oracle(model: &TransitionModel, e: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
        let mut gamma = DMatrix::zeros(2, 2);
        let mut total = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let p = model.initial[a] * e[(0, a)].exp() * model.transitions[(a, b)] * e[(1, b)].exp();
                gamma[(0, a)] += p;
                gamma[(1, b)] += p;
                total += p;
            }
        }
        (gamma / total, total.ln())
    }

    #[test]
    fn paper_grid_random_walk_rows() {
        let grid = StateGrid::range(0.1, 12.0, 0.4).unwrap();
        assert_eq!(grid.len(), 30);
        let model = build_random_walk_transitions(grid, 0.2, 1.0).unwrap();
        for row in model.transitions.row_iter() {
            assert_abs_diff_eq!(row.sum(), 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(model.initial.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn frozen_chain_is_identity() {
        let grid = StateGrid::range(0.1, 12.0, 0.4).unwrap();
        let model = build_random_walk_transitions(grid, 1e-8, 1.0).unwrap();
        assert!((model.transitions.clone() - DMatrix::identity(30, 30)).abs().max() < 1e-12);
    }

    #[test]
    fn three_state_random_walk_matches_gaussian_density() {
        let grid = StateGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let model = build_random_walk_transitions(grid, 1.0, 1.0).unwrap();
        let density = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let raw = [density(0.0), density(1.0), density(2.0)];
        let total: f64 = raw.iter().sum();
        for b in 0..3 {
            assert_abs_diff_eq!(model.transitions[(0, b)], raw[b] / total, epsilon = 1e-15);
        }
        let ratio = model.transitions[(0, 1)] / model.transitions[(0, 0)];
        assert_abs_diff_eq!(ratio, (-0.5f64).exp(), epsilon = 1e-14);
        let ratio = model.transitions[(0, 2)] / model.transitions[(0, 0)];
        assert_abs_diff_eq!(ratio, (-2.0f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn random_walk_far_off_grid_does_not_underflow() {
        let grid = StateGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let model = build_random_walk_transitions(grid, 1e-3, 100.0).unwrap();
        for row in model.transitions.row_iter() {
            assert_abs_diff_eq!(row.sum(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_state_validation() {
        assert!(build_two_state_transitions(0.0).is_err());
        assert!(build_two_state_transitions(1.0).is_err());
        assert!(build_two_state_transitions(f64::NAN).is_err());
        let m = build_two_state_transitions(0.98).unwrap();
        for row in m.transitions.row_iter() {
            assert_abs_diff_eq!(row.sum(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn memoryless_chain_gives_normalized_emissions() {
        let model = build_two_state_transitions(0.5).unwrap();
        let e = DMatrix::from_row_slice(3, 2, &[-1.0, -3.0, -10.0, -2.0, 0.5, 0.5]);
        let post = forward_backward(&model, &EmissionMatrix::new(e.clone()).unwrap()).unwrap();
        for i in 0..3 {
            let z = e[(i, 0)].exp() + e[(i, 1)].exp();
            assert_abs_diff_eq!(post.gamma[(i, 0)], e[(i, 0)].exp() / z, epsilon = 1e-12);
        }
    }

    #[test]
    fn contradictory_emissions_match_path_enumeration() {
        let model = build_two_state_transitions(0.98).unwrap();
        let e = DMatrix::from_row_slice(2, 2, &[0.0, -8.0, -9.0, 0.0]);
        let post = forward_backward(&model, &EmissionMatrix::new(e.clone()).unwrap()).unwrap();
        let (gamma, evidence) = two_segment_oracle(&model, &e);
        assert!((post.gamma - gamma).abs().max() < 1e-12);
        assert_abs_diff_eq!(post.log_evidence, evidence, epsilon = 1e-12);
    }

    #[test]
    fn constant_emissions_give_uniform_posterior() {
        let grid = StateGrid::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let trans = DMatrix::from_row_slice(
            4,
            4,
            &[0.7, 0.1, 0.1, 0.1, 0.1, 0.7, 0.1, 0.1, 0.1, 0.1, 0.7, 0.1, 0.1, 0.1, 0.1, 0.7],
        );
        let model = TransitionModel::new(grid, uniform(4), trans).unwrap();
        let e = EmissionMatrix::new(DMatrix::from_element(5, 4, -42.0)).unwrap();
        let post = forward_backward(&model, &e).unwrap();
        assert!(post.gamma.iter().all(|&g| (g - 0.25).abs() < 1e-12));
    }

    #[test]
    fn single_segment_is_softmax() {
        let model = build_random_walk_transitions(StateGrid::new(vec![1.0, 2.0, 3.0]).unwrap(), 0.5, 1.0).unwrap();
        let e = DMatrix::from_row_slice(1, 3, &[-700.0, -701.0, -703.0]);
        let post = forward_backward(&model, &EmissionMatrix::new(e).unwrap()).unwrap();
        let w = [1.0, (-1.0f64).exp(), (-3.0f64).exp()];
        let z: f64 = w.iter().sum();
        for a in 0..3 {
            assert_abs_diff_eq!(post.gamma[(0, a)], w[a] / z, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(post.log_evidence, -700.0 + (z / 3.0).ln(), epsilon = 1e-10);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let model = build_two_state_transitions(0.9).unwrap();
        let e = EmissionMatrix::new(DMatrix::zeros(3, 3)).unwrap();
        assert!(matches!(forward_backward(&model, &e), Err(Error::Input(_))));
        assert!(EmissionMatrix::new(DMatrix::from_element(1, 2, f64::NAN)).is_err());
    }

    #[test]
    fn point_estimates() {
        let grid = StateGrid::new(vec![1.0, 2.0, 3.0]).unwrap();
        let m = marginals(&[&[0.25, 0.25, 0.5], &[0.0, 1.0, 0.0]]);
        assert_eq!(point_estimate_mean(&m, &grid), vec![2.25, 2.0]);
        assert_eq!(point_estimate_mode(&m, &grid), vec![3.0, 2.0]);

        let bin = StateGrid::binary();
        let m = marginals(&[&[0.5, 0.5], &[0.3, 0.7], &[1.0, 0.0]]);
        assert_eq!(point_estimate_mean(&m, &bin), vec![0.5, 0.7, 0.0]);
        assert_eq!(point_estimate_mode(&m, &bin), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn grid_validation() {
        assert!(StateGrid::new(vec![]).is_err());
        assert!(StateGrid::new(vec![1.0, 1.0]).is_err());
        assert!(StateGrid::range(1.0, 0.0, 0.1).is_err());
        assert_eq!(StateGrid::range(0.0, 1.0, 0.5).unwrap().values(), &[0.0, 0.5, 1.0]);
    }
}
