//! `simulate`, `analyze` and `compare`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::Serialize;

use crate::cli::config::{AnalysisConfig, BaselineMethod};
use crate::cli::io::{read_series_csv, state_label, write_csv, write_matrix_bin, write_series_csv};
use crate::coupled::{fit, CoupledFit, Estimator};
use crate::error::{Error, Result};
use crate::gp::TimeSeries;
use crate::signals::{generate, pearson_correlation, stationary_baseline_fit, stationary_fit};

/// The series to analyze plus whatever ground truth is available.
#[derive(Debug, Clone)]
pub struct LoadedInput {
    pub series: TimeSeries,
    /// Noise-free signal at the same sample times.
    pub clean: Option<TimeSeries>,
}

pub fn load_input(config: &AnalysisConfig) -> Result<LoadedInput> {
    if let Some(path) = &config.input.csv {
        let series = read_series_csv(path)?;
        let clean = match &config.input.truth_csv {
            Some(p) if p.exists() => {
                let truth = read_series_csv(p)?;
                if truth.times() != series.times() {
                    return Err(Error::Input(format!(
                        "{} does not share the sample times of {}",
                        p.display(),
                        path.display()
                    )));
                }
                Some(truth)
            }
            _ => None,
        };
        return Ok(LoadedInput { series, clean });
    }
    if let Some(sim) = &config.input.simulate {
        let synthetic = generate(&sim.to_spec(config.seed))?;
        return Ok(LoadedInput {
            series: synthetic.noisy,
            clean: Some(synthetic.clean),
        });
    }
    Err(Error::Config("[input] needs either csv or simulate".into()))
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes to JSON");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `clean.csv`, `noisy.csv` and `truth.csv` for the configured signal.
pub fn cmd_simulate(config: &AnalysisConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let sim = config
        .input
        .simulate
        .as_ref()
        .ok_or_else(|| Error::Config("simulate needs an [input.simulate] section".into()))?;
    let synthetic = generate(&sim.to_spec(config.seed))?;
    prepare_dir(out_dir)?;
    let times = synthetic.clean.times();
    let files = vec![out_dir.join("clean.csv"), out_dir.join("noisy.csv"), out_dir.join("truth.csv")];
    write_series_csv(&files[0], times, synthetic.clean.values())?;
    write_series_csv(&files[1], times, synthetic.noisy.values())?;
    write_series_csv(&files[2], times, &synthetic.truth)?;
    Ok(files)
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    log_evidence: f64,
    n_samples: usize,
    n_segments: usize,
    n_states: usize,
    estimator: Estimator,
    runtime_s: f64,
    config: &'a AnalysisConfig,
}

#[derive(Debug)]
pub struct AnalyzeReport {
    pub input: LoadedInput,
    pub fit: CoupledFit,
    pub files: Vec<PathBuf>,
}

/// Runs the coupled fit and writes its artifacts.
pub fn cmd_analyze(config: &AnalysisConfig, out_dir: &Path) -> Result<AnalyzeReport> {
    let started = Instant::now();
    let model = config.model_config()?;
    let input = load_input(config)?;
    let fitted = fit(&input.series, &model)?;
    prepare_dir(out_dir)?;

    let times = input.series.times();
    let reg = &fitted.regression;
    let mean_path = out_dir.join("posterior_mean.csv");
    write_csv(
        &mean_path,
        &["time".into(), "mean".into(), "variance".into()],
        (0..times.len()).map(|j| vec![times[j], reg.posterior_mean[j], reg.posterior_variance[j]]),
    )?;

    let support = &fitted.windows.support_points;
    let states = model.grid.values();
    let mut header = vec!["segment_time".to_string()];
    header.extend(states.iter().map(|&v| format!("p_{}", state_label(v))));
    let posterior_path = out_dir.join("state_posterior.csv");
    write_csv(
        &posterior_path,
        &header,
        fitted.marginals.gamma.row_iter().enumerate().map(|(i, row)| {
            let mut r = vec![support[i]];
            r.extend(row.iter().copied());
            r
        }),
    )?;

    let estimates_path = out_dir.join("point_estimates.csv");
    write_csv(
        &estimates_path,
        &["segment_time".into(), "estimate".into()],
        support.iter().zip(&fitted.point_estimates).map(|(&t, &v)| vec![t, v]),
    )?;

    let cov_path = out_dir.join("covariance.bin");
    write_matrix_bin(&cov_path, &fitted.global_cov.matrix)?;

    let summary_path = out_dir.join("summary.json");
    let summary = Summary {
        log_evidence: fitted.marginals.log_evidence,
        n_samples: input.series.len(),
        n_segments: fitted.plan.len(),
        n_states: model.grid.len(),
        estimator: model.estimator,
        runtime_s: started.elapsed().as_secs_f64(),
        config,
    };
    write_json(&summary_path, &summary)?;
    info!("analysis written to {}", out_dir.display());
    Ok(AnalyzeReport {
        input,
        fit: fitted,
        files: vec![mean_path, posterior_path, estimates_path, cov_path, summary_path],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodResult {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation: Option<f64>,
    /// Parameter picked by marginal likelihood for grid baselines.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected_param: Option<f64>,
    #[serde(skip)]
    pub mean: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub truth_available: bool,
    pub methods: Vec<MethodResult>,
}

/// Coupled fit against every configured stationary baseline.
pub fn cmd_compare(config: &AnalysisConfig, out_dir: &Path) -> Result<Comparison> {
    if config.baselines.is_empty() {
        return Err(Error::Config("compare needs at least one [[baselines]] entry".into()));
    }
    let model = config.model_config()?;
    let input = load_input(config)?;
    let noise = model.regression_noise.unwrap_or(model.noise);
    let series = &input.series;

    let coupled = fit(series, &model)?;
    let mut methods = vec![MethodResult {
        name: "coupled".into(),
        correlation: None,
        selected_param: None,
        mean: coupled.regression.posterior_mean,
    }];
    for baseline in &config.baselines {
        let stage = format!("baseline {}", baseline.name);
        let (mean, selected_param) = match &baseline.method {
            BaselineMethod::Fixed { kernel } => (
                stationary_fit(series, kernel, noise)
                    .map_err(|e| e.in_stage(stage.clone()))?
                    .posterior_mean,
                None,
            ),
            BaselineMethod::MlGrid { family, grid } => {
                let grid = grid.build()?;
                let fitted = stationary_baseline_fit(series, family, grid.values(), noise)
                    .map_err(|e| e.in_stage(stage.clone()))?;
                (fitted.regression.posterior_mean, Some(fitted.best_param))
            }
        };
        methods.push(MethodResult {
            name: baseline.name.clone(),
            correlation: None,
            selected_param,
            mean,
        });
    }
    if let Some(clean) = &input.clean {
        for m in &mut methods {
            m.correlation = Some(pearson_correlation(&m.mean, clean.values())?);
        }
    }

    prepare_dir(out_dir)?;
    for (idx, m) in methods.iter().enumerate() {
        write_series_csv(&out_dir.join(format!("mean_{idx}_{}.csv", m.name)), series.times(), &m.mean)?;
    }
    let comparison = Comparison {
        truth_available: input.clean.is_some(),
        methods,
    };
    write_json(&out_dir.join("comparison.json"), &comparison)?;
    Ok(comparison)
}
