//! TOML analysis configuration.
//!
//! ```toml
//! seed = 7
//!
//! [input]
//! csv = "noisy.csv"          # omit to simulate from [input.simulate]
//! truth_csv = "clean.csv"    # optional, used by `compare`
//!
//! [input.simulate]
//! signal = "chirp"
//! t_start_s = 0.0
//! t_end_s = 2.5
//! sample_rate_hz = 100.0
//! noise_std = 0.5
//!
//! [windows]
//! spacing_s = 0.1
//! width_s = 0.25
//! truncation_radius = 3.0
//!
//! [family]
//! kind = "frequency"
//! d_s = 0.4
//!
//! [grid]
//! kind = "frequency_range"
//! freq_min_hz = 0.1
//! freq_max_hz = 12.0
//! freq_step_hz = 0.4
//! estimator = "mean"
//!
//! [transition]
//! kind = "random_walk"
//! step_std = 0.2
//! autoregressive_coeff = 1.0
//!
//! [noise]
//! noise_std = 0.5
//!
//! [output]
//! dir = "out"
//!
//! [[baselines]]
//! name = "stationary_oscillatory"
//! kind = "ml_grid"
//! family = { kind = "frequency", d_s = 0.4 }
//! grid = { kind = "frequency_range", freq_min_hz = 0.1, freq_max_hz = 12.0, freq_step_hz = 0.4 }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coupled::{CoupledModelConfig, Estimator, LocalModelFamily, TransitionSpec, WindowConfig};
use crate::error::{Error, Result};
use crate::gp::NoiseModel;
use crate::kernels::KernelSpec;
use crate::markov::StateGrid;
use crate::signals::{SignalShape, SyntheticSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub input: InputSection,
    pub windows: WindowConfig,
    pub family: LocalModelFamily,
    pub grid: GridSection,
    pub transition: TransitionSpec,
    pub noise: NoiseSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub baselines: Vec<BaselineSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSection {
    #[serde(flatten)]
    pub shape: SignalShape,
    pub noise_std: f64,
}

impl SimulateSection {
    pub fn to_spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            shape: self.shape.clone(),
            noise_std: self.noise_std,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridValues {
    FrequencyRange {
        freq_min_hz: f64,
        freq_max_hz: f64,
        freq_step_hz: f64,
    },
    Binary,
    Explicit {
        values: Vec<f64>,
    },
}

impl GridValues {
    pub fn build(&self) -> Result<StateGrid> {
        match self {
            GridValues::FrequencyRange {
                freq_min_hz,
                freq_max_hz,
                freq_step_hz,
            } => StateGrid::range(*freq_min_hz, *freq_max_hz, *freq_step_hz),
            GridValues::Binary => Ok(StateGrid::binary()),
            GridValues::Explicit { values } => StateGrid::new(values.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSection {
    #[serde(flatten)]
    pub values: GridValues,
    pub estimator: Estimator,
}

/// Exactly one of `noise_std` and `lambda` must be given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Overrides the noise variance of the final whole-series regression.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regression_lambda: Option<f64>,
}

impl NoiseSection {
    pub fn model(&self) -> Result<NoiseModel> {
        match (self.noise_std, self.lambda) {
            (Some(std), None) => NoiseModel::from_std(std),
            (None, Some(lambda)) => NoiseModel::new(lambda),
            _ => Err(Error::Config(
                "[noise] needs exactly one of noise_std or lambda".into(),
            )),
        }
    }

    pub fn regression_model(&self) -> Result<Option<NoiseModel>> {
        self.regression_lambda.map(NoiseModel::new).transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    #[serde(default = "default_output_dir")]
    pub dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_output_dir(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub name: String,
    #[serde(flatten)]
    pub method: BaselineMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineMethod {
    /// One fixed stationary kernel.
    Fixed { kernel: KernelSpec },
    /// One-parameter kernel family, parameter chosen by marginal likelihood.
    MlGrid {
        family: LocalModelFamily,
        grid: GridValues,
    },
}

impl AnalysisConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: AnalysisConfig = toml::from_str(text).map_err(|e| {
            // the parser's own Display draws a multi-line source excerpt
            let line = e.span().map_or(1, |s| text[..s.start].matches('\n').count() + 1);
            Error::Config(format!("invalid configuration at line {line}: {}", e.message().trim()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| e.in_stage(format!("config {}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    /// Cross-field validation; also run by [`AnalysisConfig::model_config`].
    pub fn validate(&self) -> Result<()> {
        self.model_config()?;
        if let Some(sim) = &self.input.simulate {
            sim.to_spec(self.seed).validate()?;
        }
        for b in &self.baselines {
            match &b.method {
                BaselineMethod::Fixed { kernel } => kernel.validate()?,
                BaselineMethod::MlGrid { family, grid } => family.validate(&grid.build()?)?,
            }
        }
        Ok(())
    }

    pub fn model_config(&self) -> Result<CoupledModelConfig> {
        let grid = self.grid.values.build()?;
        self.family.validate(&grid)?;
        self.transition.build(&grid)?;
        for (name, v) in [
            ("windows.spacing_s", self.windows.spacing_s),
            ("windows.width_s", self.windows.width_s),
            ("windows.truncation_radius", self.windows.truncation_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(CoupledModelConfig {
            family: self.family.clone(),
            grid,
            transition: self.transition.clone(),
            windows: self.windows,
            noise: self.noise.model()?,
            regression_noise: self.noise.regression_model()?,
            estimator: self.grid.estimator,
        })
    }
}
