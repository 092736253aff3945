//! Named parameter sets for the three reference analyses.

use std::path::PathBuf;

use crate::cli::config::{
    AnalysisConfig, BaselineMethod, BaselineSpec, GridSection, GridValues, InputSection, NoiseSection,
    OutputSection, SimulateSection,
};
use crate::coupled::{Estimator, LocalModelFamily, TransitionSpec, WindowConfig};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::signals::SyntheticSpec;

pub const PRESET_NAMES: [&str; 3] = ["chirp-paper", "twostate-paper", "meg-alpha"];

pub fn preset(name: &str) -> Result<AnalysisConfig> {
    match name {
        "chirp-paper" => Ok(chirp_paper()),
        "twostate-paper" => Ok(twostate_paper()),
        "meg-alpha" => Ok(meg_alpha()),
        other => Err(Error::Config(format!(
            "unknown preset {other:?}; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

fn simulate(spec: SyntheticSpec) -> InputSection {
    InputSection {
        csv: None,
        truth_csv: None,
        simulate: Some(SimulateSection {
            shape: spec.shape,
            noise_std: spec.noise_std,
        }),
    }
}

fn frequency_grid() -> GridValues {
    GridValues::FrequencyRange {
        freq_min_hz: 0.1,
        freq_max_hz: 12.0,
        freq_step_hz: 0.4,
    }
}

/// Frequency-tracking model for `sin(2πt + 4πt²)` sampled at 100 Hz on [0, 2.5] s.
pub fn chirp_paper() -> AnalysisConfig {
    AnalysisConfig {
        seed: 0,
        input: simulate(SyntheticSpec::chirp_paper(0)),
        windows: WindowConfig {
            spacing_s: 0.1,
            width_s: 0.25,
            truncation_radius: 3.0,
        },
        family: LocalModelFamily::Frequency { d: 0.4 },
        grid: GridSection {
            values: frequency_grid(),
            estimator: Estimator::Mean,
        },
        transition: TransitionSpec::RandomWalk {
            step_std: 0.2,
            autoregressive_coeff: 1.0,
        },
        noise: NoiseSection {
            noise_std: Some(0.5),
            ..Default::default()
        },
        output: OutputSection {
            dir: PathBuf::from("out/chirp-paper"),
        },
        baselines: vec![BaselineSpec {
            name: "stationary_oscillatory".into(),
            method: BaselineMethod::MlGrid {
                family: LocalModelFamily::Frequency { d: 0.4 },
                grid: frequency_grid(),
            },
        }],
    }
}

/// Broadband/oscillatory switch on the two-bump signal with a 5 Hz burst.
///
/// Kernel time scales are 0.2 s (squared scale 0.04 s²).
pub fn twostate_paper() -> AnalysisConfig {
    let broadband = KernelSpec::squared_exponential(0.2);
    let oscillatory = KernelSpec::oscillatory(0.2, 5.0);
    AnalysisConfig {
        seed: 0,
        input: simulate(SyntheticSpec::two_state_paper(0)),
        windows: WindowConfig {
            spacing_s: 0.05,
            width_s: 0.4,
            truncation_radius: 3.0,
        },
        family: LocalModelFamily::Switch {
            broadband: broadband.clone(),
            oscillatory: oscillatory.clone(),
        },
        grid: GridSection {
            values: GridValues::Binary,
            estimator: Estimator::Mode,
        },
        transition: TransitionSpec::TwoState { stay_probability: 0.98 },
        noise: NoiseSection {
            noise_std: Some(0.3),
            ..Default::default()
        },
        output: OutputSection {
            dir: PathBuf::from("out/twostate-paper"),
        },
        baselines: vec![
            BaselineSpec {
                name: "stationary_squared_exponential".into(),
                method: BaselineMethod::Fixed { kernel: broadband },
            },
            BaselineSpec {
                name: "stationary_oscillatory".into(),
                method: BaselineMethod::Fixed { kernel: oscillatory },
            },
        ],
    }
}

/// Exponential/alpha-band switch for 300 Hz recordings.
///
/// Oscillatory time scale √0.03 s at 10 Hz; noise variance 0.5 against the
/// unit prior variance.
pub fn meg_alpha() -> AnalysisConfig {
    let broadband = KernelSpec::exponential(0.3);
    let oscillatory = KernelSpec::oscillatory(0.03f64.sqrt(), 10.0);
    AnalysisConfig {
        seed: 0,
        input: simulate(SyntheticSpec::alpha_burst(0)),
        windows: WindowConfig {
            spacing_s: 0.05,
            width_s: 0.4,
            truncation_radius: 3.0,
        },
        family: LocalModelFamily::Switch {
            broadband: broadband.clone(),
            oscillatory: oscillatory.clone(),
        },
        grid: GridSection {
            values: GridValues::Binary,
            estimator: Estimator::Mode,
        },
        transition: TransitionSpec::TwoState { stay_probability: 0.98 },
        noise: NoiseSection {
            lambda: Some(0.5),
            ..Default::default()
        },
        output: OutputSection {
            dir: PathBuf::from("out/meg-alpha"),
        },
        baselines: vec![
            BaselineSpec {
                name: "stationary_exponential".into(),
                method: BaselineMethod::Fixed { kernel: broadband },
            },
            BaselineSpec {
                name: "stationary_oscillatory".into(),
                method: BaselineMethod::Fixed { kernel: oscillatory },
            },
        ],
    }
}
