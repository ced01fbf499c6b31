use crate::error::{Error, Result};
use crate::model::units::{GAMMA_D1, MM, MS, RAD_KHZ};
use crate::model::MediumParams;
use crate::potentials::FluxoniumParams;
use crate::schedule::{GaussianPulse, Modulation};

use super::config::{Engine, GridConfig, ScenarioConfig, SolverSettings};

pub const PRESET_NAMES: [&str; 3] = ["rabi", "stirap-seq", "stirap-deg"];

fn medium(length: f64, omega_c: f64) -> MediumParams {
    MediumParams {
        gamma_e: GAMMA_D1,
        gamma_d: 1e-3 * GAMMA_D1,
        delta_p: 4.6 * GAMMA_D1,
        optical_depth: 800.0,
        length,
        omega_c,
    }
}

fn base(name: &str, medium: MediumParams, potential: FluxoniumParams, modulation: Modulation, duration: f64, snapshots: &[f64]) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        medium,
        potential,
        grid: GridConfig::default(),
        modulation,
        engine: Engine::Obe,
        duration,
        initial_mode: 1,
        solver: SolverSettings::default(),
        output_dir: None,
        snapshot_times: snapshots.iter().map(|t| t * MS).collect(),
    }
}

/// Built-in parameter sets for the Rabi, sequential-STIRAP and degenerate
/// single-pulse STIRAP protocols.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    match name {
        "rabi" => Ok(base(
            name,
            medium(8.0 * MM, 1.5 * GAMMA_D1),
            FluxoniumParams {
                c1: 3.06e-3 * GAMMA_D1,
                alpha: 1.8f64.sqrt(),
                lambda_f: 2.89,
                phi: 3.14,
            },
            Modulation::Sinusoidal {
                beta: 0.07,
                nu: 376.4 * RAD_KHZ,
                t_start: 0.06 * MS,
            },
            0.3 * MS,
            &[0.06, 0.15, 0.21],
        )),
        "stirap-seq" => Ok(base(
            name,
            medium(20.0 * MM, 2.0 * GAMMA_D1),
            FluxoniumParams {
                c1: 6.12e-4 * GAMMA_D1,
                alpha: 40f64.sqrt(),
                lambda_f: 11.56,
                phi: 6.0,
            },
            Modulation::GaussianPulses(vec![
                GaussianPulse {
                    beta: 0.055,
                    nu: 490.0 * RAD_KHZ,
                    epsilon: 0.85 * MS,
                    tau: 0.3 * MS,
                },
                GaussianPulse {
                    beta: 0.055,
                    nu: 684.0 * RAD_KHZ,
                    epsilon: 1.15 * MS,
                    tau: 0.3 * MS,
                },
            ]),
            2.0 * MS,
            // the middle panel is labelled both 1.0 ms and 1.03 ms
            &[0.1, 1.0, 1.03, 1.9],
        )),
        "stirap-deg" => Ok(base(
            name,
            medium(20.0 * MM, 2.0 * GAMMA_D1),
            FluxoniumParams {
                c1: 6.12e-4 * GAMMA_D1,
                alpha: 50f64.sqrt(),
                lambda_f: 11.56,
                phi: 6.25,
            },
            Modulation::GaussianPulses(vec![GaussianPulse {
                beta: 0.212,
                nu: 1442.0 * RAD_KHZ,
                epsilon: 0.5 * MS,
                tau: 0.15 * MS,
            }]),
            1.0 * MS,
            &[0.1, 0.5, 0.9],
        )),
        other => Err(Error::config(format!(
            "unknown preset `{other}` (expected one of {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}
