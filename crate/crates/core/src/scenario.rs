use crate::eigen::{build_hamiltonian, solve_modes, ModeCatalog};
use crate::error::{Error, Result};
use crate::model::{DerivedParams, MediumParams, RealField, SpatialGrid};
use crate::potentials::{detuning_profile, fluxonium, AxCorrection, FluxoniumParams, PotentialProfile};
use crate::schedule::{Modulation, ScheduleSpec};

/// Number of modes whose fidelity is tracked (F1, F2, F3).
pub const RECORDED_MODES: usize = 3;

/// Everything an engine needs, fully resolved and validated.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub medium: MediumParams,
    pub derived: DerivedParams,
    pub fluxonium: FluxoniumParams,
    pub grid: SpatialGrid,
    pub potential: PotentialProfile,
    /// Realized control detuning Δc(x).
    pub detuning: RealField,
    pub catalog: ModeCatalog,
    pub schedule: ScheduleSpec,
    pub duration: f64,
    /// Zero-based index of the initially populated mode.
    pub initial_mode: usize,
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: String,
    pub medium: MediumParams,
    pub fluxonium: FluxoniumParams,
    pub grid: SpatialGrid,
    pub modulation: Modulation,
    pub duration: f64,
    pub initial_mode: usize,
    /// Fold the RMS |A_x|²/(2m) estimate into Δc(x).
    pub ax_correction: bool,
    pub snapshot_times: Vec<f64>,
}

impl Scenario {
    pub fn build(spec: ScenarioSpec) -> Result<Self> {
        let derived = spec.medium.derived()?;
        let schedule = ScheduleSpec::new(spec.modulation, spec.medium.omega_c, spec.duration)?;
        let potential = fluxonium(&spec.fluxonium, &spec.grid)?.with_dephasing(spec.medium.gamma_d);
        let correction = spec.ax_correction.then(|| AxCorrection {
            ax_rms: rms_vector_potential(&schedule, &derived, spec.medium.delta_p, spec.duration),
            m_reduced: derived.m_reduced,
        });
        let detuning = detuning_profile(&potential, spec.medium.delta_p, correction);
        let hamiltonian = build_hamiltonian(&spec.grid, derived.m_reduced, &potential.u)?;
        let modes = RECORDED_MODES.max(spec.initial_mode + 1);
        let catalog = solve_modes(&hamiltonian, modes)?;
        if spec.snapshot_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::Parameter("snapshot times must be non-negative".into()));
        }
        Ok(Self {
            name: spec.name,
            medium: spec.medium,
            derived,
            fluxonium: spec.fluxonium,
            grid: spec.grid,
            potential,
            detuning,
            catalog,
            schedule,
            duration: spec.duration,
            initial_mode: spec.initial_mode,
            snapshot_times: spec.snapshot_times,
        })
    }
}

fn rms_vector_potential(schedule: &ScheduleSpec, derived: &DerivedParams, delta_p: f64, duration: f64) -> f64 {
    const SAMPLES: usize = 10_000;
    let sum: f64 = (0..SAMPLES)
        .map(|i| {
            let t = duration * i as f64 / (SAMPLES - 1) as f64;
            schedule.ax_reduced(derived.eta, delta_p, t).powi(2)
        })
        .sum();
    (sum / SAMPLES as f64).sqrt()
}
