//! Presets, scenario files, output bundles, engine comparison and
//! convergence studies.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{Engine, GridConfig, ScenarioConfig, SolverSettings};
pub use presets::{preset, PRESET_NAMES};
pub use run::{
    compare_engines, convergence_study, execute, mode_report, run_scenario, Comparison, ConvergenceReport,
    EngineRun, Refinement, RunReport,
};
