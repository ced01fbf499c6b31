use std::path::{Path, PathBuf};
use std::thread;

use crate::analysis::{max_deviation, Trajectory};
use crate::eigen::{dipole_integral, effective_rabi};
use crate::error::{Error, Result};
use crate::scenario::{Scenario, RECORDED_MODES};
use crate::schedule::Modulation;
use crate::{dsp, obe};

use super::config::{Engine, ScenarioConfig};
use super::output::{
    create_dir, snapshot_file_name, write_fidelity_csv, write_file, write_norm_csv, write_snapshot_csv,
    write_summary,
};

/// One engine's contribution to a run.
#[derive(Debug, Clone)]
pub struct EngineRun {
    pub engine: Engine,
    pub dt: f64,
    pub trajectory: Trajectory,
    pub wall_seconds: f64,
}

fn run_obe(scenario: &Scenario, config: &ScenarioConfig) -> Result<EngineRun> {
    let cfg = config.obe_config();
    let run = obe::run(scenario, &cfg)?;
    Ok(EngineRun {
        engine: Engine::Obe,
        dt: cfg.dt,
        trajectory: run.trajectory,
        wall_seconds: run.wall_seconds,
    })
}

fn run_dsp(scenario: &Scenario, config: &ScenarioConfig) -> Result<EngineRun> {
    let cfg = config.dsp_config();
    let run = dsp::run(scenario, &cfg)?;
    Ok(EngineRun {
        engine: Engine::Dsp,
        dt: cfg.dt,
        trajectory: run.trajectory,
        wall_seconds: run.wall_seconds,
    })
}

/// Run the configured engine(s) on an already resolved scenario. With
/// `Engine::Both` the two engines run on separate threads.
pub fn execute(scenario: &Scenario, config: &ScenarioConfig) -> Result<Vec<EngineRun>> {
    match config.engine {
        Engine::Obe => Ok(vec![run_obe(scenario, config)?]),
        Engine::Dsp => Ok(vec![run_dsp(scenario, config)?]),
        Engine::Both => {
            let (o, d) = thread::scope(|s| {
                let o = s.spawn(|| run_obe(scenario, config));
                let d = run_dsp(scenario, config);
                (o.join().expect("obe thread panicked"), d)
            });
            Ok(vec![o?, d?])
        }
    }
}

/// Per-mode max_t |F_n^a(t) − F_n^b(t)| over the samples of `a`.
pub fn trajectory_deviation(a: &Trajectory, b: &Trajectory) -> Vec<f64> {
    let modes = a.fidelities.len().min(b.fidelities.len());
    (0..modes)
        .map(|n| {
            if a.times == b.times {
                max_deviation(&a.fidelities[n], &b.fidelities[n])
            } else {
                a.times
                    .iter()
                    .zip(&a.fidelities[n])
                    .map(|(&t, &f)| (f - b.fidelity_at(n, t)).abs())
                    .fold(0.0, f64::max)
            }
        })
        .collect()
}

fn write_bundle(dir: &Path, scenario: &Scenario, config: &ScenarioConfig, run: &EngineRun) -> Result<()> {
    create_dir(dir)?;
    let traj = &run.trajectory;
    write_file(&dir.join("fidelity.csv"), |w| write_fidelity_csv(traj, w))?;
    write_file(&dir.join("norm.csv"), |w| write_norm_csv(traj, w))?;
    for snap in &traj.snapshots {
        write_file(&dir.join(snapshot_file_name(snap.t)), |w| write_snapshot_csv(snap, w))?;
    }
    let text = config.to_text();
    write_file(&dir.join("config.resolved"), |w| w.write_all(text.as_bytes()))?;
    write_file(&dir.join("summary.txt"), |w| {
        write_summary(scenario, run.engine.name(), run.dt, traj, run.wall_seconds, w)
    })
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub runs: Vec<EngineRun>,
    /// Cross-engine deviation per mode when both engines ran.
    pub deviation: Option<Vec<f64>>,
}

pub fn default_output_dir(config: &ScenarioConfig) -> PathBuf {
    config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(&config.name))
}

/// Resolve, run and write fidelity.csv, norm.csv, snapshots, config.resolved
/// and summary.txt. With both engines each gets its own subdirectory.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunReport> {
    let dir = default_output_dir(config);
    create_dir(&dir)?;
    let scenario = config.resolve()?;
    let runs = execute(&scenario, config)?;
    let mut deviation = None;
    if let [a, b] = runs.as_slice() {
        for r in &runs {
            write_bundle(&dir.join(r.engine.name()), &scenario, config, r)?;
        }
        let dev = trajectory_deviation(&a.trajectory, &b.trajectory);
        write_file(&dir.join("compare.txt"), |w| write_deviation(&dev, w))?;
        deviation = Some(dev);
    } else {
        write_bundle(&dir, &scenario, config, &runs[0])?;
    }
    Ok(RunReport { dir, runs, deviation })
}

fn write_deviation(dev: &[f64], w: &mut dyn std::io::Write) -> std::io::Result<()> {
    for (n, d) in dev.iter().enumerate() {
        writeln!(w, "max_dF{} = {:e}", n + 1, d)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub obe: EngineRun,
    pub dsp: EngineRun,
    /// max_t |F_n^obe − F_n^dsp| for n = 1..=3.
    pub max_deviation: Vec<f64>,
}

/// Run both engines on the same resolved scenario.
pub fn compare_engines(config: &ScenarioConfig) -> Result<Comparison> {
    if config.engine != Engine::Both {
        return Err(Error::Usage("compare_engines needs run.engine = both".into()));
    }
    let scenario = config.resolve()?;
    compare_resolved(&scenario, config)
}

pub fn compare_resolved(scenario: &Scenario, config: &ScenarioConfig) -> Result<Comparison> {
    let mut both = config.clone();
    both.engine = Engine::Both;
    let mut runs = execute(scenario, &both)?.into_iter();
    let (obe, dsp) = (runs.next().expect("obe run"), runs.next().expect("dsp run"));
    let max_deviation = trajectory_deviation(&obe.trajectory, &dsp.trajectory);
    Ok(Comparison { obe, dsp, max_deviation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    Grid,
    Dt,
}

impl Refinement {
    pub fn name(&self) -> &'static str {
        match self {
            Refinement::Grid => "grid",
            Refinement::Dt => "dt",
        }
    }
}

/// Change between consecutive refinement levels.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub refinement: Refinement,
    pub engine: Engine,
    pub from_factor: usize,
    pub factor: usize,
    pub max_deviation: Vec<f64>,
    /// |Δω_n| / ω_n of the mode levels (grid refinement only).
    pub level_shift: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn write_csv(&self, w: &mut dyn std::io::Write) -> std::io::Result<()> {
        writeln!(w, "refinement,engine,from,to,dF1,dF2,dF3,dlevel1,dlevel2,dlevel3")?;
        for r in &self.rows {
            write!(w, "{},{},{},{}", r.refinement.name(), r.engine.name(), r.from_factor, r.factor)?;
            for n in 0..RECORDED_MODES {
                write!(w, ",{:e}", r.max_deviation.get(n).copied().unwrap_or(f64::NAN))?;
            }
            for n in 0..RECORDED_MODES {
                write!(w, ",{:e}", r.level_shift.get(n).copied().unwrap_or(0.0))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

struct Level {
    refinement: Refinement,
    factor: usize,
    levels: Vec<f64>,
    runs: Vec<EngineRun>,
}

fn refine(config: &ScenarioConfig, refinement: Refinement, factor: usize) -> ScenarioConfig {
    let mut c = config.clone();
    match refinement {
        Refinement::Grid => c.grid.n = config.grid.n * factor,
        Refinement::Dt => {
            c.solver.obe_dt /= factor as f64;
            c.solver.dsp_dt /= factor as f64;
        }
    }
    c
}

fn run_level(config: &ScenarioConfig, refinement: Refinement, factor: usize) -> Result<Level> {
    let c = refine(config, refinement, factor);
    let scenario = c.resolve()?;
    let levels = (0..scenario.catalog.len()).map(|n| scenario.catalog.level(n)).collect();
    let runs = execute(&scenario, &c)?;
    if let Some(dir) = &config.output_dir {
        for r in &runs {
            let sub = dir.join(format!("{}_x{factor}", refinement.name())).join(r.engine.name());
            write_bundle(&sub, &scenario, &c, r)?;
        }
    }
    Ok(Level { refinement, factor, levels, runs })
}

/// Rerun the scenario with the grid and the time step refined by each factor
/// (1 is always included as the baseline) and tabulate the change of F_n(t)
/// between consecutive levels. Levels run concurrently; with an output
/// directory each writes to `<dir>/<grid|dt>_x<factor>/<engine>/`.
pub fn convergence_study(config: &ScenarioConfig, factors: &[usize]) -> Result<ConvergenceReport> {
    let mut factors: Vec<usize> = factors.to_vec();
    if factors.iter().any(|&f| f == 0) {
        return Err(Error::Usage("refinement factors must be positive".into()));
    }
    factors.push(1);
    factors.sort_unstable();
    factors.dedup();

    let jobs: Vec<(Refinement, usize)> = [Refinement::Grid, Refinement::Dt]
        .into_iter()
        .flat_map(|r| factors.iter().filter(move |&&f| f > 1 || r == Refinement::Grid).map(move |&f| (r, f)))
        .collect();
    let results: Vec<Result<Level>> = thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(r, f)| s.spawn(move || run_level(config, r, f)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("refinement thread panicked")).collect()
    });
    let levels = results.into_iter().collect::<Result<Vec<_>>>()?;
    let baseline = levels
        .iter()
        .find(|l| l.factor == 1)
        .expect("baseline level is always scheduled");

    let mut rows = Vec::new();
    for refinement in [Refinement::Grid, Refinement::Dt] {
        let mut prev = baseline;
        for level in levels.iter().filter(|l| l.refinement == refinement && l.factor > 1) {
            for (a, b) in prev.runs.iter().zip(&level.runs) {
                let level_shift = if refinement == Refinement::Grid {
                    prev.levels
                        .iter()
                        .zip(&level.levels)
                        .map(|(p, q)| ((q - p) / p).abs())
                        .collect()
                } else {
                    Vec::new()
                };
                rows.push(ConvergenceRow {
                    refinement,
                    engine: a.engine,
                    from_factor: prev.factor,
                    factor: level.factor,
                    max_deviation: trajectory_deviation(&a.trajectory, &b.trajectory),
                    level_shift,
                });
            }
            prev = level;
        }
    }
    Ok(ConvergenceReport { rows })
}

/// Largest modulation depth in the schedule.
pub fn peak_beta(modulation: &Modulation) -> f64 {
    match modulation {
        Modulation::Static => 0.0,
        Modulation::Sinusoidal { beta, .. } => beta.abs(),
        Modulation::GaussianPulses(p) => p.iter().map(|g| g.beta.abs()).fold(0.0, f64::max),
    }
}

/// |Ω_nm| for every recorded pair n > m at modulation depth `beta`.
pub fn rabi_table(scenario: &Scenario, beta: f64) -> Result<Vec<(usize, usize, f64)>> {
    let cat = &scenario.catalog;
    let mut out = Vec::new();
    for n in 1..cat.len().min(RECORDED_MODES) {
        for m in 0..n {
            let omega = effective_rabi(
                beta,
                scenario.medium.omega_c,
                scenario.derived.eta,
                cat.psi(n),
                cat.psi(m),
            )?;
            out.push((n + 1, m + 1, omega.norm()));
        }
    }
    Ok(out)
}

/// Text report for the `modes` command.
pub fn mode_report(scenario: &Scenario) -> Result<String> {
    use std::fmt::Write as _;
    let mut s = String::new();
    let cat = &scenario.catalog;
    let _ = writeln!(s, "scenario {} (n = {}, dx = {:.4e} m)", scenario.name, scenario.grid.n, scenario.grid.dx());
    let _ = writeln!(s, "mode  omega [rad/s]        level [rad.kHz]");
    for n in 0..cat.len() {
        let _ = writeln!(s, "{:>4}  {:<20.6e} {:.3}", n + 1, cat.omega(n), cat.level(n) * 1e-3);
    }
    let beta = peak_beta(scenario.schedule.modulation());
    if beta > 0.0 {
        let _ = writeln!(s, "effective Rabi frequencies at beta = {beta}:");
        for (n, m, w) in rabi_table(scenario, beta)? {
            let d = dipole_integral(cat.psi(n - 1), cat.psi(m - 1))?;
            let _ = writeln!(
                s,
                "  |Omega_{n}{m}| = {:.3} rad.kHz  (2pi/Omega = {:.4} ms, dipole {:.4e} 1/m)",
                w * 1e-3,
                2.0 * std::f64::consts::PI / w * 1e3,
                d
            );
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::preset;

    fn tiny(name: &str) -> ScenarioConfig {
        let mut c = preset(name).unwrap();
        c.grid.n = 128;
        c.duration = 2e-6;
        c.solver.record_interval = 5e-7;
        c.snapshot_times = vec![1e-6];
        c
    }

    #[test]
    fn zero_initial_state_has_no_deviation() {
        let mut c = tiny("rabi");
        c.engine = Engine::Both;
        c.solver.init_amplitude = 0.0;
        let cmp = compare_engines(&c).unwrap();
        assert_eq!(cmp.max_deviation, vec![0.0; 3]);
    }

    #[test]
    fn compare_requires_both() {
        assert!(matches!(compare_engines(&tiny("rabi")), Err(Error::Usage(_))));
    }

    #[test]
    fn run_writes_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny("rabi");
        c.engine = Engine::Dsp;
        c.output_dir = Some(dir.path().to_path_buf());
        let report = run_scenario(&c).unwrap();
        for f in ["fidelity.csv", "norm.csv", "config.resolved", "summary.txt", "snapshot_1us.csv"] {
            assert!(report.dir.join(f).exists(), "{f} missing");
        }
        let echoed = ScenarioConfig::load(report.dir.join("config.resolved")).unwrap();
        assert_eq!(echoed, c);
    }

    #[test]
    fn tiny_duration_converges_trivially() {
        let mut c = tiny("rabi");
        c.engine = Engine::Dsp;
        c.duration = 1e-8;
        c.solver.init_amplitude = 0.0;
        let report = convergence_study(&c, &[2]).unwrap();
        assert_eq!(report.rows.len(), 2);
        for r in &report.rows {
            assert!(r.max_deviation.iter().all(|d| *d == 0.0));
        }
    }
}
