use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dsm_core::eigen::write_catalog;
use dsm_core::experiments::output::{create_dir, write_file, write_schedule_csv};
use dsm_core::experiments::run::default_output_dir;
use dsm_core::experiments::{compare_engines, convergence_study, mode_report, run_scenario, Engine, ScenarioConfig};
use dsm_core::{Error, Result};

/// Dark-state spatial mode simulations.
#[derive(Parser)]
#[command(name = "dsm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Preset name (rabi, stirap-seq, stirap-deg) or path to a scenario file.
    #[arg(long)]
    scenario: String,
    /// Override the number of grid points.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Override the time step of the engines that run [ns].
    #[arg(long)]
    dt_ns: Option<f64>,
    /// Output directory (files) or file (schedule dump).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra `key=value` overrides in scenario-file syntax.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the spatial modes and print levels and effective Rabi frequencies.
    Modes {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Number of modes to solve for.
        #[arg(long, default_value_t = 3)]
        count: usize,
    },
    /// Run a scenario and write its output bundle.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// obe, dsp or both.
        #[arg(long)]
        engine: Option<String>,
    },
    /// Run both engines and report max_t |F_obe − F_dsp| per mode.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Rerun under grid and time-step refinement.
    Converge {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Refinement factors.
        #[arg(long, value_delimiter = ',', default_value = "2")]
        factors: Vec<usize>,
        #[arg(long)]
        engine: Option<String>,
    },
    /// Inspect the control schedule.
    Schedule {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Emit (t, s, ΩcR, ΩcL, a_x) as CSV.
        #[arg(long)]
        dump: bool,
        #[arg(long, default_value_t = 2001)]
        samples: usize,
    },
}

fn load(args: &ScenarioArgs, engine: Option<&str>) -> Result<ScenarioConfig> {
    let mut c = ScenarioConfig::from_arg(&args.scenario)?;
    if !args.set.is_empty() {
        let mut text = String::new();
        for kv in &args.set {
            if !kv.contains('=') {
                return Err(Error::Config { line: None, msg: format!("--set expects key=value, got `{kv}`") });
            }
            text.push_str(kv);
            text.push('\n');
        }
        c = c.with_overrides(&text)?;
    }
    if let Some(e) = engine {
        c.engine = Engine::parse(e).ok_or_else(|| Error::Config {
            line: None,
            msg: format!("--engine expects obe, dsp or both, got `{e}`"),
        })?;
    }
    if let Some(n) = args.grid_n {
        c.grid.n = n;
    }
    if let Some(dt) = args.dt_ns {
        if c.engine.runs_obe() {
            c.solver.obe_dt = dt * 1e-9;
        }
        if c.engine.runs_dsp() {
            c.solver.dsp_dt = dt * 1e-9;
        }
    }
    if let Some(out) = &args.out {
        c.output_dir = Some(out.clone());
    }
    c.validate()?;
    Ok(c)
}

fn stdout_io(e: std::io::Error) -> Error {
    Error::Io { path: PathBuf::from("<stdout>"), source: e }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Modes { scenario, count } => {
            let mut c = load(&scenario, None)?;
            // the catalog holds max(3, initial mode) modes; ask for more via a deeper initial mode
            c.initial_mode = c.initial_mode.max(count);
            let s = c.resolve()?;
            print!("{}", mode_report(&s)?);
            if let Some(dir) = &scenario.out {
                create_dir(dir)?;
                write_file(&dir.join("modes.txt"), |w| write_catalog(&s.catalog, w))?;
            }
        }
        Command::Simulate { scenario, engine } => {
            let c = load(&scenario, engine.as_deref())?;
            let report = run_scenario(&c)?;
            for r in &report.runs {
                println!(
                    "{}: {} steps in {:.1} s, final F = [{:.4}, {:.4}, {:.4}]",
                    r.engine.name(),
                    r.trajectory.steps,
                    r.wall_seconds,
                    r.trajectory.final_fidelity(0),
                    r.trajectory.final_fidelity(1),
                    r.trajectory.final_fidelity(2)
                );
            }
            if let Some(dev) = &report.deviation {
                println!("max |F_obe - F_dsp| = {dev:?}");
            }
            println!("wrote {}", report.dir.display());
        }
        Command::Compare { scenario } => {
            let c = load(&scenario, Some("both"))?;
            let cmp = compare_engines(&c)?;
            let mut text = String::new();
            for (n, d) in cmp.max_deviation.iter().enumerate() {
                text.push_str(&format!("max_dF{} = {:e}\n", n + 1, d));
            }
            print!("{text}");
            if let Some(dir) = &scenario.out {
                create_dir(dir)?;
                write_file(&dir.join("compare.txt"), |w| w.write_all(text.as_bytes()))?;
            }
        }
        Command::Converge { scenario, factors, engine } => {
            let c = load(&scenario, engine.as_deref())?;
            let report = convergence_study(&c, &factors)?;
            let mut buf = Vec::new();
            report.write_csv(&mut buf).map_err(stdout_io)?;
            std::io::stdout().write_all(&buf).map_err(stdout_io)?;
            if c.output_dir.is_some() {
                let dir = default_output_dir(&c);
                create_dir(&dir)?;
                write_file(&dir.join("convergence.csv"), |w| w.write_all(&buf))?;
            }
        }
        Command::Schedule { scenario, dump, samples } => {
            if !dump {
                return Err(Error::Usage("schedule needs --dump".into()));
            }
            let c = load(&scenario, None)?;
            let derived = c.medium.derived()?;
            let sched = dsm_core::schedule::ScheduleSpec::new(c.modulation.clone(), c.medium.omega_c, c.duration)?;
            let body = |w: &mut dyn Write| {
                write_schedule_csv(&sched, derived.eta, c.medium.delta_p, c.duration, samples, w)
            };
            match &scenario.out {
                Some(path) => write_file(path, body)?,
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    body(&mut lock).map_err(stdout_io)?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
