//! Line-oriented `key = value` scenario files.
//!
//! ```text
//! # start from a preset and override a few entries
//! preset = rabi
//! medium.omega_c = 1.6 Gamma
//! schedule.beta = 0.05
//! grid.n = 512
//! output.snapshots = 0.06 ms, 0.15 ms
//! ```
//!
//! Bare numbers are read in canonical units: rad/s for rates, m for
//! `medium.length` and `grid.*`, s for times, mm for `potential.alpha` and
//! `potential.lambda_f`, rad/s/mm² for `potential.c1`. Accepted suffixes:
//! `Gamma` (multiples of `medium.gamma_e`), `MHz_x2pi`, `radkHz` for rates;
//! `mm` for lengths; `ms`, `us`, `ns` for times. `sqrt(x)` is accepted
//! wherever a number is.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dsp::DspSolverConfig;
use crate::error::{Error, Result};
use crate::model::units::{MHZ_X2PI, MM, MS, NS, RAD_KHZ, US};
use crate::model::{MediumParams, SpatialGrid};
use crate::obe::{AtomScheme, ObeSolverConfig, ProbeModel};
use crate::potentials::FluxoniumParams;
use crate::scenario::{Scenario, ScenarioSpec};
use crate::schedule::{GaussianPulse, Modulation};

use super::presets::preset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Obe,
    Dsp,
    Both,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Obe => "obe",
            Engine::Dsp => "dsp",
            Engine::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "obe" => Some(Engine::Obe),
            "dsp" => Some(Engine::Dsp),
            "both" => Some(Engine::Both),
            _ => None,
        }
    }

    pub fn runs_obe(&self) -> bool {
        matches!(self, Engine::Obe | Engine::Both)
    }

    pub fn runs_dsp(&self) -> bool {
        matches!(self, Engine::Dsp | Engine::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    /// Explicit [x_min, x_max]; `None` spans the medium, [−L/2, L/2].
    pub span: Option<(f64, f64)>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 1024, span: None }
    }
}

impl GridConfig {
    pub fn realize(&self, length: f64) -> Result<SpatialGrid> {
        match self.span {
            None => SpatialGrid::spanning(length, self.n),
            Some((lo, hi)) => SpatialGrid::new(lo, hi, self.n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub obe_dt: f64,
    pub dsp_dt: f64,
    /// Spacing of recorded fidelity samples [s].
    pub record_interval: f64,
    pub atom_scheme: AtomScheme,
    pub init_amplitude: f64,
    pub diffusion: bool,
    pub ax_correction: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            obe_dt: 1e-9,
            dsp_dt: 1e-8,
            record_interval: 1e-6,
            atom_scheme: AtomScheme::ExponentialSplitting,
            init_amplitude: 0.05,
            diffusion: true,
            ax_correction: false,
        }
    }
}

fn record_every(interval: f64, dt: f64) -> u64 {
    ((interval / dt).round() as u64).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub medium: MediumParams,
    pub potential: FluxoniumParams,
    pub grid: GridConfig,
    pub modulation: Modulation,
    pub engine: Engine,
    pub duration: f64,
    /// One-based, as in Ψ1, Ψ2, …
    pub initial_mode: usize,
    pub solver: SolverSettings,
    pub output_dir: Option<PathBuf>,
    pub snapshot_times: Vec<f64>,
}

impl ScenarioConfig {
    /// A preset name or a path to a scenario file.
    pub fn from_arg(arg: &str) -> Result<Self> {
        if super::presets::PRESET_NAMES.contains(&arg) {
            preset(arg)
        } else if Path::new(arg).exists() {
            Self::load(arg)
        } else {
            Err(Error::config(format!(
                "`{arg}` is neither a preset ({}) nor an existing scenario file",
                super::presets::PRESET_NAMES.join(", ")
            )))
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_config(text, None)
    }

    /// Apply `key = value` lines on top of `self`, with the same rules as a
    /// scenario file that starts from a preset.
    pub fn with_overrides(&self, text: &str) -> Result<Self> {
        parse_config(text, Some(self.clone()))
    }

    /// Check the invariants the engines rely on without solving for modes.
    pub fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        self.potential.validate()?;
        self.grid.realize(self.medium.length)?;
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::config(format!("run.duration must be positive, got {}", self.duration)));
        }
        if self.initial_mode == 0 {
            return Err(Error::config("run.initial_mode counts from 1"));
        }
        let s = &self.solver;
        for (key, v) in [
            ("solver.obe_dt", s.obe_dt),
            ("solver.dsp_dt", s.dsp_dt),
            ("solver.record_interval", s.record_interval),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{key} must be positive, got {v}")));
            }
        }
        if !(s.init_amplitude.is_finite() && s.init_amplitude >= 0.0) {
            return Err(Error::config("solver.init_amplitude must be non-negative"));
        }
        self.obe_config().validate(self.medium.gamma_e)?;
        Ok(())
    }

    pub fn obe_config(&self) -> ObeSolverConfig {
        ObeSolverConfig {
            dt: self.solver.obe_dt,
            record_every: record_every(self.solver.record_interval, self.solver.obe_dt),
            atom_scheme: self.solver.atom_scheme,
            probe_model: ProbeModel::QuasiStatic,
            init_amplitude: self.solver.init_amplitude,
        }
    }

    pub fn dsp_config(&self) -> DspSolverConfig {
        DspSolverConfig {
            dt: self.solver.dsp_dt,
            record_every: record_every(self.solver.record_interval, self.solver.dsp_dt),
            diffusion: self.solver.diffusion,
            init_amplitude: self.solver.init_amplitude,
        }
    }

    /// Build grid, potential, modes and schedule.
    pub fn resolve(&self) -> Result<Scenario> {
        self.validate()?;
        Scenario::build(ScenarioSpec {
            name: self.name.clone(),
            medium: self.medium,
            fluxonium: self.potential,
            grid: self.grid.realize(self.medium.length)?,
            modulation: self.modulation.clone(),
            duration: self.duration,
            initial_mode: self.initial_mode - 1,
            ax_correction: self.solver.ax_correction,
            snapshot_times: self.snapshot_times.clone(),
        })
    }

    /// Fully explicit text form; `parse(to_text())` reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("name", self.name.clone());
        let m = &self.medium;
        put("medium.gamma_e", num(m.gamma_e));
        put("medium.gamma_d", num(m.gamma_d));
        put("medium.delta_p", num(m.delta_p));
        put("medium.optical_depth", num(m.optical_depth));
        put("medium.length", num(m.length));
        put("medium.omega_c", num(m.omega_c));
        let p = &self.potential;
        put("potential.c1", num(p.c1));
        put("potential.alpha", num(p.alpha));
        put("potential.lambda_f", num(p.lambda_f));
        put("potential.phi", num(p.phi));
        put("grid.n", self.grid.n.to_string());
        match self.grid.span {
            None => put("grid.auto_span", "true".into()),
            Some((lo, hi)) => {
                put("grid.auto_span", "false".into());
                put("grid.x_min", num(lo));
                put("grid.x_max", num(hi));
            }
        }
        match &self.modulation {
            Modulation::Static => put("schedule.kind", "static".into()),
            Modulation::Sinusoidal { beta, nu, t_start } => {
                put("schedule.kind", "sinusoidal".into());
                put("schedule.beta", num(*beta));
                put("schedule.nu", num(*nu));
                put("schedule.t_start", num(*t_start));
            }
            Modulation::GaussianPulses(pulses) => {
                put("schedule.kind", "gaussian".into());
                for (i, g) in pulses.iter().enumerate() {
                    let k = i + 1;
                    put(&format!("schedule.pulse{k}.beta"), num(g.beta));
                    put(&format!("schedule.pulse{k}.nu"), num(g.nu));
                    put(&format!("schedule.pulse{k}.epsilon"), num(g.epsilon));
                    put(&format!("schedule.pulse{k}.tau"), num(g.tau));
                }
            }
        }
        put("run.engine", self.engine.name().into());
        put("run.duration", num(self.duration));
        put("run.initial_mode", self.initial_mode.to_string());
        let s = &self.solver;
        put("solver.obe_dt", num(s.obe_dt));
        put("solver.dsp_dt", num(s.dsp_dt));
        put("solver.record_interval", num(s.record_interval));
        put("solver.atom_scheme", s.atom_scheme.name().into());
        put("solver.init_amplitude", num(s.init_amplitude));
        put("solver.diffusion", s.diffusion.to_string());
        put("solver.ax_correction", s.ax_correction.to_string());
        if let Some(dir) = &self.output_dir {
            put("output.dir", dir.display().to_string());
        }
        put(
            "output.snapshots",
            self.snapshot_times.iter().map(|t| num(*t)).collect::<Vec<_>>().join(", "),
        );
        out
    }
}

/// Shortest representation that parses back to the same bits.
fn num(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Clone, Copy)]
enum Dim {
    Rate,
    Length,
    /// Potential lengths, canonical mm.
    PotLength,
    /// Potential curvature, canonical rad/s/mm².
    Curvature,
    Time,
    Plain,
}

impl Dim {
    /// (suffix, factor); `None` factor means "times gamma_e".
    fn units(self) -> &'static [(&'static str, Option<f64>)] {
        match self {
            Dim::Rate => &[("Gamma", None), ("MHz_x2pi", Some(MHZ_X2PI)), ("radkHz", Some(RAD_KHZ))],
            Dim::Length => &[("mm", Some(MM))],
            Dim::PotLength => &[("mm", Some(1.0))],
            Dim::Curvature => &[("Gamma", None), ("radkHz", Some(RAD_KHZ))],
            Dim::Time => &[("ms", Some(MS)), ("us", Some(US)), ("ns", Some(NS))],
            Dim::Plain => &[],
        }
    }
}

fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        let v: f64 = inner.trim().parse().ok()?;
        return (v >= 0.0).then(|| v.sqrt());
    }
    s.parse().ok()
}

fn parse_quantity(raw: &str, dim: Dim, gamma: Option<f64>) -> std::result::Result<f64, String> {
    let raw = raw.trim();
    for &(suffix, factor) in dim.units() {
        if let Some(head) = raw.strip_suffix(suffix) {
            let v = parse_number(head).ok_or_else(|| format!("bad number `{}`", head.trim()))?;
            return match factor {
                Some(f) => Ok(v * f),
                None => gamma
                    .map(|g| v * g)
                    .ok_or_else(|| "`Gamma` cannot be used to define Gamma itself".to_string()),
            };
        }
    }
    parse_number(raw).ok_or_else(|| {
        let accepted: Vec<_> = dim.units().iter().map(|u| u.0).collect();
        if accepted.is_empty() {
            format!("bad number `{raw}`")
        } else {
            format!("bad quantity `{raw}` (units: {})", accepted.join(", "))
        }
    })
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.trim() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn read(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: Some(lineno),
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config { line: Some(lineno), msg: "empty key".into() });
            }
            if let Some((first, _)) = map.insert(key.clone(), (lineno, value.trim().to_string())) {
                return Err(Error::Config {
                    line: Some(lineno),
                    msg: format!("duplicate key `{key}` (first set on line {first})"),
                });
            }
        }
        Ok(Self { map })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn quantity(&mut self, key: &str, dim: Dim, gamma: Option<f64>) -> Result<Option<f64>> {
        self.take(key)
            .map(|(line, raw)| {
                parse_quantity(&raw, dim, gamma).map_err(|msg| Error::Config {
                    line: Some(line),
                    msg: format!("{key}: {msg}"),
                })
            })
            .transpose()
    }

    fn parsed<T>(&mut self, key: &str, what: &str, f: impl FnOnce(&str) -> Option<T>) -> Result<Option<T>> {
        self.take(key)
            .map(|(line, raw)| {
                f(&raw).ok_or_else(|| Error::Config {
                    line: Some(line),
                    msg: format!("{key}: expected {what}, got `{raw}`"),
                })
            })
            .transpose()
    }
}

fn required<T>(value: Option<T>, fallback: Option<T>, key: &str) -> Result<T> {
    value
        .or(fallback)
        .ok_or_else(|| Error::config(format!("missing required key `{key}`")))
}

fn parse_config(text: &str, base: Option<ScenarioConfig>) -> Result<ScenarioConfig> {
    let mut e = Entries::read(text)?;
    let base = match e.take("preset") {
        Some((line, name)) => Some(preset(&name).map_err(|err| match err {
            Error::Config { msg, .. } => Error::Config { line: Some(line), msg },
            other => other,
        })?),
        None => base,
    };
    let b = base.as_ref();

    let name = e
        .take("name")
        .map(|(_, v)| v)
        .or_else(|| b.map(|c| c.name.clone()))
        .unwrap_or_else(|| "custom".to_string());

    let gamma_e = required(
        e.quantity("medium.gamma_e", Dim::Rate, None)?,
        b.map(|c| c.medium.gamma_e),
        "medium.gamma_e",
    )?;
    let g = Some(gamma_e);
    let bm = b.map(|c| c.medium);
    let medium = MediumParams {
        gamma_e,
        gamma_d: required(e.quantity("medium.gamma_d", Dim::Rate, g)?, bm.map(|m| m.gamma_d), "medium.gamma_d")?,
        delta_p: required(e.quantity("medium.delta_p", Dim::Rate, g)?, bm.map(|m| m.delta_p), "medium.delta_p")?,
        optical_depth: required(
            e.quantity("medium.optical_depth", Dim::Plain, g)?,
            bm.map(|m| m.optical_depth),
            "medium.optical_depth",
        )?,
        length: required(e.quantity("medium.length", Dim::Length, g)?, bm.map(|m| m.length), "medium.length")?,
        omega_c: required(e.quantity("medium.omega_c", Dim::Rate, g)?, bm.map(|m| m.omega_c), "medium.omega_c")?,
    };

    let bp = b.map(|c| c.potential);
    let potential = FluxoniumParams {
        c1: required(e.quantity("potential.c1", Dim::Curvature, g)?, bp.map(|p| p.c1), "potential.c1")?,
        alpha: required(e.quantity("potential.alpha", Dim::PotLength, g)?, bp.map(|p| p.alpha), "potential.alpha")?,
        lambda_f: required(
            e.quantity("potential.lambda_f", Dim::PotLength, g)?,
            bp.map(|p| p.lambda_f),
            "potential.lambda_f",
        )?,
        phi: required(e.quantity("potential.phi", Dim::Plain, g)?, bp.map(|p| p.phi), "potential.phi")?,
    };

    let bg = b.map(|c| c.grid).unwrap_or_default();
    let n = e
        .parsed("grid.n", "a positive integer", |s| s.parse::<usize>().ok())?
        .unwrap_or(bg.n);
    let auto = e.parsed("grid.auto_span", "true or false", parse_bool)?;
    let x_min = e.quantity("grid.x_min", Dim::Length, g)?;
    let x_max = e.quantity("grid.x_max", Dim::Length, g)?;
    let span = match (auto, x_min, x_max) {
        (Some(true), None, None) => None,
        (Some(true), ..) => return Err(Error::config("grid.x_min/x_max conflict with grid.auto_span = true")),
        (_, Some(lo), Some(hi)) => Some((lo, hi)),
        (Some(false), ..) => match bg.span {
            Some(span) => Some(span),
            None => return Err(Error::config("grid.auto_span = false needs grid.x_min and grid.x_max")),
        },
        (None, None, None) => bg.span,
        (None, ..) => return Err(Error::config("grid.x_min and grid.x_max must be given together")),
    };
    let grid = GridConfig { n, span };

    let modulation = parse_schedule(&mut e, b.map(|c| &c.modulation), g)?;

    let engine = e
        .parsed("run.engine", "obe, dsp or both", Engine::parse)?
        .or(b.map(|c| c.engine))
        .unwrap_or(Engine::Obe);
    let duration = required(e.quantity("run.duration", Dim::Time, g)?, b.map(|c| c.duration), "run.duration")?;
    let initial_mode = e
        .parsed("run.initial_mode", "a mode number (1, 2, ...)", |s| s.parse::<usize>().ok())?
        .or(b.map(|c| c.initial_mode))
        .unwrap_or(1);

    let bs = b.map(|c| c.solver).unwrap_or_default();
    let solver = SolverSettings {
        obe_dt: e.quantity("solver.obe_dt", Dim::Time, g)?.unwrap_or(bs.obe_dt),
        dsp_dt: e.quantity("solver.dsp_dt", Dim::Time, g)?.unwrap_or(bs.dsp_dt),
        record_interval: e.quantity("solver.record_interval", Dim::Time, g)?.unwrap_or(bs.record_interval),
        atom_scheme: e
            .parsed("solver.atom_scheme", "exponential-splitting or rk4", AtomScheme::parse)?
            .unwrap_or(bs.atom_scheme),
        init_amplitude: e.quantity("solver.init_amplitude", Dim::Plain, g)?.unwrap_or(bs.init_amplitude),
        diffusion: e.parsed("solver.diffusion", "true or false", parse_bool)?.unwrap_or(bs.diffusion),
        ax_correction: e
            .parsed("solver.ax_correction", "true or false", parse_bool)?
            .unwrap_or(bs.ax_correction),
    };

    let output_dir = e
        .take("output.dir")
        .map(|(_, v)| PathBuf::from(v))
        .or_else(|| b.and_then(|c| c.output_dir.clone()));
    let snapshot_times = match e.take("output.snapshots") {
        Some((line, raw)) => raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                parse_quantity(s, Dim::Time, g).map_err(|msg| Error::Config {
                    line: Some(line),
                    msg: format!("output.snapshots: {msg}"),
                })
            })
            .collect::<Result<Vec<_>>>()?,
        None => b.map(|c| c.snapshot_times.clone()).unwrap_or_default(),
    };

    if let Some((key, (line, _))) = e.map.into_iter().next() {
        return Err(Error::Config {
            line: Some(line),
            msg: format!("unknown key `{key}`"),
        });
    }

    let config = ScenarioConfig {
        name,
        medium,
        potential,
        grid,
        modulation,
        engine,
        duration,
        initial_mode,
        solver,
        output_dir,
        snapshot_times,
    };
    config.validate()?;
    Ok(config)
}

fn parse_schedule(e: &mut Entries, base: Option<&Modulation>, g: Option<f64>) -> Result<Modulation> {
    let kind = e.parsed("schedule.kind", "static, sinusoidal or gaussian", |s| match s {
        "static" | "sinusoidal" | "gaussian" => Some(s.to_string()),
        _ => None,
    })?;
    let base_kind = base.map(|m| match m {
        Modulation::Static => "static",
        Modulation::Sinusoidal { .. } => "sinusoidal",
        Modulation::GaussianPulses(_) => "gaussian",
    });
    let kind = match (kind, base_kind) {
        (Some(k), _) => k,
        (None, Some(k)) => k.to_string(),
        (None, None) => "static".to_string(),
    };
    // base values only carry over when the kind is unchanged
    let base = base.filter(|_| base_kind == Some(kind.as_str()));

    let sine_keys = ["schedule.beta", "schedule.nu", "schedule.t_start"];
    let has_pulse_keys = e.map.keys().any(|k| k.starts_with("schedule.pulse"));
    if kind != "sinusoidal" {
        if let Some(k) = sine_keys.iter().find(|k| e.map.contains_key(**k)) {
            return Err(Error::config(format!("`{k}` only applies to schedule.kind = sinusoidal")));
        }
    }
    if kind != "gaussian" && has_pulse_keys {
        return Err(Error::config("schedule.pulseN.* only applies to schedule.kind = gaussian"));
    }

    match kind.as_str() {
        "static" => Ok(Modulation::Static),
        "sinusoidal" => {
            let (bb, bn, bt) = match base {
                Some(Modulation::Sinusoidal { beta, nu, t_start }) => (Some(*beta), Some(*nu), Some(*t_start)),
                _ => (None, None, None),
            };
            Ok(Modulation::Sinusoidal {
                beta: required(e.quantity("schedule.beta", Dim::Plain, g)?, bb, "schedule.beta")?,
                nu: required(e.quantity("schedule.nu", Dim::Rate, g)?, bn, "schedule.nu")?,
                t_start: e.quantity("schedule.t_start", Dim::Time, g)?.or(bt).unwrap_or(0.0),
            })
        }
        _ => {
            let base_pulses: &[GaussianPulse] = match base {
                Some(Modulation::GaussianPulses(p)) => p,
                _ => &[],
            };
            let mut pulses = Vec::new();
            for k in 1.. {
                let prefix = format!("schedule.pulse{k}.");
                let present = e.map.keys().any(|key| key.starts_with(&prefix));
                let fallback = base_pulses.get(k - 1);
                if !present && fallback.is_none() {
                    break;
                }
                let key = |f: &str| format!("{prefix}{f}");
                pulses.push(GaussianPulse {
                    beta: required(e.quantity(&key("beta"), Dim::Plain, g)?, fallback.map(|p| p.beta), &key("beta"))?,
                    nu: required(e.quantity(&key("nu"), Dim::Rate, g)?, fallback.map(|p| p.nu), &key("nu"))?,
                    epsilon: required(
                        e.quantity(&key("epsilon"), Dim::Time, g)?,
                        fallback.map(|p| p.epsilon),
                        &key("epsilon"),
                    )?,
                    tau: required(e.quantity(&key("tau"), Dim::Time, g)?, fallback.map(|p| p.tau), &key("tau"))?,
                });
            }
            if pulses.is_empty() {
                return Err(Error::config("schedule.kind = gaussian needs schedule.pulse1.*"));
            }
            Ok(Modulation::GaussianPulses(pulses))
        }
    }
}
