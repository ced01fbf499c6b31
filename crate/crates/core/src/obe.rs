//! Full optical-Bloch dynamics of the counter-propagating Λ medium.
//!
//! State: ground coherence ρ21 and the two optical coherences ρ31^{R,L} at
//! every grid point. The probe fields are slaved to the coherences: with the
//! (1/c)∂t terms dropped, ∂xΩp^R = iηρ31^R is integrated from the left edge
//! and ∂xΩp^L = −iηρ31^L from the right edge at every stage evaluation.
//!
//! Time stepping splits the right-hand side into the diagonal decay/detuning
//! part Λ, applied exactly through exp(Λh), and the coupling part N(t, y),
//! which includes the probe feedback.

use std::time::Instant;

use num_complex::Complex64;

use crate::analysis::{Recorder, Trajectory};
use crate::eigen::{derivative, ModeCatalog};
use crate::error::{Error, Result};
use crate::model::{ComplexField, RealField, SpatialGrid};
use crate::scenario::{Scenario, RECORDED_MODES};
use crate::schedule::ScheduleSpec;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const HALF_I: Complex64 = Complex64 { re: 0.0, im: 0.5 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomScheme {
    /// Integrating-factor RK4: exp(Λh) exact, couplings at fourth order.
    ExponentialSplitting,
    Rk4,
}

impl AtomScheme {
    pub fn name(&self) -> &'static str {
        match self {
            AtomScheme::ExponentialSplitting => "exponential-splitting",
            AtomScheme::Rk4 => "rk4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exponential-splitting" => Some(AtomScheme::ExponentialSplitting),
            "rk4" => Some(AtomScheme::Rk4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeModel {
    QuasiStatic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObeSolverConfig {
    pub dt: f64,
    pub record_every: u64,
    pub atom_scheme: AtomScheme,
    pub probe_model: ProbeModel,
    /// Peak |ρ21| of the initial dark state.
    pub init_amplitude: f64,
}

impl Default for ObeSolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-9,
            record_every: 1000,
            atom_scheme: AtomScheme::ExponentialSplitting,
            probe_model: ProbeModel::QuasiStatic,
            init_amplitude: 0.05,
        }
    }
}

impl ObeSolverConfig {
    pub fn validate(&self, gamma_e: f64) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Parameter(format!("dt must be positive, got {}", self.dt)));
        }
        if self.atom_scheme == AtomScheme::Rk4 && self.dt * gamma_e / 2.0 > 0.2 {
            return Err(Error::Parameter(format!(
                "rk4 needs dt·Γ/2 <= 0.2, got {}",
                self.dt * gamma_e / 2.0
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Parameter("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Atomic coherences and probe fields at time t.
#[derive(Debug, Clone, PartialEq)]
pub struct ObeState {
    pub t: f64,
    pub rho21: ComplexField,
    pub rho31_r: ComplexField,
    pub rho31_l: ComplexField,
    /// Probe Rabi frequencies [rad/s].
    pub omega_p_r: ComplexField,
    pub omega_p_l: ComplexField,
}

impl ObeState {
    pub fn zeros(grid: SpatialGrid) -> Self {
        let z = ComplexField::zeros(grid);
        Self {
            t: 0.0,
            rho21: z.clone(),
            rho31_r: z.clone(),
            rho31_l: z.clone(),
            omega_p_r: z.clone(),
            omega_p_l: z,
        }
    }
}

/// Dark-state initialization ρ21 = a·Ψn with Ωp^{R,L} = −Ωc^{R,L}ρ21.
///
/// The optical coherences are set to ρ31^R = i(ΩcR/η)∂xρ21 and
/// ρ31^L = −i(ΩcL/η)∂xρ21, the values whose quasi-static probe integral
/// reproduces those probe fields.
pub fn init_dark_state(
    catalog: &ModeCatalog,
    mode_index: usize,
    amplitude: Complex64,
    controls: (f64, f64),
    eta: f64,
) -> Result<ObeState> {
    if mode_index >= catalog.len() {
        return Err(Error::Usage(format!(
            "mode {} requested but the catalog holds {}",
            mode_index + 1,
            catalog.len()
        )));
    }
    let psi = catalog.psi(mode_index);
    let peak = psi.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if amplitude.norm() * peak > 1.0 {
        return Err(Error::WeakProbe {
            t: 0.0,
            max_abs: amplitude.norm() * peak,
        });
    }
    let (c_r, c_l) = controls;
    let grid = catalog.grid;
    let rho21 = psi.to_complex().scaled(amplitude);
    let d = derivative(psi);
    let field = |f: &dyn Fn(usize) -> Complex64| ComplexField {
        grid,
        values: (0..grid.n).map(f).collect(),
    };
    Ok(ObeState {
        t: 0.0,
        rho31_r: field(&|j| I * amplitude * (c_r / eta * d[j])),
        rho31_l: field(&|j| -I * amplitude * (c_l / eta * d[j])),
        omega_p_r: rho21.scaled(Complex64::new(-c_r, 0.0)),
        omega_p_l: rho21.scaled(Complex64::new(-c_l, 0.0)),
        rho21,
    })
}

/// Adiabatic dark-state initialization: ρ21 = a·Ψn, and the optical
/// coherences sit at their ∂tρ31 = 0 values, ρ31 = (i/2)(Ωp + Ωcρ21)/D with
/// D = Γ/2 + iΔp. Substituting into the probe equations gives
/// ∂xΩp^R = −k(Ωp^R + ΩcRρ21) and ∂xΩp^L = k(Ωp^L + ΩcLρ21), k = η/2D,
/// integrated with the same trapezoid rule as [`propagate_probes`] so the
/// stepper starts without a transient.
pub fn init_adiabatic_dark_state(
    catalog: &ModeCatalog,
    mode_index: usize,
    amplitude: Complex64,
    controls: (f64, f64),
    atoms: &AtomParams,
) -> Result<ObeState> {
    let mut state = init_dark_state(catalog, mode_index, amplitude, controls, atoms.eta)?;
    let (c_r, c_l) = controls;
    let grid = catalog.grid;
    let n = grid.n;
    let d = Complex64::new(0.5 * atoms.gamma_e, atoms.delta_p);
    let h = atoms.eta / (2.0 * d) * (0.5 * grid.dx());
    let rho = &state.rho21.values;
    let (pr, pl) = (&mut state.omega_p_r.values, &mut state.omega_p_l.values);
    pr[0] = ZERO;
    for j in 0..n - 1 {
        pr[j + 1] = (pr[j] * (1.0 - h) - h * c_r * (rho[j] + rho[j + 1])) / (1.0 + h);
    }
    pl[n - 1] = ZERO;
    for j in (0..n - 1).rev() {
        pl[j] = (pl[j + 1] * (1.0 - h) - h * c_l * (rho[j] + rho[j + 1])) / (1.0 + h);
    }
    let half_i = I * 0.5 / d;
    for j in 0..n {
        state.rho31_r.values[j] = half_i * (pr[j] + c_r * rho[j]);
        state.rho31_l.values[j] = half_i * (pl[j] + c_l * rho[j]);
    }
    Ok(state)
}

/// Quasi-static probe propagation by trapezoidal accumulation:
/// Ωp^R from `input_r` at x_min rightward, Ωp^L from `input_l` at x_max
/// leftward.
pub fn propagate_probes(
    rho31_r: &[Complex64],
    rho31_l: &[Complex64],
    eta: f64,
    dx: f64,
    (input_r, input_l): (Complex64, Complex64),
    omega_p_r: &mut [Complex64],
    omega_p_l: &mut [Complex64],
) {
    let n = rho31_r.len();
    let g = I * (0.5 * eta * dx);
    omega_p_r[0] = input_r;
    for j in 0..n - 1 {
        omega_p_r[j + 1] = omega_p_r[j] + g * (rho31_r[j] + rho31_r[j + 1]);
    }
    omega_p_l[n - 1] = input_l;
    for j in (0..n - 1).rev() {
        omega_p_l[j] = omega_p_l[j + 1] + g * (rho31_l[j] + rho31_l[j + 1]);
    }
}

/// Source of the control pair (ΩcR, ΩcL) at time t.
#[derive(Debug, Clone)]
pub enum Controls {
    Schedule(ScheduleSpec),
    Constant(f64, f64),
}

impl Controls {
    pub fn at(&self, t: f64) -> (f64, f64) {
        match self {
            Controls::Schedule(s) => s.control_pair(t),
            Controls::Constant(r, l) => (*r, *l),
        }
    }
}

/// Physical inputs of the atomic equations.
#[derive(Debug, Clone)]
pub struct AtomParams {
    pub eta: f64,
    pub gamma_e: f64,
    pub gamma_d: f64,
    pub delta_p: f64,
    /// Control detuning Δc(x).
    pub detuning: RealField,
}

impl AtomParams {
    pub fn for_scenario(scenario: &Scenario) -> Self {
        Self {
            eta: scenario.derived.eta,
            gamma_e: scenario.medium.gamma_e,
            gamma_d: scenario.medium.gamma_d,
            delta_p: scenario.medium.delta_p,
            detuning: scenario.detuning.clone(),
        }
    }
}

#[derive(Clone)]
struct Fields {
    r21: Vec<Complex64>,
    r: Vec<Complex64>,
    l: Vec<Complex64>,
}

impl Fields {
    fn zeros(n: usize) -> Self {
        Self {
            r21: vec![ZERO; n],
            r: vec![ZERO; n],
            l: vec![ZERO; n],
        }
    }
}

/// Fixed-step integrator for the atomic coherences.
pub struct ObeStepper {
    n: usize,
    dx: f64,
    dt: f64,
    scheme: AtomScheme,
    eta: f64,
    controls: Controls,
    /// Diagonal rate of ρ21 per point: i(Δc − Δp) − γ.
    lambda21: Vec<Complex64>,
    /// Diagonal rate of ρ31: −(Γ/2 + iΔp).
    lambda31: Complex64,
    e21_half: Vec<Complex64>,
    e21_full: Vec<Complex64>,
    e31_half: Complex64,
    e31_full: Complex64,
    k: [Fields; 4],
    stage: Fields,
    /// Boundary probe inputs (Ωp^R(x_min), Ωp^L(x_max)).
    pub probe_inputs: (Complex64, Complex64),
}

impl ObeStepper {
    pub fn new(grid: &SpatialGrid, atoms: &AtomParams, controls: Controls, dt: f64, scheme: AtomScheme) -> Result<Self> {
        if atoms.detuning.grid != *grid {
            return Err(Error::Usage("detuning profile and OBE grid differ".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
        }
        let lambda21: Vec<Complex64> = atoms
            .detuning
            .values
            .iter()
            .map(|dc| Complex64::new(-atoms.gamma_d, dc - atoms.delta_p))
            .collect();
        let lambda31 = Complex64::new(-0.5 * atoms.gamma_e, -atoms.delta_p);
        let n = grid.n;
        Ok(Self {
            n,
            dx: grid.dx(),
            dt,
            scheme,
            eta: atoms.eta,
            controls,
            e21_half: lambda21.iter().map(|l| (l * (0.5 * dt)).exp()).collect(),
            e21_full: lambda21.iter().map(|l| (l * dt).exp()).collect(),
            lambda21,
            lambda31,
            e31_half: (lambda31 * (0.5 * dt)).exp(),
            e31_full: (lambda31 * dt).exp(),
            k: [Fields::zeros(n), Fields::zeros(n), Fields::zeros(n), Fields::zeros(n)],
            stage: Fields::zeros(n),
            probe_inputs: (ZERO, ZERO),
        })
    }

    pub fn for_scenario(scenario: &Scenario, cfg: &ObeSolverConfig) -> Result<Self> {
        cfg.validate(scenario.medium.gamma_e)?;
        let atoms = AtomParams::for_scenario(scenario);
        Self::new(
            &scenario.grid,
            &atoms,
            Controls::Schedule(scenario.schedule.clone()),
            cfg.dt,
            cfg.atom_scheme,
        )
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Coupling part N(t, y) into `out`; with `full` the diagonal Λy is
    /// added as well.
    fn rhs(
        eta: f64,
        dx: f64,
        inputs: (Complex64, Complex64),
        (c_r, c_l): (f64, f64),
        diag: Option<(&[Complex64], Complex64)>,
        y: &Fields,
        out: &mut Fields,
    ) {
        let n = y.r21.len();
        let g = I * (0.5 * eta * dx);
        let mut p = inputs.0;
        for j in 0..n {
            if j > 0 {
                p += g * (y.r[j - 1] + y.r[j]);
            }
            out.r[j] = HALF_I * (p + y.r21[j] * c_r);
            out.r21[j] = HALF_I * (y.r[j] * c_r + y.l[j] * c_l);
        }
        let mut p = inputs.1;
        for j in (0..n).rev() {
            if j + 1 < n {
                p += g * (y.l[j + 1] + y.l[j]);
            }
            out.l[j] = HALF_I * (p + y.r21[j] * c_l);
        }
        if let Some((l21, l31)) = diag {
            for j in 0..n {
                out.r21[j] += l21[j] * y.r21[j];
                out.r[j] += l31 * y.r[j];
                out.l[j] += l31 * y.l[j];
            }
        }
    }

    /// Advance the three coherences by one step from `state.t`.
    pub fn step_atoms(&mut self, state: &mut ObeState) {
        let t = state.t;
        let h = self.dt;
        let mut y = Fields {
            r21: std::mem::take(&mut state.rho21.values),
            r: std::mem::take(&mut state.rho31_r.values),
            l: std::mem::take(&mut state.rho31_l.values),
        };
        match self.scheme {
            AtomScheme::ExponentialSplitting => self.lawson_rk4(t, h, &mut y),
            AtomScheme::Rk4 => self.classic_rk4(t, h, &mut y),
        }
        state.rho21.values = y.r21;
        state.rho31_r.values = y.r;
        state.rho31_l.values = y.l;
        state.t = t + h;
    }

    fn lawson_rk4(&mut self, t: f64, h: f64, y: &mut Fields) {
        let n = self.n;
        let c1 = self.controls.at(t);
        let c2 = self.controls.at(t + 0.5 * h);
        let c4 = self.controls.at(t + h);
        let (eta, dx, inputs) = (self.eta, self.dx, self.probe_inputs);
        let (eh, ef) = (&self.e21_half, &self.e21_full);
        let (sh, sf) = (self.e31_half, self.e31_full);
        let [k1, k2, k3, k4] = &mut self.k;
        let s = &mut self.stage;

        Self::rhs(eta, dx, inputs, c1, None, y, k1);
        for j in 0..n {
            s.r21[j] = eh[j] * (y.r21[j] + k1.r21[j] * (0.5 * h));
            s.r[j] = sh * (y.r[j] + k1.r[j] * (0.5 * h));
            s.l[j] = sh * (y.l[j] + k1.l[j] * (0.5 * h));
        }
        Self::rhs(eta, dx, inputs, c2, None, s, k2);
        for j in 0..n {
            s.r21[j] = eh[j] * y.r21[j] + k2.r21[j] * (0.5 * h);
            s.r[j] = sh * y.r[j] + k2.r[j] * (0.5 * h);
            s.l[j] = sh * y.l[j] + k2.l[j] * (0.5 * h);
        }
        Self::rhs(eta, dx, inputs, c2, None, s, k3);
        for j in 0..n {
            s.r21[j] = ef[j] * y.r21[j] + eh[j] * k3.r21[j] * h;
            s.r[j] = sf * y.r[j] + sh * k3.r[j] * h;
            s.l[j] = sf * y.l[j] + sh * k3.l[j] * h;
        }
        Self::rhs(eta, dx, inputs, c4, None, s, k4);
        let w = h / 6.0;
        for j in 0..n {
            y.r21[j] = ef[j] * (y.r21[j] + k1.r21[j] * w) + eh[j] * (k2.r21[j] + k3.r21[j]) * (2.0 * w) + k4.r21[j] * w;
            y.r[j] = sf * (y.r[j] + k1.r[j] * w) + sh * (k2.r[j] + k3.r[j]) * (2.0 * w) + k4.r[j] * w;
            y.l[j] = sf * (y.l[j] + k1.l[j] * w) + sh * (k2.l[j] + k3.l[j]) * (2.0 * w) + k4.l[j] * w;
        }
    }

    fn classic_rk4(&mut self, t: f64, h: f64, y: &mut Fields) {
        let n = self.n;
        let c1 = self.controls.at(t);
        let c2 = self.controls.at(t + 0.5 * h);
        let c4 = self.controls.at(t + h);
        let (eta, dx, inputs) = (self.eta, self.dx, self.probe_inputs);
        let diag = Some((self.lambda21.as_slice(), self.lambda31));
        let [k1, k2, k3, k4] = &mut self.k;
        let s = &mut self.stage;

        Self::rhs(eta, dx, inputs, c1, diag, y, k1);
        axpy(s, y, k1, 0.5 * h, n);
        Self::rhs(eta, dx, inputs, c2, diag, s, k2);
        axpy(s, y, k2, 0.5 * h, n);
        Self::rhs(eta, dx, inputs, c2, diag, s, k3);
        axpy(s, y, k3, h, n);
        Self::rhs(eta, dx, inputs, c4, diag, s, k4);
        let w = h / 6.0;
        for j in 0..n {
            y.r21[j] += (k1.r21[j] + (k2.r21[j] + k3.r21[j]) * 2.0 + k4.r21[j]) * w;
            y.r[j] += (k1.r[j] + (k2.r[j] + k3.r[j]) * 2.0 + k4.r[j]) * w;
            y.l[j] += (k1.l[j] + (k2.l[j] + k3.l[j]) * 2.0 + k4.l[j]) * w;
        }
    }

    /// Recompute the slaved probe fields from the current coherences.
    pub fn propagate_probes(&self, state: &mut ObeState) {
        propagate_probes(
            &state.rho31_r.values,
            &state.rho31_l.values,
            self.eta,
            self.dx,
            self.probe_inputs,
            &mut state.omega_p_r.values,
            &mut state.omega_p_l.values,
        );
    }

    /// One full step: atoms, then probes.
    pub fn step(&mut self, state: &mut ObeState) {
        self.step_atoms(state);
        self.propagate_probes(state);
    }
}

fn axpy(out: &mut Fields, y: &Fields, k: &Fields, a: f64, n: usize) {
    for j in 0..n {
        out.r21[j] = y.r21[j] + k.r21[j] * a;
        out.r[j] = y.r[j] + k.r[j] * a;
        out.l[j] = y.l[j] + k.l[j] * a;
    }
}

fn check_state(state: &ObeState, step: u64) -> Result<()> {
    if !(state.rho21.is_finite() && state.rho31_r.is_finite() && state.rho31_l.is_finite()) {
        return Err(Error::Divergence {
            t: state.t,
            step,
            detail: "non-finite coherence".into(),
        });
    }
    let max_abs = state.rho21.max_abs();
    if max_abs > 1.0 {
        return Err(Error::WeakProbe { t: state.t, max_abs });
    }
    Ok(())
}

/// Result of an OBE run.
#[derive(Debug, Clone)]
pub struct ObeRun {
    pub trajectory: Trajectory,
    pub final_state: ObeState,
    pub wall_seconds: f64,
}

pub(crate) fn peak_abs(psi: &RealField) -> f64 {
    psi.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Integrate a scenario from its dark-state initial condition.
pub fn run(scenario: &Scenario, cfg: &ObeSolverConfig) -> Result<ObeRun> {
    let controls0 = scenario.schedule.control_pair(0.0);
    let atoms = AtomParams::for_scenario(scenario);
    let state = init_adiabatic_dark_state(
        &scenario.catalog,
        scenario.initial_mode,
        Complex64::new(cfg.init_amplitude / peak_abs(scenario.catalog.psi(scenario.initial_mode)), 0.0),
        controls0,
        &atoms,
    )?;
    run_from(scenario, cfg, state)
}

/// Integrate a scenario from an arbitrary initial state.
pub fn run_from(scenario: &Scenario, cfg: &ObeSolverConfig, mut state: ObeState) -> Result<ObeRun> {
    let started = Instant::now();
    let mut stepper = ObeStepper::for_scenario(scenario, cfg)?;
    let steps = (scenario.duration / cfg.dt).round() as u64;
    let mut recorder = Recorder::new(
        &scenario.catalog,
        RECORDED_MODES,
        cfg.record_every,
        cfg.dt,
        &scenario.snapshot_times,
    );
    check_state(&state, 0)?;
    recorder.observe(0, 0.0, &state.rho21, steps == 0)?;
    for step in 1..=steps {
        stepper.step_atoms(&mut state);
        state.t = step as f64 * cfg.dt;
        let last = step == steps;
        if recorder.wants(step, last) {
            stepper.propagate_probes(&mut state);
            check_state(&state, step)?;
            recorder.observe(step, state.t, &state.rho21, last)?;
        }
    }
    stepper.propagate_probes(&mut state);
    Ok(ObeRun {
        trajectory: recorder.finish(steps),
        final_state: state,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::units::{GAMMA_D1, MM};
    use approx::assert_relative_eq;

    fn grid() -> SpatialGrid {
        SpatialGrid::spanning(8.0 * MM, 64).unwrap()
    }

    fn atoms(eta: f64, detuning: f64, gamma_d: f64) -> AtomParams {
        let g = grid();
        AtomParams {
            eta,
            gamma_e: GAMMA_D1,
            gamma_d,
            delta_p: 4.6 * GAMMA_D1,
            detuning: RealField::from_fn(g, |_| detuning),
        }
    }

    #[test]
    fn probe_examples() {
        let g = grid();
        let n = g.n;
        let eta = 1.6e12;
        let zero = vec![ZERO; n];
        let mut pr = vec![ZERO; n];
        let mut pl = vec![ZERO; n];
        propagate_probes(&zero, &zero, eta, g.dx(), (ZERO, ZERO), &mut pr, &mut pl);
        assert!(pr.iter().chain(&pl).all(|v| *v == ZERO));

        let c = Complex64::new(0.3, -0.2) * 1e-6;
        let constant = vec![c; n];
        propagate_probes(&constant, &constant, eta, g.dx(), (ZERO, ZERO), &mut pr, &mut pl);
        for (j, x) in g.points().enumerate() {
            let ramp_r = I * eta * c * (x - g.x_min);
            let ramp_l = I * eta * c * (g.x_max - x);
            assert!((pr[j] - ramp_r).norm() <= 1e-9 * ramp_r.norm().max(1.0));
            assert!((pl[j] - ramp_l).norm() <= 1e-9 * ramp_l.norm().max(1.0));
        }
    }

    #[test]
    fn free_optical_decay() {
        let dp = 4.6 * GAMMA_D1;
        for scheme in [AtomScheme::ExponentialSplitting, AtomScheme::Rk4] {
            let mut stepper = ObeStepper::new(&grid(), &atoms(0.0, dp, 0.0), Controls::Constant(0.0, 0.0), 1e-9, scheme).unwrap();
            let mut s = ObeState::zeros(grid());
            let c = Complex64::new(0.01, 0.02);
            s.rho31_r.values.iter_mut().for_each(|v| *v = c);
            stepper.step(&mut s);
            let expected = c * (Complex64::new(-0.5 * GAMMA_D1, -dp) * 1e-9).exp();
            // RK4 local error ~ |z|⁵/120 with |z| ≈ 0.15
            let tol = if scheme == AtomScheme::Rk4 { 2e-6 } else { 1e-15 };
            assert!((s.rho31_r.values[10] - expected).norm() <= tol * c.norm(), "{scheme:?}");
        }
    }

    #[test]
    fn pure_dephasing() {
        let dp = 4.6 * GAMMA_D1;
        let gd = 1e-3 * GAMMA_D1;
        let mut stepper =
            ObeStepper::new(&grid(), &atoms(1.6e12, dp, gd), Controls::Constant(0.0, 0.0), 1e-9, AtomScheme::ExponentialSplitting).unwrap();
        let mut s = ObeState::zeros(grid());
        s.rho21.values.iter_mut().for_each(|v| *v = Complex64::new(0.05, 0.0));
        for _ in 0..1000 {
            stepper.step(&mut s);
        }
        let expected = 0.05 * (-gd * s.t).exp();
        assert_relative_eq!(s.rho21.values[20].re, expected, max_relative = 1e-12);
        assert!(s.rho21.values[20].im.abs() < 1e-15);
    }

    #[test]
    fn zero_state_stays_zero() {
        let mut stepper = ObeStepper::new(
            &grid(),
            &atoms(1.6e12, 4.6 * GAMMA_D1, 1e3),
            Controls::Constant(1e7, 2e7),
            1e-9,
            AtomScheme::ExponentialSplitting,
        )
        .unwrap();
        let mut s = ObeState::zeros(grid());
        for _ in 0..100 {
            stepper.step(&mut s);
        }
        assert_eq!(s, ObeState { t: s.t, ..ObeState::zeros(grid()) });
    }

    #[test]
    fn rk4_step_limit() {
        let cfg = ObeSolverConfig {
            atom_scheme: AtomScheme::Rk4,
            dt: 2e-8,
            ..ObeSolverConfig::default()
        };
        assert!(cfg.validate(GAMMA_D1).is_err());
        let cfg = ObeSolverConfig { atom_scheme: AtomScheme::ExponentialSplitting, ..cfg };
        assert!(cfg.validate(GAMMA_D1).is_ok());
    }
}
