//! Reduced Schrödinger-like dynamics of the dark-state polarization,
//!
//!   i∂tψ = [(1/2m)(−i∂x + a(t))² + u(x) − iγ + i(Γ/2Δp)(1/2m)∂x²] ψ,
//!
//! advanced by Crank–Nicolson on the grid interior (ψ = 0 at both ends).
//! With a(t) uniform in space the operator expands to
//! −((1 − i·r)/2m)∂x² − i(a/m)∂x + u + a²/2m − iγ, r = Γ/2Δp.

use std::time::Instant;

use num_complex::Complex64;

use crate::analysis::{Recorder, Trajectory};
use crate::error::{Error, Result};
use crate::model::ComplexField;
use crate::potentials::PotentialProfile;
use crate::scenario::{Scenario, RECORDED_MODES};
use crate::schedule::ScheduleSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DspSolverConfig {
    pub dt: f64,
    pub record_every: u64,
    /// Keep the i(Γ/2Δp)(1/2m)∂x² loss term.
    pub diffusion: bool,
    /// Peak |ψ| of the initial state.
    pub init_amplitude: f64,
}

impl Default for DspSolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-8,
            record_every: 100,
            diffusion: true,
            init_amplitude: 0.05,
        }
    }
}

/// Coefficients of the reduced equation.
#[derive(Debug, Clone)]
pub struct DspSystem {
    pub potential: PotentialProfile,
    pub schedule: ScheduleSpec,
    pub m_reduced: f64,
    pub diffusion_ratio: f64,
    pub eta: f64,
    pub delta_p: f64,
}

impl DspSystem {
    pub fn for_scenario(scenario: &Scenario, cfg: &DspSolverConfig) -> Self {
        Self {
            potential: scenario.potential.clone(),
            schedule: scenario.schedule.clone(),
            m_reduced: scenario.derived.m_reduced,
            diffusion_ratio: if cfg.diffusion { scenario.derived.diffusion_ratio } else { 0.0 },
            eta: scenario.derived.eta,
            delta_p: scenario.medium.delta_p,
        }
    }

    /// Reduced vector potential a(t) [m⁻¹].
    pub fn ax(&self, t: f64) -> f64 {
        self.schedule.ax_reduced(self.eta, self.delta_p, t)
    }
}

/// Tridiagonal system solved by the Thomas algorithm.
struct Thomas {
    /// Factored super-diagonal c'.
    c: Vec<Complex64>,
    /// Pivots b − a c'.
    pivot: Vec<Complex64>,
    lower: Complex64,
}

impl Thomas {
    fn factor(diag: &[Complex64], lower: Complex64, upper: Complex64) -> Result<Self> {
        let n = diag.len();
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        let mut pivot = vec![Complex64::new(0.0, 0.0); n];
        let scale = diag.iter().map(|d| d.norm()).fold(0.0, f64::max);
        for i in 0..n {
            let p = if i == 0 { diag[0] } else { diag[i] - lower * c[i - 1] };
            if !(p.norm() > 1e-14 * scale) {
                return Err(Error::Tridiagonal { row: i });
            }
            pivot[i] = p;
            c[i] = upper / p;
        }
        Ok(Self { c, pivot, lower })
    }

    fn solve(&self, rhs: &mut [Complex64]) {
        let n = rhs.len();
        rhs[0] /= self.pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower * rhs[i - 1]) / self.pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] = rhs[i] - self.c[i] * rhs[i + 1];
        }
    }
}

/// Crank–Nicolson propagator.
pub struct CrankNicolson {
    system: DspSystem,
    dt: f64,
    dx: f64,
    /// Cached factorization keyed by the a(t) it was built for.
    cached: Option<(f64, Thomas, Vec<Complex64>, Complex64, Complex64)>,
    rhs: Vec<Complex64>,
}

impl CrankNicolson {
    pub fn new(system: DspSystem, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
        }
        if !(system.m_reduced > 0.0) {
            return Err(Error::Parameter("effective mass must be positive".into()));
        }
        let dx = system.potential.u.grid.dx();
        let n = system.potential.u.grid.n;
        Ok(Self {
            system,
            dt,
            dx,
            cached: None,
            rhs: vec![Complex64::new(0.0, 0.0); n - 2],
        })
    }

    pub fn system(&self) -> &DspSystem {
        &self.system
    }

    /// Interior H: (diagonal, lower, upper).
    fn operator(&self, a: f64) -> (Vec<Complex64>, Complex64, Complex64) {
        let s = &self.system;
        let m = s.m_reduced;
        let kappa = Complex64::new(1.0, -s.diffusion_ratio) / (2.0 * m * self.dx * self.dx);
        let drift = Complex64::new(0.0, a / m / (2.0 * self.dx));
        let shift = Complex64::new(a * a / (2.0 * m), -s.potential.gamma_d);
        let u = &s.potential.u.values;
        let diag = u[1..u.len() - 1].iter().map(|&v| kappa * 2.0 + v + shift).collect();
        (diag, -kappa + drift, -kappa - drift)
    }

    /// ψ(t) → ψ(t + dt), a(t) taken at the midpoint.
    pub fn step(&mut self, psi: &mut ComplexField, t: f64) -> Result<()> {
        let a = self.system.ax(t + 0.5 * self.dt);
        let half = Complex64::new(0.0, 0.5 * self.dt);
        let rebuild = !matches!(&self.cached, Some((cached_a, ..)) if *cached_a == a);
        if rebuild {
            let (h_diag, lower, upper) = self.operator(a);
            let a_diag: Vec<Complex64> = h_diag.iter().map(|h| 1.0 + half * h).collect();
            let lu = Thomas::factor(&a_diag, half * lower, half * upper)?;
            self.cached = Some((a, lu, h_diag, lower, upper));
        }
        let (_, lu, h_diag, lower, upper) = self.cached.as_ref().expect("factor cached above");
        let v = &psi.values;
        let m = v.len() - 2;
        for i in 0..m {
            let j = i + 1;
            let hpsi = h_diag[i] * v[j] + lower * v[j - 1] + upper * v[j + 1];
            self.rhs[i] = v[j] - half * hpsi;
        }
        lu.solve(&mut self.rhs);
        psi.values[1..=m].copy_from_slice(&self.rhs);
        psi.values[0] = Complex64::new(0.0, 0.0);
        psi.values[m + 1] = Complex64::new(0.0, 0.0);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DspRun {
    pub trajectory: Trajectory,
    pub final_psi: ComplexField,
    pub wall_seconds: f64,
}

/// Evolve `psi0` for `duration`, recording through `recorder`.
pub fn evolve(
    psi0: &ComplexField,
    system: DspSystem,
    duration: f64,
    dt: f64,
    mut recorder: Recorder<'_>,
) -> Result<DspRun> {
    let started = Instant::now();
    if psi0.grid != system.potential.u.grid {
        return Err(Error::Usage("initial state and potential grids differ".into()));
    }
    let mut cn = CrankNicolson::new(system, dt)?;
    let mut psi = psi0.clone();
    psi.values[0] = Complex64::new(0.0, 0.0);
    *psi.values.last_mut().expect("grid has points") = Complex64::new(0.0, 0.0);
    let steps = (duration / dt).round() as u64;
    recorder.observe(0, 0.0, &psi, steps == 0)?;
    for step in 1..=steps {
        let t = (step - 1) as f64 * dt;
        cn.step(&mut psi, t)?;
        let last = step == steps;
        if recorder.wants(step, last) {
            if !psi.is_finite() {
                return Err(Error::Divergence {
                    t: step as f64 * dt,
                    step,
                    detail: "non-finite wavefunction".into(),
                });
            }
            recorder.observe(step, step as f64 * dt, &psi, last)?;
        }
    }
    Ok(DspRun {
        trajectory: recorder.finish(steps),
        final_psi: psi,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Run a scenario from a·Ψ_initial.
pub fn run(scenario: &Scenario, cfg: &DspSolverConfig) -> Result<DspRun> {
    let mode = scenario.catalog.psi(scenario.initial_mode);
    let psi0 = mode
        .to_complex()
        .scaled(Complex64::new(cfg.init_amplitude / crate::obe::peak_abs(mode), 0.0));
    let recorder = Recorder::new(
        &scenario.catalog,
        RECORDED_MODES,
        cfg.record_every,
        cfg.dt,
        &scenario.snapshot_times,
    );
    evolve(&psi0, DspSystem::for_scenario(scenario, cfg), scenario.duration, cfg.dt, recorder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::norm;
    use crate::model::{RealField, SpatialGrid};
    use crate::schedule::Modulation;

    fn free_system(grid: SpatialGrid, modulation: Modulation, gamma_d: f64, diffusion_ratio: f64) -> DspSystem {
        DspSystem {
            potential: PotentialProfile { u: RealField::from_fn(grid, |_| 0.0), gamma_d },
            schedule: ScheduleSpec::new(modulation, 1e7, 1e-3).unwrap(),
            m_reduced: 3.7,
            diffusion_ratio,
            eta: 1.6e12,
            delta_p: 1.5e8,
        }
    }

    fn packet(grid: SpatialGrid) -> ComplexField {
        ComplexField::from_fn(grid, |x| Complex64::new((-(x / 4e-4).powi(2)).exp(), 0.0))
    }

    #[test]
    fn lossless_drive_is_unitary() {
        let g = SpatialGrid::spanning(8e-3, 512).unwrap();
        let sys = free_system(g, Modulation::Sinusoidal { beta: 0.3, nu: 4e5, t_start: 0.0 }, 0.0, 0.0);
        let mut cn = CrankNicolson::new(sys, 1e-8).unwrap();
        let mut psi = packet(g);
        let n0 = norm(&psi);
        for k in 0..1000 {
            cn.step(&mut psi, k as f64 * 1e-8).unwrap();
        }
        assert!((norm(&psi) - n0).abs() <= 1e-10 * n0);
    }

    #[test]
    fn dephasing_and_diffusion_dissipate() {
        let g = SpatialGrid::spanning(8e-3, 256).unwrap();
        let sys = free_system(g, Modulation::Static, 5e4, 0.1);
        let mut cn = CrankNicolson::new(sys, 1e-8).unwrap();
        let mut psi = packet(g);
        let mut last = norm(&psi);
        for k in 0..200 {
            cn.step(&mut psi, k as f64 * 1e-8).unwrap();
            let now = norm(&psi);
            assert!(now < last);
            last = now;
        }
    }

    #[test]
    fn rejects_bad_step() {
        let g = SpatialGrid::spanning(8e-3, 64).unwrap();
        assert!(CrankNicolson::new(free_system(g, Modulation::Static, 0.0, 0.0), 0.0).is_err());
    }
}
