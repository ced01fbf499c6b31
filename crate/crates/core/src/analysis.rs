//! Fidelities, norms, trajectory recording and extremum extraction.

use num_complex::Complex64;

use crate::eigen::{project, ModeCatalog};
use crate::error::{Error, Result};
use crate::model::{ComplexField, RealField};

/// Trapezoidal rule on a uniform grid.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => 0.0,
        n => (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])) * dx,
    }
}

/// ∫|field|² dx.
pub fn norm(field: &ComplexField) -> f64 {
    let dens: Vec<f64> = field.values.iter().map(|v| v.norm_sqr()).collect();
    trapezoid(&dens, field.grid.dx())
}

fn real_norm(f: &RealField) -> f64 {
    let dens: Vec<f64> = f.values.iter().map(|v| v * v).collect();
    trapezoid(&dens, f.grid.dx())
}

/// F = |∫Ψn* field dx|² / (∫|Ψn|² dx · ∫|field|² dx).
pub fn fidelity(psi_n: &RealField, field: &ComplexField) -> Result<f64> {
    let field_norm = norm(field);
    if field_norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let overlap = project(field, psi_n)?;
    Ok(overlap.norm_sqr() / (real_norm(psi_n) * field_norm))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: ComplexField,
}

/// Recorded time series of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `fidelities[n][k]` is F_{n+1} at `times[k]`.
    pub fidelities: Vec<Vec<f64>>,
    pub norm: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    /// Integrator steps taken.
    pub steps: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// F_{mode+1} at the recorded sample closest to `t`.
    pub fn fidelity_at(&self, mode: usize, t: f64) -> f64 {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.fidelities[mode][k]
    }

    pub fn final_fidelity(&self, mode: usize) -> f64 {
        *self.fidelities[mode].last().unwrap_or(&f64::NAN)
    }
}

/// Samples fidelities, norm and snapshots during a run. Both engines feed
/// it the same way so their trajectories line up sample for sample.
pub struct Recorder<'a> {
    catalog: &'a ModeCatalog,
    modes: usize,
    record_every: u64,
    snapshot_steps: Vec<(u64, f64)>,
    trajectory: Trajectory,
}

impl<'a> Recorder<'a> {
    pub fn new(catalog: &'a ModeCatalog, modes: usize, record_every: u64, dt: f64, snapshot_times: &[f64]) -> Self {
        let modes = modes.min(catalog.len());
        let snapshot_steps = snapshot_times
            .iter()
            .map(|&t| ((t / dt).round() as u64, t))
            .collect();
        Self {
            catalog,
            modes,
            record_every: record_every.max(1),
            snapshot_steps,
            trajectory: Trajectory {
                fidelities: vec![Vec::new(); modes],
                ..Trajectory::default()
            },
        }
    }

    pub fn wants(&self, step: u64, last: bool) -> bool {
        last || step % self.record_every == 0 || self.snapshot_steps.iter().any(|(s, _)| *s == step)
    }

    /// Record the state reached after `step` steps. A zero field records
    /// F_n = 0.
    pub fn observe(&mut self, step: u64, t: f64, field: &ComplexField, last: bool) -> Result<()> {
        if last || step % self.record_every == 0 {
            let total = norm(field);
            for n in 0..self.modes {
                let f = if total == 0.0 {
                    0.0
                } else {
                    fidelity(self.catalog.psi(n), field)?
                };
                self.trajectory.fidelities[n].push(f);
            }
            self.trajectory.norm.push(total);
            self.trajectory.times.push(t);
        }
        for &(s, ts) in &self.snapshot_steps {
            if s == step {
                self.trajectory.snapshots.push(Snapshot { t: ts, field: field.clone() });
            }
        }
        Ok(())
    }

    pub fn finish(mut self, steps: u64) -> Trajectory {
        self.trajectory.steps = steps;
        self.trajectory
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub t: f64,
    pub value: f64,
    pub kind: ExtremumKind,
}

/// Ripples smaller than this are not reported as extrema of F_n(t).
pub const DEFAULT_PROMINENCE: f64 = 5e-2;

/// Interior extrema of a sampled series whose swing to the neighbouring
/// opposite extremum exceeds `prominence`, refined by a parabola through the
/// three samples around each.
pub fn extrema(times: &[f64], values: &[f64], prominence: f64) -> Vec<Extremum> {
    let n = values.len().min(times.len());
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    let mut max_i = 0;
    let mut min_i = 0;
    // None until the first swing fixes the direction.
    let mut seeking_max: Option<bool> = None;
    for i in 1..n {
        let v = values[i];
        if v > values[max_i] {
            max_i = i;
        }
        if v < values[min_i] {
            min_i = i;
        }
        match seeking_max {
            None => {
                if values[max_i] - v > prominence {
                    push_refined(&mut out, times, values, max_i, ExtremumKind::Maximum);
                    seeking_max = Some(false);
                    min_i = i;
                } else if v - values[min_i] > prominence {
                    push_refined(&mut out, times, values, min_i, ExtremumKind::Minimum);
                    seeking_max = Some(true);
                    max_i = i;
                }
            }
            Some(true) => {
                if values[max_i] - v > prominence {
                    push_refined(&mut out, times, values, max_i, ExtremumKind::Maximum);
                    seeking_max = Some(false);
                    min_i = i;
                }
            }
            Some(false) => {
                if v - values[min_i] > prominence {
                    push_refined(&mut out, times, values, min_i, ExtremumKind::Minimum);
                    seeking_max = Some(true);
                    max_i = i;
                }
            }
        }
    }
    out
}

fn push_refined(out: &mut Vec<Extremum>, times: &[f64], values: &[f64], i: usize, kind: ExtremumKind) {
    // Endpoints of the series are not extrema.
    if i == 0 || i + 1 >= values.len() {
        return;
    }
    let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
    let curvature = a - 2.0 * b + c;
    let h = 0.5 * (times[i + 1] - times[i - 1]);
    let (offset, value) = if curvature != 0.0 {
        let off = (0.5 * (a - c) / curvature).clamp(-1.0, 1.0);
        (off, b - 0.25 * (a - c) * off)
    } else {
        (0.0, b)
    };
    out.push(Extremum {
        t: times[i] + offset * h,
        value,
        kind,
    });
}

/// Extremum times of F_{mode+1}(t) at [`DEFAULT_PROMINENCE`].
pub fn extremum_times(trajectory: &Trajectory, mode: usize) -> Vec<f64> {
    extrema(&trajectory.times, &trajectory.fidelities[mode], DEFAULT_PROMINENCE)
        .into_iter()
        .map(|e| e.t)
        .collect()
}

/// Maximum of |a − b| over aligned samples.
pub fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Overlap amplitudes of `field` on every catalog mode.
pub fn decompose(field: &ComplexField, catalog: &ModeCatalog) -> Result<Vec<Complex64>> {
    catalog.modes.iter().map(|m| project(field, &m.psi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{build_hamiltonian, solve_modes};
    use crate::model::SpatialGrid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn catalog() -> ModeCatalog {
        let g = SpatialGrid::new(-1.0, 1.0, 256).unwrap();
        let u = RealField::from_fn(g, |x| 800.0 * x * x + 40.0 * x);
        solve_modes(&build_hamiltonian(&g, 1.0, &u).unwrap(), 4).unwrap()
    }

    #[test]
    fn trapezoid_exact_for_linear() {
        let v: Vec<f64> = (0..11).map(|i| 2.0 * i as f64 + 1.0).collect();
        assert_relative_eq!(trapezoid(&v, 0.1), 0.1 * (v[0] + v[10]) / 2.0 * 10.0, max_relative = 1e-14);
    }

    #[test]
    fn fidelity_examples() {
        let cat = catalog();
        let psi1 = cat.psi(0).to_complex();
        let c = Complex64::new(-0.3, 2.1);
        assert_relative_eq!(fidelity(cat.psi(0), &psi1.scaled(c)).unwrap(), 1.0, max_relative = 1e-12);
        assert!(fidelity(cat.psi(0), &cat.psi(1).to_complex()).unwrap() <= 1e-10);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mix = ComplexField::new(
            cat.grid,
            cat.psi(0).values.iter().zip(&cat.psi(1).values).map(|(a, b)| Complex64::new(s * (a + b), 0.0)).collect(),
        )
        .unwrap();
        assert_relative_eq!(fidelity(cat.psi(0), &mix).unwrap(), 0.5, max_relative = 1e-10);
        assert_relative_eq!(fidelity(cat.psi(1), &mix).unwrap(), 0.5, max_relative = 1e-10);
        assert!(matches!(fidelity(cat.psi(0), &ComplexField::zeros(cat.grid)), Err(Error::ZeroNorm)));
    }

    #[test]
    fn norm_examples() {
        let cat = catalog();
        assert_relative_eq!(norm(&cat.psi(2).to_complex()), 1.0, max_relative = 1e-12);
        assert_eq!(norm(&ComplexField::zeros(cat.grid)), 0.0);
        let c = Complex64::new(0.4, -0.7);
        assert_relative_eq!(norm(&cat.psi(2).to_complex().scaled(c)), c.norm_sqr(), max_relative = 1e-12);
    }

    #[test]
    fn bessel_inequality() {
        let cat = catalog();
        let field = ComplexField::from_fn(cat.grid, |x| Complex64::new((-30.0 * (x - 0.1).powi(2)).exp(), 3.0 * x));
        let total: f64 = (0..cat.len()).map(|n| fidelity(cat.psi(n), &field).unwrap()).sum();
        assert!(total <= 1.0 + 1e-12);
    }

    #[test]
    fn constant_series_has_no_extrema() {
        let t: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert!(extrema(&t, &vec![0.7; 100], DEFAULT_PROMINENCE).is_empty());
    }

    #[test]
    fn rabi_series_extrema_spacing() {
        let omega = 2.0 * PI / 0.15e-3;
        let t: Vec<f64> = (0..3000).map(|i| i as f64 * 1e-7).collect();
        let f: Vec<f64> = t.iter().map(|t| (omega * t / 2.0).sin().powi(2)).collect();
        let ex = extrema(&t, &f, DEFAULT_PROMINENCE);
        assert!(ex.len() >= 3);
        assert_eq!(ex[0].kind, ExtremumKind::Maximum);
        for w in ex.windows(2) {
            assert_relative_eq!(w[1].t - w[0].t, PI / omega, max_relative = 0.01);
        }
        assert_relative_eq!(ex[0].value, 1.0, max_relative = 1e-4);
    }
}
