//! Counter-propagating control-field schedules.
//!
//! Every protocol is an intensity imbalance s(t) applied as
//! ΩcR = (Ωc/√2)√(1+s), ΩcL = (Ωc/√2)√(1−s), which keeps the total control
//! power, and therefore the effective mass, fixed while producing a uniform
//! vector potential A_x/ħ = s·η/(4Δp).

use crate::error::{Error, Result};

/// One Gaussian-windowed sinusoid β·sin(νt)·exp[−((t−ε)/τ)²].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPulse {
    pub beta: f64,
    /// Carrier angular frequency [rad/s].
    pub nu: f64,
    /// Envelope centre [s].
    pub epsilon: f64,
    /// Envelope 1/e half-width [s].
    pub tau: f64,
}

impl GaussianPulse {
    pub fn envelope(&self, t: f64) -> f64 {
        let z = (t - self.epsilon) / self.tau;
        (-z * z).exp()
    }

    pub fn signal(&self, t: f64) -> f64 {
        self.beta * (self.nu * t).sin() * self.envelope(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Modulation {
    Static,
    /// β·sin(ν(t − t_start)) switched on at t_start.
    Sinusoidal { beta: f64, nu: f64, t_start: f64 },
    GaussianPulses(Vec<GaussianPulse>),
}

impl Modulation {
    pub fn signal(&self, t: f64) -> f64 {
        match self {
            Modulation::Static => 0.0,
            Modulation::Sinusoidal { beta, nu, t_start } => {
                if t < *t_start {
                    0.0
                } else {
                    beta * (nu * (t - t_start)).sin()
                }
            }
            Modulation::GaussianPulses(pulses) => pulses.iter().map(|p| p.signal(t)).sum(),
        }
    }

    /// Upper bound on |s(t)| from the envelopes alone.
    pub fn envelope_bound(&self, t: f64) -> f64 {
        match self {
            Modulation::Static => 0.0,
            Modulation::Sinusoidal { beta, t_start, .. } => {
                if t < *t_start {
                    0.0
                } else {
                    beta.abs()
                }
            }
            Modulation::GaussianPulses(pulses) => {
                pulses.iter().map(|p| p.beta.abs() * p.envelope(t)).sum()
            }
        }
    }
}

/// Validated schedule: sup|s| < 1 over the scenario duration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSpec {
    modulation: Modulation,
    omega_c: f64,
}

/// Dense samples used to check sup|s| at construction.
pub const VALIDATION_SAMPLES: usize = 100_000;
/// Required distance of sup|s| from 1.
pub const VALIDATION_MARGIN: f64 = 1e-3;

impl ScheduleSpec {
    pub fn new(modulation: Modulation, omega_c: f64, duration: f64) -> Result<Self> {
        if !(omega_c.is_finite() && omega_c > 0.0) {
            return Err(Error::Parameter(format!("omega_c must be positive, got {omega_c}")));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::Parameter(format!("duration must be positive, got {duration}")));
        }
        match &modulation {
            Modulation::Static => {}
            Modulation::Sinusoidal { beta, nu, t_start } => {
                check_beta(*beta)?;
                if !(nu.is_finite() && t_start.is_finite() && *t_start >= 0.0) {
                    return Err(Error::Parameter("sinusoidal drive needs finite nu and t_start >= 0".into()));
                }
            }
            Modulation::GaussianPulses(pulses) => {
                if pulses.is_empty() {
                    return Err(Error::Parameter("pulse list is empty".into()));
                }
                for p in pulses {
                    check_beta(p.beta)?;
                    if !(p.tau.is_finite() && p.tau > 0.0 && p.nu.is_finite() && p.epsilon.is_finite()) {
                        return Err(Error::Parameter(format!("invalid pulse {p:?}")));
                    }
                }
            }
        }
        let spec = Self { modulation, omega_c };
        let step = duration / (VALIDATION_SAMPLES - 1) as f64;
        let (t_peak, peak) = (0..VALIDATION_SAMPLES)
            .map(|i| {
                let t = i as f64 * step;
                (t, spec.signal(t).abs())
            })
            .fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        if peak >= 1.0 - VALIDATION_MARGIN {
            return Err(Error::Parameter(format!(
                "modulation reaches |s| = {peak} at t = {t_peak:e} s; the control radicand 1 − |s| would go negative"
            )));
        }
        Ok(spec)
    }

    pub fn modulation(&self) -> &Modulation {
        &self.modulation
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    /// Imbalance s(t).
    pub fn signal(&self, t: f64) -> f64 {
        self.modulation.signal(t)
    }

    /// (ΩcR, ΩcL) at time t.
    pub fn control_pair(&self, t: f64) -> (f64, f64) {
        let s = self.signal(t);
        let half = self.omega_c * std::f64::consts::FRAC_1_SQRT_2;
        (half * (1.0 + s).sqrt(), half * (1.0 - s).sqrt())
    }

    /// A_x/ħ = s(t)·η/(4Δp) [m⁻¹].
    pub fn ax_reduced(&self, eta: f64, delta_p: f64, t: f64) -> f64 {
        self.signal(t) * eta / (4.0 * delta_p)
    }

    /// Interval over which the drive is on. Gaussian trains span from the
    /// first envelope's ε−τ to the last envelope's ε+τ.
    pub fn modulation_window(&self) -> Option<(f64, f64)> {
        match &self.modulation {
            Modulation::Static => None,
            Modulation::Sinusoidal { t_start, .. } => Some((*t_start, f64::INFINITY)),
            Modulation::GaussianPulses(pulses) => {
                let start = pulses.iter().map(|p| p.epsilon - p.tau).fold(f64::INFINITY, f64::min);
                let end = pulses.iter().map(|p| p.epsilon + p.tau).fold(f64::NEG_INFINITY, f64::max);
                Some((start, end))
            }
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta.abs() < 1.0) {
        return Err(Error::Parameter(format!("|beta| must be below 1, got {beta}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::units::{GAMMA_D1, MM, MS, RAD_KHZ};
    use crate::model::{derive_eta, group_velocity, reduced_mass, reduced_vector_potential};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const OC: f64 = 1.5 * GAMMA_D1;

    fn rabi() -> ScheduleSpec {
        ScheduleSpec::new(
            Modulation::Sinusoidal { beta: 0.07, nu: 376.4 * RAD_KHZ, t_start: 0.06 * MS },
            OC,
            0.3 * MS,
        )
        .unwrap()
    }

    #[test]
    fn static_is_balanced() {
        let s = ScheduleSpec::new(Modulation::Static, OC, 1e-3).unwrap();
        for t in [0.0, 1e-4, 7e-4] {
            assert_eq!(s.signal(t), 0.0);
            let (r, l) = s.control_pair(t);
            assert_eq!(r, l);
            assert_relative_eq!(r, OC / 2f64.sqrt(), max_relative = 1e-15);
        }
    }

    #[test]
    fn sinusoid_gated_and_peaks() {
        let s = rabi();
        assert_eq!(s.signal(0.059 * MS), 0.0);
        let nu = 376.4 * RAD_KHZ;
        let first_peak = 0.06 * MS + PI / (2.0 * nu);
        assert_relative_eq!(s.signal(first_peak), 0.07, max_relative = 1e-12);
        let (r, l) = s.control_pair(first_peak);
        assert_relative_eq!(r / OC, 0.7314, max_relative = 1e-4);
        assert_relative_eq!(l / OC, 0.6819, max_relative = 1e-4);
    }

    #[test]
    fn pulse_peak_equals_beta() {
        let nu = 490.0 * RAD_KHZ;
        // choose ε so that sin(νε) = 1
        let eps = (PI / 2.0 + 2.0 * PI * 60.0) / nu;
        let s = ScheduleSpec::new(
            Modulation::GaussianPulses(vec![GaussianPulse { beta: 0.055, nu, epsilon: eps, tau: 0.3 * MS }]),
            OC,
            2.0 * MS,
        )
        .unwrap();
        assert_relative_eq!(s.signal(eps), 0.055, max_relative = 1e-9);
    }

    #[test]
    fn near_unit_imbalance_drains_left_control() {
        let s = ScheduleSpec::new(
            Modulation::Sinusoidal { beta: 0.9989, nu: 1e4, t_start: 0.0 },
            OC,
            1e-3,
        )
        .unwrap();
        let t = PI / 2.0 / 1e4;
        let (r, l) = s.control_pair(t);
        assert!(l < 0.025 * OC);
        assert_relative_eq!(r * r + l * l, OC * OC, max_relative = 1e-12);
    }

    #[test]
    fn rejects_negative_radicand() {
        let too_big = vec![
            GaussianPulse { beta: 0.6, nu: 1e4, epsilon: 5e-4, tau: 3e-4 },
            GaussianPulse { beta: 0.6, nu: 1e4, epsilon: 5e-4, tau: 3e-4 },
        ];
        assert!(ScheduleSpec::new(Modulation::GaussianPulses(too_big), OC, 1e-3).is_err());
        assert!(ScheduleSpec::new(
            Modulation::Sinusoidal { beta: 1.0, nu: 1.0, t_start: 0.0 },
            OC,
            1e-3
        )
        .is_err());
        assert!(ScheduleSpec::new(Modulation::GaussianPulses(vec![]), OC, 1e-3).is_err());
    }

    #[test]
    fn ax_matches_composition() {
        let eta = derive_eta(GAMMA_D1, 800.0, 8.0 * MM).unwrap();
        let dp = 4.6 * GAMMA_D1;
        let m = reduced_mass(eta, dp, OC).unwrap();
        let s = rabi();
        let peak = 0.06 * MS + PI / (2.0 * 376.4 * RAD_KHZ);
        assert_relative_eq!(s.ax_reduced(eta, dp, peak), 190.2, max_relative = 1e-3);
        assert_eq!(s.ax_reduced(eta, dp, 0.0), 0.0);
        for i in 0..1000 {
            let t = 0.3 * MS * (i as f64 * 0.618_033_988_7).fract();
            let (r, l) = s.control_pair(t);
            let composed = reduced_vector_potential(m, group_velocity(r, l, eta).unwrap());
            let direct = s.ax_reduced(eta, dp, t);
            assert!((composed - direct).abs() <= 1e-12 * direct.abs().max(1e-3 * 2717.0));
        }
    }

    #[test]
    fn windows() {
        let two = ScheduleSpec::new(
            Modulation::GaussianPulses(vec![
                GaussianPulse { beta: 0.055, nu: 490.0 * RAD_KHZ, epsilon: 0.85 * MS, tau: 0.3 * MS },
                GaussianPulse { beta: 0.055, nu: 684.0 * RAD_KHZ, epsilon: 1.15 * MS, tau: 0.3 * MS },
            ]),
            2.0 * GAMMA_D1,
            2.0 * MS,
        )
        .unwrap();
        let (a, b) = two.modulation_window().unwrap();
        assert_relative_eq!(a, 0.55 * MS, max_relative = 1e-12);
        assert_relative_eq!(b, 1.45 * MS, max_relative = 1e-12);
        assert!(ScheduleSpec::new(Modulation::Static, OC, 1.0).unwrap().modulation_window().is_none());
    }
}
