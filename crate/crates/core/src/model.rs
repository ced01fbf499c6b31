//! Physical parameters, the spatial grid and the derived EIT quantities.
//!
//! Everything is stored in SI units with the reduced Planck constant divided
//! out: potentials are angular frequencies (U/ħ), the effective mass is m/ħ
//! in s·m⁻², and the vector potential is A_x/ħ in m⁻¹.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Speed of light in vacuum [m/s]. Only used to quote the probe transit time
/// that justifies the quasi-static probe treatment.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Unit multipliers to SI.
pub mod units {
    use std::f64::consts::PI;

    /// 2π × 1 MHz in rad/s.
    pub const MHZ_X2PI: f64 = 2.0 * PI * 1e6;
    /// 1 rad·kHz in rad/s.
    pub const RAD_KHZ: f64 = 1e3;
    pub const MM: f64 = 1e-3;
    pub const MS: f64 = 1e-3;
    pub const US: f64 = 1e-6;
    pub const NS: f64 = 1e-9;
    /// Natural linewidth used by every preset: Γ = 2π × 5.2 MHz.
    pub const GAMMA_D1: f64 = 5.2 * MHZ_X2PI;
}

/// Constants of the EIT medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    /// Excited-state decay rate Γ [rad/s].
    pub gamma_e: f64,
    /// Ground-state dephasing γ [rad/s].
    pub gamma_d: f64,
    /// Probe one-photon detuning Δp [rad/s].
    pub delta_p: f64,
    /// Optical depth ξ.
    pub optical_depth: f64,
    /// Medium length L [m].
    pub length: f64,
    /// Baseline control Rabi frequency Ωc [rad/s].
    pub omega_c: f64,
}

impl MediumParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma_e", self.gamma_e),
            ("optical_depth", self.optical_depth),
            ("length", self.length),
            ("omega_c", self.omega_c),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.gamma_d.is_finite() && self.gamma_d >= 0.0) {
            return Err(Error::Parameter(format!(
                "gamma_d must be non-negative, got {}",
                self.gamma_d
            )));
        }
        if !self.delta_p.is_finite() {
            return Err(Error::Parameter("delta_p must be finite".into()));
        }
        if self.delta_p == 0.0 {
            return Err(Error::Singular(
                "delta_p = 0 makes the effective mass diverge".into(),
            ));
        }
        Ok(())
    }

    pub fn derived(&self) -> Result<DerivedParams> {
        self.validate()?;
        let eta = derive_eta(self.gamma_e, self.optical_depth, self.length)?;
        let m_reduced = reduced_mass(eta, self.delta_p, self.omega_c)?;
        Ok(DerivedParams {
            eta,
            m_reduced,
            diffusion_ratio: self.gamma_e / (2.0 * self.delta_p),
        })
    }

    /// Time for light to cross the medium, L/c.
    pub fn light_transit_time(&self) -> f64 {
        self.length / SPEED_OF_LIGHT
    }
}

/// Quantities derived from [`MediumParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// Light-matter coupling η [rad s⁻¹ m⁻¹].
    pub eta: f64,
    /// Reduced effective mass m/ħ [s·m⁻²].
    pub m_reduced: f64,
    /// Γ/(2Δp), the relative strength of the diffusion term.
    pub diffusion_ratio: f64,
}

/// η = Γξ/(2L).
pub fn derive_eta(gamma_e: f64, optical_depth: f64, length: f64) -> Result<f64> {
    if !(gamma_e > 0.0 && optical_depth > 0.0 && length > 0.0) {
        return Err(Error::Parameter(format!(
            "eta needs positive inputs (gamma_e={gamma_e}, optical_depth={optical_depth}, length={length})"
        )));
    }
    Ok(gamma_e * optical_depth / (2.0 * length))
}

/// m/ħ = η²/(2ΔpΩc²).
pub fn reduced_mass(eta: f64, delta_p: f64, omega_c: f64) -> Result<f64> {
    if delta_p == 0.0 {
        return Err(Error::Singular("effective mass diverges at delta_p = 0".into()));
    }
    if !(omega_c > 0.0) {
        return Err(Error::Parameter(format!("omega_c must be positive, got {omega_c}")));
    }
    Ok(eta * eta / (2.0 * delta_p * omega_c * omega_c))
}

/// EIT group velocity (|ΩcR|² − |ΩcL|²)/(2η) [m/s].
pub fn group_velocity(omega_c_r: f64, omega_c_l: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::Parameter(format!("eta must be positive, got {eta}")));
    }
    Ok((omega_c_r * omega_c_r - omega_c_l * omega_c_l) / (2.0 * eta))
}

/// A_x/ħ = (m/ħ)·V_g [m⁻¹].
pub fn reduced_vector_potential(m_reduced: f64, v_g: f64) -> f64 {
    m_reduced * v_g
}

/// Uniform 1D grid including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl SpatialGrid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < Self::MIN_POINTS {
            return Err(Error::Parameter(format!(
                "grid needs at least {} points, got {n}",
                Self::MIN_POINTS
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::Parameter(format!(
                "grid bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        Ok(Self { x_min, x_max, n })
    }

    /// Grid over the medium, [−L/2, L/2].
    pub fn spanning(length: f64, n: usize) -> Result<Self> {
        Self::new(-0.5 * length, 0.5 * length, n)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let dx = self.dx();
        (0..self.n).map(move |i| self.x_min + i as f64 * dx)
    }

    /// Same span, `n` replaced.
    pub fn with_points(&self, n: usize) -> Result<Self> {
        Self::new(self.x_min, self.x_max, n)
    }
}

/// Real-valued function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    pub grid: SpatialGrid,
    pub values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Usage(format!(
                "field has {} samples but the grid has {} points",
                values.len(),
                grid.n
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().map(f).collect();
        Self { grid, values }
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid,
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

/// Complex-valued function sampled on a grid (ρ21, ρ31, Ωp, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: SpatialGrid,
    pub values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Usage(format!(
                "field has {} samples but the grid has {} points",
                values.len(),
                grid.n
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n],
        }
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().map(f).collect();
        Self { grid, values }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}
