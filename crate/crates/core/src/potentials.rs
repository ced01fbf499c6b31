//! Synthetic scalar potentials and the control detuning that realizes them.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{units, RealField, SpatialGrid};

/// Quadratic-plus-cosine trapping landscape
/// U/ħ = c1·[x² + α²·cos(2πx/λ_f + φ)], with x in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxoniumParams {
    /// Curvature [rad·s⁻¹·mm⁻²].
    pub c1: f64,
    /// Cosine amplitude length α [mm].
    pub alpha: f64,
    /// Cosine period λ_f [mm].
    pub lambda_f: f64,
    /// Phase φ [rad].
    pub phi: f64,
}

impl FluxoniumParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_f.is_finite() && self.lambda_f > 0.0) {
            return Err(Error::Parameter(format!(
                "lambda_f must be positive, got {}",
                self.lambda_f
            )));
        }
        if !(self.c1.is_finite() && self.alpha.is_finite() && self.phi.is_finite()) {
            return Err(Error::Parameter("fluxonium parameters must be finite".into()));
        }
        Ok(())
    }

    /// U/ħ at a position given in metres.
    pub fn eval(&self, x: f64) -> f64 {
        let x_mm = x / units::MM;
        self.c1 * (x_mm * x_mm + self.alpha * self.alpha * (2.0 * PI * x_mm / self.lambda_f + self.phi).cos())
    }
}

/// Real potential U/ħ on the grid plus the uniform dephasing that enters
/// the dynamics as −iγ.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialProfile {
    pub u: RealField,
    pub gamma_d: f64,
}

impl PotentialProfile {
    pub fn with_dephasing(mut self, gamma_d: f64) -> Self {
        self.gamma_d = gamma_d;
        self
    }

    /// Lowest value of U/ħ on the grid.
    pub fn floor(&self) -> f64 {
        self.u.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn fluxonium(params: &FluxoniumParams, grid: &SpatialGrid) -> Result<PotentialProfile> {
    params.validate()?;
    Ok(PotentialProfile {
        u: RealField::from_fn(*grid, |x| params.eval(x)),
        gamma_d: 0.0,
    })
}

/// Estimate of the |A_x|²/(2m) term folded into the realized detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxCorrection {
    /// RMS reduced vector potential [m⁻¹].
    pub ax_rms: f64,
    pub m_reduced: f64,
}

impl AxCorrection {
    pub fn shift(&self) -> f64 {
        self.ax_rms * self.ax_rms / (2.0 * self.m_reduced)
    }
}

/// Control detuning Δc(x) = Δp − U(x)/ħ, optionally lowered by the constant
/// |A_x|²/(2m) estimate.
pub fn detuning_profile(
    profile: &PotentialProfile,
    delta_p: f64,
    correction: Option<AxCorrection>,
) -> RealField {
    let shift = correction.map_or(0.0, |c| c.shift());
    RealField {
        grid: profile.u.grid,
        values: profile.u.values.iter().map(|u| delta_p - u - shift).collect(),
    }
}
