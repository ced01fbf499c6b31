//! Dark-state spatial modes: eigenpairs of the loss-free, A_x-free reduced
//! Hamiltonian H = −(1/2m)∂x² + U on the interior of a Dirichlet grid.
//!
//! The solver is Sturm-sequence bisection for the eigenvalues followed by
//! inverse iteration (pivoted tridiagonal LU) for the eigenvectors.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::analysis::trapezoid;
use crate::error::{Error, Result};
use crate::model::{ComplexField, RealField, SpatialGrid};

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// Off-diagonal, length `diag.len() - 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Usage(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul(&self, v: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * v[i + 1];
            }
            out[i] = acc;
        }
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    fn norm_inf(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt() * self.norm_inf().max(1.0);
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.len() {
            if i > 0 {
                q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            }
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th smallest eigenvalue by bisection.
    pub fn eigenvalue(&self, index: usize) -> Result<f64> {
        if index >= self.len() {
            return Err(Error::Usage(format!(
                "eigenvalue {index} requested from a {}x{} matrix",
                self.len(),
                self.len()
            )));
        }
        let (mut lo, mut hi) = self.gershgorin();
        let pad = f64::EPSILON * self.norm_inf().max(1.0);
        lo -= pad;
        hi += pad;
        for iteration in 0..256 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 2.0 * f64::EPSILON * (lo.abs() + hi.abs()) + f64::MIN_POSITIVE || mid == lo || mid == hi {
                return Ok(mid);
            }
            if self.sturm_count(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
            if iteration == 255 {
                break;
            }
        }
        Err(Error::Eigen {
            mode: index,
            iterations: 256,
            detail: format!("bisection bracket [{lo:e}, {hi:e}] did not close"),
        })
    }
}

/// Pivoted LU of a general tridiagonal matrix (the `gttrf` scheme).
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn shifted(t: &SymTridiagonal, shift: f64) -> Self {
        let n = t.len();
        let mut dl = t.off.clone();
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - shift).collect();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let tiny = f64::EPSILON * t.norm_inf().max(f64::MIN_POSITIVE);
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        Self { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Discretized reduced Hamiltonian on the interior points of `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub grid: SpatialGrid,
    pub matrix: SymTridiagonal,
    /// Minimum of U/ħ over the grid; eigenfrequencies are quoted above it.
    pub floor: f64,
}

/// H = −(1/(2m̃))·D₂ + diag(u), Dirichlet at both grid ends.
pub fn build_hamiltonian(grid: &SpatialGrid, m_reduced: f64, u: &RealField) -> Result<Hamiltonian> {
    if !(m_reduced.is_finite() && m_reduced > 0.0) {
        return Err(Error::Parameter(format!(
            "effective mass must be positive, got {m_reduced}"
        )));
    }
    if u.grid != *grid {
        return Err(Error::Usage("potential and Hamiltonian grids differ".into()));
    }
    if u.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("potential has non-finite samples".into()));
    }
    let dx = grid.dx();
    let kin = 1.0 / (2.0 * m_reduced * dx * dx);
    let interior = &u.values[1..grid.n - 1];
    let diag = interior.iter().map(|v| 2.0 * kin + v).collect();
    let off = vec![-kin; interior.len() - 1];
    Ok(Hamiltonian {
        grid: *grid,
        matrix: SymTridiagonal::new(diag, off)?,
        floor: u.values.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    /// Eigen-angular frequency of H [rad/s].
    pub omega: f64,
    /// Real eigenfunction, ∫Ψ² dx = 1, zero at both grid ends.
    pub psi: RealField,
}

/// Lowest eigenmodes of a synthetic potential, ascending in ω.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCatalog {
    pub grid: SpatialGrid,
    pub floor: f64,
    pub modes: Vec<Mode>,
}

impl ModeCatalog {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn omega(&self, index: usize) -> f64 {
        self.modes[index].omega
    }

    /// ωn measured from the bottom of the potential.
    pub fn level(&self, index: usize) -> f64 {
        self.modes[index].omega - self.floor
    }

    pub fn psi(&self, index: usize) -> &RealField {
        &self.modes[index].psi
    }
}

const MAX_INVERSE_ITERATIONS: usize = 12;

/// Lowest `k` eigenpairs of `h`.
pub fn solve_modes(h: &Hamiltonian, k: usize) -> Result<ModeCatalog> {
    let t = &h.matrix;
    let n = t.len();
    if k == 0 || k > n / 2 {
        return Err(Error::Usage(format!(
            "requested {k} modes from a {n}-point interior grid"
        )));
    }
    let dx = h.grid.dx();
    let noise_floor = 64.0 * f64::EPSILON * t.norm_inf();
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut modes = Vec::with_capacity(k);
    let mut hv = vec![0.0; n];

    for index in 0..k {
        let lambda = t.eigenvalue(index)?;
        let lu = TridiagonalLu::shifted(t, lambda);
        // Deterministic, generic start vector.
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.754_877_666).sin())
            .collect();
        normalize(&mut v);
        let mut omega = lambda;
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        while iterations < MAX_INVERSE_ITERATIONS {
            iterations += 1;
            lu.solve(&mut v);
            for prev in &vectors {
                let c = dot(&v, prev);
                v.iter_mut().zip(prev).for_each(|(a, b)| *a -= c * b);
            }
            normalize(&mut v);
            t.mul(&v, &mut hv);
            omega = dot(&v, &hv);
            residual = hv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - omega * b).powi(2))
                .sum::<f64>()
                .sqrt();
            if iterations >= 2 && residual <= (1e-9 * omega.abs()).max(noise_floor) {
                break;
            }
        }
        if !(residual <= (1e-9 * omega.abs()).max(noise_floor)) {
            return Err(Error::Eigen {
                mode: index,
                iterations,
                detail: format!("residual {residual:e} for eigenvalue {omega:e}"),
            });
        }
        fix_sign(&mut v);

        let scale = 1.0 / dx.sqrt();
        let mut full = Vec::with_capacity(h.grid.n);
        full.push(0.0);
        full.extend(v.iter().map(|x| x * scale));
        full.push(0.0);
        modes.push(Mode {
            omega,
            psi: RealField::new(h.grid, full)?,
        });
        vectors.push(v);
    }

    Ok(ModeCatalog {
        grid: h.grid,
        floor: h.floor,
        modes,
    })
}

/// Residual ‖Hv − ωv‖₂ for the unit-2-norm interior vector of a mode.
pub fn residual(h: &Hamiltonian, mode: &Mode) -> f64 {
    let n = h.matrix.len();
    let mut v = mode.psi.values[1..=n].to_vec();
    normalize(&mut v);
    let mut hv = vec![0.0; n];
    h.matrix.mul(&v, &mut hv);
    hv.iter()
        .zip(&v)
        .map(|(a, b)| (a - mode.omega * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

/// Positive at the leftmost lobe peak: the first local maximum of |v|
/// that reaches 10⁻³ of the global maximum.
fn fix_sign(v: &mut [f64]) {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let threshold = 1e-3 * peak;
    let n = v.len();
    let lobe = (0..n)
        .find(|&i| v[i].abs() >= threshold && (i + 1 == n || v[i].abs() >= v[i + 1].abs()))
        .unwrap_or(0);
    if v[lobe] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Central-difference derivative (one-sided at the ends).
pub fn derivative(f: &RealField) -> Vec<f64> {
    let n = f.grid.n;
    let dx = f.grid.dx();
    let v = &f.values;
    (0..n)
        .map(|i| match i {
            0 => (v[1] - v[0]) / dx,
            i if i == n - 1 => (v[n - 1] - v[n - 2]) / dx,
            i => (v[i + 1] - v[i - 1]) / (2.0 * dx),
        })
        .collect()
}

/// ∫ Ψn ∂xΨm dx.
pub fn dipole_integral(psi_n: &RealField, psi_m: &RealField) -> Result<f64> {
    if psi_n.grid != psi_m.grid {
        return Err(Error::Usage("modes live on different grids".into()));
    }
    let d = derivative(psi_m);
    let integrand: Vec<f64> = psi_n.values.iter().zip(&d).map(|(a, b)| a * b).collect();
    Ok(trapezoid(&integrand, psi_n.grid.dx()))
}

/// Ω_nm = (βΩc²/(2iη)) ∫ Ψn* ∂xΨm dx [rad/s].
pub fn effective_rabi(
    beta: f64,
    omega_c: f64,
    eta: f64,
    psi_n: &RealField,
    psi_m: &RealField,
) -> Result<Complex64> {
    let integral = dipole_integral(psi_n, psi_m)?;
    let prefactor = beta * omega_c * omega_c / (2.0 * eta);
    // 1/i = −i
    Ok(Complex64::new(0.0, -prefactor * integral))
}

/// Mode amplitude Σ Ψn·field dx.
pub fn project(field: &ComplexField, psi_n: &RealField) -> Result<Complex64> {
    if field.grid != psi_n.grid {
        return Err(Error::Usage("field and mode live on different grids".into()));
    }
    let dx = field.grid.dx();
    let n = field.grid.n;
    let sum: Complex64 = field
        .values
        .iter()
        .zip(&psi_n.values)
        .enumerate()
        .map(|(i, (f, p))| {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            f * (w * p)
        })
        .sum();
    Ok(sum * dx)
}

/// Plain-text catalog: a `k n dx` header, then one line per mode holding
/// ω_n [rad/s] followed by the n samples of Ψn.
pub fn write_catalog<W: Write>(catalog: &ModeCatalog, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{} {} {:e}", catalog.len(), catalog.grid.n, catalog.grid.dx())?;
    for mode in &catalog.modes {
        write!(w, "{:e}", mode.omega)?;
        for v in &mode.psi.values {
            write!(w, " {v:e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Contents of a catalog file.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogFile {
    pub n: usize,
    pub dx: f64,
    pub modes: Vec<(f64, Vec<f64>)>,
}

pub fn read_catalog<R: BufRead>(r: R) -> Result<CatalogFile> {
    let mut lines = r.lines().enumerate();
    let bad = |line: usize, msg: &str| Error::Config {
        line: Some(line + 1),
        msg: msg.to_string(),
    };
    let (_, header) = lines.next().ok_or_else(|| Error::config("empty catalog file"))?;
    let header = header.map_err(|e| Error::config(e.to_string()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(bad(0, "header must be `k n dx`"));
    }
    let k: usize = fields[0].parse().map_err(|_| bad(0, "bad k"))?;
    let n: usize = fields[1].parse().map_err(|_| bad(0, "bad n"))?;
    let dx: f64 = fields[2].parse().map_err(|_| bad(0, "bad dx"))?;
    let mut modes = Vec::with_capacity(k);
    for (no, line) in lines {
        let line = line.map_err(|e| Error::config(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(no, "non-numeric sample"))?;
        if values.len() != n + 1 {
            return Err(bad(no, "mode line must hold omega and n samples"));
        }
        modes.push((values[0], values[1..].to_vec()));
    }
    if modes.len() != k {
        return Err(Error::config(format!("header promises {k} modes, found {}", modes.len())));
    }
    Ok(CatalogFile { n, dx, modes })
}
