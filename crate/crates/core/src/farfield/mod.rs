//! Far-field synthesis from VSH coefficients, coefficient extraction by
//! surface quadrature, and the radiation quantities derived from them.
//!
//! Everything works with the modified field `E~ = k r exp(j k r) E`, so no
//! operation takes a radius. Coefficients are `a^M` for the magnetic family
//! and the modified `a~^E = -eta0 a^E` for the electric family, which makes
//! both families carry the same units.

mod grid;

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use grid::{gauss_legendre, PatternGrid, SphereGrid};

use crate::vsh::{Mode, ModeSet, Multipole, TangentVector};
use crate::{Error, Result, ETA0};

/// Relative coefficient change tolerated when the quadrature grid is doubled.
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-6;

/// Complex VSH amplitudes over a [`ModeSet`], stored in mode-set order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VshCoefficients {
    pub mode_set: ModeSet,
    pub values: Vec<Complex64>,
}

impl VshCoefficients {
    pub fn new(mode_set: ModeSet, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != mode_set.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a mode set of {}",
                values.len(),
                mode_set.len()
            )));
        }
        Ok(Self { mode_set, values })
    }

    pub fn zeros(mode_set: ModeSet) -> Self {
        let n = mode_set.len();
        Self {
            mode_set,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_vector(mode_set: ModeSet, v: &DVector<Complex64>) -> Result<Self> {
        Self::new(mode_set, v.iter().copied().collect())
    }

    pub fn to_vector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.values)
    }

    pub fn get(&self, kind: Multipole, l: u32, m: i32) -> Option<Complex64> {
        self.mode_set.position(kind, l, m).map(|q| self.values[q])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Mode, Complex64)> {
        self.mode_set.modes.iter().zip(self.values.iter().copied())
    }

    /// Magnetic amplitudes `a^M_{l,m}`.
    pub fn a_m(&self) -> impl Iterator<Item = (&Mode, Complex64)> {
        self.iter().filter(|(m, _)| m.kind == Multipole::Magnetic)
    }

    /// Modified electric amplitudes `a~^E_{l,m}`.
    pub fn a_e_mod(&self) -> impl Iterator<Item = (&Mode, Complex64)> {
        self.iter().filter(|(m, _)| m.kind == Multipole::Electric)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mode_set: self.mode_set.clone(),
            values: self.values.iter().map(|c| c * factor).collect(),
        }
    }

    /// Largest `|a - b|` relative to `max |b|`.
    pub fn relative_difference(&self, reference: &Self) -> f64 {
        let scale = reference.max_abs().max(f64::MIN_POSITIVE);
        self.values
            .iter()
            .zip(&reference.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale
    }
}

/// Evaluates the modified field `sum j^(l+1) [a^M X + a~^E r x X]` at one direction.
pub fn synthesize(coeffs: &VshCoefficients, theta: f64, phi: f64) -> TangentVector {
    let mut out = TangentVector::ZERO;
    for (mode, c) in coeffs.iter() {
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let phase = Complex64::from_polar(1.0, mode.m as f64 * phi);
        out += mode.basis_meridian(theta) * (c * mode.radiation_phase() * phase);
    }
    out
}

/// `exp(j m phi)` for `m` in `-max_m..=max_m` (index `m + max_m`).
fn azimuth_phases(phis: &[f64], max_m: u32) -> Vec<Vec<Complex64>> {
    let width = 2 * max_m as usize + 1;
    phis.iter()
        .map(|&p| {
            (0..width)
                .map(|i| Complex64::from_polar(1.0, (i as i64 - max_m as i64) as f64 * p))
                .collect()
        })
        .collect()
}

/// Field on the outer product `thetas x phis`, theta-major.
///
/// The azimuthal factor of every mode separates, so the cost is
/// `O(n_theta * modes + n_theta * n_phi * (2 max|m| + 1))`.
pub fn synthesize_grid(
    coeffs: &VshCoefficients,
    thetas: &[f64],
    phis: &[f64],
) -> Vec<TangentVector> {
    let max_m = coeffs.mode_set.max_order();
    let width = 2 * max_m as usize + 1;
    let phases = azimuth_phases(phis, max_m);
    let mut out = Vec::with_capacity(thetas.len() * phis.len());
    let weighted: Vec<(usize, &Mode, Complex64)> = coeffs
        .iter()
        .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
        .map(|(mode, c)| {
            (
                (mode.m + max_m as i32) as usize,
                mode,
                c * mode.radiation_phase(),
            )
        })
        .collect();
    let mut per_order = vec![TangentVector::ZERO; width];
    for &theta in thetas {
        per_order.iter_mut().for_each(|v| *v = TangentVector::ZERO);
        for &(slot, mode, c) in &weighted {
            per_order[slot] += mode.basis_meridian(theta) * c;
        }
        for row in &phases {
            let mut acc = TangentVector::ZERO;
            for (f, &ph) in per_order.iter().zip(row) {
                acc += *f * ph;
            }
            out.push(acc);
        }
    }
    out
}

/// Precomputed quadrature projection onto a mode set.
///
/// Holds the conjugated meridian basis at every polar node so repeated
/// decompositions (reference sets, orientation searches) only pay for
/// field evaluations.
#[derive(Debug, Clone)]
pub struct Projector {
    mode_set: ModeSet,
    grid: SphereGrid,
    max_m: u32,
    /// `basis[i][q]`: basis of mode `q` at `theta[i]`, `phi = 0`.
    basis: Vec<Vec<TangentVector>>,
    phases: Vec<Vec<Complex64>>,
}

impl Projector {
    pub fn new(mode_set: &ModeSet, grid: &SphereGrid) -> Self {
        let basis = grid
            .theta
            .iter()
            .map(|&t| mode_set.iter().map(|m| m.basis_meridian(t)).collect())
            .collect();
        let max_m = mode_set.max_order();
        Self {
            mode_set: mode_set.clone(),
            grid: grid.clone(),
            max_m,
            basis,
            phases: azimuth_phases(&grid.phi, max_m),
        }
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn mode_set(&self) -> &ModeSet {
        &self.mode_set
    }

    /// Projects field samples taken at `grid.points()` (theta-major).
    pub fn project_samples(&self, samples: &[TangentVector]) -> Result<VshCoefficients> {
        let n_phi = self.grid.n_phi();
        if samples.len() != self.grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {}-point grid",
                samples.len(),
                self.grid.len()
            )));
        }
        let width = 2 * self.max_m as usize + 1;
        let dphi = self.grid.phi_weight();
        let mut acc = vec![Complex64::new(0.0, 0.0); self.mode_set.len()];
        let mut per_order = vec![TangentVector::ZERO; width];
        for (i, row) in samples.chunks(n_phi).enumerate() {
            // azimuthal Fourier components G_m(theta_i)
            for (slot, g) in per_order.iter_mut().enumerate() {
                let mut sum = TangentVector::ZERO;
                for (e, ph) in row.iter().zip(&self.phases) {
                    sum += *e * ph[slot].conj();
                }
                *g = sum * dphi;
            }
            let w = self.grid.theta_weights[i];
            for (q, mode) in self.mode_set.iter().enumerate() {
                let g = per_order[(mode.m + self.max_m as i32) as usize];
                acc[q] += g.dot_conj(self.basis[i][q]) * w;
            }
        }
        let values = self
            .mode_set
            .iter()
            .zip(acc)
            .map(|(mode, a)| a * mode.radiation_phase().conj())
            .collect();
        VshCoefficients::new(self.mode_set.clone(), values)
    }

    pub fn project<F>(&self, field: F) -> VshCoefficients
    where
        F: Fn(f64, f64) -> TangentVector,
    {
        let samples: Vec<_> = self.grid.points().map(|(t, p, _)| field(t, p)).collect();
        self.project_samples(&samples)
            .expect("sample count matches grid")
    }
}

/// Single-pass quadrature projection without a convergence check.
pub fn project<F>(field: F, mode_set: &ModeSet, grid: &SphereGrid) -> VshCoefficients
where
    F: Fn(f64, f64) -> TangentVector,
{
    Projector::new(mode_set, grid).project(field)
}

/// Extracts VSH coefficients from a field by quadrature, verifying that
/// doubling the grid changes no coefficient by more than
/// [`DEFAULT_CONVERGENCE_TOL`] relative to the largest coefficient.
pub fn decompose<F>(field: F, mode_set: &ModeSet, grid: &SphereGrid) -> Result<VshCoefficients>
where
    F: Fn(f64, f64) -> TangentVector,
{
    decompose_with_tolerance(field, mode_set, grid, Some(DEFAULT_CONVERGENCE_TOL))
}

/// [`decompose`] with a configurable convergence tolerance; `None` skips the
/// doubled-grid check. When checked, the finer-grid result is returned.
pub fn decompose_with_tolerance<F>(
    field: F,
    mode_set: &ModeSet,
    grid: &SphereGrid,
    tolerance: Option<f64>,
) -> Result<VshCoefficients>
where
    F: Fn(f64, f64) -> TangentVector,
{
    let coarse = project(&field, mode_set, grid);
    let Some(tol) = tolerance else {
        return Ok(coarse);
    };
    let fine = project(&field, mode_set, &grid.doubled());
    if fine.max_abs() == 0.0 {
        return Ok(fine);
    }
    let change = coarse.relative_difference(&fine);
    if change > tol {
        return Err(Error::NonConvergence {
            change,
            tolerance: tol,
        });
    }
    Ok(fine)
}

/// Total radiated power `P = sum(|a^M|^2 + |a~^E|^2) / (2 eta0 k^2)`.
pub fn radiated_power(coeffs: &VshCoefficients, k: f64) -> f64 {
    coeffs.norm_sqr() / (2.0 * ETA0 * k * k)
}

/// Radiated power by direct quadrature of `|E~|^2 / (2 eta0 k^2)`.
pub fn quadrature_power<F>(field: F, grid: &SphereGrid, k: f64) -> f64
where
    F: Fn(f64, f64) -> TangentVector,
{
    let integral: f64 = grid
        .points()
        .map(|(t, p, w)| w * field(t, p).norm_sqr())
        .sum();
    integral / (2.0 * ETA0 * k * k)
}

/// `R_r = 2 P / |I|^2`.
pub fn radiation_resistance(power: f64, current: f64) -> Result<f64> {
    if current == 0.0 {
        return Err(Error::InvalidInput("terminal current is zero".into()));
    }
    Ok(2.0 * power / (current * current))
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> (f64, f64) {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (hi - lo).abs() <= rel_tol * (1.0 + x1.abs()) {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximum of an intensity pattern: the best point of a 1 degree grid,
/// refined by alternating golden-section searches in theta and phi.
///
/// `coarse` must hold `intensity` sampled on `PatternGrid::uniform_degrees(1.0)`.
pub fn refine_maximum<F>(intensity: F, coarse_grid: &PatternGrid, coarse: &[f64]) -> (f64, f64, f64)
where
    F: Fn(f64, f64) -> f64,
{
    let n_phi = coarse_grid.phi.len();
    let (best, &value) = coarse
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty coarse grid");
    let mut theta = coarse_grid.theta[best / n_phi];
    let mut phi = coarse_grid.phi[best % n_phi];
    let mut value = value;
    let step = 1f64.to_radians();
    for _ in 0..50 {
        let before = value;
        let (t, v) = golden_max(
            |t| intensity(t, phi),
            (theta - step).max(0.0),
            (theta + step).min(PI),
            1e-10,
        );
        if v > value {
            theta = t;
            value = v;
        }
        let (p, v) = golden_max(|p| intensity(theta, p), phi - step, phi + step, 1e-10);
        if v > value {
            phi = p.rem_euclid(2.0 * PI);
            value = v;
        }
        if value - before <= 1e-8 * value.abs() {
            break;
        }
    }
    (theta, phi, value)
}

/// `max |E~|^2` over the sphere for a VSH expansion.
pub fn max_intensity(coeffs: &VshCoefficients) -> (f64, f64, f64) {
    let coarse_grid = PatternGrid::uniform_degrees(1.0).expect("valid step");
    let coarse: Vec<f64> = synthesize_grid(coeffs, &coarse_grid.theta, &coarse_grid.phi)
        .into_iter()
        .map(|e| e.norm_sqr())
        .collect();
    refine_maximum(
        |t, p| synthesize(coeffs, t, p).norm_sqr(),
        &coarse_grid,
        &coarse,
    )
}

/// Directivity `D = 4 pi max|E~|^2 / (2 eta0 k^2 P)`.
pub fn directivity(coeffs: &VshCoefficients, k: f64) -> Result<f64> {
    let power = radiated_power(coeffs, k);
    if power <= 0.0 {
        return Err(Error::InvalidInput(
            "directivity of a pattern with zero power".into(),
        ));
    }
    let (_, _, peak) = max_intensity(coeffs);
    Ok(4.0 * PI * peak / (2.0 * ETA0 * k * k * power))
}

/// Radiation quantities of one antenna at a given terminal current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiationSummary {
    pub power: f64,
    pub radiation_resistance: f64,
    pub directivity: f64,
    pub directivity_db: f64,
    pub terminal_current: f64,
}

impl RadiationSummary {
    pub fn from_parts(power: f64, peak_intensity: f64, k: f64, current: f64) -> Result<Self> {
        if power <= 0.0 {
            return Err(Error::InvalidInput("pattern has zero power".into()));
        }
        let d = 4.0 * PI * peak_intensity / (2.0 * ETA0 * k * k * power);
        Ok(Self {
            power,
            radiation_resistance: radiation_resistance(power, current)?,
            directivity: d,
            directivity_db: 10.0 * d.log10(),
            terminal_current: current,
        })
    }

    pub fn from_coefficients(coeffs: &VshCoefficients, k: f64, current: f64) -> Result<Self> {
        let (_, _, peak) = max_intensity(coeffs);
        Self::from_parts(radiated_power(coeffs, k), peak, k, current)
    }
}

/// Imposes `a_{l,-m} = (-1)^m conj(a_{l,m})` on both families.
///
/// `a^_{l,m} = (a_{l,m} + (-1)^m conj(a_{l,-m})) / 2` for `m > 0`, the
/// negative orders follow from the relation, and `m = 0` entries lose their
/// imaginary part.
pub fn enforce_symmetry(coeffs: &VshCoefficients) -> Result<VshCoefficients> {
    let set = &coeffs.mode_set;
    let mut out = coeffs.values.clone();
    for (q, mode) in set.iter().enumerate() {
        if mode.m < 0 {
            continue;
        }
        if mode.m == 0 {
            out[q] = Complex64::new(coeffs.values[q].re, 0.0);
            continue;
        }
        let q_neg = set.position(mode.kind, mode.l, -mode.m).ok_or_else(|| {
            Error::InvalidInput(format!("mode set lacks the -m partner of {mode}"))
        })?;
        let sign = if mode.m % 2 == 0 { 1.0 } else { -1.0 };
        let fixed = 0.5 * (coeffs.values[q] + sign * coeffs.values[q_neg].conj());
        out[q] = fixed;
        out[q_neg] = sign * fixed.conj();
    }
    VshCoefficients::new(set.clone(), out)
}

/// RMS of `(|E_ref| - |E_rec|) / max|E_ref|` over matching samples.
pub fn rms_field_error(
    reference: &[TangentVector],
    reconstructed: &[TangentVector],
) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::InvalidInput("empty pattern grid".into()));
    }
    if reference.len() != reconstructed.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} reference samples vs {} reconstructed",
            reference.len(),
            reconstructed.len()
        )));
    }
    let peak = reference.iter().map(|e| e.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::InvalidInput(
            "reference pattern is identically zero".into(),
        ));
    }
    let mean_sq = reference
        .iter()
        .zip(reconstructed)
        .map(|(a, b)| ((a.norm() - b.norm()) / peak).powi(2))
        .sum::<f64>()
        / reference.len() as f64;
    Ok(mean_sq.sqrt())
}
