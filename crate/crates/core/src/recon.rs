//! Channel calibration from reference antennas and reconstruction of an
//! antenna's VSH coefficients from its probe voltages.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chamber::{check_information_budget, voltage_matrix, ChamberModel, ChannelMatrix};
use crate::farfield::{enforce_symmetry, radiated_power, radiation_resistance, VshCoefficients};
use crate::linalg::{inverse, least_squares, solve, CMatrix, CVector, ConditionLimits};
use crate::vsh::{ModeSet, TangentVector};
use crate::{Error, Result};

/// Reference coefficient matrix `A_R` (modes x references) and the measured
/// reference voltages `V_R` (probes x references).
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSet {
    pub mode_set: ModeSet,
    pub a_matrix: CMatrix,
    pub v_matrix: CMatrix,
}

impl CalibrationSet {
    pub fn n_references(&self) -> usize {
        self.a_matrix.ncols()
    }

    pub fn n_probes(&self) -> usize {
        self.v_matrix.nrows()
    }
}

/// Assembles `A_R` and `V_R` in reference order.
pub fn calibrate(v_r: &CMatrix, references: &[VshCoefficients]) -> Result<CalibrationSet> {
    let Some(first) = references.first() else {
        return Err(Error::InvalidInput(
            "calibration needs at least one reference".into(),
        ));
    };
    let mode_set = first.mode_set.clone();
    if let Some(bad) = references.iter().position(|r| r.mode_set != mode_set) {
        return Err(Error::DimensionMismatch(format!(
            "reference {bad} uses a different mode set than reference 0"
        )));
    }
    if v_r.ncols() != references.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} voltage columns for {} references",
            v_r.ncols(),
            references.len()
        )));
    }
    if v_r.nrows() < mode_set.len() {
        return Err(Error::InvalidInput(format!(
            "{} probes cannot resolve {} modes",
            v_r.nrows(),
            mode_set.len()
        )));
    }
    let mut a_matrix = CMatrix::zeros(mode_set.len(), references.len());
    for (j, r) in references.iter().enumerate() {
        a_matrix.set_column(j, &r.to_vector());
    }
    Ok(CalibrationSet {
        mode_set,
        a_matrix,
        v_matrix: v_r.clone(),
    })
}

/// Simulates the reference measurements in `chamber` and calibrates.
pub fn calibrate_in_chamber<F>(
    chamber: &ChamberModel,
    references: &[VshCoefficients],
    fields: &[F],
) -> Result<CalibrationSet>
where
    F: Fn(f64, f64) -> TangentVector,
{
    if let Some(first) = references.first() {
        check_information_budget(chamber.n_probes, chamber.n_paths, first.mode_set.len())?;
    }
    if fields.len() != references.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} reference fields for {} coefficient sets",
            fields.len(),
            references.len()
        )));
    }
    calibrate(&voltage_matrix(chamber, fields), references)
}

/// `T = V_R A_R^-1`.
pub fn channel_from_calibration(cal: &CalibrationSet) -> Result<ChannelMatrix> {
    channel_from_calibration_with(cal, ConditionLimits::default())
}

pub fn channel_from_calibration_with(
    cal: &CalibrationSet,
    limits: ConditionLimits,
) -> Result<ChannelMatrix> {
    limits.check(&cal.a_matrix, "reference coefficient matrix A_R")?;
    let a_inv = inverse(&cal.a_matrix, "A_R")?;
    ChannelMatrix::new(&cal.v_matrix * a_inv, cal.mode_set.clone())
}

/// `T^-1 = A_R V_R^-1`, available when `V_R` is square and invertible.
pub fn channel_inverse_from_calibration(cal: &CalibrationSet) -> Result<CMatrix> {
    ConditionLimits::default().check(&cal.v_matrix, "reference voltage matrix V_R")?;
    Ok(&cal.a_matrix * inverse(&cal.v_matrix, "V_R")?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// `a = T^-1 v` with `T` from the calibration.
    #[default]
    Inverse,
    /// `w = V_R^-1 v`, `a = A_R w`.
    DirectWeights,
    /// Real weights minimising `|v - V_R w|^2`.
    Lse,
    /// Complex weights minimising `|v - V_R w|^2`.
    LseComplex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weights {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Weights {
    fn to_complex(&self) -> CVector {
        match self {
            Weights::Real(w) => {
                CVector::from_iterator(w.len(), w.iter().map(|&x| Complex64::new(x, 0.0)))
            }
            Weights::Complex(w) => CVector::from_column_slice(w),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            Weights::Real(w) => w.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Weights::Complex(w) => w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt(),
        }
    }

    fn scale(&mut self, s: f64) {
        match self {
            Weights::Real(w) => w.iter_mut().for_each(|x| *x *= s),
            Weights::Complex(w) => w.iter_mut().for_each(|x| *x *= s),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub cond_channel: Option<f64>,
    pub cond_a: Option<f64>,
    pub cond_v: Option<f64>,
    /// `|v - v_e|` for the returned solution.
    pub residual: f64,
    /// Largest `|Im w_i|` for complex weights.
    pub max_imag_weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub coefficients: VshCoefficients,
    pub weights: Option<Weights>,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

fn check_voltage_len(expected: usize, v: &CVector) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "{} voltages for {} probes",
            v.len(),
            expected
        )));
    }
    Ok(())
}

/// `a = T^-1 v`, symmetry enforced.
pub fn reconstruct_inverse(channel: &ChannelMatrix, v: &CVector) -> Result<ReconstructionResult> {
    check_voltage_len(channel.n_probes(), v)?;
    let cond = ConditionLimits::default().check(&channel.entries, "channel matrix T")?;
    let raw = solve(&channel.entries, v, "T")?;
    let coefficients = enforce_symmetry(&VshCoefficients::from_vector(
        channel.mode_set.clone(),
        &raw,
    )?)?;
    let residual = (v - &channel.entries * coefficients.to_vector()).norm();
    Ok(ReconstructionResult {
        coefficients,
        weights: None,
        method: Method::Inverse,
        diagnostics: Diagnostics {
            cond_channel: Some(cond),
            residual,
            ..Default::default()
        },
    })
}

fn from_weights(
    cal: &CalibrationSet,
    v: &CVector,
    weights: Weights,
    method: Method,
    mut diagnostics: Diagnostics,
) -> Result<ReconstructionResult> {
    let w = weights.to_complex();
    let raw = &cal.a_matrix * &w;
    let coefficients =
        enforce_symmetry(&VshCoefficients::from_vector(cal.mode_set.clone(), &raw)?)?;
    diagnostics.residual = (v - &cal.v_matrix * &w).norm();
    Ok(ReconstructionResult {
        coefficients,
        weights: Some(weights),
        method,
        diagnostics,
    })
}

/// `w = V_R^-1 v`, `a = A_R w`.
pub fn reconstruct_weights_direct(
    cal: &CalibrationSet,
    v: &CVector,
) -> Result<ReconstructionResult> {
    check_voltage_len(cal.n_probes(), v)?;
    let cond_v = ConditionLimits::default().check(&cal.v_matrix, "reference voltage matrix V_R")?;
    let w = solve(&cal.v_matrix, v, "V_R")?;
    let max_imag = w.iter().map(|x| x.im.abs()).fold(0.0, f64::max);
    from_weights(
        cal,
        v,
        Weights::Complex(w.iter().copied().collect()),
        Method::DirectWeights,
        Diagnostics {
            cond_v: Some(cond_v),
            max_imag_weight: Some(max_imag),
            ..Default::default()
        },
    )
}

/// Cost `(v - V_R w)^H (v - V_R w)` for real weights.
pub fn lse_cost(v_r: &CMatrix, v: &CVector, w: &[f64]) -> f64 {
    let wc = CVector::from_iterator(w.len(), w.iter().map(|&x| Complex64::new(x, 0.0)));
    (v - v_r * wc).norm_squared()
}

/// Real weights `w = [Re(V_R^H V_R)]^-1 Re(V_R^H v)`; `V_R` may be tall.
pub fn reconstruct_lse(cal: &CalibrationSet, v: &CVector) -> Result<ReconstructionResult> {
    check_voltage_len(cal.n_probes(), v)?;
    let vh = cal.v_matrix.adjoint();
    let normal: DMatrix<f64> = (&vh * &cal.v_matrix).map(|c| c.re);
    let rhs = (&vh * v).map(|c| c.re);
    let normal_c = normal.map(|x| Complex64::new(x, 0.0));
    let cond = ConditionLimits::default()
        .check(&normal_c, "normal matrix Re(V_R^H V_R)")
        .map_err(|e| match e {
            Error::IllConditioned { cond, .. } if !cond.is_finite() => {
                Error::Singular("normal matrix Re(V_R^H V_R)".into())
            }
            other => other,
        })?;
    let w = normal
        .svd(true, true)
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Singular(format!("normal matrix ({e})")))?;
    from_weights(
        cal,
        v,
        Weights::Real(w.iter().copied().collect()),
        Method::Lse,
        Diagnostics {
            cond_v: Some(cond.sqrt()),
            ..Default::default()
        },
    )
}

/// Complex-weight least squares, for comparison with [`reconstruct_lse`].
pub fn reconstruct_lse_complex(cal: &CalibrationSet, v: &CVector) -> Result<ReconstructionResult> {
    check_voltage_len(cal.n_probes(), v)?;
    let cond_v = ConditionLimits::default().check(&cal.v_matrix, "reference voltage matrix V_R")?;
    let w = least_squares(&cal.v_matrix, v, "V_R")?;
    let max_imag = w.iter().map(|x| x.im.abs()).fold(0.0, f64::max);
    from_weights(
        cal,
        v,
        Weights::Complex(w.iter().copied().collect()),
        Method::LseComplex,
        Diagnostics {
            cond_v: Some(cond_v),
            max_imag_weight: Some(max_imag),
            ..Default::default()
        },
    )
}

/// Runs `method` against a calibration.
pub fn reconstruct(
    cal: &CalibrationSet,
    v: &CVector,
    method: Method,
) -> Result<ReconstructionResult> {
    match method {
        Method::Inverse => {
            let channel = channel_from_calibration(cal)?;
            let cond_a = crate::linalg::cond(&cal.a_matrix);
            let mut r = reconstruct_inverse(&channel, v)?;
            r.diagnostics.cond_a = Some(cond_a);
            Ok(r)
        }
        Method::DirectWeights => reconstruct_weights_direct(cal, v),
        Method::Lse => reconstruct_lse(cal, v),
        Method::LseComplex => reconstruct_lse_complex(cal, v),
    }
}

/// Post-hoc amplitude normalisation of a reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Rescale so the weights satisfy `w^T w = 1`.
    UnitWeight,
    /// Rescale so `2 P / |I|^2 = r_meas - r_loss`.
    RadiationResistance {
        r_meas: f64,
        r_loss: f64,
        current: f64,
    },
}

/// Rescales coefficients (and weights) without changing the pattern shape.
pub fn apply_normalization(
    result: &ReconstructionResult,
    mode: Normalization,
    k: f64,
) -> Result<ReconstructionResult> {
    let scale = match mode {
        Normalization::UnitWeight => {
            let w = result.weights.as_ref().ok_or_else(|| {
                Error::InvalidInput("unit-weight normalisation needs a weight vector".into())
            })?;
            let n = w.norm();
            if n == 0.0 {
                return Err(Error::InvalidInput("cannot normalise zero weights".into()));
            }
            1.0 / n
        }
        Normalization::RadiationResistance {
            r_meas,
            r_loss,
            current,
        } => {
            let target = r_meas - r_loss;
            if !(target > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "target radiation resistance {target} ohm must be positive"
                )));
            }
            let now = radiation_resistance(radiated_power(&result.coefficients, k), current)?;
            if now == 0.0 {
                return Err(Error::InvalidInput(
                    "cannot normalise a zero pattern".into(),
                ));
            }
            (target / now).sqrt()
        }
    };
    let mut out = result.clone();
    out.coefficients = result.coefficients.scaled(scale);
    if let Some(w) = out.weights.as_mut() {
        w.scale(scale);
    }
    Ok(out)
}
