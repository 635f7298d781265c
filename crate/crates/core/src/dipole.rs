//! Closed-form far fields of center-fed dipoles with arbitrary axis
//! orientation, and terminal-current normalisation for transmission-line
//! feeds.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::vsh::TangentVector;
use crate::{Error, Result, ETA0};

/// How the dipole terminals are driven.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Feed {
    /// Terminal current in amperes.
    Current(f64),
    /// Lossless line of impedance `z0` driving a resonant antenna of
    /// resistance `r_a` with incident power `p_inc`.
    MatchedLine { z0: f64, r_a: f64, p_inc: f64 },
}

impl Default for Feed {
    fn default() -> Self {
        Feed::Current(1.0)
    }
}

impl Feed {
    pub fn current(&self) -> Result<f64> {
        match *self {
            Feed::Current(i) => Ok(i),
            Feed::MatchedLine { z0, r_a, p_inc } => terminal_current(z0, r_a, p_inc),
        }
    }
}

/// Terminal current `I0 = sqrt(2 P_inc / Z0) (1 - Gamma)` with
/// `Gamma = (R_a - Z0) / (R_a + Z0)`.
pub fn terminal_current(z0: f64, r_a: f64, p_inc: f64) -> Result<f64> {
    if !(z0 > 0.0) || !(r_a > 0.0) {
        return Err(Error::InvalidInput(format!(
            "impedances must be positive (Z0 = {z0}, R_a = {r_a})"
        )));
    }
    if p_inc < 0.0 {
        return Err(Error::InvalidInput(format!(
            "negative incident power {p_inc}"
        )));
    }
    let gamma = reflection_coefficient(z0, r_a);
    Ok((2.0 * p_inc / z0).sqrt() * (1.0 - gamma))
}

pub fn reflection_coefficient(z0: f64, r_a: f64) -> f64 {
    (r_a - z0) / (r_a + z0)
}

/// A center-fed dipole; length in wavelengths, axis along `(theta0, phi0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleSpec {
    pub length: f64,
    pub theta0: f64,
    pub phi0: f64,
    #[serde(default)]
    pub feed: Feed,
}

impl DipoleSpec {
    pub fn half_wave(theta0: f64, phi0: f64) -> Self {
        Self {
            length: 0.5,
            theta0,
            phi0,
            feed: Feed::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) {
            return Err(Error::InvalidInput(format!(
                "dipole length {} must be positive",
                self.length
            )));
        }
        if !(0.0..=PI).contains(&self.theta0) {
            return Err(Error::InvalidInput(format!(
                "axis polar angle {} outside [0, pi]",
                self.theta0
            )));
        }
        Ok(())
    }

    /// Unit vector along the dipole axis.
    pub fn axis(&self) -> [f64; 3] {
        let (st, ct) = self.theta0.sin_cos();
        let (sp, cp) = self.phi0.sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// `(p, q, g)`: theta-hat and phi-hat projections of the axis and the
/// cosine of the angle between axis and observation direction.
fn orientation_factors(theta0: f64, phi0: f64, theta: f64, phi: f64) -> (f64, f64, f64) {
    let (st0, ct0) = theta0.sin_cos();
    let (sp0, cp0) = phi0.sin_cos();
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let p = st0 * cp0 * ct * cp + st0 * sp0 * ct * sp - ct0 * st;
    let q = st0 * sp0 * cp - st0 * cp0 * sp;
    let g = st0 * cp0 * st * cp + st0 * sp0 * st * sp + ct0 * ct;
    (p, q, g)
}

/// `[cos(kL g / 2) - cos(kL / 2)] / (1 - g^2)`, with the L'Hôpital limit
/// `(kL / 4) sin(kL / 2)` when `|1 - g^2| < 1e-8`.
fn pattern_factor(kl: f64, g: f64) -> f64 {
    let denom = 1.0 - g * g;
    if denom.abs() < 1e-8 {
        return kl / 4.0 * (kl / 2.0).sin();
    }
    ((kl * g / 2.0).cos() - (kl / 2.0).cos()) / denom
}

/// Modified far field `E~ = k r exp(jkr) E` of the dipole at wavenumber `k`:
/// `-j (eta0 I0 k / 2 pi) (p theta_hat + q phi_hat) [cos(kLg/2) - cos(kL/2)] / (1 - g^2)`.
pub fn dipole_field(
    spec: &DipoleSpec,
    k: f64,
    current: f64,
    theta: f64,
    phi: f64,
) -> TangentVector {
    let (p, q, g) = orientation_factors(spec.theta0, spec.phi0, theta, phi);
    let kl = 2.0 * PI * spec.length;
    let amp = Complex64::new(0.0, -ETA0 * current * k / (2.0 * PI)) * pattern_factor(kl, g);
    TangentVector::new(amp * p, amp * q)
}

/// Closure over a dipole with its feed resolved to a terminal current.
pub fn field_fn(
    spec: &DipoleSpec,
    k: f64,
) -> Result<impl Fn(f64, f64) -> TangentVector + Sync + Send> {
    spec.validate()?;
    let current = spec.feed.current()?;
    let spec = *spec;
    Ok(move |t: f64, p: f64| dipole_field(&spec, k, current, t, p))
}

/// Identical dipoles sharing one length and one feed, one per orientation.
pub fn reference_dipole_set(orientations: &[(f64, f64)], length: f64) -> Vec<DipoleSpec> {
    orientations
        .iter()
        .map(|&(theta0, phi0)| DipoleSpec {
            length,
            theta0,
            phi0,
            feed: Feed::default(),
        })
        .collect()
}
