//! Vector spherical harmonics `X_{l,m}` and `r x X_{l,m}` as tangential
//! (theta-hat, phi-hat) vectors, plus the frozen mode ordering used by every
//! coefficient vector and channel matrix in the crate.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::specfun::{assoc_legendre_unchecked, sph_norm, ModeIndex};
use crate::{Error, Result};

/// Distance from a pole (in radians) below which the analytic polar limits
/// replace the `1 / sin(theta)` expressions.
pub const POLE_GUARD: f64 = 1e-6;

/// A far-field vector with no radial component.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TangentVector {
    pub e_theta: Complex64,
    pub e_phi: Complex64,
}

impl TangentVector {
    pub const ZERO: Self = Self {
        e_theta: Complex64 { re: 0.0, im: 0.0 },
        e_phi: Complex64 { re: 0.0, im: 0.0 },
    };

    pub fn new(e_theta: Complex64, e_phi: Complex64) -> Self {
        Self { e_theta, e_phi }
    }

    /// `r_hat x self`.
    pub fn rotate(self) -> Self {
        Self {
            e_theta: -self.e_phi,
            e_phi: self.e_theta,
        }
    }

    pub fn conj(self) -> Self {
        Self {
            e_theta: self.e_theta.conj(),
            e_phi: self.e_phi.conj(),
        }
    }

    /// `self . conj(other)`
    pub fn dot_conj(self, other: Self) -> Complex64 {
        self.e_theta * other.e_theta.conj() + self.e_phi * other.e_phi.conj()
    }

    pub fn norm_sqr(self) -> f64 {
        self.e_theta.norm_sqr() + self.e_phi.norm_sqr()
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

impl Add for TangentVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.e_theta + rhs.e_theta, self.e_phi + rhs.e_phi)
    }
}

impl AddAssign for TangentVector {
    fn add_assign(&mut self, rhs: Self) {
        self.e_theta += rhs.e_theta;
        self.e_phi += rhs.e_phi;
    }
}

impl Sub for TangentVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.e_theta - rhs.e_theta, self.e_phi - rhs.e_phi)
    }
}

impl Neg for TangentVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.e_theta, -self.e_phi)
    }
}

impl Mul<Complex64> for TangentVector {
    type Output = Self;
    fn mul(self, rhs: Complex64) -> Self {
        Self::new(self.e_theta * rhs, self.e_phi * rhs)
    }
}

impl Mul<f64> for TangentVector {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.e_theta * rhs, self.e_phi * rhs)
    }
}

fn check_vsh_args(mode: ModeIndex, theta: f64) -> Result<()> {
    if mode.l == 0 {
        return Err(Error::Domain(
            "vector spherical harmonics need l >= 1".into(),
        ));
    }
    if mode.m.unsigned_abs() > mode.l {
        return Err(Error::Domain(format!("invalid mode {mode}")));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!(
            "polar angle {theta} outside [0, pi]"
        )));
    }
    Ok(())
}

/// `X_{l,m}(theta, 0)`. The azimuthal dependence is a pure `exp(j m phi)`
/// factor, so callers evaluating many azimuths reuse this value.
pub(crate) fn vsh_x_meridian(l: u32, m: i32, theta: f64) -> TangentVector {
    let mu = m.unsigned_abs();
    let lf = l as f64;
    let norm = sph_norm(l, mu);
    let (s, x) = theta.sin_cos();

    // d/dtheta [P_l^mu(cos)]  and  mu P_l^mu(cos) / sin
    let (dtheta, m_over_sin) = if theta < POLE_GUARD || PI - theta < POLE_GUARD {
        if mu == 1 {
            let half = lf * (lf + 1.0) / 2.0;
            if x > 0.0 {
                (-half, -half)
            } else {
                let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
                (-sign * half, sign * half)
            }
        } else {
            (0.0, 0.0)
        }
    } else {
        let p = assoc_legendre_unchecked(l, mu, x);
        let p_lower = if l >= 1 {
            assoc_legendre_unchecked(l - 1, mu, x)
        } else {
            0.0
        };
        (
            (lf * x * p - (l + mu) as f64 * p_lower) / s,
            mu as f64 * p / s,
        )
    };

    let inv = norm / (lf * (lf + 1.0)).sqrt();
    let x_theta = -m_over_sin * inv;
    let x_phi = -dtheta * inv;
    if m >= 0 {
        TangentVector::new(Complex64::new(x_theta, 0.0), Complex64::new(0.0, x_phi))
    } else {
        // X_{l,-mu} = (-1)^{mu+1} conj(X_{l,mu})
        let sign = if mu.is_multiple_of(2) { -1.0 } else { 1.0 };
        TangentVector::new(
            Complex64::new(sign * x_theta, 0.0),
            Complex64::new(0.0, -sign * x_phi),
        )
    }
}

/// Vector spherical harmonic `X_{l,m}(theta, phi) = -j / sqrt(l(l+1)) r x grad Y_{l,m}`.
pub fn vsh_x(mode: ModeIndex, theta: f64, phi: f64) -> Result<TangentVector> {
    check_vsh_args(mode, theta)?;
    Ok(vsh_x_meridian(mode.l, mode.m, theta) * Complex64::from_polar(1.0, mode.m as f64 * phi))
}

/// `r_hat x X_{l,m}(theta, phi)`.
pub fn r_cross_x(mode: ModeIndex, theta: f64, phi: f64) -> Result<TangentVector> {
    Ok(vsh_x(mode, theta, phi)?.rotate())
}

/// Which multipole family a coefficient belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Multipole {
    /// Modified electric coefficient, multiplies `r x X`.
    Electric,
    /// Magnetic coefficient, multiplies `X`.
    Magnetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParityFilter {
    #[default]
    All,
    OddL,
    EvenL,
}

impl ParityFilter {
    fn admits(self, l: u32) -> bool {
        match self {
            ParityFilter::All => true,
            ParityFilter::OddL => l % 2 == 1,
            ParityFilter::EvenL => l.is_multiple_of(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultipoleFilter {
    #[default]
    Both,
    ElectricOnly,
    MagneticOnly,
}

impl MultipoleFilter {
    fn families(self) -> &'static [Multipole] {
        match self {
            MultipoleFilter::Both => &[Multipole::Electric, Multipole::Magnetic],
            MultipoleFilter::ElectricOnly => &[Multipole::Electric],
            MultipoleFilter::MagneticOnly => &[Multipole::Magnetic],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub kind: Multipole,
    pub l: u32,
    pub m: i32,
}

impl Mode {
    pub fn index(&self) -> ModeIndex {
        ModeIndex {
            l: self.l,
            m: self.m,
        }
    }

    /// Basis function at `(theta, 0)`: `X` for magnetic, `r x X` for electric.
    pub(crate) fn basis_meridian(&self, theta: f64) -> TangentVector {
        let x = vsh_x_meridian(self.l, self.m, theta);
        match self.kind {
            Multipole::Magnetic => x,
            Multipole::Electric => x.rotate(),
        }
    }

    /// `j^(l+1)`
    pub fn radiation_phase(&self) -> Complex64 {
        Complex64::i().powu(self.l + 1)
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.kind {
            Multipole::Electric => 'E',
            Multipole::Magnetic => 'M',
        };
        write!(f, "{tag}({},{})", self.l, self.m)
    }
}

/// Ordered set of VSH modes. Position `q` (0-based) in [`ModeSet::modes`]
/// is the row of that mode in every coefficient vector and the column of
/// every channel matrix.
///
/// Ordering: the electric block, then the magnetic block, each sorted by
/// `l` ascending and then `m` ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSet {
    pub lambda_max: u32,
    pub parity: ParityFilter,
    pub multipole: MultipoleFilter,
    pub modes: Vec<Mode>,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Mode> {
        self.modes.iter()
    }

    pub fn position(&self, kind: Multipole, l: u32, m: i32) -> Option<usize> {
        self.modes
            .iter()
            .position(|md| md.kind == kind && md.l == l && md.m == m)
    }

    pub fn has_magnetic(&self) -> bool {
        self.modes.iter().any(|m| m.kind == Multipole::Magnetic)
    }

    pub fn max_order(&self) -> u32 {
        self.modes
            .iter()
            .map(|m| m.m.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// Checks that `modes` is exactly what the filters generate.
    pub fn validate(&self) -> Result<()> {
        let rebuilt = build_mode_set(self.lambda_max, self.parity, self.multipole)?;
        if rebuilt.modes != self.modes {
            return Err(Error::InvalidInput(
                "mode list does not match the canonical ordering for its filters".into(),
            ));
        }
        Ok(())
    }
}

/// Builds the canonical mode ordering for `1 <= l <= lambda_max`.
pub fn build_mode_set(
    lambda_max: u32,
    parity: ParityFilter,
    multipole: MultipoleFilter,
) -> Result<ModeSet> {
    if lambda_max == 0 {
        return Err(Error::InvalidInput("lambda_max must be at least 1".into()));
    }
    let mut modes = Vec::new();
    for &kind in multipole.families() {
        for l in (1..=lambda_max).filter(|&l| parity.admits(l)) {
            for m in -(l as i32)..=(l as i32) {
                modes.push(Mode { kind, l, m });
            }
        }
    }
    Ok(ModeSet {
        lambda_max,
        parity,
        multipole,
        modes,
    })
}
