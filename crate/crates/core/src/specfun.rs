//! Scalar special functions: Legendre polynomials, associated Legendre
//! functions (with the Condon–Shortley phase), orthonormal complex spherical
//! harmonics and the spherical Hankel function of the second kind.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A degree/order pair `(l, m)` with `|m| <= l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub l: u32,
    pub m: i32,
}

impl ModeIndex {
    pub fn new(l: u32, m: i32) -> Result<Self> {
        if m.unsigned_abs() > l {
            return Err(Error::Domain(format!("|m| = {} exceeds l = {l}", m.abs())));
        }
        Ok(Self { l, m })
    }
}

impl std::fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.l, self.m)
    }
}

fn check_unit_interval(x: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("argument {x} outside [-1, 1]")));
    }
    Ok(())
}

/// Legendre polynomial `P_l(x)` by upward three-term recurrence.
pub fn legendre_p(l: i32, x: f64) -> Result<f64> {
    if l < 0 {
        return Err(Error::Domain(format!("negative degree {l}")));
    }
    check_unit_interval(x)?;
    let (mut prev, mut cur) = (1.0, x);
    if l == 0 {
        return Ok(prev);
    }
    for n in 1..l {
        let n = n as f64;
        let next = ((2.0 * n + 1.0) * x * cur - n * prev) / (n + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Associated Legendre function `P_l^m(x)` for `0 <= m <= l`, including the
/// `(-1)^m` Condon–Shortley phase.
pub fn assoc_legendre(l: i32, m: i32, x: f64) -> Result<f64> {
    if m < 0 || m > l {
        return Err(Error::Domain(format!("order m = {m} outside [0, l = {l}]")));
    }
    check_unit_interval(x)?;
    Ok(assoc_legendre_unchecked(l as u32, m as u32, x))
}

pub(crate) fn assoc_legendre_unchecked(l: u32, m: u32, x: f64) -> f64 {
    if m > l {
        return 0.0;
    }
    // P_m^m = (-1)^m (2m-1)!! (1-x^2)^{m/2}
    let s = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut pmm = 1.0;
    let mut odd = 1.0;
    for _ in 0..m {
        pmm *= -odd * s;
        odd += 2.0;
    }
    if l == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = x * (2 * m + 1) as f64 * pmm;
    for ll in (m + 2)..=l {
        let next = (x * (2 * ll - 1) as f64 * cur - (ll + m - 1) as f64 * prev) / (ll - m) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// `sqrt((2l+1)/(4 pi) * (l-m)!/(l+m)!)` for `0 <= m <= l`.
///
/// The factorial ratio is accumulated in log space once `l > 10`.
pub(crate) fn sph_norm(l: u32, m: u32) -> f64 {
    let base = (2 * l + 1) as f64 / (4.0 * PI);
    let ratio = if l > 10 {
        let log_ratio: f64 = ((l - m + 1)..=(l + m)).map(|i| -(i as f64).ln()).sum();
        log_ratio.exp()
    } else {
        ((l - m + 1)..=(l + m)).fold(1.0, |acc, i| acc / i as f64)
    };
    (base * ratio).sqrt()
}

/// Orthonormal complex spherical harmonic `Y_{l,m}(theta, phi)`.
///
/// Negative orders come from `Y_{l,-m} = (-1)^m conj(Y_{l,m})`; the
/// Condon–Shortley phase is carried by [`assoc_legendre`] only.
pub fn sph_harm(mode: ModeIndex, theta: f64, phi: f64) -> Result<Complex64> {
    if mode.m.unsigned_abs() > mode.l {
        return Err(Error::Domain(format!("invalid mode {mode}")));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!(
            "polar angle {theta} outside [0, pi]"
        )));
    }
    let mu = mode.m.unsigned_abs();
    let value = sph_norm(mode.l, mu) * assoc_legendre_unchecked(mode.l, mu, theta.cos());
    let positive = Complex64::from_polar(value, mu as f64 * phi);
    if mode.m >= 0 {
        Ok(positive)
    } else if mu.is_multiple_of(2) {
        Ok(positive.conj())
    } else {
        Ok(-positive.conj())
    }
}

/// Spherical Bessel functions `j_0..=j_l` at `x > 0`.
///
/// Upward recurrence where it is stable (`l <= x`), Miller's downward
/// recurrence otherwise.
fn spherical_bessel_j_all(l: usize, x: f64) -> Vec<f64> {
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    let mut out = vec![0.0; l + 1];
    out[0] = j0;
    if l == 0 {
        return out;
    }
    out[1] = j1;
    if (l as f64) <= x {
        for n in 1..l {
            out[n + 1] = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
        }
        return out;
    }
    let start = l + 16 + (4.0 * (l as f64 + x)).sqrt() as usize;
    let mut above = 0.0;
    let mut cur = 1e-300;
    for n in (1..=start).rev() {
        let below = (2 * n + 1) as f64 / x * cur - above;
        above = cur;
        cur = below;
        if n - 1 <= l {
            out[n - 1] = cur;
        }
        if cur.abs() > 1e250 {
            let scale = 1e-250;
            cur *= scale;
            above *= scale;
            for v in out.iter_mut() {
                *v *= scale;
            }
        }
    }
    // normalise against whichever closed form is better conditioned
    let scale = if j0.abs() >= j1.abs() {
        j0 / out[0]
    } else {
        j1 / out[1]
    };
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

/// Spherical Neumann functions `n_0..=n_l` at `x > 0` (upward recurrence is
/// stable for the irregular solution).
fn spherical_bessel_y_all(l: usize, x: f64) -> Vec<f64> {
    let (s, c) = x.sin_cos();
    let mut out = vec![0.0; l + 1];
    out[0] = -c / x;
    if l > 0 {
        out[1] = -c / (x * x) - s / x;
    }
    for n in 1..l {
        out[n + 1] = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
    }
    out
}

/// Spherical Hankel function of the second kind, `h_l^(2)(x) = j_l(x) - j n_l(x)`.
pub fn spherical_hankel2(l: i32, x: f64) -> Result<Complex64> {
    if l < 0 {
        return Err(Error::Domain(format!("negative degree {l}")));
    }
    if !(x > 0.0) {
        return Err(Error::Domain(format!("argument {x} must be positive")));
    }
    let l = l as usize;
    let j = spherical_bessel_j_all(l, x)[l];
    let n = spherical_bessel_y_all(l, x)[l];
    Ok(Complex64::new(j, -n))
}
