use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn_1 = if n == 0 { 0.0 } else { p0 };
            dp = nf * (x * pn - pn_1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Product quadrature on the unit sphere: Gauss–Legendre in `cos(theta)`
/// times the uniform trapezoid rule in `phi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereGrid {
    /// Polar nodes, strictly inside `(0, pi)`, ascending in `cos(theta)`.
    pub theta: Vec<f64>,
    /// Gauss–Legendre weights belonging to `theta`.
    pub theta_weights: Vec<f64>,
    pub phi: Vec<f64>,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(Error::InvalidInput(format!(
                "quadrature grid needs at least one node per axis (got {n_theta} x {n_phi})"
            )));
        }
        let (x, w) = gauss_legendre(n_theta);
        Ok(Self {
            theta: x.iter().map(|c| c.acos()).collect(),
            theta_weights: w,
            phi: (0..n_phi)
                .map(|k| 2.0 * PI * k as f64 / n_phi as f64)
                .collect(),
        })
    }

    /// Default grid for a band limit: `4 lambda_max + 16` nodes per axis.
    pub fn for_band_limit(lambda_max: u32) -> Self {
        let n = 4 * lambda_max as usize + 16;
        Self::new(n, n).expect("nonzero node counts")
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phi.len()
    }

    pub fn len(&self) -> usize {
        self.n_theta() * self.n_phi()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn phi_weight(&self) -> f64 {
        2.0 * PI / self.n_phi() as f64
    }

    pub fn doubled(&self) -> Self {
        Self::new(2 * self.n_theta(), 2 * self.n_phi()).expect("nonzero node counts")
    }

    /// `(theta, phi, weight)` in theta-major order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let dphi = self.phi_weight();
        self.theta
            .iter()
            .zip(&self.theta_weights)
            .flat_map(move |(&t, &w)| self.phi.iter().map(move |&p| (t, p, w * dphi)))
    }

    /// Sum of all point weights; `4 pi` up to rounding.
    pub fn total_weight(&self) -> f64 {
        self.theta_weights.iter().sum::<f64>() * 2.0 * PI
    }
}

/// Uniform angular sampling used for pattern output and error metrics
/// (poles included, `phi` in `[0, 2 pi)`).
#[derive(Debug, Clone, PartialEq)]
pub struct PatternGrid {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl PatternGrid {
    pub fn uniform_degrees(step_deg: f64) -> Result<Self> {
        if !(step_deg > 0.0 && step_deg <= 90.0) {
            return Err(Error::InvalidInput(format!(
                "pattern step {step_deg} deg must be in (0, 90]"
            )));
        }
        let n_theta = (180.0 / step_deg).round() as usize + 1;
        let n_phi = (360.0 / step_deg).round() as usize;
        Ok(Self {
            theta: (0..n_theta)
                .map(|i| (i as f64 * PI / (n_theta - 1) as f64).min(PI))
                .collect(),
            phi: (0..n_phi)
                .map(|k| 2.0 * PI * k as f64 / n_phi as f64)
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.theta.len() * self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.theta
            .iter()
            .flat_map(move |&t| self.phi.iter().map(move |&p| (t, p)))
    }
}
