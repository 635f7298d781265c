//! Random multipath chamber: per-path gains, launch directions and
//! polarisation mixing; probe voltages; and the analytic channel matrix for
//! band-limited fields.
//!
//! Random draws come from ChaCha20 seeded with the chamber seed. Each
//! parameter matrix uses its own stream of that generator, in the fixed
//! order rho (real), rho (imag), theta, phi, alpha, and is filled row-major
//! (probe-major). The sampled chamber is therefore a pure function of
//! `(seed, n_probes, n_paths, sigma_rho)` on every platform.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{cond, CMatrix, CVector};
use crate::vsh::{ModeSet, Multipole, TangentVector};
use crate::{Error, Result};

/// Path-gain standard deviation used when none is given.
pub const DEFAULT_SIGMA_RHO: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChamberModel {
    pub seed: u64,
    pub sigma_rho: f64,
    pub n_probes: usize,
    pub n_paths: usize,
    /// `rho[k][n]`: complex gain of path `n` to probe `k`.
    pub rho: Vec<Vec<Complex64>>,
    pub theta: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
}

impl ChamberModel {
    pub fn validate(&self) -> Result<()> {
        let shape_ok = |rows: usize, cols: &dyn Fn(usize) -> usize| {
            rows == self.n_probes && (0..rows).all(|k| cols(k) == self.n_paths)
        };
        let ok = shape_ok(self.rho.len(), &|k| self.rho[k].len())
            && shape_ok(self.theta.len(), &|k| self.theta[k].len())
            && shape_ok(self.phi.len(), &|k| self.phi[k].len())
            && shape_ok(self.alpha.len(), &|k| self.alpha[k].len());
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "chamber parameter matrices are not all {}x{}",
                self.n_probes, self.n_paths
            )));
        }
        if self.theta.iter().flatten().any(|t| !(0.0..=PI).contains(t)) {
            return Err(Error::InvalidInput(
                "launch polar angle outside [0, pi]".into(),
            ));
        }
        Ok(())
    }

    /// Iterator over `(rho, theta, phi, alpha)` of probe `k`.
    fn paths(&self, k: usize) -> impl Iterator<Item = (Complex64, f64, f64, f64)> + '_ {
        (0..self.n_paths).map(move |n| {
            (
                self.rho[k][n],
                self.theta[k][n],
                self.phi[k][n],
                self.alpha[k][n],
            )
        })
    }
}

/// Shape and gain spread of a chamber to be sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChamberParams {
    pub n_probes: usize,
    pub n_paths: usize,
    pub sigma_rho: f64,
}

fn fill<F: FnMut() -> f64>(rows: usize, cols: usize, mut draw: F) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| draw()).collect())
        .collect()
}

/// Draws a chamber: `Re rho, Im rho ~ N(0, sigma_rho)`, `theta ~ U(0, pi)`,
/// `phi, alpha ~ U(0, 2 pi)`.
pub fn sample_chamber(
    seed: u64,
    n_probes: usize,
    n_paths: usize,
    sigma_rho: f64,
) -> Result<ChamberModel> {
    if n_probes == 0 || n_paths == 0 {
        return Err(Error::InvalidInput(
            "chamber needs at least one probe and one path".into(),
        ));
    }
    if !(sigma_rho > 0.0) {
        return Err(Error::InvalidInput(format!(
            "sigma_rho = {sigma_rho} must be positive"
        )));
    }
    let normal = Normal::new(0.0, sigma_rho).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let stream = |index: u64| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(index);
        rng
    };
    let mut rng = stream(0);
    let rho_re = fill(n_probes, n_paths, || normal.sample(&mut rng));
    let mut rng = stream(1);
    let rho_im = fill(n_probes, n_paths, || normal.sample(&mut rng));
    let mut rng = stream(2);
    let theta = fill(n_probes, n_paths, || rng.random_range(0.0..PI));
    let mut rng = stream(3);
    let phi = fill(n_probes, n_paths, || rng.random_range(0.0..2.0 * PI));
    let mut rng = stream(4);
    let alpha = fill(n_probes, n_paths, || rng.random_range(0.0..2.0 * PI));
    let rho = rho_re
        .iter()
        .zip(&rho_im)
        .map(|(re, im)| {
            re.iter()
                .zip(im)
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect()
        })
        .collect();
    Ok(ChamberModel {
        seed,
        sigma_rho,
        n_probes,
        n_paths,
        rho,
        theta,
        phi,
        alpha,
    })
}

/// Probe voltages `v_k = sum_n rho_kn [E_theta cos(alpha_kn) + E_phi sin(alpha_kn)]`,
/// the field evaluated at each launch direction.
pub fn probe_voltages<F>(chamber: &ChamberModel, field: F) -> CVector
where
    F: Fn(f64, f64) -> TangentVector,
{
    CVector::from_iterator(
        chamber.n_probes,
        (0..chamber.n_probes).map(|k| {
            chamber
                .paths(k)
                .map(|(rho, t, p, a)| {
                    let e = field(t, p);
                    rho * (e.e_theta * a.cos() + e.e_phi * a.sin())
                })
                .sum::<Complex64>()
        }),
    )
}

/// Voltage matrix with one column per field.
pub fn voltage_matrix<F>(chamber: &ChamberModel, fields: &[F]) -> CMatrix
where
    F: Fn(f64, f64) -> TangentVector,
{
    let mut out = CMatrix::zeros(chamber.n_probes, fields.len());
    for (j, f) in fields.iter().enumerate() {
        out.set_column(j, &probe_voltages(chamber, f));
    }
    out
}

/// Linear map from VSH amplitudes to probe voltages, `v = T a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: CMatrix,
    pub mode_set: ModeSet,
}

impl ChannelMatrix {
    pub fn new(entries: CMatrix, mode_set: ModeSet) -> Result<Self> {
        if entries.ncols() != mode_set.len() {
            return Err(Error::DimensionMismatch(format!(
                "channel has {} columns for {} modes",
                entries.ncols(),
                mode_set.len()
            )));
        }
        Ok(Self { entries, mode_set })
    }

    pub fn n_probes(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cond(&self) -> f64 {
        cond(&self.entries)
    }
}

/// Closed-form channel for an electric-only mode set acting on the modified
/// coefficients `a~^E`:
/// `T_kq = j^(l_q+1) sum_n rho_kn [(r x X_q)_theta cos(alpha_kn) + (r x X_q)_phi sin(alpha_kn)]`
/// at the launch directions.
pub fn analytic_channel(chamber: &ChamberModel, mode_set: &ModeSet) -> Result<ChannelMatrix> {
    if mode_set.iter().any(|m| m.kind == Multipole::Magnetic) {
        return Err(Error::InvalidInput(
            "analytic channel is defined for electric-only mode sets".into(),
        ));
    }
    let mut entries = CMatrix::zeros(chamber.n_probes, mode_set.len());
    for k in 0..chamber.n_probes {
        for (q, mode) in mode_set.iter().enumerate() {
            let sum: Complex64 = chamber
                .paths(k)
                .map(|(rho, t, p, a)| {
                    let b = mode.basis_meridian(t) * Complex64::from_polar(1.0, mode.m as f64 * p);
                    rho * (b.e_theta * a.cos() + b.e_phi * a.sin())
                })
                .sum();
            entries[(k, q)] = mode.radiation_phase() * sum;
        }
    }
    ChannelMatrix::new(entries, mode_set.clone())
}

/// Rejects chambers that cannot carry the information in `n_modes` amplitudes.
pub fn check_information_budget(n_probes: usize, n_paths: usize, n_modes: usize) -> Result<()> {
    if n_probes < n_modes || n_paths < n_modes {
        return Err(Error::InvalidInput(format!(
            "chamber with {n_probes} probes and {n_paths} paths cannot resolve {n_modes} modes \
             (both must be at least the mode count)"
        )));
    }
    Ok(())
}

/// Outcome of a chamber search.
#[derive(Debug, Clone)]
pub struct ChamberSelection {
    pub chamber: ChamberModel,
    pub cond_v: f64,
    /// `(seed, cond(V_R))` for every candidate, in input order.
    pub candidates: Vec<(u64, f64)>,
}

/// Samples one chamber per seed and keeps the one whose reference voltage
/// matrix (built by `reference_voltages`) has the smallest condition
/// number. Ties go to the earlier seed.
pub fn select_chamber<B>(
    seeds: &[u64],
    params: ChamberParams,
    reference_voltages: B,
) -> Result<ChamberSelection>
where
    B: Fn(&ChamberModel) -> CMatrix + Sync,
{
    if seeds.is_empty() {
        return Err(Error::InvalidInput(
            "chamber search needs at least one seed".into(),
        ));
    }
    let evaluated: Vec<(ChamberModel, f64)> = seeds
        .par_iter()
        .map(|&seed| {
            let chamber = sample_chamber(seed, params.n_probes, params.n_paths, params.sigma_rho)?;
            let c = cond(&reference_voltages(&chamber));
            Ok((chamber, c))
        })
        .collect::<Result<_>>()?;
    let candidates = evaluated.iter().map(|(ch, c)| (ch.seed, *c)).collect();
    let best = evaluated
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("nonempty");
    let (chamber, cond_v) = evaluated.into_iter().nth(best).expect("index in range");
    Ok(ChamberSelection {
        chamber,
        cond_v,
        candidates,
    })
}
