//! Mode budgets, channel quality metrics and reference-orientation search.

mod simplex;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use simplex::{NelderMead, SimplexResult, TraceRecord};

use crate::dipole::{field_fn, DipoleSpec};
use crate::farfield::{Projector, SphereGrid};
use crate::linalg::{cond, determinant, singular_values, CMatrix};
use crate::vsh::ModeSet;
use crate::{Error, Result};

/// `kR` below which the conservative rule is flagged as outside its validity range.
pub const JENSEN_MIN_KR: f64 = 10.0;
/// Truncation power (dB) above which the conservative rule is flagged.
pub const JENSEN_MAX_P_TR: f64 = -40.0;

/// `N = 2 L (L + 2)` for the full electric plus magnetic set.
pub fn mode_count(lambda_max: u32) -> usize {
    let l = lambda_max as usize;
    2 * l * (l + 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetRule {
    SimpleCeiling,
    Jensen,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeBudget {
    pub lambda_max: u32,
    pub n_modes: usize,
    pub rule: BudgetRule,
    pub kr: f64,
    pub p_tr: Option<f64>,
    pub p_r: f64,
    /// False when the conservative rule was applied outside `kR >> 1`,
    /// `P_tr <= -40 dB`.
    pub within_validity: bool,
}

fn check_kr(kr: f64) -> Result<()> {
    if !(kr > 0.0) || !kr.is_finite() {
        return Err(Error::InvalidInput(format!("kR = {kr} must be positive")));
    }
    Ok(())
}

fn ceil_order(x: f64) -> u32 {
    (x.ceil() as u32).max(1)
}

/// `ceil(kR)`.
pub fn lambda_simple(kr: f64) -> Result<ModeBudget> {
    check_kr(kr)?;
    let lambda_max = ceil_order(kr);
    Ok(ModeBudget {
        lambda_max,
        n_modes: mode_count(lambda_max),
        rule: BudgetRule::SimpleCeiling,
        kr,
        p_tr: None,
        p_r: 0.0,
        within_validity: true,
    })
}

/// `ceil(kR + 0.045 (kR)^(1/3) (P_r - P_tr))`; logs a warning outside
/// the rule's validity range.
pub fn lambda_jensen(kr: f64, p_tr: f64, p_r: f64) -> Result<ModeBudget> {
    check_kr(kr)?;
    let lambda_max = ceil_order(kr + 0.045 * kr.cbrt() * (p_r - p_tr));
    let within_validity = kr >= JENSEN_MIN_KR && p_tr <= JENSEN_MAX_P_TR;
    if !within_validity {
        log::warn!(
            "mode budget rule used outside its validity range (kR = {kr:.3}, P_tr = {p_tr} dB; \
             needs kR >= {JENSEN_MIN_KR} and P_tr <= {JENSEN_MAX_P_TR} dB)"
        );
    }
    Ok(ModeBudget {
        lambda_max,
        n_modes: mode_count(lambda_max),
        rule: BudgetRule::Jensen,
        kr,
        p_tr: Some(p_tr),
        p_r,
        within_validity,
    })
}

/// Picks the conservative rule when a truncation level is given.
pub fn plan(kr: f64, p_tr: Option<f64>, p_r: f64) -> Result<ModeBudget> {
    match p_tr {
        Some(p) => lambda_jensen(kr, p, p_r),
        None => lambda_simple(kr),
    }
}

/// `sum_k log2(sigma_k / eps)` over the singular values of `t`.
pub fn epsilon_entropy(t: &CMatrix, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "entropy resolution {eps} must be positive"
        )));
    }
    let s = singular_values(t);
    if s.first().is_none_or(|&x| x == 0.0) {
        return Err(Error::InvalidInput("entropy of a zero channel".into()));
    }
    Ok(s.iter().map(|x| (x / eps).log2()).sum())
}

/// `-det(T T^H)`, real by construction.
pub fn capacity_objective(t: &CMatrix) -> f64 {
    let gram = t * t.adjoint();
    -determinant(&gram).expect("gram matrix is square").re
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// `cond(A_R)`.
    #[default]
    CondA,
    /// `-det(A_R A_R^H)`.
    Capacity,
}

impl Objective {
    pub fn evaluate(&self, a: &CMatrix) -> f64 {
        match self {
            Objective::CondA => cond(a),
            Objective::Capacity => capacity_objective(a),
        }
    }
}

/// Folds arbitrary angles onto `[0, pi] x [0, 2 pi)`.
pub fn wrap_orientation(theta: f64, phi: f64) -> (f64, f64) {
    let two_pi = 2.0 * PI;
    let mut t = theta.rem_euclid(two_pi);
    let mut p = phi;
    if t > PI {
        t = two_pi - t;
        p += PI;
    }
    (t, p.rem_euclid(two_pi))
}

/// `n` axis directions spread over the upper hemisphere on a Fibonacci
/// spiral. Dipole patterns are symmetric under axis reversal, so the upper
/// hemisphere covers every distinct orientation.
pub fn hemisphere_orientations(n: usize) -> Vec<(f64, f64)> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (i as f64 + 0.5) / n as f64;
            wrap_orientation(z.acos(), golden * i as f64)
        })
        .collect()
}

/// Everything needed to turn a set of dipole orientations into `A_R`.
#[derive(Debug, Clone)]
pub struct OrientationProblem {
    projector: Projector,
    length: f64,
    k: f64,
}

impl OrientationProblem {
    pub fn new(mode_set: &ModeSet, grid: &SphereGrid, length: f64, k: f64) -> Result<Self> {
        DipoleSpec {
            length,
            ..DipoleSpec::half_wave(0.0, 0.0)
        }
        .validate()?;
        Ok(Self {
            projector: Projector::new(mode_set, grid),
            length,
            k,
        })
    }

    pub fn mode_set(&self) -> &ModeSet {
        self.projector.mode_set()
    }

    /// Coefficient matrix with one column per (wrapped) orientation.
    pub fn coefficient_matrix(&self, orientations: &[(f64, f64)]) -> Result<CMatrix> {
        let mut a = CMatrix::zeros(self.mode_set().len(), orientations.len());
        for (j, &(t, p)) in orientations.iter().enumerate() {
            let (theta0, phi0) = wrap_orientation(t, p);
            let spec = DipoleSpec {
                length: self.length,
                ..DipoleSpec::half_wave(theta0, phi0)
            };
            let c = self.projector.project(field_fn(&spec, self.k)?);
            a.set_column(j, &c.to_vector());
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationResult {
    pub orientations: Vec<(f64, f64)>,
    pub objective: Objective,
    pub initial_value: f64,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRecord>,
}

/// Local simplex search over all `2 N_R` orientation angles. Never returns
/// a set worse than `initial`.
pub fn optimize_reference_orientations(
    problem: &OrientationProblem,
    initial: &[(f64, f64)],
    objective: Objective,
    budget: usize,
) -> Result<OrientationResult> {
    if initial.len() < problem.mode_set().len() {
        return Err(Error::InvalidInput(format!(
            "{} reference orientations cannot span {} modes",
            initial.len(),
            problem.mode_set().len()
        )));
    }
    let to_pairs = |x: &[f64]| -> Vec<(f64, f64)> {
        x.chunks(2).map(|c| wrap_orientation(c[0], c[1])).collect()
    };
    let f = |x: &[f64]| -> f64 {
        match problem.coefficient_matrix(&to_pairs(x)) {
            Ok(a) => {
                let v = objective.evaluate(&a);
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v
                }
            }
            Err(_) => f64::INFINITY,
        }
    };
    let x0: Vec<f64> = initial.iter().flat_map(|&(t, p)| [t, p]).collect();
    let r = NelderMead::default().minimize(f, &x0, budget);
    let initial_value = r.trace[0].objective;
    let (orientations, value) = if r.value <= initial_value {
        (to_pairs(&r.x), r.value)
    } else {
        (to_pairs(&x0), initial_value)
    };
    Ok(OrientationResult {
        orientations,
        objective,
        initial_value,
        value,
        evaluations: r.evaluations,
        converged: r.converged,
        trace: r.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vsh::{build_mode_set, MultipoleFilter, ParityFilter};
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, m: usize, rng: &mut impl Rng) -> CMatrix {
        CMatrix::from_fn(n, m, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn mode_counts() {
        assert_eq!(mode_count(1), 6);
        assert_eq!(mode_count(2), 16);
        assert_eq!(mode_count(4), 48);
        for l in 1..50 {
            assert!(mode_count(l + 1) > mode_count(l));
        }
    }

    #[test]
    fn simple_rule() {
        assert_eq!(lambda_simple(2.0 * PI * 0.25).unwrap().lambda_max, 2);
        assert_eq!(lambda_simple(2.0 * PI * 0.25).unwrap().n_modes, 16);
        assert_eq!(lambda_simple(3.0).unwrap().lambda_max, 3);
        assert_eq!(lambda_simple(30.0).unwrap().lambda_max, 30);
        assert!(lambda_simple(0.0).is_err());
    }

    #[test]
    fn conservative_rule() {
        let b = lambda_jensen(30.0, -40.0, 0.0).unwrap();
        // independent arithmetic: 30 + 1.8 * 30^(1/3)
        let expect = (30.0 + 1.8 * 30f64.powf(1.0 / 3.0)).ceil() as u32;
        assert_eq!(b.lambda_max, expect);
        assert_eq!(b.lambda_max, 36);
        assert!(b.within_validity);

        let dipole = lambda_jensen(2.0 * PI * 0.25, -40.0, 0.0).unwrap();
        assert_eq!(dipole.lambda_max, 4);
        assert_eq!(dipole.n_modes, 48);
        assert!(!dipole.within_validity);

        assert_eq!(lambda_jensen(7.3, -20.0, -20.0).unwrap().lambda_max, 8);
        assert!(!lambda_jensen(30.0, -30.0, 0.0).unwrap().within_validity);
    }

    proptest! {
        #[test]
        fn conservative_dominates(kr in 0.01f64..200.0, p_tr in -120.0f64..-0.1) {
            let j = lambda_jensen(kr, p_tr, 0.0).unwrap();
            let s = lambda_simple(kr).unwrap();
            prop_assert!(j.lambda_max >= s.lambda_max);
        }

        #[test]
        fn wrapped_angles_in_range(t in -20.0f64..20.0, p in -20.0f64..20.0) {
            let (tw, pw) = wrap_orientation(t, p);
            prop_assert!((0.0..=PI).contains(&tw));
            prop_assert!((0.0..2.0 * PI).contains(&pw));
            // same axis up to reversal
            let axis = |t: f64, p: f64| [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
            let a = axis(t, p);
            let b = axis(tw, pw);
            let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            prop_assert!((dot.abs() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn entropy_cases() {
        let eye = CMatrix::identity(4, 4);
        assert_eq!(epsilon_entropy(&eye, 1.0).unwrap(), 0.0);
        assert_relative_eq!(
            epsilon_entropy(&(eye.clone() * Complex64::new(2.0, 0.0)), 1.0).unwrap(),
            4.0
        );
        let two = CMatrix::identity(2, 2) * Complex64::new(2.0, 0.0);
        assert_relative_eq!(epsilon_entropy(&two, 1.0).unwrap(), 2.0, epsilon = 1e-14);
        assert!(epsilon_entropy(&eye, 0.0).is_err());
        assert!(epsilon_entropy(&CMatrix::zeros(3, 3), 1.0).is_err());
    }

    #[test]
    fn entropy_matches_determinant_and_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let t = random_matrix(10, 10, &mut rng);
            let h = epsilon_entropy(&t, 1.0).unwrap();
            let det = determinant(&(&t * t.adjoint())).unwrap();
            assert!(det.im.abs() < 1e-8 * det.re.abs());
            assert_relative_eq!(h, 0.5 * det.re.log2(), max_relative = 1e-8);
            for eps in [1e-3, 0.5, 7.0] {
                let he = epsilon_entropy(&t, eps).unwrap();
                assert_relative_eq!(he - h, -10.0 * eps.log2(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn capacity_cases() {
        assert_relative_eq!(
            capacity_objective(&CMatrix::identity(3, 3)),
            -1.0,
            epsilon = 1e-14
        );
        let singular = CMatrix::from_element(3, 3, Complex64::new(1.0, 2.0));
        assert!(capacity_objective(&singular).abs() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = random_matrix(5, 5, &mut rng);
        let prod: f64 = singular_values(&t).iter().map(|s| s * s).product();
        assert_relative_eq!(capacity_objective(&t), -prod, max_relative = 1e-10);
    }

    #[test]
    fn capacity_unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_matrix(4, 4, &mut rng);
        let q = random_matrix(4, 4, &mut rng).qr().q();
        let u = random_matrix(4, 4, &mut rng).qr().q();
        assert_relative_eq!(
            capacity_objective(&(&q * &t * &u)),
            capacity_objective(&t),
            max_relative = 1e-10
        );
    }

    fn dipole_problem() -> OrientationProblem {
        let set = build_mode_set(1, ParityFilter::All, MultipoleFilter::ElectricOnly).unwrap();
        OrientationProblem::new(&set, &SphereGrid::for_band_limit(3), 0.5, 2.0 * PI).unwrap()
    }

    #[test]
    fn orthogonal_triple_is_optimal() {
        let problem = dipole_problem();
        let triple = [(0.0, 0.0), (PI / 2.0, 0.0), (PI / 2.0, PI / 2.0)];
        let base = cond(&problem.coefficient_matrix(&triple).unwrap());
        assert!((base - 1.0).abs() < 1e-10, "{base}");
        // exhaustive 5 degree grid over the third orientation
        let step = 5f64.to_radians();
        let mut best = f64::INFINITY;
        for i in 0..=36 {
            for j in 0..72 {
                let set = [triple[0], triple[1], (i as f64 * step, j as f64 * step)];
                best = best.min(cond(&problem.coefficient_matrix(&set).unwrap()));
            }
        }
        assert!(best >= base * (1.0 - 1e-10));
        let r = optimize_reference_orientations(&problem, &triple, Objective::CondA, 200).unwrap();
        assert!((r.value - base).abs() < 0.01 * base);
    }

    #[test]
    fn optimizer_improves_and_zero_budget() {
        let problem = dipole_problem();
        let start = [(0.2, 0.1), (0.5, 0.3), (0.9, 1.0)];
        let r = optimize_reference_orientations(&problem, &start, Objective::CondA, 300).unwrap();
        assert!(r.value <= r.initial_value);
        assert!(r.value < 2.0, "{}", r.value);
        assert_relative_eq!(
            cond(&problem.coefficient_matrix(&r.orientations).unwrap()),
            r.value,
            max_relative = 1e-12
        );

        let none =
            optimize_reference_orientations(&problem, &start, Objective::Capacity, 0).unwrap();
        assert_eq!(none.value, none.initial_value);
        for (a, b) in none.orientations.iter().zip(&start) {
            assert_eq!(a, b);
        }
        assert!(
            optimize_reference_orientations(&problem, &start[..2], Objective::CondA, 10).is_err()
        );
    }

    #[test]
    fn hemisphere_spread() {
        let o = hemisphere_orientations(10);
        assert_eq!(o.len(), 10);
        assert!(o
            .iter()
            .all(|&(t, p)| t <= PI / 2.0 && (0.0..2.0 * PI).contains(&p)));
    }
}
