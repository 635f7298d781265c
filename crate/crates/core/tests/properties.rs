use std::f64::consts::PI;

use meap::chamber::{analytic_channel, probe_voltages, sample_chamber};
use meap::dipole::{field_fn, DipoleSpec};
use meap::farfield::{
    decompose, directivity, enforce_symmetry, quadrature_power, radiated_power, synthesize,
    synthesize_grid, Projector, SphereGrid, VshCoefficients,
};
use meap::linalg::cond;
use meap::planner::{capacity_objective, epsilon_entropy};
use meap::recon::{calibrate, channel_from_calibration, reconstruct_inverse};
use meap::vsh::{build_mode_set, ModeSet, MultipoleFilter, ParityFilter};
use meap::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mode_set() -> impl Strategy<Value = ModeSet> {
    (1u32..=4, 0usize..3, 0usize..3).prop_filter_map("empty set", |(l, p, m)| {
        let parity = [ParityFilter::All, ParityFilter::OddL, ParityFilter::EvenL][p];
        let multipole = [
            MultipoleFilter::Both,
            MultipoleFilter::ElectricOnly,
            MultipoleFilter::MagneticOnly,
        ][m];
        build_mode_set(l, parity, multipole).ok()
    })
}

fn coefficients() -> impl Strategy<Value = VshCoefficients> {
    mode_set().prop_flat_map(|set| {
        let n = set.len();
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_map(move |v| {
            VshCoefficients::new(
                set.clone(),
                v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect(),
            )
            .unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_inverts_synthesis(c in coefficients()) {
        let grid = SphereGrid::for_band_limit(c.mode_set.lambda_max);
        let samples = synthesize_grid(&c, &grid.theta, &grid.phi);
        let back = Projector::new(&c.mode_set, &grid).project_samples(&samples).unwrap();
        prop_assert!(back.relative_difference(&c) < 1e-10);
    }

    #[test]
    fn power_identity(c in coefficients(), k in 0.5f64..20.0) {
        let grid = SphereGrid::for_band_limit(c.mode_set.lambda_max);
        let q = quadrature_power(|t, p| synthesize(&c, t, p), &grid, k);
        let s = radiated_power(&c, k);
        prop_assert!((q - s).abs() <= 1e-10 * s);
    }

    #[test]
    fn symmetry_projection_is_idempotent(c in coefficients()) {
        let once = enforce_symmetry(&c).unwrap();
        let twice = enforce_symmetry(&once).unwrap();
        prop_assert!(twice.relative_difference(&once) < 1e-15);
    }

    #[test]
    fn scaling_leaves_directivity(c in coefficients(), s in 0.01f64..100.0) {
        prop_assume!(c.norm_sqr() > 1e-3);
        let d0 = directivity(&c, 2.0 * PI).unwrap();
        let d1 = directivity(&c.scaled(s), 2.0 * PI).unwrap();
        prop_assert!((d0 - d1).abs() < 1e-9 * d0);
        prop_assert!(d0 >= 1.0 - 1e-9);
    }

    #[test]
    fn dipole_power_is_orientation_independent(t in 0.0f64..PI, p in 0.0f64..(2.0 * PI)) {
        let k = 2.0 * PI;
        let set = build_mode_set(5, ParityFilter::OddL, MultipoleFilter::ElectricOnly).unwrap();
        let grid = SphereGrid::for_band_limit(5);
        let z = decompose(field_fn(&DipoleSpec::half_wave(0.0, 0.0), k).unwrap(), &set, &grid).unwrap();
        let r = decompose(field_fn(&DipoleSpec::half_wave(t, p), k).unwrap(), &set, &grid).unwrap();
        let (pz, pr) = (radiated_power(&z, k), radiated_power(&r, k));
        prop_assert!((pz - pr).abs() < 1e-9 * pz);
    }

    #[test]
    fn entropy_shift(seed in 0u64..1000, eps in 1e-4f64..10.0) {
        let ch = sample_chamber(seed, 6, 6, 1.0).unwrap();
        let set = build_mode_set(1, ParityFilter::All, MultipoleFilter::ElectricOnly).unwrap();
        let t = analytic_channel(&ch, &set).unwrap().entries;
        let h1 = epsilon_entropy(&t, 1.0).unwrap();
        let he = epsilon_entropy(&t, eps).unwrap();
        prop_assert!((he - h1 + 3.0 * eps.log2()).abs() < 1e-9);
        prop_assert!(capacity_objective(&(t.adjoint())) <= 0.0);
    }
}

/// A band-limited antenna measured through an analytic channel and
/// calibrated from random band-limited references is recovered exactly.
#[test]
fn band_limited_pipeline_is_exact() {
    let set = build_mode_set(3, ParityFilter::All, MultipoleFilter::ElectricOnly).unwrap();
    let n = set.len();
    let chamber = sample_chamber(11, n, n, 1e-3).unwrap();
    let t = analytic_channel(&chamber, &set).unwrap();
    let make = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        enforce_symmetry(&VshCoefficients::new(set.clone(), values).unwrap()).unwrap()
    };
    let refs: Vec<_> = (0..n as u64).map(make).collect();
    let fields: Vec<_> = refs
        .iter()
        .map(|c| move |th: f64, ph: f64| synthesize(c, th, ph))
        .collect();
    let v_r = meap::chamber::voltage_matrix(&chamber, &fields);
    let cal = calibrate(&v_r, &refs).unwrap();
    let channel = channel_from_calibration(&cal).unwrap();
    assert!((&channel.entries - &t.entries).norm() < 1e-8 * t.entries.norm());
    assert!(cond(&cal.a_matrix).is_finite());

    let truth = make(99);
    let v = probe_voltages(&chamber, |th, ph| synthesize(&truth, th, ph));
    let r = reconstruct_inverse(&channel, &v).unwrap();
    assert!(r.coefficients.relative_difference(&truth) < 1e-8);
}
