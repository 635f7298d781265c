use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use meap::experiment::{ExperimentConfig, OptimizeConfig, Report, SeedSpec, SweepMeta};
use meap::io::{read_sweep_csv, to_json_string, ChamberFile, CoefficientFile, VoltageFile};
use meap::planner::{hemisphere_orientations, Objective};
use meap::vsh::Multipole;

fn meap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn quick_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::reference_setup();
    c.references.optimize = Some(OptimizeConfig {
        objective: Objective::CondA,
        budget: 80,
    });
    c.chamber.seeds = SeedSpec::Range { start: 1, count: 4 };
    c.pattern_step_deg = 10.0;
    c
}

fn write_config(dir: &Path, c: &ExperimentConfig) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, to_json_string(c).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn plan_rules() {
    let o = meap(&["plan", "--kr", "1.571"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("lambda_max = 2") && stdout(&o).contains("n_modes = 16"));

    let o = meap(&["plan", "--kr", "1.571", "--p-tr", "-40"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("lambda_max = 4") && text.contains("n_modes = 48"));
    assert!(text.contains("warning"));

    let o = meap(&["plan", "--kr", "30", "--p-tr", "-40"]);
    assert!(stdout(&o).contains("lambda_max = 36"));
    assert!(!stdout(&o).contains("warning"));

    assert_eq!(meap(&["plan", "--kr", "0"]).status.code(), Some(2));
}

fn spectrum(dir: &Path) -> Vec<((u32, i32), f64)> {
    let f = CoefficientFile::read(&dir.join("coefficients.json")).unwrap();
    f.spectrum
        .iter()
        .filter(|e| e.kind == Multipole::Electric)
        .map(|e| ((e.l, e.m), e.magnitude))
        .collect()
}

#[test]
fn decompose_spectra() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick_config());
    let o = meap(&[
        "decompose",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--theta0",
        "0",
        "--phi0",
        "0",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let z = spectrum(dir.path());
    let top = z.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert_eq!(top.0, (1, 0));
    assert_eq!(top.1, 1.0);
    let l3: f64 = z
        .iter()
        .filter(|e| e.0 .0 == 3)
        .map(|e| e.1)
        .fold(0.0, f64::max);
    assert!(l3 > 1e-3 && l3 < 0.1, "{l3}");

    let o = meap(&[
        "decompose",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--degrees",
        "--theta0",
        "90",
        "--phi0",
        "0",
    ]);
    assert!(o.status.success());
    let x = spectrum(dir.path());
    let get = |m: i32| x.iter().find(|e| e.0 == (1, m)).unwrap().1;
    assert!(get(1) > 0.5 && get(-1) > 0.5);
    assert!(get(0) < 1e-8);
}

#[test]
fn decompose_single_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = quick_config();
    c.modes.lambda_max = 1;
    c.references.orientations = Some(hemisphere_orientations(10));
    let cfg = write_config(dir.path(), &c);
    let o = meap(&["decompose", "--config", s(&cfg), "--out", s(dir.path())]);
    assert!(o.status.success());
    assert!(spectrum(dir.path()).iter().all(|e| e.0 .0 == 1));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick_config());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = meap(&[
            "simulate",
            "--config",
            s(&cfg),
            "--out",
            s(out),
            "--seed",
            "17",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["chamber.json", "voltages.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap()
        );
    }
    let v = VoltageFile::read(&a.join("voltages.json")).unwrap();
    assert_eq!(v.chamber_seed, 17);
    assert_eq!(v.antennas.len(), 11);
    assert!(v.antennas.iter().all(|x| x.voltages.len() == 10));
    let ch = ChamberFile::read(&a.join("chamber.json")).unwrap();
    assert_eq!(
        to_json_string(&ch).unwrap(),
        fs::read_to_string(a.join("chamber.json")).unwrap()
    );
}

#[test]
fn missing_chamber_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick_config());
    let o = meap(&[
        "calibrate",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--chamber",
        "/nonexistent/chamber.json",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = quick_config();
    c.chamber.n_probes = 5;
    let cfg = write_config(dir.path(), &c);
    assert_eq!(
        meap(&["reconstruct", "--config", s(&cfg), "--out", s(dir.path())])
            .status
            .code(),
        Some(2)
    );
    fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(
        meap(&["simulate", "--config", s(&cfg)]).status.code(),
        Some(2)
    );
}

#[test]
fn reconstruct_with_saved_chamber() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick_config());
    let o = meap(&["simulate", "--config", s(&cfg), "--out", s(dir.path())]);
    assert!(o.status.success());
    let chamber = dir.path().join("chamber.json");
    let o = meap(&[
        "calibrate",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--chamber",
        s(&chamber),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("calibration.json").exists());

    let o = meap(&[
        "reconstruct",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--chamber",
        s(&chamber),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("RMS Field Error"));
    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let report: Report = serde_json::from_str(&text).unwrap();
    assert_eq!(to_json_string(&report).unwrap(), text);
    assert!(report.rms_field_error < 1e-2);
    assert!((report.reconstruction.radiation_resistance - 73.1).abs() < 0.5);
    assert!((report.reconstruction.directivity - 1.64).abs() < 0.01);

    let pattern = fs::read_to_string(dir.path().join("pattern_reconstructed.csv")).unwrap();
    assert!(pattern.starts_with("theta,phi,E_theta_re,E_theta_im,E_phi_re,E_phi_im,mag\n"));
    assert_eq!(pattern.lines().count(), 1 + 19 * 36);
}

#[test]
fn reconstruct_reference_orientation() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = quick_config();
    c.references.optimize = None;
    let refs = hemisphere_orientations(10);
    c.references.orientations = Some(refs.clone());
    c.test.theta0 = refs[2].0;
    c.test.phi0 = refs[2].1;
    let cfg = write_config(dir.path(), &c);
    let o = meap(&[
        "reconstruct",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--seed",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Report =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report.rms_field_error < 1e-3, "{}", report.rms_field_error);
}

#[test]
fn duplicated_references_are_ill_conditioned() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = quick_config();
    c.references.optimize = None;
    let mut refs = hemisphere_orientations(10);
    refs[4] = refs[3];
    c.references.orientations = Some(refs);
    let cfg = write_config(dir.path(), &c);
    let o = meap(&[
        "reconstruct",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--seed",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ill-conditioned"));
}

#[test]
fn sweep_map() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick_config());
    let o = meap(&[
        "sweep",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--step",
        "30",
        "--seed",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cells = read_sweep_csv(fs::File::open(dir.path().join("sweep.csv")).unwrap()).unwrap();
    assert_eq!(cells.len(), 7 * 12);
    assert!(cells.iter().all(|c| c.is_ok() && c.rms_field_error < 0.05));
    assert!((cells[12].theta0 - PI / 6.0).abs() < 1e-12);
    let meta: SweepMeta =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sweep_meta.json")).unwrap())
            .unwrap();
    assert_eq!((meta.n_theta, meta.n_phi), (7, 12));
    assert_eq!(meta.reference_orientations.len(), 10);
    assert_eq!(meta.antipodal_orientations.len(), 10);

    let o = meap(&[
        "sweep",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--step",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn optimize_writes_orientations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick_config());
    let o = meap(&[
        "optimize",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--budget",
        "50",
        "--degrees",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: meap::planner::OrientationResult =
        serde_json::from_str(&fs::read_to_string(dir.path().join("orientations.json")).unwrap())
            .unwrap();
    assert!(r.value <= r.initial_value);
    assert_eq!(r.orientations.len(), 10);
    let o = meap(&[
        "optimize",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--objective",
        "bogus",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
