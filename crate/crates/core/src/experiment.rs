//! Experiment configuration and the end-to-end pipeline: reference
//! decomposition, chamber selection, calibration, reconstruction, metrics
//! and orientation sweeps.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chamber::{
    check_information_budget, probe_voltages, sample_chamber, select_chamber, voltage_matrix,
    ChamberModel, ChamberParams, DEFAULT_SIGMA_RHO,
};
use crate::dipole::{field_fn, reference_dipole_set, DipoleSpec};
use crate::farfield::{
    decompose, quadrature_power, refine_maximum, rms_field_error, synthesize_grid, PatternGrid,
    RadiationSummary, SphereGrid, VshCoefficients,
};
use crate::io::{read_json, SweepCell};
use crate::linalg::{cond, CMatrix, CVector};
use crate::planner::{
    hemisphere_orientations, optimize_reference_orientations, wrap_orientation, Objective,
    OrientationProblem, OrientationResult, TraceRecord,
};
use crate::recon::{
    apply_normalization, calibrate, channel_from_calibration, reconstruct, CalibrationSet,
    Diagnostics, Method, Normalization, ReconstructionResult,
};
use crate::vsh::{build_mode_set, ModeSet, MultipoleFilter, ParityFilter, TangentVector};
use crate::{Error, Result};

pub const CONFIG_FORMAT: &str = "meap-config/1";
pub const REPORT_FORMAT: &str = "meap-report/1";
pub const SWEEP_META_FORMAT: &str = "meap-sweep/1";

fn default_wavelength() -> f64 {
    1.0
}
fn default_length() -> f64 {
    0.5
}
fn default_pattern_step() -> f64 {
    2.0
}
fn default_sweep_step() -> f64 {
    10.0
}
fn default_sigma() -> f64 {
    DEFAULT_SIGMA_RHO
}
fn default_budget() -> usize {
    2000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeConfig {
    pub lambda_max: u32,
    #[serde(default)]
    pub parity: ParityFilter,
    #[serde(default)]
    pub multipole: MultipoleFilter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    #[serde(default)]
    pub objective: Objective,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConfig {
    /// Dipole length in wavelengths, shared by all references.
    #[serde(default = "default_length")]
    pub length: f64,
    /// Axis orientations `(theta0, phi0)`; a hemisphere spiral sized to the
    /// mode set when absent.
    #[serde(default)]
    pub orientations: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub optimize: Option<OptimizeConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range { start: u64, count: u64 },
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::List(v) => v.clone(),
            SeedSpec::Range { start, count } => (*start..start + count).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChamberConfig {
    pub n_probes: usize,
    pub n_paths: usize,
    #[serde(default = "default_sigma")]
    pub sigma_rho: f64,
    pub seeds: SeedSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub format: String,
    #[serde(default = "default_wavelength")]
    pub wavelength: f64,
    pub modes: ModeConfig,
    pub references: ReferenceConfig,
    pub chamber: ChamberConfig,
    pub test: DipoleSpec,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub normalization: Option<Normalization>,
    /// `(n_theta, n_phi)` for reference decomposition; sized from the band
    /// limit when absent.
    #[serde(default)]
    pub quadrature: Option<(usize, usize)>,
    #[serde(default = "default_pattern_step")]
    pub pattern_step_deg: f64,
    #[serde(default = "default_sweep_step")]
    pub sweep_step_deg: f64,
}

impl ExperimentConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let c: Self = read_json(path)?;
        c.validate()?;
        Ok(c)
    }

    /// The ten-reference, ten-probe odd-l electric setup at `L = 3`.
    pub fn reference_setup() -> Self {
        Self {
            format: CONFIG_FORMAT.into(),
            wavelength: 1.0,
            modes: ModeConfig {
                lambda_max: 3,
                parity: ParityFilter::OddL,
                multipole: MultipoleFilter::ElectricOnly,
            },
            references: ReferenceConfig {
                length: 0.5,
                orientations: None,
                optimize: Some(OptimizeConfig {
                    objective: Objective::CondA,
                    budget: default_budget(),
                }),
            },
            chamber: ChamberConfig {
                n_probes: 10,
                n_paths: 10,
                sigma_rho: DEFAULT_SIGMA_RHO,
                seeds: SeedSpec::Range {
                    start: 1,
                    count: 100,
                },
            },
            test: DipoleSpec::half_wave(PI / 4.0, PI / 3.0),
            method: Method::Inverse,
            normalization: None,
            quadrature: None,
            pattern_step_deg: default_pattern_step(),
            sweep_step_deg: default_sweep_step(),
        }
    }

    pub fn k(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn mode_set(&self) -> Result<ModeSet> {
        build_mode_set(
            self.modes.lambda_max,
            self.modes.parity,
            self.modes.multipole,
        )
    }

    pub fn quadrature_grid(&self) -> Result<SphereGrid> {
        match self.quadrature {
            Some((nt, np)) => SphereGrid::new(nt, np),
            None => Ok(SphereGrid::for_band_limit(self.modes.lambda_max)),
        }
    }

    pub fn reference_orientations(&self) -> Result<Vec<(f64, f64)>> {
        Ok(match &self.references.orientations {
            Some(o) => o.clone(),
            None => hemisphere_orientations(self.mode_set()?.len()),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != CONFIG_FORMAT {
            return Err(Error::InvalidInput(format!(
                "unsupported config format {:?}, expected {CONFIG_FORMAT:?}",
                self.format
            )));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::InvalidInput("wavelength must be positive".into()));
        }
        let set = self.mode_set()?;
        check_information_budget(self.chamber.n_probes, self.chamber.n_paths, set.len())?;
        if !(self.chamber.sigma_rho > 0.0) {
            return Err(Error::InvalidInput("sigma_rho must be positive".into()));
        }
        if self.chamber.seeds.seeds().is_empty() {
            return Err(Error::InvalidInput("no chamber seeds".into()));
        }
        let n_refs = self.reference_orientations()?.len();
        if n_refs < set.len() {
            return Err(Error::InvalidInput(format!(
                "{n_refs} reference antennas cannot span {} modes",
                set.len()
            )));
        }
        self.test.validate()?;
        DipoleSpec {
            length: self.references.length,
            ..DipoleSpec::half_wave(0.0, 0.0)
        }
        .validate()?;
        for (name, step) in [
            ("pattern", self.pattern_step_deg),
            ("sweep", self.sweep_step_deg),
        ] {
            if !(step > 0.0 && step <= 90.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} step {step} deg must be in (0, 90]"
                )));
            }
        }
        self.quadrature_grid()?;
        Ok(())
    }

    /// Replaces the seed search with a single seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.chamber.seeds = SeedSpec::List(vec![seed]);
        self
    }
}

/// Reference antennas with their decompositions.
#[derive(Debug, Clone)]
pub struct ReferenceSet {
    pub k: f64,
    pub mode_set: ModeSet,
    pub antennas: Vec<DipoleSpec>,
    pub coefficients: Vec<VshCoefficients>,
    pub a_matrix: CMatrix,
    pub optimization: Option<OrientationResult>,
}

impl ReferenceSet {
    pub fn voltage_matrix(&self, chamber: &ChamberModel) -> Result<CMatrix> {
        let fields = self
            .antennas
            .iter()
            .map(|a| field_fn(a, self.k))
            .collect::<Result<Vec<_>>>()?;
        Ok(voltage_matrix(chamber, &fields))
    }
}

/// Optionally optimises the orientations, then decomposes each reference
/// with the convergence-checked quadrature.
pub fn prepare_references(config: &ExperimentConfig) -> Result<ReferenceSet> {
    let k = config.k();
    let mode_set = config.mode_set()?;
    let grid = config.quadrature_grid()?;
    let mut orientations = config.reference_orientations()?;
    let mut optimization = None;
    if let Some(opt) = config.references.optimize {
        let problem = OrientationProblem::new(&mode_set, &grid, config.references.length, k)?;
        let r =
            optimize_reference_orientations(&problem, &orientations, opt.objective, opt.budget)?;
        log::info!(
            "reference orientations: {:?} {:.4} -> {:.4} in {} evaluations",
            opt.objective,
            r.initial_value,
            r.value,
            r.evaluations
        );
        orientations = r.orientations.clone();
        optimization = Some(r);
    }
    let antennas = reference_dipole_set(&orientations, config.references.length);
    let coefficients = antennas
        .iter()
        .map(|a| decompose(field_fn(a, k)?, &mode_set, &grid))
        .collect::<Result<Vec<_>>>()?;
    let mut a_matrix = CMatrix::zeros(mode_set.len(), antennas.len());
    for (j, c) in coefficients.iter().enumerate() {
        a_matrix.set_column(j, &c.to_vector());
    }
    Ok(ReferenceSet {
        k,
        mode_set,
        antennas,
        coefficients,
        a_matrix,
        optimization,
    })
}

/// Chamber with the best-conditioned reference voltages among the configured seeds.
pub fn choose_chamber(
    config: &ExperimentConfig,
    refs: &ReferenceSet,
) -> Result<(ChamberModel, Vec<(u64, f64)>)> {
    let params = ChamberParams {
        n_probes: config.chamber.n_probes,
        n_paths: config.chamber.n_paths,
        sigma_rho: config.chamber.sigma_rho,
    };
    let seeds = config.chamber.seeds.seeds();
    let sel = select_chamber(&seeds, params, |ch| {
        refs.voltage_matrix(ch)
            .unwrap_or_else(|_| CMatrix::zeros(0, 0))
    })?;
    log::info!(
        "chamber seed {} selected, cond(V_R) = {:.4}",
        sel.chamber.seed,
        sel.cond_v
    );
    Ok((sel.chamber, sel.candidates))
}

pub fn calibrate_references(refs: &ReferenceSet, chamber: &ChamberModel) -> Result<CalibrationSet> {
    calibrate(&refs.voltage_matrix(chamber)?, &refs.coefficients)
}

/// Theoretical radiation quantities of a dipole from its exact field.
pub fn theory_summary(spec: &DipoleSpec, k: f64) -> Result<RadiationSummary> {
    let field = field_fn(spec, k)?;
    let grid = SphereGrid::new(96, 192)?;
    let power = quadrature_power(&field, &grid, k);
    let coarse_grid = PatternGrid::uniform_degrees(1.0)?;
    let coarse: Vec<f64> = coarse_grid
        .points()
        .map(|(t, p)| field(t, p).norm_sqr())
        .collect();
    let (_, _, peak) = refine_maximum(|t, p| field(t, p).norm_sqr(), &coarse_grid, &coarse);
    RadiationSummary::from_parts(power, peak, k, spec.feed.current()?)
}

/// Result of reconstructing one test antenna.
#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub reconstruction: ReconstructionResult,
    pub summary: RadiationSummary,
    pub rms_field_error: f64,
    pub theory_pattern: Vec<TangentVector>,
    pub reconstructed_pattern: Vec<TangentVector>,
}

/// Measures `test` in `chamber`, reconstructs it and scores it on `pattern`.
pub fn evaluate_test(
    config: &ExperimentConfig,
    cal: &CalibrationSet,
    chamber: &ChamberModel,
    test: &DipoleSpec,
    pattern: &PatternGrid,
) -> Result<TestOutcome> {
    let k = config.k();
    let field = field_fn(test, k)?;
    let v: CVector = probe_voltages(chamber, &field);
    let mut reconstruction = reconstruct(cal, &v, config.method)?;
    if let Some(n) = config.normalization {
        reconstruction = apply_normalization(&reconstruction, n, k)?;
    }
    let current = test.feed.current()?;
    let summary = RadiationSummary::from_coefficients(&reconstruction.coefficients, k, current)?;
    let theory_pattern: Vec<_> = pattern.points().map(|(t, p)| field(t, p)).collect();
    let reconstructed_pattern =
        synthesize_grid(&reconstruction.coefficients, &pattern.theta, &pattern.phi);
    let rms = rms_field_error(&theory_pattern, &reconstructed_pattern)?;
    Ok(TestOutcome {
        reconstruction,
        summary,
        rms_field_error: rms,
        theory_pattern,
        reconstructed_pattern,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationSummary {
    pub objective: Objective,
    pub initial_value: f64,
    pub value: f64,
    pub evaluations: usize,
    pub trace: Vec<TraceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    /// Unix seconds; the only field that differs between identical runs.
    pub timestamp: u64,
    pub test: DipoleSpec,
    pub method: Method,
    pub mode_set_size: usize,
    pub reference_orientations: Vec<(f64, f64)>,
    pub seeds: Vec<u64>,
    pub selected_seed: u64,
    pub theory: RadiationSummary,
    pub reconstruction: RadiationSummary,
    pub rms_field_error: f64,
    pub rr_error: f64,
    pub directivity_error: f64,
    pub cond_a: f64,
    pub cond_v: f64,
    pub cond_t: Option<f64>,
    pub diagnostics: Diagnostics,
    pub optimization: Option<OptimizationSummary>,
}

impl Report {
    /// Copy with the timestamp cleared, for reproducibility comparisons.
    pub fn without_timestamp(&self) -> Self {
        Self {
            timestamp: 0,
            ..self.clone()
        }
    }

    /// Theory against reconstruction in the layout
    /// `RMS Field Error | R_r (ohm) | Directivity`.
    pub fn table(&self) -> String {
        let row = |name: &str, rms: &str, s: &RadiationSummary| {
            format!(
                "{name:<16}| {rms:<16}| {:<10.1}| {:.2} ({:.2} dB)\n",
                s.radiation_resistance, s.directivity, s.directivity_db
            )
        };
        let mut out = format!(
            "{:<16}| {:<16}| {:<10}| {}\n",
            "", "RMS Field Error", "R_r (ohm)", "Directivity"
        );
        out.push_str(&row("Theory", "-", &self.theory));
        out.push_str(&row(
            "Reconstruction",
            &format!("{:.2e}", self.rms_field_error),
            &self.reconstruction,
        ));
        out
    }
}

/// Everything a full run produces.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub report: Report,
    pub references: ReferenceSet,
    pub chamber: ChamberModel,
    pub calibration: CalibrationSet,
    pub pattern_grid: PatternGrid,
    pub outcome: TestOutcome,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Full pipeline: references, chamber selection, calibration, reconstruction, metrics.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun> {
    config.validate()?;
    let references = prepare_references(config)?;
    let (chamber, _) = choose_chamber(config, &references)?;
    run_with_chamber(config, references, chamber)
}

/// Pipeline after the chamber is fixed.
pub fn run_with_chamber(
    config: &ExperimentConfig,
    references: ReferenceSet,
    chamber: ChamberModel,
) -> Result<ExperimentRun> {
    if chamber.n_probes != config.chamber.n_probes {
        return Err(Error::InvalidInput(format!(
            "chamber has {} probes, config expects {}",
            chamber.n_probes, config.chamber.n_probes
        )));
    }
    let calibration = calibrate_references(&references, &chamber)?;
    let cond_a = cond(&calibration.a_matrix);
    let cond_v = cond(&calibration.v_matrix);
    let cond_t = channel_from_calibration(&calibration)
        .ok()
        .map(|t| t.cond());
    let pattern_grid = PatternGrid::uniform_degrees(config.pattern_step_deg)?;
    let outcome = evaluate_test(config, &calibration, &chamber, &config.test, &pattern_grid)?;
    let theory = theory_summary(&config.test, config.k())?;
    let report = Report {
        format: REPORT_FORMAT.into(),
        timestamp: now(),
        test: config.test,
        method: config.method,
        mode_set_size: references.mode_set.len(),
        reference_orientations: references
            .antennas
            .iter()
            .map(|a| (a.theta0, a.phi0))
            .collect(),
        seeds: config.chamber.seeds.seeds(),
        selected_seed: chamber.seed,
        theory,
        reconstruction: outcome.summary,
        rms_field_error: outcome.rms_field_error,
        rr_error: outcome.summary.radiation_resistance - theory.radiation_resistance,
        directivity_error: outcome.summary.directivity - theory.directivity,
        cond_a,
        cond_v,
        cond_t,
        diagnostics: outcome.reconstruction.diagnostics.clone(),
        optimization: references
            .optimization
            .as_ref()
            .map(|o| OptimizationSummary {
                objective: o.objective,
                initial_value: o.initial_value,
                value: o.value,
                evaluations: o.evaluations,
                trace: o.trace.clone(),
            }),
    };
    Ok(ExperimentRun {
        report,
        references,
        chamber,
        calibration,
        pattern_grid,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub format: String,
    pub step_deg: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    pub selected_seed: u64,
    pub cond_v: f64,
    pub reference_orientations: Vec<(f64, f64)>,
    /// Axis reversals of the references; a dipole and its reversal radiate
    /// the same pattern up to sign.
    pub antipodal_orientations: Vec<(f64, f64)>,
    pub theory: RadiationSummary,
    pub failed_cells: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub meta: SweepMeta,
    /// Theta-major, `n_theta x n_phi`.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, i: usize, j: usize) -> &SweepCell {
        &self.cells[i * self.meta.n_phi + j]
    }
}

/// Reconstructs the test dipole at every orientation of a
/// `step_deg` grid with one calibration. Failed cells are recorded, not fatal.
pub fn run_sweep(
    config: &ExperimentConfig,
    references: &ReferenceSet,
    chamber: &ChamberModel,
    step_deg: f64,
) -> Result<SweepResult> {
    let orientations = PatternGrid::uniform_degrees(step_deg)?;
    if orientations.is_empty() {
        return Err(Error::InvalidInput("empty sweep grid".into()));
    }
    let calibration = calibrate_references(references, chamber)?;
    let pattern = PatternGrid::uniform_degrees(config.pattern_step_deg)?;
    // R_r and D do not depend on the axis direction
    let theory = theory_summary(&config.test, config.k())?;
    let points: Vec<(f64, f64)> = orientations.points().collect();
    let cells: Vec<SweepCell> = points
        .par_iter()
        .map(|&(theta0, phi0)| {
            let test = DipoleSpec {
                theta0,
                phi0,
                ..config.test
            };
            match evaluate_test(config, &calibration, chamber, &test, &pattern) {
                Ok(o) => SweepCell {
                    theta0,
                    phi0,
                    rms_field_error: o.rms_field_error,
                    rr_error: o.summary.radiation_resistance - theory.radiation_resistance,
                    directivity_error: o.summary.directivity - theory.directivity,
                    status: "ok".into(),
                },
                Err(e) => SweepCell {
                    theta0,
                    phi0,
                    rms_field_error: f64::NAN,
                    rr_error: f64::NAN,
                    directivity_error: f64::NAN,
                    status: format!("error: {e}"),
                },
            }
        })
        .collect();
    let reference_orientations: Vec<(f64, f64)> = references
        .antennas
        .iter()
        .map(|a| (a.theta0, a.phi0))
        .collect();
    let antipodal_orientations = reference_orientations
        .iter()
        .map(|&(t, p)| wrap_orientation(PI - t, p + PI))
        .collect();
    let failed_cells = cells.iter().filter(|c| !c.is_ok()).count();
    Ok(SweepResult {
        meta: SweepMeta {
            format: SWEEP_META_FORMAT.into(),
            step_deg,
            n_theta: orientations.theta.len(),
            n_phi: orientations.phi.len(),
            selected_seed: chamber.seed,
            cond_v: cond(&calibration.v_matrix),
            reference_orientations,
            antipodal_orientations,
            theory,
            failed_cells,
        },
        cells,
    })
}

/// A chamber from a seed with the configured shape.
pub fn chamber_from_seed(config: &ExperimentConfig, seed: u64) -> Result<ChamberModel> {
    sample_chamber(
        seed,
        config.chamber.n_probes,
        config.chamber.n_paths,
        config.chamber.sigma_rho,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::to_json_string;
    use crate::recon::Weights;

    fn quick_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::reference_setup();
        c.references.optimize = Some(OptimizeConfig {
            objective: Objective::CondA,
            budget: 60,
        });
        c.chamber.seeds = SeedSpec::Range { start: 1, count: 5 };
        c.pattern_step_deg = 10.0;
        c
    }

    #[test]
    fn config_json_round_trip() {
        let c = ExperimentConfig::reference_setup();
        let text = to_json_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(to_json_string(&back).unwrap(), text);
        let list: SeedSpec = serde_json::from_str("[3, 5]").unwrap();
        assert_eq!(list.seeds(), vec![3, 5]);
        let range: SeedSpec = serde_json::from_str(r#"{"start": 2, "count": 3}"#).unwrap();
        assert_eq!(range.seeds(), vec![2, 3, 4]);
    }

    #[test]
    fn config_validation() {
        let mut c = quick_config();
        c.validate().unwrap();
        c.chamber.n_probes = 9;
        assert!(c.validate().is_err());
        let mut c = quick_config();
        c.chamber.n_paths = 4;
        assert!(c.validate().is_err());
        let mut c = quick_config();
        c.references.orientations = Some(vec![(0.0, 0.0); 3]);
        assert!(c.validate().is_err());
        let mut c = quick_config();
        c.format = "x".into();
        assert!(c.validate().is_err());
        let mut c = quick_config();
        c.chamber.seeds = SeedSpec::List(vec![]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn pipeline_reconstructs_test_dipole() {
        let run = run_experiment(&quick_config()).unwrap();
        let r = &run.report;
        assert!(r.rms_field_error < 1e-2, "{}", r.rms_field_error);
        assert!(r.rr_error.abs() < 0.5, "{}", r.rr_error);
        assert!(r.directivity_error.abs() < 0.01, "{}", r.directivity_error);
        assert!((r.theory.radiation_resistance - 73.08).abs() < 0.05);
        assert!(r.table().contains("Reconstruction"));
    }

    #[test]
    fn reference_as_test_is_nearly_exact() {
        let mut c = quick_config();
        c.references.optimize = None;
        let refs = prepare_references(&c).unwrap();
        c.test = refs.antennas[3];
        c.method = Method::DirectWeights;
        let chamber = chamber_from_seed(&c, 1).unwrap();
        let run = run_with_chamber(&c, refs, chamber).unwrap();
        assert!(
            run.report.rms_field_error < 1e-3,
            "{}",
            run.report.rms_field_error
        );
        let Some(Weights::Complex(w)) = &run.outcome.reconstruction.weights else {
            panic!()
        };
        assert!((w[3].re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn duplicated_reference_is_ill_conditioned() {
        let mut c = quick_config();
        c.references.optimize = None;
        let mut o = hemisphere_orientations(10);
        o[1] = o[0];
        c.references.orientations = Some(o);
        let refs = prepare_references(&c).unwrap();
        let chamber = chamber_from_seed(&c, 1).unwrap();
        let err = run_with_chamber(&c, refs, chamber).unwrap_err();
        assert!(err.is_numerical(), "{err}");
    }
}
