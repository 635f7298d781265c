//! On-disk formats: pretty JSON documents with a `format` tag and CSV
//! pattern and sweep tables. Complex numbers are `[re, im]` pairs and
//! angles are radians.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::chamber::ChamberModel;
use crate::dipole::DipoleSpec;
use crate::farfield::{PatternGrid, VshCoefficients};
use crate::linalg::CMatrix;
use crate::vsh::{ModeSet, Multipole, TangentVector};
use crate::{Error, Result};

pub const COEFFICIENTS_FORMAT: &str = "meap-coefficients/1";
pub const CHAMBER_FORMAT: &str = "meap-chamber/1";
pub const VOLTAGES_FORMAT: &str = "meap-voltages/1";
pub const CALIBRATION_FORMAT: &str = "meap-calibration/1";

pub const PATTERN_HEADER: [&str; 7] = [
    "theta",
    "phi",
    "E_theta_re",
    "E_theta_im",
    "E_phi_re",
    "E_phi_im",
    "mag",
];
pub const SWEEP_HEADER: [&str; 6] = [
    "theta0",
    "phi0",
    "rms_field_error",
    "rr_error",
    "directivity_error",
    "status",
];

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn check_format(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::InvalidInput(format!(
            "unsupported file format {found:?}, expected {expected:?}"
        )));
    }
    Ok(())
}

/// Row-major complex matrix as nested `[re, im]` pairs.
pub fn matrix_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn matrix_from_rows(rows: &[Vec<Complex64>]) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub kind: Multipole,
    pub l: u32,
    pub m: i32,
    pub magnitude: f64,
}

/// Coefficients with their mode set inline, plus a magnitude spectrum
/// normalised to `spectrum_reference`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub format: String,
    pub wavelength: f64,
    pub antenna: Option<DipoleSpec>,
    pub coefficients: VshCoefficients,
    pub spectrum_reference: f64,
    pub spectrum: Vec<SpectrumEntry>,
}

impl CoefficientFile {
    /// Normalises the spectrum by `reference` (the largest magnitude when `None`).
    pub fn new(
        coefficients: VshCoefficients,
        wavelength: f64,
        antenna: Option<DipoleSpec>,
        reference: Option<f64>,
    ) -> Self {
        let reference = reference.unwrap_or_else(|| coefficients.max_abs());
        let scale = if reference > 0.0 {
            1.0 / reference
        } else {
            0.0
        };
        let spectrum = coefficients
            .iter()
            .map(|(mode, a)| SpectrumEntry {
                kind: mode.kind,
                l: mode.l,
                m: mode.m,
                magnitude: a.norm() * scale,
            })
            .collect();
        Self {
            format: COEFFICIENTS_FORMAT.into(),
            wavelength,
            antenna,
            coefficients,
            spectrum_reference: reference,
            spectrum,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f: Self = read_json(path)?;
        check_format(&f.format, COEFFICIENTS_FORMAT)?;
        f.coefficients.mode_set.validate()?;
        if f.coefficients.values.len() != f.coefficients.mode_set.len() {
            return Err(Error::DimensionMismatch(
                "coefficient count does not match its mode set".into(),
            ));
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChamberFile {
    pub format: String,
    pub chamber: ChamberModel,
}

impl ChamberFile {
    pub fn new(chamber: ChamberModel) -> Self {
        Self {
            format: CHAMBER_FORMAT.into(),
            chamber,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f: Self = read_json(path)?;
        check_format(&f.format, CHAMBER_FORMAT)?;
        f.chamber.validate()?;
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedVoltages {
    pub name: String,
    pub antenna: DipoleSpec,
    pub voltages: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageFile {
    pub format: String,
    pub chamber_seed: u64,
    pub antennas: Vec<NamedVoltages>,
}

impl VoltageFile {
    pub fn new(chamber_seed: u64, antennas: Vec<NamedVoltages>) -> Self {
        Self {
            format: VOLTAGES_FORMAT.into(),
            chamber_seed,
            antennas,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f: Self = read_json(path)?;
        check_format(&f.format, VOLTAGES_FORMAT)?;
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub format: String,
    pub mode_set: ModeSet,
    pub references: Vec<DipoleSpec>,
    pub chamber_seed: u64,
    /// `A_R`, modes x references.
    pub a_matrix: Vec<Vec<Complex64>>,
    /// `V_R`, probes x references.
    pub v_matrix: Vec<Vec<Complex64>>,
    /// `T = V_R A_R^-1` when `A_R` is invertible.
    pub channel: Option<Vec<Vec<Complex64>>>,
    pub cond_a: f64,
    pub cond_v: f64,
    pub cond_t: Option<f64>,
}

impl CalibrationFile {
    pub fn read(path: &Path) -> Result<Self> {
        let f: Self = read_json(path)?;
        check_format(&f.format, CALIBRATION_FORMAT)?;
        f.mode_set.validate()?;
        Ok(f)
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("csv: {other:?}")),
    }
}

fn parse_field(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("line {line}: {s:?} is not a number")))
}

/// One row of a pattern table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSample {
    pub theta: f64,
    pub phi: f64,
    pub field: TangentVector,
}

pub fn pattern_samples(grid: &PatternGrid, fields: &[TangentVector]) -> Vec<PatternSample> {
    grid.points()
        .zip(fields)
        .map(|((theta, phi), &field)| PatternSample { theta, phi, field })
        .collect()
}

pub fn write_pattern_csv<W: std::io::Write>(out: W, samples: &[PatternSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PATTERN_HEADER).map_err(csv_error)?;
    for s in samples {
        let e = s.field;
        w.write_record([
            s.theta.to_string(),
            s.phi.to_string(),
            e.e_theta.re.to_string(),
            e.e_theta.im.to_string(),
            e.e_phi.re.to_string(),
            e.e_phi.im.to_string(),
            e.norm().to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pattern_csv<R: std::io::Read>(input: R) -> Result<Vec<PatternSample>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(PATTERN_HEADER) {
        return Err(Error::InvalidInput(format!(
            "unexpected pattern header {header:?}"
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = i + 2;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| parse_field(s, line))
            .collect::<Result<_>>()?;
        if v.len() != PATTERN_HEADER.len() {
            return Err(Error::InvalidInput(format!(
                "line {line}: expected 7 columns"
            )));
        }
        out.push(PatternSample {
            theta: v[0],
            phi: v[1],
            field: TangentVector::new(Complex64::new(v[2], v[3]), Complex64::new(v[4], v[5])),
        });
    }
    Ok(out)
}

/// One test orientation of a sweep. Errors are `NaN` when the cell failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub theta0: f64,
    pub phi0: f64,
    pub rms_field_error: f64,
    pub rr_error: f64,
    pub directivity_error: f64,
    pub status: String,
}

impl SweepCell {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub fn write_sweep_csv<W: std::io::Write>(out: W, cells: &[SweepCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(csv_error)?;
    for c in cells {
        w.write_record([
            c.theta0.to_string(),
            c.phi0.to_string(),
            c.rms_field_error.to_string(),
            c.rr_error.to_string(),
            c.directivity_error.to_string(),
            c.status.clone(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: std::io::Read>(input: R) -> Result<Vec<SweepCell>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(SWEEP_HEADER) {
        return Err(Error::InvalidInput(format!(
            "unexpected sweep header {header:?}"
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = i + 2;
        if rec.len() != SWEEP_HEADER.len() {
            return Err(Error::InvalidInput(format!(
                "line {line}: expected 6 columns"
            )));
        }
        out.push(SweepCell {
            theta0: parse_field(&rec[0], line)?,
            phi0: parse_field(&rec[1], line)?,
            rms_field_error: parse_field(&rec[2], line)?,
            rr_error: parse_field(&rec[3], line)?,
            directivity_error: parse_field(&rec[4], line)?,
            status: rec[5].to_string(),
        });
    }
    Ok(out)
}
