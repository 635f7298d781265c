use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use meap::chamber::probe_voltages;
use meap::dipole::{field_fn, DipoleSpec};
use meap::experiment::{
    calibrate_references, chamber_from_seed, choose_chamber, prepare_references, run_sweep,
    run_with_chamber, ExperimentConfig, ReferenceSet,
};
use meap::farfield::{decompose, RadiationSummary};
use meap::io::{
    matrix_rows, pattern_samples, write_json, write_pattern_csv, write_sweep_csv, CalibrationFile,
    ChamberFile, CoefficientFile, NamedVoltages, VoltageFile, CALIBRATION_FORMAT,
};
use meap::linalg::cond;
use meap::planner::{plan, Objective, OrientationProblem};
use meap::recon::channel_from_calibration;
use meap::{chamber::ChamberModel, Error};

#[derive(Parser)]
#[command(
    name = "meap",
    version,
    about = "Antenna pattern measurement in a simulated multipath chamber"
)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Use this chamber seed instead of searching the configured seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Angles given on the command line are in degrees.
    #[arg(long)]
    degrees: bool,
}

#[derive(Args)]
struct TestAxis {
    /// Test dipole axis polar angle (overrides the config).
    #[arg(long, requires = "phi0", allow_hyphen_values = true)]
    theta0: Option<f64>,
    /// Test dipole axis azimuth (overrides the config).
    #[arg(long, requires = "theta0", allow_hyphen_values = true)]
    phi0: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose the test dipole into VSH coefficients.
    Decompose {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        axis: TestAxis,
    },
    /// Sample (or select) a chamber and record probe voltages of every antenna.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Calibrate the channel from the reference antennas.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Chamber file written by `simulate`.
        #[arg(long)]
        chamber: Option<PathBuf>,
    },
    /// Full pipeline: calibrate, reconstruct the test antenna, write report and patterns.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        axis: TestAxis,
        /// Chamber file written by `simulate`.
        #[arg(long)]
        chamber: Option<PathBuf>,
    },
    /// Reconstruct the test dipole over a grid of axis orientations.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Chamber file written by `simulate`.
        #[arg(long)]
        chamber: Option<PathBuf>,
        /// Grid step in degrees (config value when absent).
        #[arg(long)]
        step: Option<f64>,
    },
    /// Number of modes needed for a source of electrical size kR.
    Plan {
        #[arg(long)]
        kr: f64,
        /// Truncation power in dB; selects the conservative rule.
        #[arg(long, allow_hyphen_values = true)]
        p_tr: Option<f64>,
        /// Source relative power in dB.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        p_r: f64,
    },
    /// Optimise the reference orientations and write them out.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Objective evaluations.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, value_parser = parse_objective)]
        objective: Option<Objective>,
    },
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    match s {
        "cond-a" => Ok(Objective::CondA),
        "capacity" => Ok(Objective::Capacity),
        _ => Err(format!("unknown objective {s:?} (cond-a or capacity)")),
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::read(&common.config)?;
    if let Some(seed) = common.seed {
        config = config.with_seed(seed);
    }
    fs::create_dir_all(&common.out)?;
    Ok(config)
}

fn apply_axis(config: &mut ExperimentConfig, axis: &TestAxis, degrees: bool) -> Result<(), Error> {
    if let (Some(t), Some(p)) = (axis.theta0, axis.phi0) {
        let (t, p) = if degrees {
            (t.to_radians(), p.to_radians())
        } else {
            (t, p)
        };
        config.test.theta0 = t;
        config.test.phi0 = p;
        config.test.validate()?;
    }
    Ok(())
}

fn resolve_chamber(
    config: &ExperimentConfig,
    refs: &ReferenceSet,
    file: Option<&Path>,
) -> Result<ChamberModel, Error> {
    if let Some(path) = file {
        let chamber = ChamberFile::read(path)?.chamber;
        if chamber.n_probes != config.chamber.n_probes || chamber.n_paths != config.chamber.n_paths
        {
            return Err(Error::InvalidInput(format!(
                "chamber file is {}x{}, config expects {}x{}",
                chamber.n_probes, chamber.n_paths, config.chamber.n_probes, config.chamber.n_paths
            )));
        }
        return Ok(chamber);
    }
    match config.chamber.seeds.seeds().as_slice() {
        [seed] => chamber_from_seed(config, *seed),
        _ => Ok(choose_chamber(config, refs)?.0),
    }
}

fn print_summary(label: &str, s: &RadiationSummary) {
    println!(
        "{label}: P = {:.4} W, R_r = {:.3} ohm, D = {:.4} ({:.3} dB)",
        s.power, s.radiation_resistance, s.directivity, s.directivity_db
    );
}

fn cmd_decompose(common: &Common, axis: &TestAxis) -> Result<(), Error> {
    let mut config = load(common)?;
    apply_axis(&mut config, axis, common.degrees)?;
    let k = config.k();
    let set = config.mode_set()?;
    let grid = config.quadrature_grid()?;
    let coeffs = decompose(field_fn(&config.test, k)?, &set, &grid)?;
    // spectra are normalised to the largest coefficient of the z-directed dipole
    let z = DipoleSpec {
        theta0: 0.0,
        phi0: 0.0,
        ..config.test
    };
    let z_max = decompose(field_fn(&z, k)?, &set, &grid)?.max_abs();
    let summary = RadiationSummary::from_coefficients(&coeffs, k, config.test.feed.current()?)?;
    let file = CoefficientFile::new(coeffs, config.wavelength, Some(config.test), Some(z_max));
    let path = common.out.join("coefficients.json");
    write_json(&path, &file)?;
    print_summary("decomposition", &summary);
    println!("{:<10} {:>10}", "mode", "|a|/|a|max");
    for s in &file.spectrum {
        let kind = if s.kind == meap::vsh::Multipole::Electric {
            'E'
        } else {
            'M'
        };
        println!(
            "{:<10} {:>10.4}",
            format!("{kind}({},{})", s.l, s.m),
            s.magnitude
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_simulate(common: &Common) -> Result<(), Error> {
    let config = load(common)?;
    let refs = prepare_references(&config)?;
    let chamber = resolve_chamber(&config, &refs, None)?;
    let k = config.k();
    let mut antennas = Vec::new();
    for (i, a) in refs.antennas.iter().enumerate() {
        antennas.push(NamedVoltages {
            name: format!("reference-{}", i + 1),
            antenna: *a,
            voltages: probe_voltages(&chamber, field_fn(a, k)?)
                .iter()
                .copied()
                .collect(),
        });
    }
    antennas.push(NamedVoltages {
        name: "test".into(),
        antenna: config.test,
        voltages: probe_voltages(&chamber, field_fn(&config.test, k)?)
            .iter()
            .copied()
            .collect(),
    });
    let seed = chamber.seed;
    write_json(&common.out.join("chamber.json"), &ChamberFile::new(chamber))?;
    write_json(
        &common.out.join("voltages.json"),
        &VoltageFile::new(seed, antennas),
    )?;
    println!(
        "chamber seed {seed}; wrote chamber.json and voltages.json to {}",
        common.out.display()
    );
    Ok(())
}

fn cmd_calibrate(common: &Common, chamber_file: Option<&Path>) -> Result<(), Error> {
    let config = load(common)?;
    let refs = prepare_references(&config)?;
    let chamber = resolve_chamber(&config, &refs, chamber_file)?;
    let cal = calibrate_references(&refs, &chamber)?;
    let channel = channel_from_calibration(&cal);
    let cond_a = cond(&cal.a_matrix);
    let cond_v = cond(&cal.v_matrix);
    let file = CalibrationFile {
        format: CALIBRATION_FORMAT.into(),
        mode_set: cal.mode_set.clone(),
        references: refs.antennas.clone(),
        chamber_seed: chamber.seed,
        a_matrix: matrix_rows(&cal.a_matrix),
        v_matrix: matrix_rows(&cal.v_matrix),
        channel: channel.as_ref().ok().map(|t| matrix_rows(&t.entries)),
        cond_a,
        cond_v,
        cond_t: channel.as_ref().ok().map(|t| t.cond()),
    };
    let path = common.out.join("calibration.json");
    write_json(&path, &file)?;
    println!("cond(A_R) = {cond_a:.4}, cond(V_R) = {cond_v:.4}");
    match channel {
        Ok(t) => println!("cond(T) = {:.4}", t.cond()),
        Err(e) => log::warn!("no channel matrix: {e}"),
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_reconstruct(
    common: &Common,
    axis: &TestAxis,
    chamber_file: Option<&Path>,
) -> Result<(), Error> {
    let mut config = load(common)?;
    apply_axis(&mut config, axis, common.degrees)?;
    let refs = prepare_references(&config)?;
    let chamber = resolve_chamber(&config, &refs, chamber_file)?;
    let run = run_with_chamber(&config, refs, chamber)?;
    let out = &common.out;
    write_json(&out.join("report.json"), &run.report)?;
    write_json(
        &out.join("coefficients_reconstructed.json"),
        &CoefficientFile::new(
            run.outcome.reconstruction.coefficients.clone(),
            config.wavelength,
            Some(config.test),
            None,
        ),
    )?;
    for (name, fields) in [
        ("pattern_theory.csv", &run.outcome.theory_pattern),
        (
            "pattern_reconstructed.csv",
            &run.outcome.reconstructed_pattern,
        ),
    ] {
        let w = BufWriter::new(File::create(out.join(name))?);
        write_pattern_csv(w, &pattern_samples(&run.pattern_grid, fields))?;
    }
    print!("{}", run.report.table());
    println!(
        "cond(A_R) = {:.3}, cond(V_R) = {:.3}, chamber seed {}",
        run.report.cond_a, run.report.cond_v, run.report.selected_seed
    );
    println!(
        "wrote report.json, coefficients_reconstructed.json and pattern CSVs to {}",
        out.display()
    );
    Ok(())
}

fn cmd_sweep(common: &Common, chamber_file: Option<&Path>, step: Option<f64>) -> Result<(), Error> {
    let config = load(common)?;
    let step = step.unwrap_or(config.sweep_step_deg);
    let refs = prepare_references(&config)?;
    let chamber = resolve_chamber(&config, &refs, chamber_file)?;
    let sweep = run_sweep(&config, &refs, &chamber, step)?;
    let w = BufWriter::new(File::create(common.out.join("sweep.csv"))?);
    write_sweep_csv(w, &sweep.cells)?;
    write_json(&common.out.join("sweep_meta.json"), &sweep.meta)?;
    let worst = sweep
        .cells
        .iter()
        .filter(|c| c.is_ok())
        .map(|c| c.rms_field_error)
        .fold(0.0, f64::max);
    println!(
        "{}x{} orientations, {} failed, max RMS field error {worst:.3e}, cond(V_R) = {:.3}",
        sweep.meta.n_theta, sweep.meta.n_phi, sweep.meta.failed_cells, sweep.meta.cond_v
    );
    println!(
        "wrote sweep.csv and sweep_meta.json to {}",
        common.out.display()
    );
    Ok(())
}

fn cmd_plan(kr: f64, p_tr: Option<f64>, p_r: f64) -> Result<(), Error> {
    let b = plan(kr, p_tr, p_r)?;
    println!("lambda_max = {}", b.lambda_max);
    println!("n_modes = {}", b.n_modes);
    if !b.within_validity {
        println!(
            "warning: kR = {kr} and P_tr = {:?} dB are outside the rule's validity range",
            p_tr
        );
    }
    Ok(())
}

fn cmd_optimize(
    common: &Common,
    budget: Option<usize>,
    objective: Option<Objective>,
) -> Result<(), Error> {
    let config = load(common)?;
    let opt = config
        .references
        .optimize
        .unwrap_or(meap::experiment::OptimizeConfig {
            objective: Objective::CondA,
            budget: 2000,
        });
    let problem = OrientationProblem::new(
        &config.mode_set()?,
        &config.quadrature_grid()?,
        config.references.length,
        config.k(),
    )?;
    let r = meap::planner::optimize_reference_orientations(
        &problem,
        &config.reference_orientations()?,
        objective.unwrap_or(opt.objective),
        budget.unwrap_or(opt.budget),
    )?;
    let path = common.out.join("orientations.json");
    write_json(&path, &r)?;
    println!(
        "{:?}: {:.4} -> {:.4} after {} evaluations",
        r.objective, r.initial_value, r.value, r.evaluations
    );
    for (t, p) in &r.orientations {
        if common.degrees {
            println!("{:9.4} {:9.4}", t.to_degrees(), p.to_degrees());
        } else {
            println!("{t:9.6} {p:9.6}");
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Decompose { common, axis } => cmd_decompose(common, axis),
        Command::Simulate { common } => cmd_simulate(common),
        Command::Calibrate { common, chamber } => cmd_calibrate(common, chamber.as_deref()),
        Command::Reconstruct {
            common,
            axis,
            chamber,
        } => cmd_reconstruct(common, axis, chamber.as_deref()),
        Command::Sweep {
            common,
            chamber,
            step,
        } => cmd_sweep(common, chamber.as_deref(), *step),
        Command::Plan { kr, p_tr, p_r } => cmd_plan(*kr, *p_tr, *p_r),
        Command::Optimize {
            common,
            budget,
            objective,
        } => cmd_optimize(common, *budget, *objective),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
