//! `quadvane`: command-line front end for the four-beam airflow sensor twin.
//!
//! Exit status is 0 on success, 1 on a domain or validation error and 2 on a
//! usage error.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use quadvane_core::csvio::fmt_f64;
use quadvane_core::estimation::{
    build_calibration_at, direction_threshold, fit_lobe, uniform_grid, CalibrationTable,
    JointEstimator,
};
use quadvane_core::selftest::run_selftest;
use quadvane_core::sensor_model::{
    default_config, load_config, parse_config, save_config, FlowCondition, SensorConfig,
    LATTICE_AZIMUTHS_DEG, MAX_SPEED,
};
use quadvane_core::transduction::{base_resistance, ResponseVector};
use quadvane_core::windtunnel::{
    export_csv, import_csv, run_sweep, run_sweep_with_threads, NoiseModel, SweepRecord,
    ANGLE_SWEEP_SPEEDS, LCR_QUANTIZATION_STEP, LCR_SIGMA, SPEED_SWEEP_ANGLES,
};

#[derive(Parser)]
#[command(
    name = "quadvane",
    version,
    about = "Four-beam piezoresistive airflow sensor twin"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print one sweep-format CSV row for a single flow condition.
    Simulate(SimulateArgs),
    /// Run an angle × speed sweep and write it as CSV.
    Sweep(SweepArgs),
    /// Build a speed calibration table (v, Σ|dR|).
    Calibrate(CalibrateArgs),
    /// Fit lobe coefficients to a sweep CSV.
    Fit(FitArgs),
    /// Estimate speed and direction for every row of a sweep CSV.
    Estimate(EstimateArgs),
    /// Reshape a sweep CSV into tidy plot data.
    Plotdata(PlotdataArgs),
    /// Run the invariant suite and print a pass/fail table.
    Selftest(SelftestArgs),
    /// Print the default configuration file.
    Config(ConfigArgs),
}

#[derive(Args)]
struct NoiseArgs {
    /// RNG seed for meter noise.
    #[arg(long, env = "QUADVANE_SEED", default_value_t = 0)]
    seed: u64,
    /// Enable the default meter model (σ = 5e-4 Ω, 1e-4 Ω resolution).
    #[arg(long)]
    lcr: bool,
    /// Gaussian read noise, ohm. Overrides --lcr.
    #[arg(long)]
    sigma: Option<f64>,
    /// Quantization step, ohm. Overrides --lcr.
    #[arg(long)]
    step: Option<f64>,
}

impl NoiseArgs {
    fn model(&self) -> NoiseModel {
        let (sigma, step) = if self.lcr {
            (LCR_SIGMA, LCR_QUANTIZATION_STEP)
        } else {
            (0.0, 0.0)
        };
        NoiseModel {
            gaussian_sigma: self.sigma.unwrap_or(sigma),
            quantization_step: self.step.unwrap_or(step),
            seed: self.seed,
        }
    }
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("direction").required(true))]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Flow speed, m/s.
    #[arg(long, allow_negative_numbers = true)]
    speed: f64,
    /// Travel azimuth (direction the air moves toward), degrees.
    #[arg(long, group = "direction", allow_hyphen_values = true)]
    angle: Option<f64>,
    /// Origin azimuth (direction the air comes from), degrees.
    #[arg(long, group = "direction", allow_hyphen_values = true)]
    angle_from: Option<f64>,
    /// Also print the header line.
    #[arg(long)]
    header: bool,
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// 0–45 m/s in 0.5 m/s steps at 135° and 180°.
    Speed,
    /// 0–355° in 5° steps at 15, 20, 25 and 30 m/s.
    Angle,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["angles", "speeds"], required_unless_present_all = ["angles", "speeds"])]
    preset: Option<Preset>,
    /// Travel azimuths: `start:step:stop` or a comma list, degrees.
    #[arg(long, requires = "speeds", allow_hyphen_values = true)]
    angles: Option<String>,
    /// Speeds: `start:step:stop` or a comma list, m/s.
    #[arg(long, requires = "angles")]
    speeds: Option<String>,
    #[arg(long, default_value_t = 1)]
    replicates: u32,
    /// Worker threads; the output does not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = MAX_SPEED)]
    max_speed: f64,
    /// Knot spacing, m/s.
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    /// Travel azimuth the table is built at, degrees.
    #[arg(long, default_value_t = 180.0, allow_hyphen_values = true)]
    angle: f64,
}

#[derive(Args)]
struct FitArgs {
    /// Sweep CSV.
    #[arg(long)]
    input: PathBuf,
    /// Also write the per-speed gains and coefficients here.
    #[arg(long)]
    per_speed: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Sweep CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Calibration CSV; built from the config when omitted.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Expected meter noise, ohm; sets the direction threshold to 3σ.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    /// One row per (speed, angle, beam).
    Angle,
    /// One row per (angle, speed) with Σ|dR|.
    Speed,
}

#[derive(Args)]
struct PlotdataArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: PlotKind,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Config to test; the built-in default when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Calibration CSV to check as well.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Treat skipped checks as failures.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Simulate(args) => simulate(args)?,
        Command::Sweep(args) => sweep(args)?,
        Command::Calibrate(args) => calibrate(args)?,
        Command::Fit(args) => fit(args)?,
        Command::Estimate(args) => estimate(args)?,
        Command::Plotdata(args) => plotdata(args)?,
        Command::Selftest(args) => return selftest(args),
        Command::Config(args) => {
            check_output(args.out.as_deref())?;
            emit(args.out.as_deref(), &save_config(&default_config()))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn check_input(path: &Path) -> Result<()> {
    if !path.is_file() {
        bail!("{}: no such file", path.display());
    }
    Ok(())
}

fn check_output(path: Option<&Path>) -> Result<()> {
    let Some(path) = path else { return Ok(()) };
    if path.is_dir() {
        bail!("{}: is a directory", path.display());
    }
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(parent) = parent {
        if !parent.is_dir() {
            bail!("{}: parent directory does not exist", path.display());
        }
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => match std::io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn config_from(path: &Path) -> Result<SensorConfig> {
    load_config(&read(path)?).with_context(|| format!("config {}", path.display()))
}

fn sweep_from(path: &Path) -> Result<Vec<SweepRecord>> {
    import_csv(&read(path)?).with_context(|| format!("sweep {}", path.display()))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    check_input(&args.config)?;
    let config = config_from(&args.config)?;
    let noise = args.noise.model();
    if !(args.speed >= 0.0) {
        bail!("speed must be >= 0, got {}", args.speed);
    }
    let flow = match (args.angle, args.angle_from) {
        (Some(travel), _) => FlowCondition::new(args.speed, travel)?,
        (None, Some(origin)) => FlowCondition::from_origin(args.speed, origin)?,
        (None, None) => unreachable!("clap requires one of --angle/--angle-from"),
    };
    let records = run_sweep(
        &config,
        &[flow.travel_azimuth_deg()],
        &[flow.speed()],
        &noise,
        1,
    )?;
    let csv = export_csv(&records);
    let text = if args.header {
        csv
    } else {
        csv.lines()
            .nth(1)
            .map(|l| format!("{l}\n"))
            .unwrap_or_default()
    };
    emit(None, &text)
}

/// `start:step:stop` (inclusive of `stop`) or `a,b,c`.
fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let [start, step, stop] = [parts[0], parts[1], parts[2]].map(|p| p.parse::<f64>());
        let (start, step, stop) = (start?, step?, stop?);
        if !(step > 0.0) || !(stop >= start) {
            bail!("grid `{spec}`: need step > 0 and stop >= start");
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| start + k as f64 * step).collect());
    }
    if parts.len() != 1 {
        bail!("grid `{spec}`: expected start:step:stop or a comma list");
    }
    spec.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("grid `{spec}`: bad number `{}`", p.trim()))
        })
        .collect()
}

fn sweep(args: SweepArgs) -> Result<()> {
    check_input(&args.config)?;
    check_output(args.out.as_deref())?;
    let config = config_from(&args.config)?;
    let (angles, speeds) = match args.preset {
        Some(Preset::Speed) => (SPEED_SWEEP_ANGLES.to_vec(), uniform_grid(MAX_SPEED, 0.5)),
        Some(Preset::Angle) => (
            (0..72).map(|k| k as f64 * 5.0).collect(),
            ANGLE_SWEEP_SPEEDS.to_vec(),
        ),
        None => (
            parse_grid(args.angles.as_deref().unwrap_or_default())?,
            parse_grid(args.speeds.as_deref().unwrap_or_default())?,
        ),
    };
    let noise = args.noise.model();
    let records = match args.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(n) => run_sweep_with_threads(&config, &angles, &speeds, &noise, args.replicates, n)?,
        None => run_sweep(&config, &angles, &speeds, &noise, args.replicates)?,
    };
    emit(args.out.as_deref(), &export_csv(&records))
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    check_input(&args.config)?;
    check_output(args.out.as_deref())?;
    let config = config_from(&args.config)?;
    if !(args.max_speed > 0.0 && args.step > 0.0) {
        bail!("--max-speed and --step must be positive");
    }
    let table = build_calibration_at(
        &config,
        &uniform_grid(args.max_speed, args.step),
        args.angle,
    )?;
    emit(args.out.as_deref(), &table.to_csv())
}

fn fit(args: FitArgs) -> Result<()> {
    check_input(&args.input)?;
    check_output(args.per_speed.as_deref())?;
    let records = sweep_from(&args.input)?;
    let fit = fit_lobe(&records)?;
    let mut out = String::from("a0,a1,a2,residual_ohm\n");
    let _ = writeln!(
        out,
        "{},{},{},{}",
        fmt_f64(fit.lobe.a0),
        fmt_f64(fit.lobe.a1),
        fmt_f64(fit.lobe.a2),
        fmt_f64(fit.residual)
    );
    emit(None, &out)?;
    if let Some(path) = &args.per_speed {
        let mut table = String::from("v_m_per_s,gain_ohm,a1,a2,residual_ohm\n");
        for s in &fit.per_speed {
            let _ = writeln!(
                table,
                "{},{},{},{},{}",
                fmt_f64(s.speed),
                fmt_f64(s.gain),
                fmt_f64(s.a1),
                fmt_f64(s.a2),
                fmt_f64(s.residual)
            );
        }
        emit(Some(path), &table)?;
    }
    Ok(())
}

fn estimate(args: EstimateArgs) -> Result<()> {
    check_input(&args.config)?;
    check_input(&args.input)?;
    if let Some(path) = &args.calibration {
        check_input(path)?;
    }
    check_output(args.out.as_deref())?;

    let config = config_from(&args.config)?;
    let records = sweep_from(&args.input)?;
    let mut estimator = match &args.calibration {
        Some(path) => {
            let table = CalibrationTable::from_csv(&read(path)?)
                .with_context(|| format!("calibration {}", path.display()))?;
            JointEstimator::with_table(&config, table)?
        }
        None => JointEstimator::new(&config)?,
    };
    if let Some(sigma) = args.sigma {
        if !(sigma >= 0.0) {
            bail!("--sigma must be >= 0, got {sigma}");
        }
        estimator = estimator.with_direction_threshold(direction_threshold(sigma));
    }
    let base_r = base_resistance(&config.resistor, config.materials.resistivity)?;

    let sweep_csv = export_csv(&records);
    let mut lines = sweep_csv.lines();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{},v_hat_m_per_s,theta_hat_deg,residual_ohm",
        lines.next().unwrap_or_default()
    );
    let (mut indeterminate, mut out_of_range) = (0, 0);
    for (record, line) in records.iter().zip(lines) {
        let result = estimator.estimate(&record.response(base_r))?;
        let theta = if result.flags.indeterminate_direction {
            indeterminate += 1;
            f64::NAN
        } else {
            result.theta_hat
        };
        if result.flags.out_of_range_speed {
            out_of_range += 1;
        }
        let _ = writeln!(
            out,
            "{line},{},{},{}",
            fmt_f64(result.v_hat),
            fmt_f64(theta),
            fmt_f64(result.residual)
        );
    }
    emit(args.out.as_deref(), &out)?;
    if indeterminate > 0 {
        eprintln!("note: {indeterminate} row(s) with indeterminate direction (theta_hat = NaN)");
    }
    if out_of_range > 0 {
        eprintln!("note: {out_of_range} row(s) beyond the calibration range (speed clamped)");
    }
    Ok(())
}

fn plotdata(args: PlotdataArgs) -> Result<()> {
    check_input(&args.input)?;
    check_output(args.out.as_deref())?;
    let records = sweep_from(&args.input)?;
    let mut out = String::new();
    match args.kind {
        PlotKind::Angle => {
            out.push_str("v_true_m_per_s,angle_travel_deg,beam_azimuth_deg,dR_ohm,replicate\n");
            for r in &records {
                for (azimuth, dr) in LATTICE_AZIMUTHS_DEG.iter().zip(r.dr) {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        fmt_f64(r.v_true),
                        fmt_f64(r.angle_travel_deg),
                        azimuth,
                        fmt_f64(dr),
                        r.replicate
                    );
                }
            }
        }
        PlotKind::Speed => {
            out.push_str("angle_travel_deg,v_true_m_per_s,sum_abs_dR_ohm,replicate\n");
            for r in &records {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_f64(r.angle_travel_deg),
                    fmt_f64(r.v_true),
                    fmt_f64(ResponseVector::new(r.dr, 0.0).abs_sum()),
                    r.replicate
                );
            }
        }
    }
    emit(args.out.as_deref(), &out)
}

fn selftest(args: SelftestArgs) -> Result<ExitCode> {
    if let Some(path) = &args.config {
        check_input(path)?;
    }
    if let Some(path) = &args.calibration {
        check_input(path)?;
    }
    // parsed without validation so the suite can report rule violations itself
    let config = match &args.config {
        Some(path) => {
            parse_config(&read(path)?).with_context(|| format!("config {}", path.display()))?
        }
        None => default_config(),
    };
    let calibration = args.calibration.as_deref().map(read).transpose()?;
    let report = run_selftest(&config, calibration.as_deref());
    print!("{report}");
    Ok(if report.passed(args.strict) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
