//! `fpamsuit`: command-line driver for the head-neck exosuit model.
//!
//! Units at every interface: angles in degrees, pressures in kPa, forces in N,
//! torques in N·m, lengths in m.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod manifest;
mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use fpamsuit_core::config::{default_suit_json, parse_suit};
use fpamsuit_core::design::{self, measured_reference};
use fpamsuit_core::fpam::{fit_params, generate_samples};
use fpamsuit_core::gravity::{solve_pose, FeasibilityReport, LimitingCondition};
use fpamsuit_core::io::{read_tensile_csv, tensile_csv};
use fpamsuit_core::sim::{self, ControllerConfig, PlantParams, TrajectorySpec};
use fpamsuit_core::workspace::{scan_rom, scan_workspace, ROM_SAMPLES};
use fpamsuit_core::{Axis, Error, FpamParams, HeadPose, SignConvention, SuitConfig};

use manifest::{ManifestBuilder, RunManifest};
use output::{flag, Outputs};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "fpamsuit", version, about = "Model, solve and simulate a fabric pneumatic muscle head-neck exosuit")]
#[command(after_help = "Units: angles in degrees, pressures in kPa, forces in N, torques in N·m, lengths in m.\n\
Poses are body-fixed x-y-z Euler angles `x,y,z`: flexion is negative x, right lateral deviation positive y, right turn negative z.\n\
Exit codes: 0 success, 2 input error, 3 numerical failure.")]
struct Cli {
    /// Suit geometry JSON; the shipped default suit when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit force-law parameters to tensile data (CSV: pressure_kpa,length_m,force_n).
    Fit(FitArgs),
    /// Generate noiseless or noisy tensile data from the tabulated parameters.
    Synth(SynthArgs),
    /// Gravity-compensating pressures and feasibility for one pose or a batch.
    Solve(SolveArgs),
    /// Range-of-motion scans along the principal axes.
    Rom(RomArgs),
    /// Feasibility over the visual-target workspace grid.
    Workspace(WorkspaceArgs),
    /// Torque profiles and summary table for actuator placements 1-6.
    Design(DesignArgs),
    /// Closed-loop sinusoid tracking on the pendulum plant.
    Track(TrackArgs),
    /// Write the shipped suit, plant and controller configurations.
    Defaults,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    AsPrinted,
    FlippedIdealTerm,
}

impl From<Convention> for SignConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::AsPrinted => SignConvention::AsPrinted,
            Convention::FlippedIdealTerm => SignConvention::FlippedIdealTerm,
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::AsPrinted => "as-printed",
            Convention::FlippedIdealTerm => "flipped-ideal-term",
        })
    }
}

#[derive(Args)]
struct FitArgs {
    /// Tensile-test CSV.
    #[arg(long)]
    csv: PathBuf,
    /// Unstretched actuator length, m.
    #[arg(long)]
    l0: f64,
    #[arg(long, value_enum, default_value_t = Convention::AsPrinted)]
    convention: Convention,
}

#[derive(Args)]
struct SynthArgs {
    /// Unstretched actuator length, m.
    #[arg(long, default_value_t = 0.3)]
    l0: f64,
    /// Pressure levels, kPa.
    #[arg(long, value_delimiter = ',', default_value = "0,13.8,34.5,55.2,69,82.7,103.4")]
    pressures: Vec<f64>,
    /// Lengths per pressure level, spread over 70-100% of L0.
    #[arg(long, default_value_t = 25)]
    points: usize,
    /// Standard deviation of added force noise, N.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Convention::AsPrinted)]
    convention: Convention,
}

#[derive(Args)]
struct SolveArgs {
    /// Single pose `x,y,z` in degrees.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "poses")]
    pose: Option<String>,
    /// CSV of poses with columns theta_x,theta_y,theta_z.
    #[arg(long)]
    poses: Option<PathBuf>,
}

#[derive(Args)]
struct RomArgs {
    /// Scan one axis; all three when omitted.
    #[arg(long)]
    axis: Option<Axis>,
    /// Compression limit, N.
    #[arg(long)]
    limit: Option<f64>,
    #[arg(long, default_value_t = ROM_SAMPLES)]
    samples: usize,
}

#[derive(Args)]
struct WorkspaceArgs {
    /// Compression limits, N.
    #[arg(long, value_delimiter = ',', default_value = "200,100,60,40")]
    limits: Vec<f64>,
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long = "configs", value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    configs: Vec<u8>,
    /// Common pressure, kPa; each actuator's maximum when omitted.
    #[arg(long)]
    pressure: Option<f64>,
    /// Sweep step, degrees.
    #[arg(long, default_value_t = 1.0)]
    resolution: f64,
}

#[derive(Args)]
struct TrackArgs {
    #[arg(long, default_value = "FE")]
    axis: Axis,
    /// Plant parameters JSON; shipped defaults when omitted.
    #[arg(long)]
    plant: Option<PathBuf>,
    /// Controller JSON; the shipped tuning for the axis when omitted.
    #[arg(long)]
    controller: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 20.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 25.0)]
    period: f64,
    #[arg(long, default_value_t = 4)]
    cycles: u32,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Fit(_) | Error::SimulationFault { .. } | Error::ZeroVariance(_) => CliError::Numerical(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

struct Context {
    out: PathBuf,
    suit_path: Option<PathBuf>,
}

impl Context {
    fn suit(&self, m: &mut ManifestBuilder) -> CliResult<SuitConfig> {
        match &self.suit_path {
            Some(p) => {
                let text = read(p)?;
                m.input(p.display().to_string(), &text);
                parse_suit(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
            }
            None => {
                m.input("<builtin>/default_suit.json", default_suit_json());
                Ok(parse_suit(default_suit_json())?)
            }
        }
    }

    fn manifest(&self, m: &ManifestBuilder) -> RunManifest {
        m.finish(&self.out.display().to_string())
    }
}

fn parse_pose(text: &str) -> CliResult<HeadPose> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let values: Vec<f64> = parts.iter().filter_map(|p| p.parse::<f64>().ok()).collect();
    if parts.len() != 3 || values.len() != 3 {
        return Err(CliError::Input(format!("pose must be three comma-separated angles, got `{text}`")));
    }
    let pose = HeadPose::new(values[0], values[1], values[2]);
    pose.validate()?;
    Ok(pose)
}

fn fit(ctx: &Context, args: &FitArgs) -> CliResult<Outputs> {
    let mut m = ManifestBuilder::new("fit");
    let text = read(&args.csv)?;
    m.input(args.csv.display().to_string(), &text)
        .set("l0", args.l0)
        .set("convention", args.convention);
    let samples = read_tensile_csv(text.as_bytes()).map_err(|e| CliError::Input(format!("{}: {e}", args.csv.display())))?;
    let report = fit_params(&samples, args.l0, args.convention.into())?;
    let mut out = Outputs::new(&ctx.out);
    out.json("fit.json", &ctx.manifest(&m), &report)?;
    Ok(out)
}

fn synth(ctx: &Context, args: &SynthArgs) -> CliResult<Outputs> {
    let mut m = ManifestBuilder::new("synth");
    let pressures: Vec<String> = args.pressures.iter().map(f64::to_string).collect();
    m.set("l0", args.l0)
        .set("pressures", pressures.join(","))
        .set("points", args.points)
        .set("noise", args.noise)
        .set("seed", args.seed)
        .set("convention", args.convention);
    if args.points < 2 || !(args.l0 > 0.0) || !(args.noise >= 0.0) || args.pressures.iter().any(|p| !(*p >= 0.0)) {
        return Err(CliError::Input("need ≥ 2 points, positive L0 and nonnegative noise and pressures".into()));
    }
    let params = FpamParams::reference(args.l0).with_convention(args.convention.into());
    let lengths: Vec<f64> = (0..args.points)
        .map(|i| args.l0 * (1.0 - 0.3 * i as f64 / (args.points - 1) as f64))
        .collect();
    let mut samples = generate_samples(&params, &args.pressures, &lengths);
    if args.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let normal = Normal::new(0.0, args.noise).map_err(|e| CliError::Input(e.to_string()))?;
        for s in &mut samples {
            s.force_n += normal.sample(&mut rng);
        }
    }
    let csv = tensile_csv(&samples);
    let mut lines = csv.lines();
    let header = lines.next().unwrap_or_default().to_string();
    let rows: Vec<String> = lines.map(str::to_string).collect();
    let mut out = Outputs::new(&ctx.out);
    out.csv("tensile.csv", &ctx.manifest(&m), &header, &rows)?;
    Ok(out)
}

fn pressure_cells(report: &FeasibilityReport) -> String {
    match &report.pressures {
        Some(p) => p.0.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        None => ",,,,".to_string(),
    }
}

fn solve(ctx: &Context, args: &SolveArgs) -> CliResult<Outputs> {
    let mut m = ManifestBuilder::new("solve");
    let suit = ctx.suit(&mut m)?;
    let mut out = Outputs::new(&ctx.out);
    match (&args.pose, &args.poses) {
        (Some(p), None) => {
            m.set("pose", p);
            let report = solve_pose(&suit, &parse_pose(p)?)?;
            if report.limiting_condition == LimitingCondition::SolverNonConvergence {
                return Err(CliError::Numerical("pressure solve did not converge".into()));
            }
            out.json("solve.json", &ctx.manifest(&m), &report)?;
        }
        (None, Some(path)) => {
            let text = read(path)?;
            m.input(path.display().to_string(), &text);
            let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
            let headers = rdr.headers().map_err(|e| CliError::Input(e.to_string()))?.clone();
            let mut idx = [0usize; 3];
            for (slot, name) in idx.iter_mut().zip(["theta_x", "theta_y", "theta_z"]) {
                *slot = headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| CliError::Input(format!("missing column `{name}`")))?;
            }
            let mut rows = Vec::new();
            for record in rdr.records() {
                let record = record.map_err(|e| CliError::Input(e.to_string()))?;
                let line = record.position().map_or(0, |p| p.line());
                let mut v = [0.0; 3];
                for (x, &i) in v.iter_mut().zip(&idx) {
                    *x = record
                        .get(i)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| CliError::Input(format!("line {line}: bad pose value")))?;
                }
                let pose = HeadPose::from_array(v);
                pose.validate().map_err(|e| CliError::Input(format!("line {line}: {e}")))?;
                let r = solve_pose(&suit, &pose)?;
                rows.push(format!(
                    "{},{},{},{},{},{},{}",
                    v[0],
                    v[1],
                    v[2],
                    flag(r.reachable),
                    flag(r.grav_ok),
                    r.compression,
                    pressure_cells(&r)
                ));
            }
            if rows.is_empty() {
                return Err(CliError::Input("no poses".into()));
            }
            out.csv(
                "solve.csv",
                &ctx.manifest(&m),
                "theta_x,theta_y,theta_z,reachable,grav_ok,compression_n,p1,p2,p3,p4,p5",
                &rows,
            )?;
        }
        _ => return Err(CliError::Input("give exactly one of --pose or --poses".into())),
    }
    Ok(out)
}

#[derive(Serialize)]
struct RomSummary {
    axis: Axis,
    compression_limit: Option<f64>,
    biological_range: (f64, f64),
    intervals: fpamsuit_core::workspace::PerCondition<Option<(f64, f64)>>,
    percent_of_biological: fpamsuit_core::workspace::PerCondition<f64>,
}

fn rom(ctx: &Context, args: &RomArgs) -> CliResult<Outputs> {
    let mut m = ManifestBuilder::new("rom");
    let suit = ctx.suit(&mut m)?;
    m.set("samples", args.samples);
    if let Some(a) = args.axis {
        m.set("axis", a);
    }
    if let Some(l) = args.limit {
        m.set("limit", l);
    }
    let axes: Vec<Axis> = args.axis.map_or(Axis::ALL.to_vec(), |a| vec![a]);
    let manifest = ctx.manifest(&m);
    let mut out = Outputs::new(&ctx.out);
    let mut summaries = Vec::new();
    for axis in axes {
        let scan = scan_rom(&suit, axis, args.samples, args.limit)?;
        let rows: Vec<String> = scan
            .angles
            .iter()
            .zip(&scan.flags)
            .zip(&scan.compression)
            .map(|((a, f), c)| {
                format!(
                    "{a},{},{},{c},{},{}",
                    flag(f.reachable),
                    flag(f.grav_ok),
                    flag(f.compression_ok),
                    flag(f.all)
                )
            })
            .collect();
        out.csv(
            &format!("rom_{axis}.csv"),
            &manifest,
            "angle_deg,reachable,grav_ok,compression_n,compression_ok,all",
            &rows,
        )?;
        summaries.push(RomSummary {
            axis,
            compression_limit: scan.compression_limit,
            biological_range: axis.biological_range(),
            intervals: scan.intervals,
            percent_of_biological: scan.percent_of_biological,
        });
    }
    out.json("rom.json", &manifest, &serde_json::json!({ "axes": summaries }))?;
    Ok(out)
}

fn workspace(ctx: &Context, args: &WorkspaceArgs) -> CliResult<Outputs> {
    let mut m = ManifestBuilder::new("workspace");
    let suit = ctx.suit(&mut m)?;
    let limits: Vec<String> = args.limits.iter().map(f64::to_string).collect();
    m.set("limits", limits.join(","));
    let grid = scan_workspace(&suit, &args.limits)?;
    let manifest = ctx.manifest(&m);
    let mut header = "h_deg,v_deg,theta_x,theta_y,theta_z,reachable,grav_ok,compression_n".to_string();
    for l in &limits {
        header.push_str(&format!(",compression_ok_{l}"));
    }
    let rows: Vec<String> = grid
        .cells
        .iter()
        .map(|c| {
            let mut r = format!(
                "{},{},{},{},{},{},{},{}",
                c.h_deg,
                c.v_deg,
                c.pose.theta_x,
                c.pose.theta_y,
                c.pose.theta_z,
                flag(c.reachable),
                flag(c.grav_ok),
                c.compression
            );
            for ok in &c.compression_ok {
                r.push_str(&format!(",{}", flag(*ok)));
            }
            r
        })
        .collect();
    let mut out = Outputs::new(&ctx.out);
    out.csv("workspace.csv", &manifest, &header, &rows)?;
    out.json(
        "workspace.json",
        &manifest,
        &serde_json::json!({
            "horizontal_cells": grid.horizontal.len(),
            "vertical_cells": grid.vertical.len(),
            "coverage_percent": grid.coverage,
        }),
    )?;
    Ok(out)
}

fn design_cmd(ctx: &Context, args: &DesignArgs) -> CliResult<Outputs> {
    let mut m = ManifestBuilder::new("design");
    let suit = ctx.suit(&mut m)?;
    let ids: Vec<String> = args.configs.iter().map(u8::to_string).collect();
    m.set("configs", ids.join(",")).set("resolution", args.resolution);
    if let Some(p) = args.pressure {
        m.set("pressure", p);
    }
    let cmp = design::compare(&suit, &args.configs, args.pressure, args.resolution)?;
    let manifest = ctx.manifest(&m);
    let mut out = Outputs::new(&ctx.out);

    let columns: Vec<String> = cmp.summaries.iter().map(|s| format!("{}_{}", s.config, s.axis)).collect();
    let row = |metric: &str, unit: &str, cell: &dyn Fn(&design::DesignSummary) -> String| {
        let cells: Vec<String> = cmp.summaries.iter().map(cell).collect();
        format!("{metric},{unit},{}", cells.join(","))
    };
    let rows = vec![
        row("torque_integral", "N·m·deg", &|s| s.torque_integral_nm_deg.to_string()),
        row("angle_range", "deg", &|s| s.angle_range_deg.to_string()),
        row("torque_at_zero", "N·m", &|s| s.promoting_torque_at_zero_nm.to_string()),
        row("measured_force", "N", &|s| s.measured_force_n.map_or(String::new(), |f| f.to_string())),
    ];
    out.csv("design.csv", &manifest, &format!("metric,unit,{}", columns.join(",")), &rows)?;
    for p in &cmp.profiles {
        let rows: Vec<String> = p
            .angles
            .iter()
            .zip(&p.torque)
            .zip(&p.valid)
            .map(|((a, t), v)| format!("{a},{t},{}", flag(*v)))
            .collect();
        out.csv(&format!("profile_{}_{}.csv", p.config, p.axis), &manifest, "angle_deg,torque_nm,valid", &rows)?;
    }
    out.json(
        "design.json",
        &manifest,
        &serde_json::json!({ "comparison": cmp, "measured_reference": measured_reference() }),
    )?;
    Ok(out)
}

#[derive(Serialize)]
struct TrackSummary<'a> {
    axis: Axis,
    delay_s: f64,
    rmse_deg: f64,
    samples: usize,
    trajectory: &'a TrajectorySpec,
    plant: &'a PlantParams,
    controller: &'a ControllerConfig,
}

fn track(ctx: &Context, args: &TrackArgs) -> CliResult<Outputs> {
    let mut m = ManifestBuilder::new("track");
    let suit = ctx.suit(&mut m)?;
    let plant = match &args.plant {
        Some(p) => {
            let text = read(p)?;
            m.input(p.display().to_string(), &text);
            let params: PlantParams =
                serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            params.validate()?;
            params
        }
        None => PlantParams::default(),
    };
    let controller = match &args.controller {
        Some(p) => {
            let text = read(p)?;
            m.input(p.display().to_string(), &text);
            ControllerConfig::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
        }
        None => ControllerConfig::for_axis(args.axis),
    };
    let spec = TrajectorySpec { axis: args.axis, amplitude_deg: args.amplitude, period_s: args.period, cycles: args.cycles };
    spec.validate()?;
    m.set("axis", args.axis)
        .set("amplitude", args.amplitude)
        .set("period", args.period)
        .set("cycles", args.cycles);

    let result = sim::track_pendulum(&suit, &plant, &controller, &spec).map_err(|f| {
        let samples = f.partial.len();
        let e = CliError::from(f.error);
        match e {
            CliError::Numerical(msg) => CliError::Numerical(format!("{msg} after {samples} samples")),
            other => other,
        }
    })?;
    let manifest = ctx.manifest(&m);
    let s = &result.series;
    let rows: Vec<String> = (0..s.len())
        .map(|i| {
            let p: Vec<String> = s.pressures[i].0.iter().map(f64::to_string).collect();
            format!("{:.3},{},{},{}", s.time[i], s.reference[i].angle(s.axis), s.measured[i].angle(s.axis), p.join(","))
        })
        .collect();
    let mut out = Outputs::new(&ctx.out);
    out.csv(&format!("track_{}.csv", args.axis), &manifest, "t_s,ref_deg,meas_deg,p1,p2,p3,p4,p5", &rows)?;
    out.json(
        &format!("track_{}.json", args.axis),
        &manifest,
        &TrackSummary {
            axis: args.axis,
            delay_s: result.delay_s,
            rmse_deg: result.rmse_deg,
            samples: s.len(),
            trajectory: &spec,
            plant: &plant,
            controller: &controller,
        },
    )?;
    Ok(out)
}

fn pretty<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn defaults(ctx: &Context) -> CliResult<Outputs> {
    let mut out = Outputs::new(&ctx.out);
    out.raw("default_suit.json", default_suit_json().to_string());
    out.raw("plant.json", pretty(&PlantParams::default())?);
    for axis in Axis::ALL {
        out.raw(&format!("controller_{axis}.json"), pretty(&ControllerConfig::for_axis(axis))?);
    }
    Ok(out)
}

fn run(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    let ctx = Context { out: cli.out.clone(), suit_path: cli.config.clone() };
    let outputs = match &cli.command {
        Command::Fit(a) => fit(&ctx, a)?,
        Command::Synth(a) => synth(&ctx, a)?,
        Command::Solve(a) => solve(&ctx, a)?,
        Command::Rom(a) => rom(&ctx, a)?,
        Command::Workspace(a) => workspace(&ctx, a)?,
        Command::Design(a) => design_cmd(&ctx, a)?,
        Command::Track(a) => track(&ctx, a)?,
        Command::Defaults => defaults(&ctx)?,
    };
    outputs.commit().map_err(|e| CliError::Input(format!("writing outputs: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fpamsuit: {e}");
            ExitCode::from(e.code())
        }
    }
}
