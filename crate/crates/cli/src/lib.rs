//! Command-line front end for the pipe-diffuser toolkit.
//!
//! Reports go to stdout as JSON, diagnostics to stderr. Exit codes:
//! 0 ok, 1 usage or input error, 2 infeasible design, 3 feasible but
//! inconsistent declared values, 4 malformed JSON, 5 numeric failure.

mod error;
mod manifest;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pipediff::diffusermap::{load_map, synthetic_map, DiffuserMap};
use pipediff::explorer::{design_table, ofat_sweep, sig17, StudyContext};
use pipediff::gasdyn::{effective_area, throat_blockage, GasModel, TotalState};
use pipediff::geometry::{
    build_surface_mesh, check_feasibility, derive_geometry, export_stl, DerivedGeometry,
    DesignFile, FeasibilityReport, PipeDiffuserDesign,
};
use pipediff::meanline::{
    evaluate_point, performance_map, speedline, CpSource, PerformanceMap, StageConfig, DESIGN_MDOT,
};

pub use error::{
    CliError, EXIT_INCONSISTENT, EXIT_INFEASIBLE, EXIT_MALFORMED, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE,
};
pub use manifest::{Corrections, RunManifest};

const CALIBRATION_NOTE: &str = "pr_tt and eta_tt of P1 at 0.806 kg/s, 100 % speed are \
    calibration targets of the shipped closures, not independent predictions";

#[derive(Parser, Debug)]
#[command(
    name = "pipediff",
    version,
    about = "Pipe-diffuser design and meanline analysis"
)]
struct Cli {
    /// Omit the wall-clock timestamp from the manifest.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Feasibility and consistency of a design.
    Validate { design: String },
    /// Derived geometry of a design.
    Derive { design: String },
    /// Surface mesh of a design as binary STL.
    Mesh {
        design: String,
        #[arg(long)]
        stl: String,
        /// Grid cells per throat diameter.
        #[arg(long, default_value_t = 12)]
        resolution: u32,
    },
    /// One operating point.
    Point {
        #[command(flatten)]
        stage: StageArgs,
        #[arg(long, default_value_t = DESIGN_MDOT)]
        mdot: f64,
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
    },
    /// One constant-speed line between surge and choke.
    Speedline {
        #[command(flatten)]
        stage: StageArgs,
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Also write the points as CSV.
        #[arg(long)]
        csv: Option<String>,
    },
    /// Speed lines at several speed fractions.
    Map {
        #[command(flatten)]
        stage: StageArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.7,0.8,0.9,1.0")]
        speeds: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long)]
        csv: Option<String>,
    },
    /// One-factor-at-a-time sweep of a design parameter.
    Sweep {
        #[command(flatten)]
        stage: StageArgs,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = DESIGN_MDOT)]
        mdot: f64,
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long)]
        csv: Option<String>,
    },
    /// Design-point comparison of several designs.
    Table {
        #[arg(required = true)]
        designs: Vec<String>,
        /// Stage configuration; the shipped calibration if omitted.
        #[arg(long)]
        stage: Option<String>,
        /// Diffuser map CSV; the bundled synthetic map if omitted.
        #[arg(long)]
        map: Option<String>,
        #[arg(long, default_value_t = DESIGN_MDOT)]
        mdot: f64,
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long)]
        csv: Option<String>,
    },
    /// Throat blockage from mass flow, total state, Mach number and geometric area.
    Blockage {
        #[arg(long)]
        mdot: f64,
        #[arg(long)]
        p0: f64,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        mach: f64,
        /// Geometric area, m².
        #[arg(long)]
        area: f64,
    },
}

#[derive(Args, Debug)]
struct StageArgs {
    design: String,
    stage: String,
    /// Diffuser map CSV; the bundled synthetic map if omitted.
    #[arg(long)]
    map: Option<String>,
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run_command<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let stamp = !cli.no_timestamp;
    match cli.command {
        Command::Validate { design } => validate(&design, stamp, out),
        Command::Derive { design } => derive(&design, stamp, out),
        Command::Mesh {
            design,
            stl,
            resolution,
        } => mesh(&design, &stl, resolution, stamp, out),
        Command::Point { stage, mdot, speed } => point(&stage, mdot, speed, stamp, out),
        Command::Speedline {
            stage,
            speed,
            points,
            csv,
        } => speed_line(&stage, speed, points, csv.as_deref(), stamp, out),
        Command::Map {
            stage,
            speeds,
            points,
            csv,
        } => map(&stage, &speeds, points, csv.as_deref(), stamp, out),
        Command::Sweep {
            stage,
            param,
            values,
            mdot,
            speed,
            csv,
        } => sweep(
            &stage,
            &param,
            &values,
            mdot,
            speed,
            csv.as_deref(),
            stamp,
            out,
        ),
        Command::Table {
            designs,
            stage,
            map,
            mdot,
            speed,
            csv,
        } => table(
            &designs,
            stage.as_deref(),
            map.as_deref(),
            mdot,
            speed,
            csv.as_deref(),
            stamp,
            out,
        ),
        Command::Blockage {
            mdot,
            p0,
            t0,
            mach,
            area,
        } => blockage(mdot, p0, t0, mach, area, stamp, out),
    }
}

fn read(path: &str) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))
}

fn write_file(path: &str, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Usage(format!("cannot write {path}: {e}")))
}

fn emit<T: Serialize>(out: &mut dyn Write, report: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).expect("plain data");
    writeln!(out, "{text}").map_err(|e| CliError::Usage(format!("cannot write report: {e}")))
}

fn design_id(path: &str) -> String {
    Path::new(path)
        .file_stem()
        .map_or_else(|| path.to_string(), |s| s.to_string_lossy().into_owned())
}

fn load_design(
    path: &str,
    m: &mut manifest::ManifestBuilder,
) -> Result<PipeDiffuserDesign, CliError> {
    let bytes = read(path)?;
    m.input(path, &bytes);
    let text = String::from_utf8_lossy(&bytes);
    PipeDiffuserDesign::from_json(&text).map_err(|e| CliError::design(path, e))
}

fn load_stage(
    path: Option<&str>,
    m: &mut manifest::ManifestBuilder,
) -> Result<StageConfig, CliError> {
    let Some(path) = path else {
        m.arg("stage", "calibrated");
        return Ok(StageConfig::CALIBRATED);
    };
    let bytes = read(path)?;
    m.input(path, &bytes);
    let text = String::from_utf8_lossy(&bytes);
    let cfg = StageConfig::from_json(&text).map_err(|e| CliError::malformed_json(path, &e))?;
    cfg.compressor_spec()?;
    cfg.closures()?;
    Ok(cfg)
}

fn load_diffuser_map(
    path: Option<&str>,
    m: &mut manifest::ManifestBuilder,
) -> Result<(DiffuserMap, String), CliError> {
    match path {
        None => {
            m.arg("map", "synthetic");
            Ok((
                synthetic_map(),
                "bundled synthetic demonstration map".into(),
            ))
        }
        Some(path) => {
            let bytes = read(path)?;
            m.input(path, &bytes);
            Ok((load_map(bytes.as_slice())?, path.to_string()))
        }
    }
}

fn feasible_or_exit(design: &PipeDiffuserDesign) -> Result<FeasibilityReport, CliError> {
    let report = check_feasibility(design)?;
    if !report.feasible {
        return Err(CliError::Infeasible(format!("{:?}", report.reason)));
    }
    Ok(report)
}

#[derive(Serialize)]
struct ValidateReport {
    manifest: RunManifest,
    design: DesignFile,
    feasibility: FeasibilityReport,
    consistency_flags: Vec<pipediff::geometry::ConsistencyFlag>,
}

fn validate(path: &str, stamp: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut m = manifest::ManifestBuilder::new("validate");
    let design = load_design(path, &mut m)?;
    let feasibility = check_feasibility(&design)?;
    let derived = derive_geometry(&design);
    let code = if !feasibility.feasible {
        EXIT_INFEASIBLE
    } else if !derived.consistency_flags.is_empty() {
        EXIT_INCONSISTENT
    } else {
        EXIT_OK
    };
    emit(
        out,
        &ValidateReport {
            manifest: m.finish(stamp),
            design: DesignFile::from(&design),
            feasibility,
            consistency_flags: derived.consistency_flags,
        },
    )?;
    Ok(code)
}

#[derive(Serialize)]
struct DeriveReport {
    manifest: RunManifest,
    design: DesignFile,
    derived: DerivedGeometry,
}

fn derive(path: &str, stamp: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut m = manifest::ManifestBuilder::new("derive");
    let design = load_design(path, &mut m)?;
    emit(
        out,
        &DeriveReport {
            manifest: m.finish(stamp),
            design: DesignFile::from(&design),
            derived: derive_geometry(&design),
        },
    )?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct MeshReport {
    manifest: RunManifest,
    stl: String,
    resolution: u32,
    vertices: usize,
    triangles: usize,
    watertight: bool,
    signed_volume_mm3: f64,
    stl_bytes: usize,
}

fn mesh(
    path: &str,
    stl: &str,
    resolution: u32,
    stamp: bool,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut m = manifest::ManifestBuilder::new("mesh");
    let design = load_design(path, &mut m)?;
    m.arg("resolution", &resolution.to_string());
    let surface = build_surface_mesh(&design, resolution)?;
    let bytes = export_stl(&surface)?;
    write_file(stl, &bytes)?;
    emit(
        out,
        &MeshReport {
            manifest: m.finish(stamp),
            stl: stl.to_string(),
            resolution,
            vertices: surface.vertices.len(),
            triangles: surface.triangles.len(),
            watertight: surface.is_watertight(),
            signed_volume_mm3: surface.signed_volume(),
            stl_bytes: bytes.len(),
        },
    )?;
    Ok(EXIT_OK)
}

/// Loaded design, stage configuration and map for the meanline commands.
struct Stage {
    design: PipeDiffuserDesign,
    derived: DerivedGeometry,
    config: StageConfig,
    map: DiffuserMap,
    map_source: String,
}

fn load_stage_inputs(
    args: &StageArgs,
    m: &mut manifest::ManifestBuilder,
) -> Result<Stage, CliError> {
    let design = load_design(&args.design, m)?;
    let config = load_stage(Some(&args.stage), m)?;
    let (map, map_source) = load_diffuser_map(args.map.as_deref(), m)?;
    feasible_or_exit(&design)?;
    let derived = derive_geometry(&design);
    Ok(Stage {
        design,
        derived,
        config,
        map,
        map_source,
    })
}

#[derive(Serialize)]
struct Metadata {
    stage_config: StageConfig,
    diffuser_map: String,
    calibration_note: &'static str,
}

impl Metadata {
    fn new(config: StageConfig, map_source: String) -> Self {
        Self {
            stage_config: config,
            diffuser_map: map_source,
            calibration_note: CALIBRATION_NOTE,
        }
    }
}

#[derive(Serialize)]
struct PointReport {
    manifest: RunManifest,
    metadata: Metadata,
    design: DesignFile,
    point: pipediff::meanline::StagePoint,
}

fn point(
    args: &StageArgs,
    mdot: f64,
    speed: f64,
    stamp: bool,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut m = manifest::ManifestBuilder::new("point");
    let s = load_stage_inputs(args, &mut m)?;
    m.arg("mdot", &sig17(mdot));
    m.arg("speed", &sig17(speed));
    let closures = s.config.closures()?;
    let p = evaluate_point(
        &s.config.compressor_spec()?,
        &s.design,
        &s.derived,
        &closures,
        CpSource::resolve(&closures, &s.map),
        mdot,
        speed,
    )?;
    emit(
        out,
        &PointReport {
            manifest: m.finish(stamp),
            metadata: Metadata::new(s.config, s.map_source),
            design: DesignFile::from(&s.design),
            point: p,
        },
    )?;
    Ok(EXIT_OK)
}

const POINT_CSV_HEADER: [&str; 14] = [
    "speed_fraction",
    "mdot",
    "pr_tt",
    "eta_tt",
    "cp",
    "cp0",
    "b_th",
    "mach_th",
    "flow_angle_deg",
    "incidence_deg",
    "p_s4_ratio",
    "p_t4_ratio",
    "choked",
    "surge",
];

fn map_csv(map: &PerformanceMap) -> Result<Vec<u8>, CliError> {
    let err = |e: csv::Error| CliError::Usage(format!("csv output: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(POINT_CSV_HEADER).map_err(err)?;
    for line in &map.lines {
        for p in &line.points {
            let perf = p.performance;
            let opt = |f: fn(&pipediff::meanline::PointPerformance) -> f64| {
                perf.as_ref().map(f).map(sig17).unwrap_or_default()
            };
            w.write_record([
                sig17(p.speed_fraction),
                sig17(p.mdot),
                opt(|q| q.pr_tt),
                opt(|q| q.eta_tt),
                opt(|q| q.cp),
                opt(|q| q.cp0),
                sig17(p.b_th),
                opt(|q| q.mach_th),
                sig17(p.flow_angle_deg),
                sig17(p.incidence_deg),
                opt(|q| q.p_s4_ratio),
                opt(|q| q.p_t4_ratio),
                p.flags.choked.to_string(),
                p.flags.surge.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.into_inner()
        .map_err(|e| CliError::Usage(format!("csv output: {e}")))
}

#[derive(Serialize)]
struct MapReport {
    manifest: RunManifest,
    metadata: Metadata,
    design: DesignFile,
    map: PerformanceMap,
}

fn speed_line(
    args: &StageArgs,
    speed: f64,
    points: usize,
    csv: Option<&str>,
    stamp: bool,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut m = manifest::ManifestBuilder::new("speedline");
    let s = load_stage_inputs(args, &mut m)?;
    m.arg("speed", &sig17(speed));
    m.arg("points", &points.to_string());
    let closures = s.config.closures()?;
    let line = speedline(
        &s.config.compressor_spec()?,
        &s.design,
        &s.derived,
        &closures,
        CpSource::resolve(&closures, &s.map),
        speed,
        points,
    )?;
    let map = PerformanceMap {
        lines: vec![line],
        failed: Vec::new(),
    };
    if let Some(path) = csv {
        write_file(path, &map_csv(&map)?)?;
    }
    emit(
        out,
        &MapReport {
            manifest: m.finish(stamp),
            metadata: Metadata::new(s.config, s.map_source),
            design: DesignFile::from(&s.design),
            map,
        },
    )?;
    Ok(EXIT_OK)
}

fn map(
    args: &StageArgs,
    speeds: &[f64],
    points: usize,
    csv: Option<&str>,
    stamp: bool,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut m = manifest::ManifestBuilder::new("map");
    let s = load_stage_inputs(args, &mut m)?;
    let listed: Vec<String> = speeds.iter().map(|&v| sig17(v)).collect();
    m.arg("speeds", &listed.join(","));
    m.arg("points", &points.to_string());
    let closures = s.config.closures()?;
    let map = performance_map(
        &s.config.compressor_spec()?,
        &s.design,
        &s.derived,
        &closures,
        CpSource::resolve(&closures, &s.map),
        speeds,
        points,
    )?;
    if let Some(path) = csv {
        write_file(path, &map_csv(&map)?)?;
    }
    emit(
        out,
        &MapReport {
            manifest: m.finish(stamp),
            metadata: Metadata::new(s.config, s.map_source),
            design: DesignFile::from(&s.design),
            map,
        },
    )?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SweepOutput {
    manifest: RunManifest,
    metadata: Metadata,
    sweep: pipediff::explorer::SweepReport,
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    args: &StageArgs,
    param: &str,
    values: &[f64],
    mdot: f64,
    speed: f64,
    csv: Option<&str>,
    stamp: bool,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut m = manifest::ManifestBuilder::new("sweep");
    let design = load_design(&args.design, &mut m)?;
    let config = load_stage(Some(&args.stage), &mut m)?;
    let (dmap, map_source) = load_diffuser_map(args.map.as_deref(), &mut m)?;
    m.arg("param", param);
    let listed: Vec<String> = values.iter().map(|&v| sig17(v)).collect();
    m.arg("values", &listed.join(","));
    m.arg("mdot", &sig17(mdot));
    m.arg("speed", &sig17(speed));
    let spec = config.compressor_spec()?;
    let closures = config.closures()?;
    let ctx = StudyContext {
        spec: &spec,
        closures: &closures,
        map: &dmap,
        mdot,
        speed_fraction: speed,
    };
    let report = ofat_sweep(&design_id(&args.design), &design, param, values, &ctx)?;
    if let Some(path) = csv {
        write_file(path, &report.to_csv()?)?;
    }
    emit(
        out,
        &SweepOutput {
            manifest: m.finish(stamp),
            metadata: Metadata::new(config, map_source),
            sweep: report,
        },
    )?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct TableOutput {
    manifest: RunManifest,
    metadata: Metadata,
    table: pipediff::explorer::ComparisonTable,
}

#[allow(clippy::too_many_arguments)]
fn table(
    paths: &[String],
    stage: Option<&str>,
    map_path: Option<&str>,
    mdot: f64,
    speed: f64,
    csv: Option<&str>,
    stamp: bool,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut m = manifest::ManifestBuilder::new("table");
    let mut designs = Vec::with_capacity(paths.len());
    for p in paths {
        designs.push((design_id(p), load_design(p, &mut m)?));
    }
    let config = load_stage(stage, &mut m)?;
    let (dmap, map_source) = load_diffuser_map(map_path, &mut m)?;
    m.arg("mdot", &sig17(mdot));
    m.arg("speed", &sig17(speed));
    let spec = config.compressor_spec()?;
    let closures = config.closures()?;
    let ctx = StudyContext {
        spec: &spec,
        closures: &closures,
        map: &dmap,
        mdot,
        speed_fraction: speed,
    };
    let t = design_table(&designs, &ctx)?;
    if let Some(path) = csv {
        write_file(path, &t.to_csv()?)?;
    }
    emit(
        out,
        &TableOutput {
            manifest: m.finish(stamp),
            metadata: Metadata::new(config, map_source),
            table: t,
        },
    )?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct BlockageReport {
    manifest: RunManifest,
    a_eff: f64,
    a_geo: f64,
    blockage: f64,
}

fn blockage(
    mdot: f64,
    p0: f64,
    t0: f64,
    mach: f64,
    area: f64,
    stamp: bool,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut m = manifest::ManifestBuilder::new("blockage");
    for (name, v) in [
        ("mdot", mdot),
        ("p0", p0),
        ("t0", t0),
        ("mach", mach),
        ("area", area),
    ] {
        m.arg(name, &sig17(v));
    }
    let total = TotalState::new(p0, t0)?;
    let a_eff = effective_area(mdot, &total, mach, &GasModel::AIR)?;
    let b = throat_blockage(a_eff, area)?;
    emit(
        out,
        &BlockageReport {
            manifest: m.finish(stamp),
            a_eff,
            a_geo: area,
            blockage: b,
        },
    )?;
    Ok(EXIT_OK)
}
