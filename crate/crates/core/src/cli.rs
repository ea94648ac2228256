//! Command-line front end. Exit codes: 0 success, 1 I/O failure, 2 invalid
//! configuration, 3 a solve did not converge, 4 measurements that do not
//! match the model poses.

use crate::config::{
    load_params, load_params_file, load_schedule, ActuationInput, ConfigError, ProtocolSchedule, RobotParams,
    PROTOTYPE_DOCUMENT,
};
use crate::output::{self, sig9, Format};
use crate::shooting::{solve_from_unloaded, sweep, ShootingResult, SolverConfig, SweepMode};
use crate::validation::{
    compute_errors, format_measurements, model_tips_as_measurements, parse_measurements, run_protocol, ValidationError,
};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "tacter", version, about = "Statics of a two-tube tendon-driven continuum robot")]
pub struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one pose and write its backbone.
    Solve(SolveArgs),
    /// Run the configuration sweeps and, given measurements, the error report.
    Protocol(ProtocolArgs),
    /// Sample tip positions over a grid of tensions and translations.
    Workspace(WorkspaceArgs),
    /// Run the command described by a manifest file.
    Run {
        manifest: PathBuf,
    },
    /// Validate a parameter document and print it in canonical form.
    Params {
        /// Parameter document; the bundled prototype parameters when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Integration steps on the overlap.
    #[arg(long)]
    pub overlap_steps: Option<usize>,
    /// Integration steps beyond the outer tube.
    #[arg(long)]
    pub distal_steps: Option<usize>,
    /// Residual norm for convergence.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, ConfigError> {
        let mut c = SolverConfig::default();
        if let Some(n) = self.overlap_steps {
            c.overlap_steps = n;
        }
        if let Some(n) = self.distal_steps {
            c.distal_steps = n;
        }
        if let Some(t) = self.tolerance {
            c.tolerance = t;
        }
        if let Some(n) = self.max_iterations {
            c.max_iterations = n;
        }
        if c.overlap_steps == 0 || c.distal_steps == 0 {
            return Err(invalid("solver", "step counts must be positive"));
        }
        if !(c.tolerance > 0.0) {
            return Err(invalid("solver.tolerance", "must be positive"));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Parameter document; the bundled prototype parameters when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Outer tendon tension, N.
    #[arg(long, default_value_t = 0.0)]
    pub outer_tension: f64,
    /// Left inner tendon tension, N.
    #[arg(long, default_value_t = 0.0)]
    pub left_tension: f64,
    /// Right inner tendon tension, N.
    #[arg(long, default_value_t = 0.0)]
    pub right_tension: f64,
    /// Inner-robot translation, mm.
    #[arg(long, default_value_t = 0.0)]
    pub translation: f64,
    /// Base twist of the inner robot, degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta0: f64,
    /// Model the inner robot without the outer tube.
    #[arg(long)]
    pub inner_only: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "delimited")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ProtocolArgs {
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Tension schedule; the standard ramps of the parameter document when omitted.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Measured tip positions.
    #[arg(long)]
    pub measurements: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, value_enum, default_value = "delimited")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct WorkspaceArgs {
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Grid description.
    #[arg(long)]
    pub grid: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(short, long)]
    pub output: PathBuf,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: e.to_string(),
        }
    }
}

fn invalid(field: &str, message: &str) -> ConfigError {
    ConfigError::Invariant {
        field: field.into(),
        message: message.into(),
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        code: EXIT_IO,
        message: format!("cannot write {}: {e}", path.display()),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| {
        CliError::from(ConfigError::Io {
            path: path.display().to_string(),
            source,
        })
    })
}

fn params_from(path: Option<&Path>) -> Result<RobotParams, CliError> {
    Ok(match path {
        Some(p) => load_params_file(p)?,
        None => load_params(PROTOTYPE_DOCUMENT)?,
    })
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(command: &Command) -> Result<i32, CliError> {
    match command {
        Command::Solve(a) => cmd_solve(a),
        Command::Protocol(a) => cmd_protocol(a),
        Command::Workspace(a) => cmd_workspace(a),
        Command::Run { manifest } => cmd_run(manifest),
        Command::Params { params } => {
            let p = params_from(params.as_deref())?;
            print!("{}", p.to_document());
            Ok(EXIT_OK)
        }
    }
}

pub fn cmd_solve(a: &SolveArgs) -> Result<i32, CliError> {
    let params = params_from(a.params.as_deref())?;
    let solver = a.solver.config()?;
    let input = ActuationInput {
        outer_tension: a.outer_tension,
        inner_left_tension: a.left_tension,
        inner_right_tension: a.right_tension,
        translation: a.translation,
        theta0: a.theta0.to_radians(),
        outer_present: !a.inner_only,
        ..ActuationInput::default()
    };
    let model = params.model(&input)?;
    log::info!("solving l1 = {} mm, l2 = {} mm", model.l1, model.l2);
    let result = solve_from_unloaded(&model, &solver);
    let prov = output::provenance(&params, &input, &solver);
    write_file(&a.output, &output::backbone(&result, &prov, a.format))?;
    if result.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "solve did not converge: {} (residual {})",
            result.failure.as_deref().unwrap_or("unknown"),
            sig9(result.residual_norm)
        );
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn summary_line(label: &str, step: usize, tension: f64, r: &ShootingResult) -> String {
    let tip = r
        .tip_position()
        .map(|t| format!("{},{},{}", sig9(t.x), sig9(t.y), sig9(t.z)))
        .unwrap_or_else(|| ",,".into());
    format!(
        "{label},{step},{},{},{},{},{tip}",
        sig9(tension),
        r.converged,
        r.iterations,
        sig9(r.residual_norm)
    )
}

const SUMMARY_HEADER: &str = "configuration,step_index,tension_n,converged,iterations,residual_norm,x_mm,y_mm,z_mm";

pub fn cmd_protocol(a: &ProtocolArgs) -> Result<i32, CliError> {
    let params = params_from(a.params.as_deref())?;
    let solver = a.solver.config()?;
    let schedule = match &a.schedule {
        Some(p) => load_schedule(&read_text(p)?, &params)?,
        None => ProtocolSchedule::standard(&params),
    };
    let measurements = match &a.measurements {
        Some(p) => Some(parse_measurements(&read_text(p)?).map_err(|e| CliError {
            code: match e {
                ValidationError::Misaligned { .. } => EXIT_MISMATCH,
                _ => EXIT_CONFIG,
            },
            message: e.to_string(),
        })?),
        None => None,
    };
    log::info!("protocol: {} sweeps, {} poses", schedule.sweeps.len(), schedule.pose_count());
    let results = run_protocol(&params, &schedule, &solver)?;

    let dir = &a.output_dir;
    let ext = match a.format {
        Format::Delimited => "csv",
        Format::Structured => "json",
    };
    let mut summary = String::new();
    let _ = writeln!(summary, "# tacter protocol v1");
    summary.push_str(&output::commented(&params.to_document()));
    summary.push_str(&output::commented(&output::solver_provenance(&solver)));
    let _ = writeln!(summary, "{SUMMARY_HEADER}");
    let mut failures = Vec::new();
    for sweep in &schedule.sweeps {
        let label = sweep.label.to_string();
        let mut text = String::new();
        let _ = writeln!(text, "# tacter sweep v1");
        let _ = writeln!(text, "# configuration = {label}");
        let _ = writeln!(text, "# steps = {}", sweep.tensions.len());
        let _ = writeln!(text, "{SUMMARY_HEADER}");
        for p in results.iter().filter(|p| p.configuration == sweep.label) {
            let line = summary_line(&label, p.step_index, p.tension, &p.result);
            let _ = writeln!(text, "{line}");
            let _ = writeln!(summary, "{line}");
            if !p.result.converged {
                failures.push(format!("{label}#{}", p.step_index));
            }
            let prov = output::provenance(&params, &p.input, &solver);
            write_file(
                &dir.join("backbones").join(format!("{label}_{:03}.{ext}", p.step_index)),
                &output::backbone(&p.result, &prov, a.format),
            )?;
        }
        write_file(&dir.join("sweeps").join(format!("{label}.csv")), &text)?;
    }
    write_file(&dir.join("summary.csv"), &summary)?;
    write_file(
        &dir.join("model_tips.csv"),
        &format_measurements(&model_tips_as_measurements(&results)),
    )?;

    let mut code = EXIT_OK;
    if let Some(m) = measurements {
        match compute_errors(&m, &results) {
            Ok(report) => {
                write_file(&dir.join("error_report.txt"), &report.to_table())?;
                write_file(&dir.join("error_report.json"), &report.to_json())?;
                print!("{}", report.to_table());
            }
            Err(ValidationError::Misaligned { unmatched }) => {
                eprintln!("unmatched measurements:");
                for u in &unmatched {
                    eprintln!("  {u}");
                }
                code = EXIT_MISMATCH;
            }
            Err(e) => {
                return Err(CliError {
                    code: EXIT_CONFIG,
                    message: e.to_string(),
                })
            }
        }
    }
    if !failures.is_empty() {
        eprintln!("{} of {} poses did not converge: {}", failures.len(), results.len(), failures.join(", "));
        if code == EXIT_OK {
            code = EXIT_NOT_CONVERGED;
        }
    }
    Ok(code)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisDocument {
    min: f64,
    max: f64,
    count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDocument {
    schema: String,
    /// N
    outer_tension_n: AxisDocument,
    /// N; negative values load the right tendon.
    inner_tension_n: AxisDocument,
    /// mm
    translation_mm: AxisDocument,
    #[serde(default)]
    parallel: bool,
}

pub const GRID_SCHEMA: &str = "tacter-grid/1";

fn axis(name: &str, a: &AxisDocument) -> Result<Vec<f64>, ConfigError> {
    if a.count == 0 || !a.min.is_finite() || !a.max.is_finite() || a.max < a.min {
        return Err(invalid(name, "needs finite min <= max and count >= 1"));
    }
    if a.count == 1 {
        return Ok(vec![a.min]);
    }
    let n = a.count - 1;
    Ok((0..=n)
        .map(|k| if k == n { a.max } else { a.min + (a.max - a.min) * k as f64 / n as f64 })
        .collect())
}

pub fn cmd_workspace(a: &WorkspaceArgs) -> Result<i32, CliError> {
    let params = params_from(a.params.as_deref())?;
    let solver = a.solver.config()?;
    let grid: GridDocument = toml::from_str(&read_text(&a.grid)?).map_err(|e| ConfigError::Parse(e.to_string()))?;
    if grid.schema != GRID_SCHEMA {
        return Err(invalid("schema", &format!("expected `{GRID_SCHEMA}`")).into());
    }
    let outer = axis("outer_tension_n", &grid.outer_tension_n)?;
    let inner = axis("inner_tension_n", &grid.inner_tension_n)?;
    let translations = axis("translation_mm", &grid.translation_mm)?;
    if outer[0] < 0.0 {
        return Err(invalid("outer_tension_n", "must be non-negative").into());
    }
    if translations[0] < 0.0 || *translations.last().unwrap() > params.translation_range {
        return Err(invalid(
            "translation_mm",
            &format!("must lie within [0, {}] mm", params.translation_range),
        )
        .into());
    }
    let mode = if grid.parallel {
        SweepMode::ParallelColdStart
    } else {
        SweepMode::WarmStart
    };

    let mut text = String::new();
    let _ = writeln!(text, "# tacter workspace v1");
    let _ = writeln!(text, "# cells = {}", outer.len() * inner.len() * translations.len());
    text.push_str(&output::commented(&params.to_document()));
    text.push_str(&output::commented(&output::solver_provenance(&solver)));
    let _ = writeln!(
        text,
        "translation_mm,outer_tension_n,inner_tension_n,converged,residual_norm,x_mm,y_mm,z_mm"
    );
    let mut failed = 0;
    for &t in &translations {
        let mut cells = Vec::new();
        for &lo in &outer {
            for &li in &inner {
                let input = ActuationInput {
                    outer_tension: lo,
                    inner_left_tension: li.max(0.0),
                    inner_right_tension: (-li).max(0.0),
                    translation: t,
                    ..ActuationInput::default()
                };
                cells.push((lo, li, params.model(&input)?));
            }
        }
        let models: Vec<_> = cells.iter().map(|c| c.2.clone()).collect();
        let results = sweep(&models, &solver, mode);
        for ((lo, li, _), r) in cells.iter().zip(&results) {
            if !r.converged {
                failed += 1;
            }
            let tip = r
                .tip_position()
                .filter(|_| r.converged)
                .map(|p| format!("{},{},{}", sig9(p.x), sig9(p.y), sig9(p.z)))
                .unwrap_or_else(|| ",,".into());
            let _ = writeln!(
                text,
                "{},{},{},{},{},{tip}",
                sig9(t),
                sig9(*lo),
                sig9(*li),
                r.converged,
                sig9(r.residual_norm)
            );
        }
    }
    write_file(&a.output, &text)?;
    if failed > 0 {
        eprintln!("{failed} workspace cells did not converge");
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(EXIT_OK)
}

pub const MANIFEST_SCHEMA: &str = "tacter-manifest/1";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestActuation {
    #[serde(default)]
    outer_tension_n: f64,
    #[serde(default)]
    left_tension_n: f64,
    #[serde(default)]
    right_tension_n: f64,
    #[serde(default)]
    translation_mm: f64,
    #[serde(default)]
    theta0_deg: f64,
    #[serde(default)]
    inner_only: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestSolver {
    overlap_steps: Option<usize>,
    distal_steps: Option<usize>,
    tolerance: Option<f64>,
    max_iterations: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    schema: String,
    command: String,
    params: Option<PathBuf>,
    output: Option<PathBuf>,
    output_dir: Option<PathBuf>,
    format: Option<String>,
    schedule: Option<PathBuf>,
    measurements: Option<PathBuf>,
    grid: Option<PathBuf>,
    #[serde(default)]
    actuation: ManifestActuation,
    #[serde(default)]
    solver: ManifestSolver,
}

/// Runs a manifest; relative paths are resolved against its directory.
pub fn cmd_run(path: &Path) -> Result<i32, CliError> {
    let m: Manifest = toml::from_str(&read_text(path)?).map_err(|e| ConfigError::Parse(e.to_string()))?;
    if m.schema != MANIFEST_SCHEMA {
        return Err(invalid("schema", &format!("expected `{MANIFEST_SCHEMA}`")).into());
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |p: &Option<PathBuf>| p.as_ref().map(|p| base.join(p));
    let require = |p: &Option<PathBuf>, name: &str| -> Result<PathBuf, CliError> {
        resolve(p).ok_or_else(|| invalid(name, "required by this command").into())
    };
    let format = match m.format.as_deref() {
        None | Some("delimited") => Format::Delimited,
        Some("structured") => Format::Structured,
        Some(other) => return Err(invalid("format", &format!("unknown format `{other}`")).into()),
    };
    let solver = SolverArgs {
        overlap_steps: m.solver.overlap_steps,
        distal_steps: m.solver.distal_steps,
        tolerance: m.solver.tolerance,
        max_iterations: m.solver.max_iterations,
    };
    let command = match m.command.as_str() {
        "solve" => Command::Solve(SolveArgs {
            params: resolve(&m.params),
            outer_tension: m.actuation.outer_tension_n,
            left_tension: m.actuation.left_tension_n,
            right_tension: m.actuation.right_tension_n,
            translation: m.actuation.translation_mm,
            theta0: m.actuation.theta0_deg,
            inner_only: m.actuation.inner_only,
            solver,
            output: require(&m.output, "output")?,
            format,
        }),
        "protocol" => Command::Protocol(ProtocolArgs {
            params: resolve(&m.params),
            schedule: resolve(&m.schedule),
            measurements: resolve(&m.measurements),
            solver,
            output_dir: require(&m.output_dir, "output_dir")?,
            format,
        }),
        "workspace" => Command::Workspace(WorkspaceArgs {
            params: resolve(&m.params),
            grid: require(&m.grid, "grid")?,
            solver,
            output: require(&m.output, "output")?,
        }),
        other => return Err(invalid("command", &format!("unknown command `{other}`")).into()),
    };
    execute(&command)
}
