//! Command-line front end for the `fdde` library.
//!
//! Every subcommand reads its inputs from flags, optionally topped up from a
//! `--config` file of `key=value` lines (flags win), runs one computation,
//! and writes a CSV or JSON table to `--out`. Errors are reported as a
//! single-line JSON diagnostic on standard error and encoded in the exit
//! code: 2 for usage problems, 3 for invalid input values, 4 when the
//! mathematics declines an answer (no crossing, boundary case, degenerate
//! series), 5 when a run diverged but partial output was still written.

mod output;

pub use output::{diagnostic_line, fmt_f64, Cell, MetaValue, Output};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fdde::{
    classify_equilibrium, classify_linear, crit_delay, equilibria, estimate_lag, integrate,
    linearize, max_lyapunov, sample_grid, Branch, EmbeddingConfig, HistoryFn, ModelParams,
    SolverConfig, StabilityKind, VerdictSource,
};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

/// Step size used when `--h` is not given.
pub const DEFAULT_H: f64 = 0.01;
/// Horizon used by the sweep commands when `--t-end` is not given.
pub const DEFAULT_SWEEP_T_END: f64 = 400.0;
/// Leading fraction of each sweep orbit discarded before extrema or
/// exponent estimation.
pub const TRANSIENT_FRACTION: f64 = 0.5;

#[derive(Debug, Parser)]
#[command(
    name = "fdde",
    version,
    about = "Simulate and analyze a fractional-order delay differential equation \
             with delayed linear and cubic feedback and instantaneous quadratic \
             and linear terms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the model from a constant history and write the orbit
    Simulate(SimulateArgs),
    /// List the equilibria of the model
    Equilibria(EquilibriaArgs),
    /// Stability verdict for every equilibrium
    Classify(ClassifyArgs),
    /// Critical delay of the linearization a x(t) + b x(t - tau)
    CritDelay(CritDelayArgs),
    /// Label a rectangle of the (q, delta) plane for the positive equilibrium
    Region(RegionArgs),
    /// Orbit extrema across a sweep of delays
    Bifurcation(BifurcationArgs),
    /// Largest Lyapunov exponent across a sweep of delays
    Lyapunov(LyapunovArgs),
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Read key=value defaults from FILE; `#` starts a comment and
    /// command-line flags take precedence
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output file path
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

/// The four model coefficients.
#[derive(Debug, Clone, Copy, Args)]
pub struct CoeffFlags {
    /// Delayed linear coefficient
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Delayed cubic coefficient
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Instantaneous quadratic coefficient
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    /// Instantaneous linear coefficient
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Fractional order in (0, 1]
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Delay
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub coeffs: CoeffFlags,
    /// Step size (default 0.01); the effective step divides tau exactly
    #[arg(long, allow_negative_numbers = true)]
    pub h: Option<f64>,
    /// End of the integration window
    #[arg(long, allow_negative_numbers = true)]
    pub t_end: Option<f64>,
    /// Constant history value on [-tau, 0]
    #[arg(long, allow_negative_numbers = true)]
    pub history_const: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct EquilibriaArgs {
    #[command(flatten)]
    pub coeffs: CoeffFlags,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Fractional order in (0, 1]
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub coeffs: CoeffFlags,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CritDelayArgs {
    /// Fractional order in (0, 1]
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Instantaneous coefficient (direct mode, bypasses the model)
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Delayed coefficient (direct mode, bypasses the model)
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[command(flatten)]
    pub coeffs: CoeffFlags,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    /// Delayed cubic coefficient (must be positive)
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Instantaneous quadratic coefficient (must be positive)
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    /// q axis of the grid
    #[arg(long, value_name = "LO:HI", value_parser = parse_range, allow_hyphen_values = true)]
    pub q_range: Option<RangePair>,
    /// delta axis of the grid
    #[arg(long, value_name = "LO:HI", value_parser = parse_range, allow_hyphen_values = true)]
    pub delta_range: Option<RangePair>,
    /// Grid size (default 200x200)
    #[arg(long, value_name = "NQxNDELTA", value_parser = parse_grid)]
    pub grid: Option<GridSpec>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Shared shape of the two delay-sweep commands.
#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Fractional order in (0, 1]
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub coeffs: CoeffFlags,
    /// First delay of the sweep
    #[arg(long, allow_negative_numbers = true)]
    pub tau_min: Option<f64>,
    /// Last delay of the sweep
    #[arg(long, allow_negative_numbers = true)]
    pub tau_max: Option<f64>,
    /// Number of sweep points (evenly spaced, endpoints included)
    #[arg(long)]
    pub tau_steps: Option<usize>,
    /// Step size (default 0.01)
    #[arg(long, allow_negative_numbers = true)]
    pub h: Option<f64>,
    /// Horizon of each run (default 400)
    #[arg(long, allow_negative_numbers = true)]
    pub t_end: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct BifurcationArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Debug, Args)]
pub struct LyapunovArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// A `LO:HI` pair from the command line or a config file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangePair {
    pub lo: f64,
    pub hi: f64,
}

/// An `NQxNDELTA` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub nq: usize,
    pub ndelta: usize,
}

fn parse_range(s: &str) -> Result<RangePair, String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad lower bound {lo:?} in range {s:?}"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad upper bound {hi:?} in range {s:?}"))?;
    Ok(RangePair { lo, hi })
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let (nq, ndelta) = s
        .split_once('x')
        .ok_or_else(|| format!("expected NQxNDELTA, got {s:?}"))?;
    let nq: usize = nq
        .trim()
        .parse()
        .map_err(|_| format!("bad q count {nq:?} in grid {s:?}"))?;
    let ndelta: usize = ndelta
        .trim()
        .parse()
        .map_err(|_| format!("bad delta count {ndelta:?} in grid {s:?}"))?;
    Ok(GridSpec { nq, ndelta })
}

/// Errors carrying their exit code and diagnostic class.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Missing or contradictory flags; exit 2.
    Usage(String),
    /// Values outside the accepted input domain; exit 3.
    Validation(String),
    /// Well-formed inputs for which the computation declines an answer;
    /// exit 4.
    Domain(String),
    /// Filesystem trouble; exit 1.
    Io(String),
}

impl CliError {
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Validation(_) => "validation",
            CliError::Domain(_) => "domain",
            CliError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Domain(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Validation(m)
            | CliError::Domain(m)
            | CliError::Io(m) => m,
        }
    }
}

impl From<fdde::Error> for CliError {
    fn from(e: fdde::Error) -> Self {
        let msg = e.to_string();
        match e {
            fdde::Error::Config(_) | fdde::Error::Domain(_) => CliError::Validation(msg),
            _ => CliError::Domain(msg),
        }
    }
}

/// How a successful command ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Clean,
    /// Output was written but one or more runs diverged; exit 5.
    Divergent(String),
}

/// Parses `args` and runs the selected command, returning the process exit
/// code. All diagnostics go to standard error as single-line JSON.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let informational = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let summary = e.to_string().lines().next().unwrap_or("usage error").to_string();
            let _ = e.print();
            if informational {
                return 0;
            }
            eprintln!("{}", diagnostic_line("usage", &summary));
            return 2;
        }
    };
    match execute(cli.command) {
        Ok(Outcome::Clean) => 0,
        Ok(Outcome::Divergent(msg)) => {
            eprintln!("{}", diagnostic_line("divergence", &msg));
            5
        }
        Err(e) => {
            eprintln!("{}", diagnostic_line(e.class(), e.message()));
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Simulate(a) => run_simulate(a),
        Command::Equilibria(a) => run_equilibria(a),
        Command::Classify(a) => run_classify(a),
        Command::CritDelay(a) => run_crit_delay(a),
        Command::Region(a) => run_region(a),
        Command::Bifurcation(a) => run_bifurcation(a.sweep),
        Command::Lyapunov(a) => run_lyapunov(a.sweep),
    }
}

const COMMON_KEYS: [&str; 2] = ["out", "format"];

fn parse_config_text(text: &str, known: &[&str]) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Validation(format!(
                "config line {}: expected key=value, got {line:?}",
                idx + 1
            )));
        };
        let key = key.trim();
        if !known.contains(&key) && !COMMON_KEYS.contains(&key) {
            return Err(CliError::Validation(format!(
                "config line {}: key {key:?} is not a flag of this command",
                idx + 1
            )));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn load_config(common: &CommonArgs, known: &[&str]) -> Result<BTreeMap<String, String>, CliError> {
    let Some(path) = &common.config else {
        return Ok(BTreeMap::new());
    };
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Validation(format!("cannot read config file {}: {e}", path.display()))
    })?;
    parse_config_text(&text, known)
}

fn merge_f64(
    slot: &mut Option<f64>,
    map: &BTreeMap<String, String>,
    key: &str,
) -> Result<(), CliError> {
    if slot.is_none() {
        if let Some(raw) = map.get(key) {
            *slot = Some(raw.parse().map_err(|_| {
                CliError::Validation(format!("config value {key}={raw:?} is not a number"))
            })?);
        }
    }
    Ok(())
}

fn merge_usize(
    slot: &mut Option<usize>,
    map: &BTreeMap<String, String>,
    key: &str,
) -> Result<(), CliError> {
    if slot.is_none() {
        if let Some(raw) = map.get(key) {
            *slot = Some(raw.parse().map_err(|_| {
                CliError::Validation(format!("config value {key}={raw:?} is not a count"))
            })?);
        }
    }
    Ok(())
}

fn merge_coeffs(coeffs: &mut CoeffFlags, map: &BTreeMap<String, String>) -> Result<(), CliError> {
    merge_f64(&mut coeffs.delta, map, "delta")?;
    merge_f64(&mut coeffs.epsilon, map, "epsilon")?;
    merge_f64(&mut coeffs.p, map, "p")?;
    merge_f64(&mut coeffs.q, map, "q")
}

fn merge_common(common: &mut CommonArgs, map: &BTreeMap<String, String>) -> Result<(), CliError> {
    if common.out.is_none() {
        if let Some(raw) = map.get("out") {
            common.out = Some(PathBuf::from(raw));
        }
    }
    if common.format.is_none() {
        if let Some(raw) = map.get("format") {
            common.format = Some(match raw.to_ascii_lowercase().as_str() {
                "csv" => OutputFormat::Csv,
                "json" => OutputFormat::Json,
                other => {
                    return Err(CliError::Validation(format!(
                        "config value format={other:?}, expected csv or json"
                    )))
                }
            });
        }
    }
    Ok(())
}

fn require_f64(slot: Option<f64>, flag: &str) -> Result<f64, CliError> {
    slot.ok_or_else(|| {
        CliError::Usage(format!("missing required value for --{flag} (flag or config file)"))
    })
}

fn require_coeffs(coeffs: &CoeffFlags) -> Result<(f64, f64, f64, f64), CliError> {
    Ok((
        require_f64(coeffs.delta, "delta")?,
        require_f64(coeffs.epsilon, "epsilon")?,
        require_f64(coeffs.p, "p")?,
        require_f64(coeffs.q, "q")?,
    ))
}

fn resolve_output(common: &CommonArgs) -> Result<(PathBuf, OutputFormat), CliError> {
    let path = common.out.clone().ok_or_else(|| {
        CliError::Usage("missing required value for --out (flag or config file)".into())
    })?;
    Ok((path, common.format.unwrap_or(OutputFormat::Csv)))
}

fn write_output(out: &Output, path: &Path, format: OutputFormat) -> Result<(), CliError> {
    let text = match format {
        OutputFormat::Csv => out.to_csv(),
        OutputFormat::Json => out.to_json(),
    };
    fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn branch_code(branch: Branch) -> &'static str {
    match branch {
        Branch::X1 => "X1",
        Branch::X2 => "X2",
        Branch::X3 => "X3",
    }
}

fn verdict_cells(kind: StabilityKind) -> (Cell, Cell) {
    match kind {
        StabilityKind::StableAllDelays => (Cell::Str("stable".into()), Cell::Empty),
        StabilityKind::UnstableAllDelays => (Cell::Str("unstable".into()), Cell::Empty),
        StabilityKind::DelayDependent { tau_star } => {
            (Cell::Str("delay-dependent".into()), Cell::Num(tau_star))
        }
    }
}

fn source_cell(source: VerdictSource) -> Cell {
    match source {
        VerdictSource::GeneralClassifier => Cell::Str("general".into()),
        VerdictSource::Theorem(id) => Cell::Str(format!("theorem:{id:?}")),
    }
}

/// Evenly spaced sweep points with exact endpoints.
fn sweep_points(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CliError> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(CliError::Validation(format!(
            "sweep bounds must be finite, got {lo} and {hi}"
        )));
    }
    match n {
        0 => Err(CliError::Validation("tau-steps must be at least 1".into())),
        1 if lo == hi => Ok(vec![lo]),
        1 => Err(CliError::Validation(
            "a single sweep point needs tau-min equal to tau-max".into(),
        )),
        _ if lo >= hi => Err(CliError::Validation(format!(
            "tau-min must be below tau-max, got {lo} and {hi}"
        ))),
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            let mut points: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
            points[n - 1] = hi;
            Ok(points)
        }
    }
}

const SIMULATE_KEYS: [&str; 9] = [
    "alpha", "tau", "delta", "epsilon", "p", "q", "h", "t-end", "history-const",
];

fn run_simulate(mut a: SimulateArgs) -> Result<Outcome, CliError> {
    let map = load_config(&a.common, &SIMULATE_KEYS)?;
    merge_f64(&mut a.alpha, &map, "alpha")?;
    merge_f64(&mut a.tau, &map, "tau")?;
    merge_coeffs(&mut a.coeffs, &map)?;
    merge_f64(&mut a.h, &map, "h")?;
    merge_f64(&mut a.t_end, &map, "t-end")?;
    merge_f64(&mut a.history_const, &map, "history-const")?;
    merge_common(&mut a.common, &map)?;

    let (delta, epsilon, p, q) = require_coeffs(&a.coeffs)?;
    let params = ModelParams::new(
        require_f64(a.alpha, "alpha")?,
        require_f64(a.tau, "tau")?,
        delta,
        epsilon,
        p,
        q,
    );
    let history_const = require_f64(a.history_const, "history-const")?;
    let t_end = require_f64(a.t_end, "t-end")?;
    let config = SolverConfig::new(a.h.unwrap_or(DEFAULT_H), t_end);
    let (path, format) = resolve_output(&a.common)?;

    let series = integrate(&params, &HistoryFn::Constant(history_const), &config)?;
    let rows: Vec<Vec<Cell>> = (0..series.len())
        .map(|i| vec![Cell::Num(series.t(i)), Cell::Num(series.xs[i])])
        .collect();
    let out = Output {
        meta: vec![
            ("command", MetaValue::Str("simulate")),
            ("alpha", MetaValue::Num(params.alpha)),
            ("tau", MetaValue::Num(params.tau)),
            ("delta", MetaValue::Num(params.delta)),
            ("epsilon", MetaValue::Num(params.epsilon)),
            ("p", MetaValue::Num(params.p)),
            ("q", MetaValue::Num(params.q)),
            ("h", MetaValue::Num(series.h)),
            ("t_end", MetaValue::Num(t_end)),
            ("history_const", MetaValue::Num(history_const)),
            ("divergent", MetaValue::Bool(series.divergent)),
            ("rows", MetaValue::Int(series.len() as u64)),
        ],
        columns: &["t", "x"],
        rows,
        csv_preamble: vec![],
    };
    write_output(&out, &path, format)?;
    if series.divergent {
        let last = series.len().saturating_sub(1);
        Ok(Outcome::Divergent(format!(
            "orbit left the divergence threshold near t = {:.3}; wrote {} samples",
            series.t(last),
            series.len()
        )))
    } else {
        Ok(Outcome::Clean)
    }
}

const EQUILIBRIA_KEYS: [&str; 4] = ["delta", "epsilon", "p", "q"];

fn run_equilibria(mut a: EquilibriaArgs) -> Result<Outcome, CliError> {
    let map = load_config(&a.common, &EQUILIBRIA_KEYS)?;
    merge_coeffs(&mut a.coeffs, &map)?;
    merge_common(&mut a.common, &map)?;

    let (delta, epsilon, p, q) = require_coeffs(&a.coeffs)?;
    let params = ModelParams::new(1.0, 0.0, delta, epsilon, p, q);
    params.validate()?;
    let (path, format) = resolve_output(&a.common)?;

    let points = equilibria(&params);
    let rows: Vec<Vec<Cell>> = points
        .iter()
        .map(|eq| vec![Cell::Str(branch_code(eq.branch).into()), Cell::Num(eq.value)])
        .collect();
    let out = Output {
        meta: vec![
            ("command", MetaValue::Str("equilibria")),
            ("delta", MetaValue::Num(delta)),
            ("epsilon", MetaValue::Num(epsilon)),
            ("p", MetaValue::Num(p)),
            ("q", MetaValue::Num(q)),
            ("rows", MetaValue::Int(points.len() as u64)),
        ],
        columns: &["branch", "value"],
        rows,
        csv_preamble: vec![],
    };
    write_output(&out, &path, format)?;
    Ok(Outcome::Clean)
}

const CLASSIFY_KEYS: [&str; 5] = ["alpha", "delta", "epsilon", "p", "q"];

fn run_classify(mut a: ClassifyArgs) -> Result<Outcome, CliError> {
    let map = load_config(&a.common, &CLASSIFY_KEYS)?;
    merge_f64(&mut a.alpha, &map, "alpha")?;
    merge_coeffs(&mut a.coeffs, &map)?;
    merge_common(&mut a.common, &map)?;

    let (delta, epsilon, p, q) = require_coeffs(&a.coeffs)?;
    let alpha = require_f64(a.alpha, "alpha")?;
    let params = ModelParams::new(alpha, 0.0, delta, epsilon, p, q);
    params.validate()?;
    let (path, format) = resolve_output(&a.common)?;

    let mut rows = Vec::new();
    for eq in equilibria(&params) {
        let lin = linearize(&params, eq.value);
        let verdict = classify_equilibrium(&params, &eq)?;
        let (kind, tau_star) = verdict_cells(verdict.kind);
        rows.push(vec![
            Cell::Str(branch_code(eq.branch).into()),
            Cell::Num(eq.value),
            Cell::Num(lin.a),
            Cell::Num(lin.b),
            kind,
            tau_star,
            source_cell(verdict.source),
        ]);
    }
    let out = Output {
        meta: vec![
            ("command", MetaValue::Str("classify")),
            ("alpha", MetaValue::Num(alpha)),
            ("delta", MetaValue::Num(delta)),
            ("epsilon", MetaValue::Num(epsilon)),
            ("p", MetaValue::Num(p)),
            ("q", MetaValue::Num(q)),
            ("rows", MetaValue::Int(rows.len() as u64)),
        ],
        columns: &["branch", "value", "a", "b", "verdict", "tau_star", "source"],
        rows,
        csv_preamble: vec![],
    };
    write_output(&out, &path, format)?;
    Ok(Outcome::Clean)
}

const CRIT_DELAY_KEYS: [&str; 7] = ["alpha", "a", "b", "delta", "epsilon", "p", "q"];

fn run_crit_delay(mut args: CritDelayArgs) -> Result<Outcome, CliError> {
    let map = load_config(&args.common, &CRIT_DELAY_KEYS)?;
    merge_f64(&mut args.alpha, &map, "alpha")?;
    merge_f64(&mut args.a, &map, "a")?;
    merge_f64(&mut args.b, &map, "b")?;
    merge_coeffs(&mut args.coeffs, &map)?;
    merge_common(&mut args.common, &map)?;

    let alpha = require_f64(args.alpha, "alpha")?;
    let (path, format) = resolve_output(&args.common)?;
    let columns: &'static [&'static str] = &["branch", "a", "b", "tau_star"];

    let out = match (args.a, args.b) {
        (Some(a), Some(b)) => {
            let tau_star = crit_delay(a, b, alpha)?;
            Output {
                meta: vec![
                    ("command", MetaValue::Str("crit-delay")),
                    ("mode", MetaValue::Str("direct")),
                    ("alpha", MetaValue::Num(alpha)),
                    ("a", MetaValue::Num(a)),
                    ("b", MetaValue::Num(b)),
                    ("rows", MetaValue::Int(1)),
                ],
                columns,
                rows: vec![vec![
                    Cell::Str("-".into()),
                    Cell::Num(a),
                    Cell::Num(b),
                    Cell::Num(tau_star),
                ]],
                csv_preamble: vec![],
            }
        }
        (None, None) => {
            let (delta, epsilon, p, q) = require_coeffs(&args.coeffs)?;
            let params = ModelParams::new(alpha, 0.0, delta, epsilon, p, q);
            params.validate()?;
            let mut rows = Vec::new();
            for eq in equilibria(&params) {
                let lin = linearize(&params, eq.value);
                let verdict = classify_linear(lin.a, lin.b, alpha)?;
                if let StabilityKind::DelayDependent { tau_star } = verdict.kind {
                    rows.push(vec![
                        Cell::Str(branch_code(eq.branch).into()),
                        Cell::Num(lin.a),
                        Cell::Num(lin.b),
                        Cell::Num(tau_star),
                    ]);
                }
            }
            Output {
                meta: vec![
                    ("command", MetaValue::Str("crit-delay")),
                    ("mode", MetaValue::Str("model")),
                    ("alpha", MetaValue::Num(alpha)),
                    ("delta", MetaValue::Num(delta)),
                    ("epsilon", MetaValue::Num(epsilon)),
                    ("p", MetaValue::Num(p)),
                    ("q", MetaValue::Num(q)),
                    ("rows", MetaValue::Int(rows.len() as u64)),
                ],
                columns,
                rows,
                csv_preamble: vec![],
            }
        }
        _ => {
            return Err(CliError::Usage(
                "crit-delay needs both --a and --b for direct mode, or neither plus the \
                 full model coefficients"
                    .into(),
            ))
        }
    };
    write_output(&out, &path, format)?;
    Ok(Outcome::Clean)
}

const REGION_KEYS: [&str; 5] = ["epsilon", "p", "q-range", "delta-range", "grid"];

fn run_region(mut a: RegionArgs) -> Result<Outcome, CliError> {
    let map = load_config(&a.common, &REGION_KEYS)?;
    merge_f64(&mut a.epsilon, &map, "epsilon")?;
    merge_f64(&mut a.p, &map, "p")?;
    if a.q_range.is_none() {
        if let Some(raw) = map.get("q-range") {
            a.q_range = Some(parse_range(raw).map_err(CliError::Validation)?);
        }
    }
    if a.delta_range.is_none() {
        if let Some(raw) = map.get("delta-range") {
            a.delta_range = Some(parse_range(raw).map_err(CliError::Validation)?);
        }
    }
    if a.grid.is_none() {
        if let Some(raw) = map.get("grid") {
            a.grid = Some(parse_grid(raw).map_err(CliError::Validation)?);
        }
    }
    merge_common(&mut a.common, &map)?;

    let epsilon = require_f64(a.epsilon, "epsilon")?;
    let p = require_f64(a.p, "p")?;
    let q_range = a.q_range.ok_or_else(|| {
        CliError::Usage("missing required value for --q-range (flag or config file)".into())
    })?;
    let delta_range = a.delta_range.ok_or_else(|| {
        CliError::Usage("missing required value for --delta-range (flag or config file)".into())
    })?;
    let grid = a.grid.unwrap_or(GridSpec { nq: 200, ndelta: 200 });
    let (path, format) = resolve_output(&a.common)?;

    let sampled = sample_grid(
        p,
        epsilon,
        (q_range.lo, q_range.hi),
        (delta_range.lo, delta_range.hi),
        grid.nq,
        grid.ndelta,
    )?;
    let mut rows = Vec::with_capacity(grid.nq * grid.ndelta);
    for (di, &dv) in sampled.delta_values.iter().enumerate() {
        for (qi, &qv) in sampled.q_values.iter().enumerate() {
            let label = sampled.labels[di * grid.nq + qi];
            rows.push(vec![Cell::Num(qv), Cell::Num(dv), Cell::Str(label.code().into())]);
        }
    }
    let out = Output {
        meta: vec![
            ("command", MetaValue::Str("region")),
            ("epsilon", MetaValue::Num(epsilon)),
            ("p", MetaValue::Num(p)),
            ("q_min", MetaValue::Num(q_range.lo)),
            ("q_max", MetaValue::Num(q_range.hi)),
            ("delta_min", MetaValue::Num(delta_range.lo)),
            ("delta_max", MetaValue::Num(delta_range.hi)),
            ("nq", MetaValue::Int(grid.nq as u64)),
            ("ndelta", MetaValue::Int(grid.ndelta as u64)),
            ("rows", MetaValue::Int(rows.len() as u64)),
        ],
        columns: &["q", "delta", "label"],
        rows,
        csv_preamble: vec![format!(
            "row-major grid, q varies fastest: {} q values per delta level, {} delta levels",
            grid.nq, grid.ndelta
        )],
    };
    write_output(&out, &path, format)?;
    Ok(Outcome::Clean)
}

const SWEEP_KEYS: [&str; 10] = [
    "alpha", "delta", "epsilon", "p", "q", "tau-min", "tau-max", "tau-steps", "h", "t-end",
];

struct ResolvedSweep {
    params: ModelParams,
    taus: Vec<f64>,
    config: SolverConfig,
    path: PathBuf,
    format: OutputFormat,
    meta_head: Vec<(&'static str, MetaValue)>,
}

fn resolve_sweep(mut a: SweepArgs, command: &'static str) -> Result<ResolvedSweep, CliError> {
    let map = load_config(&a.common, &SWEEP_KEYS)?;
    merge_f64(&mut a.alpha, &map, "alpha")?;
    merge_coeffs(&mut a.coeffs, &map)?;
    merge_f64(&mut a.tau_min, &map, "tau-min")?;
    merge_f64(&mut a.tau_max, &map, "tau-max")?;
    merge_usize(&mut a.tau_steps, &map, "tau-steps")?;
    merge_f64(&mut a.h, &map, "h")?;
    merge_f64(&mut a.t_end, &map, "t-end")?;
    merge_common(&mut a.common, &map)?;

    let (delta, epsilon, p, q) = require_coeffs(&a.coeffs)?;
    let alpha = require_f64(a.alpha, "alpha")?;
    let tau_min = require_f64(a.tau_min, "tau-min")?;
    let tau_max = require_f64(a.tau_max, "tau-max")?;
    let tau_steps = a.tau_steps.ok_or_else(|| {
        CliError::Usage("missing required value for --tau-steps (flag or config file)".into())
    })?;
    let taus = sweep_points(tau_min, tau_max, tau_steps)?;
    let h = a.h.unwrap_or(DEFAULT_H);
    let t_end = a.t_end.unwrap_or(DEFAULT_SWEEP_T_END);
    let params = ModelParams::new(alpha, tau_min.max(0.0), delta, epsilon, p, q);
    params.validate()?;
    let config = SolverConfig::new(h, t_end);
    let (path, format) = resolve_output(&a.common)?;
    let meta_head = vec![
        ("command", MetaValue::Str(command)),
        ("alpha", MetaValue::Num(alpha)),
        ("delta", MetaValue::Num(delta)),
        ("epsilon", MetaValue::Num(epsilon)),
        ("p", MetaValue::Num(p)),
        ("q", MetaValue::Num(q)),
        ("h", MetaValue::Num(h)),
        ("t_end", MetaValue::Num(t_end)),
        ("tau_min", MetaValue::Num(tau_min)),
        ("tau_max", MetaValue::Num(tau_max)),
        ("tau_steps", MetaValue::Int(tau_steps as u64)),
        ("transient", MetaValue::Num(TRANSIENT_FRACTION)),
    ];
    Ok(ResolvedSweep { params, taus, config, path, format, meta_head })
}

fn divergence_outcome(divergent: usize, total: usize) -> Outcome {
    if divergent == 0 {
        Outcome::Clean
    } else {
        Outcome::Divergent(format!(
            "{divergent} of {total} sweep points diverged and contribute no rows"
        ))
    }
}

fn run_bifurcation(args: SweepArgs) -> Result<Outcome, CliError> {
    let sweep = resolve_sweep(args, "bifurcation")?;
    let scan = fdde::bifurcation_scan(
        &sweep.params,
        &sweep.taus,
        &sweep.config,
        TRANSIENT_FRACTION,
    )?;
    let divergent = scan.iter().filter(|point| point.divergent).count();
    let mut rows = Vec::new();
    for point in &scan {
        for &extremum in &point.extrema {
            rows.push(vec![Cell::Num(point.tau), Cell::Num(extremum)]);
        }
    }
    let mut meta = sweep.meta_head;
    meta.push(("divergent_points", MetaValue::Int(divergent as u64)));
    meta.push(("rows", MetaValue::Int(rows.len() as u64)));
    let out = Output {
        meta,
        columns: &["tau", "extremum"],
        rows,
        csv_preamble: vec![],
    };
    write_output(&out, &sweep.path, sweep.format)?;
    Ok(divergence_outcome(divergent, sweep.taus.len()))
}

fn run_lyapunov(args: SweepArgs) -> Result<Outcome, CliError> {
    let sweep = resolve_sweep(args, "lyapunov")?;
    let x2 = equilibria(&sweep.params)
        .into_iter()
        .find(|eq| eq.branch == Branch::X2)
        .ok_or_else(|| {
            CliError::Validation("the sweep needs a real X2 equilibrium to start from".into())
        })?;
    let history = HistoryFn::Constant(x2.value + 0.1);
    let mut rows = Vec::new();
    let mut divergent = 0usize;
    for &tau in &sweep.taus {
        let series = integrate(&sweep.params.with_tau(tau), &history, &sweep.config)?;
        if series.divergent {
            divergent += 1;
            continue;
        }
        let skip = (series.len() as f64 * TRANSIENT_FRACTION) as usize;
        let tail = &series.xs[skip..];
        let lag = estimate_lag(tail)?;
        let mle = max_lyapunov(tail, &EmbeddingConfig::with_lag(lag), series.h)?;
        rows.push(vec![Cell::Num(tau), Cell::Num(mle)]);
    }
    let mut meta = sweep.meta_head;
    meta.push(("divergent_points", MetaValue::Int(divergent as u64)));
    meta.push(("rows", MetaValue::Int(rows.len() as u64)));
    let out = Output {
        meta,
        columns: &["tau", "mle"],
        rows,
        csv_preamble: vec![],
    };
    write_output(&out, &sweep.path, sweep.format)?;
    Ok(divergence_outcome(divergent, sweep.taus.len()))
}
