//! `dyadkde` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 domain error (the data
//! fails a method's requirements), 4 internal invariant violation.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Error;
use crate::estimator::{self, BandwidthRule, KernelSums};
use crate::inference::{JackknifeEl, Method};
use crate::kernel::KernelSpec;
use crate::montecarlo::{self, CoverageReport, SimulationConfig};
use crate::sample::{AggregateStat, DyadicSample, EdgeRecord};
use crate::stats;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// Environment variable capping worker threads (0 = automatic).
pub const THREADS_ENV: &str = "DYADKDE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "dyadkde", version, about = "Dyadic kernel density estimation with jackknife empirical likelihood")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Point estimate of the edge-value density at one design point.
    Estimate(EstimateArgs),
    /// Confidence interval at one design point.
    Ci(CiArgs),
    /// Estimates and pointwise intervals over a grid of design points.
    Profile(ProfileArgs),
    /// Rule-of-thumb bandwidth for an edge list.
    Bandwidth(BandwidthArgs),
    /// Monte Carlo coverage experiment.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Edge-list CSV with header `i,j,value`.
    pub csv: PathBuf,
    /// Collapse repeated records per pair (mean, p95 or max).
    #[arg(long, value_parser = parse_aggregate)]
    pub aggregate: Option<AggregateStat>,
    /// Vertex count, for networks with vertices that have no listed edges.
    #[arg(long)]
    pub vertices: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    /// Bandwidth; rule of thumb when omitted.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, default_value = "epanechnikov", value_parser = parse_kernel)]
    pub kernel: KernelSpec,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CiArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,
    #[arg(long, default_value = "mjel", value_parser = parse_method)]
    pub method: Method,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, default_value = "epanechnikov", value_parser = parse_kernel)]
    pub kernel: KernelSpec,
    /// Scan the statistic on 201 points and warn on more than one crossing per side.
    #[arg(long)]
    pub scan: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// `min:max:step` or a comma-separated list of design points.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,
    #[arg(long, default_value = "jel,mjel", value_parser = parse_methods)]
    pub methods: MethodList,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, default_value = "epanechnikov", value_parser = parse_kernel)]
    pub kernel: KernelSpec,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BandwidthArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `key=value` file; flags given on the command line override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<u8>,
    /// One vertex count or a comma-separated list (one table row each).
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub methods: Option<String>,
    /// rot-complete, rot-incomplete or a fixed positive bandwidth.
    #[arg(long)]
    pub bandwidth: Option<String>,
    #[arg(long)]
    pub kernel: Option<String>,
    /// Directory receiving coverage.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; overrides DYADKDE_THREADS (0 = automatic).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodList(pub Vec<Method>);

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!("alpha must lie in (0,1), got {a}"))
    }
}

fn parse_kernel(s: &str) -> Result<KernelSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_aggregate(s: &str) -> Result<AggregateStat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_methods(s: &str) -> Result<MethodList, String> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let m = parse_method(part)?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err("no methods given".into());
    }
    Ok(MethodList(out))
}

/// Failure of a CLI command, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INTERNAL, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_input_error() { EXIT_USAGE } else { EXIT_DOMAIN };
        CliError { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(format!("I/O error: {e}"))
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command,
/// writing normal output to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, out),
        Command::Ci(a) => cmd_ci(a, out, err),
        Command::Profile(a) => cmd_profile(a, out),
        Command::Bandwidth(a) => cmd_bandwidth(a, out),
        Command::Simulate(a) => cmd_simulate(a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

// ---------------------------------------------------------------- input

/// An edge list read from CSV, with the label-to-vertex mapping.
#[derive(Debug, Clone)]
pub struct LoadedNetwork {
    pub sample: DyadicSample,
    /// Original label of vertex k+1, when labels were not plain integers.
    pub labels: Option<Vec<String>>,
}

/// Reads an `i,j,value` edge list.
///
/// If every label is a positive integer the labels are used as vertex ids
/// directly; otherwise labels are sorted and numbered 1..n. `vertices`
/// raises n above the largest id seen.
pub fn load_network(
    path: &Path,
    aggregate: Option<AggregateStat>,
    vertices: Option<usize>,
) -> CliResult<LoadedNetwork> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| CliError::usage(format!("{}: missing column '{name}'", path.display())))
    };
    let (ci, cj, cv) = (col("i")?, col("j")?, col("value")?);

    let mut raw: Vec<(String, String, f64)> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let field = |k: usize| rec.get(k).unwrap_or("").to_string();
        let value: f64 = field(cv).parse().map_err(|_| {
            CliError::usage(format!(
                "{}: row {}: value '{}' is not a number",
                path.display(),
                line + 2,
                field(cv)
            ))
        })?;
        raw.push((field(ci), field(cj), value));
    }

    let numeric: Option<Vec<(usize, usize)>> = raw
        .iter()
        .map(|(a, b, _)| match (a.parse::<usize>(), b.parse::<usize>()) {
            (Ok(x), Ok(y)) if x > 0 && y > 0 => Some((x, y)),
            _ => None,
        })
        .collect();

    let (records, labels, seen) = match numeric {
        Some(ids) => {
            let max = ids.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0);
            let recs: Vec<EdgeRecord> = ids
                .iter()
                .zip(&raw)
                .map(|(&(a, b), r)| EdgeRecord::new(a, b, r.2))
                .collect();
            (recs, None, max)
        }
        None => {
            let set: BTreeSet<&str> = raw
                .iter()
                .flat_map(|(a, b, _)| [a.as_str(), b.as_str()])
                .collect();
            let index: BTreeMap<&str, usize> =
                set.iter().enumerate().map(|(k, &l)| (l, k + 1)).collect();
            let recs = raw
                .iter()
                .map(|(a, b, v)| EdgeRecord::new(index[a.as_str()], index[b.as_str()], *v))
                .collect();
            let labels: Vec<String> = set.iter().map(|s| s.to_string()).collect();
            let count = labels.len();
            (recs, Some(labels), count)
        }
    };
    let n = match vertices {
        Some(v) if v < seen => {
            return Err(CliError::usage(format!(
                "--vertices {v} is smaller than the {seen} vertices in the file"
            )))
        }
        Some(v) => v,
        None => seen,
    };
    let sample = match aggregate {
        Some(stat) => DyadicSample::aggregate_multi_records(&records, stat, n)?,
        None => DyadicSample::from_edge_list(&records, n)?,
    };
    Ok(LoadedNetwork { sample, labels })
}

/// Bandwidth and the name of the rule that produced it.
pub fn choose_bandwidth(sample: &DyadicSample, h: Option<f64>) -> crate::Result<(f64, String)> {
    match h {
        Some(h) => Ok((BandwidthRule::Fixed(h).bandwidth(sample)?, "fixed".into())),
        None => {
            let rule = BandwidthRule::auto_for(sample);
            Ok((rule.bandwidth(sample)?, rule.to_string()))
        }
    }
}

#[derive(Debug, Serialize)]
struct SampleMeta {
    n: usize,
    observed_edges: usize,
    p_hat: f64,
    complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl SampleMeta {
    fn of(net: &LoadedNetwork) -> Self {
        SampleMeta {
            n: net.sample.n(),
            observed_edges: net.sample.n_observed(),
            p_hat: net.sample.observed_fraction(),
            complete: net.sample.is_complete(),
            labels: net.labels.clone(),
        }
    }
}

fn json_line<T: Serialize>(out: &mut dyn Write, value: &T) -> CliResult<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
    writeln!(out, "{s}")?;
    Ok(())
}

fn write_meta_text(out: &mut dyn Write, meta: &SampleMeta) -> CliResult<()> {
    writeln!(out, "n: {}", meta.n)?;
    writeln!(out, "observed edges: {}", meta.observed_edges)?;
    writeln!(out, "p_hat: {}", meta.p_hat)?;
    Ok(())
}

// ---------------------------------------------------------------- estimate

#[derive(Debug, Serialize)]
struct EstimateOutput {
    theta_hat: f64,
    path: &'static str,
    x: f64,
    bandwidth: f64,
    bandwidth_rule: String,
    kernel: String,
    #[serde(flatten)]
    meta: SampleMeta,
}

pub fn cmd_estimate(a: &EstimateArgs, out: &mut dyn Write) -> CliResult<()> {
    let net = load_network(&a.input.csv, a.input.aggregate, a.input.vertices)?;
    let s = &net.sample;
    let (h, rule) = choose_bandwidth(s, a.h)?;
    let sums = KernelSums::new(s, a.kernel, a.x, h)?;
    let (theta_hat, path) = if s.is_complete() {
        (estimator::density_estimate(&sums)?, "complete")
    } else {
        (estimator::density_estimate_incomplete(&sums), "incomplete")
    };
    let o = EstimateOutput {
        theta_hat,
        path,
        x: a.x,
        bandwidth: h,
        bandwidth_rule: rule,
        kernel: a.kernel.to_string(),
        meta: SampleMeta::of(&net),
    };
    match a.format {
        Format::Json => json_line(out, &o)?,
        Format::Csv => {
            writeln!(out, "x,theta_hat,h,bandwidth_rule,path,n,observed_edges,p_hat")?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                o.x, o.theta_hat, o.bandwidth, o.bandwidth_rule, o.path, o.meta.n,
                o.meta.observed_edges, o.meta.p_hat
            )?;
        }
        Format::Text => {
            writeln!(out, "theta_hat: {}", o.theta_hat)?;
            writeln!(out, "x: {}", o.x)?;
            writeln!(out, "path: {}", o.path)?;
            writeln!(out, "bandwidth: {}", o.bandwidth)?;
            writeln!(out, "bandwidth rule: {}", o.bandwidth_rule)?;
            writeln!(out, "kernel: {}", o.kernel)?;
            write_meta_text(out, &o.meta)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- ci

#[derive(Debug, Serialize)]
struct CiOutput {
    method: Method,
    lower: f64,
    upper: f64,
    theta_hat: f64,
    statistic_at_theta_hat: f64,
    critical_value: f64,
    critical_value_kind: &'static str,
    alpha: f64,
    x: f64,
    bandwidth: f64,
    bandwidth_rule: String,
    gamma_m_sq: f64,
    kernel: String,
    #[serde(flatten)]
    meta: SampleMeta,
}

pub fn cmd_ci(a: &CiArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let net = load_network(&a.input.csv, a.input.aggregate, a.input.vertices)?;
    let s = &net.sample;
    let (h, rule) = choose_bandwidth(s, a.h)?;
    let je = JackknifeEl::from_sample(s, a.kernel, a.x, h)?;
    let r = je.invert(a.alpha, a.method)?;
    if !(r.lower <= r.theta_hat && r.theta_hat <= r.upper) {
        return Err(CliError::internal(format!(
            "interval [{}, {}] excludes theta_hat {}",
            r.lower, r.upper, r.theta_hat
        )));
    }
    if a.scan && a.method != Method::Mjk {
        let w = (r.upper - r.lower).max(1e-6);
        let (lo, hi) = ((r.lower - 0.5 * w).max(0.0), r.upper + 0.5 * w);
        let crossings = je.count_crossings(a.method, r.critical_value, lo, hi, 201)?;
        let expected = if r.lower > 0.0 { 2 } else { 1 };
        if crossings > expected {
            writeln!(
                err,
                "warning: statistic crosses the critical value {crossings} times on [{lo}, {hi}]"
            )?;
        }
    }
    let o = CiOutput {
        method: r.method,
        lower: r.lower,
        upper: r.upper,
        theta_hat: r.theta_hat,
        statistic_at_theta_hat: r.statistic,
        critical_value: r.critical_value,
        critical_value_kind: if a.method == Method::Mjk { "z_alpha/2" } else { "c_alpha" },
        alpha: a.alpha,
        x: a.x,
        bandwidth: h,
        bandwidth_rule: rule,
        gamma_m_sq: je.gamma_m_sq(),
        kernel: a.kernel.to_string(),
        meta: SampleMeta::of(&net),
    };
    match a.format {
        Format::Json => json_line(out, &o)?,
        Format::Csv => {
            writeln!(out, "method,x,theta_hat,lower,upper,alpha,critical_value,h")?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                o.method, o.x, o.theta_hat, o.lower, o.upper, o.alpha, o.critical_value, o.bandwidth
            )?;
        }
        Format::Text => {
            writeln!(out, "method: {}", o.method)?;
            writeln!(out, "interval: [{}, {}]", o.lower, o.upper)?;
            writeln!(out, "lower: {}", o.lower)?;
            writeln!(out, "upper: {}", o.upper)?;
            writeln!(out, "theta_hat: {}", o.theta_hat)?;
            writeln!(out, "statistic at theta_hat: {}", o.statistic_at_theta_hat)?;
            writeln!(out, "{}: {}", o.critical_value_kind, o.critical_value)?;
            writeln!(out, "alpha: {}", o.alpha)?;
            writeln!(out, "bandwidth: {}", o.bandwidth)?;
            writeln!(out, "bandwidth rule: {}", o.bandwidth_rule)?;
            write_meta_text(out, &o.meta)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- profile

/// Parses `min:max:step` or a comma-separated list; the result is sorted.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    let mut grid = if spec.contains(':') {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad grid number '{p}'")))
            .collect::<Result<_, _>>()?;
        let [lo, hi, step] = parts[..] else {
            return Err(format!("grid '{spec}' is not min:max:step"));
        };
        if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(format!("grid '{spec}' needs finite min <= max and step > 0"));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| lo + k as f64 * step).collect()
    } else {
        spec.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad grid number '{p}'")))
            .collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty() {
        return Err("empty grid".into());
    }
    grid.sort_by(f64::total_cmp);
    Ok(grid)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    pub x: f64,
    pub theta_hat: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub method: Method,
    pub h: f64,
    pub failed: Option<String>,
}

#[derive(Debug, Serialize)]
struct ProfileOutput {
    alpha: f64,
    kernel: String,
    bandwidth: f64,
    bandwidth_rule: String,
    #[serde(flatten)]
    meta: SampleMeta,
    rows: Vec<ProfileRow>,
}

/// One row per `(grid point, method)`; failures are recorded in-row.
pub fn profile_rows(
    sample: &DyadicSample,
    kernel: KernelSpec,
    grid: &[f64],
    h: f64,
    alpha: f64,
    methods: &[Method],
) -> Vec<ProfileRow> {
    grid.par_iter()
        .flat_map_iter(|&x| {
            let je = JackknifeEl::from_sample(sample, kernel, x, h);
            methods
                .iter()
                .map(|&method| {
                    let mut row = ProfileRow {
                        x,
                        theta_hat: None,
                        lower: None,
                        upper: None,
                        method,
                        h,
                        failed: None,
                    };
                    match &je {
                        Err(e) => row.failed = Some(e.name().into()),
                        Ok(je) => {
                            row.theta_hat = Some(je.theta_hat());
                            match je.invert(alpha, method) {
                                Ok(r) if r.lower <= r.theta_hat && r.theta_hat <= r.upper => {
                                    row.lower = Some(r.lower.max(0.0));
                                    row.upper = Some(r.upper);
                                }
                                Ok(_) => row.failed = Some("InvariantViolation".into()),
                                Err(e) => row.failed = Some(e.name().into()),
                            }
                        }
                    }
                    row
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn cmd_profile(a: &ProfileArgs, out: &mut dyn Write) -> CliResult<()> {
    let grid = parse_grid(&a.grid).map_err(CliError::usage)?;
    let net = load_network(&a.input.csv, a.input.aggregate, a.input.vertices)?;
    let (h, rule) = choose_bandwidth(&net.sample, a.h)?;
    let rows = profile_rows(&net.sample, a.kernel, &grid, h, a.alpha, &a.methods.0);
    let any_ok = rows.iter().any(|r| r.failed.is_none());
    match a.format {
        Format::Json => json_line(
            out,
            &ProfileOutput {
                alpha: a.alpha,
                kernel: a.kernel.to_string(),
                bandwidth: h,
                bandwidth_rule: rule,
                meta: SampleMeta::of(&net),
                rows: rows.clone(),
            },
        )?,
        Format::Csv => {
            writeln!(out, "x,theta_hat,lower,upper,method,h,failed")?;
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.x,
                    opt(r.theta_hat),
                    opt(r.lower),
                    opt(r.upper),
                    r.method,
                    r.h,
                    r.failed.as_deref().unwrap_or("")
                )?;
            }
        }
        Format::Text => {
            writeln!(
                out,
                "{:>12} {:>14} {:>14} {:>14} {:>6}  status",
                "x", "theta_hat", "lower", "upper", "method"
            )?;
            for r in &rows {
                let f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
                writeln!(
                    out,
                    "{:>12} {:>14} {:>14} {:>14} {:>6}  {}",
                    r.x,
                    f(r.theta_hat),
                    f(r.lower),
                    f(r.upper),
                    r.method.label(),
                    r.failed.as_deref().unwrap_or("ok")
                )?;
            }
            writeln!(out, "bandwidth: {h} ({rule})")?;
        }
    }
    if any_ok {
        Ok(())
    } else {
        Err(CliError { code: EXIT_DOMAIN, message: "every profile row failed".into() })
    }
}

// ---------------------------------------------------------------- bandwidth

#[derive(Debug, Serialize)]
struct BandwidthOutput {
    bandwidth: f64,
    rule: String,
    #[serde(flatten)]
    meta: SampleMeta,
}

pub fn cmd_bandwidth(a: &BandwidthArgs, out: &mut dyn Write) -> CliResult<()> {
    let net = load_network(&a.input.csv, a.input.aggregate, a.input.vertices)?;
    let (h, rule) = choose_bandwidth(&net.sample, None)?;
    let o = BandwidthOutput { bandwidth: h, rule, meta: SampleMeta::of(&net) };
    match a.format {
        Format::Json => json_line(out, &o)?,
        Format::Csv => {
            writeln!(out, "bandwidth,rule,n,observed_edges,p_hat")?;
            writeln!(out, "{},{},{},{},{}", o.bandwidth, o.rule, o.meta.n, o.meta.observed_edges, o.meta.p_hat)?;
        }
        Format::Text => {
            writeln!(out, "bandwidth: {}", o.bandwidth)?;
            writeln!(out, "bandwidth rule: {}", o.rule)?;
            write_meta_text(out, &o.meta)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- simulate

/// Reads `key=value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected key=value", k + 1));
        };
        map.insert(key.trim().to_ascii_lowercase(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_field<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim()
        .parse()
        .map_err(|_| CliError::usage(format!("invalid value '{v}' for {key}")))
}

/// Resolves file settings and flag overrides into one config per vertex count.
pub fn simulation_configs(a: &SimulateArgs) -> CliResult<Vec<SimulationConfig>> {
    let mut kv = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
            parse_config_file(&text).map_err(CliError::usage)?
        }
        None => BTreeMap::new(),
    };
    let mut set = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            kv.insert(k.to_string(), v);
        }
    };
    set("beta", a.beta.map(|v| v.to_string()));
    set("n", a.n.clone());
    set("p", a.p.map(|v| v.to_string()));
    set("reps", a.reps.map(|v| v.to_string()));
    set("alpha", a.alpha.map(|v| v.to_string()));
    set("x", a.x.map(|v| v.to_string()));
    set("seed", a.seed.map(|v| v.to_string()));
    set("methods", a.methods.clone());
    set("bandwidth", a.bandwidth.clone());
    set("kernel", a.kernel.clone());

    let mut base = SimulationConfig::default();
    let mut ns = vec![base.n];
    let mut bandwidth = None;
    for (k, v) in &kv {
        match k.as_str() {
            "beta" => base.beta = parse_field(k, v)?,
            "n" => {
                ns = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_field(k, s))
                    .collect::<CliResult<_>>()?;
            }
            "p" => base.p = parse_field(k, v)?,
            "reps" => base.reps = parse_field(k, v)?,
            "alpha" => base.alpha = parse_field(k, v)?,
            "x" => base.x = parse_field(k, v)?,
            "seed" => base.base_seed = parse_field(k, v)?,
            "methods" => base.methods = parse_methods(v).map_err(CliError::usage)?.0,
            "bandwidth" => bandwidth = Some(v.parse::<BandwidthRule>()?),
            "kernel" => base.kernel = v.parse()?,
            other => return Err(CliError::usage(format!("unknown config key '{other}'"))),
        }
    }
    base.bandwidth_rule = bandwidth.unwrap_or(if base.p >= 1.0 {
        BandwidthRule::RotComplete
    } else {
        BandwidthRule::RotIncomplete
    });
    if ns.is_empty() {
        return Err(CliError::usage("no vertex counts given"));
    }
    ns.iter()
        .map(|&n| {
            let c = SimulationConfig { n, ..base.clone() };
            c.validate()?;
            Ok(c)
        })
        .collect()
}

/// Thread count from the flag, else the environment, else automatic.
pub fn thread_count(flag: Option<usize>) -> CliResult<usize> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => parse_field(THREADS_ENV, &v),
        _ => Ok(0),
    }
}

/// Runs every configuration and returns the reports in input order.
pub fn run_simulations(configs: &[SimulationConfig], threads: usize) -> CliResult<Vec<CoverageReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::internal(e.to_string()))?;
    pool.install(|| {
        configs
            .iter()
            .map(|c| montecarlo::coverage_experiment(c).map_err(CliError::from))
            .collect()
    })
}

/// Serialized form written to `coverage.json`.
pub fn coverage_json(reports: &[CoverageReport]) -> CliResult<String> {
    serde_json::to_string_pretty(reports).map_err(|e| CliError::internal(e.to_string()))
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let configs = simulation_configs(a)?;
    let threads = thread_count(a.threads)?;
    let reports = run_simulations(&configs, threads)?;
    for r in &reports {
        for m in &r.methods {
            if m.covered + m.not_covered + m.failures != r.config.reps {
                return Err(CliError::internal("replication tally does not add up"));
            }
        }
    }
    let json = coverage_json(&reports)?;
    fs::create_dir_all(&a.out)?;
    let path = a.out.join("coverage.json");
    fs::write(&path, format!("{json}\n"))?;
    match a.format {
        Format::Json => writeln!(out, "{json}")?,
        _ => {
            write!(out, "{}", montecarlo::format_table(&reports))?;
            let secs: f64 = reports.iter().map(|r| r.wall_clock_seconds).sum();
            writeln!(out, "theta_true: {}", reports[0].theta_true)?;
            writeln!(out, "critical value: {}", reports[0].critical_value)?;
            writeln!(out, "wall clock: {secs:.2}s")?;
        }
    }
    writeln!(err, "wrote {}", path.display())?;
    Ok(())
}

/// z_{α/2} and c_α for a given α, exposed for golden tests.
pub fn critical_values(alpha: f64) -> (f64, f64) {
    (stats::normal_critical(alpha), stats::chi2_1_critical(alpha))
}
