//! The `nlrm` command line.
//!
//! Every command prints one JSON line (an [`ExperimentReport`]) on standard
//! output. Exit codes: 0 success, including a solve that did not converge;
//! 1 runtime or data error; 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::datagen::{detect_jump, gen_synthetic, NoiseConvention, SyntheticSpec};
use crate::error::Error;
use crate::experiment::{run_experiment, ExperimentOptions, Scale, Suite, NLRM};
use crate::matio::{read_matrix, write_matrix, MatrixFormat};
use crate::matrix::DenseMatrix;
use crate::nmf::{nmf_residual_curve, nmf_solve, reorder_components, NmfAlgorithm, NmfConfig};
use crate::report::{write_report, CurveEntry, ExperimentReport, MethodStats, SpectrumEntry};
use crate::solver::{nlrm_solve, residual_curve, NlrmConfig};
use crate::svd::svd_full;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "nlrm",
    version,
    about = "Nonnegative low-rank matrix approximation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic matrix.
    Gen(GenArgs),
    /// Nearest nonnegative rank-R matrix by alternating projections.
    Approx(ApproxArgs),
    /// NMF baseline with restarts.
    Nmf(NmfArgs),
    /// Singular values of the input and of its approximation, with the largest jump.
    Spectrum(SpectrumArgs),
    /// Residual against the number of leading components.
    Curve(CurveArgs),
    /// Run a seeded comparison suite.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    /// Planted rank; omit for a full-rank uniform matrix.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, value_enum, default_value_t = ConventionArg::Variance)]
    pub noise_convention: ConventionArg,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long)]
    pub rank: usize,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = NlrmConfig::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = NlrmConfig::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NmfArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub algo: AlgoArg,
    #[command(flatten)]
    pub nmf: NmfRunArgs,
}

#[derive(Debug, Args)]
pub struct NmfRunArgs {
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "nmf-max-iter", default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long = "nmf-tol", default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated baselines to add, e.g. `mu,hals,pg`.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub with_nmf: Vec<AlgoArg>,
    #[command(flatten)]
    pub nmf: NmfRunArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub suite: SuiteArg,
    #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
    pub scale: ScaleArg,
    #[arg(long)]
    pub seed: u64,
    /// Input matrix of the face-style suite.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub instances: Option<usize>,
    /// Restrict synthetic suites to these sizes, e.g. `100x80,200x160`.
    #[arg(long, value_delimiter = ',', value_parser = parse_dims)]
    pub dims: Vec<(usize, usize)>,
    #[arg(long, value_enum, default_value_t = ConventionArg::Variance)]
    pub noise_convention: ConventionArg,
    #[arg(long = "nmf-max-iter", default_value_t = 500)]
    pub nmf_max_iter: usize,
    /// MU iteration budget; defaults to --nmf-max-iter.
    #[arg(long = "mu-max-iter")]
    pub mu_max_iter: Option<usize>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn parse_dims(s: &str) -> std::result::Result<(usize, usize), String> {
    let (m, n) = s
        .split_once('x')
        .ok_or_else(|| format!("expected ROWSxCOLS, got '{s}'"))?;
    let parse = |v: &str| v.parse::<usize>().map_err(|e| format!("'{v}': {e}"));
    Ok((parse(m)?, parse(n)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum FormatArg {
    Csv,
    Bin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum AlgoArg {
    Mu,
    Hals,
    Pg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ConventionArg {
    Variance,
    StdDev,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SuiteArg {
    Table1,
    Table4,
    FaceStyle,
    Figure1,
    Figure23,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ScaleArg {
    Desk,
    Full,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => MatrixFormat::Csv,
            FormatArg::Bin => MatrixFormat::Bin,
        }
    }
}

impl From<AlgoArg> for NmfAlgorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Mu => NmfAlgorithm::Mu,
            AlgoArg::Hals => NmfAlgorithm::Hals,
            AlgoArg::Pg => NmfAlgorithm::Pg,
        }
    }
}

impl From<ConventionArg> for NoiseConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Variance => NoiseConvention::Variance,
            ConventionArg::StdDev => NoiseConvention::StdDev,
        }
    }
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Table1 => Suite::Table1,
            SuiteArg::Table4 => Suite::Table4,
            SuiteArg::FaceStyle => Suite::FaceStyle,
            SuiteArg::Figure1 => Suite::Figure1,
            SuiteArg::Figure23 => Suite::Figure23,
        }
    }
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Full => Scale::Full,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `std::env::args`, runs, and returns the process exit code.
pub fn main() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    match execute(&cli.command) {
        Ok(report) => {
            let line = match report.to_line() {
                Ok(line) => line,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_RUNTIME;
                }
            };
            let mut out = std::io::stdout().lock();
            if writeln!(out, "{line}").is_err() {
                return EXIT_RUNTIME;
            }
            eprintln!("elapsed: {:.3} s", started.elapsed().as_secs_f64());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: &Command) -> CliResult<ExperimentReport> {
    match cmd {
        Command::Gen(args) => cmd_gen(args),
        Command::Approx(args) => cmd_approx(args),
        Command::Nmf(args) => cmd_nmf(args),
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Curve(args) => cmd_curve(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}

fn cmd_gen(args: &GenArgs) -> CliResult<ExperimentReport> {
    let spec = SyntheticSpec {
        m: args.rows,
        n: args.cols,
        actual_rank: args.rank,
        noise_level: args.noise,
        noise_convention: args.noise_convention.into(),
        seed: args.seed,
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let format = args
        .format
        .map_or_else(|| MatrixFormat::from_path(&args.out), Into::into);
    let a = gen_synthetic(&spec)?;
    write_matrix(&a, &args.out, format)?;
    let mut report = ExperimentReport::new("gen", args.seed);
    report.echo("rows", args.rows);
    report.echo("cols", args.cols);
    report.echo("rank", args.rank);
    report.echo("noise", args.noise);
    report.echo("noise_convention", spec.noise_convention);
    report.echo("out", args.out.display().to_string());
    report.echo("format", format);
    Ok(report)
}

fn load(input: &InputArgs) -> CliResult<DenseMatrix> {
    let format = input
        .format
        .map_or_else(|| MatrixFormat::from_path(&input.input), Into::into);
    let a = read_matrix(&input.input, format)?;
    let k = a.rows().min(a.cols());
    if input.rank == 0 || input.rank > k {
        return Err(usage(format!(
            "--rank {} outside 1..={k} for a {}x{} input",
            input.rank,
            a.rows(),
            a.cols()
        )));
    }
    Ok(a)
}

fn base_report(name: &str, seed: u64, input: &InputArgs, a: &DenseMatrix) -> ExperimentReport {
    let mut report = ExperimentReport::new(name, seed);
    report.echo("in", input.input.display().to_string());
    report.echo("dims", [a.rows(), a.cols()]);
    report.echo("rank", input.rank);
    report
}

fn finish(report: ExperimentReport, path: Option<&PathBuf>) -> CliResult<ExperimentReport> {
    if let Some(p) = path {
        write_report(&report, p)?;
    }
    Ok(report)
}

fn nlrm_config(rank: usize, tol: f64, max_iter: usize) -> CliResult<NlrmConfig> {
    let cfg = NlrmConfig::new(rank)?.with_tol(tol).with_max_iter(max_iter);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn cmd_approx(args: &ApproxArgs) -> CliResult<ExperimentReport> {
    let a = load(&args.input)?;
    let cfg = nlrm_config(args.input.rank, args.tol, args.max_iter)?;
    let res = nlrm_solve(&a, &cfg)?;
    let residual = res.relative_residual(&a)?;
    if let Some(out) = &args.out {
        write_matrix(&res.x, out, MatrixFormat::from_path(out))?;
    }
    let mut report = base_report("approx", 0, &args.input, &a);
    report.echo("tol", args.tol);
    report.echo("max_iter", args.max_iter);
    report.note("residual", residual);
    report.note("iterations", res.iterations);
    report.note("converged", res.converged);
    report.note("collapsed", res.collapsed);
    report.methods.push(MethodStats::from_residuals(
        "input",
        NLRM,
        vec![residual],
        vec![res.iterations],
    ));
    finish(report, args.input.report.as_ref())
}

fn nmf_config(rank: usize, algo: NmfAlgorithm, run: &NmfRunArgs) -> CliResult<NmfConfig> {
    if run.restarts == 0 {
        return Err(usage("--restarts must be at least 1"));
    }
    if run.max_iter == 0 {
        return Err(usage("--nmf-max-iter must be at least 1"));
    }
    if run.tol.is_nan() || run.tol < 0.0 {
        return Err(usage("--nmf-tol must be nonnegative"));
    }
    Ok(NmfConfig::new(rank, algo)
        .with_restarts(run.restarts)
        .with_seed(run.seed)
        .with_max_iter(run.max_iter)
        .with_tol(run.tol))
}

fn echo_nmf(report: &mut ExperimentReport, run: &NmfRunArgs) {
    report.echo("restarts", run.restarts);
    report.echo("nmf_max_iter", run.max_iter);
    report.echo("nmf_tol", run.tol);
}

fn cmd_nmf(args: &NmfArgs) -> CliResult<ExperimentReport> {
    let a = load(&args.input)?;
    let algo: NmfAlgorithm = args.algo.into();
    let cfg = nmf_config(args.input.rank, algo, &args.nmf)?;
    let res = nmf_solve(&a, &cfg)?;
    let mut report = base_report("nmf", args.nmf.seed, &args.input, &a);
    report.echo("algo", algo.name());
    echo_nmf(&mut report, &args.nmf);
    let stats = MethodStats::from_residuals(
        "input",
        algo.name(),
        res.per_restart_residuals.clone(),
        res.iterations,
    );
    report.note("mean", stats.mean);
    report.note("min", stats.min);
    report.note("max", stats.max);
    report.methods.push(stats);
    finish(report, args.input.report.as_ref())
}

fn cmd_spectrum(args: &SpectrumArgs) -> CliResult<ExperimentReport> {
    let a = load(&args.input)?;
    let res = nlrm_solve(&a, &NlrmConfig::new(args.input.rank)?)?;
    let mut report = base_report("spectrum", 0, &args.input, &a);
    report.note("converged", res.converged);
    let input_sigma = svd_full(&a)?.sigma;
    for (source, sigma) in [("A", input_sigma), ("X", res.svd_of_x.sigma.clone())] {
        if sigma.len() < 2 {
            report.note(
                &format!("{source}/jump"),
                "needs at least two singular values",
            );
            continue;
        }
        let spectrum = match detect_jump(&sigma) {
            Ok(s) => s,
            Err(Error::Degenerate(msg)) => {
                report.note(&format!("{source}/jump"), msg);
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        report.spectra.push(SpectrumEntry {
            cell: "input".into(),
            source: source.into(),
            spectrum,
        });
    }
    report.methods.push(MethodStats::from_residuals(
        "input",
        NLRM,
        vec![res.relative_residual(&a)?],
        vec![res.iterations],
    ));
    finish(report, args.input.report.as_ref())
}

fn cmd_curve(args: &CurveArgs) -> CliResult<ExperimentReport> {
    let a = load(&args.input)?;
    let res = nlrm_solve(&a, &NlrmConfig::new(args.input.rank)?)?;
    let mut report = base_report("curve", args.nmf.seed, &args.input, &a);
    report.echo(
        "with_nmf",
        args.with_nmf
            .iter()
            .map(|&x| NmfAlgorithm::from(x).name())
            .collect::<Vec<_>>(),
    );
    if !args.with_nmf.is_empty() {
        echo_nmf(&mut report, &args.nmf);
    }
    report.curves.push(CurveEntry {
        cell: "input".into(),
        method: NLRM.into(),
        points: residual_curve(&a, &res)?,
    });
    for &algo in &args.with_nmf {
        let algo: NmfAlgorithm = algo.into();
        let fit = nmf_solve(&a, &nmf_config(args.input.rank, algo, &args.nmf)?)?;
        report.curves.push(CurveEntry {
            cell: "input".into(),
            method: algo.name().into(),
            points: nmf_residual_curve(&a, &reorder_components(&fit))?,
        });
    }
    finish(report, args.input.report.as_ref())
}

fn cmd_experiment(args: &ExperimentArgs) -> CliResult<ExperimentReport> {
    let suite: Suite = args.suite.into();
    if suite == Suite::FaceStyle && args.input.is_none() {
        return Err(usage("--suite face-style needs --in PATH"));
    }
    if args.restarts == Some(0)
        || args.instances == Some(0)
        || args.nmf_max_iter == 0
        || args.mu_max_iter == Some(0)
    {
        return Err(usage(
            "--restarts, --instances, --nmf-max-iter and --mu-max-iter must be at least 1",
        ));
    }
    let mut opts = ExperimentOptions::new(suite, args.scale.into(), args.seed);
    opts.input = args.input.clone();
    opts.restarts = args.restarts;
    opts.instances = args.instances;
    if !args.dims.is_empty() {
        opts.dims = Some(args.dims.clone());
    }
    opts.convention = args.noise_convention.into();
    opts.nmf_max_iter = args.nmf_max_iter;
    opts.mu_max_iter = args.mu_max_iter;
    let report = run_experiment(&opts)?;
    finish(report, args.report.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_are_usage_errors() {
        assert_eq!(run_from(["nlrm", "frobnicate"]), EXIT_USAGE);
        assert_eq!(
            run_from(["nlrm", "experiment", "--suite", "table9", "--seed", "1"]),
            EXIT_USAGE
        );
        assert_eq!(run_from(["nlrm", "gen", "--rows", "10"]), EXIT_USAGE);
        assert_eq!(run_from(["nlrm", "--help"]), EXIT_OK);
    }

    #[test]
    fn gen_rank_validation_is_usage() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("a.csv");
        let cli = Cli::try_parse_from([
            "nlrm",
            "gen",
            "--rows",
            "100",
            "--cols",
            "80",
            "--rank",
            "200",
            "--seed",
            "1",
            "--out",
            out.to_str().unwrap(),
        ])
        .unwrap();
        assert!(matches!(execute(&cli.command), Err(CliError::Usage(_))));
        assert!(!out.exists());
    }

    #[test]
    fn unreadable_input_is_runtime() {
        let cli = Cli::try_parse_from([
            "nlrm",
            "approx",
            "--in",
            "/nonexistent/a.csv",
            "--rank",
            "2",
        ])
        .unwrap();
        assert_eq!(execute(&cli.command).unwrap_err().exit_code(), EXIT_RUNTIME);
    }

    #[test]
    fn dims_parse() {
        assert_eq!(parse_dims("100x80"), Ok((100, 80)));
        assert!(parse_dims("100").is_err());
        assert!(parse_dims("ax80").is_err());
    }

    #[test]
    fn with_nmf_list_parses() {
        let cli = Cli::try_parse_from([
            "nlrm",
            "curve",
            "--in",
            "a.csv",
            "--rank",
            "2",
            "--with-nmf",
            "mu,hals,pg",
        ])
        .unwrap();
        match cli.command {
            Command::Curve(c) => assert_eq!(c.with_nmf, [AlgoArg::Mu, AlgoArg::Hals, AlgoArg::Pg]),
            other => panic!("{other:?}"),
        }
    }
}
