//! Command-line front end: `solve`, `approx`, `simulate`, `compare`, `tables`
//! and `diagnose`.
//!
//! Exit statuses: 0 success, 1 invalid input, 2 solver did not converge
//! (outputs still written), 3 a diagnostic check failed.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::approx::{dG_dc_zero, first_order_boundary, naive_boundary};
use crate::diagnostics::{run_diagnostics, DiagError};
use crate::model::{ModelParams, ParamError, Position};
use crate::numerics::{fmt_f64, GridSpec, NumericsError};
use crate::oracle::{build_discrete, compare_with_solver, relative_value_iteration, OracleError};
use crate::simulate::{
    compare_policies, result_csv_line, run_simulation, run_table, PolicySpec, SimConfig, SimError, TableRow,
    RESULT_CSV_HEADER, TABLE1_RHO1, TABLE2_RHO1, TABLE_COST,
};
use crate::solver::{solve_fixed_point, BiasBoundary, SolveReport, SolverConfig, SolverError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Config { path: String, line: usize, message: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("--seed is required for `{0}`")]
    MissingSeed(&'static str),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Diag(#[from] DiagError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(SolverError::NotConverged { .. }) => EXIT_NOT_CONVERGED,
            _ => EXIT_INVALID,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "notrade", version, about = "No-trade-zone boundary solver and policy simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Solve the fixed point and write boundary.csv + summary.json
    Solve(CommonArgs),
    /// Naive, first-order and solved boundaries side by side (boundaries.csv)
    Approx(CommonArgs),
    /// Monte Carlo evaluation of one policy (simulate.csv)
    Simulate(CommonArgs),
    /// Solver, first-order and naive policies on common random numbers (compare.csv)
    Compare(CommonArgs),
    /// Reproduction tables over the rho0^2 + rho1^2 = 0.8 grid (table1.csv, table2.csv)
    Tables(CommonArgs),
    /// Symmetry, contraction and oracle checks (diagnostics.json, oracle.csv)
    Diagnose(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Approx(_) => "approx",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
            Command::Tables(_) => "tables",
            Command::Diagnose(_) => "diagnose",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Solve(a)
            | Command::Approx(a)
            | Command::Simulate(a)
            | Command::Compare(a)
            | Command::Tables(a)
            | Command::Diagnose(a) => a,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyArg {
    Naive,
    FirstOrder,
    Solver,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub rho0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rho1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub cost: Option<f64>,
    /// Convergence tolerance on both sup-norm updates
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub grid_nodes: Option<usize>,
    #[arg(long)]
    pub grid_extent: Option<f64>,
    /// Gauss-Legendre points per grid cell
    #[arg(long)]
    pub quad_nodes: Option<usize>,
    /// Measured simulation steps
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file; flags override its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    /// Perturbation pairs for the contraction measurement
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Simulate the predictable part of the return only
    #[arg(long)]
    pub no_noise: bool,
}

/// Fully resolved and validated invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: &'static str,
    pub params: ModelParams,
    pub solver: SolverConfig,
    pub steps: usize,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub policy: PolicyArg,
    pub pairs: usize,
    pub include_noise: bool,
}

const CONFIG_KEYS: [&str; 14] = [
    "rho0",
    "rho1",
    "cost",
    "eps",
    "max_iter",
    "grid_nodes",
    "grid_extent",
    "quad_nodes",
    "steps",
    "seed",
    "out",
    "policy",
    "pairs",
    "no_noise",
];

/// Parses flat `key = value` text. `#` and `;` start comments, `[section]`
/// headers are ignored, `-` and `_` are interchangeable in keys.
pub fn parse_config_text(text: &str, path: &str) -> Result<CommonArgs, CliError> {
    let mut args = CommonArgs::default();
    let mut seen = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| CliError::Config { path: path.to_string(), line: line_no, message };
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(format!("expected `key = value`, got `{line}`")));
        };
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(err(format!("unknown field `{key}`")));
        }
        if let Some(prev) = seen.insert(key.clone(), line_no) {
            return Err(err(format!("field `{key}` already set on line {prev}")));
        }
        let float = |v: &str| v.parse::<f64>().map_err(|_| err(format!("field `{key}`: `{v}` is not a number")));
        let int = |v: &str| v.parse::<u64>().map_err(|_| err(format!("field `{key}`: `{v}` is not a non-negative integer")));
        match key.as_str() {
            "rho0" => args.rho0 = Some(float(value)?),
            "rho1" => args.rho1 = Some(float(value)?),
            "cost" => args.cost = Some(float(value)?),
            "eps" => args.eps = Some(float(value)?),
            "grid_extent" => args.grid_extent = Some(float(value)?),
            "max_iter" => args.max_iter = Some(int(value)? as usize),
            "grid_nodes" => args.grid_nodes = Some(int(value)? as usize),
            "quad_nodes" => args.quad_nodes = Some(int(value)? as usize),
            "steps" => args.steps = Some(int(value)? as usize),
            "pairs" => args.pairs = Some(int(value)? as usize),
            "seed" => args.seed = Some(int(value)?),
            "out" => args.out = Some(PathBuf::from(value)),
            "policy" => {
                args.policy = Some(
                    PolicyArg::from_str(value, true).map_err(|_| err(format!("field `policy`: unknown policy `{value}`")))?,
                )
            }
            "no_noise" => {
                args.no_noise = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(err(format!("field `no_noise`: `{value}` is not a boolean"))),
                }
            }
            _ => unreachable!(),
        }
    }
    Ok(args)
}

fn merge(flags: &CommonArgs, file: CommonArgs) -> CommonArgs {
    CommonArgs {
        rho0: flags.rho0.or(file.rho0),
        rho1: flags.rho1.or(file.rho1),
        cost: flags.cost.or(file.cost),
        eps: flags.eps.or(file.eps),
        max_iter: flags.max_iter.or(file.max_iter),
        grid_nodes: flags.grid_nodes.or(file.grid_nodes),
        grid_extent: flags.grid_extent.or(file.grid_extent),
        quad_nodes: flags.quad_nodes.or(file.quad_nodes),
        steps: flags.steps.or(file.steps),
        seed: flags.seed.or(file.seed),
        out: flags.out.clone().or(file.out),
        config: None,
        policy: flags.policy.or(file.policy),
        pairs: flags.pairs.or(file.pairs),
        no_noise: flags.no_noise || file.no_noise,
    }
}

/// Merges the config file (if any) under the flags and validates every field.
pub fn resolve(command: &Command) -> Result<RunConfig, CliError> {
    let flags = command.args();
    let args = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            merge(flags, parse_config_text(&text, &path.display().to_string())?)
        }
        None => flags.clone(),
    };
    let name = command.name();
    let default_cost = if name == "tables" { TABLE_COST } else { 0.5 };
    let params = ModelParams::new(args.rho0.unwrap_or(0.8), args.rho1.unwrap_or(0.4), args.cost.unwrap_or(default_cost))?;
    let defaults = SolverConfig::default();
    let grid = GridSpec::new(
        args.grid_nodes.unwrap_or(defaults.grid.nodes),
        args.grid_extent.unwrap_or(defaults.grid.extent),
    )
    .map_err(|e| CliError::Invalid(format!("grid: {e}")))?;
    let solver = SolverConfig {
        epsilon: args.eps.unwrap_or(defaults.epsilon),
        max_iterations: args.max_iter.unwrap_or(defaults.max_iterations),
        grid,
        quad_nodes: args.quad_nodes.unwrap_or(defaults.quad_nodes),
        ..defaults
    };
    solver.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
    let steps = args.steps.unwrap_or(1_000_000);
    if steps == 0 {
        return Err(CliError::Invalid("--steps must be positive".into()));
    }
    if matches!(name, "simulate" | "compare" | "tables") && args.seed.is_none() {
        return Err(CliError::MissingSeed(name));
    }
    let pairs = args.pairs.unwrap_or(24);
    if pairs < 10 {
        return Err(CliError::Invalid(format!("--pairs must be at least 10 (got {pairs})")));
    }
    Ok(RunConfig {
        command: name,
        params,
        solver,
        steps,
        seed: args.seed,
        out: args.out.unwrap_or_else(|| PathBuf::from("out")),
        policy: args.policy.unwrap_or(PolicyArg::Solver),
        pairs,
        include_noise: !args.no_noise,
    })
}

/// Writes `contents` to `path.partial`, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.display().to_string(), source };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut partial = path.as_os_str().to_owned();
    partial.push(".partial");
    let partial = PathBuf::from(partial);
    std::fs::write(&partial, contents).map_err(io)?;
    std::fs::rename(&partial, path).map_err(io)
}

fn params_json(p: &ModelParams) -> Value {
    json!({ "rho0": p.rho0(), "rho1": p.rho1(), "c": p.cost() })
}

fn write_summary(cfg: &RunConfig, results: Value, started: Instant) -> Result<(), CliError> {
    let summary = json!({
        "command": cfg.command,
        "params": params_json(&cfg.params),
        "results": results,
        "versions": { "notrade": env!("CARGO_PKG_VERSION"), "summary_format": 1 },
        "timings": { "total_seconds": started.elapsed().as_secs_f64() },
    });
    write_atomic(&cfg.out.join("summary.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))
}

/// Solves; a non-converged iterate is returned together with `false`.
fn solve_lenient(cfg: &RunConfig) -> Result<(BiasBoundary, SolveReport, bool), CliError> {
    match solve_fixed_point(&cfg.solver, &cfg.params) {
        Ok((bb, report)) => Ok((bb, report, true)),
        Err(SolverError::NotConverged { boundary, report }) => Ok((*boundary, report, false)),
        Err(e) => Err(e.into()),
    }
}

fn solve_json(report: &SolveReport) -> Value {
    json!({
        "lambda": report.lambda,
        "iterations": report.iterations,
        "converged": report.converged,
        "epsilon": report.epsilon,
        "final_residual_h": report.last_residual_h(),
        "final_residual_g": report.last_residual_g(),
        "geometric_rate": report.geometric_rate(1),
        "warnings": report.warnings,
    })
}

fn convergence_status(converged: bool) -> i32 {
    if converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<i32, CliError> {
    let started = Instant::now();
    let (bb, report, converged) = solve_lenient(cfg)?;
    write_atomic(&cfg.out.join("boundary.csv"), &bb.to_csv())?;
    write_summary(cfg, solve_json(&report), started)?;
    Ok(convergence_status(converged))
}

/// `x` and both slices of the naive, first-order and solved boundaries.
pub fn boundaries_csv(bb: &BiasBoundary) -> String {
    let p = bb.params();
    let mut s = String::from(
        "x,G_naive_long,G_naive_short,G_first_order_long,G_first_order_short,G_solver_long,G_solver_short\n",
    );
    for &x in bb.nodes() {
        let cols = [
            naive_boundary(x, Position::Long, p),
            naive_boundary(x, Position::Short, p),
            first_order_boundary(x, Position::Long, p.cost(), p),
            first_order_boundary(x, Position::Short, p.cost(), p),
            bb.boundary(x, Position::Long),
            bb.boundary(x, Position::Short),
        ];
        let _ = write!(s, "{}", fmt_f64(x));
        for v in cols {
            let _ = write!(s, ",{}", fmt_f64(v));
        }
        s.push('\n');
    }
    s
}

pub fn cmd_approx(cfg: &RunConfig) -> Result<i32, CliError> {
    let started = Instant::now();
    let (bb, report, converged) = solve_lenient(cfg)?;
    let p = &cfg.params;
    let window = bb.nodes().iter().copied().filter(|x| x.abs() <= 2.0);
    let (mut gap_fo, mut gap_naive) = (0.0f64, 0.0f64);
    for x in window {
        let g = bb.boundary(x, Position::Long);
        gap_fo = gap_fo.max((first_order_boundary(x, Position::Long, p.cost(), p) - g).abs());
        gap_naive = gap_naive.max((naive_boundary(x, Position::Long, p) - g).abs());
    }
    write_atomic(&cfg.out.join("boundaries.csv"), &boundaries_csv(&bb))?;
    let results = json!({
        "solve": solve_json(&report),
        "dG_dc_at_origin": dG_dc_zero(0.0, p),
        "sup_gap_first_order_vs_solver_on_[-2,2]": gap_fo,
        "sup_gap_naive_vs_solver_on_[-2,2]": gap_naive,
    });
    write_summary(cfg, results, started)?;
    Ok(convergence_status(converged))
}

fn sim_config(cfg: &RunConfig) -> SimConfig {
    let mut sc = SimConfig::new(cfg.params, cfg.steps, cfg.seed.expect("seed validated in resolve"));
    sc.include_noise = cfg.include_noise;
    sc
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<i32, CliError> {
    let started = Instant::now();
    let mut status = EXIT_OK;
    let mut solve = Value::Null;
    let policy = match cfg.policy {
        PolicyArg::Naive => PolicySpec::naive(&cfg.params)?,
        PolicyArg::FirstOrder => PolicySpec::first_order(&cfg.params)?,
        PolicyArg::Solver => {
            let (bb, report, converged) = solve_lenient(cfg)?;
            status = convergence_status(converged);
            solve = solve_json(&report);
            PolicySpec::solver(&bb)
        }
    };
    let sc = sim_config(cfg);
    let result = run_simulation(&policy, &sc)?;
    let csv = format!("{RESULT_CSV_HEADER}\n{}\n", result_csv_line(&cfg.params, policy.name(), &result, sc.seed));
    write_atomic(&cfg.out.join("simulate.csv"), &csv)?;
    let results = json!({ "policy": policy.name(), "simulation": result, "seed": sc.seed, "solve": solve });
    write_summary(cfg, results, started)?;
    Ok(status)
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<i32, CliError> {
    let started = Instant::now();
    let (bb, report, converged) = solve_lenient(cfg)?;
    let policies = [PolicySpec::solver(&bb), PolicySpec::first_order(&cfg.params)?, PolicySpec::naive(&cfg.params)?];
    let sc = sim_config(cfg);
    let cmp = compare_policies(&policies, &sc)?;
    let mut csv = format!("{RESULT_CSV_HEADER}\n");
    for (name, r) in cmp.names.iter().zip(&cmp.results) {
        csv.push_str(&result_csv_line(&cfg.params, name, r, sc.seed));
        csv.push('\n');
    }
    write_atomic(&cfg.out.join("compare.csv"), &csv)?;
    let results = json!({ "comparison": cmp, "seed": sc.seed, "solve": solve_json(&report) });
    write_summary(cfg, results, started)?;
    Ok(convergence_status(converged))
}

fn paired_rows(rows: &[TableRow]) -> Vec<(&TableRow, &TableRow)> {
    rows.chunks(2)
        .filter_map(|pair| match pair {
            [a, b] if a.policy == "first_order" && b.policy == "naive" => Some((a, b)),
            _ => None,
        })
        .collect()
}

/// Gross and net returns, one line per `(ρ0, ρ1)` row, optimal (first-order) then naive.
pub fn table1_csv(rows: &[TableRow]) -> String {
    let mut s = String::from(
        "rho0,rho1,gross_optimal,gross_naive,net_optimal,net_naive,se_gross_optimal,se_gross_naive,se_net_optimal,se_net_naive,n_steps,seed\n",
    );
    for (o, n) in paired_rows(rows) {
        let vals = [
            o.rho0,
            o.rho1,
            o.result.gross,
            n.result.gross,
            o.result.net,
            n.result.net,
            o.result.std_error_gross,
            n.result.std_error_gross,
            o.result.std_error_net,
            n.result.std_error_net,
        ];
        let cols: Vec<String> = vals.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(s, "{},{},{}", cols.join(","), o.result.n_steps, o.seed);
    }
    s
}

/// Per-period transaction cost, one line per `(ρ0, ρ1)` row.
pub fn table2_csv(rows: &[TableRow]) -> String {
    let mut s = String::from("rho0,rho1,cost_optimal,cost_naive,se_cost_optimal,se_cost_naive,n_steps,seed\n");
    for (o, n) in paired_rows(rows) {
        let vals = [o.rho0, o.rho1, o.result.cost, n.result.cost, o.result.std_error_cost, n.result.std_error_cost];
        let cols: Vec<String> = vals.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(s, "{},{},{}", cols.join(","), o.result.n_steps, o.seed);
    }
    s
}

pub fn cmd_tables(cfg: &RunConfig) -> Result<i32, CliError> {
    let started = Instant::now();
    let seed = cfg.seed.expect("seed validated in resolve");
    let c = cfg.params.cost();
    let rows1 = run_table(&TABLE1_RHO1, c, cfg.steps, seed)?;
    let rows2 = run_table(&TABLE2_RHO1, c, cfg.steps, seed)?;
    write_atomic(&cfg.out.join("table1.csv"), &table1_csv(&rows1))?;
    write_atomic(&cfg.out.join("table2.csv"), &table2_csv(&rows2))?;
    let results = json!({ "table1": rows1, "table2": rows2, "seed": seed, "n_steps": cfg.steps, "cost": c });
    write_summary(cfg, results, started)?;
    Ok(EXIT_OK)
}

pub fn cmd_diagnose(cfg: &RunConfig) -> Result<i32, CliError> {
    let started = Instant::now();
    let seed = cfg.seed.unwrap_or(1);
    let report = run_diagnostics(&cfg.solver, &cfg.params, cfg.pairs, seed)?;
    let mut oracle = json!(null);
    let mut warnings = report.warnings.clone();
    let (bb, _, _) = solve_lenient(cfg)?;
    if cfg.params.rho1() > 0.0 {
        let mdp = build_discrete(&cfg.params, 101, cfg.solver.grid.extent)?;
        match relative_value_iteration(&mdp, 1e-9, 20_000) {
            Ok(sol) => {
                let agreement = compare_with_solver(&mdp, &sol, &bb);
                write_atomic(&cfg.out.join("oracle.csv"), &sol.to_csv(&mdp))?;
                oracle = json!({
                    "lambda": sol.lambda,
                    "solver_lambda": report.solve.lambda,
                    "iterations": sol.iterations,
                    "agreement": agreement,
                    "agreement_fraction": agreement.fraction(),
                });
            }
            Err(e) => warnings.push(format!("oracle: {e}")),
        }
    }
    let all_passed = report.all_passed();
    let results = json!({ "diagnostics": report, "oracle": oracle, "warnings": warnings, "all_passed": all_passed });
    write_atomic(&cfg.out.join("diagnostics.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    write_summary(cfg, results, started)?;
    Ok(if all_passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

pub fn execute(command: &Command) -> Result<i32, CliError> {
    let cfg = resolve(command)?;
    match command {
        Command::Solve(_) => cmd_solve(&cfg),
        Command::Approx(_) => cmd_approx(&cfg),
        Command::Simulate(_) => cmd_simulate(&cfg),
        Command::Compare(_) => cmd_compare(&cfg),
        Command::Tables(_) => cmd_tables(&cfg),
        Command::Diagnose(_) => cmd_diagnose(&cfg),
    }
}

/// Parses `argv`, runs the command and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
