//! Monte Carlo evaluation of boundary policies on the generative signal model.
//!
//! Signals and return noise come from separate ChaCha8 streams of the same
//! seed, so toggling `include_noise` leaves the signal path untouched. Runs in
//! one [`compare_policies`] call share the signal path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

use crate::approx::{first_order_boundary, naive_boundary};
use crate::model::{ModelParams, Position};
use crate::numerics::{fmt_f64, normal_mass, std_normal_cdf, std_normal_pdf, GridFunction, Quadrature};
use crate::solver::BiasBoundary;

pub const DEFAULT_BURN_IN: usize = 100;
const BATCHES: usize = 100;
const SIGNAL_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SimError {
    #[error("n_steps must be >= 1")]
    NoSteps,
    #[error("rho1 = {0} is not supported: boundary policies need rho1 > 0")]
    UnsupportedRegime(f64),
    #[error("policy '{0}' was built for different model parameters")]
    ParamsMismatch(String),
    #[error("compare needs at least two policies (got {0})")]
    TooFewPolicies(usize),
    #[error("signal path needs at least {needed} draws (got {got})")]
    PathTooShort { needed: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Naive,
    FirstOrder,
    Solver,
    Custom,
}

impl PolicyKind {
    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::Naive => "naive",
            PolicyKind::FirstOrder => "first_order",
            PolicyKind::Solver => "solver",
            PolicyKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone)]
enum BoundaryData {
    Naive,
    FirstOrder,
    Table(GridFunction),
}

/// Boundary policy: go long iff `x1 ≥ G(x0, q)`, the short slice being the
/// long slice shifted up by `c/ρ1`.
#[derive(Debug, Clone)]
pub struct PolicySpec {
    kind: PolicyKind,
    name: String,
    params: ModelParams,
    data: BoundaryData,
}

fn require_positive_lag(params: &ModelParams) -> Result<(), SimError> {
    if params.rho1() <= 0.0 {
        return Err(SimError::UnsupportedRegime(params.rho1()));
    }
    Ok(())
}

impl PolicySpec {
    pub fn naive(params: &ModelParams) -> Result<Self, SimError> {
        require_positive_lag(params)?;
        Ok(Self { kind: PolicyKind::Naive, name: "naive".into(), params: *params, data: BoundaryData::Naive })
    }

    pub fn first_order(params: &ModelParams) -> Result<Self, SimError> {
        require_positive_lag(params)?;
        Ok(Self {
            kind: PolicyKind::FirstOrder,
            name: "first_order".into(),
            params: *params,
            data: BoundaryData::FirstOrder,
        })
    }

    pub fn solver(bb: &BiasBoundary) -> Self {
        Self {
            kind: PolicyKind::Solver,
            name: "solver".into(),
            params: *bb.params(),
            data: BoundaryData::Table(bb.g().clone()),
        }
    }

    /// Arbitrary tabulated long slice.
    pub fn custom(name: &str, params: &ModelParams, long_slice: GridFunction) -> Result<Self, SimError> {
        require_positive_lag(params)?;
        Ok(Self { kind: PolicyKind::Custom, name: name.into(), params: *params, data: BoundaryData::Table(long_slice) })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// `G(x0, q)`.
    pub fn boundary(&self, x0: f64, q: Position) -> f64 {
        let p = &self.params;
        match &self.data {
            BoundaryData::Naive => naive_boundary(x0, q, p),
            BoundaryData::FirstOrder => first_order_boundary(x0, q, p.cost(), p),
            BoundaryData::Table(g) => match q {
                Position::Long => g.eval(x0),
                Position::Short => g.eval(x0) + p.zone_width(),
            },
        }
    }

    pub fn decide(&self, x0: f64, x1: f64, q: Position) -> Position {
        if x1 >= self.boundary(x0, q) {
            Position::Long
        } else {
            Position::Short
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub n_steps: usize,
    pub seed: u64,
    pub include_noise: bool,
    pub initial_position: Position,
    pub burn_in: usize,
}

impl SimConfig {
    pub fn new(params: ModelParams, n_steps: usize, seed: u64) -> Self {
        Self { params, n_steps, seed, include_noise: false, initial_position: Position::Long, burn_in: DEFAULT_BURN_IN }
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.n_steps == 0 {
            return Err(SimError::NoSteps);
        }
        Ok(())
    }

    /// Number of signal draws a run consumes: the initial lag plus one per step.
    pub fn path_len(&self) -> usize {
        self.burn_in + self.n_steps + 1
    }
}

/// Per-period averages over the measured steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub gross: f64,
    pub net: f64,
    pub cost: f64,
    pub switch_rate: f64,
    pub std_error_gross: f64,
    pub std_error_net: f64,
    pub std_error_cost: f64,
    pub n_steps: usize,
    pub switches: u64,
}

/// Paired difference `a − b` under common random numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    pub a: String,
    pub b: String,
    pub gross: f64,
    pub net: f64,
    pub cost: f64,
    pub std_error_gross: f64,
    pub std_error_net: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub names: Vec<String>,
    pub results: Vec<SimResult>,
    /// Every policy against the first one.
    pub differences: Vec<PairedDifference>,
}

/// Signal draws `x_{-1}, x_0, x_1, …` for a seed.
pub fn signal_path(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SIGNAL_STREAM);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Return noise `ε_t` for a seed, independent of [`signal_path`].
pub fn noise_path(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

struct Tally {
    q: Position,
    gross_sum: f64,
    switches: u64,
    batch_gross: Vec<f64>,
    batch_net: Vec<f64>,
}

impl Tally {
    fn new(q: Position, batches: usize) -> Self {
        Self { q, gross_sum: 0.0, switches: 0, batch_gross: vec![0.0; batches], batch_net: vec![0.0; batches] }
    }
}

/// Runs every policy over the same explicit path. `signals` holds the initial
/// lag followed by one draw per step; `noise` one draw per step.
fn run_all(
    policies: &[&PolicySpec],
    config: &SimConfig,
    signals: &[f64],
    noise: Option<&[f64]>,
) -> Result<Vec<Tally>, SimError> {
    config.validate()?;
    let needed = config.path_len();
    if signals.len() < needed {
        return Err(SimError::PathTooShort { needed, got: signals.len() });
    }
    if let Some(eps) = noise {
        if eps.len() < needed - 1 {
            return Err(SimError::PathTooShort { needed: needed - 1, got: eps.len() });
        }
    }
    for p in policies {
        if p.params != config.params {
            return Err(SimError::ParamsMismatch(p.name.clone()));
        }
    }
    let (rho0, rho1, c) = (config.params.rho0(), config.params.rho1(), config.params.cost());
    let batches = BATCHES.min(config.n_steps);
    let batch_len = config.n_steps / batches;
    let mut tallies: Vec<Tally> = policies.iter().map(|_| Tally::new(config.initial_position, batches)).collect();
    for t in 0..config.burn_in + config.n_steps {
        let (x1, x0) = (signals[t], signals[t + 1]);
        let signal = rho0 * x0 + rho1 * x1;
        let ret = match noise {
            Some(eps) => signal + eps[t],
            None => signal,
        };
        let measured = t >= config.burn_in;
        let batch = if measured { ((t - config.burn_in) / batch_len).min(batches - 1) } else { 0 };
        for (policy, tally) in policies.iter().zip(tallies.iter_mut()) {
            let q_new = policy.decide(x0, x1, tally.q);
            let switched = q_new != tally.q;
            tally.q = q_new;
            if measured {
                let gross = q_new.sign() * ret;
                tally.gross_sum += gross;
                tally.batch_gross[batch] += gross;
                tally.batch_net[batch] += gross;
                if switched {
                    tally.switches += 1;
                    tally.batch_net[batch] -= c;
                }
            }
        }
    }
    Ok(tallies)
}

/// Standard error of the mean from batch sums (the last batch may be longer).
fn batch_std_error(sums: &[f64], n_steps: usize) -> f64 {
    let b = sums.len();
    if b < 2 {
        return f64::NAN;
    }
    let len = n_steps / b;
    let means: Vec<f64> = sums
        .iter()
        .enumerate()
        .map(|(i, s)| s / if i + 1 == b { (n_steps - len * (b - 1)) as f64 } else { len as f64 })
        .collect();
    let mean = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

fn finish(tally: &Tally, config: &SimConfig) -> SimResult {
    let n = config.n_steps as f64;
    let gross = tally.gross_sum / n;
    let switch_rate = tally.switches as f64 / n;
    let cost = config.params.cost() * switch_rate;
    let batch_cost: Vec<f64> = tally.batch_gross.iter().zip(&tally.batch_net).map(|(g, n)| g - n).collect();
    SimResult {
        gross,
        net: gross - cost,
        cost,
        switch_rate,
        std_error_gross: batch_std_error(&tally.batch_gross, config.n_steps),
        std_error_net: batch_std_error(&tally.batch_net, config.n_steps),
        std_error_cost: batch_std_error(&batch_cost, config.n_steps),
        n_steps: config.n_steps,
        switches: tally.switches,
    }
}

/// Simulates one policy on the seeded path.
pub fn run_simulation(policy: &PolicySpec, config: &SimConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let signals = signal_path(config.seed, config.path_len());
    let noise = config.include_noise.then(|| noise_path(config.seed, config.path_len() - 1));
    let tallies = run_all(&[policy], config, &signals, noise.as_deref())?;
    Ok(finish(&tallies[0], config))
}

/// Simulates one policy on a caller-supplied signal path (initial lag first).
pub fn run_on_path(
    policy: &PolicySpec,
    config: &SimConfig,
    signals: &[f64],
    noise: Option<&[f64]>,
) -> Result<SimResult, SimError> {
    let tallies = run_all(&[policy], config, signals, noise)?;
    Ok(finish(&tallies[0], config))
}

/// Runs all policies on one seeded path and reports differences against the
/// first policy with paired standard errors.
pub fn compare_policies(policies: &[PolicySpec], config: &SimConfig) -> Result<Comparison, SimError> {
    if policies.len() < 2 {
        return Err(SimError::TooFewPolicies(policies.len()));
    }
    config.validate()?;
    let signals = signal_path(config.seed, config.path_len());
    let noise = config.include_noise.then(|| noise_path(config.seed, config.path_len() - 1));
    let refs: Vec<&PolicySpec> = policies.iter().collect();
    let tallies = run_all(&refs, config, &signals, noise.as_deref())?;
    let results: Vec<SimResult> = tallies.iter().map(|t| finish(t, config)).collect();
    let diff = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| a - b).collect() };
    let differences = (1..policies.len())
        .map(|i| {
            let (a, b) = (&tallies[i], &tallies[0]);
            PairedDifference {
                a: policies[i].name.clone(),
                b: policies[0].name.clone(),
                gross: results[i].gross - results[0].gross,
                net: results[i].net - results[0].net,
                cost: results[i].cost - results[0].cost,
                std_error_gross: batch_std_error(&diff(&a.batch_gross, &b.batch_gross), config.n_steps),
                std_error_net: batch_std_error(&diff(&a.batch_net, &b.batch_net), config.n_steps),
            }
        })
        .collect();
    Ok(Comparison { names: policies.iter().map(|p| p.name.clone()).collect(), results, differences })
}

/// One row of a reproduction table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub rho0: f64,
    pub rho1: f64,
    pub c: f64,
    pub policy: String,
    pub seed: u64,
    pub result: SimResult,
}

/// Lag strengths of the two reproduction tables; `ρ0 = √(0.8 − ρ1²)`.
pub const TABLE1_RHO1: [f64; 11] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.66, 0.7, 0.8, 0.843, 0.872];
pub const TABLE2_RHO1: [f64; 11] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.66, 0.742, 0.8, 0.843, 0.872];
pub const TABLE_COST: f64 = 0.5;

/// Parameters for a table row with the given lag strength.
pub fn table_params(rho1: f64, c: f64) -> Result<ModelParams, crate::model::ParamError> {
    ModelParams::table_configuration((0.8 - rho1 * rho1).sqrt(), rho1, c)
}

/// First-order and naive policies on each row; row `i` uses seed `seed + i`.
pub fn run_table(rho1s: &[f64], c: f64, n_steps: usize, seed: u64) -> Result<Vec<TableRow>, SimError> {
    let rows: Result<Vec<Vec<TableRow>>, SimError> = rho1s
        .par_iter()
        .enumerate()
        .map(|(i, &rho1)| {
            let params = table_params(rho1, c).map_err(|_| SimError::UnsupportedRegime(rho1))?;
            let row_seed = seed.wrapping_add(i as u64);
            let config = SimConfig::new(params, n_steps, row_seed);
            let policies = [PolicySpec::first_order(&params)?, PolicySpec::naive(&params)?];
            let cmp = compare_policies(&policies, &config)?;
            Ok(cmp
                .names
                .iter()
                .zip(&cmp.results)
                .map(|(name, result)| TableRow {
                    rho0: params.rho0(),
                    rho1,
                    c,
                    policy: name.clone(),
                    seed: row_seed,
                    result: *result,
                })
                .collect())
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

pub const RESULT_CSV_HEADER: &str = "rho0,rho1,c,policy,gross,net,cost,switch_rate,se_gross,se_net,se_cost,n_steps,seed";

pub fn result_csv_line(params: &ModelParams, policy: &str, r: &SimResult, seed: u64) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        fmt_f64(params.rho0()),
        fmt_f64(params.rho1()),
        fmt_f64(params.cost()),
        policy,
        fmt_f64(r.gross),
        fmt_f64(r.net),
        fmt_f64(r.cost),
        fmt_f64(r.switch_rate),
        fmt_f64(r.std_error_gross),
        fmt_f64(r.std_error_net),
        fmt_f64(r.std_error_cost),
        r.n_steps,
        seed
    )
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut s = String::from(RESULT_CSV_HEADER);
    s.push('\n');
    for row in rows {
        let params = ModelParams::new(row.rho0, row.rho1, row.c).expect("table rows hold valid parameters");
        let _ = writeln!(s, "{}", result_csv_line(&params, &row.policy, &row.result, row.seed));
    }
    s
}

/// Half-width of the truncation box for [`switch_probability`].
pub const SWITCH_BOX: f64 = 6.0;

/// Probability that a holder of `q` trades when `(x0, x1)` are independent
/// standard normals: `∫ f(x0)·Φ(G(x0, +1)) dx0` for `q = +1`,
/// `∫ f(x0)·(1 − Φ(G(x0, −1))) dx0` for `q = −1`. The inner integral is exact;
/// the outer one uses Gauss–Legendre panels on the box, with the boundary
/// frozen at its edge values beyond it.
pub fn switch_probability(policy: &PolicySpec, q: Position) -> f64 {
    let rule = Quadrature::gauss_legendre(8).expect("8-point rule");
    let panels = 480;
    let width = 2.0 * SWITCH_BOX / panels as f64;
    let inner = |x0: f64| {
        let g = policy.boundary(x0, q);
        match q {
            Position::Long => std_normal_cdf(g),
            Position::Short => std_normal_cdf(-g),
        }
    };
    let body: f64 = (0..panels)
        .map(|i| {
            let a = -SWITCH_BOX + i as f64 * width;
            rule.integrate_interval(a, a + width, |x| std_normal_pdf(x) * inner(x))
        })
        .sum();
    let tails = normal_mass(f64::NEG_INFINITY, -SWITCH_BOX) * inner(-SWITCH_BOX)
        + normal_mass(SWITCH_BOX, f64::INFINITY) * inner(SWITCH_BOX);
    body + tails
}
