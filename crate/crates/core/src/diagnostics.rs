//! Numerical checks of the convergence apparatus: symmetry identities,
//! membership constants of the weighted spaces, the lemma suprema and
//! measured contraction coefficients.
//!
//! Weighted norms:
//! `‖H‖ = (1/ρ0)·sup |H(x)/(x + c/(2ρ1))|` and
//! `d(G1, G2) = (ρ1/ρ0)·sup |(G1(x) − G2(x))/x|`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelParams, Position};
use crate::numerics::{std_normal_pdf, GridFunction, GridSpec, NumericsError};
use crate::solver::{
    apply_t1, apply_t2, reconstruct_bias, solve_fixed_point, BiasBoundary, InitMode, SolveReport, SolverConfig,
    SolverError,
};

#[derive(Error, Debug)]
pub enum DiagError {
    #[error("node x = {0} sits on the removable point -c/(2 rho1) with H = {1} != 0")]
    SingularityOnGrid(f64, f64),
    #[error("contraction measurement needs at least 10 pairs (got {0})")]
    TooFewPairs(usize),
    #[error("delta must lie in [0, 1) (got {0})")]
    BadDelta(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// `√(2πe)`.
pub fn sqrt_2pi_e() -> f64 {
    (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct SpaceConstants {
    pub A1: f64,
    pub A2: f64,
    pub A3: f64,
    pub delta: f64,
}

impl SpaceConstants {
    /// `A2 = 1 − δ`, `A3 = 1 + δ`, `A1 = (1 + κ)/(1 − κ·2/(√(2πe)·A2))`.
    /// `A1` is infinite when the denominator is not positive.
    pub fn from_delta(delta: f64, params: &ModelParams) -> Result<Self, DiagError> {
        if !(0.0..1.0).contains(&delta) {
            return Err(DiagError::BadDelta(delta));
        }
        let a2 = 1.0 - delta;
        let k = params.kappa();
        let denom = 1.0 - k * 2.0 / (sqrt_2pi_e() * a2);
        let a1 = if denom > 0.0 { (1.0 + k) / denom } else { f64::INFINITY };
        Ok(Self { A1: a1, A2: a2, A3: 1.0 + delta, delta })
    }

    /// Smallest `δ` with `1 − δ ≤ (ρ1/ρ0)|G'(x)| ≤ 1 + δ` at the probe points.
    pub fn measure(g: &GridFunction, params: &ModelParams, probe: &[f64]) -> Result<Self, DiagError> {
        let scale = params.rho1() / params.rho0();
        let delta = probe
            .iter()
            .map(|x| (scale * g.derivative(*x).abs() - 1.0).abs())
            .fold(0.0, f64::max);
        Self::from_delta(delta.min(1.0 - 1e-12), params)
    }
}

/// `sup |f(x)/(x + c/(2ρ1))| / ρ0` over `points`, skipping points within
/// `half_width` of the removable point.
fn weighted_sup(points: &[f64], f: impl Fn(f64) -> f64, params: &ModelParams, half_width: f64) -> f64 {
    let center = -params.cost() / (2.0 * params.rho1());
    points
        .iter()
        .filter(|x| (**x - center).abs() > half_width)
        .map(|x| (f(*x) / (x - center)).abs())
        .fold(0.0, f64::max)
        / params.rho0()
}

/// `‖H‖` over the nodes of `h`, excluding half a local step around `−c/(2ρ1)`.
#[allow(non_snake_case)]
pub fn weighted_norm_H(h: &GridFunction, params: &ModelParams) -> Result<f64, DiagError> {
    let center = -params.cost() / (2.0 * params.rho1());
    let nodes = h.nodes();
    let values = h.values();
    if let Some(i) = nodes.iter().position(|x| *x == center) {
        if values[i].abs() > 1e-12 {
            return Err(DiagError::SingularityOnGrid(center, values[i]));
        }
    }
    let k = nodes.partition_point(|x| *x < center).clamp(1, nodes.len() - 1);
    let half = 0.5 * (nodes[k] - nodes[k - 1]);
    let mut best: f64 = 0.0;
    for (x, v) in nodes.iter().zip(values) {
        if (x - center).abs() > half {
            best = best.max((v / (x - center)).abs());
        }
    }
    Ok(best / params.rho0())
}

fn distance_on(points: &[f64], g1: &GridFunction, g2: &GridFunction, params: &ModelParams) -> f64 {
    points
        .iter()
        .filter(|x| **x != 0.0)
        .map(|x| ((g1.eval(*x) - g2.eval(*x)) / x).abs())
        .fold(0.0, f64::max)
        * params.rho1()
        / params.rho0()
}

/// `d(G1, G2)` over the nodes of `g1`, the `x = 0` node excluded.
pub fn boundary_distance(g1: &GridFunction, g2: &GridFunction, params: &ModelParams) -> f64 {
    distance_on(g1.nodes(), g1, g2, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryReport {
    /// `max |G(x, +1) + G(−x, −1)|`.
    pub g_odd: f64,
    /// `max |G(x, +1) − G(x, −1) + c/ρ1|`.
    pub slice_shift: f64,
    /// `max |H₊(x, +1) − H₊(x, −1) − c|`.
    pub h_shift: f64,
    /// `max |h(x0, x1, q) − h(−x0, −x1, −q)|` on a node lattice.
    pub h_even: f64,
    /// `max` jump of `h` across the boundary.
    pub continuity: f64,
    /// Largest violation of the lemma bracket on `|G⁻¹(x)|` at the probe points.
    pub lemma_bracket: f64,
}

impl SymmetryReport {
    pub fn max_violation(&self) -> f64 {
        [self.g_odd, self.slice_shift, self.h_shift, self.h_even, self.continuity]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Probe points: a 4× refinement of the solver grid.
pub fn probe_points(bb: &BiasBoundary) -> Vec<f64> {
    let nodes = bb.nodes();
    let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
    let n = (nodes.len() - 1) * 4 + 1;
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { hi } else { lo + i as f64 * step }).collect()
}

pub fn check_symmetries(bb: &BiasBoundary) -> Result<SymmetryReport, DiagError> {
    let p = *bb.params();
    let (c, w, rho1) = (p.cost(), p.zone_width(), p.rho1());
    let nodes = bb.nodes();
    let mut r = SymmetryReport { g_odd: 0.0, slice_shift: 0.0, h_shift: 0.0, h_even: 0.0, continuity: 0.0, lemma_bracket: 0.0 };
    for &x in nodes {
        r.g_odd = r.g_odd.max((bb.boundary(x, Position::Long) + bb.boundary(-x, Position::Short)).abs());
        r.slice_shift = r.slice_shift.max((bb.boundary(x, Position::Long) - bb.boundary(x, Position::Short) + w).abs());
        r.h_shift = r.h_shift.max((bb.h_plus(x, Position::Long) - bb.h_plus(x, Position::Short) - c).abs());
        for q in [Position::Long, Position::Short] {
            let g = bb.boundary(x, q);
            let jump = (rho1 * g + bb.h_plus(x, q)) - (-rho1 * g + bb.h_minus(x, q));
            r.continuity = r.continuity.max(jump.abs());
        }
    }
    let lattice: Vec<f64> = nodes.iter().copied().step_by(20).filter(|x| x.abs() <= 4.0).collect();
    for &x0 in &lattice {
        for &x1 in &lattice {
            for q in [Position::Long, Position::Short] {
                let d = reconstruct_bias(bb, x0, x1, q) - reconstruct_bias(bb, -x0, -x1, q.opposite());
                r.h_even = r.h_even.max(d.abs());
            }
        }
    }
    let probe = probe_points(bb);
    let k = SpaceConstants::measure(bb.g(), &p, &probe)?;
    let shift = c / (2.0 * rho1);
    let scale = rho1 / p.rho0();
    for &x in &probe {
        let inv = bb.g().invert(x)?.abs();
        let arm = (x + shift).abs();
        let lower = scale / k.A3 * arm;
        let upper = scale / k.A2 * arm;
        r.lemma_bracket = r.lemma_bracket.max(lower - inv).max(inv - upper);
    }
    Ok(r)
}

/// Numerical supremum of `g` on `[lo, hi]`: a uniform scan followed by
/// golden-section refinement around the best scan point.
pub fn scan_supremum(g: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let step = (hi - lo) / n as f64;
    let (mut best_x, mut best) = (lo, g(lo));
    for i in 1..=n {
        let x = lo + i as f64 * step;
        let v = g(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let (mut a, mut b) = ((best_x - step).max(lo), (best_x + step).min(hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..200 {
        if b - a < 1e-14 {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = g(x1);
        }
    }
    best.max(f1).max(f2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaSuprema {
    pub sup_f: f64,
    pub sup_yf: f64,
    pub sup_yf_scaled: f64,
    pub a3: f64,
    /// Largest gap to `1/√(2π)`, `1/√(2πe)` and `A3/√(2πe)`.
    pub max_error: f64,
}

pub fn lemma_suprema(a3: f64) -> LemmaSuprema {
    let n = 20_000;
    let sup_f = scan_supremum(|y| std_normal_pdf(y).abs(), -10.0, 10.0, n);
    let sup_yf = scan_supremum(|y| (y * std_normal_pdf(y)).abs(), -10.0, 10.0, n);
    let span = 10.0 * a3;
    let sup_yf_scaled = scan_supremum(|y| (y * std_normal_pdf(y / a3)).abs(), -span, span, n);
    let s = sqrt_2pi_e();
    let max_error = (sup_f - crate::numerics::INV_SQRT_2PI)
        .abs()
        .max((sup_yf - 1.0 / s).abs())
        .max((sup_yf_scaled - a3 / s).abs());
    LemmaSuprema { sup_f, sup_yf, sup_yf_scaled, a3, max_error }
}

/// Measured Lipschitz constants of `(T1, T2)` in `(‖·‖, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionEstimate {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub samples: usize,
}

impl ContractionEstimate {
    pub fn row_sums(&self) -> (f64, f64) {
        (self.a11 + self.a12, self.a21 + self.a22)
    }

    pub fn max_row_sum(&self) -> f64 {
        let (a, b) = self.row_sums();
        a.max(b)
    }
}

/// Bounds on the coefficients from the closed-form estimates, with the
/// `O(c/ρ0)` remainders dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticBounds {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

pub fn analytic_bounds(k: &SpaceConstants, params: &ModelParams) -> AnalyticBounds {
    let r = params.kappa();
    let s = sqrt_2pi_e();
    let a2sq = k.A2 * k.A2;
    AnalyticBounds {
        a11: r / (s * k.A2),
        a12: 2.0 / s * r.powi(3) * k.A3 / a2sq + 2.0 / s * r * k.A1 / a2sq,
        a21: params.zone_width() * r * r / ((2.0 * std::f64::consts::PI).sqrt() * a2sq),
        a22: 2.0 / (s * a2sq) + 2.0 / s * r * r * k.A3 / a2sq,
    }
}

/// `2κ·sup_u (f(0) − f(u))/u / A2`: the `‖·‖`-gain of `T1` along the linear
/// direction `ΔH(y) ∝ y` at zero cost, a lower bound for `a11`.
pub fn linear_direction_gain(k: &SpaceConstants, params: &ModelParams) -> f64 {
    let ratio = |u: f64| if u == 0.0 { 0.0 } else { (std_normal_pdf(0.0) - std_normal_pdf(u)) / u };
    2.0 * params.kappa() * scan_supremum(ratio, 0.0, 10.0, 10_000) / k.A2
}

/// Smallest `(a, b) ≥ 0` in the sense of `a + b` with `a·u_k + b·v_k ≥ w_k`
/// for all samples, by enumerating the vertices of the feasible region.
fn fit_pair(samples: &[(f64, f64, f64)]) -> (f64, f64) {
    let rel = 1e-9;
    let feasible = |a: f64, b: f64| {
        a >= 0.0 && b >= 0.0 && samples.iter().all(|(u, v, w)| a * u + b * v >= w - rel * w.abs().max(1e-15))
    };
    let mut candidates = Vec::new();
    let a_only = samples.iter().filter(|s| s.2 > 0.0).map(|(u, _, w)| w / u).fold(0.0, f64::max);
    let b_only = samples.iter().filter(|s| s.2 > 0.0).map(|(_, v, w)| w / v).fold(0.0, f64::max);
    candidates.push((a_only, 0.0));
    candidates.push((0.0, b_only));
    for (i, (u1, v1, w1)) in samples.iter().enumerate() {
        if *v1 == 0.0 && *u1 > 0.0 {
            // a fixed by this constraint, b by the rest
            let a = w1 / u1;
            let b = samples
                .iter()
                .filter(|s| s.1 > 0.0)
                .map(|(u, v, w)| (w - a * u) / v)
                .fold(0.0, f64::max);
            candidates.push((a, b));
        }
        if *u1 == 0.0 && *v1 > 0.0 {
            let b = w1 / v1;
            let a = samples
                .iter()
                .filter(|s| s.0 > 0.0)
                .map(|(u, v, w)| (w - b * v) / u)
                .fold(0.0, f64::max);
            candidates.push((a, b));
        }
        for (u2, v2, w2) in &samples[i + 1..] {
            let det = u1 * v2 - u2 * v1;
            if det.abs() > 1e-300 {
                candidates.push(((w1 * v2 - w2 * v1) / det, (u1 * w2 - u2 * w1) / det));
            }
        }
    }
    candidates
        .into_iter()
        .filter(|(a, b)| a.is_finite() && b.is_finite() && feasible(*a, *b))
        .min_by(|x, y| (x.0 + x.1).total_cmp(&(y.0 + y.1)))
        .unwrap_or((f64::INFINITY, f64::INFINITY))
}

struct PairSample {
    dh_in: f64,
    dg_in: f64,
    dh_out: f64,
    dg_out: f64,
}

fn bump(x: f64, mu: f64, s: f64) -> f64 {
    (-(x - mu) * (x - mu) / (2.0 * s * s)).exp()
}

/// `G + ∫_0^x δ·(ρ0/ρ1)·bump`: slope changes by at most `|δ|` in the
/// `(ρ1/ρ0)`-scaled sense and `G(0)` is kept.
fn perturb_g(g: &GridFunction, params: &ModelParams, delta: f64, mu: f64, s: f64) -> Result<GridFunction, NumericsError> {
    let nodes = g.nodes();
    let scale = delta * params.rho0() / params.rho1();
    let center = nodes.partition_point(|x| *x < 0.0);
    let mut offset = vec![0.0; nodes.len()];
    let slope = |x: f64| scale * g.derivative(x).abs() * params.rho1() / params.rho0() * bump(x, mu, s);
    let step_int = |a: f64, b: f64| 0.5 * (b - a) * (slope(a) + slope(b));
    for i in center + 1..nodes.len() {
        offset[i] = offset[i - 1] + step_int(nodes[i - 1], nodes[i]);
    }
    for i in (0..center).rev() {
        offset[i] = offset[i + 1] - step_int(nodes[i], nodes[i + 1]);
    }
    // the center node may not be exactly 0
    let shift = if nodes[center] == 0.0 { 0.0 } else { -(offset[center]) };
    let values: Vec<f64> = g.values().iter().zip(&offset).map(|(v, o)| v - o - shift).collect();
    GridFunction::monotone_decreasing(nodes.to_vec(), values)
}

fn perturb_h(h: &GridFunction, params: &ModelParams, amp: f64, mu: f64, s: f64) -> Result<GridFunction, NumericsError> {
    let center = -params.cost() / (2.0 * params.rho1());
    let values = h
        .nodes()
        .iter()
        .zip(h.values())
        .map(|(x, v)| v + amp * params.rho0() * (x - center) * bump(*x, mu, s))
        .collect();
    GridFunction::new(h.nodes().to_vec(), values)
}

fn sample_pair(
    a: &BiasBoundary,
    b: &BiasBoundary,
    rule: &crate::numerics::Quadrature,
    probe: &[f64],
    half: f64,
) -> Result<PairSample, DiagError> {
    let p = *a.params();
    fn diff<'a>(f: &'a GridFunction, g: &'a GridFunction) -> impl Fn(f64) -> f64 + 'a {
        move |x| f.eval(x) - g.eval(x)
    }
    let dh_in = weighted_sup(probe, diff(a.h(), b.h()), &p, half);
    let dg_in = distance_on(probe, a.g(), b.g(), &p);
    let (ha, hb) = (apply_t1(a, rule)?, apply_t1(b, rule)?);
    let (ga, gb) = (apply_t2(a, rule)?, apply_t2(b, rule)?);
    let dh_out = weighted_sup(probe, diff(&ha, &hb), &p, half);
    let dg_out = distance_on(probe, &ga, &gb, &p);
    Ok(PairSample { dh_in, dg_in, dh_out, dg_out })
}

/// Samples pairs around the fixed point and along a solver trajectory, applies
/// `(T1, T2)` to both members and fits the coefficients.
pub fn measure_contraction(params: &ModelParams, n_pairs: usize, seed: u64) -> Result<ContractionEstimate, DiagError> {
    let config = SolverConfig { grid: GridSpec::new(601, 6.0)?, ..Default::default() };
    measure_contraction_with(&config, params, n_pairs, seed)
}

pub fn measure_contraction_with(
    config: &SolverConfig,
    params: &ModelParams,
    n_pairs: usize,
    seed: u64,
) -> Result<ContractionEstimate, DiagError> {
    if n_pairs < 10 {
        return Err(DiagError::TooFewPairs(n_pairs));
    }
    let rule = config.rule()?;
    let fixed = match solve_fixed_point(config, params) {
        Ok((bb, _)) => bb,
        Err(SolverError::NotConverged { boundary, .. }) => *boundary,
        Err(e) => return Err(e.into()),
    };
    let probe = probe_points(&fixed);
    let half = 0.5 * (probe[1] - probe[0]);

    let mut pairs: Vec<(BiasBoundary, BiasBoundary)> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..n_pairs {
        let member = |with_h: bool, with_g: bool, rng: &mut ChaCha8Rng| -> Result<BiasBoundary, DiagError> {
            let mut h = fixed.h().clone();
            let mut g = fixed.g().clone();
            if with_h {
                let (amp, mu, mut s) = (rng.gen_range(-0.2..0.2), rng.gen_range(-3.0..3.0), rng.gen_range(0.3..1.5));
                if k == 0 {
                    // purely linear difference
                    s = 1e6;
                }
                h = perturb_h(&h, params, amp, mu, s)?;
            }
            if with_g {
                let (d, mu, s) = (rng.gen_range(-0.15..0.15), rng.gen_range(-3.0..3.0), rng.gen_range(0.3..1.5));
                g = perturb_g(&g, params, d, mu, s)?;
            }
            Ok(BiasBoundary::new(h, g, *params)?)
        };
        // alternate H-only, G-only and joint differences
        let (dh, dg) = match k % 3 {
            0 => (true, false),
            1 => (false, true),
            _ => (true, true),
        };
        let a = member(dh, dg, &mut rng)?;
        let b = member(dh, dg, &mut rng)?;
        pairs.push((a, b));
    }
    // consecutive iterates from the naive start
    let naive = SolverConfig { init: InitMode::Naive, ..config.clone() };
    let mut prev = crate::solver::initial_guess(&naive, params)?;
    for _ in 0..4 {
        let h = apply_t1(&prev, &rule)?;
        let g = apply_t2(&prev, &rule)?;
        let next = BiasBoundary::new(h, g, *params)?;
        pairs.push((prev, next.clone()));
        prev = next;
    }

    let samples: Result<Vec<PairSample>, DiagError> =
        pairs.par_iter().map(|(a, b)| sample_pair(a, b, &rule, &probe, half)).collect();
    let samples = samples?;
    let rows1: Vec<(f64, f64, f64)> = samples.iter().map(|s| (s.dh_in, s.dg_in, s.dh_out)).collect();
    let rows2: Vec<(f64, f64, f64)> = samples.iter().map(|s| (s.dh_in, s.dg_in, s.dg_out)).collect();
    let (a11, a12) = fit_pair(&rows1);
    let (a21, a22) = fit_pair(&rows2);
    Ok(ContractionEstimate { a11, a12, a21, a22, samples: samples.len() })
}

/// `ρ1 ≤ ρ0/2` and `c ≤ 0.5`.
pub fn in_proven_regime(params: &ModelParams) -> bool {
    params.rho1() <= 0.5 * params.rho0() && params.cost() <= 0.5
}

/// One named check; `passed` is `None` when the check is not asserted for
/// these parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: Option<bool>,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64, asserted: bool) -> Self {
        Self { name: name.into(), value, threshold, passed: asserted.then_some(value <= threshold) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub params: ModelParams,
    pub proven_regime: bool,
    pub warnings: Vec<String>,
    pub solve: SolveReport,
    pub symmetries: SymmetryReport,
    pub constants: SpaceConstants,
    pub h_norm: f64,
    pub lemma: LemmaSuprema,
    pub contraction: ContractionEstimate,
    pub analytic: AnalyticBounds,
    pub solver_rate: Option<f64>,
    pub checks: Vec<Check>,
}

impl DiagnosticsReport {
    /// False if any asserted check failed.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }
}

/// Full suite: solve, symmetry identities, constants, lemma suprema and
/// contraction coefficients.
pub fn run_diagnostics(config: &SolverConfig, params: &ModelParams, n_pairs: usize, seed: u64) -> Result<DiagnosticsReport, DiagError> {
    let (bb, solve) = match solve_fixed_point(config, params) {
        Ok(ok) => ok,
        Err(SolverError::NotConverged { boundary, report }) => (*boundary, report),
        Err(e) => return Err(e.into()),
    };
    let proven = in_proven_regime(params);
    let mut warnings = solve.warnings.clone();
    if !proven {
        warnings.push("outside the proven regime (rho1 <= rho0/2, c <= 0.5): contraction checks not asserted".into());
    }
    let symmetries = check_symmetries(&bb)?;
    let probe = probe_points(&bb);
    let constants = SpaceConstants::measure(bb.g(), params, &probe)?;
    let h_norm = weighted_norm_H(bb.h(), params)?;
    let lemma = lemma_suprema(constants.A3);
    let contraction = measure_contraction_with(config, params, n_pairs, seed)?;
    let analytic = analytic_bounds(&constants, params);
    let solver_rate = solve.geometric_rate(1);
    let mut checks = vec![
        Check::at_most("converged", if solve.converged { 0.0 } else { 1.0 }, 0.0, true),
        Check::at_most("g_odd", symmetries.g_odd, 1e-6, true),
        Check::at_most("slice_shift", symmetries.slice_shift, 1e-6, true),
        Check::at_most("h_shift", symmetries.h_shift, 1e-6, true),
        Check::at_most("h_even", symmetries.h_even, 1e-6, true),
        Check::at_most("h_continuity", symmetries.continuity, 1e-6, true),
        Check::at_most("lemma_bracket", symmetries.lemma_bracket, 1e-9, true),
        Check::at_most("lemma_suprema", lemma.max_error, 1e-10, true),
        Check::at_most("h_norm_within_A1", h_norm, constants.A1, proven),
        Check::at_most("a21_within_analytic", contraction.a21, 1.1 * analytic.a21, proven),
        Check::at_most("a11_within_analytic", contraction.a11, 1.1 * analytic.a11, false),
        Check::at_most("a11_plus_a12", contraction.a11 + contraction.a12, 1.0 - 1e-12, proven),
        Check::at_most("a21_plus_a22", contraction.a21 + contraction.a22, 1.0 - 1e-12, proven),
    ];
    if let Some(rate) = solver_rate {
        checks.push(Check::at_most("solver_rate", rate, contraction.max_row_sum() + 0.05, proven));
    }
    Ok(DiagnosticsReport {
        params: *params,
        proven_regime: proven,
        warnings,
        solve,
        symmetries,
        constants,
        h_norm,
        lemma,
        contraction,
        analytic,
        solver_rate,
        checks,
    })
}
