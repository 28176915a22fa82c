//! Coupled fixed-point iteration for the bias slice `H` and the boundary
//! slice `G`, the average-reward relation, and reconstruction of the full
//! bias function and decision rule.
//!
//! Only the `q = +1` slices are iterated. The other slices follow from
//! `H₊(x, −1) = H(x) − c`, `H₋(x, q) = H₊(−x, −q)` and
//! `G(x, −1) = G(x, +1) + c/ρ1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

use crate::approx::{h_zero_cost, naive_boundary};
use crate::model::{Action, MarketState, ModelParams, Position};
use crate::numerics::{fmt_f64, normal_mass, GridFunction, GridSpec, NumericsError, Quadrature, WeightedPrimitive};

#[derive(Error, Debug, Clone)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("rho1 = {0} is not supported: the decision rule needs rho1 > 0")]
    UnsupportedRegime(f64),
    #[error("boundary not invertible at iteration {iteration}: {source}")]
    BoundaryNotInvertible {
        iteration: usize,
        #[source]
        source: NumericsError,
    },
    #[error("no convergence after {} iterations (last residuals H {:.3e}, G {:.3e})",
        .report.iterations, .report.last_residual_h(), .report.last_residual_g())]
    NotConverged { boundary: Box<BiasBoundary>, report: SolveReport },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Sign convention for the switch-cost term of the bias update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T1CostSign {
    /// `+c·∫_0^{−G⁻¹(x)} f`, the sign that follows from the Bellman equation.
    #[default]
    Derived,
    /// `−c·∫_0^{−G⁻¹(x)} f`. Kept only to measure its disagreement with the oracle.
    Negated,
}

impl T1CostSign {
    fn factor(self) -> f64 {
        match self {
            T1CostSign::Derived => 1.0,
            T1CostSign::Negated => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// `G⁰` naive, `H⁰(x) = ρ0·(x + c/(2ρ1))`.
    Naive,
    /// `G⁰` naive, `H⁰` the zero-cost bias slice.
    #[default]
    ZeroCost,
    /// Values of `H⁰` and `G⁰` at the grid nodes.
    Supplied { h: Vec<f64>, g: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub grid: GridSpec,
    /// Gauss–Legendre points per grid cell.
    pub quad_nodes: usize,
    pub init: InitMode,
    #[serde(default)]
    pub t1_cost_sign: T1CostSign,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            max_iterations: 500,
            grid: GridSpec::default(),
            quad_nodes: 4,
            init: InitMode::ZeroCost,
            t1_cost_sign: T1CostSign::Derived,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(SolverError::InvalidConfig(format!("epsilon must be > 0 (got {})", self.epsilon)));
        }
        if self.max_iterations == 0 {
            return Err(SolverError::InvalidConfig("max_iterations must be >= 1".into()));
        }
        self.grid.validate()?;
        if self.quad_nodes == 0 || self.quad_nodes > 64 {
            return Err(SolverError::InvalidConfig(format!("quad_nodes must be in 1..=64 (got {})", self.quad_nodes)));
        }
        if let InitMode::Supplied { h, g } = &self.init {
            if h.len() != self.grid.nodes || g.len() != self.grid.nodes {
                return Err(SolverError::InvalidConfig(format!(
                    "supplied initial values have {} / {} entries, grid has {}",
                    h.len(),
                    g.len(),
                    self.grid.nodes
                )));
            }
        }
        Ok(())
    }

    pub fn rule(&self) -> Result<Quadrature, SolverError> {
        Ok(Quadrature::gauss_legendre(self.quad_nodes)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub lambda: f64,
    pub iterations: usize,
    pub residuals_h: Vec<f64>,
    pub residuals_g: Vec<f64>,
    pub converged: bool,
    pub epsilon: f64,
    pub warnings: Vec<String>,
}

impl SolveReport {
    pub fn last_residual_h(&self) -> f64 {
        self.residuals_h.last().copied().unwrap_or(f64::NAN)
    }

    pub fn last_residual_g(&self) -> f64 {
        self.residuals_g.last().copied().unwrap_or(f64::NAN)
    }

    /// `max(res_H, res_G)` per iteration.
    pub fn combined_residuals(&self) -> Vec<f64> {
        self.residuals_h.iter().zip(&self.residuals_g).map(|(a, b)| a.max(*b)).collect()
    }

    /// Successive ratios of the combined residual.
    pub fn residual_ratios(&self) -> Vec<f64> {
        self.combined_residuals().windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// Geometric mean of the residual ratios from iteration `skip` on, over
    /// iterations whose residual is still well above rounding level.
    pub fn geometric_rate(&self, skip: usize) -> Option<f64> {
        let r = self.combined_residuals();
        let usable: Vec<f64> = r.iter().copied().skip(skip).take_while(|v| *v > 1e-12).collect();
        if usable.len() < 2 {
            return None;
        }
        let n = (usable.len() - 1) as f64;
        Some((usable[usable.len() - 1] / usable[0]).powf(1.0 / n))
    }
}

/// Bias slice `H(x) = H₊(x, +1)` and boundary slice `G(x) = G(x, +1)` on a
/// common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasBoundary {
    h: GridFunction,
    g: GridFunction,
    params: ModelParams,
}

impl BiasBoundary {
    /// `g` is re-flagged as strictly decreasing; both must share nodes.
    pub fn new(h: GridFunction, g: GridFunction, params: ModelParams) -> Result<Self, NumericsError> {
        if h.nodes() != g.nodes() {
            return Err(NumericsError::LengthMismatch(h.len(), g.len()));
        }
        let g = if g.is_monotone_decreasing() { g } else { g.into_monotone_decreasing()? };
        Ok(Self { h, g, params })
    }

    pub fn h(&self) -> &GridFunction {
        &self.h
    }

    pub fn g(&self) -> &GridFunction {
        &self.g
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn nodes(&self) -> &[f64] {
        self.h.nodes()
    }

    /// `G(x, q)`.
    pub fn boundary(&self, x: f64, q: Position) -> f64 {
        match q {
            Position::Long => self.g.eval(x),
            Position::Short => self.g.eval(x) + self.params.zone_width(),
        }
    }

    /// `H₊(x, q)`.
    pub fn h_plus(&self, x: f64, q: Position) -> f64 {
        match q {
            Position::Long => self.h.eval(x),
            Position::Short => self.h.eval(x) - self.params.cost(),
        }
    }

    /// `H₋(x, q)`.
    pub fn h_minus(&self, x: f64, q: Position) -> f64 {
        self.h_plus(-x, q.opposite())
    }

    /// Columns `x, H, G_long, G_short`.
    pub fn to_csv(&self) -> String {
        let w = self.params.zone_width();
        let mut s = String::from("x,H,G_long,G_short\n");
        for ((x, h), g) in self.nodes().iter().zip(self.h.values()).zip(self.g.values()) {
            let _ = writeln!(s, "{},{},{},{}", fmt_f64(*x), fmt_f64(*h), fmt_f64(*g), fmt_f64(g + w));
        }
        s
    }
}

/// Evaluates `f` at every node; parallel and sequential sweeps agree bit for bit.
fn sweep<F>(nodes: &[f64], f: F) -> Result<Vec<f64>, NumericsError>
where
    F: Fn(f64) -> Result<f64, NumericsError> + Sync,
{
    nodes.par_iter().map(|&x| f(x)).collect()
}

/// Bias update with the derived cost sign.
pub fn apply_t1(current: &BiasBoundary, rule: &Quadrature) -> Result<GridFunction, NumericsError> {
    apply_t1_with(current, rule, T1CostSign::Derived)
}

/// `ρ0(x + c/(2ρ1)) + ρ1·x·∫_g^{−g} f + (∫_g^0 − ∫_0^{−g}) H f ± c·∫_0^{−g} f`, `g = G⁻¹(x)`.
pub fn apply_t1_with(current: &BiasBoundary, rule: &Quadrature, sign: T1CostSign) -> Result<GridFunction, NumericsError> {
    let p = &current.params;
    let (rho0, rho1, c) = (p.rho0(), p.rho1(), p.cost());
    let prim = WeightedPrimitive::new(&current.h, rule);
    let s = sign.factor();
    let values = sweep(current.nodes(), |x| {
        let g = current.g.invert(x)?;
        Ok(rho0 * (x + c / (2.0 * rho1)) + rho1 * x * normal_mass(g, -g) + prim.between(g, 0.0)
            - prim.between(0.0, -g)
            + s * c * normal_mass(0.0, -g))
    })?;
    GridFunction::new(current.nodes().to_vec(), values)
}

/// Boundary update:
/// `−(ρ0/ρ1)x − c/(2ρ1) + (1/(2ρ1))(∫_{g(−x)}^{g(−x−w)} − ∫_{g(x)}^{g(x−w)}) H f
///  − x·∫_{g(x)}^{g(x−w)} f − (c/(2ρ1))·∫_{g(x)}^{g(−x)} f`, `g = G⁻¹`, `w = c/ρ1`.
///
/// The result is not checked for monotonicity.
pub fn apply_t2(current: &BiasBoundary, rule: &Quadrature) -> Result<GridFunction, NumericsError> {
    let p = &current.params;
    let (rho0, rho1, c) = (p.rho0(), p.rho1(), p.cost());
    let w = p.zone_width();
    let prim = WeightedPrimitive::new(&current.h, rule);
    let inv = |t: f64| current.g.invert(t);
    let values = sweep(current.nodes(), |x| {
        let gx = inv(x)?;
        let gxw = if w == 0.0 { gx } else { inv(x - w)? };
        let gm = inv(-x)?;
        let gmw = if w == 0.0 { gm } else { inv(-x - w)? };
        let h_terms = prim.between(gm, gmw) - prim.between(gx, gxw);
        Ok(-(rho0 / rho1) * x - c / (2.0 * rho1) + h_terms / (2.0 * rho1)
            - x * normal_mass(gx, gxw)
            - c / (2.0 * rho1) * normal_mass(gx, gm))
    })?;
    GridFunction::new(current.nodes().to_vec(), values)
}

/// `λ = −ρ0·c/(2ρ1) − c/2 + 2∫_0^∞ H f`.
pub fn compute_lambda(current: &BiasBoundary, rule: &Quadrature) -> f64 {
    let p = &current.params;
    let prim = WeightedPrimitive::new(&current.h, rule);
    -(p.rho0() / (2.0 * p.rho1())) * p.cost() - p.cost() / 2.0 + 2.0 * prim.between(0.0, f64::INFINITY)
}

/// Starting pair for the given mode.
pub fn initial_guess(config: &SolverConfig, params: &ModelParams) -> Result<BiasBoundary, SolverError> {
    let nodes = config.grid.points();
    let g0 = |nodes: Vec<f64>| GridFunction::from_fn(nodes, |x| naive_boundary(x, Position::Long, params));
    let (h, g) = match &config.init {
        InitMode::Naive => {
            let shift = params.cost() / (2.0 * params.rho1());
            (GridFunction::from_fn(nodes.clone(), |x| params.rho0() * (x + shift))?, g0(nodes)?)
        }
        InitMode::ZeroCost => (GridFunction::from_fn(nodes.clone(), |x| h_zero_cost(x, params))?, g0(nodes)?),
        InitMode::Supplied { h, g } => (GridFunction::new(nodes.clone(), h.clone())?, GridFunction::new(nodes, g.clone())?),
    };
    BiasBoundary::new(h, g, *params).map_err(|source| SolverError::BoundaryNotInvertible { iteration: 0, source })
}

fn regime_warnings(params: &ModelParams) -> Vec<String> {
    let mut w = Vec::new();
    if params.rho1() > params.rho0() {
        w.push(format!(
            "rho1 = {} exceeds rho0 = {}: outside the range where the iteration is known to contract",
            params.rho1(),
            params.rho0()
        ));
    }
    if params.cost() > params.rho0() {
        w.push(format!(
            "c = {} exceeds rho0 = {}: outside the range where the iteration is known to contract",
            params.cost(),
            params.rho0()
        ));
    }
    w
}

/// Jacobi iteration `(H, G) ← (T1(H, G), T2(H, G))` until both sup-norm
/// updates are at most `epsilon`.
pub fn solve_fixed_point(config: &SolverConfig, params: &ModelParams) -> Result<(BiasBoundary, SolveReport), SolverError> {
    config.validate()?;
    if params.rho1() <= 0.0 {
        return Err(SolverError::UnsupportedRegime(params.rho1()));
    }
    let warnings = regime_warnings(params);
    for w in &warnings {
        log::warn!("{w}");
    }
    let rule = config.rule()?;
    let mut current = initial_guess(config, params)?;
    let mut report = SolveReport {
        lambda: f64::NAN,
        iterations: 0,
        residuals_h: Vec::new(),
        residuals_g: Vec::new(),
        converged: false,
        epsilon: config.epsilon,
        warnings,
    };
    for iteration in 1..=config.max_iterations {
        let wrap = |source| SolverError::BoundaryNotInvertible { iteration, source };
        let h_new = apply_t1_with(&current, &rule, config.t1_cost_sign).map_err(wrap)?;
        let g_new = apply_t2(&current, &rule).map_err(wrap)?;
        let res_h = h_new.sup_distance(&current.h);
        let res_g = g_new.sup_distance(&current.g);
        current = BiasBoundary::new(h_new, g_new, *params).map_err(wrap)?;
        report.iterations = iteration;
        report.residuals_h.push(res_h);
        report.residuals_g.push(res_g);
        log::debug!("iteration {iteration}: residual H {res_h:.3e}, G {res_g:.3e}");
        if res_h <= config.epsilon && res_g <= config.epsilon {
            report.converged = true;
            break;
        }
    }
    report.lambda = compute_lambda(&current, &rule);
    if !report.converged {
        return Err(SolverError::NotConverged { boundary: Box::new(current), report });
    }
    Ok((current, report))
}

/// Full bias `h(x0, x1, q)`.
pub fn reconstruct_bias(bb: &BiasBoundary, x0: f64, x1: f64, q: Position) -> f64 {
    let rho1 = bb.params.rho1();
    if x1 >= bb.boundary(x0, q) {
        rho1 * x1 + bb.h_plus(x0, q)
    } else {
        -rho1 * x1 + bb.h_minus(x0, q)
    }
}

/// Go long iff `x1 ≥ G(x0, q)`.
pub fn decide(bb: &BiasBoundary, state: &MarketState) -> Action {
    if state.x1 >= bb.boundary(state.x0, state.q) {
        Action::GoLong
    } else {
        Action::GoShort
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{std_normal_pdf, Quadrature};

    fn params(rho0: f64, rho1: f64, c: f64) -> ModelParams {
        ModelParams::new(rho0, rho1, c).unwrap()
    }

    fn gl() -> Quadrature {
        Quadrature::gauss_legendre(4).unwrap()
    }

    fn exact_zero_cost(p: &ModelParams) -> BiasBoundary {
        let nodes = GridSpec::default().points();
        let h = GridFunction::from_fn(nodes.clone(), |x| h_zero_cost(x, p)).unwrap();
        let g = GridFunction::from_fn(nodes, |x| -(p.rho0() / p.rho1()) * x).unwrap();
        BiasBoundary::new(h, g, *p).unwrap()
    }

    fn solved() -> (BiasBoundary, SolveReport) {
        solve_fixed_point(&SolverConfig::default(), &params(0.8, 0.4, 0.5)).unwrap()
    }

    /// 400-panel, 10-point Gauss–Legendre on `[a, b]`, independent of the grid.
    fn fine_integral(a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
        let rule = Quadrature::gauss_legendre(10).unwrap();
        let n = 400;
        let w = (b - a) / n as f64;
        (0..n).map(|i| rule.integrate_interval(a + i as f64 * w, a + (i + 1) as f64 * w, &g)).sum()
    }

    #[test]
    fn t1_zero_cost_fixed_point() {
        let p = params(0.8, 0.4, 0.0);
        let bb = exact_zero_cost(&p);
        let out = apply_t1(&bb, &gl()).unwrap();
        assert!(out.sup_distance(bb.h()) < 1e-6, "{}", out.sup_distance(bb.h()));
        // the same fixed point with the integrals done on the closed form directly
        let k = p.kappa();
        for x in [-2.5, -1.0, 0.3, 1.0, 2.0] {
            let g = -k * x;
            let hf = |y: f64| h_zero_cost(y, &p) * std_normal_pdf(y);
            let direct = 0.8 * x + 0.4 * x * normal_mass(g, -g) + fine_integral(g, 0.0, hf) - fine_integral(0.0, -g, hf);
            assert!((direct - h_zero_cost(x, &p)).abs() < 1e-12, "x={x}");
            assert!((out.eval(x) - direct).abs() < 1e-8, "x={x}");
        }
        assert_eq!(out.eval(0.0), 0.0);
    }

    #[test]
    fn t2_zero_cost_is_exact_for_any_h() {
        let p = params(0.8, 0.4, 0.0);
        let nodes = GridSpec::default().points();
        let h = GridFunction::from_fn(nodes.clone(), |x| x.sin() + 0.3 * x * x).unwrap();
        let g = GridFunction::from_fn(nodes.clone(), |x| -1.7 * x - 0.1 * x.powi(3)).unwrap();
        let bb = BiasBoundary::new(h, g, p).unwrap();
        let out = apply_t2(&bb, &gl()).unwrap();
        for (x, v) in nodes.iter().zip(out.values()) {
            assert_eq!(*v, -(0.8 / 0.4) * x);
        }
    }

    #[test]
    fn t2_origin_is_half_zone() {
        let (bb, _) = solved();
        let out = apply_t2(&bb, &gl()).unwrap();
        assert!((out.eval(0.0) + 0.5 / 0.8).abs() < 1e-14);
        assert!((bb.g().eval(0.0) + 0.5 / 0.8).abs() < 1e-14);
    }

    #[test]
    fn lambda_examples() {
        let rule = gl();
        let p = params(0.8, 0.4, 0.0);
        let lam = compute_lambda(&exact_zero_cost(&p), &rule);
        let direct = 2.0 * fine_integral(0.0, 12.0, |y| h_zero_cost(y, &p) * std_normal_pdf(y));
        assert!((lam - direct).abs() < 1e-8, "{lam} {direct}");
        // E|ρ0X + ρ1X'| = √(ρ0² + ρ1²)·√(2/π)
        let closed = (0.8f64 * 0.8 + 0.4 * 0.4).sqrt() * (2.0 / std::f64::consts::PI).sqrt();
        assert!((lam - closed).abs() < 1e-8, "{lam} {closed}");

        let weak = params(0.8, 1e-4, 0.0);
        let lam_weak = compute_lambda(&exact_zero_cost(&weak), &rule);
        assert!((lam_weak - 0.8 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-6);

        let nodes = GridSpec::default().points();
        let zero = BiasBoundary::new(
            GridFunction::from_fn(nodes.clone(), |_| 0.0).unwrap(),
            GridFunction::from_fn(nodes, |x| -2.0 * x).unwrap(),
            p,
        )
        .unwrap();
        assert_eq!(compute_lambda(&zero, &rule), 0.0);
    }

    #[test]
    fn zero_cost_converges_immediately() {
        for init in [InitMode::ZeroCost, InitMode::Naive] {
            let p = params(0.8, 0.4, 0.0);
            let cfg = SolverConfig { init: init.clone(), ..Default::default() };
            let (bb, rep) = solve_fixed_point(&cfg, &p).unwrap();
            assert!(rep.converged && rep.iterations <= 2, "{init:?}: {rep:?}");
            for (x, g) in bb.nodes().iter().zip(bb.g().values()) {
                assert!((g + 2.0 * x).abs() <= 1e-9);
            }
            for (x, h) in bb.nodes().iter().zip(bb.h().values()) {
                assert!((h - h_zero_cost(*x, &p)).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn converges_geometrically_at_reference_point() {
        let (bb, rep) = solved();
        assert!(rep.converged);
        assert_eq!(rep.residuals_h.len(), rep.iterations);
        assert_eq!(rep.residuals_g.len(), rep.iterations);
        assert!(rep.last_residual_h() <= 1e-8 && rep.last_residual_g() <= 1e-8);
        for (k, r) in rep.residual_ratios().iter().enumerate().skip(1) {
            assert!(*r < 1.0, "ratio {k}: {r}");
        }
        let rate = rep.geometric_rate(1).unwrap();
        assert!(rate < 0.3, "{rate}");
        assert!((rep.lambda - 0.548_97).abs() < 2e-4, "{}", rep.lambda);
        assert!(rep.warnings.is_empty());
        for (x, g) in bb.nodes().iter().zip(bb.g().values()) {
            assert!(*g < g + bb.params().zone_width(), "x={x}");
        }
    }

    #[test]
    fn negated_cost_sign_gives_another_fixed_point() {
        let cfg = SolverConfig { t1_cost_sign: T1CostSign::Negated, ..Default::default() };
        let (_, rep) = solve_fixed_point(&cfg, &params(0.8, 0.4, 0.5)).unwrap();
        let (_, derived) = solved();
        assert!((rep.lambda - derived.lambda).abs() > 0.1, "{} {}", rep.lambda, derived.lambda);
    }

    #[test]
    fn lambda_decreases_with_cost() {
        let cfg = SolverConfig::default();
        let lam = |c: f64| solve_fixed_point(&cfg, &params(0.8, 0.4, c)).unwrap().1.lambda;
        let l0 = lam(0.0);
        let mut prev = l0;
        for c in [0.1, 0.3, 0.5] {
            let l = lam(c);
            assert!(l < prev, "c={c}: {l} vs {prev}");
            prev = l;
        }
    }

    #[test]
    fn bias_symmetries() {
        let (bb, _) = solved();
        let c = 0.5;
        for x in bb.nodes().iter().step_by(37) {
            let d = bb.h_plus(*x, Position::Long) - bb.h_plus(*x, Position::Short);
            assert!((d - c).abs() < 1e-14);
        }
        // h even under (x0, x1, q) → (−x0, −x1, −q), away from the boundary
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        let mut uniform = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 6.0 - 3.0
        };
        let mut checked = 0;
        while checked < 200 {
            let (x0, x1) = (uniform(), uniform());
            let q = if checked % 2 == 0 { Position::Long } else { Position::Short };
            if (x1 - bb.boundary(x0, q)).abs() < 1e-3 {
                continue;
            }
            let a = reconstruct_bias(&bb, x0, x1, q);
            let b = reconstruct_bias(&bb, -x0, -x1, q.opposite());
            assert!((a - b).abs() < 1e-6, "({x0},{x1},{q:?}): {a} vs {b}");
            checked += 1;
        }
    }

    #[test]
    fn bias_continuous_across_boundary() {
        let (bb, _) = solved();
        for x0 in [-2.0, -0.7, 0.0, 0.4, 1.5] {
            for q in [Position::Long, Position::Short] {
                let b = bb.boundary(x0, q);
                let long = 0.4 * b + bb.h_plus(x0, q);
                let short = -0.4 * b + bb.h_minus(x0, q);
                assert!((long - short).abs() < 1e-6, "x0={x0} {q:?}: {long} vs {short}");
            }
        }
    }

    #[test]
    fn decide_examples() {
        let (bb, _) = solved();
        let x0 = 0.3;
        let mid = 0.5 * (bb.boundary(x0, Position::Long) + bb.boundary(x0, Position::Short));
        assert_eq!(decide(&bb, &MarketState::new(x0, mid, Position::Long)), Action::GoLong);
        assert_eq!(decide(&bb, &MarketState::new(x0, mid, Position::Short)), Action::GoShort);
        let far = bb.boundary(x0, Position::Short) + 5.0;
        for q in [Position::Long, Position::Short] {
            assert_eq!(decide(&bb, &MarketState::new(x0, far, q)), Action::GoLong);
        }
        let tie = bb.boundary(x0, Position::Long);
        assert_eq!(decide(&bb, &MarketState::new(x0, tie, Position::Long)), Action::GoLong);

        let p = params(0.8, 0.4, 0.0);
        let (free, _) = solve_fixed_point(&SolverConfig::default(), &p).unwrap();
        for (x0, x1) in [(1.0, -1.0), (-1.0, 1.0), (0.5, -1.5), (-0.2, 0.3)] {
            let want = if 0.8 * x0 + 0.4 * x1 >= 0.0 { Action::GoLong } else { Action::GoShort };
            assert_eq!(decide(&free, &MarketState::new(x0, x1, Position::Short)), want);
        }
    }

    #[test]
    fn config_and_regime_errors() {
        let p = params(0.8, 0.4, 0.5);
        let bad = SolverConfig { epsilon: 0.0, ..Default::default() };
        assert!(matches!(solve_fixed_point(&bad, &p), Err(SolverError::InvalidConfig(_))));
        let bad = SolverConfig { max_iterations: 0, ..Default::default() };
        assert!(matches!(solve_fixed_point(&bad, &p), Err(SolverError::InvalidConfig(_))));
        let bad = SolverConfig { init: InitMode::Supplied { h: vec![0.0; 3], g: vec![0.0; 3] }, ..Default::default() };
        assert!(matches!(solve_fixed_point(&bad, &p), Err(SolverError::InvalidConfig(_))));
        assert!(matches!(
            solve_fixed_point(&SolverConfig::default(), &params(0.8, -0.4, 0.5)),
            Err(SolverError::UnsupportedRegime(_))
        ));
        let flat = SolverConfig {
            grid: GridSpec::new(5, 2.0).unwrap(),
            init: InitMode::Supplied { h: vec![0.0; 5], g: vec![1.0; 5] },
            ..Default::default()
        };
        assert!(matches!(
            solve_fixed_point(&flat, &p),
            Err(SolverError::BoundaryNotInvertible { iteration: 0, .. })
        ));
    }

    #[test]
    fn not_converged_carries_report() {
        let cfg = SolverConfig { max_iterations: 2, ..Default::default() };
        match solve_fixed_point(&cfg, &params(0.8, 0.4, 0.5)) {
            Err(SolverError::NotConverged { boundary, report }) => {
                assert_eq!(report.iterations, 2);
                assert!(!report.converged);
                assert!(report.lambda.is_finite());
                assert_eq!(boundary.nodes().len(), 1201);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn warns_outside_proven_regime() {
        let (_, rep) = solve_fixed_point(&SolverConfig::default(), &params(0.3, 0.8, 0.5)).unwrap();
        assert_eq!(rep.warnings.len(), 2);
    }

    #[test]
    fn supplied_init_round_trips() {
        let (bb, rep) = solved();
        let cfg = SolverConfig {
            init: InitMode::Supplied { h: bb.h().values().to_vec(), g: bb.g().values().to_vec() },
            ..Default::default()
        };
        let (again, rep2) = solve_fixed_point(&cfg, bb.params()).unwrap();
        assert_eq!(rep2.iterations, 1);
        assert!((rep2.lambda - rep.lambda).abs() < 1e-9);
        assert!(again.g().sup_distance(bb.g()) <= 1e-8);
    }

    #[test]
    fn parallel_sweep_matches_sequential() {
        let (bb, _) = solved();
        let rule = gl();
        let par = apply_t2(&bb, &rule).unwrap();
        let prim = WeightedPrimitive::new(bb.h(), &rule);
        let (rho0, rho1, c, w) = (0.8, 0.4, 0.5, 0.5 / 0.4);
        for (x, v) in bb.nodes().iter().zip(par.values()) {
            let x = *x;
            let inv = |t: f64| bb.g().invert(t).unwrap();
            let (gx, gxw, gm, gmw) = (inv(x), inv(x - w), inv(-x), inv(-x - w));
            let seq = -(rho0 / rho1) * x - c / (2.0 * rho1)
                + (prim.between(gm, gmw) - prim.between(gx, gxw)) / (2.0 * rho1)
                - x * normal_mass(gx, gxw)
                - c / (2.0 * rho1) * normal_mass(gx, gm);
            assert_eq!(seq.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn csv_and_report_serialize() {
        let (bb, rep) = solved();
        let csv = bb.to_csv();
        assert!(csv.starts_with("x,H,G_long,G_short\n"));
        assert_eq!(csv.lines().count(), 1202);
        let js = serde_json::to_value(&rep).unwrap();
        assert_eq!(js["converged"], true);
        let cfg: SolverConfig = serde_json::from_str(&serde_json::to_string(&SolverConfig::default()).unwrap()).unwrap();
        assert_eq!(cfg, SolverConfig::default());
    }
}
