//! Small-cost closed forms: the myopic (naive) boundary, the bias slice at
//! zero cost, the cost-derivative of the boundary at zero cost, and the
//! resulting first-order boundary.

use crate::model::{ModelParams, Position};
use crate::numerics::{normal_mass, std_normal_pdf, GridFunction, NumericsError};

/// Boundary of the single-period rule: hold long while
/// `ρ0·x0 + ρ1·x1 ≥ −c/2`, hold short while it is `< c/2`.
pub fn naive_boundary(x: f64, q: Position, params: &ModelParams) -> f64 {
    let (rho0, rho1, c) = (params.rho0(), params.rho1(), params.cost());
    let base = -(rho0 / rho1) * x;
    match q {
        Position::Long => base - c / (2.0 * rho1),
        Position::Short => base + c / (2.0 * rho1),
    }
}

/// Bias slice `H(x, 0)` at zero cost, normalized so `H(0, 0) = 0`:
/// `ρ0·x + ρ1·x·∫_{−κx}^{κx} f − 2ρ0·∫_0^{κx} y f(y) dy`.
///
/// Equivalently `ρ0·x + E|ρ0·Y + ρ1·x| − E|ρ0·Y|`, so `H(x,0) − ρ0·x` is even.
pub fn h_zero_cost(x: f64, params: &ModelParams) -> f64 {
    let (rho0, rho1) = (params.rho0(), params.rho1());
    let kx = params.kappa() * x;
    // ∫_0^{a} y f(y) dy = f(0) − f(a)
    let first_moment = std_normal_pdf(0.0) - std_normal_pdf(kx);
    rho0 * x + rho1 * x * normal_mass(-kx, kx) - 2.0 * rho0 * first_moment
}

/// `∂G/∂c (x, 0)`, assembled term by term from the surviving terms of the
/// differentiated boundary equation at zero cost.
#[allow(non_snake_case)]
pub fn dG_dc_zero(x: f64, params: &ModelParams) -> f64 {
    let rho1 = params.rho1();
    let kappa = params.kappa();
    let kx = kappa * x;
    let dginv_dx = -kappa;
    let f_kx = std_normal_pdf(kx);
    let h_plus = h_zero_cost(kx, params);
    let h_minus = h_zero_cost(-kx, params);

    let intercept = -1.0 / (2.0 * rho1);
    let upper = -(1.0 / (2.0 * rho1 * rho1)) * h_plus * f_kx * dginv_dx;
    let lower = (1.0 / (2.0 * rho1 * rho1)) * h_minus * f_kx * dginv_dx;
    let drift = -x * std_normal_pdf(-kx) * (-1.0 / rho1) * dginv_dx;
    let zone = -(1.0 / (2.0 * rho1)) * normal_mass(-kx, kx);
    intercept + upper + lower + drift + zone
}

/// `−(ρ0/ρ1)·x + c·∂G/∂c(x, 0)` on the long slice, shifted by `c/ρ1` on the short slice.
pub fn first_order_boundary(x: f64, q: Position, c: f64, params: &ModelParams) -> f64 {
    let long = -(params.rho0() / params.rho1()) * x + dG_dc_zero(x, params) * c;
    match q {
        Position::Long => long,
        Position::Short => long + c / params.rho1(),
    }
}

/// First-order small-cost boundary for fixed parameters (cost taken from `params`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderBoundary {
    params: ModelParams,
}

impl FirstOrderBoundary {
    pub fn new(params: ModelParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn eval(&self, x: f64, q: Position) -> f64 {
        first_order_boundary(x, q, self.params.cost(), &self.params)
    }

    /// Long slice tabulated on `nodes`.
    pub fn tabulate(&self, nodes: Vec<f64>) -> Result<GridFunction, NumericsError> {
        GridFunction::from_fn(nodes, |x| self.eval(x, Position::Long))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{std_normal_cdf, Quadrature};

    fn params(rho0: f64, rho1: f64, c: f64) -> ModelParams {
        ModelParams::new(rho0, rho1, c).unwrap()
    }

    /// Independent oracle for the zero-cost bias slice: 2000-panel
    /// Gauss–Legendre on each displayed integral.
    fn h_zero_cost_quadrature(x: f64, p: &ModelParams) -> f64 {
        let rule = Quadrature::gauss_legendre(8).unwrap();
        let kx = p.kappa() * x;
        let panels = 2000;
        let integ = |a: f64, b: f64, g: &dyn Fn(f64) -> f64| {
            let w = (b - a) / panels as f64;
            (0..panels).map(|i| rule.integrate_interval(a + i as f64 * w, a + (i + 1) as f64 * w, g)).sum::<f64>()
        };
        let mass = integ(-kx, kx, &std_normal_pdf);
        let moment = integ(0.0, kx, &|y| y * std_normal_pdf(y));
        p.rho0() * x + p.rho1() * x * mass - 2.0 * p.rho0() * moment
    }

    #[test]
    fn naive_boundary_examples() {
        let p = params(0.8, 0.3, 0.5);
        assert!((naive_boundary(0.0, Position::Long, &p) + 0.5 / 0.6).abs() < 1e-15);
        for x in [-2.0, -0.3, 0.0, 1.7] {
            let w = naive_boundary(x, Position::Short, &p) - naive_boundary(x, Position::Long, &p);
            assert!((w - 0.5 / 0.3).abs() < 1e-12);
        }
        let free = params(0.8, 0.3, 0.0);
        for q in [Position::Long, Position::Short] {
            assert_eq!(naive_boundary(1.2, q, &free), -(0.8 / 0.3) * 1.2);
        }
    }

    #[test]
    fn h_zero_cost_examples() {
        let p = params(0.8, 0.4, 0.0);
        assert_eq!(h_zero_cost(0.0, &p), 0.0);
        let oracle = h_zero_cost_quadrature(1.0, &p);
        assert!((h_zero_cost(1.0, &p) - oracle).abs() < 1e-12, "{oracle}");
        // frozen value of the quadrature oracle at x = 1
        assert!((oracle - 0.878_166_843_199_797).abs() < 1e-12, "{oracle:.15}");
        for x in [-3.0, -1.1, 0.4, 2.5] {
            assert!((h_zero_cost(x, &p) - h_zero_cost_quadrature(x, &p)).abs() < 1e-12);
            // H(x,0) − ρ0·x is even
            let e = h_zero_cost(x, &p) - 0.8 * x;
            let e_neg = h_zero_cost(-x, &p) + 0.8 * x;
            assert!((e - e_neg).abs() < 1e-14);
        }
    }

    #[test]
    fn h_zero_cost_matches_folded_normal_form() {
        // ρ0·x + E|ρ0·Y + ρ1·x| − E|ρ0·Y| via E|Y + a| = a(2Φ(a) − 1) + 2f(a)
        let p = params(0.6, 0.66, 0.0);
        let fold = |a: f64| a * (2.0 * std_normal_cdf(a) - 1.0) + 2.0 * std_normal_pdf(a);
        for x in [-2.0, -0.5, 0.3, 1.9] {
            let direct = 0.6 * x + 0.6 * (fold(p.kappa() * x) - fold(0.0));
            assert!((h_zero_cost(x, &p) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn h_zero_cost_respects_weighted_bound() {
        let p = params(0.8, 0.4, 0.0);
        let k = p.kappa();
        let a1 = (1.0 + k) / (1.0 - k * 2.0 / (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt());
        for i in 1..=600 {
            let x = i as f64 * 0.01;
            for s in [-1.0, 1.0] {
                let ratio = (h_zero_cost(s * x, &p) / (s * x)).abs() / 0.8;
                assert!(ratio <= a1, "x={} ratio={ratio} a1={a1}", s * x);
            }
        }
    }

    #[test]
    fn derivative_reduces_to_cdf_form() {
        // the term-by-term sum collapses to −Φ(κx)/ρ1
        for (r0, r1) in [(0.8, 0.4), (0.3, 0.8), (0.889, 0.1)] {
            let p = params(r0, r1, 0.0);
            for x in [-3.0, -0.7, 0.0, 0.25, 1.0, 2.2] {
                let expected = -std_normal_cdf(p.kappa() * x) / r1;
                assert!((dG_dc_zero(x, &p) - expected).abs() < 1e-13, "x={x}");
            }
        }
    }

    #[test]
    fn derivative_at_origin_and_symmetry() {
        let p = params(0.8, 0.4, 0.0);
        assert_eq!(dG_dc_zero(0.0, &p), -1.0 / 0.8);
        // G(x) + G(−x) = −c/ρ1 ⇒ ∂G/∂c(x) + ∂G/∂c(−x) = −1/ρ1
        for x in [0.3, 1.0, 2.7] {
            assert!((dG_dc_zero(x, &p) + dG_dc_zero(-x, &p) + 1.0 / 0.4).abs() < 1e-13);
        }
    }

    #[test]
    fn first_order_examples() {
        let p = params(0.8, 0.4, 0.0);
        for x in [-1.0, 0.0, 2.0] {
            assert_eq!(first_order_boundary(x, Position::Long, 0.0, &p), -2.0 * x);
            assert_eq!(first_order_boundary(x, Position::Long, 0.0, &p), naive_boundary(x, Position::Long, &p));
        }
        let c = 0.37;
        assert!((first_order_boundary(0.0, Position::Long, c, &p) + c / 0.8).abs() < 1e-15);
        let w = first_order_boundary(0.5, Position::Short, c, &p) - first_order_boundary(0.5, Position::Long, c, &p);
        assert!((w - c / 0.4).abs() < 1e-14);
    }

    #[test]
    fn gap_to_naive_is_cdf_offset() {
        // first-order minus naive on the long slice: c·(1/2 − Φ(κx))/ρ1
        for (r0, r1) in [(0.3, 0.8), (0.8, 0.3)] {
            let p = params(r0, r1, 0.5);
            let fo = FirstOrderBoundary::new(p);
            for x in [-2.0, -0.4, 0.0, 0.9, 3.0] {
                let gap = fo.eval(x, Position::Long) - naive_boundary(x, Position::Long, &p);
                let expected = 0.5 * (0.5 - std_normal_cdf(p.kappa() * x)) / r1;
                assert!((gap - expected).abs() < 1e-13);
            }
        }
    }
}
