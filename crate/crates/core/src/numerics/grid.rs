//! Tabulated real functions on a strictly increasing node set.
//!
//! Values are interpolated by a monotone piecewise-cubic Hermite scheme
//! (three-point slope estimates with the Fritsch–Carlson limiter) and
//! extrapolated linearly with the end slopes outside the nodes. Functions
//! flagged `monotone_decreasing` can be inverted.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::normal::{normal_first_moment, normal_mass, std_normal_pdf};
use super::quadrature::{Quadrature, RuleKind};
use super::NumericsError;

/// Uniform grid on `[-extent, extent]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nodes: usize,
    pub extent: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nodes: 1201, extent: 6.0 }
    }
}

impl GridSpec {
    pub fn new(nodes: usize, extent: f64) -> Result<Self, NumericsError> {
        let g = Self { nodes, extent };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if self.nodes < 3 {
            return Err(NumericsError::TooFewNodes(self.nodes));
        }
        if !(self.extent.is_finite() && self.extent > 0.0) {
            return Err(NumericsError::NonFinite("grid extent"));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        2.0 * self.extent / (self.nodes - 1) as f64
    }

    /// Node abscissae. Built as `±k·step` from the center outwards on odd grids
    /// so the node set is exactly symmetric.
    pub fn points(&self) -> Vec<f64> {
        let n = self.nodes;
        let h = self.step();
        if n % 2 == 1 {
            let m = n / 2;
            (0..n)
                .map(|i| {
                    if i == 0 {
                        -self.extent
                    } else if i == n - 1 {
                        self.extent
                    } else {
                        (i as f64 - m as f64) * h
                    }
                })
                .collect()
        } else {
            (0..n)
                .map(|i| if i == n - 1 { self.extent } else { -self.extent + i as f64 * h })
                .collect()
        }
    }

    /// Same extent, `factor`-times finer spacing.
    pub fn refined(&self, factor: usize) -> Self {
        Self { nodes: (self.nodes - 1) * factor.max(1) + 1, extent: self.extent }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    monotone_decreasing: bool,
    uniform: Option<(f64, f64)>,
}

impl GridFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self, NumericsError> {
        if nodes.len() != values.len() {
            return Err(NumericsError::LengthMismatch(nodes.len(), values.len()));
        }
        if nodes.len() < 2 {
            return Err(NumericsError::TooFewNodes(nodes.len()));
        }
        if nodes.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite("grid function entries"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NumericsError::NodesNotIncreasing);
        }
        let slopes = monotone_slopes(&nodes, &values);
        let uniform = detect_uniform(&nodes);
        Ok(Self { nodes, values, slopes, monotone_decreasing: false, uniform })
    }

    /// Tabulates `f` at the nodes.
    pub fn from_fn<F: FnMut(f64) -> f64>(nodes: Vec<f64>, f: F) -> Result<Self, NumericsError> {
        let values = nodes.iter().copied().map(f).collect();
        Self::new(nodes, values)
    }

    /// Builds and flags as strictly decreasing, rejecting data that is not.
    pub fn monotone_decreasing(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self, NumericsError> {
        Self::new(nodes, values)?.into_monotone_decreasing()
    }

    pub fn into_monotone_decreasing(mut self) -> Result<Self, NumericsError> {
        if let Some(i) = self.values.windows(2).position(|w| w[1] >= w[0]) {
            return Err(NumericsError::NotMonotone(self.nodes[i]));
        }
        self.monotone_decreasing = true;
        Ok(self)
    }

    pub fn is_monotone_decreasing(&self) -> bool {
        self.monotone_decreasing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first_node(&self) -> f64 {
        self.nodes[0]
    }

    pub fn last_node(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Cell index `k` with `nodes[k] <= x <= nodes[k+1]`, for `x` inside the range.
    fn cell(&self, x: f64) -> usize {
        let n = self.nodes.len();
        if let Some((x0, h)) = self.uniform {
            let mut k = (((x - x0) / h).floor() as isize).clamp(0, n as isize - 2) as usize;
            // floor can miss by one after rounding
            if x < self.nodes[k] && k > 0 {
                k -= 1;
            } else if x > self.nodes[k + 1] && k + 2 < n {
                k += 1;
            }
            k
        } else {
            match self.nodes.partition_point(|v| *v <= x) {
                0 => 0,
                p => (p - 1).min(n - 2),
            }
        }
    }

    fn end_slope(&self, left: bool) -> f64 {
        let n = self.nodes.len();
        let (d, secant) = if left {
            (self.slopes[0], (self.values[1] - self.values[0]) / (self.nodes[1] - self.nodes[0]))
        } else {
            (
                self.slopes[n - 1],
                (self.values[n - 1] - self.values[n - 2]) / (self.nodes[n - 1] - self.nodes[n - 2]),
            )
        };
        if d != 0.0 {
            d
        } else {
            secant
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x < self.nodes[0] {
            return self.values[0] + self.end_slope(true) * (x - self.nodes[0]);
        }
        if x > self.nodes[n - 1] {
            return self.values[n - 1] + self.end_slope(false) * (x - self.nodes[n - 1]);
        }
        let k = self.cell(x);
        self.hermite(k, x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x < self.nodes[0] {
            return self.end_slope(true);
        }
        if x > self.nodes[n - 1] {
            return self.end_slope(false);
        }
        let k = self.cell(x);
        let (xa, xb) = (self.nodes[k], self.nodes[k + 1]);
        let h = xb - xa;
        let t = (x - xa) / h;
        let (ya, yb) = (self.values[k], self.values[k + 1]);
        let (da, db) = (self.slopes[k], self.slopes[k + 1]);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * ya
            + (3.0 * t2 - 4.0 * t + 1.0) * h * da
            + (-6.0 * t2 + 6.0 * t) * yb
            + (3.0 * t2 - 2.0 * t) * h * db)
            / h
    }

    #[inline]
    fn hermite(&self, k: usize, x: f64) -> f64 {
        let (xa, xb) = (self.nodes[k], self.nodes[k + 1]);
        let h = xb - xa;
        let t = (x - xa) / h;
        hermite_basis(t, self.values[k], self.values[k + 1], h * self.slopes[k], h * self.slopes[k + 1])
    }

    /// Solves `g(x) = target`; linear extrapolation beyond the tabulated values.
    pub fn invert(&self, target: f64) -> Result<f64, NumericsError> {
        if !self.monotone_decreasing {
            return Err(NumericsError::NotMonotone(f64::NAN));
        }
        if !target.is_finite() {
            return Err(NumericsError::NonFiniteInput);
        }
        let n = self.values.len();
        if target >= self.values[0] {
            return Ok(self.nodes[0] + (target - self.values[0]) / self.end_slope(true));
        }
        if target <= self.values[n - 1] {
            return Ok(self.nodes[n - 1] + (target - self.values[n - 1]) / self.end_slope(false));
        }
        // first index whose value is < target; the bracket is [p-1, p]
        let p = self.values.partition_point(|v| *v >= target);
        let k = p - 1;
        if self.values[k] == target {
            return Ok(self.nodes[k]);
        }
        Ok(self.solve_cell(k, target))
    }

    fn solve_cell(&self, k: usize, target: f64) -> f64 {
        let (xa, xb) = (self.nodes[k], self.nodes[k + 1]);
        let h = xb - xa;
        let (ya, yb) = (self.values[k], self.values[k + 1]);
        let (ma, mb) = (h * self.slopes[k], h * self.slopes[k + 1]);
        let p = |t: f64| hermite_basis(t, ya, yb, ma, mb) - target;
        let dp = |t: f64| {
            let t2 = t * t;
            (6.0 * t2 - 6.0 * t) * ya + (3.0 * t2 - 4.0 * t + 1.0) * ma + (-6.0 * t2 + 6.0 * t) * yb + (3.0 * t2 - 2.0 * t) * mb
        };
        // decreasing on the cell: p(lo) > 0 > p(hi)
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut t = (ya - target) / (ya - yb);
        for _ in 0..100 {
            let v = p(t);
            if v == 0.0 {
                break;
            }
            if v > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let d = dp(t);
            let mut next = if d < 0.0 { t - v / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-16 || hi - lo <= 1e-16 {
                t = next;
                break;
            }
            t = next;
        }
        xa + t * h
    }

    /// Cumulative `∫ g(y) f(y) dy` helper with the given Gauss–Legendre rule per cell.
    pub fn weighted_primitive<'a>(&'a self, rule: &'a Quadrature) -> WeightedPrimitive<'a> {
        WeightedPrimitive::new(self, rule)
    }

    /// Maximum absolute difference at nodes; both functions must share nodes.
    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        debug_assert_eq!(self.nodes.len(), other.nodes.len());
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Two-column CSV with a header line, 17 significant digits.
    pub fn to_csv(&self, node_col: &str, value_col: &str) -> String {
        let mut s = String::with_capacity(self.nodes.len() * 50);
        let _ = writeln!(s, "{node_col},{value_col}");
        for (x, v) in self.nodes.iter().zip(&self.values) {
            let _ = writeln!(s, "{},{}", fmt_f64(*x), fmt_f64(*v));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, NumericsError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(NumericsError::Csv { line: 1, msg: "missing header".into() })?;
        if header.split(',').count() != 2 {
            return Err(NumericsError::Csv { line: 1, msg: "header must have two columns".into() });
        }
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let lineno = i + 2;
            let mut cols = line.split(',');
            let (a, b) = match (cols.next(), cols.next(), cols.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => return Err(NumericsError::Csv { line: lineno, msg: "expected two columns".into() }),
            };
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| NumericsError::Csv { line: lineno, msg: e.to_string() })
            };
            nodes.push(parse(a)?);
            values.push(parse(b)?);
        }
        Self::new(nodes, values)
    }
}

/// 17 significant digits, scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[inline]
fn hermite_basis(t: f64, ya: f64, yb: f64, ma: f64, mb: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * ya + (t3 - 2.0 * t2 + t) * ma + (-2.0 * t3 + 3.0 * t2) * yb + (t3 - t2) * mb
}

fn detect_uniform(nodes: &[f64]) -> Option<(f64, f64)> {
    let n = nodes.len();
    let h = (nodes[n - 1] - nodes[0]) / (n - 1) as f64;
    let tol = 1e-9 * h;
    nodes
        .iter()
        .enumerate()
        .all(|(i, x)| (x - (nodes[0] + i as f64 * h)).abs() <= tol)
        .then_some((nodes[0], h))
}

fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for i in 1..n - 1 {
        d[i] = (h[i] * delta[i - 1] + h[i - 1] * delta[i]) / (h[i - 1] + h[i]);
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    // Fritsch–Carlson limiter inside monotone runs; extrema keep their
    // three-point slope.
    let same_sign = |a: f64, b: f64| a * b > 0.0;
    for k in 0..n - 1 {
        let left_ok = k == 0 || same_sign(delta[k - 1], delta[k]);
        let right_ok = k + 2 >= n || same_sign(delta[k], delta[k + 1]);
        if delta[k] == 0.0 || !(left_ok && right_ok) {
            continue;
        }
        let a = d[k] / delta[k];
        let b = d[k + 1] / delta[k];
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            d[k] = tau * a * delta[k];
            d[k + 1] = tau * b * delta[k];
        }
    }
    d
}

/// Three-point one-sided slope, shape-preserving.
fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > (3.0 * del0).abs() {
        3.0 * del0
    } else {
        d
    }
}

/// `F(y) = ∫_{x_0}^{y} g(t) f(t) dt` for a grid function `g`, with `f` the
/// standard normal density. Inside the grid each cell is integrated with a
/// Gauss–Legendre rule; beyond it the linear extrapolation of `g` is
/// integrated in closed form, so infinite bounds are exact.
pub struct WeightedPrimitive<'a> {
    g: &'a GridFunction,
    rule: &'a Quadrature,
    cumulative: Vec<f64>,
}

impl<'a> WeightedPrimitive<'a> {
    pub fn new(g: &'a GridFunction, rule: &'a Quadrature) -> Self {
        assert_eq!(rule.kind(), RuleKind::GaussLegendre, "per-cell rule must be Gauss-Legendre");
        let n = g.len();
        let mut cumulative = Vec::with_capacity(n);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..n - 1 {
            acc += rule.integrate_interval(g.nodes[k], g.nodes[k + 1], |t| g.hermite(k, t) * std_normal_pdf(t));
            cumulative.push(acc);
        }
        Self { g, rule, cumulative }
    }

    pub fn at(&self, y: f64) -> f64 {
        let g = self.g;
        let n = g.len();
        let (x0, xn) = (g.nodes[0], g.nodes[n - 1]);
        if y < x0 {
            return -linear_tail(g.values[0], g.end_slope(true), x0, y, x0);
        }
        if y > xn {
            return self.cumulative[n - 1] + linear_tail(g.values[n - 1], g.end_slope(false), xn, xn, y);
        }
        let k = g.cell(y);
        let xa = g.nodes[k];
        if y == xa {
            return self.cumulative[k];
        }
        self.cumulative[k] + self.rule.integrate_interval(xa, y, |t| g.hermite(k, t) * std_normal_pdf(t))
    }

    /// `∫_a^b g f`; sign flips when `b < a`.
    pub fn between(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        self.at(b) - self.at(a)
    }
}

/// `∫_a^b (v + s·(t − x_ref)) f(t) dt`.
fn linear_tail(v: f64, s: f64, x_ref: f64, a: f64, b: f64) -> f64 {
    let mass = normal_mass(a, b);
    v * mass + s * (normal_first_moment(a, b) - x_ref * mass)
}

/// `∫_a^b h(y) f(y) dy` by the per-cell Gauss–Legendre primitive.
/// Infinite bounds are allowed; NaN bounds are rejected.
pub fn integrate_weighted(h: &GridFunction, a: f64, b: f64, rule: &Quadrature) -> Result<f64, NumericsError> {
    if a.is_nan() || b.is_nan() {
        return Err(NumericsError::NonFiniteInput);
    }
    if rule.kind() != RuleKind::GaussLegendre {
        return Err(NumericsError::WrongRule);
    }
    Ok(h.weighted_primitive(rule).between(a, b))
}
