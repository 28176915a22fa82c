//! Fixed Gaussian quadrature rules.
//!
//! Gauss–Legendre is used panel-wise over grid cells; Gauss–Hermite is
//! re-expressed for the standard normal weight and integrates smooth
//! expectations over the whole line.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::NumericsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleKind {
    /// Nodes/weights on `[-1, 1]`, unit weight.
    GaussLegendre,
    /// Nodes/weights for `∫ g(y) f(y) dy`, `f` the standard normal density.
    GaussHermite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    kind: RuleKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const MAX_NEWTON: usize = 100;

impl Quadrature {
    pub fn new(kind: RuleKind, n: usize) -> Result<Self, NumericsError> {
        match kind {
            RuleKind::GaussLegendre => Self::gauss_legendre(n),
            RuleKind::GaussHermite => Self::gauss_hermite(n),
        }
    }

    pub fn gauss_legendre(n: usize) -> Result<Self, NumericsError> {
        if n == 0 || n > 512 {
            return Err(NumericsError::InvalidNodeCount(n));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..MAX_NEWTON {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[m - 1] = 0.0;
        }
        Ok(Self { kind: RuleKind::GaussLegendre, nodes, weights })
    }

    pub fn gauss_hermite(n: usize) -> Result<Self, NumericsError> {
        if n == 0 || n > 256 {
            return Err(NumericsError::InvalidNodeCount(n));
        }
        // Physicists' rule for e^{-x²}, then y = √2·x and w/√π.
        let pim4 = PI.powf(-0.25);
        let mut xs = vec![0.0; n];
        let mut ws = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * xs[0],
                3 => 1.91 * z - 0.91 * xs[1],
                _ => 2.0 * z - xs[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..MAX_NEWTON {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            xs[i] = z;
            ws[i] = 2.0 / (pp * pp);
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let sqrt_pi = PI.sqrt();
        for i in 0..m {
            let y = std::f64::consts::SQRT_2 * xs[i];
            let w = ws[i] / sqrt_pi;
            nodes[i] = -y;
            nodes[n - 1 - i] = y;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[m - 1] = 0.0;
        }
        Ok(Self { kind: RuleKind::GaussHermite, nodes, weights })
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b g(y) dy` with the rule mapped onto `[a, b]` (Gauss–Legendre only).
    pub fn integrate_interval<F: Fn(f64) -> f64>(&self, a: f64, b: f64, g: F) -> f64 {
        debug_assert_eq!(self.kind, RuleKind::GaussLegendre);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * g(mid + half * x);
        }
        s * half
    }

    /// `E[g(Y)]` for `Y ~ N(0, 1)` (Gauss–Hermite only).
    pub fn expectation<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        debug_assert_eq!(self.kind, RuleKind::GaussHermite);
        self.nodes.iter().zip(&self.weights).map(|(y, w)| w * g(*y)).sum()
    }
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
    }
    let nf = n as f64;
    (p1, nf * (z * p1 - p2) / (z * z - 1.0))
}
