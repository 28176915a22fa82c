//! Brute-force check of the solver: the MDP on a quantized signal grid,
//! solved by textbook relative value iteration.
//!
//! States are `(q, x0 = y_i, x1 = y_k)`. The next current signal lands on
//! node `y_j` with the Gaussian mass of its Voronoi cell; the next lag is the
//! current signal.

use rayon::prelude::*;
use std::fmt::Write as _;
use thiserror::Error;

use crate::model::{reward, Action, MarketState, ModelParams, Position};
use crate::numerics::{fmt_f64, normal_mass};
use crate::solver::{decide, BiasBoundary};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum OracleError {
    #[error("oracle grid needs an odd node count >= 21 (got {0})")]
    BadNodeCount(usize),
    #[error("oracle grid extent must be finite and > 0 (got {0})")]
    BadExtent(f64),
    #[error("epsilon must be > 0 (got {0})")]
    BadEpsilon(f64),
    #[error("relative value iteration stopped after {iterations} sweeps with span {span:.3e}")]
    NotConverged { iterations: usize, span: f64 },
}

const ACTIONS: [Action; 2] = [Action::GoLong, Action::GoShort];
const POSITIONS: [Position; 2] = [Position::Long, Position::Short];

fn pos_index(q: Position) -> usize {
    match q {
        Position::Long => 0,
        Position::Short => 1,
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteMDP {
    params: ModelParams,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `rewards[((q·n + i)·n + k)·2 + a]`.
    rewards: Vec<f64>,
}

impl DiscreteMDP {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Destination mass per node.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the origin node.
    pub fn center(&self) -> usize {
        self.nodes.len() / 2
    }

    fn idx(&self, q: usize, i: usize, k: usize) -> usize {
        (q * self.nodes.len() + i) * self.nodes.len() + k
    }

    pub fn reward(&self, q: Position, i: usize, k: usize, a: Action) -> f64 {
        let ai = match a {
            Action::GoLong => 0,
            Action::GoShort => 1,
        };
        self.rewards[self.idx(pos_index(q), i, k) * 2 + ai]
    }
}

/// Uniform `n`-node grid on `[−extent, extent]` with Voronoi-cell weights.
pub fn build_discrete(params: &ModelParams, n_nodes: usize, extent: f64) -> Result<DiscreteMDP, OracleError> {
    if n_nodes < 21 || n_nodes.is_multiple_of(2) {
        return Err(OracleError::BadNodeCount(n_nodes));
    }
    if !(extent.is_finite() && extent > 0.0) {
        return Err(OracleError::BadExtent(extent));
    }
    let m = (n_nodes / 2) as f64;
    let step = extent / m;
    let nodes: Vec<f64> = (0..n_nodes).map(|i| (i as f64 - m) * step).collect();
    let edge = |i: usize| -> f64 {
        match i {
            0 => f64::NEG_INFINITY,
            i if i == n_nodes => f64::INFINITY,
            i => 0.5 * (nodes[i - 1] + nodes[i]),
        }
    };
    let weights: Vec<f64> = (0..n_nodes).map(|i| normal_mass(edge(i), edge(i + 1))).collect();
    let mut rewards = Vec::with_capacity(2 * n_nodes * n_nodes * 2);
    for q in POSITIONS {
        for &x0 in &nodes {
            for &x1 in &nodes {
                for a in ACTIONS {
                    rewards.push(reward(MarketState::new(x0, x1, q), a, params));
                }
            }
        }
    }
    Ok(DiscreteMDP { params: *params, nodes, weights, rewards })
}

/// Relative value iteration output. Tables are indexed like the MDP rewards
/// without the action axis.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub lambda: f64,
    pub iterations: usize,
    pub span: f64,
    pub bias: Vec<f64>,
    pub policy: Vec<Action>,
    /// `V[q'][i] = Σ_j w_j·h(q', y_j, y_i)`.
    continuation: [Vec<f64>; 2],
    n: usize,
}

impl OracleSolution {
    pub fn bias_at(&self, q: Position, i: usize, k: usize) -> f64 {
        self.bias[(pos_index(q) * self.n + i) * self.n + k]
    }

    pub fn action_at(&self, q: Position, i: usize, k: usize) -> Action {
        self.policy[(pos_index(q) * self.n + i) * self.n + k]
    }

    /// First `k` with `GoLong` in the `(q, x0 = y_i)` column, if any.
    pub fn first_long(&self, q: Position, i: usize) -> Option<usize> {
        (0..self.n).find(|&k| self.action_at(q, i, k) == Action::GoLong)
    }

    /// Whether the `(q, y_i)` column is short below one index and long from it on.
    pub fn is_threshold_column(&self, q: Position, i: usize) -> bool {
        let start = self.first_long(q, i).unwrap_or(self.n);
        (start..self.n).all(|k| self.action_at(q, i, k) == Action::GoLong)
    }

    /// Boundary implied by the continuation values where long and short tie:
    /// `−(ρ0/ρ1)x − c/(2ρ1) + (V₋(x) − V₊(x))/(2ρ1)` on the long slice.
    pub fn implied_boundary(&self, mdp: &DiscreteMDP, i: usize) -> f64 {
        let p = &mdp.params;
        let x = mdp.nodes[i];
        -(p.rho0() / p.rho1()) * x - p.cost() / (2.0 * p.rho1())
            + (self.continuation[1][i] - self.continuation[0][i]) / (2.0 * p.rho1())
    }

    /// Rows `q, x0, x1, h, action`.
    pub fn to_csv(&self, mdp: &DiscreteMDP) -> String {
        let mut s = String::from("q,x0,x1,h,action\n");
        for q in POSITIONS {
            for (i, x0) in mdp.nodes.iter().enumerate() {
                for (k, x1) in mdp.nodes.iter().enumerate() {
                    let a = match self.action_at(q, i, k) {
                        Action::GoLong => 1,
                        Action::GoShort => -1,
                    };
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{}",
                        q.sign() as i32,
                        fmt_f64(*x0),
                        fmt_f64(*x1),
                        fmt_f64(self.bias_at(q, i, k)),
                        a
                    );
                }
            }
        }
        s
    }
}

/// Span-seminorm stopped relative value iteration, normalized at `(0, 0, +1)`.
pub fn relative_value_iteration(
    mdp: &DiscreteMDP,
    epsilon: f64,
    max_iterations: usize,
) -> Result<OracleSolution, OracleError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(OracleError::BadEpsilon(epsilon));
    }
    let n = mdp.nodes.len();
    let reference = mdp.idx(0, mdp.center(), mdp.center());
    let mut h = vec![0.0; 2 * n * n];
    let mut next = vec![0.0; 2 * n * n];
    let mut policy = vec![Action::GoLong; 2 * n * n];
    let mut span = f64::INFINITY;
    let mut cont = [vec![0.0; n], vec![0.0; n]];
    for iteration in 1..=max_iterations {
        for (qn, v) in cont.iter_mut().enumerate() {
            v.par_iter_mut().enumerate().for_each(|(i, out)| {
                *out = (0..n).map(|j| mdp.weights[j] * h[mdp.idx(qn, j, i)]).sum();
            });
        }
        next.par_chunks_mut(n).zip(policy.par_chunks_mut(n)).enumerate().for_each(|(row, (out, pol))| {
            let (q, i) = (row / n, row % n);
            for k in 0..n {
                let base = mdp.idx(q, i, k) * 2;
                let long = mdp.rewards[base] + cont[0][i];
                let short = mdp.rewards[base + 1] + cont[1][i];
                if long >= short {
                    out[k] = long;
                    pol[k] = Action::GoLong;
                } else {
                    out[k] = short;
                    pol[k] = Action::GoShort;
                }
            }
        });
        let (lo, hi) = next
            .iter()
            .zip(&h)
            .map(|(a, b)| a - b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        span = hi - lo;
        let lambda = 0.5 * (lo + hi);
        let offset = next[reference];
        for (dst, src) in h.iter_mut().zip(&next) {
            *dst = src - offset;
        }
        if span < epsilon {
            return Ok(OracleSolution { lambda, iterations: iteration, span, bias: h, policy, continuation: cont, n });
        }
    }
    Err(OracleError::NotConverged { iterations: max_iterations, span })
}

/// Agreement between the solver's decision rule and the oracle policy on the
/// oracle state grid.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Agreement {
    pub states: usize,
    pub disagreements: usize,
    /// Largest distance, in grid cells along `x1`, from a disagreeing state
    /// to the solver boundary.
    pub max_cell_offset: f64,
}

impl Agreement {
    pub fn fraction(&self) -> f64 {
        1.0 - self.disagreements as f64 / self.states as f64
    }
}

pub fn compare_with_solver(mdp: &DiscreteMDP, sol: &OracleSolution, bb: &BiasBoundary) -> Agreement {
    let n = mdp.len();
    let step = mdp.nodes[1] - mdp.nodes[0];
    let mut disagreements = 0;
    let mut max_cell_offset: f64 = 0.0;
    for q in POSITIONS {
        for i in 0..n {
            let x0 = mdp.nodes[i];
            let g = bb.boundary(x0, q);
            for k in 0..n {
                let x1 = mdp.nodes[k];
                if decide(bb, &MarketState::new(x0, x1, q)) != sol.action_at(q, i, k) {
                    disagreements += 1;
                    max_cell_offset = max_cell_offset.max((x1 - g).abs() / step);
                }
            }
        }
    }
    Agreement { states: 2 * n * n, disagreements, max_cell_offset }
}
