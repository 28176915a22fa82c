//! Gaussian utilities, quadrature, and tabulated monotone functions.

pub mod grid;
pub mod normal;
pub mod quadrature;

pub use grid::{fmt_f64, integrate_weighted, GridFunction, GridSpec, WeightedPrimitive};
pub use normal::{normal_first_moment, normal_mass, std_normal_cdf, std_normal_pdf, std_normal_sf, INV_SQRT_2PI};
pub use quadrature::{Quadrature, RuleKind};

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum NumericsError {
    #[error("nodes and values differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("too few grid nodes ({0})")]
    TooFewNodes(usize),
    #[error("nodes must be strictly increasing")]
    NodesNotIncreasing,
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("function is not strictly decreasing (first violation at x = {0})")]
    NotMonotone(f64),
    #[error("integration bound or target is NaN")]
    NonFiniteInput,
    #[error("invalid quadrature node count {0}")]
    InvalidNodeCount(usize),
    #[error("weighted integrals need a Gauss-Legendre panel rule")]
    WrongRule,
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
}
