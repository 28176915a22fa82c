//! Optimal no-trade-zone policies for a single-asset long/short trading
//! problem with switching costs and a two-lag decaying signal.

pub mod approx;
pub mod cli;
pub mod diagnostics;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod simulate;
pub mod solver;
