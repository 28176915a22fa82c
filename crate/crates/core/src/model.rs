//! MDP primitives: model parameters, states, actions, the transition map and
//! the per-period reward.
//!
//! The target follows `Y_t = ρ0·X_t + ρ1·X_{t-1} + ε_t` with IID standard
//! normal signals and noise. A state carries the current and previous signal
//! together with the position held going into the period.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ParamError {
    #[error("rho0 must be finite and > 0 (got {0})")]
    Rho0(f64),
    #[error("rho1 must be finite and nonzero (got {0}); the boundary form divides by rho1")]
    Rho1(f64),
    #[error("switch cost must be finite and >= 0 (got {0})")]
    Cost(f64),
    #[error("rho0^2 + rho1^2 = {0} differs from the table configuration value 0.8")]
    NotTableConfiguration(f64),
}

/// Correlation strengths of the current and lagged signal plus the switch cost.
///
/// Fields are private so `kappa` can never go stale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    rho0: f64,
    rho1: f64,
    c: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    rho0: f64,
    rho1: f64,
    c: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = ParamError;
    fn try_from(r: RawParams) -> Result<Self, ParamError> {
        ModelParams::new(r.rho0, r.rho1, r.c)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams { rho0: p.rho0, rho1: p.rho1, c: p.c }
    }
}

impl ModelParams {
    pub fn new(rho0: f64, rho1: f64, c: f64) -> Result<Self, ParamError> {
        if !(rho0.is_finite() && rho0 > 0.0) {
            return Err(ParamError::Rho0(rho0));
        }
        if !rho1.is_finite() || rho1 == 0.0 {
            return Err(ParamError::Rho1(rho1));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(ParamError::Cost(c));
        }
        Ok(Self { rho0, rho1, c })
    }

    /// Like [`ModelParams::new`], additionally requiring `ρ0² + ρ1² = 0.8`
    /// to 1e-12, the normalization used by the simulation tables.
    pub fn table_configuration(rho0: f64, rho1: f64, c: f64) -> Result<Self, ParamError> {
        let p = Self::new(rho0, rho1, c)?;
        let s = rho0 * rho0 + rho1 * rho1;
        if (s - 0.8).abs() > 1e-12 {
            return Err(ParamError::NotTableConfiguration(s));
        }
        Ok(p)
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    /// Position-switch cost.
    pub fn cost(&self) -> f64 {
        self.c
    }

    /// Ratio ρ1/ρ0.
    pub fn kappa(&self) -> f64 {
        self.rho1 / self.rho0
    }

    pub fn with_cost(&self, c: f64) -> Result<Self, ParamError> {
        Self::new(self.rho0, self.rho1, c)
    }

    /// Width `c/ρ1` of the no-trade zone along the lagged-signal axis.
    pub fn zone_width(&self) -> f64 {
        self.c / self.rho1
    }
}

/// Held position. Only long and short exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Position {
    Long,
    Short,
}

impl Position {
    /// `+1` for long, `-1` for short.
    pub fn sign(self) -> f64 {
        match self {
            Position::Long => 1.0,
            Position::Short => -1.0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Position::Long => Position::Short,
            Position::Short => Position::Long,
        }
    }

    pub fn from_sign(s: i32) -> Option<Self> {
        match s {
            1 => Some(Position::Long),
            -1 => Some(Position::Short),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    GoLong,
    GoShort,
}

impl Action {
    /// Position held after taking the action.
    pub fn target(self) -> Position {
        match self {
            Action::GoLong => Position::Long,
            Action::GoShort => Position::Short,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Action::GoLong => Action::GoShort,
            Action::GoShort => Action::GoLong,
        }
    }
}

impl From<Position> for Action {
    fn from(p: Position) -> Self {
        match p {
            Position::Long => Action::GoLong,
            Position::Short => Action::GoShort,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    /// Current-period signal.
    pub x0: f64,
    /// Previous-period signal.
    pub x1: f64,
    pub q: Position,
}

impl MarketState {
    pub fn new(x0: f64, x1: f64, q: Position) -> Self {
        Self { x0, x1, q }
    }

    /// `(−x0, −x1, −q)`.
    pub fn mirror(&self) -> Self {
        Self { x0: -self.x0, x1: -self.x1, q: self.q.opposite() }
    }
}

/// One step of the system map: the fresh draw becomes the current signal,
/// the current signal becomes the lag, the position becomes the action's target.
pub fn transition(state: MarketState, action: Action, noise: f64) -> MarketState {
    MarketState { x0: noise, x1: state.x0, q: action.target() }
}

/// `q·(ρ0·x0 + ρ1·x1)`.
pub fn predictable_return(x0: f64, x1: f64, q: Position, params: &ModelParams) -> f64 {
    q.sign() * (params.rho0 * x0 + params.rho1 * x1)
}

/// Immediate reward of taking `action` in `state`: the predictable return of
/// the new position, less `c` when the position flips.
pub fn reward(state: MarketState, action: Action, params: &ModelParams) -> f64 {
    let q_new = action.target();
    let cost = if q_new != state.q { params.c } else { 0.0 };
    predictable_return(state.x0, state.x1, q_new, params) - cost
}

/// Draws a realized target `Y_t` for the given signals.
pub fn sample_target<R: Rng + ?Sized>(x0: f64, x1: f64, params: &ModelParams, rng: &mut R) -> f64 {
    let eps: f64 = rng.sample(StandardNormal);
    params.rho0 * x0 + params.rho1 * x1 + eps
}
