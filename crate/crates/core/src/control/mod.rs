//! Adaptive coil controllers as step-update state machines.
//!
//! Every controller maps a regressor `x(n)` and a desired value `d(n)` to an
//! output `y(n) = wᵀx(n) + B(n)`, an error `e(n) = d(n) − y(n)`, and a weight
//! update. The convex combination controller runs two such filters — a
//! normalised, error-driven one and a fixed-rate one — and blends them with a
//! logistic coupling `γ = 1/(1 + e^{−b})`.

mod baselines;
mod condition;
mod convex;

pub use baselines::{atlms_step, lms_step, svs_step, AtlmsParams, FilterState, LmsParams, SvsParams};
pub use condition::{check_convergence_condition, lambda_max, ConditionReport};
pub use convex::{convex_step, ConvexParams, ConvexState};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("regressor has {got} taps, weights have {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite controller input")]
    NonFiniteInput,
    #[error("need at least {needed} regressor samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}

/// Additive output offset `B(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BiasModel {
    /// `B = 0`.
    #[default]
    Zero,
    /// `B = k·x₀ + b` on the most recent regressor tap.
    Affine { k: f64, b: f64 },
}

impl BiasModel {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            BiasModel::Zero => 0.0,
            BiasModel::Affine { k, b } => k * x.first().copied().unwrap_or(0.0) + b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInput<'a> {
    pub x: &'a [f64],
    pub d: f64,
}

/// Per-step diagnostics. Single-filter baselines report `y1 = y2 = y`,
/// `e1 = e2 = e`, their step size in `mu1`, `gamma = 1` and `b = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StepOutput {
    pub y: f64,
    pub y1: f64,
    pub y2: f64,
    pub e: f64,
    pub e1: f64,
    pub e2: f64,
    pub mu1: f64,
    /// Coupling after the step's update.
    pub gamma: f64,
    /// Update factor after the step's update.
    pub b: f64,
}

pub const DIAGNOSTICS_HEADER: &str = "n,y,y1,y2,e,e1,e2,gamma,b,mu1";

pub fn write_diagnostics_csv<W: std::io::Write>(mut out: W, rows: &[StepOutput]) -> std::io::Result<()> {
    writeln!(out, "{DIAGNOSTICS_HEADER}")?;
    for (n, r) in rows.iter().enumerate() {
        writeln!(out, "{n},{},{},{},{},{},{},{},{},{}", r.y, r.y1, r.y2, r.e, r.e1, r.e2, r.gamma, r.b, r.mu1)?;
    }
    Ok(())
}

pub fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Logistic coupling kept strictly inside (0, 1) even where the exact value
/// rounds to an endpoint.
pub fn coupling(b: f64) -> f64 {
    logistic(b).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `sign` with `sign(0) = 0`.
pub(crate) fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub(crate) fn axpy(w: &mut [f64], k: f64, x: &[f64]) {
    for (wi, xi) in w.iter_mut().zip(x) {
        *wi += k * xi;
    }
}

pub(crate) fn check_input(weights: usize, input: &StepInput<'_>) -> Result<(), ControlError> {
    if input.x.len() != weights {
        return Err(ControlError::DimensionMismatch { expected: weights, got: input.x.len() });
    }
    if !input.d.is_finite() || input.x.iter().any(|v| !v.is_finite()) {
        return Err(ControlError::NonFiniteInput);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lms,
    Svs,
    Atlms,
    Convex,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lms, Method::Svs, Method::Atlms, Method::Convex];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lms => "lms",
            Method::Svs => "svs",
            Method::Atlms => "atlms",
            Method::Convex => "convex",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown method `{s}` (expected lms, svs, atlms or convex)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodParams {
    Lms(LmsParams),
    Svs(SvsParams),
    Atlms(AtlmsParams),
    Convex(ConvexParams),
}

impl MethodParams {
    pub fn method(&self) -> Method {
        match self {
            MethodParams::Lms(_) => Method::Lms,
            MethodParams::Svs(_) => Method::Svs,
            MethodParams::Atlms(_) => Method::Atlms,
            MethodParams::Convex(_) => Method::Convex,
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        match self {
            MethodParams::Lms(p) => p.validate(),
            MethodParams::Svs(p) => p.validate(),
            MethodParams::Atlms(p) => p.validate(),
            MethodParams::Convex(p) => p.validate(),
        }
    }

    pub fn with_bias(mut self, bias: BiasModel) -> Self {
        match &mut self {
            MethodParams::Lms(p) => p.bias = bias,
            MethodParams::Svs(p) => p.bias = bias,
            MethodParams::Atlms(p) => p.bias = bias,
            MethodParams::Convex(p) => p.bias = bias,
        }
        self
    }
}

/// A controller instance of any method, owning its state.
#[derive(Debug, Clone, PartialEq)]
pub enum Controller {
    Filter { state: FilterState, params: MethodParams },
    Convex { state: ConvexState, params: ConvexParams },
}

impl Controller {
    /// Fresh controller with both filters (for convex) set to `w_init`.
    pub fn new(params: MethodParams, w_init: &[f64]) -> Result<Self, ControlError> {
        params.validate()?;
        Ok(match params {
            MethodParams::Convex(p) => Controller::Convex { state: ConvexState::new(w_init.to_vec(), 0.0), params: p },
            other => Controller::Filter { state: FilterState::new(w_init.to_vec()), params: other },
        })
    }

    /// Output for `x` under the current weights, without adapting.
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Controller::Filter { state, params } => {
                let bias = match params {
                    MethodParams::Lms(p) => p.bias,
                    MethodParams::Svs(p) => p.bias,
                    MethodParams::Atlms(p) => p.bias,
                    MethodParams::Convex(p) => p.bias,
                };
                dot(&state.w, x) + bias.eval(x)
            }
            Controller::Convex { state, params } => state.predict(params, x),
        }
    }

    pub fn step(&mut self, input: &StepInput<'_>) -> Result<StepOutput, ControlError> {
        match self {
            Controller::Filter { state, params } => match params {
                MethodParams::Lms(p) => state.step_lms(p, input),
                MethodParams::Svs(p) => state.step_svs(p, input),
                MethodParams::Atlms(p) => state.step_atlms(p, input),
                MethodParams::Convex(_) => unreachable!("convex params live in Controller::Convex"),
            },
            Controller::Convex { state, params } => state.step(params, input),
        }
    }

    /// Weights of the filter whose output dominates (`w1` for convex).
    pub fn weights(&self) -> &[f64] {
        match self {
            Controller::Filter { state, .. } => &state.w,
            Controller::Convex { state, .. } => &state.w1,
        }
    }

    /// Weights that produced the effective output: the γ-blend for convex.
    pub fn effective_weights(&self) -> Vec<f64> {
        match self {
            Controller::Filter { state, .. } => state.w.clone(),
            Controller::Convex { state, .. } => {
                state.w1.iter().zip(&state.w2).map(|(a, b)| state.gamma * a + (1.0 - state.gamma) * b).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_stays_open() {
        assert_eq!(coupling(0.0), 0.5);
        assert!(coupling(800.0) < 1.0);
        assert!(coupling(-800.0) > 0.0);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("nlms".parse::<Method>().is_err());
    }

    #[test]
    fn affine_bias_uses_newest_tap() {
        let b = BiasModel::Affine { k: 2.0, b: 1.0 };
        assert_eq!(b.eval(&[3.0, 100.0]), 7.0);
        assert_eq!(BiasModel::Zero.eval(&[3.0]), 0.0);
    }
}
