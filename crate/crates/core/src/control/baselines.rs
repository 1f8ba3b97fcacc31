//! Single-filter baselines: fixed-step LMS, sigmoid variable step (SVS) and
//! arctangent step (ATLMS). All share `w ← w + μ(n)·e(n)·x(n)` and differ only
//! in how μ(n) is formed from the error.

use std::f64::consts::FRAC_2_PI;

use serde::{Deserialize, Serialize};

use super::{axpy, check_input, dot, logistic, BiasModel, ControlError, StepInput, StepOutput};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmsParams {
    pub mu: f64,
    #[serde(default)]
    pub bias: BiasModel,
}

/// `μ(n) = β·(logistic(α·|e(n)|) − 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvsParams {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub bias: BiasModel,
}

/// `μ(n) = β·(2/π)·atan(α·e(n)²)·m/(m + n_scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtlmsParams {
    pub alpha: f64,
    pub beta: f64,
    pub m: f64,
    pub n_scale: f64,
    #[serde(default)]
    pub bias: BiasModel,
}

fn positive(v: f64, name: &str) -> Result<(), ControlError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ControlError::InvalidParams(format!("{name} must be positive and finite")))
    }
}

impl LmsParams {
    pub fn validate(&self) -> Result<(), ControlError> {
        positive(self.mu, "mu")
    }
}

impl SvsParams {
    pub fn validate(&self) -> Result<(), ControlError> {
        positive(self.alpha, "alpha")?;
        positive(self.beta, "beta")
    }

    pub fn step_size(&self, e: f64) -> f64 {
        self.beta * (logistic(self.alpha * e.abs()) - 0.5)
    }
}

impl AtlmsParams {
    pub fn validate(&self) -> Result<(), ControlError> {
        positive(self.alpha, "alpha")?;
        positive(self.beta, "beta")?;
        positive(self.m, "m")?;
        if !(self.n_scale >= 0.0 && self.n_scale.is_finite()) {
            return Err(ControlError::InvalidParams("n_scale must be non-negative".into()));
        }
        Ok(())
    }

    pub fn step_size(&self, e: f64) -> f64 {
        self.beta * FRAC_2_PI * (self.alpha * e * e).atan() * self.m / (self.m + self.n_scale)
    }

    /// Supremum of [`step_size`](Self::step_size).
    pub fn max_step(&self) -> f64 {
        self.beta * self.m / (self.m + self.n_scale)
    }
}

/// Weight vector of a single adaptive filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    pub w: Vec<f64>,
    pub step_index: u64,
}

impl FilterState {
    pub fn new(w: Vec<f64>) -> Self {
        Self { w, step_index: 0 }
    }

    fn step_with(
        &mut self,
        bias: BiasModel,
        input: &StepInput<'_>,
        step_size: impl Fn(f64) -> f64,
    ) -> Result<StepOutput, ControlError> {
        check_input(self.w.len(), input)?;
        let y = dot(&self.w, input.x) + bias.eval(input.x);
        let e = input.d - y;
        let mu = step_size(e);
        axpy(&mut self.w, mu * e, input.x);
        self.step_index += 1;
        Ok(StepOutput { y, y1: y, y2: y, e, e1: e, e2: e, mu1: mu, gamma: 1.0, b: 0.0 })
    }

    pub fn step_lms(&mut self, p: &LmsParams, input: &StepInput<'_>) -> Result<StepOutput, ControlError> {
        self.step_with(p.bias, input, |_| p.mu)
    }

    pub fn step_svs(&mut self, p: &SvsParams, input: &StepInput<'_>) -> Result<StepOutput, ControlError> {
        self.step_with(p.bias, input, |e| p.step_size(e))
    }

    pub fn step_atlms(&mut self, p: &AtlmsParams, input: &StepInput<'_>) -> Result<StepOutput, ControlError> {
        self.step_with(p.bias, input, |e| p.step_size(e))
    }
}

pub fn lms_step(
    state: &FilterState,
    params: &LmsParams,
    input: &StepInput<'_>,
) -> Result<(StepOutput, FilterState), ControlError> {
    let mut next = state.clone();
    let out = next.step_lms(params, input)?;
    Ok((out, next))
}

pub fn svs_step(
    state: &FilterState,
    params: &SvsParams,
    input: &StepInput<'_>,
) -> Result<(StepOutput, FilterState), ControlError> {
    let mut next = state.clone();
    let out = next.step_svs(params, input)?;
    Ok((out, next))
}

pub fn atlms_step(
    state: &FilterState,
    params: &AtlmsParams,
    input: &StepInput<'_>,
) -> Result<(StepOutput, FilterState), ControlError> {
    let mut next = state.clone();
    let out = next.step_atlms(params, input)?;
    Ok((out, next))
}
