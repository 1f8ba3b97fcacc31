use serde::{Deserialize, Serialize};

use super::{axpy, check_input, coupling, dot, sign0, BiasModel, ControlError, StepInput, StepOutput};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexParams {
    /// Sensitivity to consecutive-error products in the μ1 law.
    pub alpha: f64,
    /// Step intensity of controller 1; μ1 ∈ [0, β/2].
    pub beta: f64,
    /// Error-magnitude term of the μ1 exponent.
    #[serde(default)]
    pub sigma: f64,
    /// Regulariser of the normalised controller-1 update.
    pub phi: f64,
    /// Fixed learning rate of controller 2.
    pub c: f64,
    /// Learning rate of the update factor `b`.
    pub mu_b: f64,
    /// Coupling above which `w1` is copied into `w2`.
    pub gamma_o: f64,
    /// Transfer period in steps.
    pub t_o: u32,
    /// Symmetric clamp on `b`; infinite leaves it unbounded.
    #[serde(default = "unbounded")]
    pub b_limit: f64,
    #[serde(default)]
    pub bias: BiasModel,
}

fn unbounded() -> f64 {
    f64::INFINITY
}

impl Default for ConvexParams {
    fn default() -> Self {
        Self {
            alpha: 500.0,
            beta: 0.01,
            sigma: 0.0,
            phi: 0.5,
            c: 0.01,
            mu_b: 0.1,
            gamma_o: 0.55,
            t_o: 2,
            b_limit: f64::INFINITY,
            bias: BiasModel::Zero,
        }
    }
}

impl ConvexParams {
    pub fn validate(&self) -> Result<(), ControlError> {
        let fail = |m: &str| Err(ControlError::InvalidParams(m.to_string()));
        let finite = [self.alpha, self.beta, self.sigma, self.phi, self.c, self.mu_b, self.gamma_o]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return fail("convex parameters must be finite");
        }
        if self.beta <= 0.0 {
            return fail("beta must be positive");
        }
        if self.phi < 0.0 {
            return fail("phi must be non-negative");
        }
        if self.c <= 0.0 {
            return fail("c must be positive");
        }
        if !(self.gamma_o > 0.0 && self.gamma_o < 1.0) {
            return fail("gamma_o must lie in (0, 1)");
        }
        if self.t_o == 0 {
            return fail("t_o must be at least 1");
        }
        if !(self.b_limit > 0.0) {
            return fail("b_limit must be positive");
        }
        Ok(())
    }

    /// Controller-1 step size for the current and previous controller-1
    /// errors, clamped to `[0, β/2]`.
    pub fn mu1(&self, e1: f64, prev_e1: f64) -> f64 {
        let s = 1.0 / (1.0 + (-self.alpha * (e1 * prev_e1).abs() + self.sigma * e1.abs()).exp());
        (self.beta * (s - 0.5)).clamp(0.0, 0.5 * self.beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexState {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b: f64,
    pub gamma: f64,
    pub prev_e1: f64,
    pub step_index: u64,
}

impl ConvexState {
    /// Both filters start from `w_init`; `γ` follows from `b0`.
    pub fn new(w_init: Vec<f64>, b0: f64) -> Self {
        Self { w2: w_init.clone(), w1: w_init, b: b0, gamma: coupling(b0), prev_e1: 0.0, step_index: 0 }
    }

    pub fn predict(&self, params: &ConvexParams, x: &[f64]) -> f64 {
        let bias = params.bias.eval(x);
        let y1 = dot(&self.w1, x) + bias;
        let y2 = dot(&self.w2, x) + bias;
        self.gamma * y1 + (1.0 - self.gamma) * y2
    }

    /// One controller step, in this order: outputs, errors, learning rates,
    /// weight updates, weight transfer, update-factor refresh.
    pub fn step(&mut self, p: &ConvexParams, input: &StepInput<'_>) -> Result<StepOutput, ControlError> {
        check_input(self.w1.len(), input)?;
        if self.w2.len() != self.w1.len() {
            return Err(ControlError::DimensionMismatch { expected: self.w1.len(), got: self.w2.len() });
        }
        let x = input.x;
        let gamma = self.gamma;

        let bias = p.bias.eval(x);
        let y1 = dot(&self.w1, x) + bias;
        let y2 = dot(&self.w2, x) + bias;
        let y = gamma * y1 + (1.0 - gamma) * y2;

        let e1 = input.d - y1;
        let e2 = input.d - y2;
        let e = gamma * e1 + (1.0 - gamma) * e2;

        let mu1 = p.mu1(e1, self.prev_e1);
        let norm = p.phi + dot(x, x);
        if norm > 0.0 {
            axpy(&mut self.w1, 2.0 * mu1 * e1 / norm, x);
        }
        axpy(&mut self.w2, p.c * e2, x);

        if gamma > p.gamma_o && self.step_index.is_multiple_of(u64::from(p.t_o)) {
            self.w2.copy_from_slice(&self.w1);
        }

        let db = p.mu_b * sign0(e) * (y1 - y2) * gamma * (1.0 - gamma);
        self.b = (self.b + db).clamp(-p.b_limit, p.b_limit);
        self.gamma = coupling(self.b);
        self.prev_e1 = e1;
        self.step_index += 1;

        Ok(StepOutput { y, y1, y2, e, e1, e2, mu1, gamma: self.gamma, b: self.b })
    }
}

/// Pure form of [`ConvexState::step`].
pub fn convex_step(
    state: &ConvexState,
    params: &ConvexParams,
    input: &StepInput<'_>,
) -> Result<(StepOutput, ConvexState), ControlError> {
    let mut next = state.clone();
    let out = next.step(params, input)?;
    Ok((out, next))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_coupling_is_half() {
        assert_eq!(ConvexState::new(vec![0.8, 0.5], 0.0).gamma, 0.5);
    }

    #[test]
    fn zero_errors_freeze_w1() {
        let p = ConvexParams::default();
        assert_eq!(p.mu1(0.0, 0.0), 0.0);
        let s = ConvexState::new(vec![1.0, 2.0], 0.0);
        let x = [0.5, -1.0];
        let d = 1.0 * 0.5 - 2.0;
        let (out, next) = convex_step(&s, &p, &StepInput { x: &x, d }).unwrap();
        assert_eq!(out.e1, 0.0);
        assert_eq!(next.w1, s.w1);
        assert_eq!(next.b, 0.0);
    }

    #[test]
    fn equal_filters_make_gamma_irrelevant() {
        let p = ConvexParams::default();
        let x = [0.3, 0.7];
        for b in [-3.0, 0.0, 2.5] {
            let s = ConvexState::new(vec![0.1, -0.4], b);
            let (out, _) = convex_step(&s, &p, &StepInput { x: &x, d: 1.0 }).unwrap();
            assert_eq!(out.y1, out.y2);
            assert_eq!(out.e1, out.e2);
            assert!((out.e - out.e1).abs() < 1e-15);
        }
    }

    #[test]
    fn mu1_grows_with_correlated_error() {
        let p = ConvexParams { alpha: 10.0, beta: 0.2, ..Default::default() };
        assert!(p.mu1(1.0, 1.0) > p.mu1(0.1, 0.1));
        assert!(p.mu1(100.0, 100.0) <= 0.1);
        let damped = ConvexParams { sigma: 1e3, ..p };
        assert_eq!(damped.mu1(1.0, 0.0), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let mut s = ConvexState::new(vec![0.0; 2], 0.0);
        let p = ConvexParams::default();
        assert!(matches!(s.step(&p, &StepInput { x: &[1.0], d: 0.0 }), Err(ControlError::DimensionMismatch { .. })));
        assert_eq!(s.step(&p, &StepInput { x: &[1.0, f64::NAN], d: 0.0 }), Err(ControlError::NonFiniteInput));
    }
}
