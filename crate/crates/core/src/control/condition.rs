//! Mean-square step-size bounds: each step must stay below `2/λmax` of the
//! input autocorrelation matrix.

use serde::Serialize;

use super::{dot, ControlError, ConvexParams};

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionReport {
    pub lambda_max: f64,
    /// `2/λmax`.
    pub bound: f64,
    /// Worst-case normalised controller-1 rate `β/(φ + min xᵀx)`.
    pub nlms_rate: f64,
    pub nlms_ok: bool,
    pub c_ok: bool,
}

impl ConditionReport {
    pub fn passes(&self) -> bool {
        self.nlms_ok && self.c_ok
    }
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration, stopped once the eigen-residual `‖Rv − λv‖` falls below
/// 1e-10·λ. A residual test (rather than the change in λ) stays honest when
/// the top two eigenvalues are close and convergence is slow.
pub fn lambda_max(r: &[Vec<f64>]) -> f64 {
    let m = r.len();
    if m == 0 {
        return 0.0;
    }
    // Uneven start vector avoids landing orthogonal to the dominant mode for
    // the common symmetric structures.
    let mut v: Vec<f64> = (0..m).map(|i| 1.0 + 0.1 * i as f64).collect();
    let norm0 = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|a| *a /= norm0);
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let rv: Vec<f64> = r.iter().map(|row| dot(row, &v)).collect();
        lambda = dot(&v, &rv);
        let residual = rv.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        if residual <= POWER_TOL * lambda.abs() {
            return lambda;
        }
        let norm = dot(&rv, &rv).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = rv.into_iter().map(|a| a / norm).collect();
    }
    lambda
}

/// Estimates `Rxx = E[x xᵀ]` from `samples` and checks both controllers'
/// step sizes against `2/λmax`.
pub fn check_convergence_condition(
    params: &ConvexParams,
    samples: &[Vec<f64>],
) -> Result<ConditionReport, ControlError> {
    let m = samples.first().map_or(0, Vec::len);
    if m == 0 || samples.len() < m {
        return Err(ControlError::InsufficientSamples { needed: m.max(1), got: samples.len() });
    }
    let mut r = vec![vec![0.0; m]; m];
    let mut min_energy = f64::INFINITY;
    for x in samples {
        if x.len() != m {
            return Err(ControlError::DimensionMismatch { expected: m, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ControlError::NonFiniteInput);
        }
        for i in 0..m {
            for j in 0..m {
                r[i][j] += x[i] * x[j];
            }
        }
        min_energy = min_energy.min(dot(x, x));
    }
    let count = samples.len() as f64;
    r.iter_mut().flatten().for_each(|v| *v /= count);

    let lambda = lambda_max(&r);
    let bound = 2.0 / lambda;
    let nlms_rate = params.beta / (params.phi + min_energy);
    Ok(ConditionReport {
        lambda_max: lambda,
        bound,
        nlms_rate,
        nlms_ok: params.beta > 0.0 && nlms_rate <= bound,
        c_ok: params.c > 0.0 && params.c < bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_lambda() {
        let r = vec![vec![3.0, 0.0], vec![0.0, 1.0]];
        assert!((lambda_max(&r) - 3.0).abs() < 1e-8);
        let r = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        assert!((lambda_max(&r) - 3.0).abs() < 1e-8);
    }

    #[test]
    fn zero_beta_fails() {
        let samples = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let p = ConvexParams { beta: 0.0, ..Default::default() };
        let rep = check_convergence_condition(&p, &samples).unwrap();
        assert!(!rep.nlms_ok && !rep.passes());
    }

    #[test]
    fn needs_m_samples() {
        let p = ConvexParams::default();
        assert!(matches!(
            check_convergence_condition(&p, &[vec![1.0, 2.0]]),
            Err(ControlError::InsufficientSamples { .. })
        ));
    }
}
