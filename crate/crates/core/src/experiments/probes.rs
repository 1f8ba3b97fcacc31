//! Checks of the convergence condition and the steady-state error
//! decomposition by direct simulation.

use rayon::prelude::*;
use serde::Serialize;

use super::metrics::{smooth, MSE_SMOOTHING};
use super::sysid::{trial_errors, SysIdScenario};
use super::ExperimentError;
use crate::control::{dot, Controller, MethodParams, StepInput};

pub const DIVERGENCE_EARLY: usize = 50;
pub const DIVERGENCE_LATE: usize = 500;
pub const DIVERGENCE_RATIO: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub mse_early: f64,
    pub mse_late: f64,
    pub diverged: bool,
}

/// Runs the first [`DIVERGENCE_LATE`] iterations of `scn` and flags
/// divergence when the smoothed MSE grows a thousandfold (or overflows).
pub fn run_divergence_probe(scn: &SysIdScenario, params: &MethodParams) -> Result<DivergenceReport, ExperimentError> {
    let scn = SysIdScenario { n_iters: DIVERGENCE_LATE + 1, burst: None, ..scn.clone() };
    scn.validate()?;
    params.validate()?;
    let curves: Vec<Vec<f64>> =
        (0..scn.trials).into_par_iter().map(|t| trial_errors(&scn, params, t)).collect::<Result<_, _>>()?;
    let mut mse = vec![0.0; scn.n_iters];
    for c in &curves {
        for (acc, v) in mse.iter_mut().zip(c) {
            *acc += v / scn.trials as f64;
        }
    }
    let smoothed = smooth(&mse, MSE_SMOOTHING);
    let (early, late) = (smoothed[DIVERGENCE_EARLY], smoothed[DIVERGENCE_LATE]);
    Ok(DivergenceReport {
        mse_early: early,
        mse_late: late,
        diverged: !late.is_finite() || late > DIVERGENCE_RATIO * early,
    })
}

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn of(v: &[f64]) -> Self {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Self { mean, stderr: (var / n).sqrt() }
    }

    /// `|mean − value| ≤ k·stderr`.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }
}

/// Monte-Carlo check that, once converged, `e = xᵀΔw + ε` splits the error
/// power into noise power plus a weight-mismatch term, and that the lag-1
/// error correlation reduces to the mismatch correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub trials: usize,
    pub at_iter: usize,
    pub e2: Estimate,
    pub noise2: Estimate,
    pub mismatch2: Estimate,
    /// `e² − ε² − (xᵀΔw)²` per trial.
    pub decomposition_residual: Estimate,
    /// `e² − (xᵀΔw)²` per trial; its mean should be the noise variance.
    pub excess: Estimate,
    /// Noise variance of the scenario, `σε²`.
    pub noise_variance: f64,
    pub lag1: Estimate,
    pub lag1_mismatch: Estimate,
    /// `e(n)e(n−1) − (xᵀΔw)(x'ᵀΔw')` per trial.
    pub lag1_residual: Estimate,
    /// `E[e²] ≥ E[ε²] − 3·SE`.
    pub lower_bound_ok: bool,
    /// Decomposition residual within 3 SE of zero.
    pub decomposition_ok: bool,
    /// `E[e²] = σε² + E[(xᵀΔw)²]`: the excess within 3 SE of `σε²`.
    pub model_ok: bool,
    /// Lag-1 residual within 3 SE of zero.
    pub lag1_ok: bool,
}

struct Snapshot {
    e: f64,
    noise: f64,
    mismatch: f64,
}

/// Samples the error at iteration `scn.n_iters − 1` (and the one before)
/// across `scn.trials` independent trials.
pub fn run_stability_stat(scn: &SysIdScenario, params: &MethodParams) -> Result<StabilityReport, ExperimentError> {
    scn.validate()?;
    params.validate()?;
    let last = scn.n_iters - 1;
    let pairs: Vec<(Snapshot, Snapshot)> = (0..scn.trials)
        .into_par_iter()
        .map(|trial| {
            let data = scn.trial_data(trial);
            let mut ctrl = Controller::new(*params, &scn.initial_weights)?;
            let mut x = Vec::with_capacity(scn.order);
            let mut prev = None;
            let mut cur = None;
            for n in 0..=last {
                data.regressor(n, &mut x);
                let noise = data.noise[n];
                let d = dot(&scn.true_weights, &x) + noise;
                let mismatch_w: Vec<f64> =
                    scn.true_weights.iter().zip(ctrl.effective_weights()).map(|(o, w)| o - w).collect();
                let out = ctrl.step(&StepInput { x: &x, d })?;
                if n + 1 >= last {
                    let snap = Snapshot { e: out.e, noise, mismatch: dot(&x, &mismatch_w) };
                    prev = cur.take();
                    cur = Some(snap);
                }
            }
            Ok((prev.expect("at least two iterations"), cur.expect("final iteration")))
        })
        .collect::<Result<_, ExperimentError>>()?;

    let col = |f: &dyn Fn(&(Snapshot, Snapshot)) -> f64| -> Vec<f64> { pairs.iter().map(f).collect() };
    let e2 = Estimate::of(&col(&|(_, c)| c.e * c.e));
    let noise2 = Estimate::of(&col(&|(_, c)| c.noise * c.noise));
    let mismatch2 = Estimate::of(&col(&|(_, c)| c.mismatch * c.mismatch));
    let decomposition_residual = Estimate::of(&col(&|(_, c)| c.e * c.e - c.noise * c.noise - c.mismatch * c.mismatch));
    let excess = Estimate::of(&col(&|(_, c)| c.e * c.e - c.mismatch * c.mismatch));
    let noise_variance = scn.noise_sigma().powi(2);
    let lag1 = Estimate::of(&col(&|(p, c)| c.e * p.e));
    let lag1_mismatch = Estimate::of(&col(&|(p, c)| c.mismatch * p.mismatch));
    let lag1_residual = Estimate::of(&col(&|(p, c)| c.e * p.e - c.mismatch * p.mismatch));

    Ok(StabilityReport {
        trials: scn.trials,
        at_iter: last,
        e2,
        noise2,
        mismatch2,
        decomposition_residual,
        excess,
        noise_variance,
        lag1,
        lag1_mismatch,
        lag1_residual,
        lower_bound_ok: e2.mean >= noise2.mean - 3.0 * e2.stderr.hypot(noise2.stderr),
        decomposition_ok: decomposition_residual.within(0.0, 3.0),
        model_ok: excess.within(noise_variance, 3.0),
        lag1_ok: lag1_residual.within(0.0, 3.0),
    })
}
