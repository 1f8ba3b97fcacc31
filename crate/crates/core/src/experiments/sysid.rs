//! System identification: each controller learns an unknown FIR system
//! `d(n) = w_oᵀx(n) + ε(n)` driven by white Gaussian input.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{first_below, smooth, tail_mean, MetricsReport, MSE_SMOOTHING};
use super::ExperimentError;
use crate::control::{Controller, MethodParams, StepInput, StepOutput};
use crate::plant::snr_to_sigma;

/// Short burst of amplified measurement noise after the filters settle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBurst {
    pub at: usize,
    pub len: usize,
    /// Burst noise σ as a multiple of the nominal noise σ.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SysIdScenario {
    /// `f64::INFINITY` gives a noise-free run.
    pub snr_db: f64,
    pub order: usize,
    pub n_iters: usize,
    pub burst: Option<NoiseBurst>,
    /// The unknown system `w_o`.
    pub true_weights: Vec<f64>,
    /// Starting weights of every filter.
    pub initial_weights: Vec<f64>,
    /// Power of the noise-free output used to scale the noise.
    pub signal_power: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SysIdScenario {
    fn default() -> Self {
        Self {
            snr_db: 30.0,
            order: 2,
            n_iters: 5000,
            burst: Some(NoiseBurst { at: 2500, len: 10, gain: 10.0 }),
            true_weights: vec![0.8, 0.5],
            initial_weights: vec![0.0, 0.0],
            signal_power: 1.0,
            trials: 200,
            seed: 1,
        }
    }
}

impl SysIdScenario {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |m: String| Err(ExperimentError::InvalidScenario(m));
        if self.order == 0 {
            return fail("order must be at least 1".into());
        }
        if self.true_weights.len() != self.order || self.initial_weights.len() != self.order {
            return fail(format!("true_weights and initial_weights need {} entries (the order)", self.order));
        }
        if self.n_iters < 10 {
            return fail("n_iters must be at least 10".into());
        }
        if let Some(b) = self.burst {
            if b.at >= self.n_iters {
                return fail(format!("noise burst at {} is past n_iters {}", b.at, self.n_iters));
            }
            if !(b.gain >= 0.0 && b.gain.is_finite()) {
                return fail("burst gain must be non-negative".into());
            }
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.snr_db.is_nan() || !(self.signal_power >= 0.0) {
            return fail("snr_db and signal_power must be valid numbers".into());
        }
        Ok(())
    }

    pub fn noise_sigma(&self) -> f64 {
        if self.snr_db == f64::INFINITY {
            0.0
        } else {
            snr_to_sigma(self.signal_power, self.snr_db)
        }
    }

    /// Per-trial seed (`seed XOR trial`).
    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed ^ trial as u64
    }

    /// Regressor and noise sequences for one trial. Every method sees the
    /// same data for the same trial.
    pub fn trial_data(&self, trial: usize) -> TrialData {
        let mut rng = ChaCha8Rng::seed_from_u64(self.trial_seed(trial));
        let m = self.order;
        let n = self.n_iters;
        let input: Vec<f64> = (0..n + m - 1).map(|_| rng.sample(StandardNormal)).collect();
        let sigma = self.noise_sigma();
        let mut noise: Vec<f64> = (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
        if let Some(b) = self.burst {
            for v in noise.iter_mut().skip(b.at).take(b.len) {
                *v *= b.gain;
            }
        }
        TrialData { order: m, input, noise }
    }
}

/// White input history and additive noise of one trial.
#[derive(Debug, Clone)]
pub struct TrialData {
    order: usize,
    input: Vec<f64>,
    pub noise: Vec<f64>,
}

impl TrialData {
    /// Tap-delay regressor `[u(n), u(n−1), …]`.
    pub fn regressor(&self, n: usize, out: &mut Vec<f64>) {
        out.clear();
        let newest = n + self.order - 1;
        out.extend((0..self.order).map(|k| self.input[newest - k]));
    }
}

/// Squared error per iteration for one trial.
pub(crate) fn trial_errors(
    scn: &SysIdScenario,
    params: &MethodParams,
    trial: usize,
) -> Result<Vec<f64>, ExperimentError> {
    let data = scn.trial_data(trial);
    let mut ctrl = Controller::new(*params, &scn.initial_weights)?;
    let mut x = Vec::with_capacity(scn.order);
    let mut e2 = Vec::with_capacity(scn.n_iters);
    for n in 0..scn.n_iters {
        data.regressor(n, &mut x);
        let d = crate::control::dot(&scn.true_weights, &x) + data.noise[n];
        let out = ctrl.step(&StepInput { x: &x, d })?;
        e2.push(out.e * out.e);
    }
    Ok(e2)
}

/// Per-step controller outputs of one trial, for diagnostics.
pub fn sysid_diagnostics(
    scn: &SysIdScenario,
    params: &MethodParams,
    trial: usize,
) -> Result<Vec<StepOutput>, ExperimentError> {
    scn.validate()?;
    let data = scn.trial_data(trial);
    let mut ctrl = Controller::new(*params, &scn.initial_weights)?;
    let mut x = Vec::with_capacity(scn.order);
    (0..scn.n_iters)
        .map(|n| {
            data.regressor(n, &mut x);
            let d = crate::control::dot(&scn.true_weights, &x) + data.noise[n];
            Ok(ctrl.step(&StepInput { x: &x, d })?)
        })
        .collect()
}

/// Trial-averaged learning curve and convergence statistics.
pub fn run_sysid(scn: &SysIdScenario, params: &MethodParams) -> Result<MetricsReport, ExperimentError> {
    scn.validate()?;
    params.validate()?;
    let per_trial: Vec<Vec<f64>> =
        (0..scn.trials).into_par_iter().map(|t| trial_errors(scn, params, t)).collect::<Result<_, _>>()?;

    let n = scn.n_iters;
    let count = scn.trials as f64;
    let mut mse = vec![0.0; n];
    for curve in &per_trial {
        for (acc, v) in mse.iter_mut().zip(curve) {
            *acc += v;
        }
    }
    mse.iter_mut().for_each(|v| *v /= count);

    let smoothed = smooth(&mse, MSE_SMOOTHING);
    let final_mse = tail_mean(&mse);
    let tails: Vec<f64> = per_trial.iter().map(|c| tail_mean(c)).collect();
    let stderr = if scn.trials > 1 {
        let var = tails.iter().map(|v| (v - final_mse).powi(2)).sum::<f64>() / (count - 1.0);
        (var / count).sqrt()
    } else {
        f64::NAN
    };

    let mut report = MetricsReport::empty();
    report.iters_to_converge = first_below(&smoothed, final_mse, 0);
    report.reconverge_iters = scn.burst.and_then(|b| {
        let end = (b.at + b.len).min(n);
        first_below(&smoothed, final_mse, end).map(|i| i - b.at)
    });
    report.mse_curve = mse;
    report.final_mse = final_mse;
    report.final_mse_stderr = stderr;
    report.trials = scn.trials;
    Ok(report)
}
