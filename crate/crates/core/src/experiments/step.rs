//! Closed-loop step response of the simulated coil.
//!
//! Each sample: the controller output (μT) is mapped to a DAC voltage
//! through the inverse fit, the plant produces the coil field, the
//! environment adds its disturbance, the magnetometer reads the sum, and the
//! controller adapts on the tracking error `target − measured`.
//!
//! The regressor is a constant reference excitation `x = g·[1, …, 1]`, so
//! each controller acts as an adaptive-gain integrator on the coil set-point.
//! Adaptation uses `d_eff = target − measured + y`, which makes the
//! controller's own error `d_eff − y` equal the tracking error.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, MetricsReport};
use super::ExperimentError;
use crate::control::{Controller, MethodParams, StepInput};
use crate::plant::{
    disturbance_at, drive, inverse_drive, sense, DisturbanceSpec, FitDirection, PlantLogRow, PlantModel, SensorSpec,
    TargetProfile,
};

/// Which fit constants the plant uses during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSelection {
    /// Use the measured ascending or descending branch matching the
    /// profile's direction.
    #[default]
    ByDirection,
    /// Use the scenario's `plant.fit_k`/`fit_b` as given.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepScenario {
    pub profile: TargetProfile,
    pub params: MethodParams,
    pub sensor: SensorSpec,
    pub plant: PlantModel,
    pub fit_selection: FitSelection,
    pub disturbance: DisturbanceSpec,
    /// Total simulated time including the pre-step phase.
    pub duration_s: f64,
    /// Steady statistics use samples later than this after the switch.
    pub settle_time_s: f64,
    pub band_fraction: f64,
    /// Reference excitation `g` on every regressor tap.
    pub regressor_gain: f64,
    pub initial_weights: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl StepScenario {
    /// The shielded-room step test: HMC5883L in the loop at 75 Hz, a 4 s
    /// pre-step phase, 8 s after the switch.
    pub fn shielded(profile: TargetProfile, params: MethodParams) -> Self {
        Self {
            profile,
            params,
            sensor: SensorSpec::HMC5883L,
            plant: PlantModel { v_min: -1.0, ..PlantModel::fitted(FitDirection::Ascending) },
            fit_selection: FitSelection::ByDirection,
            disturbance: DisturbanceSpec::default(),
            duration_s: 12.0,
            settle_time_s: 1.5,
            band_fraction: 0.02,
            regressor_gain: 2.0,
            initial_weights: vec![0.8, 0.5],
            trials: 10,
            seed: 7,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |m: &str| Err(ExperimentError::InvalidScenario(m.to_string()));
        self.profile.validate()?;
        self.plant.validate()?;
        self.sensor.validate()?;
        self.disturbance.validate()?;
        self.params.validate()?;
        if !(self.duration_s > self.settle_time_s) {
            return fail("duration_s must exceed settle_time_s");
        }
        if !(self.duration_s > self.profile.switch_time()) {
            return fail("duration_s must extend past the profile switch time");
        }
        if !(self.band_fraction > 0.0) {
            return fail("band_fraction must be positive");
        }
        if self.initial_weights.is_empty() {
            return fail("initial_weights must not be empty");
        }
        if !(self.regressor_gain.is_finite() && self.regressor_gain != 0.0) {
            return fail("regressor_gain must be finite and non-zero");
        }
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        Ok(())
    }

    /// Plant used for the run after applying [`FitSelection`].
    pub fn effective_plant(&self) -> PlantModel {
        match self.fit_selection {
            FitSelection::Fixed => self.plant,
            FitSelection::ByDirection => {
                let fitted = PlantModel::fitted(self.profile.direction());
                PlantModel { fit_k: fitted.fit_k, fit_b: fitted.fit_b, ..self.plant }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t_s: f64,
    pub target_nt: f64,
    pub true_nt: f64,
    pub disturbance_nt: f64,
    pub measured_nt: f64,
    pub control_v: f64,
}

#[derive(Debug, Clone)]
pub struct StepRun {
    /// Metrics averaged over trials.
    pub metrics: MetricsReport,
    /// Per-trial metrics, in trial order.
    pub per_trial: Vec<MetricsReport>,
    /// Full trace of trial 0.
    pub trace: Vec<TraceRow>,
    pub warnings: Vec<String>,
}

const CONTROLLER_UNIT_NT: f64 = 1000.0;

fn simulate(scn: &StepScenario, trial: usize) -> Result<(Vec<TraceRow>, f64), ExperimentError> {
    let plant = scn.effective_plant();
    let fs = scn.sensor.sample_rate_hz;
    let samples = (scn.duration_s * fs).round() as usize;
    let x = vec![scn.regressor_gain; scn.initial_weights.len()];
    let mut ctrl = Controller::new(scn.params, &scn.initial_weights)?;
    let seed = scn.seed ^ trial as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let disturbance = DisturbanceSpec { seed: scn.disturbance.seed ^ trial as u64, ..scn.disturbance.clone() };

    let mut trace = Vec::with_capacity(samples);
    let mut clamped = 0usize;
    for n in 0..samples {
        let t = n as f64 / fs;
        let target_nt = scn.profile.level_at(t);
        let y = ctrl.predict(&x);
        let control_v = inverse_drive(&plant, y * CONTROLLER_UNIT_NT)?;
        if control_v <= plant.v_min || control_v >= plant.v_max {
            clamped += 1;
        }
        let true_nt = drive(&plant, control_v);
        let disturbance_nt = disturbance_at(&disturbance, t, n as u64);
        let measured_nt = sense(&scn.sensor, true_nt + disturbance_nt, &mut rng);
        let d = (target_nt - measured_nt) / CONTROLLER_UNIT_NT + y;
        ctrl.step(&StepInput { x: &x, d })?;
        trace.push(TraceRow { t_s: t, target_nt, true_nt, disturbance_nt, measured_nt, control_v });
    }
    Ok((trace, clamped as f64 / samples.max(1) as f64))
}

fn trial_metrics(scn: &StepScenario, trace: &[TraceRow]) -> MetricsReport {
    let switch = scn.profile.switch_time();
    let series: Vec<(f64, f64)> =
        trace.iter().filter(|r| r.t_s >= switch).map(|r| (r.t_s - switch, r.measured_nt)).collect();
    let step = scn.profile.final_level() - scn.profile.initial_level();
    compute_metrics(&series, scn.profile.final_level(), scn.settle_time_s, scn.band_fraction, step)
}

/// Runs every trial and averages the step metrics. A missing reach time in
/// any trial makes the averaged reach time missing.
pub fn run_step_response(scn: &StepScenario) -> Result<StepRun, ExperimentError> {
    scn.validate()?;
    let runs: Vec<(Vec<TraceRow>, f64)> =
        (0..scn.trials).into_par_iter().map(|t| simulate(scn, t)).collect::<Result<_, _>>()?;

    let per_trial: Vec<MetricsReport> = runs
        .iter()
        .map(|(trace, sat)| {
            let mut m = trial_metrics(scn, trace);
            m.saturated_fraction = *sat;
            m
        })
        .collect();

    let count = per_trial.len() as f64;
    let mean = |f: fn(&MetricsReport) -> f64| per_trial.iter().map(f).sum::<f64>() / count;
    let mut metrics = MetricsReport::empty();
    metrics.reach_target_time_s =
        per_trial.iter().map(|m| m.reach_target_time_s).sum::<Option<f64>>().map(|s| s / count);
    metrics.mean_steady_nt = mean(|m| m.mean_steady_nt);
    metrics.rmse_steady = mean(|m| m.rmse_steady);
    metrics.fluct_min_nt = mean(|m| m.fluct_min_nt);
    metrics.fluct_max_nt = mean(|m| m.fluct_max_nt);
    metrics.saturated_fraction = mean(|m| m.saturated_fraction);
    metrics.trials = scn.trials;

    let mut warnings = Vec::new();
    if metrics.saturated_fraction > 0.5 {
        warnings.push(format!("actuator saturated on {:.0}% of samples", 100.0 * metrics.saturated_fraction));
    }
    let trace = runs.into_iter().next().map(|(t, _)| t).unwrap_or_default();
    Ok(StepRun { metrics, per_trial, trace, warnings })
}

pub const TRACE_HEADER: &str = "t_s,target_nT,measured_nT,control_V";

pub fn write_trace_csv<W: Write>(mut out: W, rows: &[TraceRow]) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.t_s, r.target_nt, r.measured_nt, r.control_v)?;
    }
    Ok(())
}

pub fn plant_log(rows: &[TraceRow]) -> Vec<PlantLogRow> {
    rows.iter()
        .map(|r| PlantLogRow {
            t_s: r.t_s,
            true_nt: r.true_nt,
            disturbance_nt: r.disturbance_nt,
            measured_nt: r.measured_nt,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{BiasModel, LmsParams};

    fn lms() -> MethodParams {
        MethodParams::Lms(LmsParams { mu: 0.005, bias: BiasModel::Zero })
    }

    #[test]
    fn noise_free_tracking_is_exact() {
        let mut scn = StepScenario::shielded(TargetProfile::zero_to_120ut(4.0), lms());
        scn.sensor = SensorSpec { noise_sigma_nt: 0.0, quantization_step_nt: 0.0, sample_rate_hz: 75.0 };
        scn.duration_s = 20.0;
        scn.settle_time_s = 8.0;
        scn.trials = 1;
        let run = run_step_response(&scn).unwrap();
        assert!((run.metrics.mean_steady_nt - 120_000.0).abs() < 1.0);
        assert!(run.metrics.rmse_steady < 1.0, "rmse {}", run.metrics.rmse_steady);
    }

    #[test]
    fn fit_follows_direction() {
        let down = StepScenario::shielded(TargetProfile::from_120ut_to_zero(1.0), lms());
        assert_eq!(down.effective_plant().fit_k, PlantModel::DESCENDING_FIT.0);
        let up = StepScenario::shielded(TargetProfile::zero_to_120ut(1.0), lms());
        assert_eq!(up.effective_plant().fit_b, PlantModel::ASCENDING_FIT.1);
    }

    #[test]
    fn saturation_warning() {
        let mut scn = StepScenario::shielded(TargetProfile::Constant { level_nt: 500_000.0 }, lms());
        scn.trials = 1;
        let run = run_step_response(&scn).unwrap();
        assert!(!run.warnings.is_empty());
    }
}
