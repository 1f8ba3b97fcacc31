//! Simulated testbed: voltage→field fit, actuation clamp, magnetometers and
//! environmental disturbance. Fields are in nT at this boundary; the fit
//! constants are in μT/V and μT.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("fit slope |k| = {0} is too small to invert")]
    DegenerateFit(f64),
    #[error("invalid plant: {0}")]
    Invalid(String),
}

/// Which branch of the hysteretic voltage→field fit applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitDirection {
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantModel {
    /// μT per volt.
    pub fit_k: f64,
    /// μT at zero volts.
    pub fit_b: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub sample_rate_hz: f64,
}

impl PlantModel {
    pub const ASCENDING_FIT: (f64, f64) = (46.333, 1.7623);
    pub const DESCENDING_FIT: (f64, f64) = (46.253, 1.8935);

    /// Measured fit for the given branch, 0–3 V drive, 200 Hz loop.
    pub fn fitted(direction: FitDirection) -> Self {
        let (fit_k, fit_b) = match direction {
            FitDirection::Ascending => Self::ASCENDING_FIT,
            FitDirection::Descending => Self::DESCENDING_FIT,
        };
        Self { fit_k, fit_b, v_min: 0.0, v_max: 3.0, sample_rate_hz: 200.0 }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let finite =
            [self.fit_k, self.fit_b, self.v_min, self.v_max, self.sample_rate_hz].iter().all(|v| v.is_finite());
        if !finite {
            return Err(PlantError::Invalid("non-finite plant parameter".into()));
        }
        if self.v_min >= self.v_max {
            return Err(PlantError::Invalid(format!("v_min ({}) must be below v_max ({})", self.v_min, self.v_max)));
        }
        if self.sample_rate_hz <= 0.0 {
            return Err(PlantError::Invalid("sample rate must be positive".into()));
        }
        Ok(())
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.v_min, self.v_max)
    }

    /// Field range reachable inside the clamp, nT (ordered low, high).
    pub fn reachable_nt(&self) -> (f64, f64) {
        let a = drive(self, self.v_min);
        let b = drive(self, self.v_max);
        (a.min(b), a.max(b))
    }
}

/// Coil field in nT for a commanded voltage (clamped).
pub fn drive(plant: &PlantModel, voltage: f64) -> f64 {
    (plant.fit_k * plant.clamp(voltage) + plant.fit_b) * 1000.0
}

/// Voltage that produces `target_nt`, clamped to the actuation range.
pub fn inverse_drive(plant: &PlantModel, target_nt: f64) -> Result<f64, PlantError> {
    if plant.fit_k.abs() < 1e-12 {
        return Err(PlantError::DegenerateFit(plant.fit_k));
    }
    Ok(plant.clamp((target_nt / 1000.0 - plant.fit_b) / plant.fit_k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub noise_sigma_nt: f64,
    /// LSB size; zero disables quantisation.
    pub quantization_step_nt: f64,
    pub sample_rate_hz: f64,
}

impl SensorSpec {
    pub const RM3100: SensorSpec =
        SensorSpec { noise_sigma_nt: 15.0, quantization_step_nt: 13.0, sample_rate_hz: 200.0 };
    pub const HMC5883L: SensorSpec =
        SensorSpec { noise_sigma_nt: 200.0, quantization_step_nt: 435.0, sample_rate_hz: 75.0 };
    pub const IDEAL: SensorSpec = SensorSpec { noise_sigma_nt: 0.0, quantization_step_nt: 0.0, sample_rate_hz: 200.0 };

    pub fn validate(&self) -> Result<(), PlantError> {
        if !(self.noise_sigma_nt >= 0.0 && self.noise_sigma_nt.is_finite()) {
            return Err(PlantError::Invalid("sensor noise must be non-negative".into()));
        }
        if !(self.quantization_step_nt >= 0.0 && self.quantization_step_nt.is_finite()) {
            return Err(PlantError::Invalid("quantization step must be non-negative".into()));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(PlantError::Invalid("sensor sample rate must be positive".into()));
        }
        Ok(())
    }
}

/// One magnetometer reading: additive Gaussian noise, then round-half-even
/// quantisation to the LSB.
pub fn sense<R: Rng + ?Sized>(spec: &SensorSpec, true_nt: f64, rng: &mut R) -> f64 {
    let noisy = if spec.noise_sigma_nt > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        true_nt + spec.noise_sigma_nt * z
    } else {
        true_nt
    };
    quantize(noisy, spec.quantization_step_nt)
}

pub fn quantize(value: f64, step: f64) -> f64 {
    if step > 0.0 {
        (value / step).round_ties_even() * step
    } else {
        value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcComponent {
    pub amplitude_nt: f64,
    pub frequency_hz: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    pub dc_offset_nt: f64,
    pub ac_components: Vec<AcComponent>,
    pub gaussian_sigma_nt: f64,
    pub seed: u64,
}

impl DisturbanceSpec {
    pub fn validate(&self) -> Result<(), PlantError> {
        for c in &self.ac_components {
            if !(c.amplitude_nt >= 0.0 && c.frequency_hz > 0.0) {
                return Err(PlantError::Invalid("AC components need amplitude >= 0 and frequency > 0".into()));
            }
        }
        if !(self.gaussian_sigma_nt >= 0.0) {
            return Err(PlantError::Invalid("disturbance sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// Disturbance at time `t` for sample number `index`. The Gaussian part is
/// a pure function of `(seed, index)`, so samples can be drawn in any order.
pub fn disturbance_at(spec: &DisturbanceSpec, t: f64, index: u64) -> f64 {
    let ac: f64 =
        spec.ac_components.iter().map(|c| c.amplitude_nt * (2.0 * PI * c.frequency_hz * t + c.phase_rad).sin()).sum();
    let noise = if spec.gaussian_sigma_nt > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(index);
        let z: f64 = rng.sample(StandardNormal);
        spec.gaussian_sigma_nt * z
    } else {
        0.0
    };
    spec.dc_offset_nt + ac + noise
}

/// Noise standard deviation giving `snr_db` against `signal_power`.
pub fn snr_to_sigma(signal_power: f64, snr_db: f64) -> f64 {
    (signal_power / 10f64.powf(snr_db / 10.0)).sqrt()
}

/// Target field trajectory, nT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetProfile {
    Constant {
        level_nt: f64,
    },
    StepUp {
        from_nt: f64,
        to_nt: f64,
        switch_time_s: f64,
    },
    StepDown {
        from_nt: f64,
        to_nt: f64,
        switch_time_s: f64,
    },
    RampUp {
        from_nt: f64,
        to_nt: f64,
        switch_time_s: f64,
        ramp_s: f64,
    },
    /// Zero-order hold through `(t_s, level_nt)` samples sorted by time.
    FromFile {
        samples: Vec<(f64, f64)>,
    },
}

impl TargetProfile {
    /// Step from 0 to 120 μT.
    pub fn zero_to_120ut(switch_time_s: f64) -> Self {
        TargetProfile::StepUp { from_nt: 0.0, to_nt: 120_000.0, switch_time_s }
    }

    /// Step from 120 μT to 0.
    pub fn from_120ut_to_zero(switch_time_s: f64) -> Self {
        TargetProfile::StepDown { from_nt: 120_000.0, to_nt: 0.0, switch_time_s }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let bad = |m: &str| Err(PlantError::Invalid(m.to_string()));
        match self {
            TargetProfile::Constant { level_nt } if !level_nt.is_finite() => bad("non-finite level"),
            TargetProfile::StepUp { from_nt, to_nt, .. } if !(from_nt < to_nt) => bad("step_up needs from_nt < to_nt"),
            TargetProfile::StepDown { from_nt, to_nt, .. } if !(from_nt > to_nt) => {
                bad("step_down needs from_nt > to_nt")
            }
            TargetProfile::RampUp { ramp_s, .. } if !(*ramp_s > 0.0) => bad("ramp_s must be positive"),
            TargetProfile::FromFile { samples } => {
                if samples.is_empty() {
                    return bad("profile file has no samples");
                }
                if samples.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
                    return bad("profile file has non-finite values");
                }
                if samples.windows(2).any(|w| w[1].0 < w[0].0) {
                    return bad("profile samples must be sorted by time");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn level_at(&self, t: f64) -> f64 {
        match *self {
            TargetProfile::Constant { level_nt } => level_nt,
            TargetProfile::StepUp { from_nt, to_nt, switch_time_s }
            | TargetProfile::StepDown { from_nt, to_nt, switch_time_s } => {
                if t < switch_time_s {
                    from_nt
                } else {
                    to_nt
                }
            }
            TargetProfile::RampUp { from_nt, to_nt, switch_time_s, ramp_s } => {
                let u = ((t - switch_time_s) / ramp_s).clamp(0.0, 1.0);
                from_nt + (to_nt - from_nt) * u
            }
            TargetProfile::FromFile { ref samples } => {
                let i = samples.partition_point(|&(ts, _)| ts <= t);
                samples[i.saturating_sub(1)].1
            }
        }
    }

    /// Time at which the profile starts to change (0 for constant or sampled
    /// profiles).
    pub fn switch_time(&self) -> f64 {
        match *self {
            TargetProfile::StepUp { switch_time_s, .. }
            | TargetProfile::StepDown { switch_time_s, .. }
            | TargetProfile::RampUp { switch_time_s, .. } => switch_time_s,
            TargetProfile::Constant { .. } => 0.0,
            TargetProfile::FromFile { ref samples } => samples[0].0.max(0.0),
        }
    }

    pub fn initial_level(&self) -> f64 {
        self.level_at(f64::NEG_INFINITY)
    }

    pub fn final_level(&self) -> f64 {
        self.level_at(f64::INFINITY)
    }

    /// Fit branch the field sweeps along after the switch.
    pub fn direction(&self) -> FitDirection {
        if self.final_level() < self.initial_level() {
            FitDirection::Descending
        } else {
            FitDirection::Ascending
        }
    }
}

pub const PLANT_LOG_HEADER: &str = "t_s,true_nT,disturbance_nT,measured_nT";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantLogRow {
    pub t_s: f64,
    pub true_nt: f64,
    pub disturbance_nt: f64,
    pub measured_nt: f64,
}

pub fn write_plant_log_csv<W: Write>(mut out: W, rows: &[PlantLogRow]) -> io::Result<()> {
    writeln!(out, "{PLANT_LOG_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.t_s, r.true_nt, r.disturbance_nt, r.measured_nt)?;
    }
    Ok(())
}
