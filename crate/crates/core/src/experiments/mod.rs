//! Experiment harnesses: system identification learning curves, closed-loop
//! step responses, divergence and stability probes, plus the metrics they
//! share.

mod metrics;
mod probes;
mod step;
mod sysid;

use std::io::{self, Write};

use thiserror::Error;

pub use metrics::{
    compute_metrics, first_below, smooth, tail_mean, MetricsReport, CONVERGENCE_FACTOR, DWELL_S, MSE_SMOOTHING,
};
pub use probes::{
    run_divergence_probe, run_stability_stat, DivergenceReport, Estimate, StabilityReport, DIVERGENCE_EARLY,
    DIVERGENCE_LATE, DIVERGENCE_RATIO,
};
pub use step::{
    plant_log, run_step_response, write_trace_csv, FitSelection, StepRun, StepScenario, TraceRow, TRACE_HEADER,
};
pub use sysid::{run_sysid, sysid_diagnostics, NoiseBurst, SysIdScenario, TrialData};

use crate::control::{ControlError, Method};
use crate::plant::PlantError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

pub const SYSID_METRICS_HEADER: &str = "method,snr_db,iters_to_converge,final_mse,final_mse_stderr,reconverge_iters";

/// One row per method; empty cells mean "not reached".
pub fn write_sysid_metrics_csv<W: Write>(mut out: W, snr_db: f64, rows: &[(Method, MetricsReport)]) -> io::Result<()> {
    writeln!(out, "{SYSID_METRICS_HEADER}")?;
    for (m, r) in rows {
        writeln!(
            out,
            "{m},{snr_db},{},{},{},{}",
            opt(r.iters_to_converge),
            r.final_mse,
            r.final_mse_stderr,
            opt(r.reconverge_iters)
        )?;
    }
    Ok(())
}

/// `iter,mse_<method>,…`.
pub fn write_mse_curves_csv<W: Write>(mut out: W, rows: &[(Method, MetricsReport)]) -> io::Result<()> {
    let names: Vec<String> = rows.iter().map(|(m, _)| format!("mse_{m}")).collect();
    writeln!(out, "iter,{}", names.join(","))?;
    let len = rows.iter().map(|(_, r)| r.mse_curve.len()).max().unwrap_or(0);
    for i in 0..len {
        write!(out, "{i}")?;
        for (_, r) in rows {
            match r.mse_curve.get(i) {
                Some(v) => write!(out, ",{v}")?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

pub const STEP_METRICS_HEADER: &str =
    "method,profile,reach_target_time_s,mean_steady_nT,rmse_steady_nT,fluct_min_nT,fluct_max_nT,saturated_fraction";

pub fn write_step_metrics_csv<W: Write>(mut out: W, rows: &[(Method, String, MetricsReport)]) -> io::Result<()> {
    writeln!(out, "{STEP_METRICS_HEADER}")?;
    for (m, profile, r) in rows {
        writeln!(
            out,
            "{m},{profile},{},{},{},{},{},{}",
            opt(r.reach_target_time_s),
            r.mean_steady_nt,
            r.rmse_steady,
            r.fluct_min_nt,
            r.fluct_max_nt,
            r.saturated_fraction
        )?;
    }
    Ok(())
}
