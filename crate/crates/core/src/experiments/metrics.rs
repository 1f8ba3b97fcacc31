use serde::Serialize;

/// How long a series must stay inside the band to count as having reached
/// the target.
pub const DWELL_S: f64 = 0.2;

/// Window of the trailing moving average applied to MSE curves.
pub const MSE_SMOOTHING: usize = 20;

/// Convergence threshold relative to the tail-mean MSE.
pub const CONVERGENCE_FACTOR: f64 = 1.05;

/// Per-run summary shared by both experiment families. Fields that do not
/// apply to a family are `None`/NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Seconds from the start of the evaluated series until the value
    /// enters the band and stays for [`DWELL_S`].
    pub reach_target_time_s: Option<f64>,
    pub mean_steady_nt: f64,
    pub rmse_steady: f64,
    pub fluct_min_nt: f64,
    pub fluct_max_nt: f64,
    /// Trial-averaged squared error per iteration (unsmoothed).
    pub mse_curve: Vec<f64>,
    pub iters_to_converge: Option<usize>,
    /// Mean of the MSE curve over its final 10 %.
    pub final_mse: f64,
    /// Standard error of `final_mse` across trials.
    pub final_mse_stderr: f64,
    /// Iterations after a noise burst until the smoothed MSE is back under
    /// the convergence threshold.
    pub reconverge_iters: Option<usize>,
    /// Fraction of loop samples where the actuator clamp was active.
    pub saturated_fraction: f64,
    pub trials: usize,
}

impl MetricsReport {
    pub(crate) fn empty() -> Self {
        Self {
            reach_target_time_s: None,
            mean_steady_nt: f64::NAN,
            rmse_steady: f64::NAN,
            fluct_min_nt: f64::NAN,
            fluct_max_nt: f64::NAN,
            mse_curve: Vec::new(),
            iters_to_converge: None,
            final_mse: f64::NAN,
            final_mse_stderr: f64::NAN,
            reconverge_iters: None,
            saturated_fraction: 0.0,
            trials: 0,
        }
    }

    pub fn fluct_span_nt(&self) -> f64 {
        self.fluct_max_nt - self.fluct_min_nt
    }
}

/// Step-response metrics of a `(t, value)` series against a constant target.
/// The band is `±band_fraction·|step_nt|` and steady statistics use samples
/// with `t − t₀ > settle_time_s`.
pub fn compute_metrics(
    series: &[(f64, f64)],
    target: f64,
    settle_time_s: f64,
    band_fraction: f64,
    step_nt: f64,
) -> MetricsReport {
    let mut report = MetricsReport::empty();
    report.trials = 1;
    let Some(&(t0, _)) = series.first() else {
        return report;
    };
    let band = band_fraction * step_nt.abs();

    let mut entry: Option<f64> = None;
    for &(t, v) in series {
        if (v - target).abs() <= band {
            let start = *entry.get_or_insert(t);
            if t - start >= DWELL_S {
                break;
            }
        } else {
            entry = None;
        }
    }
    report.reach_target_time_s = entry.map(|t| t - t0);

    let steady: Vec<f64> = series.iter().filter(|(t, _)| t - t0 > settle_time_s).map(|&(_, v)| v).collect();
    if !steady.is_empty() {
        let n = steady.len() as f64;
        report.mean_steady_nt = steady.iter().sum::<f64>() / n;
        report.rmse_steady = (steady.iter().map(|v| (v - target).powi(2)).sum::<f64>() / n).sqrt();
        report.fluct_min_nt = steady.iter().copied().fold(f64::INFINITY, f64::min);
        report.fluct_max_nt = steady.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    report
}

/// Trailing moving average; the first `window − 1` points average what is
/// available. Each window is summed afresh: a running sum would lose the
/// small values after a huge transient (a divergence or noise burst) passes.
pub fn smooth(curve: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    (0..curve.len())
        .map(|i| {
            let w = &curve[(i + 1).saturating_sub(window)..=i];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect()
}

/// Mean over the final 10 % (at least one point).
pub fn tail_mean(curve: &[f64]) -> f64 {
    let start = curve.len() - (curve.len() / 10).max(1);
    let tail = &curve[start..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// First index from `from` where `smoothed ≤ CONVERGENCE_FACTOR·tail`.
pub fn first_below(smoothed: &[f64], tail: f64, from: usize) -> Option<usize> {
    smoothed.iter().enumerate().skip(from).find(|(_, v)| **v <= CONVERGENCE_FACTOR * tail).map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(dt: f64, values: &[f64]) -> Vec<(f64, f64)> {
        values.iter().enumerate().map(|(i, v)| (i as f64 * dt, *v)).collect()
    }

    #[test]
    fn constant_series_on_target() {
        let s = series(0.01, &[5.0; 300]);
        let m = compute_metrics(&s, 5.0, 1.5, 0.02, 100.0);
        assert_eq!(m.reach_target_time_s, Some(0.0));
        assert_eq!(m.rmse_steady, 0.0);
        assert_eq!((m.fluct_min_nt, m.fluct_max_nt), (5.0, 5.0));
    }

    #[test]
    fn reach_requires_dwell() {
        // enters at 0.1 s for 0.1 s, leaves, re-enters at 0.5 s for good
        let mut v = vec![0.0; 10];
        v.extend([100.0; 10]);
        v.extend([0.0; 30]);
        v.extend([100.0; 100]);
        let m = compute_metrics(&series(0.01, &v), 100.0, 1.0, 0.02, 100.0);
        assert!((m.reach_target_time_s.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn never_reached() {
        let m = compute_metrics(&series(0.01, &[0.0; 100]), 100.0, 0.5, 0.02, 100.0);
        assert_eq!(m.reach_target_time_s, None);
    }

    #[test]
    fn smoothing_and_convergence() {
        let c = [4.0, 2.0, 0.0, 0.0];
        assert_eq!(smooth(&c, 2), vec![4.0, 3.0, 1.0, 0.0]);
        assert_eq!(tail_mean(&c), 0.0);
        assert_eq!(first_below(&smooth(&c, 2), 0.0, 0), Some(3));
    }
}
