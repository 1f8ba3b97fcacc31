//! Side/spacing optimisation of the square Helmholtz pair.
//!
//! With `L = n·d`, the second axial derivative of the centre field is
//! proportional to `−5n⁶ + 11n⁴ + 18n² + 6`; its positive root maximises the
//! uniform volume.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::magnetics::{onaxis_field, uniformity, HelmholtzPair, MagneticsError, Point, MU0};

/// Bisection stops once `|p(n)|` falls below this.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Default bracket for the optimal ratio.
pub const RATIO_BRACKET: (f64, f64) = (1.0, 3.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoiloptError {
    #[error("no sign change on [{lo}, {hi}]: p(lo) = {f_lo}, p(hi) = {f_hi}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("bisection stalled at n = {n} with residual {residual}")]
    NotConverged { n: f64, residual: f64 },
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
    #[error(transparent)]
    Field(#[from] MagneticsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalityResult {
    /// Side/spacing ratio.
    pub n: f64,
    /// Polynomial value at `n`.
    pub residual: f64,
    pub iterations: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformRegion {
    pub threshold_pct: f64,
    pub extent_x_over_d: f64,
    pub extent_y_over_d: f64,
}

pub fn optimality_polynomial(n: f64) -> f64 {
    let n2 = n * n;
    let n4 = n2 * n2;
    let n6 = n4 * n2;
    -5.0 * n6 + 11.0 * n4 + 18.0 * n2 + 6.0
}

/// Plain bisection on a sign-changing bracket, stopping when `|f| < tol` or
/// the bracket can no longer be split.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<OptimalityResult, CoiloptError> {
    let (mut lo, mut hi) = (lo.min(hi), lo.max(hi));
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo == 0.0 {
        return Ok(OptimalityResult { n: lo, residual: 0.0, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(OptimalityResult { n: hi, residual: 0.0, iterations: 0 });
    }
    if f_lo.signum() == f_hi.signum() || !(f_lo.is_finite() && f_hi.is_finite()) {
        return Err(CoiloptError::NoBracket { lo, hi, f_lo, f_hi });
    }
    let lo_negative = f_lo < 0.0;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() < tol {
            return Ok(OptimalityResult { n: mid, residual: fm, iterations });
        }
        if mid <= lo || mid >= hi {
            return Err(CoiloptError::NotConverged { n: mid, residual: fm });
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// The positive root of the optimality polynomial on the default bracket.
pub fn solve_optimal_ratio() -> Result<OptimalityResult, CoiloptError> {
    solve_optimal_ratio_in(RATIO_BRACKET.0, RATIO_BRACKET.1)
}

pub fn solve_optimal_ratio_in(lo: f64, hi: f64) -> Result<OptimalityResult, CoiloptError> {
    bisect(optimality_polynomial, lo, hi, RESIDUAL_TOL)
}

/// Closed-form `∂²bz/∂z²` at the centre, T/m².
pub fn second_derivative_center(pair: &HelmholtzPair) -> f64 {
    let d = pair.spacing;
    let n = pair.ratio();
    let n2 = n * n;
    let n4 = n2 * n2;
    let n6 = n4 * n2;
    let n8 = n4 * n4;
    let n10 = n8 * n2;
    let numerator = 64.0 * pair.current * f64::from(pair.turns) * MU0 * n2 * optimality_polynomial(n);
    let denominator = PI
        * d
        * d
        * (d * d * (2.0 * n2 + 1.0)).sqrt()
        * (4.0 * n10 + 16.0 * n8 + 25.0 * n6 + 19.0 * n4 + 7.0 * n2 + 1.0);
    numerator / denominator
}

/// Central finite difference of [`onaxis_field`] with step `1e-4·d`.
pub fn second_derivative_fd(pair: &HelmholtzPair) -> f64 {
    let h = 1e-4 * pair.spacing;
    let f = |z| onaxis_field(pair, z);
    (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h)
}

/// Spacing that makes a coil of side `side` optimally uniform.
pub fn optimal_spacing(side: f64) -> Result<f64, CoiloptError> {
    if !(side > 0.0 && side.is_finite()) {
        return Err(CoiloptError::NonPositive("side length"));
    }
    Ok(side / solve_optimal_ratio()?.n)
}

/// Half-extents (in units of `d`) along +x and +y on the mid-plane within
/// which every scanned point stays inside `threshold_pct`.
pub fn uniform_region(
    pair: &HelmholtzPair,
    threshold_pct: f64,
    resolution: f64,
) -> Result<UniformRegion, CoiloptError> {
    if !(threshold_pct > 0.0 && threshold_pct.is_finite()) {
        return Err(CoiloptError::NonPositive("threshold"));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(CoiloptError::NonPositive("resolution"));
    }
    pair.validate()?;
    let scan = |dir: fn(f64) -> Point| -> Result<f64, CoiloptError> {
        // The mid-plane never meets a wire, but the field beyond the
        // winding is meaningless for this purpose.
        let limit = 0.5 * pair.side;
        let mut extent = 0.0;
        let mut k = 1u64;
        loop {
            let s = k as f64 * resolution;
            if s > limit || uniformity(pair, dir(s))?.abs() > threshold_pct {
                return Ok(extent / pair.spacing);
            }
            extent = s;
            k += 1;
        }
    };
    Ok(UniformRegion {
        threshold_pct,
        extent_x_over_d: scan(|s| Point::new(s, 0.0, 0.0))?,
        extent_y_over_d: scan(|s| Point::new(0.0, s, 0.0))?,
    })
}

/// Uniformity along +x on the mid-plane from 0 to `max_over_d·d`.
pub fn uniformity_profile(
    pair: &HelmholtzPair,
    max_over_d: f64,
    points: usize,
) -> Result<Vec<(f64, f64)>, CoiloptError> {
    pair.validate()?;
    let steps = points.max(2) - 1;
    (0..=steps)
        .map(|i| {
            let pos = max_over_d * i as f64 / steps as f64;
            let h = uniformity(pair, Point::new(pos * pair.spacing, 0.0, 0.0))?;
            Ok((pos, h))
        })
        .collect()
}

pub const PROFILE_HEADER: &str = "pos_over_d,uniformity_pct";

pub fn write_profile_csv<W: Write>(mut out: W, rows: &[(f64, f64)]) -> io::Result<()> {
    writeln!(out, "{PROFILE_HEADER}")?;
    for (p, h) in rows {
        writeln!(out, "{p},{h}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_values() {
        assert_eq!(optimality_polynomial(0.0), 6.0);
        assert!(optimality_polynomial(1.8365).abs() < 0.05);
        assert!(optimality_polynomial(1.8) > 0.0 && optimality_polynomial(1.9) < 0.0);
    }

    #[test]
    fn root_and_cubic_substitution() {
        let r = solve_optimal_ratio().unwrap();
        assert!((r.n - 1.8365).abs() < 1e-3);
        assert!(r.residual.abs() < RESIDUAL_TOL);
        let m = r.n * r.n;
        assert!((-5.0 * m * m * m + 11.0 * m * m + 18.0 * m + 6.0).abs() < 1e-10);
    }

    #[test]
    fn no_bracket_reported() {
        assert!(matches!(solve_optimal_ratio_in(2.0, 3.0), Err(CoiloptError::NoBracket { .. })));
    }

    #[test]
    fn testbed_spacing() {
        let d = optimal_spacing(0.8404).unwrap();
        assert!((d - 0.4576).abs() < 0.5e-3, "d = {d}");
        assert!((optimal_spacing(1.0).unwrap() - 0.5445).abs() < 1e-4);
        assert!(optimal_spacing(0.0).is_err());
    }

    #[test]
    fn second_derivative_changes_sign_at_optimum() {
        let at =
            |n: f64| second_derivative_center(&HelmholtzPair { side: n * 0.5, spacing: 0.5, turns: 10, current: 1.0 });
        assert!(at(1.7) > 0.0 && at(2.0) < 0.0);
    }
}
