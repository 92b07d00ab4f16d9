//! Decay-rate fits on a diagnostic time series.
//!
//! Around Couette the nonzero modes decay like `exp(-c ν t³)` once
//! `t ≳ ν^{-1/3}`, so `ln ‖f_≠‖` is fitted against `ν t³` on a window that
//! starts after that time.

use alloc::format;
use alloc::vec::Vec;

use crate::diagnostics::DiagnosticFrame;
use crate::error::{Error, Result};
use crate::math::{cbrt, fit_line, ln, powf, sqrt};

/// Fewest samples a fit window may contain.
pub const MIN_WINDOW_POINTS: usize = 4;

/// Samples below `y(0)` times this are treated as noise and dropped.
pub const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub nu: f64,
    /// `c` in `‖f_≠‖ ≈ C exp(-c ν t³)`.
    pub rate: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// First time at which `‖f_≠‖` has dropped to `‖f_≠(0)‖/e`.
    pub time_to_efold: Option<f64>,
    /// `time_to_efold · ν^{1/3}`: order one under enhanced dissipation.
    pub enhanced_ratio: Option<f64>,
    /// `time_to_efold · ν^{1/2}`: order one under the heat-equation rate.
    pub heat_ratio: Option<f64>,
}

/// Log-linear interpolation of the first crossing of `y(0)/e`.
pub fn time_to_efold(series: &[(f64, f64)]) -> Option<f64> {
    let (_, y0) = *series.first()?;
    if !(y0 > 0.0) {
        return None;
    }
    let target = y0 / core::f64::consts::E;
    for w in series.windows(2) {
        let ((t0, a), (t1, b)) = (w[0], w[1]);
        if b <= target {
            if !(a > 0.0 && b > 0.0) || a == b {
                return Some(t1);
            }
            let s = (ln(target) - ln(a)) / (ln(b) - ln(a));
            return Some(t0 + s * (t1 - t0));
        }
    }
    None
}

/// `(t, ‖f_≠‖_{L²})` from a run's frames.
pub fn nonzero_series(frames: &[DiagnosticFrame]) -> Vec<(f64, f64)> {
    frames.iter().map(|f| (f.t, f.nz_l2)).collect()
}

/// Fits `ln ‖f_≠‖` against `ν t³` on `window`, defaulting to
/// `[ν^{-1/3}, T_end]`. The run must last at least `3 ν^{-1/3}`.
pub fn fit_decay(series: &[(f64, f64)], nu: f64, window: Option<(f64, f64)>) -> Result<RateFit> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!("rate fits need nu > 0, got {nu}")));
    }
    let (_, y0) = *series
        .first()
        .ok_or_else(|| Error::WindowUnderresolved("empty series".into()))?;
    if !(y0 > 0.0) {
        return Err(Error::NoNonzeroContent);
    }
    let t_end = series.last().map(|p| p.0).unwrap_or(0.0);
    let tc = 1.0 / cbrt(nu);
    if t_end < 3.0 * tc {
        return Err(Error::WindowUnderresolved(format!(
            "run ends at t = {t_end:.3} before 3 nu^(-1/3) = {:.3}",
            3.0 * tc
        )));
    }
    let (lo, hi) = window.unwrap_or((tc, t_end));
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .iter()
        .filter(|(t, y)| *t >= lo && *t <= hi && *y > NOISE_FLOOR * y0)
        .map(|(t, y)| (nu * t * t * t, ln(*y)))
        .unzip();
    if xs.len() < MIN_WINDOW_POINTS {
        return Err(Error::WindowUnderresolved(format!(
            "{} usable samples in [{lo:.3}, {hi:.3}], need {MIN_WINDOW_POINTS}",
            xs.len()
        )));
    }
    let line = fit_line(&xs, &ys).ok_or_else(|| Error::WindowUnderresolved("degenerate window".into()))?;
    let te = time_to_efold(series);
    Ok(RateFit {
        nu,
        rate: -line.slope,
        intercept: line.intercept,
        rms_residual: line.rms_residual,
        window: (lo, hi),
        points: xs.len(),
        time_to_efold: te,
        enhanced_ratio: te.map(|t| t * cbrt(nu)),
        heat_ratio: te.map(|t| t * sqrt(nu)),
    })
}

/// [`fit_decay`] on the `‖f_≠‖` series of a run.
pub fn fit_enhanced_dissipation(frames: &[DiagnosticFrame], nu: f64) -> Result<RateFit> {
    fit_decay(&nonzero_series(frames), nu, None)
}

/// Least-squares exponent `p` in `y ≈ C x^p`.
pub fn power_law_exponent(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| ln(*x)).collect();
    let ly: Vec<f64> = ys.iter().map(|y| ln(*y)).collect();
    fit_line(&lx, &ly).map(|l| l.slope)
}

/// `ν^{-p}`, for comparing a measured time scale against a candidate rate.
pub fn time_scale(nu: f64, p: f64) -> f64 {
    powf(nu, -p)
}
