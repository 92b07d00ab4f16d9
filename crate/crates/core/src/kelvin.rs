//! Closed-form evolution of the linearized problem around Couette.
//!
//! A mode starting at `(k, η₀)` in original frequencies is carried to
//! `η_t = η₀ - kt` and damped by `exp(-φ(t))` with
//!
//! ```text
//! φ(t) = ν ∫₀ᵗ k² + (η₀ - kτ)² dτ = ν (k²t + η₀²t - η₀kt² + k²t³/3).
//! ```
//!
//! The expanded cubic is used instead of `((η₀)³ - (η₀ - kt)³)/(3k)` so that
//! the `k = 0` branch and small `kt` need no special casing.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math::{bisect, exp, fit_line, geometric_ladder, japanese, ln};

/// Viscous exponent `φ(t)` of the mode `(k, η₀)`.
#[inline]
pub fn viscous_exponent(k: f64, eta0: f64, nu: f64, t: f64) -> f64 {
    nu * (k * k * t + eta0 * eta0 * t - eta0 * k * t * t + k * k * t * t * t / 3.0)
}

/// `φ(t1) - φ(t0)`, evaluated without forming the two large terms.
#[inline]
pub fn viscous_increment(k: f64, eta0: f64, nu: f64, t0: f64, t1: f64) -> f64 {
    // ∫_{t0}^{t1} k² + (η₀ - kτ)² dτ with s = η₀ - kτ
    let h = t1 - t0;
    let s0 = eta0 - k * t0;
    nu * (k * k * h + s0 * s0 * h - s0 * k * h * h + k * k * h * h * h / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KelvinMode {
    pub k: i64,
    pub eta0: f64,
    pub amplitude: Complex64,
    pub nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `k ≠ 0`: sheared and enhanced-dissipative.
    Sheared,
    /// `k = 0`: plain heat decay `exp(-ν η₀² t)`.
    ZeroMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KelvinState {
    pub omega_hat: Complex64,
    pub psi_hat: Complex64,
    pub eta_t: f64,
    pub branch: Branch,
}

impl KelvinState {
    /// `|∂_x ψ̂| = |k ψ̂|`.
    pub fn dz_psi_abs(&self, k: i64) -> f64 {
        (k as f64).abs() * self.psi_hat.norm()
    }

    /// `|∂_y ψ̂| = |η_t ψ̂|` in original coordinates.
    pub fn dy_psi_abs(&self) -> f64 {
        self.eta_t.abs() * self.psi_hat.norm()
    }
}

impl KelvinMode {
    pub fn new(k: i64, eta0: f64, amplitude: Complex64, nu: f64) -> Result<Self> {
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("nu must be >= 0, got {nu}")));
        }
        Ok(Self {
            k,
            eta0,
            amplitude,
            nu,
        })
    }

    pub fn unit(k: i64, eta0: f64, nu: f64) -> Result<Self> {
        Self::new(k, eta0, Complex64::new(1.0, 0.0), nu)
    }

    /// Critical time `η₀/k` at which the physical frequency passes through 0.
    pub fn critical_time(&self) -> Option<f64> {
        (self.k != 0).then(|| self.eta0 / self.k as f64)
    }

    pub fn exponent(&self, t: f64) -> f64 {
        viscous_exponent(self.k as f64, self.eta0, self.nu, t)
    }

    /// `dφ/dt = ν (k² + η_t²)`.
    pub fn exponent_rate(&self, t: f64) -> f64 {
        let k = self.k as f64;
        let s = self.eta0 - k * t;
        self.nu * (k * k + s * s)
    }

    pub fn evolve(&self, t: f64) -> Result<KelvinState> {
        kelvin_evolve(self, t)
    }

    /// Time at which `|ω̂|` has dropped by `1/e`, i.e. `φ(t) = 1`.
    pub fn efolding_time(&self) -> Option<f64> {
        if self.nu <= 0.0 {
            return None;
        }
        let mut hi = 1.0;
        while self.exponent(hi) < 1.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return None;
            }
        }
        bisect(|t| self.exponent(t) - 1.0, 0.0, hi, 1e-13 * hi)
    }
}

pub fn kelvin_evolve(mode: &KelvinMode, t: f64) -> Result<KelvinState> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("t must be >= 0, got {t}")));
    }
    let k = mode.k as f64;
    let eta_t = mode.eta0 - k * t;
    let omega_hat = if t == 0.0 {
        mode.amplitude
    } else {
        mode.amplitude * exp(-mode.exponent(t))
    };
    let q = k * k + eta_t * eta_t;
    let psi_hat = if q == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        omega_hat * (-1.0 / q)
    };
    let branch = if mode.k == 0 {
        Branch::ZeroMode
    } else {
        Branch::Sheared
    };
    Ok(KelvinState {
        omega_hat,
        psi_hat,
        eta_t,
        branch,
    })
}

/// `t ↦ exp(-c ν s³)` with `c = k²/3` and `s` the time elapsed past the
/// (nonnegative part of the) critical time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationEnvelope {
    pub k: i64,
    pub critical_time: f64,
    pub nu: f64,
}

impl DissipationEnvelope {
    pub fn rate_constant(&self) -> f64 {
        let k = self.k as f64;
        k * k / 3.0
    }

    /// The lower bound `c ν s³` that the exact exponent dominates.
    pub fn exponent_bound(&self, t: f64) -> f64 {
        let s = (t - self.critical_time.max(0.0)).max(0.0);
        self.rate_constant() * self.nu * s * s * s
    }

    pub fn eval(&self, t: f64) -> f64 {
        exp(-self.exponent_bound(t))
    }
}

pub fn enhanced_dissipation_envelope(k: i64, eta0: f64, nu: f64) -> Result<DissipationEnvelope> {
    if k == 0 {
        return Err(Error::ZeroMode("enhanced dissipation"));
    }
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("nu must be > 0, got {nu}")));
    }
    Ok(DissipationEnvelope {
        k,
        critical_time: eta0 / k as f64,
        nu,
    })
}

/// Log-log slopes of the stream function and its derivatives against
/// `<t - t_c>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InviscidDampingFit {
    pub psi_slope: f64,
    pub dz_psi_slope: f64,
    pub dy_psi_slope: f64,
    pub critical_time: f64,
}

pub fn inviscid_damping_check(mode: &KelvinMode, times: &[f64]) -> Result<InviscidDampingFit> {
    if mode.k == 0 {
        return Err(Error::ZeroMode("inviscid damping"));
    }
    if times.len() < 4 {
        return Err(Error::TooFewSamples {
            needed: 4,
            got: times.len(),
        });
    }
    let t_c = mode.critical_time().unwrap_or(0.0);
    let mut xs = Vec::with_capacity(times.len());
    let mut psi = Vec::with_capacity(times.len());
    let mut dz = Vec::with_capacity(times.len());
    let mut dy = Vec::with_capacity(times.len());
    for &t in times {
        let s = mode.evolve(t)?;
        xs.push(ln(japanese(t - t_c)));
        psi.push(ln(s.psi_hat.norm()));
        dz.push(ln(s.dz_psi_abs(mode.k)));
        dy.push(ln(s.dy_psi_abs()));
    }
    let slope = |ys: &[f64]| {
        fit_line(&xs, ys)
            .map(|f| f.slope)
            .ok_or_else(|| Error::WindowUnderresolved("degenerate time samples".into()))
    };
    Ok(InviscidDampingFit {
        psi_slope: slope(&psi)?,
        dz_psi_slope: slope(&dz)?,
        dy_psi_slope: slope(&dy)?,
        critical_time: t_c,
    })
}

/// Default fitting window `[2t_c + 5, 10t_c + 50]`, sampled geometrically.
pub fn default_damping_window(mode: &KelvinMode, samples: usize) -> Vec<f64> {
    let t_c = mode.critical_time().unwrap_or(0.0).max(0.0);
    geometric_ladder(2.0 * t_c + 5.0, 10.0 * t_c + 50.0, samples)
}

/// One row of the `linear` time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSample {
    pub t: f64,
    pub omega: f64,
    pub psi: f64,
    pub dz_psi: f64,
    pub dy_psi: f64,
    pub envelope: f64,
}

/// Samples `|ω̂|, |ψ̂|, |∂_zψ̂|, |∂_yψ̂|` and the dissipation envelope (1 when
/// the envelope is undefined, i.e. `k = 0` or `ν = 0`).
pub fn linear_series(mode: &KelvinMode, times: &[f64]) -> Result<Vec<LinearSample>> {
    let envelope = enhanced_dissipation_envelope(mode.k, mode.eta0, mode.nu).ok();
    times
        .iter()
        .map(|&t| {
            let s = mode.evolve(t)?;
            Ok(LinearSample {
                t,
                omega: s.omega_hat.norm(),
                psi: s.psi_hat.norm(),
                dz_psi: s.dz_psi_abs(mode.k),
                dy_psi: s.dy_psi_abs(),
                envelope: envelope.map_or(1.0, |e| e.eval(t) * mode.amplitude.norm()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::integrate;

    #[test]
    fn viscous_decay_example() {
        let m = KelvinMode::unit(1, 0.0, 0.1).unwrap();
        let s = m.evolve(1.0).unwrap();
        let expected = exp(-0.1 * (1.0 + 1.0 / 3.0));
        assert!((s.omega_hat.norm() - expected).abs() < 1e-15);
        assert!((expected - 0.87517).abs() < 1e-5);
        let quad = 0.1 * integrate(|tau| 1.0 + tau * tau, 0.0, 1.0, 1e-14);
        assert!((m.exponent(1.0) - quad).abs() < 1e-15);
    }

    #[test]
    fn orr_amplification_example() {
        let m = KelvinMode::unit(1, 10.0, 0.0).unwrap();
        let before = m.evolve(0.0).unwrap().psi_hat.norm();
        let peak = m.evolve(10.0).unwrap().psi_hat.norm();
        assert!((before - 1.0 / 101.0).abs() < 1e-16);
        assert_eq!(peak, 1.0);
        assert!((peak / before - 101.0).abs() < 1e-12);
    }

    #[test]
    fn identity_at_zero_and_zero_mode_branch() {
        let amp = Complex64::new(0.3, -1.2);
        let m = KelvinMode::new(2, -4.0, amp, 0.7).unwrap();
        assert_eq!(m.evolve(0.0).unwrap().omega_hat, amp);
        let z = KelvinMode::new(0, 2.0, amp, 0.1).unwrap();
        let s = z.evolve(3.0).unwrap();
        assert_eq!(s.branch, Branch::ZeroMode);
        assert!((s.omega_hat.norm() - amp.norm() * exp(-0.1 * 4.0 * 3.0)).abs() < 1e-15);
        assert!(m.evolve(-1.0).is_err());
        assert!(KelvinMode::unit(1, 0.0, -1.0).is_err());
    }

    #[test]
    fn inviscid_norm_is_conserved() {
        let m = KelvinMode::new(3, 7.0, Complex64::new(0.0, 2.0), 0.0).unwrap();
        for t in [0.0, 0.5, 3.0, 1e3] {
            assert_eq!(m.evolve(t).unwrap().omega_hat.norm(), 2.0);
        }
    }

    #[test]
    fn envelope_examples() {
        let e = enhanced_dissipation_envelope(1, 0.0, 1.0).unwrap();
        assert_eq!(e.eval(0.0), 1.0);
        let m = KelvinMode::unit(1, 0.0, 1.0).unwrap();
        assert!((m.exponent(3.0) - 12.0).abs() < 1e-12);
        assert!((e.exponent_bound(3.0) - 9.0).abs() < 1e-12);
        assert!(m.exponent(3.0) >= e.exponent_bound(3.0));
        assert!(enhanced_dissipation_envelope(0, 1.0, 1.0).is_err());

        // e-folding at ν = 1e-4 from the scalar cubic t + t³/3 = 1e4
        let m = KelvinMode::unit(1, 0.0, 1e-4).unwrap();
        let t = m.efolding_time().unwrap();
        assert!((t + t * t * t / 3.0 - 1e4).abs() < 1e-6);
        assert!((t - 31.04).abs() < 0.01, "{t}");
        assert!(t < 1e-4f64.powf(-0.5));
    }

    #[test]
    fn exact_exponent_dominates_envelope_after_critical_time() {
        for k in [1i64, 2, 5] {
            for eta0 in [-6.0, 0.0, 2.5, 10.0] {
                let m = KelvinMode::unit(k, eta0, 0.01).unwrap();
                let e = enhanced_dissipation_envelope(k, eta0, 0.01).unwrap();
                for i in 0..200 {
                    let t = 0.25 * i as f64;
                    assert!(m.exponent(t) + 1e-12 >= e.exponent_bound(t));
                }
            }
        }
    }

    #[test]
    fn inviscid_damping_examples() {
        let m = KelvinMode::unit(1, 0.0, 0.0).unwrap();
        let times = geometric_ladder(10.0, 100.0, 20);
        let fit = inviscid_damping_check(&m, &times).unwrap();
        assert!((fit.psi_slope + 2.0).abs() < 0.05);
        assert!((fit.dz_psi_slope + 2.0).abs() < 0.05);
        assert!((fit.dy_psi_slope + 1.0).abs() < 0.05, "{}", fit.dy_psi_slope);
        assert!(inviscid_damping_check(&m, &times[..3]).is_err());
        assert!(inviscid_damping_check(&KelvinMode::unit(0, 1.0, 0.0).unwrap(), &times).is_err());
    }

    #[test]
    fn viscosity_barely_moves_preasymptotic_slopes() {
        // Below t = ν^{-1/3} the viscous factor is still O(1), so the fitted
        // exponents on [1, ν^{-1/3}/2] agree with the inviscid ones.
        let nu = 0.01;
        let t_max = 0.5 * powf_local(nu, -1.0 / 3.0);
        let times = geometric_ladder(1.0, t_max, 8);
        let a = inviscid_damping_check(&KelvinMode::unit(1, 0.0, 0.0).unwrap(), &times).unwrap();
        let b = inviscid_damping_check(&KelvinMode::unit(1, 0.0, nu).unwrap(), &times).unwrap();
        assert!((a.psi_slope - b.psi_slope).abs() < 0.1);
        assert!((a.dy_psi_slope - b.dy_psi_slope).abs() < 0.1);
    }

    fn powf_local(x: f64, y: f64) -> f64 {
        crate::math::powf(x, y)
    }

    #[test]
    fn increment_matches_difference() {
        for (k, eta0, t0, t1) in [(1.0, 0.0, 0.0, 1.0), (3.0, -2.0, 5.0, 5.1), (2.0, 8.0, 40.0, 40.5)] {
            let a = viscous_increment(k, eta0, 0.3, t0, t1);
            let b = viscous_exponent(k, eta0, 0.3, t1) - viscous_exponent(k, eta0, 0.3, t0);
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} {b}");
        }
    }
}
