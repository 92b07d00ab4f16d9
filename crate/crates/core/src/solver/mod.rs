//! Time integration of the perturbation system in the moving frame.
//!
//! Two frames are supported. In the Couette frame the unknown is the
//! vorticity `f(t, z, v)` with `z = x - tv`, and
//!
//! ```text
//! f_t + u·∇_L f = ν Δ_L f,    u = ∇⊥_L φ,    Δ_L φ = f.
//! ```
//!
//! In the general frame `z = x - tŪ(t,y)`, `v = Ū(t,y)` follows a
//! heat-evolved shear, and
//!
//! ```text
//! f_t + u·∇_t f = b ∂_z φ + ν Δ_L f + ν (a² - 1) ∂^L_vv f,    Δ_t φ = f,    u = ∇⊥_t φ.
//! ```
//!
//! The stiff part `ν Δ_L` is integrated exactly per mode with the Kelvin
//! exponent; everything else goes through an explicit Runge–Kutta method in
//! Lawson (integrating factor) form.

mod initial;
mod poisson;
mod stepper;

use alloc::string::String;
use alloc::vec::Vec;

pub use initial::{initial_data, DataSpec, DEFAULT_WINDOW_FRACTION};
pub use poisson::{apply_delta_t, solve_poisson_t, PoissonReport, MAX_SWEEPS};
pub use stepper::{Evaluation, Stepper, TraceTerms};

use crate::diagnostics::DiagnosticFrame;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::FrequencyGrid;
use crate::shear::InversionOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    Couette,
    General,
}

impl Frame {
    pub fn name(&self) -> &'static str {
        match self {
            Frame::Couette => "couette",
            Frame::General => "general",
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            Frame::Couette => 0,
            Frame::General => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Frame::Couette),
            1 => Some(Frame::General),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Scheme {
    /// Classical four-stage Runge–Kutta.
    #[default]
    Rk4,
    /// Two-stage Heun (explicit trapezoid).
    Heun,
}

impl Scheme {
    pub fn order(&self) -> u32 {
        match self {
            Scheme::Rk4 => 4,
            Scheme::Heun => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    Fixed(f64),
    /// `dt ≤ safety · min(Δz/|u_z|, Δv/|u_v|)`, the explicit viscous bound,
    /// and `dt ≤ dt_max`.
    Cfl { dt_max: f64, safety: f64 },
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Cfl {
            dt_max: 0.05,
            safety: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub frame: Frame,
    pub nu: f64,
    /// Sobolev regularity `N` of the weighted norm.
    pub n: f64,
    pub grid: FrequencyGrid,
    pub dt: DtPolicy,
    pub t_final: f64,
    pub dealias: bool,
    /// Relative residual target of the `Δ_t` solve, in `(0, 1e-6]`.
    pub elliptic_tol: f64,
    pub scheme: Scheme,
    /// Drop the transport term `u·∇f` (the source and viscous remainder stay).
    pub linear_only: bool,
    /// Rebuild the shear snapshot every this many steps.
    pub shear_refresh: usize,
    /// Largest tolerated energy fraction in the outer 20% of the dealiased band.
    pub tail_limit: f64,
    /// Mass fraction in `|v| > 0.4 L_v` that triggers a warning.
    pub spill_warn: f64,
    /// Mass fraction in `|v| > 0.4 L_v` that aborts a run with a nontrivial shear.
    pub spill_limit: f64,
    /// Step cadence of the physical-space spillover check.
    pub monitor_every: usize,
    pub inversion: InversionOptions,
}

impl SolverConfig {
    /// Couette-frame defaults on `grid`.
    pub fn new(grid: FrequencyGrid, nu: f64, t_final: f64) -> Self {
        Self {
            frame: Frame::Couette,
            nu,
            n: 2.0,
            grid,
            dt: DtPolicy::default(),
            t_final,
            dealias: true,
            elliptic_tol: 1e-10,
            scheme: Scheme::Rk4,
            linear_only: false,
            shear_refresh: 10,
            tail_limit: 1e-8,
            spill_warn: 1e-6,
            spill_limit: 1e-3,
            monitor_every: 10,
            inversion: InversionOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return bad(alloc::format!("nu must be >= 0, got {}", self.nu));
        }
        if !(self.n > 1.0) {
            return bad(alloc::format!("N must exceed 1, got {}", self.n));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return bad(alloc::format!("T_final must be positive, got {}", self.t_final));
        }
        match self.dt {
            DtPolicy::Fixed(dt) if !(dt > 0.0) || !dt.is_finite() => {
                return bad(alloc::format!("dt must be positive, got {dt}"))
            }
            DtPolicy::Cfl { dt_max, safety } if !(dt_max > 0.0) || !(safety > 0.0 && safety <= 1.0) => {
                return bad("CFL policy needs dt_max > 0 and safety in (0, 1]".into())
            }
            _ => {}
        }
        if !(self.elliptic_tol > 0.0 && self.elliptic_tol <= 1e-6) {
            return bad(alloc::format!("elliptic tolerance must lie in (0, 1e-6], got {}", self.elliptic_tol));
        }
        if self.shear_refresh == 0 || self.monitor_every == 0 {
            return bad("refresh and monitor cadences must be positive".into());
        }
        if !(self.tail_limit > 0.0) || !(self.spill_warn > 0.0) || !(self.spill_limit >= self.spill_warn) {
            return bad("monitor thresholds must be positive with spill_limit >= spill_warn".into());
        }
        Ok(())
    }
}

/// Current fields, time, and the accumulated diagnostic series of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    pub t: f64,
    pub steps: u64,
    pub f: SpectralField,
    /// Stream function at `t` (zero-mean gauge), refreshed with each frame.
    pub phi: SpectralField,
    pub frames: Vec<DiagnosticFrame>,
    pub warnings: Vec<String>,
}

impl RunState {
    pub fn new(f: SpectralField, t: f64) -> Self {
        let phi = SpectralField::zeros(*f.grid());
        Self {
            t,
            steps: 0,
            f,
            phi,
            frames: Vec::new(),
            warnings: Vec::new(),
        }
    }
}
