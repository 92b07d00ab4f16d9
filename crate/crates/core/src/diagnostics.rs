//! Weighted energies, dissipation functionals, the energy budget, and the
//! bootstrap classification.
//!
//! With `A = M <D>^N` the energy identity reads
//!
//! ```text
//! ½ d/dt ‖Af‖² + ν‖∇_L A f‖² + ‖sqrt(-ṀM) <D>^N f‖²
//!     = -⟨A(u·∇f), Af⟩ + ⟨A(b∂_zφ), Af⟩ + ν⟨A((a² - 1)∂^L_vv f), Af⟩,
//! ```
//!
//! and the Couette frame drops the last two terms.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::math::{bracket_pow, powf, sqrt};
use crate::multiplier::MultiplierState;
use crate::shear::ShearState;
use crate::transform::{line_to_physical, line_to_spectral, FftBackend};
use crate::MULTIPLIER_FLOOR;

/// Inner products `⟨A X, A f⟩` of the explicit terms, taken at the state the
/// frame was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceTerms {
    /// `⟨A(u·∇f), Af⟩`
    pub transport: f64,
    /// `⟨A(b∂_zφ), Af⟩`
    pub source: f64,
    /// `ν⟨A((a² - 1)∂^L_vv f), Af⟩`
    pub dissipation_error: f64,
    /// `⟨u₀, ∂_v^{-1}(u·∇f)₀⟩`, the zero-mode kinetic energy flux (Couette frame).
    pub zero_flux: f64,
}

/// Borrowed state a frame is computed from.
#[derive(Clone, Copy)]
pub struct FrameInputs<'a> {
    pub f: &'a SpectralField,
    pub phi: &'a SpectralField,
    pub t: f64,
    pub nu: f64,
    pub n: f64,
    /// `None` means `M ≡ 1` (used for `ν = 0`).
    pub multiplier: Option<&'a MultiplierState>,
    /// `None` means `a ≡ 1`.
    pub shear: Option<&'a ShearState>,
    pub trace: Option<TraceTerms>,
    /// `‖∇ω‖²` in original coordinates if the caller has it.
    pub grad_sqr: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticFrame {
    pub t: f64,
    /// `‖Af‖²`
    pub e_a: f64,
    /// `ν‖∇_L A f‖²`
    pub d_visc: f64,
    /// `‖sqrt(-ṀM) <D>^N f‖²`
    pub d_ghost: f64,
    /// `‖f_≠‖_{H^N}`
    pub nz_hn: f64,
    /// `‖f₀‖_{H^N}`
    pub z_hn: f64,
    /// `‖f_≠‖_{L²}`
    pub nz_l2: f64,
    /// `‖φ_≠‖_{L²}`
    pub psi_nz: f64,
    /// `‖u₀^z‖_{L²}`
    pub u0_l2: f64,
    /// `ν‖∂_v u₀^z‖²`
    pub u0_diss: f64,
    /// `‖∇ω‖_{L²}` in original coordinates.
    pub grad_l2: f64,
    /// Smallest `C` with `1 ≤ C ν^{-1/6}(sqrt(-ṀM) + ν^{1/2}|k, η - kt|)` on
    /// every `k ≠ 0` grid mode at this time (0 without a multiplier).
    pub c_e: f64,
    pub trace: Option<TraceTerms>,
    /// Normalized residual of the energy identity (0 until filled in).
    pub budget_residual: f64,
}

impl DiagnosticFrame {
    pub fn compute(backend: &mut dyn FftBackend, inp: FrameInputs<'_>) -> Self {
        let f = inp.f;
        let grid = *f.grid();
        let t = inp.t;
        let (mut e_a, mut d_visc, mut d_ghost) = (0.0, 0.0, 0.0);
        let (mut nz_hn, mut z_hn, mut nz_l2, mut psi_nz) = (0.0, 0.0, 0.0, 0.0);
        for (idx, c) in f.coeffs().iter().enumerate() {
            let (k, eta) = grid.freq(idx);
            let e = c.norm_sqr();
            let w = bracket_pow(k, eta, inp.n);
            let (a, g) = match inp.multiplier {
                Some(m) => (m.a_table()[idx], m.ghost_table()[idx]),
                None => (w, 0.0),
            };
            let s = eta - k * t;
            e_a += a * a * e;
            d_visc += (k * k + s * s) * a * a * e;
            d_ghost += g * g * e;
            if k == 0.0 {
                z_hn += w * w * e;
            } else {
                nz_hn += w * w * e;
                nz_l2 += e;
                psi_nz += inp.phi.coeffs()[idx].norm_sqr();
            }
        }
        d_visc *= inp.nu;

        // u₀^z = -a ∂_v φ₀
        let nv = grid.n_v();
        let mut u0: Vec<Complex64> = (0..nv)
            .map(|iv| -Complex64::new(0.0, grid.eta_at(iv)) * inp.phi.coeffs()[iv])
            .collect();
        if let Some(sh) = inp.shear.filter(|s| !s.is_trivial()) {
            let mut line = line_to_physical(backend, &u0);
            for (x, a1) in line.iter_mut().zip(sh.a_minus_one()) {
                *x *= 1.0 + a1;
            }
            u0 = line_to_spectral(backend, &line);
        }
        let u0_l2 = sqrt(u0.iter().map(|c| c.norm_sqr()).sum::<f64>());
        let u0_diss = inp.nu
            * (0..nv)
                .map(|iv| grid.eta_at(iv) * grid.eta_at(iv) * u0[iv].norm_sqr())
                .sum::<f64>();

        let grad_sqr = inp
            .grad_sqr
            .unwrap_or_else(|| f.weighted_energy(|k, eta| k * k + (eta - k * t) * (eta - k * t)));

        let c_e = match inp.multiplier {
            Some(m) if inp.nu > 0.0 => {
                let nu6 = powf(inp.nu, -1.0 / 6.0);
                let nu2 = sqrt(inp.nu);
                let n = m.params().regularity();
                let mut worst: f64 = 0.0;
                for idx in 0..grid.len() {
                    let (k, eta) = grid.freq(idx);
                    if k == 0.0 {
                        continue;
                    }
                    let root = m.ghost_table()[idx] / bracket_pow(k, eta, n);
                    let s = eta - k * t;
                    worst = worst.max(1.0 / (nu6 * (root + nu2 * sqrt(k * k + s * s))));
                }
                worst
            }
            _ => 0.0,
        };

        Self {
            t,
            e_a,
            d_visc,
            d_ghost,
            nz_hn: sqrt(nz_hn),
            z_hn: sqrt(z_hn),
            nz_l2: sqrt(nz_l2),
            psi_nz: sqrt(psi_nz),
            u0_l2,
            u0_diss,
            grad_l2: sqrt(grad_sqr),
            c_e,
            trace: inp.trace,
            budget_residual: 0.0,
        }
    }

    /// `‖f‖_{H^N}`.
    pub fn hn(&self) -> f64 {
        sqrt(self.nz_hn * self.nz_hn + self.z_hn * self.z_hn)
    }

    pub fn is_finite(&self) -> bool {
        [
            self.e_a,
            self.d_visc,
            self.d_ghost,
            self.nz_hn,
            self.z_hn,
            self.psi_nz,
            self.u0_l2,
            self.u0_diss,
        ]
        .iter()
        .all(|x| x.is_finite())
    }
}

/// Convenience wrapper around [`DiagnosticFrame::compute`].
pub fn frame(backend: &mut dyn FftBackend, inputs: FrameInputs<'_>) -> DiagnosticFrame {
    DiagnosticFrame::compute(backend, inputs)
}

/// `∫_{t0}^{t2} g` through three points with unequal spacing.
fn simpson3(t: [f64; 3], g: [f64; 3]) -> f64 {
    let h0 = t[1] - t[0];
    let h1 = t[2] - t[1];
    if h0 <= 0.0 || h1 <= 0.0 {
        return 0.0;
    }
    let h = h0 + h1;
    h / 6.0 * ((2.0 - h1 / h0) * g[0] + h * h / (h0 * h1) * g[1] + (2.0 - h0 / h1) * g[2])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    /// `(t, r(t) / max E_A)` at every interior frame.
    pub residuals: Vec<(f64, f64)>,
    pub max_normalized: f64,
    pub e_max: f64,
}

/// Residual of the energy identity over each pair of consecutive steps,
/// `(½ΔE_A + ∫ D_visc + D_ghost + T - S - DE) / Δt`, normalized by `max E_A`.
pub fn budget_residual(frames: &[DiagnosticFrame]) -> Result<BudgetReport> {
    if frames.iter().any(|f| f.trace.is_none()) {
        return Err(Error::MissingTrace("every frame needs transport/source/dissipation-error terms"));
    }
    let e_max = frames.iter().map(|f| f.e_a).fold(0.0, f64::max);
    let g = |f: &DiagnosticFrame| {
        let tr = f.trace.unwrap_or_default();
        f.d_visc + f.d_ghost + tr.transport - tr.source - tr.dissipation_error
    };
    let mut residuals = Vec::new();
    for w in frames.windows(3) {
        let dt = w[2].t - w[0].t;
        let r = if dt > 0.0 {
            (0.5 * (w[2].e_a - w[0].e_a) + simpson3([w[0].t, w[1].t, w[2].t], [g(&w[0]), g(&w[1]), g(&w[2])])) / dt
        } else {
            0.0
        };
        let r = if e_max > 0.0 { r / e_max } else { 0.0 };
        residuals.push((w[1].t, r));
    }
    let max_normalized = residuals.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
    Ok(BudgetReport {
        residuals,
        max_normalized,
        e_max,
    })
}

/// Writes [`budget_residual`] into the frames (interior frames only); a
/// no-op when any trace is missing.
pub fn fill_budget_residuals(frames: &mut [DiagnosticFrame]) {
    if let Ok(rep) = budget_residual(frames) {
        for (f, (_, r)) in frames.iter_mut().skip(1).zip(rep.residuals) {
            f.budget_residual = r;
        }
    }
}

/// Largest normalized residual of the zero-mode kinetic energy balance
/// `d/dt ½‖u₀‖² + ν‖∂_v u₀‖² = ⟨u₀, ∂_v^{-1}(u·∇f)₀⟩` (Couette frame).
pub fn zero_mode_transfer_residual(frames: &[DiagnosticFrame]) -> Result<f64> {
    if frames.iter().any(|f| f.trace.is_none()) {
        return Err(Error::MissingTrace("zero-mode flux"));
    }
    let k_max = frames.iter().map(|f| 0.5 * f.u0_l2 * f.u0_l2).fold(0.0, f64::max);
    if k_max == 0.0 {
        return Ok(0.0);
    }
    let g = |f: &DiagnosticFrame| f.u0_diss - f.trace.unwrap_or_default().zero_flux;
    let mut worst: f64 = 0.0;
    for w in frames.windows(3) {
        let dt = w[2].t - w[0].t;
        if dt <= 0.0 {
            continue;
        }
        let dk = 0.5 * (w[2].u0_l2 * w[2].u0_l2 - w[0].u0_l2 * w[0].u0_l2);
        let r = (dk + simpson3([w[0].t, w[1].t, w[2].t], [g(&w[0]), g(&w[1]), g(&w[2])])) / dt;
        worst = worst.max(r.abs() / k_max);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    /// Every bootstrap functional stays below `4ε`.
    Strong,
    /// Below `8ε` but not `4ε`.
    Stable,
    Violated,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Strong => "strong",
            Classification::Stable => "stable",
            Classification::Violated => "violated",
        }
    }

    /// Strong or stable.
    pub fn is_stable(&self) -> bool {
        !matches!(self, Classification::Violated)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapReport {
    pub eps: f64,
    pub nu: f64,
    /// `sup_t ‖Af‖`
    pub sup_af: f64,
    /// `(∫ ν‖∇_L A f‖² dt)^{1/2}`
    pub visc_l2: f64,
    /// `(∫ D_ghost dt)^{1/2}`
    pub ghost_l2: f64,
    /// `sup_t ‖u₀^z‖`
    pub sup_u0: f64,
    /// `(∫ ν‖∂_v u₀^z‖² dt)^{1/2}`
    pub u0_diss_l2: f64,
    /// `sup‖Af‖ + visc_l2 + ghost_l2`
    pub energy_sum: f64,
    /// `sup‖u₀‖ + u0_diss_l2`
    pub velocity_sum: f64,
    /// `‖f_≠‖_{L²_t H^N}`
    pub nz_l2hn: f64,
    /// `nz_l2hn / (ε ν^{-1/6})`
    pub k_measured: f64,
    /// `C_e (ghost_l2 + visc_l2 / c) / (ε ν^{-1/6})`, the value `k_measured`
    /// cannot exceed by the pointwise multiplier bound.
    pub k_bound: f64,
    pub c_e: f64,
    pub classification: Classification,
    pub first_violation: Option<f64>,
}

/// Classifies a run against the bootstrap thresholds `8ε` and `4ε`.
pub fn check_bootstrap(frames: &[DiagnosticFrame], eps: f64, nu: f64) -> BootstrapReport {
    let mut sup_af: f64 = 0.0;
    let mut sup_u0: f64 = 0.0;
    let (mut visc, mut ghost, mut udiss, mut hn2) = (0.0, 0.0, 0.0, 0.0);
    let mut first_violation = None;
    let mut finite = true;
    let c_e = frames.iter().map(|f| f.c_e).fold(0.0, f64::max);
    for (i, f) in frames.iter().enumerate() {
        finite &= f.is_finite();
        if i > 0 {
            let p = &frames[i - 1];
            let h = 0.5 * (f.t - p.t);
            visc += h * (f.d_visc + p.d_visc);
            ghost += h * (f.d_ghost + p.d_ghost);
            udiss += h * (f.u0_diss + p.u0_diss);
            hn2 += h * (f.nz_hn * f.nz_hn + p.nz_hn * p.nz_hn);
        }
        sup_af = sup_af.max(sqrt(f.e_a));
        sup_u0 = sup_u0.max(f.u0_l2);
        let energy = sup_af + sqrt(visc) + sqrt(ghost);
        let velocity = sup_u0 + sqrt(udiss);
        let broken = !f.is_finite() || energy > 8.0 * eps || velocity > 8.0 * eps;
        if broken && first_violation.is_none() {
            first_violation = Some(f.t);
        }
    }
    let (visc_l2, ghost_l2, u0_diss_l2) = (sqrt(visc), sqrt(ghost), sqrt(udiss));
    let energy_sum = sup_af + visc_l2 + ghost_l2;
    let velocity_sum = sup_u0 + u0_diss_l2;
    let classification = if !finite || first_violation.is_some() {
        Classification::Violated
    } else if energy_sum <= 4.0 * eps && velocity_sum <= 4.0 * eps {
        Classification::Strong
    } else {
        Classification::Stable
    };
    let scale = if eps > 0.0 && nu > 0.0 {
        eps * powf(nu, -1.0 / 6.0)
    } else {
        0.0
    };
    let nz_l2hn = sqrt(hn2);
    let (k_measured, k_bound) = if scale > 0.0 {
        (
            nz_l2hn / scale,
            c_e * (ghost_l2 + visc_l2 / MULTIPLIER_FLOOR) / scale,
        )
    } else {
        (0.0, 0.0)
    };
    BootstrapReport {
        eps,
        nu,
        sup_af,
        visc_l2,
        ghost_l2,
        sup_u0,
        u0_diss_l2,
        energy_sum,
        velocity_sum,
        nz_l2hn,
        k_measured,
        k_bound,
        c_e,
        classification,
        first_violation,
    }
}

/// `max_t ‖∇ω(t)‖ / ‖∇ω(0)‖`; `None` for vanishing initial gradients.
pub fn transient_growth(frames: &[DiagnosticFrame]) -> Option<f64> {
    let g0 = frames.first()?.grad_l2;
    if g0 == 0.0 {
        return None;
    }
    Some(frames.iter().map(|f| f.grad_l2).fold(0.0, f64::max) / g0)
}
