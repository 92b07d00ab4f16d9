use alloc::vec::Vec;

use num_complex::Complex64;

use super::poisson::{solve_poisson_t, PoissonReport};
use super::{DtPolicy, Frame, RunState, Scheme, SolverConfig};
use crate::diagnostics::{DiagnosticFrame, FrameInputs};
pub use crate::diagnostics::TraceTerms;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::kelvin::viscous_increment;
use crate::math::exp;
use crate::multiplier::{MultiplierParams, MultiplierState};
use crate::ops::inv_laplace_l;
use crate::shear::{ShearProfile, ShearState};
use crate::transform::{to_physical, to_spectral, FftBackend};

/// Everything computed from one right-hand-side evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub t: f64,
    /// Explicit part `-u·∇f + b∂_zφ + ν(a² - 1)∂^L_vv f` (dealiased).
    pub rhs: SpectralField,
    pub phi: SpectralField,
    pub trace: Option<TraceTerms>,
    /// Largest advection speeds along `z` and `v` in frame variables.
    pub speed_z: f64,
    pub speed_v: f64,
    /// `‖∇ω‖²_{L²}` in original coordinates.
    pub grad_sqr: f64,
    pub poisson: PoissonReport,
}

/// Owns the FFT backend and the shear snapshot of one run.
pub struct Stepper<B: FftBackend> {
    config: SolverConfig,
    backend: B,
    profile: Option<ShearProfile>,
    shear: ShearState,
    since_refresh: usize,
    params: Option<MultiplierParams>,
    poisson_sweeps: usize,
    poisson_contraction: f64,
    spill_warned: bool,
}

impl<B: FftBackend> Stepper<B> {
    /// `profile` is only read in the general frame; `None` there means Couette.
    pub fn new(config: SolverConfig, backend: B, profile: Option<ShearProfile>) -> Result<Self> {
        config.validate()?;
        let grid = config.grid;
        if let Some(p) = &profile {
            if p.n_v() != grid.n_v() || p.l_v() != grid.l_v() {
                return Err(Error::GridMismatch);
            }
        }
        let profile = match config.frame {
            Frame::Couette => None,
            Frame::General => profile,
        };
        let shear = match &profile {
            Some(p) => ShearState::new(p, config.nu, 0.0, config.inversion)?,
            None => ShearState::couette(grid.n_v(), grid.l_v(), 0.0),
        };
        let params = MultiplierParams::new(config.nu, config.n).ok();
        Ok(Self {
            config,
            backend,
            profile,
            shear,
            since_refresh: 0,
            params,
            poisson_sweeps: 0,
            poisson_contraction: 0.0,
            spill_warned: false,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }
    pub fn shear(&self) -> &ShearState {
        &self.shear
    }
    pub fn backend_mut(&mut self) -> &mut B {
        &mut self.backend
    }
    /// Most sweeps and worst contraction seen in the `Δ_t` solves so far.
    pub fn poisson_stats(&self) -> (usize, f64) {
        (self.poisson_sweeps, self.poisson_contraction)
    }

    fn general(&self) -> bool {
        self.config.frame == Frame::General && !self.shear.is_trivial()
    }

    /// Rebuilds the shear snapshot at time `t`.
    pub fn refresh_shear(&mut self, t: f64) -> Result<()> {
        if let Some(p) = &self.profile {
            self.shear = ShearState::new(p, self.config.nu, t, self.config.inversion)?;
        }
        self.since_refresh = 0;
        Ok(())
    }

    fn finish(&self, mut f: SpectralField) -> SpectralField {
        if self.config.dealias {
            f.dealias_in_place();
        }
        f
    }

    /// Evaluates the explicit right-hand side at `(f, t)`; with a multiplier
    /// table it also records the energy-budget trace terms.
    pub fn evaluate(&mut self, f: &SpectralField, t: f64, mult: Option<&MultiplierState>) -> Result<Evaluation> {
        let grid = *f.grid();
        if grid != self.config.grid {
            return Err(Error::GridMismatch);
        }
        let general = self.general();
        let (phi, poisson) = if self.config.frame == Frame::General {
            let (phi, rep) = solve_poisson_t(&mut self.backend, f, &self.shear, t, self.config.elliptic_tol)?;
            self.poisson_sweeps = self.poisson_sweeps.max(rep.sweeps);
            self.poisson_contraction = self.poisson_contraction.max(rep.contraction);
            (phi, rep)
        } else {
            (inv_laplace_l(f, t), PoissonReport::default())
        };
        let transport_on = !self.config.linear_only;
        let nu = self.config.nu;
        let zero = || SpectralField::zeros(grid);

        let (mut transport, mut source, mut visc_err) = (zero(), zero(), zero());
        let (mut speed_z, mut speed_v) = (0.0f64, 0.0f64);
        let grad_sqr;
        if transport_on || general {
            let nv = grid.n_v();
            let dz = |g: &SpectralField| g.apply_symbol(|k, _| Complex64::new(0.0, k));
            let dv = |g: &SpectralField| g.apply_symbol(|k, eta| Complex64::new(0.0, eta - k * t));
            let phz = to_physical(&mut self.backend, &dz(&phi));
            let phv = to_physical(&mut self.backend, &dv(&phi));
            let fz = to_physical(&mut self.backend, &dz(f));
            let fv = to_physical(&mut self.backend, &dv(f));
            let a1 = self.shear.a_minus_one().to_vec();
            let b = self.shear.b().to_vec();
            let a_of = |idx: usize| 1.0 + a1[idx % nv];

            let mut g2 = 0.0;
            for idx in 0..grid.len() {
                let a = a_of(idx);
                g2 += (fz[idx] * fz[idx] + a * a * fv[idx] * fv[idx]) / a;
            }
            grad_sqr = g2 / grid.len() as f64;

            if transport_on {
                let mut vals = Vec::with_capacity(grid.len());
                for idx in 0..grid.len() {
                    let a = a_of(idx);
                    vals.push(a * (-phv[idx] * fz[idx] + phz[idx] * fv[idx]));
                    // u·∇_t f = (-a∂^L_vφ - t a∂_zφ) ∂_z f + a∂_zφ ∂_v f
                    speed_z = speed_z.max((a * (phv[idx] + t * phz[idx])).abs());
                    speed_v = speed_v.max((a * phz[idx]).abs());
                }
                let spec = to_spectral(&mut self.backend, &grid, &vals);
                transport = self.finish(spec);
            }
            if general {
                let vals: Vec<f64> = (0..grid.len()).map(|idx| b[idx % nv] * phz[idx]).collect();
                let spec = to_spectral(&mut self.backend, &grid, &vals);
                source = self.finish(spec);
                if nu > 0.0 {
                    let fvv = f.apply_real_symbol(|k, eta| {
                        let s = eta - k * t;
                        -s * s
                    });
                    let fvv = to_physical(&mut self.backend, &fvv);
                    let vals: Vec<f64> = (0..grid.len())
                        .map(|idx| {
                            let x = a1[idx % nv];
                            nu * x * (2.0 + x) * fvv[idx]
                        })
                        .collect();
                    let spec = to_spectral(&mut self.backend, &grid, &vals);
                visc_err = self.finish(spec);
                }
            }
        } else {
            grad_sqr = f.weighted_energy(|k, eta| k * k + (eta - k * t) * (eta - k * t));
        }

        let mut rhs = source.clone();
        rhs.axpy(-1.0, &transport)?;
        rhs.axpy(1.0, &visc_err)?;

        let trace = mult.map(|m| {
            let w = m.a_table();
            let pair = |x: &SpectralField| -> f64 {
                x.coeffs()
                    .iter()
                    .zip(f.coeffs())
                    .zip(w)
                    .map(|((a, b), w)| w * w * (a * b.conj()).re)
                    .sum()
            };
            // ⟨u₀, ∂_v^{-1} T₀⟩ with û₀ = i f̂₀/η on the k = 0 column
            let mut flux = 0.0;
            for iv in 1..grid.n_v() {
                let eta = grid.eta_at(iv);
                let u0 = Complex64::new(0.0, 1.0) * f.coeffs()[iv] / eta;
                let inv = transport.coeffs()[iv] / Complex64::new(0.0, eta);
                flux += (u0 * inv.conj()).re;
            }
            TraceTerms {
                transport: pair(&transport),
                source: pair(&source),
                dissipation_error: pair(&visc_err),
                zero_flux: flux,
            }
        });

        Ok(Evaluation {
            t,
            rhs,
            phi,
            trace,
            speed_z,
            speed_v,
            grad_sqr,
            poisson,
        })
    }

    /// Evaluates at the current state, appends a diagnostic frame, and
    /// returns the evaluation for reuse as the first RK stage.
    pub fn observe(&mut self, state: &mut RunState) -> Result<Evaluation> {
        let mult = self.params.map(|p| MultiplierState::new(self.config.grid, p, state.t));
        let eval = self.evaluate(&state.f, state.t, mult.as_ref())?;
        let shear = if self.general() { Some(&self.shear) } else { None };
        let frame = DiagnosticFrame::compute(
            &mut self.backend,
            FrameInputs {
                f: &state.f,
                phi: &eval.phi,
                t: state.t,
                nu: self.config.nu,
                n: self.config.n,
                multiplier: mult.as_ref(),
                shear,
                trace: eval.trace,
                grad_sqr: Some(eval.grad_sqr),
            },
        );
        state.phi = eval.phi.clone();
        state.frames.push(frame);
        Ok(eval)
    }

    /// Step size allowed by the configured policy at time `t`, clipped to
    /// land on `T_final`.
    pub fn choose_dt(&self, eval: &Evaluation, t: f64) -> f64 {
        let grid = &self.config.grid;
        let mut dt = match self.config.dt {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Cfl { dt_max, safety } => {
                let mut dt = dt_max;
                if eval.speed_z > 0.0 {
                    dt = dt.min(safety * grid.dz() / eval.speed_z);
                }
                if eval.speed_v > 0.0 {
                    dt = dt.min(safety * grid.dv() / eval.speed_v);
                }
                let m = self.shear.sup_a2_minus_one();
                if self.general() && self.config.nu > 0.0 && m > 0.0 {
                    let s = grid.eta_cut() + grid.k_cut() as f64 * t;
                    dt = dt.min(0.5 / (self.config.nu * m * s * s));
                }
                dt
            }
        };
        let remaining = self.config.t_final - t;
        if remaining <= dt * (1.0 + 1e-9) {
            dt = remaining;
        }
        dt
    }

    /// Advances `state` by `h` starting from the stage-one evaluation `first`.
    /// On error the state is left at its last good value.
    pub fn advance(&mut self, state: &mut RunState, first: &Evaluation, h: f64) -> Result<()> {
        let t = state.t;
        let grid = self.config.grid;
        let nu = self.config.nu;
        let len = grid.len();
        let mut e_half = Vec::with_capacity(len);
        let mut e_full = Vec::with_capacity(len);
        let mut e_rest = Vec::with_capacity(len);
        for idx in 0..len {
            let (k, eta) = grid.freq(idx);
            if nu == 0.0 {
                e_half.push(1.0);
                e_full.push(1.0);
                e_rest.push(1.0);
            } else {
                e_half.push(exp(-viscous_increment(k, eta, nu, t, t + 0.5 * h)));
                e_full.push(exp(-viscous_increment(k, eta, nu, t, t + h)));
                e_rest.push(exp(-viscous_increment(k, eta, nu, t + 0.5 * h, t + h)));
            }
        }
        let f = &state.f;
        let f1 = &first.rhs;
        let combine = |terms: &[(&[f64], &SpectralField, f64)]| -> SpectralField {
            let mut out = SpectralField::zeros(grid);
            for (w, x, c) in terms {
                for ((o, xi), wi) in out.coeffs_mut().iter_mut().zip(x.coeffs()).zip(w.iter()) {
                    *o += xi * (wi * c);
                }
            }
            out
        };
        let ones = alloc::vec![1.0; len];
        let next = match self.config.scheme {
            Scheme::Rk4 => {
                let f2 = combine(&[(&e_half, f, 1.0), (&e_half, f1, 0.5 * h)]);
                let k2 = self.evaluate(&f2, t + 0.5 * h, None)?.rhs;
                let f3 = combine(&[(&e_half, f, 1.0), (&ones, &k2, 0.5 * h)]);
                let k3 = self.evaluate(&f3, t + 0.5 * h, None)?.rhs;
                let f4 = combine(&[(&e_full, f, 1.0), (&e_rest, &k3, h)]);
                let k4 = self.evaluate(&f4, t + h, None)?.rhs;
                combine(&[
                    (&e_full, f, 1.0),
                    (&e_full, f1, h / 6.0),
                    (&e_rest, &k2, h / 3.0),
                    (&e_rest, &k3, h / 3.0),
                    (&ones, &k4, h / 6.0),
                ])
            }
            Scheme::Heun => {
                let f2 = combine(&[(&e_full, f, 1.0), (&e_full, f1, h)]);
                let k2 = self.evaluate(&f2, t + h, None)?.rhs;
                combine(&[(&e_full, f, 1.0), (&e_full, f1, 0.5 * h), (&ones, &k2, 0.5 * h)])
            }
        };
        if !next.is_finite() {
            return Err(Error::NonFinite { t: t + h });
        }
        state.f = next;
        state.t = t + h;
        state.steps += 1;
        self.since_refresh += 1;
        if self.config.frame == Frame::General && self.since_refresh >= self.config.shear_refresh {
            self.refresh_shear(state.t)?;
        }
        Ok(())
    }

    /// One step of size `h` without recording a frame.
    pub fn step(&mut self, state: &mut RunState, h: f64) -> Result<()> {
        let first = self.evaluate(&state.f, state.t, None)?;
        self.advance(state, &first, h)
    }

    /// Energy fraction of the dealiased band held in its outer 20%.
    pub fn spectral_tail(&self, f: &SpectralField) -> f64 {
        let grid = f.grid();
        let kc = 0.8 * grid.k_cut() as f64;
        let jc = 0.8 * grid.j_cut() as f64;
        let (mut outer, mut total) = (0.0, 0.0);
        for (idx, c) in f.coeffs().iter().enumerate() {
            if !grid.retained(idx) {
                continue;
            }
            let (iz, iv) = grid.split(idx);
            let e = c.norm_sqr();
            total += e;
            if (grid.k_at(iz).abs() as f64) > kc || (grid.j_at(iv).abs() as f64) > jc {
                outer += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    /// Mass fraction `∫_{|v| > 0.4 L_v} f² / ∫ f²`.
    pub fn spillover(&mut self, f: &SpectralField) -> f64 {
        let grid = *f.grid();
        let vals = to_physical(&mut self.backend, f);
        let nv = grid.n_v();
        let (mut outer, mut total) = (0.0, 0.0);
        for (idx, x) in vals.iter().enumerate() {
            let e = x * x;
            total += e;
            if grid.v_node(idx % nv).abs() > 0.4 * grid.l_v() {
                outer += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    /// Resolution and spillover checks after a step.
    pub fn check_monitors(&mut self, state: &mut RunState) -> Result<()> {
        let tail = self.spectral_tail(&state.f);
        if tail > self.config.tail_limit {
            return Err(Error::ResolutionExhausted { t: state.t, tail });
        }
        if state.steps % self.config.monitor_every as u64 == 0 {
            let spill = self.spillover(&state.f);
            if spill > self.config.spill_limit && self.general() {
                return Err(Error::Spillover { fraction: spill });
            }
            if spill > self.config.spill_warn && !self.spill_warned {
                self.spill_warned = true;
                state.warnings.push(alloc::format!(
                    "t = {:.4}: {spill:.3e} of the mass sits in |v| > 0.4 L_v",
                    state.t
                ));
            }
        }
        Ok(())
    }

    /// Runs to `T_final`, recording a frame at every step, then fills in the
    /// budget residuals.
    pub fn run(&mut self, state: &mut RunState) -> Result<()> {
        let t_final = self.config.t_final;
        loop {
            let eval = self.observe(state)?;
            if state.t >= t_final * (1.0 - 1e-12) {
                break;
            }
            let h = self.choose_dt(&eval, state.t);
            self.advance(state, &eval, h)?;
            self.check_monitors(state)?;
        }
        crate::diagnostics::fill_budget_residuals(&mut state.frames);
        Ok(())
    }
}
