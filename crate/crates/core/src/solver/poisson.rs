use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::math::sqrt;
use crate::ops::{inv_laplace_l, laplace_l};
use crate::shear::ShearState;
use crate::transform::{to_physical, to_spectral, FftBackend};

/// Sweep budget of [`solve_poisson_t`].
pub const MAX_SWEEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoissonReport {
    pub sweeps: usize,
    /// `‖Δ_t φ - f‖ / ‖f‖` at exit, over all modes except `(0, 0)`.
    pub residual: f64,
    /// Largest ratio of successive residuals (0 when one sweep sufficed).
    pub contraction: f64,
}

/// `((a² - 1) ∂^L_vv + b ∂^L_v) φ`, dealiased.
fn perturbation(backend: &mut dyn FftBackend, phi: &SpectralField, shear: &ShearState, t: f64) -> SpectralField {
    let grid = *phi.grid();
    let nv = grid.n_v();
    let dv = phi.apply_symbol(|k, eta| Complex64::new(0.0, eta - k * t));
    let dvv = phi.apply_real_symbol(|k, eta| {
        let s = eta - k * t;
        -s * s
    });
    let dv = to_physical(backend, &dv);
    let dvv = to_physical(backend, &dvv);
    let a1 = shear.a_minus_one();
    let b = shear.b();
    let values: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let iv = idx % nv;
            let a2m1 = a1[iv] * (2.0 + a1[iv]);
            a2m1 * dvv[idx] + b[iv] * dv[idx]
        })
        .collect();
    to_spectral(backend, &grid, &values).dealias()
}

/// `Δ_t φ = Δ_L φ + ((a² - 1) ∂^L_vv + b ∂^L_v) φ`.
pub fn apply_delta_t(backend: &mut dyn FftBackend, phi: &SpectralField, shear: &ShearState, t: f64) -> SpectralField {
    let mut out = laplace_l(phi, t);
    if !shear.is_trivial() {
        out.axpy(1.0, &perturbation(backend, phi, shear, t)).expect("same grid");
    }
    out
}

fn residual_norm(r: &SpectralField) -> f64 {
    sqrt(r.coeffs().iter().skip(1).map(|c| c.norm_sqr()).sum::<f64>())
}

/// Solves `Δ_t φ = f` by the preconditioned fixed point
/// `φ ← Δ_L^{-1}(f - ((a² - 1) ∂^L_vv + b ∂^L_v) φ)`, in the zero-mean gauge.
pub fn solve_poisson_t(
    backend: &mut dyn FftBackend,
    f: &SpectralField,
    shear: &ShearState,
    t: f64,
    tol: f64,
) -> Result<(SpectralField, PoissonReport)> {
    if shear.n_v() != f.grid().n_v() || shear.l_v() != f.grid().l_v() {
        return Err(Error::GridMismatch);
    }
    let mut phi = inv_laplace_l(f, t);
    if shear.is_trivial() {
        return Ok((
            phi,
            PoissonReport {
                sweeps: 1,
                residual: 0.0,
                contraction: 0.0,
            },
        ));
    }
    let f_norm = residual_norm(f);
    if f_norm == 0.0 {
        return Ok((phi, PoissonReport::default()));
    }
    let mut sweeps = 1;
    let mut prev = f64::NAN;
    let mut contraction: f64 = 0.0;
    loop {
        let p = perturbation(backend, &phi, shear, t);
        let mut r = laplace_l(&phi, t);
        r.axpy(1.0, &p)?;
        r.axpy(-1.0, f)?;
        let res = residual_norm(&r) / f_norm;
        if prev.is_finite() && prev > 0.0 {
            contraction = contraction.max(res / prev);
        }
        if res <= tol {
            return Ok((
                phi,
                PoissonReport {
                    sweeps,
                    residual: res,
                    contraction,
                },
            ));
        }
        if sweeps >= MAX_SWEEPS || !res.is_finite() {
            return Err(Error::EllipticDivergence { sweeps, residual: res });
        }
        prev = res;
        let mut rhs = f.clone();
        rhs.axpy(-1.0, &p)?;
        phi = inv_laplace_l(&rhs, t);
        sweeps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;
    use crate::math::{cos, exp, sin};
    use crate::shear::{InversionOptions, ShearPreset};
    use crate::transform::DirectDft;

    fn setup(delta: f64, nv: usize) -> (FrequencyGrid, ShearState, DirectDft) {
        let grid = FrequencyGrid::new(12, nv, 32.0).unwrap();
        let mut dft = DirectDft::new();
        let p = ShearPreset::GaussBump {
            amplitude: 1.0,
            width: 1.5,
            target_delta: Some(delta),
        }
        .build(&mut dft, nv, 32.0, 4.0)
        .unwrap();
        let s = ShearState::new(&p, 0.01, 0.5, InversionOptions::default()).unwrap();
        (grid, s, dft)
    }

    #[test]
    fn trivial_shear_is_one_sweep() {
        let grid = FrequencyGrid::new(8, 16, 32.0).unwrap();
        let mut dft = DirectDft::new();
        let f = SpectralField::from_fn(grid, |k, eta| Complex64::new(exp(-k * k - eta * eta), 0.0));
        let s = ShearState::couette(16, 32.0, 0.0);
        let (phi, rep) = solve_poisson_t(&mut dft, &f, &s, 1.5, 1e-10).unwrap();
        assert_eq!(rep.sweeps, 1);
        assert_eq!(phi, inv_laplace_l(&f, 1.5));
        assert_eq!(phi.get(0, 0).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn manufactured_solution() {
        let (grid, shear, mut dft) = setup(0.01, 128);
        let t = 0.7;
        let tol = 1e-10;
        // φ* = (sin z + 0.3 cos 2z + 0.2) e^{-v²/4}; f = Δ_t φ* in closed form
        let g = |v: f64| exp(-v * v / 4.0);
        let gp = |v: f64| -0.5 * v * exp(-v * v / 4.0);
        let gpp = |v: f64| (0.25 * v * v - 0.5) * exp(-v * v / 4.0);
        let heated = shear.heated();
        let mut values = Vec::with_capacity(grid.len());
        let mut exact = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let (iz, iv) = grid.split(idx);
            let (z, v) = (grid.z_node(iz), grid.v_node(iv));
            let y = v + shear.beta()[iv];
            let a = 1.0 + heated.g(y, 1);
            let b = heated.g(y, 2);
            let (s1, c1, s2, c2) = (sin(z), cos(z), sin(2.0 * z), cos(2.0 * z));
            let h = s1 + 0.3 * c2 + 0.2;
            let hz = c1 - 0.6 * s2;
            let hzz = -s1 - 1.2 * c2;
            let phi = h * g(v);
            exact.push(phi);
            // ∂^L_v = ∂_v - t∂_z
            let dv = h * gp(v) - t * hz * g(v);
            let dvv = h * gpp(v) - 2.0 * t * hz * gp(v) + t * t * hzz * g(v);
            let dzz = hzz * g(v);
            values.push(dzz + a * a * dvv + b * dv);
        }
        let f = to_spectral(&mut dft, &grid, &values);
        let (phi, rep) = solve_poisson_t(&mut dft, &f, &shear, t, tol).unwrap();
        assert!(rep.residual <= tol);
        assert!(rep.contraction <= 0.2, "{rep:?}");
        let mut star = to_spectral(&mut dft, &grid, &exact);
        star.set(0, 0, Complex64::new(0.0, 0.0)).unwrap();
        let mut err = phi.clone();
        err.axpy(-1.0, &star).unwrap();
        assert!(err.l2_norm() <= 10.0 * tol * star.l2_norm(), "{} vs {}", err.l2_norm(), star.l2_norm());
    }

    #[test]
    fn contraction_scales_with_delta() {
        let mut ratios = Vec::new();
        for &d in &[0.04, 0.01] {
            let (grid, shear, mut dft) = setup(d, 64);
            let f = SpectralField::from_fn(grid, |k, eta| {
                if k.abs() <= 2.0 && eta.abs() < 4.0 {
                    Complex64::new(exp(-eta * eta), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let (_, rep) = solve_poisson_t(&mut dft, &f, &shear, 0.3, 1e-12).unwrap();
            ratios.push(rep.contraction / d);
        }
        // K = contraction / δ stays bounded as δ shrinks
        assert!(ratios.iter().all(|k| *k < 20.0), "{ratios:?}");
    }
}
