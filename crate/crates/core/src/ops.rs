//! Moving-frame derivative operators as Fourier multipliers.
//!
//! In the Couette frame `z = x - t v`, the physical gradient becomes
//! `∇_L = (∂_z, ∂_v - t ∂_z)`, with symbol `(ik, i(η - kt))`.

use num_complex::Complex64;

use crate::field::SpectralField;
use crate::math::bracket_pow;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    GradLz,
    GradLv,
    LaplaceL,
    InvLaplaceL,
    /// `<D>^N` with the given `N`.
    SobolevN(f64),
}

/// An operator frozen at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorStamp {
    pub t: f64,
    pub kind: OperatorKind,
}

impl OperatorStamp {
    pub fn new(t: f64, kind: OperatorKind) -> Self {
        Self { t, kind }
    }

    pub fn symbol(&self, k: f64, eta: f64) -> Complex64 {
        let shifted = eta - k * self.t;
        match self.kind {
            OperatorKind::GradLz => Complex64::new(0.0, k),
            OperatorKind::GradLv => Complex64::new(0.0, shifted),
            OperatorKind::LaplaceL => Complex64::new(-(k * k + shifted * shifted), 0.0),
            OperatorKind::InvLaplaceL => Complex64::new(inv_laplace_symbol(k, eta, self.t), 0.0),
            OperatorKind::SobolevN(n) => Complex64::new(bracket_pow(k, eta, n), 0.0),
        }
    }

    pub fn apply(&self, f: &SpectralField) -> SpectralField {
        f.apply_symbol(|k, eta| self.symbol(k, eta))
    }
}

/// `1 / (-(k² + (η - kt)²))`, and 0 at the `(0, 0)` mode.
#[inline]
pub fn inv_laplace_symbol(k: f64, eta: f64, t: f64) -> f64 {
    let shifted = eta - k * t;
    let q = k * k + shifted * shifted;
    if q == 0.0 {
        0.0
    } else {
        -1.0 / q
    }
}

/// `(∂_z f, (∂_v - t∂_z) f)`.
pub fn grad_l(f: &SpectralField, t: f64) -> (SpectralField, SpectralField) {
    (
        OperatorStamp::new(t, OperatorKind::GradLz).apply(f),
        OperatorStamp::new(t, OperatorKind::GradLv).apply(f),
    )
}

pub fn laplace_l(f: &SpectralField, t: f64) -> SpectralField {
    OperatorStamp::new(t, OperatorKind::LaplaceL).apply(f)
}

/// `Δ_L^{-1} f` in the zero-mean gauge.
pub fn inv_laplace_l(f: &SpectralField, t: f64) -> SpectralField {
    f.apply_real_symbol(|k, eta| inv_laplace_symbol(k, eta, t))
}

/// `(∂_v - t∂_z)² f`.
pub fn dvv_l(f: &SpectralField, t: f64) -> SpectralField {
    f.apply_real_symbol(|k, eta| {
        let s = eta - k * t;
        -s * s
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;
    use proptest::prelude::*;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::new(16, 24, 32.0).unwrap()
    }

    fn delta(k: i64, j: i64) -> SpectralField {
        let mut f = SpectralField::zeros(grid());
        f.set(k, j, Complex64::new(1.0, 0.0)).unwrap();
        f
    }

    #[test]
    fn gradient_examples() {
        let (gz, gv) = grad_l(&delta(1, 0), 0.0);
        assert_eq!(gz.get(1, 0).unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(gv.get(1, 0).unwrap(), Complex64::new(0.0, 0.0));

        let (_, gv) = grad_l(&delta(1, 0), 2.0);
        assert_eq!(gv.get(1, 0).unwrap(), Complex64::new(0.0, -2.0));

        let eta = 3.0 * grid().eta_step();
        let (gz, gv) = grad_l(&delta(0, 3), 7.5);
        assert_eq!(gz.max_abs(), 0.0);
        assert!((gv.get(0, 3).unwrap() - Complex64::new(0.0, eta)).norm() < 1e-15);
    }

    #[test]
    fn inverse_laplacian_examples() {
        let f = inv_laplace_l(&delta(1, 0), 0.0);
        assert_eq!(f.get(1, 0).unwrap(), Complex64::new(-1.0, 0.0));
        assert_eq!(inv_laplace_l(&delta(0, 0), 3.0).max_abs(), 0.0);
        // critical time t = η/k: divisor collapses to k²
        let step = grid().eta_step();
        let j = 5;
        let t = j as f64 * step;
        let f = inv_laplace_l(&delta(1, j), t);
        assert!((f.get(1, j).unwrap().re + 1.0).abs() < 1e-14);
    }

    fn arb_field() -> impl Strategy<Value = SpectralField> {
        let g = grid();
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), g.len()).prop_map(move |v| {
            let coeffs = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            let mut f = SpectralField::from_coeffs(g, coeffs).unwrap();
            f.symmetrize();
            f.dealias_in_place();
            f
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn laplacian_is_divergence_of_gradient(f in arb_field(), t in 0.0f64..20.0) {
            let (gz, gv) = grad_l(&f, t);
            let (gzz, _) = grad_l(&gz, t);
            let (_, gvv) = grad_l(&gv, t);
            let lap = laplace_l(&f, t);
            for idx in 0..f.coeffs().len() {
                let combo = gzz.coeffs()[idx] + gvv.coeffs()[idx];
                let scale = 1.0 + lap.coeffs()[idx].norm();
                prop_assert!((combo - lap.coeffs()[idx]).norm() <= 1e-13 * scale);
            }
        }

        #[test]
        fn inverse_undoes_laplacian(f in arb_field(), t in 0.0f64..20.0) {
            let mut f = f;
            f.set(0, 0, Complex64::new(0.0, 0.0)).unwrap();
            let back = inv_laplace_l(&laplace_l(&f, t), t);
            for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
                prop_assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
            }
        }

        #[test]
        fn operators_keep_real_fields_real(f in arb_field(), t in 0.0f64..20.0) {
            let (gz, gv) = grad_l(&f, t);
            prop_assert!(gz.hermitian_defect() < 1e-12);
            prop_assert!(gv.hermitian_defect() < 1e-12);
            prop_assert!(laplace_l(&f, t).hermitian_defect() < 1e-10);
            prop_assert!(inv_laplace_l(&f, t).hermitian_defect() < 1e-12);
            prop_assert!(OperatorStamp::new(t, OperatorKind::SobolevN(2.5)).apply(&f).hermitian_defect() < 1e-9);
        }
    }
}
