//! Scalar numerics that the rest of the crate leans on: `libm` wrappers,
//! adaptive quadrature, a scalar Dormand–Prince integrator, bracketing root
//! search, and straight-line least squares.

use alloc::vec::Vec;

pub use core::f64::consts::PI;

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn atan(x: f64) -> f64 {
    libm::atan(x)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[inline]
pub fn cbrt(x: f64) -> f64 {
    libm::cbrt(x)
}
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// `<x> = sqrt(1 + x^2)`.
#[inline]
pub fn japanese(x: f64) -> f64 {
    sqrt(1.0 + x * x)
}

/// `(1 + k^2 + eta^2)^(n/2)`, the `<D>^n` symbol.
#[inline]
pub fn bracket_pow(k: f64, eta: f64, n: f64) -> f64 {
    let base = 1.0 + k * k + eta * eta;
    if n == 2.0 {
        base
    } else {
        powf(base, 0.5 * n)
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// Subdivides until the Kronrod/Gauss discrepancy on every panel is below
/// `rel_tol * |total| + 1e-300`, or the recursion depth reaches 50.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (whole, _) = gk15(&f, a, b);
    let mut stack: Vec<(f64, f64, usize)> = alloc::vec![(a, b, 0)];
    let mut total = 0.0;
    let scale = whole.abs().max(1e-300);
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(&f, lo, hi);
        let share = (hi - lo).abs() / (b - a).abs();
        if err <= rel_tol * scale * share.max(1e-3) || depth >= 50 {
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}

/// Five-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const X: [f64; 3] = [0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
    const W: [f64; 3] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = W[0] * f(c);
    for j in 1..3 {
        s += W[j] * (f(c - h * X[j]) + f(c + h * X[j]));
    }
    s * h
}

/// Integrates the scalar ODE `y' = rhs(t, y)` from `t0` to `t1` with the
/// Dormand–Prince 5(4) pair and standard step-size control.
pub fn integrate_ode<F: Fn(f64, f64) -> f64>(
    rhs: F,
    t0: f64,
    y0: f64,
    t1: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let span = t1 - t0;
    if span == 0.0 {
        return y0;
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = dir * (span.abs() / 100.0).min(0.1);
    let mut stages = [0.0f64; 7];
    while (t1 - t) * dir > 0.0 {
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        for s in 0..7 {
            let mut ys = y;
            for j in 0..s {
                ys += h * A[s][j] * stages[j];
            }
            stages[s] = rhs(t + C[s] * h, ys);
        }
        let mut y5 = y;
        let mut y4 = y;
        for s in 0..7 {
            y5 += h * B5[s] * stages[s];
            y4 += h * B4[s] * stages[s];
        }
        let scale = abs_tol + rel_tol * y.abs().max(y5.abs());
        let err = (y5 - y4).abs() / scale;
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * powf(err, -0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    y
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo) < tol {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Straight-line fit `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub rms_residual: f64,
}

/// Ordinary least squares on paired samples. `None` for fewer than two
/// points or a degenerate abscissa.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss = (0..n)
        .map(|i| {
            let r = ys[i] - (slope * xs[i] + intercept);
            r * r
        })
        .sum::<f64>();
    Some(LineFit {
        slope,
        intercept,
        rms_residual: sqrt(ss / nf),
    })
}

/// `n` points spaced geometrically from `lo` to `hi` inclusive.
pub fn geometric_ladder(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return alloc::vec![hi];
    }
    let r = ln(hi / lo) / (n - 1) as f64;
    (0..n).map(|i| lo * exp(r * i as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_polynomial_and_peaked() {
        let v = integrate(|x| x * x, 0.0, 3.0, 1e-13);
        assert!((v - 9.0).abs() < 1e-12);
        // arctan antiderivative of a narrow Lorentzian
        let v = integrate(|s| 1.0 / (1.0 + 400.0 * (s - 3.0) * (s - 3.0)), 0.0, 10.0, 1e-13);
        let exact = (atan(20.0 * 7.0) + atan(20.0 * 3.0)) / 20.0;
        assert!((v - exact).abs() / exact < 1e-11, "{v} vs {exact}");
    }

    #[test]
    fn ode_exponential() {
        let y = integrate_ode(|_, y| -2.0 * y, 0.0, 1.0, 3.0, 1e-12, 1e-16);
        assert!((y - exp(-6.0)).abs() / exp(-6.0) < 1e-9);
    }

    #[test]
    fn bisect_cubic() {
        let r = bisect(|t| t + t * t * t / 3.0 - 1e4, 0.0, 100.0, 1e-12).unwrap();
        assert!((r + r * r * r / 3.0 - 1e4).abs() < 1e-6);
        assert!(bisect(|t| t * t + 1.0, -1.0, 1.0, 1e-9).is_none());
    }

    #[test]
    fn line_fit_exact() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| -2.0 * x + 1.0).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-14);
        assert!(f.rms_residual < 1e-14);
    }
}
