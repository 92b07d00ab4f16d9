//! Background shear `U(y) = y + g(y)`, its heat evolution, the coordinate
//! change `v = Ū(t, y)`, and the coefficients `a`, `b` seen in the moving
//! frame.
//!
//! Profiles live on the v-box `[-L_v/2, L_v/2)` and are stored as line
//! coefficients `ĝ_m` with `g(y) = Σ ĝ_m e^{i η_m y}`. One-dimensional Sobolev
//! norms use Lebesgue measure on the box:
//!
//! ```text
//! ‖g‖²_{H^s} = L_v Σ (1 + η²)^s |ĝ|².
//! ```

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math::{cos, exp, gauss_legendre5, geometric_ladder, powf, sin, sqrt, tanh, PI};
use crate::transform::{line_to_physical, line_to_spectral, FftBackend};

/// Default cap on the measured `δ`.
pub const DEFAULT_DELTA_MAX: f64 = 0.05;

/// Largest relative `|g|` allowed in the outer 10% of the box.
pub const PROFILE_TAIL_LIMIT: f64 = 1e-6;

/// Integer label of slot `m` of a length-`n` line in FFT order.
#[inline]
fn label(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// `‖g‖_{H^s}` of a line with Lebesgue measure on a box of length `l_v`.
pub fn line_sobolev_norm(coeffs: &[Complex64], l_v: f64, s: f64) -> f64 {
    let n = coeffs.len();
    let step = 2.0 * PI / l_v;
    let sum: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let eta = label(m, n) as f64 * step;
            powf(1.0 + eta * eta, s) * c.norm_sqr()
        })
        .sum();
    sqrt(l_v * sum)
}

/// Coefficients of the `order`-th derivative of a line.
pub fn line_derivative(coeffs: &[Complex64], l_v: f64, order: u32) -> Vec<Complex64> {
    let n = coeffs.len();
    let step = 2.0 * PI / l_v;
    coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let j = label(m, n);
            if order % 2 == 1 && m == n / 2 {
                // odd derivatives of the Nyquist cosine vanish on the grid
                return Complex64::new(0.0, 0.0);
            }
            c * Complex64::new(0.0, j as f64 * step).powu(order)
        })
        .collect()
}

/// Evaluates the `order`-th derivative of a real line at an arbitrary point by
/// direct trigonometric summation. Exact for band-limited data; assumes
/// Hermitian coefficients.
pub fn eval_line(coeffs: &[Complex64], l_v: f64, x: f64, order: u32) -> f64 {
    let n = coeffs.len();
    let step = 2.0 * PI / l_v;
    let w = Complex64::new(cos(step * x), sin(step * x));
    let mut p = Complex64::new(1.0, 0.0);
    let mut acc = if order == 0 { coeffs[0].re } else { 0.0 };
    for (j, c) in coeffs.iter().enumerate().take(n / 2).skip(1) {
        p *= w;
        let d = Complex64::new(0.0, j as f64 * step).powu(order);
        acc += 2.0 * (c * d * p).re;
    }
    if n % 2 == 0 && n >= 2 {
        let eta = (n / 2) as f64 * step;
        let c = coeffs[n / 2].re;
        acc += c * match order % 4 {
            0 => powf(eta, order as f64) * cos(eta * x),
            1 => -powf(eta, order as f64) * sin(eta * x),
            2 => -powf(eta, order as f64) * cos(eta * x),
            _ => powf(eta, order as f64) * sin(eta * x),
        };
    }
    acc
}

/// v-coordinate of node `j` of a length-`n` line on a box of length `l_v`.
#[inline]
pub fn line_node(j: usize, n: usize, l_v: f64) -> f64 {
    label(j, n) as f64 * l_v / n as f64
}

/// Named shear presets.
#[derive(Debug, Clone, PartialEq)]
pub enum ShearPreset {
    /// `U(y) = y`.
    Couette,
    /// `g(y) = A exp(-y² / (2 w²))`.
    GaussBump {
        amplitude: f64,
        width: f64,
        /// Rescales the amplitude so the measured `δ` equals this value.
        target_delta: Option<f64>,
    },
    /// `g(y) = A tanh(y/w) exp(-y²/w²)`: a localized odd defect.
    TanhDefect {
        amplitude: f64,
        width: f64,
        target_delta: Option<f64>,
    },
    /// Sampled `(v, g)` pairs, linearly interpolated onto the grid; zero
    /// outside the sampled range.
    Table(Vec<(f64, f64)>),
}

impl ShearPreset {
    pub fn name(&self) -> &'static str {
        match self {
            ShearPreset::Couette => "couette",
            ShearPreset::GaussBump { .. } => "gauss_bump",
            ShearPreset::TanhDefect { .. } => "tanh_defect",
            ShearPreset::Table(_) => "table",
        }
    }

    /// Builds the profile on `n_v` nodes of a box of length `l_v`.
    pub fn build(&self, backend: &mut dyn FftBackend, n_v: usize, l_v: f64, s: f64) -> Result<ShearProfile> {
        let nodes: Vec<f64> = (0..n_v).map(|j| line_node(j, n_v, l_v)).collect();
        let (samples, target) = match self {
            ShearPreset::Couette => (vec![0.0; n_v], None),
            ShearPreset::GaussBump {
                amplitude,
                width,
                target_delta,
            } => {
                check_width(*width)?;
                let w2 = 2.0 * width * width;
                (nodes.iter().map(|y| amplitude * exp(-y * y / w2)).collect(), *target_delta)
            }
            ShearPreset::TanhDefect {
                amplitude,
                width,
                target_delta,
            } => {
                check_width(*width)?;
                (
                    nodes
                        .iter()
                        .map(|y| amplitude * tanh(y / width) * exp(-(y / width) * (y / width)))
                        .collect(),
                    *target_delta,
                )
            }
            ShearPreset::Table(points) => (interpolate_table(points, &nodes)?, None),
        };
        let profile = ShearProfile::from_samples(backend, l_v, &samples, s)?;
        match target {
            Some(d) => profile.with_delta(d),
            None => Ok(profile),
        }
    }
}

fn check_width(w: f64) -> Result<()> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!("shear width must be positive, got {w}")))
    }
}

fn interpolate_table(points: &[(f64, f64)], nodes: &[f64]) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: points.len(),
        });
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidParameter("table abscissae must increase strictly".into()));
    }
    Ok(nodes
        .iter()
        .map(|&x| {
            let first = points[0];
            let last = points[points.len() - 1];
            if x < first.0 || x > last.0 {
                return 0.0;
            }
            let i = points.partition_point(|p| p.0 <= x).clamp(1, points.len() - 1);
            let (x0, y0) = points[i - 1];
            let (x1, y1) = points[i];
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        })
        .collect())
}

/// A shear perturbation `g = U - y` sampled spectrally on the v-box.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearProfile {
    l_v: f64,
    s: f64,
    coeffs: Vec<Complex64>,
}

impl ShearProfile {
    pub fn couette(n_v: usize, l_v: f64, s: f64) -> Self {
        Self {
            l_v,
            s,
            coeffs: vec![Complex64::new(0.0, 0.0); n_v],
        }
    }

    pub fn from_samples(backend: &mut dyn FftBackend, l_v: f64, samples: &[f64], s: f64) -> Result<Self> {
        if samples.len() < 8 || samples.len() % 2 == 1 {
            return Err(Error::InvalidGrid(alloc::format!(
                "shear profile needs an even sample count >= 8, got {}",
                samples.len()
            )));
        }
        if !(l_v > 0.0) || !(s >= 0.0) {
            return Err(Error::InvalidParameter("need L_v > 0 and s >= 0".into()));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("shear samples must be finite".into()));
        }
        Ok(Self {
            l_v,
            s,
            coeffs: line_to_spectral(backend, samples),
        })
    }

    pub fn from_coeffs(l_v: f64, coeffs: Vec<Complex64>, s: f64) -> Self {
        Self { l_v, s, coeffs }
    }

    #[inline]
    pub fn l_v(&self) -> f64 {
        self.l_v
    }
    #[inline]
    pub fn n_v(&self) -> usize {
        self.coeffs.len()
    }
    #[inline]
    pub fn regularity(&self) -> f64 {
        self.s
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Measured `δ = ‖U' - 1‖_{H^s} + ‖U''‖_{H^s}`.
    pub fn delta(&self) -> f64 {
        let d1 = line_derivative(&self.coeffs, self.l_v, 1);
        let d2 = line_derivative(&self.coeffs, self.l_v, 2);
        line_sobolev_norm(&d1, self.l_v, self.s) + line_sobolev_norm(&d2, self.l_v, self.s)
    }

    pub fn is_couette(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    /// Rescales `g` so that the measured `δ` equals `target`.
    pub fn with_delta(mut self, target: f64) -> Result<Self> {
        if !(target >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("target delta must be >= 0, got {target}")));
        }
        let d = self.delta();
        if d == 0.0 {
            if target == 0.0 {
                return Ok(self);
            }
            return Err(Error::InvalidParameter("cannot rescale a flat profile to nonzero delta".into()));
        }
        let c = target / d;
        for x in &mut self.coeffs {
            *x *= c;
        }
        Ok(self)
    }

    /// Physical samples of `g` on the v-grid.
    pub fn samples(&self, backend: &mut dyn FftBackend) -> Vec<f64> {
        line_to_physical(backend, &self.coeffs)
    }

    /// Largest `|g|` in the outer 10% of the box (the nodes with
    /// `|v| ≥ 0.4 L_v`), relative to `sup |g|`; 0 for a flat profile.
    pub fn outer_mass(&self, backend: &mut dyn FftBackend) -> f64 {
        let g = self.samples(backend);
        let n = g.len();
        let sup = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if sup == 0.0 {
            return 0.0;
        }
        (0..n)
            .filter(|&j| line_node(j, n, self.l_v).abs() >= 0.4 * self.l_v)
            .map(|j| g[j].abs())
            .fold(0.0, f64::max)
            / sup
    }

    /// Checks the profile invariants: `δ ≤ δ_max` and a relative tail of at
    /// most [`PROFILE_TAIL_LIMIT`].
    pub fn validate(&self, backend: &mut dyn FftBackend, delta_max: f64) -> Result<()> {
        let d = self.delta();
        if d > delta_max {
            return Err(Error::InvalidParameter(alloc::format!(
                "shear delta {d:.3e} exceeds delta_max {delta_max:.3e}"
            )));
        }
        let tail = self.outer_mass(backend);
        if tail > PROFILE_TAIL_LIMIT {
            return Err(Error::InvalidParameter(alloc::format!(
                "shear profile does not decay in the outer 10% of the box (|g| there reaches {tail:.3e} of sup |g|)"
            )));
        }
        Ok(())
    }
}

/// The heat-evolved perturbation `e^{νt∂yy} g`, on the y side only.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatedShear {
    t: f64,
    nu: f64,
    l_v: f64,
    s: f64,
    coeffs: Vec<Complex64>,
}

/// `Ū(t) = y + e^{νt∂yy} g`.
pub fn evolve_shear(profile: &ShearProfile, nu: f64, t: f64) -> Result<HeatedShear> {
    if !(t >= 0.0) || !(nu >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("need t >= 0 and nu >= 0, got t={t}, nu={nu}")));
    }
    let n = profile.coeffs.len();
    let step = 2.0 * PI / profile.l_v;
    let coeffs = profile
        .coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let eta = label(m, n) as f64 * step;
            c * exp(-nu * eta * eta * t)
        })
        .collect();
    Ok(HeatedShear {
        t,
        nu,
        l_v: profile.l_v,
        s: profile.s,
        coeffs,
    })
}

impl HeatedShear {
    #[inline]
    pub fn t(&self) -> f64 {
        self.t
    }
    #[inline]
    pub fn nu(&self) -> f64 {
        self.nu
    }
    #[inline]
    pub fn l_v(&self) -> f64 {
        self.l_v
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `Ū(t, y) - y` and its derivatives at an arbitrary `y`.
    pub fn g(&self, y: f64, order: u32) -> f64 {
        eval_line(&self.coeffs, self.l_v, y, order)
    }

    /// `Ū(t, y)`.
    pub fn u(&self, y: f64) -> f64 {
        y + self.g(y, 0)
    }

    /// `‖Ū' - 1‖_{H^σ}`.
    pub fn first_derivative_norm(&self, sigma: f64) -> f64 {
        line_sobolev_norm(&line_derivative(&self.coeffs, self.l_v, 1), self.l_v, sigma)
    }

    /// `‖Ū''‖_{H^σ}`.
    pub fn second_derivative_norm(&self, sigma: f64) -> f64 {
        line_sobolev_norm(&line_derivative(&self.coeffs, self.l_v, 2), self.l_v, sigma)
    }

    /// `sup |Ū' - 1|` over the grid nodes and midpoints.
    pub fn sup_first_derivative(&self) -> f64 {
        let n = self.coeffs.len();
        let h = self.l_v / n as f64;
        (0..2 * n)
            .map(|i| self.g(-0.5 * self.l_v + 0.5 * h * i as f64, 1).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_flat(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InversionMethod {
    /// `β ← α(v + β)`.
    #[default]
    Picard,
    /// Pointwise Newton on `β - α(v + β) = 0`.
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    pub method: InversionMethod,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            method: InversionMethod::Picard,
            tol: 1e-12,
            max_iter: 100,
        }
    }
}

/// `y(v) = v + β(v)` on the v-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseMap {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub last_update: f64,
    /// `sup |β - α(v + β)|` at exit.
    pub residual: f64,
    pub converged: bool,
    /// `sup |α'|`, the contraction constant bound.
    pub sup_alpha_prime: f64,
}

/// Solves `β(v) = α(v + β(v))` with `α = -(Ū - y)` at the grid nodes.
pub fn invert_map(shear: &HeatedShear, opts: InversionOptions) -> Result<InverseMap> {
    let alpha = |y: f64| -shear.g(y, 0);
    invert_with(alpha, |y| -shear.g(y, 1), shear.coeffs.len(), shear.l_v, shear.sup_first_derivative(), opts)
}

/// Fixed-point core of [`invert_map`] for an arbitrary `α`.
pub fn invert_with<A: Fn(f64) -> f64, D: Fn(f64) -> f64>(
    alpha: A,
    alpha_prime: D,
    n_v: usize,
    l_v: f64,
    sup_alpha_prime: f64,
    opts: InversionOptions,
) -> Result<InverseMap> {
    if sup_alpha_prime >= 0.5 {
        return Err(Error::NonContraction {
            sup_derivative: sup_alpha_prime,
        });
    }
    let nodes: Vec<f64> = (0..n_v).map(|j| line_node(j, n_v, l_v)).collect();
    let mut beta = vec![0.0; n_v];
    let mut iterations = 0;
    let mut last_update = f64::INFINITY;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut update: f64 = 0.0;
        for (b, &v) in beta.iter_mut().zip(&nodes) {
            let next = match opts.method {
                InversionMethod::Picard => alpha(v + *b),
                InversionMethod::Newton => {
                    let r = *b - alpha(v + *b);
                    *b - r / (1.0 - alpha_prime(v + *b))
                }
            };
            update = update.max((next - *b).abs());
            *b = next;
        }
        last_update = update;
        if update < opts.tol {
            break;
        }
    }
    let residual = beta
        .iter()
        .zip(&nodes)
        .map(|(b, &v)| (b - alpha(v + b)).abs())
        .fold(0.0, f64::max);
    Ok(InverseMap {
        beta,
        iterations,
        last_update,
        residual,
        converged: last_update < opts.tol,
        sup_alpha_prime,
    })
}

/// `(a - 1, b)` on the v-grid: `a(v) = Ū'(y(v))`, `b(v) = Ū''(y(v))`.
pub fn coefficients(shear: &HeatedShear, map: &InverseMap) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = map.beta.len();
    // the edge nodes may step past ±L_v/2 by about the tail allowance
    let half = 0.5 * shear.l_v + PROFILE_TAIL_LIMIT * shear.l_v;
    let mut a1 = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for (j, beta) in map.beta.iter().enumerate() {
        let y = line_node(j, n, shear.l_v) + beta;
        if !(y.abs() <= half) {
            return Err(Error::OutsideBox { point: y });
        }
        a1.push(shear.g(y, 1));
        b.push(shear.g(y, 2));
    }
    Ok((a1, b))
}

/// Snapshot of the background at one time, as seen from the moving frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearState {
    heated: HeatedShear,
    map: InverseMap,
    a_minus_one: Vec<f64>,
    b: Vec<f64>,
}

impl ShearState {
    pub fn new(profile: &ShearProfile, nu: f64, t: f64, opts: InversionOptions) -> Result<Self> {
        let heated = evolve_shear(profile, nu, t)?;
        let map = invert_map(&heated, opts)?;
        let (a_minus_one, b) = coefficients(&heated, &map)?;
        Ok(Self {
            heated,
            map,
            a_minus_one,
            b,
        })
    }

    /// `a ≡ 1`, `b ≡ 0`.
    pub fn couette(n_v: usize, l_v: f64, t: f64) -> Self {
        Self {
            heated: HeatedShear {
                t,
                nu: 0.0,
                l_v,
                s: 0.0,
                coeffs: vec![Complex64::new(0.0, 0.0); n_v],
            },
            map: InverseMap {
                beta: vec![0.0; n_v],
                iterations: 0,
                last_update: 0.0,
                residual: 0.0,
                converged: true,
                sup_alpha_prime: 0.0,
            },
            a_minus_one: vec![0.0; n_v],
            b: vec![0.0; n_v],
        }
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.heated.t
    }
    pub fn heated(&self) -> &HeatedShear {
        &self.heated
    }
    pub fn inverse_map(&self) -> &InverseMap {
        &self.map
    }
    pub fn beta(&self) -> &[f64] {
        &self.map.beta
    }
    pub fn a_minus_one(&self) -> &[f64] {
        &self.a_minus_one
    }
    pub fn b(&self) -> &[f64] {
        &self.b
    }
    pub fn n_v(&self) -> usize {
        self.b.len()
    }
    pub fn l_v(&self) -> f64 {
        self.heated.l_v
    }
    pub fn is_trivial(&self) -> bool {
        self.a_minus_one.iter().all(|x| *x == 0.0) && self.b.iter().all(|x| *x == 0.0)
    }

    /// `sup |a² - 1|`.
    pub fn sup_a2_minus_one(&self) -> f64 {
        self.a_minus_one
            .iter()
            .map(|x| (x * (2.0 + x)).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_a(&self) -> f64 {
        self.a_minus_one.iter().map(|x| (1.0 + x).abs()).fold(1.0, f64::max)
    }

    /// `sup_v |Ū(t, y(v)) - v|`.
    pub fn round_trip_error(&self) -> f64 {
        let n = self.n_v();
        self.map
            .beta
            .iter()
            .enumerate()
            .map(|(j, beta)| {
                let v = line_node(j, n, self.l_v());
                (self.heated.u(v + beta) - v).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `‖b - a ∂_v a‖_{L²}`, with `∂_v a` taken spectrally on the v-grid.
    pub fn chain_rule_residual(&self, backend: &mut dyn FftBackend) -> f64 {
        let l_v = self.l_v();
        let n = self.n_v();
        let coeffs = line_to_spectral(backend, &self.a_minus_one);
        let da = line_to_physical(backend, &line_derivative(&coeffs, l_v, 1));
        let sum: f64 = (0..n)
            .map(|j| {
                let r = self.b[j] - (1.0 + self.a_minus_one[j]) * da[j];
                r * r
            })
            .sum();
        sqrt(sum * l_v / n as f64)
    }

    /// `(‖a - 1‖_{H^σ}, ‖b‖_{H^σ})` on the v side.
    pub fn coefficient_norms(&self, backend: &mut dyn FftBackend, sigma: f64) -> (f64, f64) {
        let l_v = self.l_v();
        let a = line_to_spectral(backend, &self.a_minus_one);
        let b = line_to_spectral(backend, &self.b);
        (line_sobolev_norm(&a, l_v, sigma), line_sobolev_norm(&b, l_v, sigma))
    }

    /// `‖β‖_{H^σ}`.
    pub fn beta_norm(&self, backend: &mut dyn FftBackend, sigma: f64) -> f64 {
        let c = line_to_spectral(backend, &self.map.beta);
        line_sobolev_norm(&c, self.l_v(), sigma)
    }
}

/// Outcome of the heat-semigroup checks on one profile.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatBudgetReport {
    pub nu: f64,
    pub s: f64,
    pub t_final: f64,
    pub delta: f64,
    pub ladder: Vec<f64>,
    /// `‖U' - 1‖_{H^s}` and its supremum over the ladder.
    pub first_initial: f64,
    pub first_sup: f64,
    /// `‖U''‖_{H^s}` and its supremum over the ladder.
    pub second_initial: f64,
    pub second_sup: f64,
    /// Both sup norms are nonincreasing along the ladder.
    pub monotone: bool,
    /// `‖Ū''‖_{L²_t H^s}` over `[0, T]` by quadrature.
    pub l2t_second: f64,
    /// The same quantity from the exact per-mode time integral.
    pub l2t_second_exact: f64,
    /// `‖Ū''‖_{L²_t H^s} / (δ ν^{-1/2})`; at most `1/sqrt 2` in exact arithmetic.
    pub k_constant: f64,
}

impl HeatBudgetReport {
    pub fn holds(&self) -> bool {
        let slack = 1.0 + 1e-12;
        self.first_sup <= self.first_initial * slack
            && self.second_sup <= self.second_initial * slack
            && self.monotone
            && self.k_constant <= core::f64::consts::FRAC_1_SQRT_2 * slack
    }

    /// Relative gap between quadrature and exact time integrals (of the squares).
    pub fn quadrature_error(&self) -> f64 {
        let q = self.l2t_second * self.l2t_second;
        let e = self.l2t_second_exact * self.l2t_second_exact;
        if e == 0.0 {
            q.abs()
        } else {
            (q - e).abs() / e
        }
    }
}

/// `∫₀ᵀ e^{-2νη²t} dt`.
pub fn heat_mode_time_integral(nu: f64, eta: f64, t_final: f64) -> f64 {
    let lam = 2.0 * nu * eta * eta;
    if lam == 0.0 {
        t_final
    } else {
        -libm::expm1(-lam * t_final) / lam
    }
}

/// Time ladder `0 ∪ geometric[10^{-8} T, T]`.
pub fn heat_ladder(t_final: f64, points: usize) -> Vec<f64> {
    let mut ts = vec![0.0];
    if t_final > 0.0 {
        ts.extend(geometric_ladder(1e-8 * t_final, t_final, points.max(2)));
    }
    ts
}

/// Checks `sup_t ‖Ū' - 1‖_{H^s} ≤ ‖U' - 1‖_{H^s}`, `sup_t ‖Ū''‖_{H^s} ≤ ‖U''‖_{H^s}`
/// and measures `K` in `‖Ū''‖_{L²_t H^s} ≤ K δ ν^{-1/2}`.
pub fn heat_norm_budget(profile: &ShearProfile, nu: f64, t_final: f64, ladder_points: usize) -> Result<HeatBudgetReport> {
    if !(nu > 0.0) || !(t_final >= 0.0) {
        return Err(Error::InvalidParameter("heat budget needs nu > 0 and T >= 0".into()));
    }
    let s = profile.s;
    let l_v = profile.l_v;
    let n = profile.coeffs.len();
    let step = 2.0 * PI / l_v;
    let ladder = heat_ladder(t_final, ladder_points);

    let mut first_sup: f64 = 0.0;
    let mut second_sup: f64 = 0.0;
    let mut monotone = true;
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for &t in &ladder {
        let h = evolve_shear(profile, nu, t)?;
        let (a, b) = (h.first_derivative_norm(s), h.second_derivative_norm(s));
        monotone &= a <= prev.0 && b <= prev.1;
        prev = (a, b);
        first_sup = first_sup.max(a);
        second_sup = second_sup.max(b);
    }
    let first_initial = evolve_shear(profile, nu, 0.0)?.first_derivative_norm(s);
    let second_initial = evolve_shear(profile, nu, 0.0)?.second_derivative_norm(s);

    // weights L_v <η>^{2s} η⁴ |ĝ|², decaying like e^{-2νη²t}
    let modes: Vec<(f64, f64)> = profile
        .coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let eta = label(m, n) as f64 * step;
            (eta, l_v * powf(1.0 + eta * eta, s) * powf(eta, 4.0) * c.norm_sqr())
        })
        .filter(|(_, w)| *w > 0.0)
        .collect();
    let integrand = |t: f64| -> f64 { modes.iter().map(|(eta, w)| w * exp(-2.0 * nu * eta * eta * t)).sum() };
    let quad: f64 = ladder.windows(2).map(|w| gauss_legendre5(integrand, w[0], w[1])).sum();
    let exact: f64 = modes
        .iter()
        .map(|(eta, w)| w * heat_mode_time_integral(nu, *eta, t_final))
        .sum();

    let delta = profile.delta();
    let l2t_second = sqrt(quad);
    let k_constant = if delta == 0.0 {
        0.0
    } else {
        l2t_second / (delta * powf(nu, -0.5))
    };
    Ok(HeatBudgetReport {
        nu,
        s,
        t_final,
        delta,
        ladder,
        first_initial,
        first_sup,
        second_initial,
        second_sup,
        monotone,
        l2t_second,
        l2t_second_exact: sqrt(exact),
        k_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::DirectDft;

    fn bump(delta: f64, n_v: usize) -> ShearProfile {
        ShearPreset::GaussBump {
            amplitude: 1.0,
            width: 1.5,
            target_delta: Some(delta),
        }
        .build(&mut DirectDft::new(), n_v, 32.0, 4.0)
        .unwrap()
    }

    fn single_mode(amp: f64) -> ShearProfile {
        // one cosine at η = 1 on a box of length 2π
        let mut c = vec![Complex64::new(0.0, 0.0); 16];
        c[1] = Complex64::new(0.5 * amp, 0.0);
        c[15] = Complex64::new(0.5 * amp, 0.0);
        ShearProfile::from_coeffs(2.0 * PI, c, 4.0)
    }

    #[test]
    fn eval_line_matches_samples_and_derivatives() {
        let p = bump(0.02, 64);
        let mut dft = DirectDft::new();
        let g = p.samples(&mut dft);
        for (j, gj) in g.iter().enumerate() {
            let x = line_node(j, 64, 32.0);
            assert!((eval_line(p.coeffs(), 32.0, x, 0) - gj).abs() < 1e-14);
        }
        let x = 0.3719;
        let h = 1e-4;
        let fd = (eval_line(p.coeffs(), 32.0, x + h, 0) - eval_line(p.coeffs(), 32.0, x - h, 0)) / (2.0 * h);
        assert!((fd - eval_line(p.coeffs(), 32.0, x, 1)).abs() < 1e-9);
        let fd2 = (eval_line(p.coeffs(), 32.0, x + h, 1) - eval_line(p.coeffs(), 32.0, x - h, 1)) / (2.0 * h);
        assert!((fd2 - eval_line(p.coeffs(), 32.0, x, 2)).abs() < 1e-9);
    }

    #[test]
    fn evolve_examples() {
        let p = bump(0.03, 64);
        assert_eq!(evolve_shear(&p, 0.1, 0.0).unwrap().coeffs(), p.coeffs());
        let m = single_mode(1.0);
        let h = evolve_shear(&m, 0.1, 10.0).unwrap();
        assert!((h.coeffs()[1].re - 0.5 * exp(-1.0)).abs() < 1e-16);
        let flat = ShearProfile::couette(32, 32.0, 4.0);
        let h = evolve_shear(&flat, 0.1, 5.0).unwrap();
        assert!(h.is_flat());
        assert_eq!(h.u(1.25), 1.25);
        assert!(evolve_shear(&p, 0.1, -1.0).is_err());
    }

    #[test]
    fn target_delta_and_validation() {
        let mut dft = DirectDft::new();
        let p = bump(0.01, 128);
        assert!((p.delta() - 0.01).abs() < 1e-15);
        assert!(p.validate(&mut dft, DEFAULT_DELTA_MAX).is_ok());
        assert!(bump(0.08, 128).validate(&mut dft, DEFAULT_DELTA_MAX).is_err());
        let wide = ShearPreset::GaussBump {
            amplitude: 0.001,
            width: 8.0,
            target_delta: None,
        }
        .build(&mut dft, 128, 32.0, 4.0)
        .unwrap();
        assert!(wide.validate(&mut dft, 1.0).is_err());
        let t = ShearPreset::TanhDefect {
            amplitude: 1.0,
            width: 1.0,
            target_delta: Some(0.02),
        }
        .build(&mut dft, 128, 32.0, 4.0)
        .unwrap();
        assert!((t.delta() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn table_interpolation() {
        let pts = [(-2.0, 0.0), (0.0, 1.0), (2.0, 0.0)];
        let nodes = [-3.0, -1.0, 0.0, 0.5, 2.0, 5.0];
        let v = interpolate_table(&pts, &nodes).unwrap();
        assert_eq!(v, vec![0.0, 0.5, 1.0, 0.75, 0.0, 0.0]);
        assert!(interpolate_table(&[(0.0, 1.0)], &nodes).is_err());
        assert!(interpolate_table(&[(1.0, 1.0), (0.0, 1.0)], &nodes).is_err());
    }

    #[test]
    fn invert_examples() {
        let zero = invert_with(|_| 0.0, |_| 0.0, 32, 32.0, 0.0, InversionOptions::default()).unwrap();
        assert!(zero.beta.iter().all(|b| *b == 0.0));

        let c = invert_with(|_| 0.01, |_| 0.0, 32, 32.0, 0.0, InversionOptions::default()).unwrap();
        assert!(c.beta.iter().all(|b| *b == 0.01));
        assert_eq!(c.iterations, 2);

        let gauss = |y: f64| 0.01 * exp(-y * y);
        let gp = |y: f64| -0.02 * y * exp(-y * y);
        for method in [InversionMethod::Picard, InversionMethod::Newton] {
            let opts = InversionOptions {
                method,
                ..Default::default()
            };
            let r = invert_with(gauss, gp, 64, 32.0, 0.0086, opts).unwrap();
            assert!(r.converged);
            assert!(r.residual <= 1e-12, "{method:?}: {}", r.residual);
        }
        assert!(matches!(
            invert_with(gauss, gp, 64, 32.0, 0.5, InversionOptions::default()),
            Err(Error::NonContraction { .. })
        ));
    }

    #[test]
    fn couette_state_is_trivial() {
        let flat = ShearProfile::couette(64, 32.0, 4.0);
        let s = ShearState::new(&flat, 0.01, 3.0, InversionOptions::default()).unwrap();
        assert!(s.is_trivial());
        assert_eq!(s.round_trip_error(), 0.0);
        assert!(ShearState::couette(64, 32.0, 0.0).is_trivial());
    }

    #[test]
    fn state_identities_at_small_delta() {
        let mut dft = DirectDft::new();
        let p = bump(0.01, 256);
        let s = ShearState::new(&p, 0.01, 2.0, InversionOptions::default()).unwrap();
        assert!(s.round_trip_error() <= 1e-10);
        assert!(s.chain_rule_residual(&mut dft) <= 1e-8);

        // ‖a - 1‖ + ‖b‖ ≤ 2(‖Ū' - 1‖ + ‖Ū''‖)
        let sigma = 2.0;
        let (na, nb) = s.coefficient_norms(&mut dft, sigma);
        let h = s.heated();
        let (ua, ub) = (h.first_derivative_norm(sigma), h.second_derivative_norm(sigma));
        assert!(na + nb <= 2.0 * (ua + ub));
        assert!(0.5 * ub <= nb && nb <= 2.0 * ub);
        assert!(s.beta_norm(&mut dft, 4.0) <= 10.0 * p.delta());

        let newton = ShearState::new(
            &p,
            0.01,
            2.0,
            InversionOptions {
                method: InversionMethod::Newton,
                ..Default::default()
            },
        )
        .unwrap();
        for (x, y) in newton.beta().iter().zip(s.beta()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn composition_ratio_approaches_one() {
        let mut dft = DirectDft::new();
        let n = 256;
        let l_v = 32.0;
        let tests: [fn(f64) -> f64; 3] = [
            |y| exp(-y * y / 2.0),
            |y| y * exp(-y * y / 4.0),
            |y| cos(2.0 * y) * exp(-y * y / 3.0),
        ];
        let mut last = [f64::INFINITY; 3];
        for &delta in &[0.05, 0.01, 0.002] {
            let p = bump(delta, n);
            let g = p.samples(&mut dft);
            for (i, f) in tests.iter().enumerate() {
                let base: Vec<f64> = (0..n).map(|j| f(line_node(j, n, l_v))).collect();
                let comp: Vec<f64> = (0..n).map(|j| f(line_node(j, n, l_v) + g[j])).collect();
                let nb = line_sobolev_norm(&line_to_spectral(&mut dft, &base), l_v, 1.0);
                let nc = line_sobolev_norm(&line_to_spectral(&mut dft, &comp), l_v, 1.0);
                let ratio = nc / nb;
                assert!((0.5..=2.0).contains(&ratio));
                let gap = (ratio - 1.0).abs();
                assert!(gap < last[i]);
                last[i] = gap;
            }
        }
    }

    #[test]
    fn heat_budget_examples() {
        let flat = ShearProfile::couette(32, 32.0, 4.0);
        let r = heat_norm_budget(&flat, 0.01, 100.0, 40).unwrap();
        assert_eq!((r.first_sup, r.second_sup, r.l2t_second), (0.0, 0.0, 0.0));

        // single mode at η = 1: ‖Ū''‖²_{L²_t L²} = ‖U''‖² (1 - e^{-2νT}) / (2ν)
        let m = single_mode(0.3);
        let mut m0 = m.clone();
        m0.s = 0.0;
        let (nu, t) = (0.01, 250.0);
        let r = heat_norm_budget(&m0, nu, t, 60).unwrap();
        let u2 = evolve_shear(&m0, nu, 0.0).unwrap().second_derivative_norm(0.0);
        let closed = u2 * u2 * (1.0 - exp(-2.0 * nu * t)) / (2.0 * nu);
        assert!((r.l2t_second_exact.powi(2) - closed).abs() <= 1e-12 * closed);
        assert!(r.quadrature_error() <= 1e-8, "{}", r.quadrature_error());
        assert!(closed <= u2 * u2 / (2.0 * nu));

        for &nu in &[1e-2, 1e-3] {
            let r = heat_norm_budget(&bump(0.01, 128), nu, 3.0 * powf(nu, -1.0 / 3.0), 60).unwrap();
            assert!(r.holds(), "{r:?}");
            assert!(r.quadrature_error() <= 1e-8);
        }
    }
}
