use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::math::{bracket_pow, sqrt};

/// Fourier coefficients of a field on the truncated box, laid out as
/// described on [`FrequencyGrid`].
///
/// Coefficients follow the forward-transform convention with a `1/(n_z n_v)`
/// factor, so `Σ |f̂|²` is the mean-square of the physical samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: FrequencyGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: FrequencyGrid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(grid: FrequencyGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, coeffs })
    }

    /// Field whose coefficient at `(k, η)` is `f(k, η)`.
    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(grid: FrequencyGrid, f: F) -> Self {
        let coeffs = (0..grid.len())
            .map(|idx| {
                let (k, eta) = grid.freq(idx);
                f(k, eta)
            })
            .collect();
        Self { grid, coeffs }
    }

    #[inline]
    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }
    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at integer labels `(k, j)`; `None` outside the lattice.
    pub fn get(&self, k: i64, j: i64) -> Option<Complex64> {
        let iz = self.grid.iz_of(k)?;
        let iv = self.grid.iv_of(j)?;
        Some(self.coeffs[self.grid.index(iz, iv)])
    }

    pub fn set(&mut self, k: i64, j: i64, value: Complex64) -> Result<()> {
        let (iz, iv) = match (self.grid.iz_of(k), self.grid.iv_of(j)) {
            (Some(iz), Some(iv)) => (iz, iv),
            _ => {
                return Err(Error::InvalidParameter(alloc::format!(
                    "mode ({k}, {j}) is not on the grid"
                )))
            }
        };
        let idx = self.grid.index(iz, iv);
        self.coeffs[idx] = value;
        Ok(())
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        self.check_grid(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * alpha;
        }
        Ok(())
    }

    pub fn scale(&mut self, c: f64) {
        for a in &mut self.coeffs {
            *a *= c;
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    /// Coefficientwise product with a symbol `m(k, η)`.
    pub fn apply_symbol<F: Fn(f64, f64) -> Complex64>(&self, m: F) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (k, eta) = self.grid.freq(idx);
                c * m(k, eta)
            })
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    /// Coefficientwise product with a real symbol.
    pub fn apply_real_symbol<F: Fn(f64, f64) -> f64>(&self, m: F) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (k, eta) = self.grid.freq(idx);
                c * m(k, eta)
            })
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    /// Weighted sum `Σ w(k, η) |f̂|²`.
    pub fn weighted_energy<F: Fn(f64, f64) -> f64>(&self, w: F) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (k, eta) = self.grid.freq(idx);
                w(k, eta) * c.norm_sqr()
            })
            .sum::<f64>()
            * self.grid.plancherel_weight()
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.plancherel_weight()
    }

    pub fn l2_norm(&self) -> f64 {
        sqrt(self.l2_norm_sqr())
    }

    /// `‖f‖_{H^N} = (Σ (1 + k² + η²)^N |f̂|²)^{1/2}`.
    pub fn sobolev_norm(&self, n: f64) -> f64 {
        sqrt(self.weighted_energy(|k, eta| bracket_pow(k, eta, 2.0 * n)))
    }

    /// `Σ f̂ conj(ĝ)`: the L² inner product `∫ f ḡ` on the mean-square measure.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_grid(other)?;
        let s: Complex64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.plancherel_weight())
    }

    /// Splits into the `k = 0` column and the rest.
    pub fn project_modes(&self) -> (Self, Self) {
        let mut zero = Self::zeros(self.grid);
        let mut nonzero = Self::zeros(self.grid);
        for (idx, c) in self.coeffs.iter().enumerate() {
            if idx < self.grid.n_v() {
                zero.coeffs[idx] = *c;
            } else {
                nonzero.coeffs[idx] = *c;
            }
        }
        (zero, nonzero)
    }

    pub fn zero_mode(&self) -> Self {
        self.project_modes().0
    }

    pub fn nonzero_modes(&self) -> Self {
        self.project_modes().1
    }

    /// 2/3-rule truncation in both directions.
    pub fn dealias(&self) -> Self {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        for idx in 0..self.coeffs.len() {
            if !self.grid.retained(idx) {
                self.coeffs[idx] = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn is_dealiased(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(idx, c)| self.grid.retained(idx) || *c == Complex64::new(0.0, 0.0))
    }

    /// Largest `|f̂(k,η) - conj f̂(-k,-η)|`; zero for fields that are real in
    /// physical space.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|idx| (self.coeffs[idx] - self.coeffs[self.grid.mirror(idx)].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Replaces the field with its Hermitian part `(f̂ + conj f̂(-·))/2`.
    pub fn symmetrize(&mut self) {
        let old = self.coeffs.clone();
        for idx in 0..old.len() {
            self.coeffs[idx] = (old[idx] + old[self.grid.mirror(idx)].conj()) * 0.5;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}
