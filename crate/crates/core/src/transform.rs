//! Passage between spectral coefficients and physical samples.
//!
//! The crate does not ship a fast transform. Callers supply an
//! [`FftBackend`]; [`DirectDft`] is the reference O(n²) implementation used by
//! the tests here, and the `shearlab` crate provides a rustfft-backed one.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::field::SpectralField;
use crate::grid::FrequencyGrid;
use crate::math::{cos, sin, PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `X_m = Σ_j x_j e^{-2πi jm/n}`
    Forward,
    /// `x_j = Σ_m X_m e^{+2πi jm/n}`
    Inverse,
}

/// An unnormalized one-dimensional DFT of arbitrary length.
pub trait FftBackend {
    fn transform(&mut self, line: &mut [Complex64], dir: Direction);
}

impl<B: FftBackend + ?Sized> FftBackend for Box<B> {
    fn transform(&mut self, line: &mut [Complex64], dir: Direction) {
        (**self).transform(line, dir)
    }
}

impl<B: FftBackend + ?Sized> FftBackend for &mut B {
    fn transform(&mut self, line: &mut [Complex64], dir: Direction) {
        (**self).transform(line, dir)
    }
}

/// Direct summation DFT with cached twiddles.
#[derive(Debug, Default, Clone)]
pub struct DirectDft {
    twiddles: Vec<(usize, Vec<Complex64>)>,
    scratch: Vec<Complex64>,
}

impl DirectDft {
    pub fn new() -> Self {
        Self::default()
    }

    fn twiddles(&mut self, n: usize) -> usize {
        if let Some(pos) = self.twiddles.iter().position(|(len, _)| *len == n) {
            return pos;
        }
        let w = (0..n)
            .map(|j| {
                let a = -2.0 * PI * j as f64 / n as f64;
                Complex64::new(cos(a), sin(a))
            })
            .collect();
        self.twiddles.push((n, w));
        self.twiddles.len() - 1
    }
}

impl FftBackend for DirectDft {
    fn transform(&mut self, line: &mut [Complex64], dir: Direction) {
        let n = line.len();
        if n <= 1 {
            return;
        }
        let pos = self.twiddles(n);
        self.scratch.clear();
        self.scratch.extend_from_slice(line);
        let w = &self.twiddles[pos].1;
        for (m, out) in line.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, x) in self.scratch.iter().enumerate() {
                let tw = w[(j * m) % n];
                let tw = match dir {
                    Direction::Forward => tw,
                    Direction::Inverse => tw.conj(),
                };
                acc += x * tw;
            }
            *out = acc;
        }
    }
}

/// Unnormalized 2D transform over a row-major `n_z × n_v` buffer.
pub fn transform_2d(
    backend: &mut dyn FftBackend,
    grid: &FrequencyGrid,
    data: &mut [Complex64],
    dir: Direction,
) {
    let (nz, nv) = (grid.n_z(), grid.n_v());
    debug_assert_eq!(data.len(), nz * nv);
    for row in data.chunks_mut(nv) {
        backend.transform(row, dir);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); nz];
    for iv in 0..nv {
        for iz in 0..nz {
            col[iz] = data[iz * nv + iv];
        }
        backend.transform(&mut col, dir);
        for iz in 0..nz {
            data[iz * nv + iv] = col[iz];
        }
    }
}

/// Physical samples at nodes `(z_i, v_j)`, row-major. Only the real part is
/// kept, which is exact for Hermitian-symmetric input.
pub fn to_physical(backend: &mut dyn FftBackend, f: &SpectralField) -> Vec<f64> {
    let mut buf = f.coeffs().to_vec();
    transform_2d(backend, f.grid(), &mut buf, Direction::Inverse);
    buf.into_iter().map(|c| c.re).collect()
}

/// Complex physical samples (no projection onto the real part).
pub fn to_physical_complex(backend: &mut dyn FftBackend, f: &SpectralField) -> Vec<Complex64> {
    let mut buf = f.coeffs().to_vec();
    transform_2d(backend, f.grid(), &mut buf, Direction::Inverse);
    buf
}

/// Coefficients of real physical samples, with the `1/(n_z n_v)` factor.
pub fn to_spectral(backend: &mut dyn FftBackend, grid: &FrequencyGrid, values: &[f64]) -> SpectralField {
    let mut buf: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    transform_2d(backend, grid, &mut buf, Direction::Forward);
    let norm = 1.0 / grid.len() as f64;
    for c in &mut buf {
        *c *= norm;
    }
    SpectralField::from_coeffs(*grid, buf).expect("buffer sized from grid")
}

/// Normalized coefficients of a periodic line of real samples.
pub fn line_to_spectral(backend: &mut dyn FftBackend, samples: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    backend.transform(&mut buf, Direction::Forward);
    let norm = 1.0 / samples.len() as f64;
    for c in &mut buf {
        *c *= norm;
    }
    buf
}

/// Real samples of a line from its normalized coefficients.
pub fn line_to_physical(backend: &mut dyn FftBackend, coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    backend.transform(&mut buf, Direction::Inverse);
    buf.into_iter().map(|c| c.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field(grid: FrequencyGrid) -> Vec<f64> {
        (0..grid.len())
            .map(|idx| {
                let (iz, iv) = grid.split(idx);
                let z = grid.z_node(iz);
                let v = grid.v_node(iv);
                cos(2.0 * z + 0.3) * crate::math::exp(-v * v / 4.0) + 0.25 * sin(z) * v / (1.0 + v * v)
            })
            .collect()
    }

    #[test]
    fn round_trip_and_plancherel() {
        let grid = FrequencyGrid::new(8, 16, 12.0).unwrap();
        let mut dft = DirectDft::new();
        let values = sample_field(grid);
        let f = to_spectral(&mut dft, &grid, &values);
        assert!(f.hermitian_defect() < 1e-14);
        let back = to_physical(&mut dft, &f);
        for (a, b) in values.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
        let mean_sq = values.iter().map(|x| x * x).sum::<f64>() / values.len() as f64;
        assert!((f.l2_norm_sqr() - mean_sq).abs() / mean_sq < 1e-12);
    }

    #[test]
    fn single_mode_lands_on_its_label() {
        let grid = FrequencyGrid::new(8, 10, 10.0).unwrap();
        let mut dft = DirectDft::new();
        let values: Vec<f64> = (0..grid.len())
            .map(|idx| {
                let (iz, iv) = grid.split(idx);
                cos(3.0 * grid.z_node(iz) - 2.0 * grid.eta_step() * grid.v_node(iv))
            })
            .collect();
        let f = to_spectral(&mut dft, &grid, &values);
        assert!((f.get(3, -2).unwrap().re - 0.5).abs() < 1e-13);
        assert!((f.get(-3, 2).unwrap().re - 0.5).abs() < 1e-13);
        assert!((f.l2_norm_sqr() - 0.5).abs() < 1e-13);
    }
}
