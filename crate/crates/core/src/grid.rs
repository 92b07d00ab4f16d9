use alloc::format;

use crate::error::{Error, Result};
use crate::math::PI;

/// Truncated frequency lattice for the box `[0, 2π) × [-L_v/2, L_v/2)`.
///
/// Storage is row-major in `(k, η)`, both axes in FFT order: index `i` maps
/// to wavenumber `i` for `i < n/2` and `i - n` otherwise, so the Nyquist
/// index `n/2` carries `-n/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    n_z: usize,
    n_v: usize,
    l_v: f64,
}

impl FrequencyGrid {
    pub const DEFAULT_L_V: f64 = 32.0;

    pub fn new(n_z: usize, n_v: usize, l_v: f64) -> Result<Self> {
        if n_z < 8 || n_v < 8 || n_z % 2 != 0 || n_v % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "mode counts must be even and >= 8, got {n_z} x {n_v}"
            )));
        }
        if !(l_v > 0.0 && l_v.is_finite()) {
            return Err(Error::InvalidGrid(format!("L_v must be positive, got {l_v}")));
        }
        Ok(Self { n_z, n_v, l_v })
    }

    #[inline]
    pub fn n_z(&self) -> usize {
        self.n_z
    }
    #[inline]
    pub fn n_v(&self) -> usize {
        self.n_v
    }
    #[inline]
    pub fn l_v(&self) -> f64 {
        self.l_v
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.n_z * self.n_v
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Spacing of the v-frequencies, `2π / L_v`.
    #[inline]
    pub fn eta_step(&self) -> f64 {
        2.0 * PI / self.l_v
    }

    /// Physical spacing in z.
    #[inline]
    pub fn dz(&self) -> f64 {
        2.0 * PI / self.n_z as f64
    }

    /// Physical spacing in v.
    #[inline]
    pub fn dv(&self) -> f64 {
        self.l_v / self.n_v as f64
    }

    /// Weight turning `Σ |f̂|²` into the squared L² norm. Norms use the
    /// mean-square measure on the box, for which this is exactly 1.
    #[inline]
    pub fn plancherel_weight(&self) -> f64 {
        1.0
    }

    #[inline]
    pub fn index(&self, iz: usize, iv: usize) -> usize {
        iz * self.n_v + iv
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.n_v, idx % self.n_v)
    }

    #[inline]
    pub fn k_at(&self, iz: usize) -> i64 {
        signed(iz, self.n_z)
    }

    /// Integer label `j` of the v-frequency `η = j · 2π/L_v`.
    #[inline]
    pub fn j_at(&self, iv: usize) -> i64 {
        signed(iv, self.n_v)
    }

    #[inline]
    pub fn eta_at(&self, iv: usize) -> f64 {
        self.j_at(iv) as f64 * self.eta_step()
    }

    pub fn iz_of(&self, k: i64) -> Option<usize> {
        unsigned(k, self.n_z)
    }

    pub fn iv_of(&self, j: i64) -> Option<usize> {
        unsigned(j, self.n_v)
    }

    /// `(k, η)` of a flat index.
    #[inline]
    pub fn freq(&self, idx: usize) -> (f64, f64) {
        let (iz, iv) = self.split(idx);
        (self.k_at(iz) as f64, self.eta_at(iv))
    }

    /// Flat index of `(-k, -η)`, with the Nyquist labels mapped to themselves.
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        let (iz, iv) = self.split(idx);
        self.index((self.n_z - iz) % self.n_z, (self.n_v - iv) % self.n_v)
    }

    /// Largest retained `|k|` under the 2/3 rule.
    #[inline]
    pub fn k_cut(&self) -> i64 {
        (self.n_z / 3) as i64
    }

    /// Largest retained `|j|` under the 2/3 rule.
    #[inline]
    pub fn j_cut(&self) -> i64 {
        (self.n_v / 3) as i64
    }

    /// Largest retained `|η|` under the 2/3 rule.
    #[inline]
    pub fn eta_cut(&self) -> f64 {
        self.j_cut() as f64 * self.eta_step()
    }

    #[inline]
    pub fn retained(&self, idx: usize) -> bool {
        let (iz, iv) = self.split(idx);
        self.k_at(iz).abs() <= self.k_cut() && self.j_at(iv).abs() <= self.j_cut()
    }

    /// z-coordinate of physical node `i`, in `[0, 2π)`.
    #[inline]
    pub fn z_node(&self, i: usize) -> f64 {
        i as f64 * self.dz()
    }

    /// v-coordinate of physical node `j`, wrapped into `[-L_v/2, L_v/2)`.
    #[inline]
    pub fn v_node(&self, j: usize) -> f64 {
        signed(j, self.n_v) as f64 * self.dv()
    }
}

#[inline]
fn signed(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[inline]
fn unsigned(k: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if k < -half || k >= half {
        None
    } else if k >= 0 {
        Some(k as usize)
    } else {
        Some((k + n as i64) as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(FrequencyGrid::new(6, 16, 1.0).is_err());
        assert!(FrequencyGrid::new(9, 16, 1.0).is_err());
        assert!(FrequencyGrid::new(8, 16, 0.0).is_err());
        assert!(FrequencyGrid::new(8, 16, 32.0).is_ok());
    }

    #[test]
    fn index_round_trip() {
        let g = FrequencyGrid::new(8, 12, 32.0).unwrap();
        for idx in 0..g.len() {
            let (iz, iv) = g.split(idx);
            let k = g.k_at(iz);
            let j = g.j_at(iv);
            assert!((-4..4).contains(&k));
            assert!((-6..6).contains(&j));
            assert_eq!(g.index(g.iz_of(k).unwrap(), g.iv_of(j).unwrap()), idx);
        }
        assert_eq!(g.iz_of(4), None);
        assert_eq!(g.iz_of(-4), Some(4));
    }

    #[test]
    fn mirror_is_involution() {
        let g = FrequencyGrid::new(8, 10, 3.0).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.mirror(g.mirror(idx)), idx);
            let (iz, iv) = g.split(idx);
            let (mz, mv) = g.split(g.mirror(idx));
            if g.k_at(iz) != -4 {
                assert_eq!(g.k_at(mz), -g.k_at(iz));
            }
            if g.j_at(iv) != -5 {
                assert_eq!(g.j_at(mv), -g.j_at(iv));
            }
        }
    }
}
