use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::FrequencyGrid;
use crate::math::exp;
use crate::transform::{to_physical, to_spectral, FftBackend};

/// Default Gaussian window width for `random_band`, as a fraction of `L_v`.
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataSpec {
    /// A real cosine wave at integer labels `(k, j)`, `η = j · 2π/L_v`.
    SingleMode { k: i64, j: i64 },
    /// Random coefficients on `1 ≤ |k| ≤ k_max`, `|j| ≤ j_max`, multiplied in
    /// physical space by `exp(-v²/(2σ²))` so the data stays away from the box
    /// edges. `sigma` defaults to `L_v/10`.
    RandomBand { k_max: i64, j_max: i64, sigma: Option<f64> },
    /// `sin z · (-v/σ) exp(-v²/(2σ²))`.
    Dipole { sigma: f64 },
}

impl DataSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DataSpec::SingleMode { .. } => "single_mode",
            DataSpec::RandomBand { .. } => "random_band",
            DataSpec::Dipole { .. } => "dipole",
        }
    }
}

/// Initial vorticity scaled so that `‖f‖_{H^N} = ε`.
pub fn initial_data(
    spec: &DataSpec,
    grid: &FrequencyGrid,
    eps: f64,
    n: f64,
    seed: u64,
    backend: &mut dyn FftBackend,
) -> Result<SpectralField> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!("eps must be >= 0, got {eps}")));
    }
    let raw = match *spec {
        DataSpec::SingleMode { k, j } => {
            check_band(grid, k.abs(), j.abs())?;
            if k == 0 && j == 0 {
                return Err(Error::InvalidParameter("single_mode(0, 0) is a constant, which the gauge removes".into()));
            }
            let mut f = SpectralField::zeros(*grid);
            f.set(k, j, Complex64::new(1.0, 0.0))?;
            f.set(-k, -j, Complex64::new(1.0, 0.0))?;
            f
        }
        DataSpec::RandomBand { k_max, j_max, sigma } => {
            if k_max < 1 || j_max < 0 {
                return Err(Error::InvalidParameter("random_band needs k_max >= 1 and j_max >= 0".into()));
            }
            check_band(grid, k_max, j_max)?;
            let sigma = sigma.unwrap_or(DEFAULT_WINDOW_FRACTION * grid.l_v());
            if !(sigma > 0.0) {
                return Err(Error::InvalidParameter("window width must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut f = SpectralField::zeros(*grid);
            for k in 1..=k_max {
                for j in -j_max..=j_max {
                    let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    f.set(k, j, c)?;
                    f.set(-k, -j, c.conj())?;
                }
            }
            let mut values = to_physical(backend, &f);
            window(grid, &mut values, sigma);
            // the window acts in v only, so k = 0 stays empty
            to_spectral(backend, grid, &values).nonzero_modes()
        }
        DataSpec::Dipole { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::InvalidParameter("dipole width must be positive".into()));
            }
            let values: alloc::vec::Vec<f64> = (0..grid.len())
                .map(|idx| {
                    let (iz, iv) = grid.split(idx);
                    let v = grid.v_node(iv);
                    crate::math::sin(grid.z_node(iz)) * (-v / sigma) * exp(-v * v / (2.0 * sigma * sigma))
                })
                .collect();
            to_spectral(backend, grid, &values).nonzero_modes()
        }
    };
    let mut f = raw.dealias();
    f.symmetrize();
    let norm = f.sobolev_norm(n);
    if norm == 0.0 {
        return Err(Error::NoNonzeroContent);
    }
    f.scale(eps / norm);
    Ok(f)
}

fn check_band(grid: &FrequencyGrid, k: i64, j: i64) -> Result<()> {
    if k > grid.k_cut() || j > grid.j_cut() {
        return Err(Error::OutsideDealiasBand(alloc::format!(
            "|k| = {k}, |j| = {j} against the retained band |k| <= {}, |j| <= {}",
            grid.k_cut(),
            grid.j_cut()
        )));
    }
    Ok(())
}

fn window(grid: &FrequencyGrid, values: &mut [f64], sigma: f64) {
    let nv = grid.n_v();
    for (idx, x) in values.iter_mut().enumerate() {
        let v = grid.v_node(idx % nv);
        *x *= exp(-v * v / (2.0 * sigma * sigma));
    }
}
