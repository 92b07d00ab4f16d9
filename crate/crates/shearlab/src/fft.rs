use std::collections::HashMap;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use shearlab_core::transform::{Direction, FftBackend};
use shearlab_core::Complex64;

/// [`FftBackend`] on top of rustfft, caching one plan per length and
/// direction. Not shared between threads: every worker builds its own.
pub struct RustFftBackend {
    planner: FftPlanner<f64>,
    plans: HashMap<(usize, bool), Arc<dyn Fft<f64>>>,
    scratch: Vec<Complex64>,
}

impl Default for RustFftBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl RustFftBackend {
    pub fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
            plans: HashMap::new(),
            scratch: Vec::new(),
        }
    }
}

impl FftBackend for RustFftBackend {
    fn transform(&mut self, line: &mut [Complex64], dir: Direction) {
        let n = line.len();
        if n == 0 {
            return;
        }
        let forward = dir == Direction::Forward;
        let planner = &mut self.planner;
        let plan = self
            .plans
            .entry((n, forward))
            .or_insert_with(|| {
                if forward {
                    planner.plan_fft_forward(n)
                } else {
                    planner.plan_fft_inverse(n)
                }
            })
            .clone();
        let need = plan.get_inplace_scratch_len();
        if self.scratch.len() < need {
            self.scratch.resize(need, Complex64::new(0.0, 0.0));
        }
        plan.process_with_scratch(line, &mut self.scratch[..need]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use shearlab_core::transform::DirectDft;

    #[test]
    fn agrees_with_direct_sums() {
        for n in [8usize, 12, 64, 96] {
            let x: Vec<Complex64> = (0..n)
                .map(|j| Complex64::new((j as f64 * 0.37).sin(), (j as f64 * 1.3).cos()))
                .collect();
            for dir in [Direction::Forward, Direction::Inverse] {
                let mut a = x.clone();
                let mut b = x.clone();
                RustFftBackend::new().transform(&mut a, dir);
                DirectDft::new().transform(&mut b, dir);
                let err = a.iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
                assert!(err < 1e-12 * n as f64, "n = {n}: {err}");
            }
        }
    }
}
