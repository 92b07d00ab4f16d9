//! Single runs: solver loop, wall-clock checkpoints, summaries, run directories.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use shearlab_core::diagnostics::{
    budget_residual, check_bootstrap, fill_budget_residuals, transient_growth, zero_mode_transfer_residual,
    BootstrapReport, Classification,
};
use shearlab_core::fit::fit_enhanced_dissipation;
use shearlab_core::kelvin::KelvinMode;
use shearlab_core::solver::{RunState, Stepper};
use shearlab_core::SpectralField;

use crate::checkpoint::Checkpoint;
use crate::config::{FrameName, RunConfig, SpecName};
use crate::error::Result;
use crate::fft::RustFftBackend;
use crate::io::{atomic_write, decimate, write_csv, write_json};

/// How a run ended; each variant has its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Stable,
    Violated,
    NonFinite,
    ResolutionExhausted,
    EllipticFailure,
    Spillover,
    ShearFailure,
}

/// Exit code for configuration errors (`EX_USAGE`).
pub const EXIT_CONFIG: i32 = 64;

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Stable => 0,
            RunStatus::NonFinite => 1,
            RunStatus::Violated => 2,
            RunStatus::ResolutionExhausted => 3,
            RunStatus::EllipticFailure => 4,
            RunStatus::Spillover => 5,
            RunStatus::ShearFailure => 6,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Stable => "stable",
            RunStatus::Violated => "violated",
            RunStatus::NonFinite => "non_finite",
            RunStatus::ResolutionExhausted => "resolution_exhausted",
            RunStatus::EllipticFailure => "elliptic_failure",
            RunStatus::Spillover => "spillover",
            RunStatus::ShearFailure => "shear_failure",
        }
    }

    fn from_error(e: &shearlab_core::Error) -> Self {
        use shearlab_core::Error as E;
        match e {
            E::NonFinite { .. } => RunStatus::NonFinite,
            E::ResolutionExhausted { .. } => RunStatus::ResolutionExhausted,
            E::EllipticDivergence { .. } => RunStatus::EllipticFailure,
            E::Spillover { .. } => RunStatus::Spillover,
            _ => RunStatus::ShearFailure,
        }
    }
}

/// Outcome of the solver loop, before anything is written.
pub struct Simulation {
    pub state: RunState,
    /// The numerical failure that stopped the run early, if any.
    pub error: Option<shearlab_core::Error>,
    pub poisson_sweeps: usize,
    pub poisson_contraction: f64,
    pub runtime: Duration,
}

/// Runs the solver described by `config`. Configuration problems are
/// returned as errors; numerical failures end up in [`Simulation::error`]
/// with the state left at its last good value. `on_checkpoint` is called
/// every `output.checkpoint_interval_secs` of wall time.
pub fn simulate(config: &RunConfig, on_checkpoint: Option<&mut dyn FnMut(&RunState)>) -> Result<Simulation> {
    config.validate()?;
    let start = Instant::now();
    let mut backend = RustFftBackend::new();
    let profile = config.profile(&mut backend)?;
    let f0 = config.initial(&mut backend)?;
    let solver = config.solver_config()?;
    let t_final = solver.t_final;
    let mut stepper = Stepper::new(solver, backend, profile)?;
    let mut state = RunState::new(f0, 0.0);
    let interval = config.output.checkpoint_interval_secs;
    let mut last_ckpt = Instant::now();
    let mut cb = on_checkpoint;
    let outcome: shearlab_core::Result<()> = loop {
        let eval = match stepper.observe(&mut state) {
            Ok(e) => e,
            Err(e) => break Err(e),
        };
        if state.t >= t_final * (1.0 - 1e-12) {
            break Ok(());
        }
        let h = stepper.choose_dt(&eval, state.t);
        if let Err(e) = stepper.advance(&mut state, &eval, h) {
            break Err(e);
        }
        if let Err(e) = stepper.check_monitors(&mut state) {
            break Err(e);
        }
        if interval > 0.0 && last_ckpt.elapsed().as_secs_f64() >= interval {
            if let Some(cb) = cb.as_mut() {
                cb(&state);
            }
            last_ckpt = Instant::now();
        }
    };
    fill_budget_residuals(&mut state.frames);
    let (poisson_sweeps, poisson_contraction) = stepper.poisson_stats();
    if let Err(e) = &outcome {
        log::warn!("run stopped at t = {:.4}: {e}", state.t);
    }
    Ok(Simulation {
        state,
        error: outcome.err(),
        poisson_sweeps,
        poisson_contraction,
        runtime: start.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    /// `c` in `‖f_≠‖ ≈ exp(intercept - c ν t³)`.
    pub rate: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub window: (f64, f64),
    pub points: usize,
    pub time_to_efold: Option<f64>,
    pub enhanced_ratio: Option<f64>,
    pub heat_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: RunStatus,
    pub exit_code: i32,
    pub message: Option<String>,
    pub classification: String,
    pub first_violation: Option<f64>,
    pub t_reached: f64,
    pub steps: u64,
    pub nu: f64,
    pub eps: f64,
    pub frame: String,
    pub profile: String,
    pub sup_af: f64,
    pub visc_l2: f64,
    pub ghost_l2: f64,
    pub sup_u0: f64,
    pub u0_diss_l2: f64,
    pub energy_sum: f64,
    pub velocity_sum: f64,
    pub nz_l2hn: f64,
    pub k_measured: f64,
    pub k_bound: f64,
    pub c_e: f64,
    pub rate: Option<RateSummary>,
    pub rate_error: Option<String>,
    pub budget_residual: Option<f64>,
    pub zero_mode_transfer_residual: Option<f64>,
    pub transient_growth: Option<f64>,
    /// Relative L² distance to the Kelvin solution (single-mode Couette runs).
    pub oracle_error: Option<f64>,
    pub poisson_max_sweeps: usize,
    pub poisson_contraction: f64,
    pub warnings: Vec<String>,
}

/// Kelvin solution for `single_mode` data at time `t`.
pub fn kelvin_reference(config: &RunConfig, f0: &SpectralField, t: f64) -> Option<SpectralField> {
    let d = &config.data;
    if d.spec != SpecName::SingleMode || config.physics.frame != FrameName::Couette {
        return None;
    }
    let grid = *f0.grid();
    let eta0 = d.j as f64 * grid.eta_step();
    let mut out = SpectralField::zeros(grid);
    for (k, j, eta) in [(d.k, d.j, eta0), (-d.k, -d.j, -eta0)] {
        let amp = f0.get(k, j)?;
        let w = KelvinMode::new(k, eta, amp, config.physics.nu).ok()?.evolve(t).ok()?.omega_hat;
        out.set(k, j, w).ok()?;
    }
    Some(out)
}

pub fn summarize(config: &RunConfig, sim: &Simulation) -> RunSummary {
    let nu = config.physics.nu;
    let eps = config.data.eps;
    let frames = &sim.state.frames;
    let boot: BootstrapReport = check_bootstrap(frames, eps, nu);
    let status = match &sim.error {
        Some(e) => RunStatus::from_error(e),
        None if boot.classification == Classification::Violated => RunStatus::Violated,
        None => RunStatus::Stable,
    };
    let (rate, rate_error) = match fit_enhanced_dissipation(frames, nu) {
        Ok(f) => (
            Some(RateSummary {
                rate: f.rate,
                intercept: f.intercept,
                rms_residual: f.rms_residual,
                window: f.window,
                points: f.points,
                time_to_efold: f.time_to_efold,
                enhanced_ratio: f.enhanced_ratio,
                heat_ratio: f.heat_ratio,
            }),
            None,
        ),
        Err(e) => (None, Some(e.to_string())),
    };
    let couette = config.physics.frame == FrameName::Couette;
    let oracle_error = (|| {
        let mut be = RustFftBackend::new();
        let f0 = config.initial(&mut be).ok()?;
        let reference = kelvin_reference(config, &f0, sim.state.t)?;
        let norm = reference.l2_norm();
        if norm == 0.0 {
            return None;
        }
        let mut d = sim.state.f.clone();
        d.axpy(-1.0, &reference).ok()?;
        Some(d.l2_norm() / norm)
    })();
    RunSummary {
        status,
        exit_code: status.exit_code(),
        message: sim.error.as_ref().map(|e| e.to_string()),
        classification: boot.classification.name().to_string(),
        first_violation: boot.first_violation,
        t_reached: sim.state.t,
        steps: sim.state.steps,
        nu,
        eps,
        frame: if couette { "couette" } else { "general" }.to_string(),
        profile: if couette {
            "couette".to_string()
        } else {
            config.shear.preset.as_str().to_string()
        },
        sup_af: boot.sup_af,
        visc_l2: boot.visc_l2,
        ghost_l2: boot.ghost_l2,
        sup_u0: boot.sup_u0,
        u0_diss_l2: boot.u0_diss_l2,
        energy_sum: boot.energy_sum,
        velocity_sum: boot.velocity_sum,
        nz_l2hn: boot.nz_l2hn,
        k_measured: boot.k_measured,
        k_bound: boot.k_bound,
        c_e: boot.c_e,
        rate,
        rate_error,
        budget_residual: budget_residual(frames).ok().map(|r| r.max_normalized),
        zero_mode_transfer_residual: if couette {
            zero_mode_transfer_residual(frames).ok()
        } else {
            None
        },
        transient_growth: transient_growth(frames),
        oracle_error,
        poisson_max_sweeps: sim.poisson_sweeps,
        poisson_contraction: sim.poisson_contraction,
        warnings: sim.state.warnings.clone(),
    }
}

/// Files of a run directory.
pub struct RunPaths {
    pub dir: PathBuf,
}

impl RunPaths {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf() }
    }
    pub fn config(&self) -> PathBuf {
        self.dir.join("config.toml")
    }
    pub fn frames(&self) -> PathBuf {
        self.dir.join("frames.csv")
    }
    pub fn summary(&self) -> PathBuf {
        self.dir.join("summary.json")
    }
    pub fn rates(&self) -> PathBuf {
        self.dir.join("rates.json")
    }
    pub fn checkpoint(&self) -> PathBuf {
        self.dir.join("checkpoint.bin")
    }
    pub fn final_state(&self) -> PathBuf {
        self.dir.join("final.bin")
    }
    pub fn last_good(&self) -> PathBuf {
        self.dir.join("last_good.bin")
    }
}

pub struct RunOutcome {
    pub summary: RunSummary,
    pub simulation: Simulation,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.summary.exit_code
    }
}

fn checkpoint_of(config: &RunConfig, state: &RunState) -> Checkpoint {
    Checkpoint {
        nu: config.physics.nu,
        n: config.physics.n,
        t: state.t,
        frame: config.physics.frame.into(),
        f: state.f.clone(),
    }
}

/// Validates, runs, and writes `config.toml`, `frames.csv`, `summary.json`,
/// `rates.json` and checkpoints into `out_dir`.
pub fn run_single(config: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let paths = RunPaths::new(out_dir);
    atomic_write(&paths.config(), config.to_toml()?.as_bytes())?;
    let mut ckpt_err = None;
    let mut save = |state: &RunState| {
        if let Err(e) = checkpoint_of(config, state).save(&paths.checkpoint()) {
            ckpt_err.get_or_insert(e);
        }
    };
    let sim = simulate(config, Some(&mut save))?;
    if let Some(e) = ckpt_err {
        return Err(e);
    }
    let summary = summarize(config, &sim);
    write_csv(&paths.frames(), &decimate(&sim.state.frames, config.output.frame_every))?;
    write_json(&paths.summary(), &summary)?;
    write_json(&paths.rates(), &serde_json::json!({ "fit": summary.rate, "error": summary.rate_error }))?;
    let target = if sim.error.is_some() {
        paths.last_good()
    } else {
        paths.final_state()
    };
    checkpoint_of(config, &sim.state).save(&target)?;
    log::info!(
        "{}: {} at t = {:.3} after {} steps ({:.2?})",
        out_dir.display(),
        summary.status.as_str(),
        sim.state.t,
        sim.state.steps,
        sim.runtime
    );
    Ok(RunOutcome {
        summary,
        simulation: sim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(extra: &str) -> RunConfig {
        RunConfig::from_toml(&format!(
            "[grid]\nn_z = 16\nn_v = 64\n[physics]\nnu = 0.05\n[solver]\nt_final = 2.0\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn zero_data_is_stable_and_zero() {
        let mut c = small("");
        c.data.eps = 0.0;
        let dir = tempfile::tempdir().unwrap();
        let out = run_single(&c, dir.path()).unwrap();
        assert_eq!(out.exit_code(), 0);
        assert_eq!(out.summary.classification, "strong");
        assert!(out.simulation.state.frames.iter().all(|f| f.e_a == 0.0));
        for p in ["config.toml", "frames.csv", "summary.json", "rates.json", "final.bin"] {
            assert!(dir.path().join(p).exists(), "{p}");
        }
        let ck = Checkpoint::load(&dir.path().join("final.bin")).unwrap();
        assert_eq!(ck.f, out.simulation.state.f);
    }

    #[test]
    fn exit_codes_are_distinct() {
        let all = [
            RunStatus::Stable,
            RunStatus::Violated,
            RunStatus::NonFinite,
            RunStatus::ResolutionExhausted,
            RunStatus::EllipticFailure,
            RunStatus::Spillover,
            RunStatus::ShearFailure,
        ];
        let mut codes: Vec<i32> = all.iter().map(|s| s.exit_code()).collect();
        codes.push(EXIT_CONFIG);
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), all.len() + 1);
    }

    #[test]
    fn band_errors_come_before_compute() {
        let mut c = small("");
        c.data.k_max = 9;
        let dir = tempfile::tempdir().unwrap();
        assert!(run_single(&c, dir.path()).is_err());
        assert!(!dir.path().join("config.toml").exists());
    }

    #[test]
    fn resolution_failure_is_reported() {
        let c = RunConfig::from_toml(
            "[grid]\nn_z = 8\nn_v = 32\n[physics]\nnu = 0.001\n[data]\neps = 0.5\nk_max = 2\nj_max = 6\nsigma = 2.0\n[solver]\nt_final = 5.0",
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = run_single(&c, dir.path()).unwrap();
        assert_eq!(out.summary.status, RunStatus::ResolutionExhausted);
        assert_eq!(out.exit_code(), 3);
        assert!(dir.path().join("last_good.bin").exists());
    }
}
