//! Threshold sweeps over `(profile, ν, ε)` cells.
//!
//! A plan lists viscosities, an `ε` rule (`ε = A ν^γ` over a grid of `A`, or
//! an explicit list), profiles and seeds. Cells run on a bounded rayon pool;
//! after the coarse grid each `(profile, ν)` column is refined by geometric
//! bisection in `A` between the largest stable and the smallest non-stable
//! amplitude. Records are written in a fixed order and carry no wall-clock
//! data, so reruns produce identical `records.csv` files. Timings go to a
//! separate file.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use shearlab_core::fit::power_law_exponent;

use crate::checkpoint::Checkpoint;
use crate::config::{FrameName, PresetName, RunConfig};
use crate::error::{Error, Result};
use crate::io::{atomic_write, csv_bytes, write_csv, write_json};
use crate::run::{simulate, summarize, RunStatus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuLadder {
    pub min: f64,
    pub max: f64,
    pub per_decade: usize,
}

impl NuLadder {
    pub fn values(&self) -> Vec<f64> {
        let decades = (self.max / self.min).log10();
        let n = (decades * self.per_decade as f64).round() as usize;
        (0..=n)
            .map(|i| self.min * 10f64.powf(i as f64 / self.per_decade as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepPlan {
    /// Explicit viscosities (alternative to `nu_ladder`).
    pub nu: Vec<f64>,
    /// Exponent in `ε = A ν^γ`.
    pub gamma: f64,
    /// Coarse amplitude grid `A`.
    pub amplitudes: Vec<f64>,
    /// Explicit `ε` values (alternative to `amplitudes`; no bisection).
    pub eps: Vec<f64>,
    pub profiles: Vec<PresetName>,
    pub seeds: Vec<u64>,
    /// Each cell runs to `t_final_factor · ν^{-1/3}`.
    pub t_final_factor: f64,
    pub bisection_rounds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_ladder: Option<NuLadder>,
    /// Settings shared by every cell; `physics.nu`, `data.eps`, `data.seed`,
    /// the frame, the shear preset and `solver.t_final` are overridden.
    pub base: RunConfig,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            nu: Vec::new(),
            gamma: 0.5,
            amplitudes: Vec::new(),
            eps: Vec::new(),
            profiles: vec![PresetName::Couette],
            seeds: vec![0],
            t_final_factor: 3.0,
            bisection_rounds: 3,
            workers: None,
            nu_ladder: None,
            base: RunConfig::default(),
        }
    }
}

/// One cell: the knobs a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub profile: PresetName,
    pub nu: f64,
    pub amplitude: Option<f64>,
    pub eps: f64,
    pub seed: u64,
    pub round: u32,
}

impl SweepPlan {
    pub fn from_toml(text: &str) -> Result<Self> {
        let plan: Self = toml::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn nu_values(&self) -> Vec<f64> {
        match &self.nu_ladder {
            Some(l) => l.values(),
            None => self.nu.clone(),
        }
    }

    fn eps_levels(&self, nu: f64) -> Vec<(Option<f64>, f64)> {
        if self.amplitudes.is_empty() {
            self.eps.iter().map(|&e| (None, e)).collect()
        } else {
            self.amplitudes.iter().map(|&a| (Some(a), a * nu.powf(self.gamma))).collect()
        }
    }

    /// Coarse cells in `(profile, ν, ε, seed)` order.
    pub fn coarse_cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &profile in &self.profiles {
            for nu in self.nu_values() {
                for (amplitude, eps) in self.eps_levels(nu) {
                    for &seed in &self.seeds {
                        cells.push(Cell {
                            profile,
                            nu,
                            amplitude,
                            eps,
                            seed,
                            round: 0,
                        });
                    }
                }
            }
        }
        cells
    }

    pub fn cell_config(&self, cell: &Cell) -> RunConfig {
        let mut c = self.base.clone();
        c.physics.nu = cell.nu;
        if cell.profile == PresetName::Couette {
            c.physics.frame = FrameName::Couette;
        } else {
            c.physics.frame = FrameName::General;
        }
        c.shear.preset = cell.profile;
        c.data.eps = cell.eps;
        c.data.seed = cell.seed;
        c.solver.t_final = Some(self.t_final_factor / cell.nu.cbrt());
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match (&self.nu_ladder, self.nu.is_empty()) {
            (Some(_), false) => return bad("give either `nu` or `nu_ladder`, not both".into()),
            (None, true) => return bad("no viscosities: set `nu` or `nu_ladder`".into()),
            (Some(l), true) if !(l.min > 0.0 && l.max >= l.min && l.per_decade > 0) => {
                return bad(format!("invalid nu_ladder {l:?}"))
            }
            _ => {}
        }
        if self.nu_values().iter().any(|&nu| !(nu > 0.0) || !nu.is_finite()) {
            return bad("every nu must be positive".into());
        }
        match (self.amplitudes.is_empty(), self.eps.is_empty()) {
            (false, false) => return bad("give either `amplitudes` or `eps`, not both".into()),
            (true, true) => return bad("no eps rule: set `amplitudes` or `eps`".into()),
            _ => {}
        }
        if self.amplitudes.iter().chain(&self.eps).any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return bad("amplitudes and eps must be finite and >= 0".into());
        }
        if self.profiles.is_empty() || self.seeds.is_empty() {
            return bad("profiles and seeds must be non-empty".into());
        }
        if !(self.t_final_factor > 0.0) {
            return bad(format!("t_final_factor must be positive, got {}", self.t_final_factor));
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        for cell in self.coarse_cells() {
            self.cell_config(&cell)
                .validate()
                .map_err(|e| Error::Config(format!("cell {cell:?}: {e}")))?;
        }
        Ok(())
    }
}

/// One row of `records.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub cell: usize,
    pub profile: String,
    pub nu: f64,
    pub amplitude: Option<f64>,
    pub eps: f64,
    pub seed: u64,
    pub round: u32,
    pub status: String,
    pub classification: String,
    pub exit_code: i32,
    pub first_violation: Option<f64>,
    pub t_final: f64,
    pub t_reached: f64,
    pub steps: u64,
    pub sup_af: f64,
    pub energy_sum: f64,
    pub velocity_sum: f64,
    pub nz_l2hn: f64,
    pub k_measured: f64,
    pub k_bound: f64,
    pub rate: Option<f64>,
    pub time_to_efold: Option<f64>,
    pub budget_residual: Option<f64>,
    pub message: Option<String>,
    pub checkpoint: Option<String>,
}

impl SweepRecord {
    pub fn is_stable(&self) -> bool {
        self.status == RunStatus::Stable.as_str()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub cell: usize,
    pub runtime_secs: f64,
}

fn run_cell(plan: &SweepPlan, id: usize, cell: &Cell, cells_dir: &Path) -> (SweepRecord, Timing) {
    let start = Instant::now();
    let config = plan.cell_config(cell);
    let t_final = config.solver.t_final.unwrap_or(0.0);
    let mut rec = SweepRecord {
        cell: id,
        profile: cell.profile.as_str().to_string(),
        nu: cell.nu,
        amplitude: cell.amplitude,
        eps: cell.eps,
        seed: cell.seed,
        round: cell.round,
        status: "error".into(),
        classification: "none".into(),
        exit_code: 1,
        first_violation: None,
        t_final,
        t_reached: 0.0,
        steps: 0,
        sup_af: 0.0,
        energy_sum: 0.0,
        velocity_sum: 0.0,
        nz_l2hn: 0.0,
        k_measured: 0.0,
        k_bound: 0.0,
        rate: None,
        time_to_efold: None,
        budget_residual: None,
        message: None,
        checkpoint: None,
    };
    match simulate(&config, None) {
        Err(e) => rec.message = Some(e.to_string()),
        Ok(sim) => {
            let s = summarize(&config, &sim);
            let name = format!("cell_{id:04}.bin");
            let ck = Checkpoint {
                nu: cell.nu,
                n: config.physics.n,
                t: sim.state.t,
                frame: config.physics.frame.into(),
                f: sim.state.f.clone(),
            };
            match ck.save(&cells_dir.join(&name)) {
                Ok(()) => rec.checkpoint = Some(format!("cells/{name}")),
                Err(e) => log::warn!("cell {id}: checkpoint not written: {e}"),
            }
            rec.status = s.status.as_str().into();
            rec.classification = s.classification;
            rec.exit_code = s.exit_code;
            rec.first_violation = s.first_violation;
            rec.t_reached = s.t_reached;
            rec.steps = s.steps;
            rec.sup_af = s.sup_af;
            rec.energy_sum = s.energy_sum;
            rec.velocity_sum = s.velocity_sum;
            rec.nz_l2hn = s.nz_l2hn;
            rec.k_measured = s.k_measured;
            rec.k_bound = s.k_bound;
            rec.rate = s.rate.as_ref().map(|r| r.rate);
            rec.time_to_efold = s.rate.as_ref().and_then(|r| r.time_to_efold);
            rec.budget_residual = s.budget_residual;
            rec.message = s.message;
        }
    }
    (
        rec,
        Timing {
            cell: id,
            runtime_secs: start.elapsed().as_secs_f64(),
        },
    )
}

/// Next bisection amplitudes, one per `(profile, ν)` column with a bracket.
fn bisection_cells(plan: &SweepPlan, records: &[SweepRecord], round: u32) -> Vec<Cell> {
    let mut out = Vec::new();
    for &profile in &plan.profiles {
        for nu in plan.nu_values() {
            let levels = amplitude_levels(records, profile.as_str(), nu);
            let Some(hi) = levels.iter().find(|l| !l.1).map(|l| l.0) else {
                continue;
            };
            let Some(lo) = levels.iter().filter(|l| l.1 && l.0 < hi).map(|l| l.0).reduce(f64::max) else {
                continue;
            };
            if lo <= 0.0 {
                continue;
            }
            let a = (lo * hi).sqrt();
            for &seed in &plan.seeds {
                out.push(Cell {
                    profile,
                    nu,
                    amplitude: Some(a),
                    eps: a * nu.powf(plan.gamma),
                    seed,
                    round,
                });
            }
        }
    }
    out
}

/// `(A, every seed stable)` for one column, sorted by `A`.
fn amplitude_levels(records: &[SweepRecord], profile: &str, nu: f64) -> Vec<(f64, bool)> {
    let mut levels: Vec<(f64, bool)> = Vec::new();
    for r in records.iter().filter(|r| r.profile == profile && r.nu == nu) {
        let Some(a) = r.amplitude else { continue };
        match levels.iter_mut().find(|l| l.0 == a) {
            Some(l) => l.1 &= r.is_stable(),
            None => levels.push((a, r.is_stable())),
        }
    }
    levels.sort_by(|x, y| x.0.total_cmp(&y.0));
    levels
}

pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub timings: Vec<Timing>,
    pub summary: SweepSummary,
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Runs the plan and writes `sweep.toml`, `records.csv`, `timings.csv`,
/// `summary.json` and per-cell checkpoints under `out_dir`.
pub fn run_sweep(plan: &SweepPlan, out_dir: &Path, workers: Option<usize>) -> Result<SweepOutcome> {
    plan.validate()?;
    let workers = workers.or(plan.workers).unwrap_or_else(default_workers).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let cells_dir: PathBuf = out_dir.join("cells");
    std::fs::create_dir_all(&cells_dir).map_err(|e| Error::io(&cells_dir, e))?;
    atomic_write(&out_dir.join("sweep.toml"), plan.to_toml()?.as_bytes())?;

    let mut records = Vec::new();
    let mut timings = Vec::new();
    let mut batch = plan.coarse_cells();
    let mut round = 0;
    loop {
        let first_id = records.len();
        log::info!("round {round}: {} cells on {workers} workers", batch.len());
        let done: Vec<(SweepRecord, Timing)> = pool.install(|| {
            batch
                .par_iter()
                .enumerate()
                .map(|(i, c)| run_cell(plan, first_id + i, c, &cells_dir))
                .collect()
        });
        for (r, t) in done {
            records.push(r);
            timings.push(t);
        }
        round += 1;
        if plan.amplitudes.is_empty() || round as usize > plan.bisection_rounds {
            break;
        }
        batch = bisection_cells(plan, &records, round);
        if batch.is_empty() {
            break;
        }
    }

    let bytes = csv_bytes(&records)?;
    atomic_write(&out_dir.join("records.csv"), &bytes)?;
    write_csv(&out_dir.join("timings.csv"), &timings)?;
    let summary = summarize_records(&parse_records(&bytes)?);
    write_json(&out_dir.join("summary.json"), &summary)?;
    for s in &summary.suspicious {
        log::warn!("suspicious: {s}");
    }
    Ok(SweepOutcome {
        records,
        timings,
        summary,
    })
}

pub fn parse_records(bytes: &[u8]) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_reader(bytes);
    let rows: std::result::Result<Vec<SweepRecord>, _> = r.deserialize().collect();
    Ok(rows?)
}

pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>> {
    if !path.exists() {
        return Err(Error::Missing(format!("{} does not exist", path.display())));
    }
    parse_records(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub profile: String,
    pub nu: f64,
    pub cells: usize,
    pub stable_cells: usize,
    /// Largest tested `ε` at which every seed is stable.
    pub eps_star: Option<f64>,
    /// The amplitude `A` of that level, when the plan used `ε = A ν^γ`.
    pub a_star: Option<f64>,
    /// Smallest tested `ε` with a non-stable seed.
    pub eps_fail: Option<f64>,
    /// Whether `eps_star` is bracketed by a non-stable level above it.
    pub bracketed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFit {
    pub profile: String,
    /// Log-log slope of `ε*(ν)`, or `None` when fewer than two columns
    /// have a positive `ε*`.
    pub gamma_hat: Option<f64>,
    pub status: String,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub cells: usize,
    pub stable_cells: usize,
    pub all_stable: bool,
    pub max_k_measured: f64,
    pub max_k_bound: f64,
    pub boundaries: Vec<Boundary>,
    pub fits: Vec<BoundaryFit>,
    /// Non-monotone classification along `ε` for a fixed seed.
    pub suspicious: Vec<String>,
}

fn push_unique<T: PartialEq + Clone>(v: &mut Vec<T>, x: &T) {
    if !v.contains(x) {
        v.push(x.clone());
    }
}

/// Summary that depends on the records alone.
pub fn summarize_records(records: &[SweepRecord]) -> SweepSummary {
    let mut profiles: Vec<String> = Vec::new();
    for r in records {
        push_unique(&mut profiles, &r.profile);
    }
    let mut boundaries = Vec::new();
    let mut fits = Vec::new();
    let mut suspicious = Vec::new();
    for p in &profiles {
        let mut nus: Vec<f64> = Vec::new();
        for r in records.iter().filter(|r| &r.profile == p) {
            push_unique(&mut nus, &r.nu);
        }
        nus.sort_by(f64::total_cmp);
        let mut fit_pts = (Vec::new(), Vec::new());
        for &nu in &nus {
            let col: Vec<&SweepRecord> = records.iter().filter(|r| &r.profile == p && r.nu == nu).collect();
            // (eps, amplitude, all stable)
            let mut levels: Vec<(f64, Option<f64>, bool)> = Vec::new();
            for r in &col {
                match levels.iter_mut().find(|l| l.0 == r.eps) {
                    Some(l) => l.2 &= r.is_stable(),
                    None => levels.push((r.eps, r.amplitude, r.is_stable())),
                }
            }
            levels.sort_by(|x, y| x.0.total_cmp(&y.0));
            let star = levels.iter().filter(|l| l.2).last();
            let eps_fail = levels.iter().find(|l| !l.2).map(|l| l.0);
            let eps_star = star.map(|l| l.0);
            if let Some(e) = eps_star.filter(|e| *e > 0.0) {
                fit_pts.0.push(nu);
                fit_pts.1.push(e);
            }
            boundaries.push(Boundary {
                profile: p.clone(),
                nu,
                cells: col.len(),
                stable_cells: col.iter().filter(|r| r.is_stable()).count(),
                eps_star,
                a_star: star.and_then(|l| l.1),
                eps_fail,
                bracketed: matches!((eps_star, eps_fail), (Some(s), Some(f)) if f > s),
            });
            let mut seeds: Vec<u64> = Vec::new();
            for r in &col {
                push_unique(&mut seeds, &r.seed);
            }
            for seed in seeds {
                let mut run: Vec<&&SweepRecord> = col.iter().filter(|r| r.seed == seed).collect();
                run.sort_by(|x, y| x.eps.total_cmp(&y.eps));
                if let Some(first_bad) = run.iter().position(|r| !r.is_stable()) {
                    for r in &run[first_bad + 1..] {
                        if r.is_stable() {
                            suspicious.push(format!(
                                "{p} nu={nu} seed={seed}: stable at eps={} above non-stable eps={}",
                                r.eps, run[first_bad].eps
                            ));
                        }
                    }
                }
            }
        }
        let gamma_hat = if fit_pts.0.len() >= 2 {
            power_law_exponent(&fit_pts.0, &fit_pts.1).filter(|g| g.is_finite())
        } else {
            None
        };
        fits.push(BoundaryFit {
            profile: p.clone(),
            gamma_hat,
            status: if gamma_hat.is_some() { "fitted" } else { "undefined" }.into(),
            points: fit_pts.0.len(),
        });
    }
    let stable_cells = records.iter().filter(|r| r.is_stable()).count();
    SweepSummary {
        cells: records.len(),
        stable_cells,
        all_stable: stable_cells == records.len(),
        max_k_measured: records.iter().map(|r| r.k_measured).fold(0.0, f64::max),
        max_k_bound: records.iter().map(|r| r.k_bound).fold(0.0, f64::max),
        boundaries,
        fits,
        suspicious,
    }
}

/// `summary.json` text recomputed from a records file.
pub fn summary_json_from_csv(path: &Path) -> Result<String> {
    let mut text = serde_json::to_string_pretty(&summarize_records(&read_records(path)?))?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(eps: f64, seed: u64, status: RunStatus) -> SweepRecord {
        SweepRecord {
            cell: 0,
            profile: "couette".into(),
            nu: 0.01,
            amplitude: Some(eps / 0.1),
            eps,
            seed,
            round: 0,
            status: status.as_str().into(),
            classification: "stable".into(),
            exit_code: status.exit_code(),
            first_violation: None,
            t_final: 1.0,
            t_reached: 1.0,
            steps: 1,
            sup_af: 0.0,
            energy_sum: 0.0,
            velocity_sum: 0.0,
            nz_l2hn: 0.0,
            k_measured: 0.0,
            k_bound: 0.0,
            rate: None,
            time_to_efold: None,
            budget_residual: None,
            message: Some("a, \"quoted\" message".into()),
            checkpoint: None,
        }
    }

    #[test]
    fn ladder_values() {
        let l = NuLadder {
            min: 1e-4,
            max: 1e-1,
            per_decade: 2,
        };
        let v = l.values();
        assert_eq!(v.len(), 7);
        assert!((v[6] - 1e-1).abs() < 1e-15);
    }

    #[test]
    fn plan_validation() {
        assert!(SweepPlan::from_toml("nu = [0.01]\neps = [0.0]").is_ok());
        assert!(SweepPlan::from_toml("eps = [0.0]").is_err());
        assert!(SweepPlan::from_toml("nu = [0.01]\neps = [0.0]\namplitudes = [1.0]").is_err());
        assert!(SweepPlan::from_toml("nu = [0.01]\neps = [0.0]\nbase.data.k_max = 90").is_err());
        let p = SweepPlan::from_toml("nu = [0.01]\namplitudes = [0.1, 0.2]\nseeds = [1, 2]").unwrap();
        assert_eq!(p.coarse_cells().len(), 4);
        assert_eq!(SweepPlan::from_toml(&p.to_toml().unwrap()).unwrap(), p);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rs = vec![rec(0.1 / 3.0, 1, RunStatus::Stable), rec(0.2, 2, RunStatus::Violated)];
        let bytes = csv_bytes(&rs).unwrap();
        assert_eq!(parse_records(&bytes).unwrap(), rs);
    }

    #[test]
    fn boundary_and_monotonicity() {
        let rs = vec![
            rec(0.01, 1, RunStatus::Stable),
            rec(0.02, 1, RunStatus::Violated),
            rec(0.04, 1, RunStatus::Stable),
        ];
        let s = summarize_records(&rs);
        assert_eq!(s.boundaries[0].eps_star, Some(0.04));
        assert_eq!(s.boundaries[0].eps_fail, Some(0.02));
        assert_eq!(s.suspicious.len(), 1);
        assert_eq!(s.fits[0].status, "undefined");
    }

    #[test]
    fn only_zero_cells_leave_gamma_undefined() {
        let mut rs = vec![rec(0.0, 1, RunStatus::Stable), rec(0.0, 1, RunStatus::Stable)];
        rs[1].nu = 0.001;
        let s = summarize_records(&rs);
        assert!(s.all_stable);
        assert!(s.fits[0].gamma_hat.is_none());
        assert_eq!(s.fits[0].status, "undefined");
    }

    #[test]
    fn zero_eps_sweep_runs_and_is_deterministic() {
        let plan = SweepPlan::from_toml(
            "nu = [0.05, 0.1]\neps = [0.0]\nt_final_factor = 0.5\n[base.grid]\nn_z = 8\nn_v = 32",
        )
        .unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let out = run_sweep(&plan, a.path(), Some(2)).unwrap();
        run_sweep(&plan, b.path(), Some(1)).unwrap();
        assert!(out.summary.all_stable);
        let ra = std::fs::read(a.path().join("records.csv")).unwrap();
        assert_eq!(ra, std::fs::read(b.path().join("records.csv")).unwrap());
        let s = std::fs::read_to_string(a.path().join("summary.json")).unwrap();
        assert_eq!(s, summary_json_from_csv(&a.path().join("records.csv")).unwrap());
    }
}
