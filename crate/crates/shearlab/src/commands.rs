//! The `linear` and `multiplier-check` subcommands.

use std::path::Path;

use serde::Serialize;
use shearlab_core::kelvin::{linear_series, KelvinMode};
use shearlab_core::multiplier::{default_time_ladder, verify_conditions, ConditionCheck, ConditionReport};
use shearlab_core::FrequencyGrid;

use crate::error::Result;
use crate::io::{write_csv, write_json};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinearRow {
    pub t: f64,
    #[serde(rename = "|omega|")]
    pub omega: f64,
    #[serde(rename = "|psi|")]
    pub psi: f64,
    #[serde(rename = "|dz psi|")]
    pub dz_psi: f64,
    #[serde(rename = "|dy psi|")]
    pub dy_psi: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearReport {
    pub k: i64,
    pub eta0: f64,
    pub nu: f64,
    pub t_final: f64,
    pub critical_time: Option<f64>,
    pub efolding_time: Option<f64>,
    /// `|ψ̂|` at the critical time over `|ψ̂(0)|`.
    pub orr_amplification: Option<f64>,
}

/// Samples the Kelvin solution of one mode on `samples + 1` uniform times and
/// writes `linear.csv` and `linear.json`.
pub fn linear(k: i64, eta0: f64, nu: f64, t_final: f64, samples: usize, out: &Path) -> Result<LinearReport> {
    let mode = KelvinMode::unit(k, eta0, nu)?;
    let n = samples.max(1);
    let times: Vec<f64> = (0..=n).map(|i| t_final * i as f64 / n as f64).collect();
    let rows: Vec<LinearRow> = linear_series(&mode, &times)?
        .into_iter()
        .map(|s| LinearRow {
            t: s.t,
            omega: s.omega,
            psi: s.psi,
            dz_psi: s.dz_psi,
            dy_psi: s.dy_psi,
            envelope: s.envelope,
        })
        .collect();
    let orr = match mode.critical_time() {
        Some(tc) if tc >= 0.0 && nu == 0.0 => {
            let p0 = mode.evolve(0.0)?.psi_hat.norm();
            Some(mode.evolve(tc)?.psi_hat.norm() / p0)
        }
        _ => None,
    };
    let report = LinearReport {
        k,
        eta0,
        nu,
        t_final,
        critical_time: mode.critical_time(),
        efolding_time: mode.efolding_time(),
        orr_amplification: orr,
    };
    write_csv(&out.join("linear.csv"), &rows)?;
    write_json(&out.join("linear.json"), &report)?;
    Ok(report)
}

fn check_json(c: &ConditionCheck) -> serde_json::Value {
    serde_json::json!({
        "passed": c.passed,
        "worst": c.worst,
        "threshold": c.threshold,
        "witness": { "t": c.witness.t, "k": c.witness.k, "xi": c.witness.xi, "eta": c.witness.eta },
    })
}

pub fn condition_json(r: &ConditionReport) -> serde_json::Value {
    serde_json::json!({
        "nu": r.nu,
        "n": r.n,
        "samples": r.samples,
        "passed": r.passed(),
        "note": r.note,
        "a": check_json(&r.a),
        "b": check_json(&r.b),
        "b_upper": check_json(&r.b_upper),
        "c": check_json(&r.c),
        "d": check_json(&r.d),
        "e": check_json(&r.e),
        "f": check_json(&r.f),
    })
}

/// Checks the multiplier conditions for each `ν` on the default time ladder
/// and writes `multiplier.json`. Returns whether every check passed.
pub fn multiplier_check(grid: &FrequencyGrid, nus: &[f64], n: f64, points: usize, out: &Path) -> Result<bool> {
    let mut reports = Vec::new();
    let mut ok = true;
    for &nu in nus {
        let r = verify_conditions(grid, nu, n, &default_time_ladder(nu, points))?;
        log::info!("nu = {nu:e}: {}", if r.passed() { "pass" } else { "FAIL" });
        ok &= r.passed();
        reports.push(condition_json(&r));
    }
    write_json(
        &out.join("multiplier.json"),
        &serde_json::json!({ "n_z": grid.n_z(), "n_v": grid.n_v(), "l_v": grid.l_v(), "passed": ok, "reports": reports }),
    )?;
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_csv_layout() {
        let d = tempfile::tempdir().unwrap();
        let r = linear(1, 10.0, 0.0, 20.0, 40, d.path()).unwrap();
        assert!((r.orr_amplification.unwrap() - 101.0).abs() < 1e-10);
        let text = std::fs::read_to_string(d.path().join("linear.csv")).unwrap();
        assert!(text.starts_with("t,|omega|,|psi|,|dz psi|,|dy psi|,envelope\n"));
        assert_eq!(text.lines().count(), 42);
    }

    #[test]
    fn multiplier_check_writes_report() {
        let d = tempfile::tempdir().unwrap();
        let g = FrequencyGrid::new(8, 16, 32.0).unwrap();
        assert!(multiplier_check(&g, &[0.1], 2.0, 8, d.path()).unwrap());
        assert!(d.path().join("multiplier.json").exists());
    }
}
