//! Gnuplot scripts for run and sweep directories.
//!
//! Nothing is rendered here; each script writes a PNG when fed to
//! `gnuplot` from inside the directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::{atomic_write, read_frames};
use crate::run::RunSummary;
use crate::sweep::{read_records, summarize_records};

fn header(out: &str) -> String {
    format!("set terminal pngcairo size 900,600\nset output '{out}'\nset datafile separator ','\nset grid\n")
}

fn write(dir: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    atomic_write(&p, text.as_bytes())?;
    written.push(p);
    Ok(())
}

/// Writes plot scripts for a run directory (`frames.csv` + `summary.json`)
/// or a sweep directory (`records.csv`). Returns the files written.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.join("records.csv").exists() {
        sweep_plots(dir)
    } else if dir.join("frames.csv").exists() {
        run_plots(dir)
    } else {
        Err(Error::Missing(format!(
            "{}: neither frames.csv nor records.csv found",
            dir.display()
        )))
    }
}

/// 1-based gnuplot column of `name` in the header of `path`.
fn column(path: &Path, name: &str) -> Result<usize> {
    let mut r = csv::Reader::from_path(path)?;
    r.headers()?
        .iter()
        .position(|h| h == name)
        .map(|i| i + 1)
        .ok_or_else(|| Error::Missing(format!("{}: no column `{name}`", path.display())))
}

fn run_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let frames_path = dir.join("frames.csv");
    let frames = read_frames(&frames_path)?;
    let (ct, cn, cb) = (
        column(&frames_path, "t")?,
        column(&frames_path, "nz_L2")?,
        column(&frames_path, "budget_residual")?,
    );
    let first = frames
        .first()
        .ok_or_else(|| Error::Missing("frames.csv has no rows".into()))?;
    let summary_path = dir.join("summary.json");
    if !summary_path.exists() {
        return Err(Error::Missing(format!("{} does not exist", summary_path.display())));
    }
    let text = std::fs::read_to_string(&summary_path).map_err(|e| Error::io(&summary_path, e))?;
    let summary: RunSummary = serde_json::from_str(&text)?;
    let mut written = Vec::new();

    // Fitted overlay when the run was long enough; otherwise the single-mode
    // shape exp(-ν t³/3) through the first sample.
    let (c, b, label) = match &summary.rate {
        Some(r) => (r.rate, r.intercept, "fit"),
        None => (1.0 / 3.0, first.nz_l2.max(f64::MIN_POSITIVE).ln(), "reference"),
    };
    let mut s = header("decay.png");
    writeln!(s, "set logscale y\nset xlabel 't'\nset ylabel '|f_{{!=}}|_{{L^2}}'").unwrap();
    writeln!(s, "nu = {:e}\nc = {:e}\nb = {:e}", summary.nu, c, b).unwrap();
    writeln!(
        s,
        "plot 'frames.csv' using {ct}:{cn} skip 1 with points pt 7 ps 0.5 title 'data', \\\n     exp(b - c*nu*x**3) with lines lw 2 title '{label}: exp(-c nu t^3)'"
    )
    .unwrap();
    write(dir, "decay.gp", &s, &mut written)?;

    let mut s = header("budget.png");
    writeln!(s, "set logscale y\nset xlabel 't'\nset ylabel 'budget residual'").unwrap();
    writeln!(
        s,
        "plot 'frames.csv' using {ct}:(abs(${cb})) skip 1 with linespoints title 'normalized residual'"
    )
    .unwrap();
    write(dir, "budget.gp", &s, &mut written)?;
    Ok(written)
}

fn sweep_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let summary = summarize_records(&read_records(&dir.join("records.csv"))?);
    let mut written = Vec::new();
    for fit in &summary.fits {
        let p = &fit.profile;
        let pts: Vec<(f64, f64)> = summary
            .boundaries
            .iter()
            .filter(|b| &b.profile == p)
            .filter_map(|b| b.eps_star.filter(|e| *e > 0.0).map(|e| (b.nu.log10(), e.log10())))
            .collect();
        let mut data = String::from("log10_nu,log10_eps_star\n");
        for (x, y) in &pts {
            writeln!(data, "{x},{y}").unwrap();
        }
        write(dir, &format!("boundary_{p}.csv"), &data, &mut written)?;

        let mut s = header(&format!("boundary_{p}.png"));
        writeln!(s, "set xlabel 'log10 nu'\nset ylabel 'log10 eps*'\nset title '{p}'").unwrap();
        match fit.gamma_hat {
            Some(g) => {
                let n = pts.len() as f64;
                let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
                let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
                writeln!(s, "g = {g:e}\nb = {:e}", my - g * mx).unwrap();
                writeln!(
                    s,
                    "plot 'boundary_{p}.csv' using 1:2 skip 1 with points pt 7 title 'eps*', \\\n     b + g*x with lines title sprintf('slope %.3f', g)"
                )
                .unwrap();
            }
            None => {
                writeln!(s, "# slope undefined: fewer than two columns with eps* > 0").unwrap();
                writeln!(s, "plot 'boundary_{p}.csv' using 1:2 skip 1 with points pt 7 title 'eps*'").unwrap();
            }
        }
        write(dir, &format!("boundary_{p}.gp"), &s, &mut written)?;
    }
    Ok(written)
}
