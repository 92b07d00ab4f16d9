//! Atomic file output and the per-run CSV layout.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use shearlab_core::diagnostics::DiagnosticFrame;

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Missing(e.to_string()))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    atomic_write(path, &csv_bytes(rows)?)
}

/// One row of `frames.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct FrameRow {
    pub t: f64,
    #[serde(rename = "E_A")]
    pub e_a: f64,
    #[serde(rename = "D_visc")]
    pub d_visc: f64,
    #[serde(rename = "D_ghost")]
    pub d_ghost: f64,
    #[serde(rename = "nz_HN")]
    pub nz_hn: f64,
    #[serde(rename = "z_HN")]
    pub z_hn: f64,
    pub psi_nz: f64,
    #[serde(rename = "u0_L2")]
    pub u0_l2: f64,
    pub budget_residual: f64,
    #[serde(rename = "nz_L2")]
    pub nz_l2: f64,
    pub grad_l2: f64,
}

impl From<&DiagnosticFrame> for FrameRow {
    fn from(f: &DiagnosticFrame) -> Self {
        Self {
            t: f.t,
            e_a: f.e_a,
            d_visc: f.d_visc,
            d_ghost: f.d_ghost,
            nz_hn: f.nz_hn,
            z_hn: f.z_hn,
            psi_nz: f.psi_nz,
            u0_l2: f.u0_l2,
            budget_residual: f.budget_residual,
            nz_l2: f.nz_l2,
            grad_l2: f.grad_l2,
        }
    }
}

/// Every `every`-th frame plus the last one.
pub fn decimate(frames: &[DiagnosticFrame], every: usize) -> Vec<FrameRow> {
    let every = every.max(1);
    let mut rows: Vec<FrameRow> = frames.iter().step_by(every).map(FrameRow::from).collect();
    if let Some(last) = frames.last() {
        if (frames.len() - 1) % every != 0 {
            rows.push(last.into());
        }
    }
    rows
}

pub fn read_frames(path: &Path) -> Result<Vec<FrameRow>> {
    if !path.exists() {
        return Err(Error::Missing(format!("{} does not exist", path.display())));
    }
    let mut r = csv::Reader::from_path(path)?;
    let rows: std::result::Result<Vec<FrameRow>, _> = r.deserialize().collect();
    rows.map_err(|e| Error::Missing(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.txt");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn decimation_keeps_the_last_frame() {
        let frames: Vec<DiagnosticFrame> = (0..12)
            .map(|i| DiagnosticFrame {
                t: i as f64,
                ..Default::default()
            })
            .collect();
        let ts: Vec<f64> = decimate(&frames, 5).iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0.0, 5.0, 10.0, 11.0]);
        let ts: Vec<f64> = decimate(&frames[..11], 5).iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0.0, 5.0, 10.0]);
    }

    #[test]
    fn frames_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("frames.csv");
        let frames = vec![DiagnosticFrame {
            t: 0.5,
            e_a: 1.25,
            ..Default::default()
        }];
        write_csv(&p, &decimate(&frames, 1)).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t,E_A,D_visc,D_ghost,nz_HN,z_HN,psi_nz,u0_L2,budget_residual"));
        assert_eq!(read_frames(&p).unwrap()[0].e_a, 1.25);
    }
}
