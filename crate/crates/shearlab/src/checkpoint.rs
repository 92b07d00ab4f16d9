//! Binary checkpoints.
//!
//! Layout, all little-endian:
//!
//! | bytes | content                                   |
//! |-------|-------------------------------------------|
//! | 8     | magic `SHRLCKPT`                          |
//! | 4     | format version (u32, currently 1)         |
//! | 4, 4  | `n_z`, `n_v` (u32)                        |
//! | 8     | `L_v` (f64)                               |
//! | 8, 8  | `ν`, `N` (f64)                            |
//! | 8     | `t` (f64)                                 |
//! | 1     | frame tag (0 Couette, 1 general)          |
//! | 16·n  | `(re, im)` pairs in row-major `(k, η)` order |

use std::io::{Read, Write};
use std::path::Path;

use shearlab_core::solver::Frame;
use shearlab_core::{Complex64, FrequencyGrid, SpectralField};

use crate::error::{Error, Result};
use crate::io::atomic_write;

pub const MAGIC: &[u8; 8] = b"SHRLCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub nu: f64,
    pub n: f64,
    pub t: f64,
    pub frame: Frame,
    pub f: SpectralField,
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let g = self.f.grid();
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(g.n_z() as u32).to_le_bytes())?;
        w.write_all(&(g.n_v() as u32).to_le_bytes())?;
        for x in [g.l_v(), self.nu, self.n, self.t] {
            w.write_all(&x.to_le_bytes())?;
        }
        w.write_all(&[self.frame.tag()])?;
        for c in self.f.coeffs() {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(53 + 16 * self.f.coeffs().len());
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != MAGIC {
            return Err(bad("wrong magic"));
        }
        let mut u = [0u8; 4];
        let mut read_u32 = |r: &mut R| -> Result<u32> {
            r.read_exact(&mut u).map_err(|_| bad("truncated header"))?;
            Ok(u32::from_le_bytes(u))
        };
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let n_z = read_u32(&mut r)? as usize;
        let n_v = read_u32(&mut r)? as usize;
        let read_f64 = |r: &mut R| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(|_| bad("truncated data"))?;
            Ok(f64::from_le_bytes(b))
        };
        let l_v = read_f64(&mut r)?;
        let nu = read_f64(&mut r)?;
        let n = read_f64(&mut r)?;
        let t = read_f64(&mut r)?;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag).map_err(|_| bad("truncated header"))?;
        let frame = Frame::from_tag(tag[0]).ok_or_else(|| bad("unknown frame tag"))?;
        let grid = FrequencyGrid::new(n_z, n_v, l_v)?;
        let mut coeffs = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            coeffs.push(Complex64::new(re, im));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest).map_err(|e| Error::Checkpoint(e.to_string()))? != 0 {
            return Err(bad("trailing bytes"));
        }
        Ok(Self {
            nu,
            n,
            t,
            frame,
            f: SpectralField::from_coeffs(grid, coeffs)?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(bytes.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn bit_exact_round_trip(
            vals in prop::collection::vec(any::<(f64, f64)>(), 8 * 16),
            t in any::<f64>(), nu in any::<f64>(), general in any::<bool>()
        ) {
            let grid = FrequencyGrid::new(8, 16, 32.0).unwrap();
            let f = SpectralField::from_coeffs(grid, vals.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap();
            let c = Checkpoint { nu, n: 2.0, t, frame: if general { Frame::General } else { Frame::Couette }, f };
            let bytes = c.to_bytes();
            let back = Checkpoint::read_from(bytes.as_slice()).unwrap();
            prop_assert_eq!(back.to_bytes(), bytes);
        }
    }

    #[test]
    fn rejects_corruption() {
        let grid = FrequencyGrid::new(8, 8, 32.0).unwrap();
        let c = Checkpoint {
            nu: 0.1,
            n: 2.0,
            t: 1.0,
            frame: Frame::Couette,
            f: SpectralField::zeros(grid),
        };
        let mut bytes = c.to_bytes();
        assert!(Checkpoint::read_from(&bytes[..bytes.len() - 1]).is_err());
        bytes.push(0);
        assert!(Checkpoint::read_from(bytes.as_slice()).is_err());
        bytes[0] = b'X';
        assert!(Checkpoint::read_from(bytes.as_slice()).is_err());
    }
}
