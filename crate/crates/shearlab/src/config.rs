//! Run configuration: a TOML document with one table per concern.
//!
//! ```toml
//! [grid]
//! n_z = 32
//! n_v = 256
//! l_v = 32.0
//!
//! [physics]
//! nu = 0.01
//! n = 2.0
//! frame = "couette"        # or "general"
//!
//! [shear]
//! preset = "gauss_bump"    # couette | gauss_bump | tanh_defect | table
//! amplitude = 1.0
//! width = 2.0
//! delta = 0.01             # rescale to this delta; omit to keep the amplitude
//! table = "profile.txt"    # for preset = "table": lines of `v g(v)`
//!
//! [data]
//! spec = "random_band"     # single_mode | random_band | dipole
//! eps = 1e-3
//! seed = 7
//! k_max = 2
//! j_max = 8
//!
//! [solver]
//! t_final = 30.0           # default 3 nu^(-1/3)
//! dt = 0.01                # fixed step; omit for the CFL policy
//! scheme = "rk4"           # or "heun"
//!
//! [output]
//! frame_every = 10
//! checkpoint_interval_secs = 300.0
//! ```
//!
//! Every omitted key takes the default shown by [`RunConfig::default`]; the
//! resolved document is echoed into each run directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shearlab_core::shear::{InversionMethod, InversionOptions, ShearPreset, ShearProfile};
use shearlab_core::solver::{initial_data, DataSpec, DtPolicy, Frame, Scheme, SolverConfig};
use shearlab_core::transform::FftBackend;
use shearlab_core::{FrequencyGrid, SpectralField};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n_z: usize,
    pub n_v: usize,
    pub l_v: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n_z: 32,
            n_v: 256,
            l_v: FrequencyGrid::DEFAULT_L_V,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FrameName {
    #[default]
    Couette,
    General,
}

impl From<FrameName> for Frame {
    fn from(f: FrameName) -> Self {
        match f {
            FrameName::Couette => Frame::Couette,
            FrameName::General => Frame::General,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsSection {
    pub nu: f64,
    pub n: f64,
    pub frame: FrameName,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self {
            nu: 1e-2,
            n: 2.0,
            frame: FrameName::Couette,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    #[default]
    Couette,
    GaussBump,
    TanhDefect,
    Table,
}

impl PresetName {
    pub fn as_str(&self) -> &'static str {
        match self {
            PresetName::Couette => "couette",
            PresetName::GaussBump => "gauss_bump",
            PresetName::TanhDefect => "tanh_defect",
            PresetName::Table => "table",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InversionName {
    #[default]
    Picard,
    Newton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShearSection {
    pub preset: PresetName,
    pub amplitude: f64,
    pub width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    /// Sobolev index `s` of the profile norms.
    pub regularity: f64,
    pub inversion: InversionName,
}

impl Default for ShearSection {
    fn default() -> Self {
        Self {
            preset: PresetName::Couette,
            amplitude: 1.0,
            width: 2.0,
            delta: Some(0.01),
            table: None,
            regularity: 4.0,
            inversion: InversionName::Picard,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpecName {
    SingleMode,
    #[default]
    RandomBand,
    Dipole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub spec: SpecName,
    pub eps: f64,
    pub seed: u64,
    /// Mode labels for `single_mode`.
    pub k: i64,
    pub j: i64,
    /// Band for `random_band`.
    pub k_max: i64,
    pub j_max: i64,
    /// Window (random_band) or dipole width; defaults to `L_v/10` and 2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            spec: SpecName::RandomBand,
            eps: 1e-3,
            seed: 0,
            k: 1,
            j: 0,
            k_max: 2,
            j_max: 8,
            sigma: None,
        }
    }
}

impl DataSection {
    pub fn data_spec(&self) -> DataSpec {
        match self.spec {
            SpecName::SingleMode => DataSpec::SingleMode { k: self.k, j: self.j },
            SpecName::RandomBand => DataSpec::RandomBand {
                k_max: self.k_max,
                j_max: self.j_max,
                sigma: self.sigma,
            },
            SpecName::Dipole => DataSpec::Dipole {
                sigma: self.sigma.unwrap_or(2.0),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    #[default]
    Rk4,
    Heun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub dt_max: f64,
    pub cfl_safety: f64,
    pub scheme: SchemeName,
    /// Drop the transport term.
    pub linear: bool,
    pub elliptic_tol: f64,
    pub shear_refresh: usize,
    pub tail_limit: f64,
    pub spill_warn: f64,
    pub spill_limit: f64,
    pub monitor_every: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            t_final: None,
            dt: None,
            dt_max: 0.05,
            cfl_safety: 0.4,
            scheme: SchemeName::Rk4,
            linear: false,
            elliptic_tol: 1e-10,
            shear_refresh: 10,
            tail_limit: 1e-8,
            spill_warn: 1e-6,
            spill_limit: 1e-3,
            monitor_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Keep every this many frames in the CSV (the budget uses all of them).
    pub frame_every: usize,
    /// Wall-clock interval between checkpoints; 0 disables periodic ones.
    pub checkpoint_interval_secs: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            frame_every: 10,
            checkpoint_interval_secs: 300.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub physics: PhysicsSection,
    pub shear: ShearSection,
    pub data: DataSection,
    pub solver: SolverSection,
    pub output: OutputSection,
}

/// Default run length `3 ν^{-1/3}`.
pub fn default_t_final(nu: f64) -> f64 {
    3.0 / nu.cbrt()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// The document with every default spelled out.
    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(&self.resolved())?)
    }

    /// Fills in `t_final`.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        if c.solver.t_final.is_none() && c.physics.nu > 0.0 {
            c.solver.t_final = Some(default_t_final(c.physics.nu));
        }
        c
    }

    pub fn t_final(&self) -> Result<f64> {
        match self.solver.t_final {
            Some(t) => Ok(t),
            None if self.physics.nu > 0.0 => Ok(default_t_final(self.physics.nu)),
            None => Err(Error::Config("nu = 0 needs an explicit solver.t_final".into())),
        }
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        Ok(FrequencyGrid::new(self.grid.n_z, self.grid.n_v, self.grid.l_v)?)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let mut c = SolverConfig::new(self.grid()?, self.physics.nu, self.t_final()?);
        c.frame = self.physics.frame.into();
        c.n = self.physics.n;
        c.dt = match s.dt {
            Some(dt) => DtPolicy::Fixed(dt),
            None => DtPolicy::Cfl {
                dt_max: s.dt_max,
                safety: s.cfl_safety,
            },
        };
        c.scheme = match s.scheme {
            SchemeName::Rk4 => Scheme::Rk4,
            SchemeName::Heun => Scheme::Heun,
        };
        c.linear_only = s.linear;
        c.elliptic_tol = s.elliptic_tol;
        c.shear_refresh = s.shear_refresh;
        c.tail_limit = s.tail_limit;
        c.spill_warn = s.spill_warn;
        c.spill_limit = s.spill_limit;
        c.monitor_every = s.monitor_every;
        c.inversion = InversionOptions {
            method: match self.shear.inversion {
                InversionName::Picard => InversionMethod::Picard,
                InversionName::Newton => InversionMethod::Newton,
            },
            ..Default::default()
        };
        Ok(c)
    }

    pub fn shear_preset(&self) -> Result<ShearPreset> {
        let s = &self.shear;
        Ok(match s.preset {
            PresetName::Couette => ShearPreset::Couette,
            PresetName::GaussBump => ShearPreset::GaussBump {
                amplitude: s.amplitude,
                width: s.width,
                target_delta: s.delta,
            },
            PresetName::TanhDefect => ShearPreset::TanhDefect {
                amplitude: s.amplitude,
                width: s.width,
                target_delta: s.delta,
            },
            PresetName::Table => {
                let path = s
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::Config("preset = \"table\" needs shear.table".into()))?;
                ShearPreset::Table(read_table(path)?)
            }
        })
    }

    /// The shear profile, or `None` in the Couette frame.
    pub fn profile(&self, backend: &mut dyn FftBackend) -> Result<Option<ShearProfile>> {
        if self.physics.frame == FrameName::Couette {
            return Ok(None);
        }
        let p = self
            .shear_preset()?
            .build(backend, self.grid.n_v, self.grid.l_v, self.shear.regularity)?;
        p.validate(backend, shearlab_core::shear::DEFAULT_DELTA_MAX)?;
        Ok(Some(p))
    }

    pub fn initial(&self, backend: &mut dyn FftBackend) -> Result<SpectralField> {
        let d = &self.data;
        Ok(initial_data(
            &d.data_spec(),
            &self.grid()?,
            d.eps,
            self.physics.n,
            d.seed,
            backend,
        )?)
    }

    /// Checks everything that can be checked without running the solver.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.solver_config()?.validate()?;
        if !(self.physics.nu >= 0.0) {
            return Err(Error::Config(format!("nu must be >= 0, got {}", self.physics.nu)));
        }
        if self.output.frame_every == 0 {
            return Err(Error::Config("output.frame_every must be positive".into()));
        }
        let d = &self.data;
        let (k, j) = match d.spec {
            SpecName::SingleMode => (d.k.abs(), d.j.abs()),
            SpecName::RandomBand => (d.k_max, d.j_max),
            SpecName::Dipole => (1, 0),
        };
        if k > grid.k_cut() || j > grid.j_cut() {
            return Err(Error::Core(shearlab_core::Error::OutsideDealiasBand(format!(
                "|k| = {k}, |j| = {j} against the retained band |k| <= {}, |j| <= {}",
                grid.k_cut(),
                grid.j_cut()
            ))));
        }
        if !(d.eps >= 0.0) || !d.eps.is_finite() {
            return Err(Error::Config(format!("eps must be >= 0, got {}", d.eps)));
        }
        if self.physics.frame == FrameName::General {
            self.shear_preset()?;
        }
        Ok(())
    }
}

/// Reads `v g(v)` pairs, one per line; `#` starts a comment.
pub fn read_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty());
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|x| x.parse().ok())
                .ok_or_else(|| Error::Config(format!("{}:{}: expected `v g`", path.display(), no + 1)))
        };
        out.push((parse(it.next())?, parse(it.next())?));
    }
    Ok(out)
}
