//! File formats, configuration, the rustfft backend and the command-line
//! drivers built on `shearlab-core`.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;
pub mod fft;
pub mod io;
pub mod plot;
pub mod run;
pub mod sweep;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use fft::RustFftBackend;
pub use run::{run_single, simulate, RunOutcome, RunStatus, RunSummary};
