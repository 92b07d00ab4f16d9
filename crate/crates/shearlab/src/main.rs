use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shearlab::commands::{linear, multiplier_check};
use shearlab::plot::emit_plots;
use shearlab::run::EXIT_CONFIG;
use shearlab::sweep::{run_sweep, SweepPlan};
use shearlab::{run_single, Error, RunConfig};
use shearlab_core::FrequencyGrid;

#[derive(Parser)]
#[command(name = "shearlab", version, about = "Spectral experiments on perturbed Couette flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write a run directory.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long, default_value = "run")]
        out: PathBuf,
        /// Replaces `data.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tabulate the exact linear solution of one Kelvin mode.
    Linear {
        #[arg(long, default_value_t = 1)]
        k: i64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        eta0: f64,
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
        #[arg(long, default_value_t = 50.0)]
        t_final: f64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(short, long, default_value = "linear")]
        out: PathBuf,
    },
    /// Check the ghost-multiplier conditions on a grid.
    MultiplierCheck {
        #[arg(long, num_args = 1.., default_values_t = [1e-1, 1e-2, 1e-3])]
        nu: Vec<f64>,
        #[arg(long, default_value_t = 2.0)]
        n: f64,
        #[arg(long, default_value_t = 64)]
        nz: usize,
        #[arg(long, default_value_t = 256)]
        nv: usize,
        #[arg(long, default_value_t = FrequencyGrid::DEFAULT_L_V)]
        lv: f64,
        /// Time samples on the ladder up to 10 ν^{-1/3}.
        #[arg(long, default_value_t = 64)]
        points: usize,
        #[arg(short, long, default_value = "multiplier")]
        out: PathBuf,
    },
    /// Run a (ν, ε) threshold sweep.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long, default_value = "sweep")]
        out: PathBuf,
        #[arg(short, long, env = "SHEARLAB_WORKERS")]
        workers: Option<usize>,
        /// Replaces the plan's seed list with this single seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write gnuplot scripts for a run or sweep directory.
    Plot { dir: PathBuf },
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Toml(_) | Error::Core(_) => EXIT_CONFIG as u8,
        Error::Missing(_) => 66,
        _ => 74,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result: Result<u8, Error> = (|| match cli.command {
        Command::Simulate { config, out, seed } => {
            let mut c = RunConfig::load(&config)?;
            if let Some(s) = seed {
                c.data.seed = s;
            }
            let outcome = run_single(&c, &out)?;
            let s = &outcome.summary;
            println!(
                "{}: {} (classification {}, K = {:.4}), t = {:.4}",
                out.display(),
                s.status.as_str(),
                s.classification,
                s.k_measured,
                s.t_reached
            );
            if let Some(m) = &s.message {
                eprintln!("{m}");
            }
            Ok(outcome.exit_code() as u8)
        }
        Command::Linear {
            k,
            eta0,
            nu,
            t_final,
            samples,
            out,
        } => {
            let r = linear(k, eta0, nu, t_final, samples, &out)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
            Ok(0)
        }
        Command::MultiplierCheck {
            nu,
            n,
            nz,
            nv,
            lv,
            points,
            out,
        } => {
            let grid = FrequencyGrid::new(nz, nv, lv)?;
            let ok = multiplier_check(&grid, &nu, n, points, &out)?;
            println!("{}", if ok { "all conditions hold" } else { "some conditions failed" });
            Ok(if ok { 0 } else { 2 })
        }
        Command::Sweep {
            config,
            out,
            workers,
            seed,
        } => {
            let mut plan = SweepPlan::load(&config)?;
            if let Some(s) = seed {
                plan.seeds = vec![s];
            }
            let o = run_sweep(&plan, &out, workers)?;
            println!(
                "{} cells, {} stable; records in {}",
                o.summary.cells,
                o.summary.stable_cells,
                out.join("records.csv").display()
            );
            for f in &o.summary.fits {
                match f.gamma_hat {
                    Some(g) => println!("{}: gamma_hat = {g:.4}", f.profile),
                    None => println!("{}: gamma_hat undefined", f.profile),
                }
            }
            Ok(0)
        }
        Command::Plot { dir } => {
            for p in emit_plots(&dir)? {
                println!("{}", p.display());
            }
            Ok(0)
        }
    })();
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
