use std::path::Path;
use std::process::Command;

use shearlab::io::read_frames;
use shearlab::run::RunSummary;
use shearlab::sweep::SweepSummary;

fn shearlab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_shearlab"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn summary(dir: &Path) -> RunSummary {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn single_mode_matches_the_linear_oracle() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "run.toml",
        "[grid]\nn_z = 16\nn_v = 64\n[physics]\nnu = 0.01\n[data]\nspec = \"single_mode\"\neps = 1e-6\n",
    );
    let out = d.path().join("run");
    let (code, _, err) = shearlab(&["simulate", "-c", &cfg, "-o", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let s = summary(&out);
    assert!(s.oracle_error.unwrap() <= 1e-3, "{:?}", s.oracle_error);
    for f in ["config.toml", "frames.csv", "rates.json", "final.bin"] {
        assert!(out.join(f).exists(), "{f}");
    }
    // the echoed config carries every default
    let echo = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echo.contains("cfl_safety") && echo.contains("t_final"));

    // plot overlay and data agree at plot scale
    let (code, stdout, _) = shearlab(&["plot", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("decay.gp") && stdout.contains("budget.gp"));
    let fit = s.rate.unwrap();
    let worst = read_frames(&out.join("frames.csv"))
        .unwrap()
        .iter()
        .filter(|r| r.t >= fit.window.0)
        .map(|r| ((fit.intercept - fit.rate * s.nu * r.t.powi(3)).exp() / r.nz_l2 - 1.0).abs())
        .fold(0.0, f64::max);
    eprintln!("overlay vs data: {worst:.3e}");
    assert!(worst < 0.02);
}

#[test]
fn zero_data_is_stable_with_zero_series() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "z.toml", "[grid]\nn_z = 8\nn_v = 32\n[physics]\nnu = 0.1\n[data]\neps = 0.0\n");
    let out = d.path().join("z");
    let (code, _, _) = shearlab(&["simulate", "-c", &cfg, "-o", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let rows = read_frames(&out.join("frames.csv")).unwrap();
    assert!(rows.iter().all(|r| r.e_a == 0.0 && r.nz_l2 == 0.0 && r.u0_l2 == 0.0));
}

#[test]
fn config_errors_exit_before_compute() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "bad.toml", "[grid]\nn_z = 8\nn_v = 32\n[data]\nk_max = 5\n");
    let out = d.path().join("bad");
    let (code, _, err) = shearlab(&["simulate", "-c", &cfg, "-o", out.to_str().unwrap()]);
    assert_eq!(code, 64, "{err}");
    assert!(!out.exists());
    let cfg = write(d.path(), "typo.toml", "[grid]\nnz = 8\n");
    assert_eq!(shearlab(&["simulate", "-c", &cfg]).0, 64);
}

#[test]
fn resolution_exhaustion_has_its_own_code() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "r.toml",
        "[grid]\nn_z = 8\nn_v = 32\n[physics]\nnu = 0.001\n[data]\neps = 0.5\nk_max = 2\nj_max = 6\nsigma = 2.0\n[solver]\nt_final = 5.0\n",
    );
    let out = d.path().join("r");
    let (code, _, _) = shearlab(&["simulate", "-c", &cfg, "-o", out.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert_eq!(summary(&out).status.as_str(), "resolution_exhausted");
    assert!(out.join("last_good.bin").exists());
}

#[test]
fn seed_override_changes_the_data() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "s.toml", "[grid]\nn_z = 16\nn_v = 64\n[physics]\nnu = 0.1\n[data]\nj_max = 4\n[solver]\nt_final = 0.2\n");
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert_eq!(shearlab(&["simulate", "-c", &cfg, "-o", a.to_str().unwrap(), "--seed", "1"]).0, 0);
    assert_eq!(shearlab(&["simulate", "-c", &cfg, "-o", b.to_str().unwrap(), "--seed", "2"]).0, 0);
    assert_ne!(
        std::fs::read(a.join("final.bin")).unwrap(),
        std::fs::read(b.join("final.bin")).unwrap()
    );
}

#[test]
fn zero_eps_sweep_reports_undefined_slope() {
    let d = tempfile::tempdir().unwrap();
    let plan = write(
        d.path(),
        "plan.toml",
        "nu = [0.03, 0.1]\neps = [0.0]\nprofiles = [\"couette\", \"gauss_bump\"]\nt_final_factor = 0.5\n[base.grid]\nn_z = 8\nn_v = 32\n",
    );
    let out = d.path().join("sweep");
    let (code, stdout, err) = shearlab(&["sweep", "-c", &plan, "-o", out.to_str().unwrap(), "-w", "2"]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("gamma_hat undefined"));
    let s: SweepSummary = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(s.all_stable);
    assert!(s.fits.iter().all(|f| f.gamma_hat.is_none() && f.status == "undefined"));
    let (code, stdout, _) = shearlab(&["plot", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().filter(|l| l.ends_with(".gp")).count(), 2);
    assert!(out.join("boundary_couette.gp").exists() && out.join("boundary_gauss_bump.gp").exists());
}

#[test]
fn workers_come_from_the_environment() {
    let d = tempfile::tempdir().unwrap();
    let plan = write(d.path(), "p.toml", "nu = [0.1]\neps = [0.0]\nt_final_factor = 0.2\n[base.grid]\nn_z = 8\nn_v = 32\n");
    let out = d.path().join("o");
    let st = Command::new(env!("CARGO_BIN_EXE_shearlab"))
        .args(["sweep", "-c", &plan, "-o", out.to_str().unwrap()])
        .env("SHEARLAB_WORKERS", "0")
        .output()
        .unwrap();
    // zero workers is clamped to one
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
}

#[test]
fn plot_on_an_empty_directory_fails() {
    let d = tempfile::tempdir().unwrap();
    let (code, _, err) = shearlab(&["plot", d.path().to_str().unwrap()]);
    assert_ne!(code, 0);
    assert!(err.contains("frames.csv"), "{err}");
}

#[test]
fn linear_and_multiplier_commands() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("lin");
    let (code, stdout, _) = shearlab(&[
        "linear", "--k", "1", "--eta0", "10", "--nu", "0", "--t-final", "30", "-o", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("orr_amplification"));
    assert!(out.join("linear.csv").exists());
    let out = d.path().join("m");
    let (code, _, _) = shearlab(&[
        "multiplier-check", "--nu", "0.1", "--nz", "8", "--nv", "32", "--points", "8", "-o", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("multiplier.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
}
