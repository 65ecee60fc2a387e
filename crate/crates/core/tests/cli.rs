use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slq-bench"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("slq-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    let output = bin().args(args).arg("--out").arg(out).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    output
}

#[test]
fn csv_is_identical_across_runs_and_worker_counts() {
    let dir = scratch("repro");
    for sub in ["riccati-rate", "space-rate", "gd-run", "compare", "regress-demo"] {
        let a = dir.join(format!("{sub}-a.csv"));
        let b = dir.join(format!("{sub}-b.csv"));
        run(&[sub, "--seed", "5", "--workers", "1"], &a);
        run(&[sub, "--seed", "5", "--workers", "3"], &b);
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "{sub}");
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn seed_changes_stochastic_output() {
    let dir = scratch("seed");
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    run(&["space-rate", "--seed", "1", "--paths", "4"], &a);
    run(&["space-rate", "--seed", "2", "--paths", "4"], &b);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn config_file_flags_and_meta() {
    let dir = scratch("config");
    let cfg = dir.join("run.cfg");
    fs::write(
        &cfg,
        "[experiment]\nname = gd-run\nseed = 11\n\n[problem]\nalpha = 2\nx0 = sine_mode(1)\n\n[time]\nsteps = 8\n",
    )
    .unwrap();
    let out = dir.join("nested/gd.csv");
    let config = cfg.to_str().unwrap();
    run(&["gd-run", "--config", config, "--alpha", "0.5", "--emit-plot-script"], &out);

    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("iter,distance,cost\n"));
    let meta = fs::read_to_string(out.with_extension("meta")).unwrap();
    assert!(meta.contains("name = gd-run"));
    assert!(meta.contains("alpha = 0.5"), "flag overrides file");
    assert!(meta.contains("x0 = sine_mode(1)"));
    assert!(meta.contains("steps = 8"));
    assert!(meta.contains("seed = 11"));
    assert!(meta.contains("converged = true"));
    let plot = fs::read_to_string(out.with_extension("gp")).unwrap();
    assert!(plot.contains("'gd.csv' using 'iter':'distance'"));
    assert!(plot.contains("'iter':'cost'"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn bad_configuration_is_reported() {
    let dir = scratch("bad");
    let cfg = dir.join("bad.cfg");
    fs::write(&cfg, "name = gd-run\nwobble = 3\n").unwrap();
    let output = bin().args(["gd-run", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("wobble"));

    let wrong = bin().args(["compare", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert!(!wrong.status.success());

    let noisy = bin()
        .args(["compare", "--beta", "0.5", "--out"])
        .arg(dir.join("c.csv"))
        .output()
        .unwrap();
    assert!(!noisy.status.success());
    let few = bin()
        .args(["time-rate", "--paths", "10", "--out"])
        .arg(dir.join("t.csv"))
        .output()
        .unwrap();
    assert!(!few.status.success());
    assert!(String::from_utf8_lossy(&few.stderr).contains("paths"));
    let _ = fs::remove_dir_all(&dir);
}
