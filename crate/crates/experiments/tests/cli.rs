//! Black-box checks of the `dcd` binary: the generate -> detect -> evaluate
//! pipeline agrees with itself, scenario sweeps emit the documented tables,
//! config errors reach stderr with a nonzero exit, and `--seed` overrides
//! the config's seed.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dcd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcd"))
        .args(args)
        .output()
        .expect("binary launches")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Pulls the number following "misclustering rate " out of a transcript.
fn reported_rate(transcript: &str) -> String {
    transcript
        .lines()
        .find_map(|line| line.strip_prefix("misclustering rate "))
        .unwrap_or_else(|| panic!("no rate line in:\n{transcript}"))
        .trim()
        .to_string()
}

fn line_count(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn generate_detect_evaluate_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = |name: &str, text: String| -> String {
        let path = dir.path().join(name);
        fs::write(&path, text).unwrap();
        path.display().to_string()
    };
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    let eval = dir.path().join("eval");

    let gen_cfg = cfg(
        "gen.cfg",
        "n = 400\nk = 3\nnu = 0.3\nlambda = 0.7\nseed = 9\n".into(),
    );
    let out = dcd(&["generate", "--config", &gen_cfg, "--out", &data.display().to_string()]);
    assert_ok(&out, "generate");
    let edges = data.join("edges.txt");
    let labels = data.join("labels.txt");
    assert!(edges.is_file() && labels.is_file());

    let detect_cfg = cfg(
        "detect.cfg",
        format!(
            "edges = {}\nlabels = {}\nk = 3\nl = 80\nworkers = 4\nseed = 11\n",
            edges.display(),
            labels.display()
        ),
    );
    let out = dcd(&["detect", "--config", &detect_cfg, "--out", &run.display().to_string()]);
    assert_ok(&out, "detect");
    let detect_rate = reported_rate(&stdout_of(&out));
    for artifact in ["labels.csv", "manifest.txt", "report.csv"] {
        assert!(run.join(artifact).is_file(), "missing run artifact {artifact}");
    }

    // Scoring the saved run from its manifest must reproduce the live rate.
    let eval_cfg = cfg(
        "eval.cfg",
        format!(
            "edges = {}\nlabels = {}\nrun = {}\n",
            edges.display(),
            labels.display(),
            run.display()
        ),
    );
    let out = dcd(&["evaluate", "--config", &eval_cfg, "--out", &eval.display().to_string()]);
    assert_ok(&out, "evaluate");
    assert_eq!(reported_rate(&stdout_of(&out)), detect_rate);
    assert!(eval.join("report.csv").is_file());
}

#[test]
fn scenario_writes_the_documented_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("sweep.cfg");
    fs::write(
        &cfg_path,
        "scenario = pilot_sweep\nn = 300\nk = 3\nnu = 0.3\nlambda = 0.7\n\
         workers = 3\nreps = 3\nr_grid = 0.1, 0.2\nseed = 7\n",
    )
    .unwrap();
    let out_dir = dir.path().join("sweep");
    let out = dcd(&[
        "scenario",
        "--config",
        &cfg_path.display().to_string(),
        "--out",
        &out_dir.display().to_string(),
    ]);
    assert_ok(&out, "scenario");

    // Two grid points, three repetitions each, one header per table.
    assert_eq!(line_count(&out_dir.join("runs.csv")), 1 + 2 * 3);
    assert_eq!(line_count(&out_dir.join("timings.csv")), 1 + 2 * 3);
    assert_eq!(line_count(&out_dir.join("summary.csv")), 1 + 2);
    assert_eq!(line_count(&out_dir.join("plot.csv")), 1 + 2);
    let transcript = stdout_of(&out);
    assert!(
        transcript.contains("point r=0.1:") && transcript.contains("point r=0.2:"),
        "missing progress lines:\n{transcript}"
    );
}

#[test]
fn config_errors_reach_stderr_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.cfg");
    fs::write(&cfg_path, "scenario = pilot_sweep\nr_grid = 0.1\nbogus = 1\n").unwrap();
    let out = dcd(&[
        "scenario",
        "--config",
        &cfg_path.display().to_string(),
        "--out",
        &dir.path().join("out").display().to_string(),
    ]);
    assert!(!out.status.success(), "unknown key must fail the run");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("ERROR "), "stderr: {stderr}");
    assert!(stderr.contains("bogus"), "stderr does not name the key: {stderr}");
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("sweep.cfg");
    fs::write(
        &cfg_path,
        "scenario = pilot_sweep\nn = 300\nk = 3\nnu = 0.3\nlambda = 0.7\n\
         workers = 3\nreps = 3\nr_grid = 0.2\nseed = 1\n",
    )
    .unwrap();
    let cfg = cfg_path.display().to_string();

    let run = |out_name: &str, seed: Option<&str>| -> std::path::PathBuf {
        let out_dir = dir.path().join(out_name);
        let mut args = vec![
            "scenario".to_string(),
            "--config".into(),
            cfg.clone(),
            "--out".into(),
            out_dir.display().to_string(),
        ];
        if let Some(seed) = seed {
            args.push("--seed".into());
            args.push(seed.into());
        }
        let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_ok(&dcd(&arg_refs), out_name);
        out_dir.join("runs.csv")
    };

    let a = fs::read(run("a", Some("7"))).unwrap();
    let b = fs::read(run("b", Some("7"))).unwrap();
    let c = fs::read(run("c", None)).unwrap();
    assert_eq!(a, b, "same seed must reproduce runs.csv byte for byte");
    assert_ne!(a, c, "the --seed override must beat the config's seed = 1");
}
