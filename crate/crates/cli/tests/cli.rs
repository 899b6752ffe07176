use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = "env = bandit2d\nagent = sdqn\nquantization_bins = 6\nhidden_size = 8\nembedding_size = 8\n\
                      batch_size = 8\ntotal_steps = 400\nwarmup_steps = 100\neval_interval = 100\neval_episodes = 1\n";

fn sdqn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdqn"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn train(dir: &Path, name: &str, extra: &[&str]) -> String {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, CONFIG).unwrap();
    let out = dir.join(name);
    let mut args = vec![
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    ok(sdqn(&args));
    fs::read_to_string(out.join("metrics.csv")).unwrap()
}

#[test]
fn train_writes_reproducible_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let a = train(dir.path(), "a", &[]);
    let b = train(dir.path(), "b", &[]);
    let c = train(dir.path(), "c", &["--seed", "3"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.starts_with("step,train_episode_return,eval_return_mean,"));
    assert_eq!(a.lines().count(), 5);
    assert!(dir.path().join("a/checkpoint.txt").exists());
}

#[test]
fn eval_and_surface_read_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    train(dir.path(), "run", &[]);
    let ck = dir.path().join("run/checkpoint.txt");
    let text = ok(sdqn(&[
        "eval",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--episodes",
        "3",
    ]));
    assert!(text.contains("mean return"), "{text}");

    let csv = dir.path().join("surface.csv");
    let args = [
        "export-surface",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--dims",
        "0,1",
        "--grid",
        "6",
        "--out",
        csv.to_str().unwrap(),
    ];
    ok(sdqn(&args));
    let rows = fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 37);
    // grid equal to the bin count sweeps bin centers
    assert!(rows.lines().nth(1).unwrap().starts_with(&format!(
        "{},{},",
        -1.0 + 1.0 / 6.0,
        -1.0 + 1.0 / 6.0
    )));

    let bad = sdqn(&[
        "export-surface",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--dims",
        "0,2",
        "--grid",
        "4",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(!bad.status.success());
}

#[test]
fn sweep_runs_the_cross_product() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("base.cfg");
    fs::write(&cfg, CONFIG).unwrap();
    let out = dir.path().join("sweep");
    let args = [
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "quantization_bins=4,6",
        "--set",
        "gamma=0.9",
        "--seeds",
        "2",
        "--jobs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ];
    ok(sdqn(&args));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(
        lines[0],
        "run,quantization_bins,gamma,seed,final_eval,windowed_max,partial_window"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[3].starts_with("c1-s0,6,0.9,0,"));
    // runs share nothing, so a sweep cell matches the same run trained alone
    let alone = train(dir.path(), "alone", &[]);
    assert_eq!(
        fs::read_to_string(out.join("c1-s0/metrics.csv")).unwrap(),
        alone
    );
}

#[test]
fn bad_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "env = bandit2d\nagent = sdqn\nqbins = 4\n").unwrap();
    let out = sdqn(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("qbins"));
    assert!(!sdqn(&["train", "--preset", "no-such-preset"])
        .status
        .success());
}
