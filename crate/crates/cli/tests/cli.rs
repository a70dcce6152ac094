use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kasam-lab"))
        .args(args)
        .env_remove("KASAM_LAB_OUT")
        .output()
        .expect("spawn kasam-lab")
}

fn tiny_run(out: &Path) -> Output {
    lab(&[
        "run", "--experiment", "A", "--models", "sam,kasam-pr", "--trials", "2", "--seed", "7",
        "--points", "300", "--task1-epochs", "2", "--task2-epochs", "1", "--resolution", "12",
        "--out", out.to_str().unwrap(),
    ])
}

#[test]
fn zero_trials_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["run", "--experiment", "A", "--trials", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_model_and_experiment_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(lab(&["run", "--experiment", "D", "--out", d]).status.code(), Some(2));
    assert_eq!(lab(&["run", "--experiment", "A", "--models", "cnn", "--out", d]).status.code(), Some(2));
}

#[test]
fn properties_pass() {
    let out = lab(&["properties", "--points", "2000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 4);
}

#[test]
fn run_is_byte_identical_across_invocations() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(tiny_run(a.path()).status.success());
    assert!(tiny_run(b.path()).status.success());
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().any(|n| n == "A_summary.json"));
    assert!(names.iter().any(|n| n == "A_sam_interference.pgm"));
    assert!(names.iter().any(|n| n == "A_kasam-pr_trial001_task2.csv"));
    for n in &names {
        assert_eq!(fs::read(a.path().join(n)).unwrap(), fs::read(b.path().join(n)).unwrap(), "{n:?}");
    }
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_kasam-lab"))
        .args(["run", "--experiment", "B", "--models", "sam", "--trials", "1", "--points", "200",
               "--task1-epochs", "1", "--task2-epochs", "1", "--resolution", "4"])
        .env("KASAM_LAB_OUT", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("B_summary.json").exists());
}

#[test]
fn stratify_demo_leaves_unsampled_regions_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let out = lab(&["stratify-demo", "--density", "32", "--points", "10", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    let ys: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(ys.len(), 1001);
    assert!(ys.contains(&0.0));
    assert!(ys.iter().any(|&y| y != 0.0));
}

#[test]
fn gridsample_reads_run_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    assert!(tiny_run(dir.path()).status.success());
    let ck = dir.path().join("A_sam_trial000_after_task2.json");
    let pgm = dir.path().join("grid.pgm");
    let out = lab(&["gridsample", "--checkpoint", ck.to_str().unwrap(), "--resolution", "16",
                    "--out", pgm.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&pgm).unwrap().starts_with("P2\n16 16\n65535\n"));
    assert!(dir.path().join("grid.json").exists());
}

#[test]
fn malformed_checkpoint_fails_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("broken.json");
    fs::write(&ck, "not json").unwrap();
    let out = lab(&["gridsample", "--checkpoint", ck.to_str().unwrap(), "--out",
                    dir.path().join("g.pgm").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("broken.json"));
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = tiny_run(&blocker.join("sub"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));
}
