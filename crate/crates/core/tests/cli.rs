use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const QUICK: &str = r#"
experiment = "stationary"
samples = 200
check_times = [0.0, 0.5, 1.0]

[evolution]
steps = 1000
snapshot_stride = 10

[output]
trajectories = 20
field_stride = 4
"#;

fn bohm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bohm"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let p = dir.path().join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn version_flag() {
    let out = bohm(&["--version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn passing_run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, QUICK);
    let out_dir = dir.path().join("out");
    let out = bohm(&["--config", s(&cfg), "--out", s(&out_dir), "--seed", "9"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "trajectories.csv",
        "fields.csv",
        "histograms.csv",
        "h_series.csv",
        "manifest.json",
    ] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let m = manifest(&out_dir);
    assert_eq!(m["status"], "pass");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["overrides"]["seed"], "9");
    let traj = fs::read_to_string(out_dir.join("trajectories.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap(), "traj_id,t,x,flags");
    // 20 trajectories; 100 intervals recorded every 10th, plus t = 0
    assert_eq!(traj.lines().count(), 1 + 20 * 11);
    let field = fs::read_to_string(out_dir.join("fields.csv")).unwrap();
    assert_eq!(field.lines().count(), 1 + 256 / 4);
    // leftover temporary files would start with a dot
    assert!(fs::read_dir(&out_dir).unwrap().all(|e| !e
        .unwrap()
        .file_name()
        .to_string_lossy()
        .starts_with('.')));
}

#[test]
fn reruns_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, QUICK);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(
        bohm(&["--config", s(&cfg), "--out", s(&a), "--threads", "1"])
            .status
            .success()
    );
    assert!(
        bohm(&["--config", s(&cfg), "--out", s(&b), "--threads", "3"])
            .status
            .success()
    );
    for f in [
        "trajectories.csv",
        "fields.csv",
        "histograms.csv",
        "h_series.csv",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(manifest(&a)["checks"], manifest(&b)["checks"]);
    assert_eq!(manifest(&a)["threads"], 1);
    assert_eq!(manifest(&b)["threads"], 3);
}

#[test]
fn failed_check_exits_two_unless_filtered_out() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{QUICK}\n[stationary]\nrest_tolerance = 1e-15\n");
    let cfg = write_config(&dir, &text);
    let out_dir = dir.path().join("out");
    let out = bohm(&["--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(manifest(&out_dir)["status"], "fail");

    let out = bohm(&[
        "--config",
        s(&cfg),
        "--out",
        s(&out_dir),
        "--check",
        "no_crossing,equivariance",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let m = manifest(&out_dir);
    let at_rest = m["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "at_rest")
        .unwrap();
    assert_eq!(at_rest["enabled"], false);
    assert_eq!(at_rest["passed"], false);
}

#[test]
fn unknown_check_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, QUICK);
    let out = bohm(&[
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("o")),
        "--check",
        "visibility",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checks[0]"));
}

#[test]
fn schema_violations_are_collected() {
    let dir = tempfile::tempdir().unwrap();
    let text = "experiment = \"custom\"\ncolour = 3\n[evolution]\nsteps = 999\nsnapshot_stride = 5\n[grid]\nspacing = 1\n";
    let cfg = write_config(&dir, text);
    let out_dir = dir.path().join("out");
    let out = bohm(&["--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown key at colour"), "{err}");
    assert!(err.contains("unknown key at grid.spacing"), "{err}");
    assert!(!out_dir.exists());

    // Cross-field problems surface once the keys themselves are valid.
    let cfg = write_config(
        &dir,
        "experiment = \"custom\"\n[evolution]\nsteps = 999\nsnapshot_stride = 5\n",
    );
    let out = bohm(&["--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("evolution.steps") && err.contains("evolution.snapshot_stride"),
        "{err}"
    );
}

#[test]
fn missing_experiment_is_an_error() {
    let out = bohm(&["--out", "/nonexistent-unused"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiment"));
}

/// A directory the current user cannot write: a fresh 0o555 directory, or
/// `/sys` when permissions are not enforced (running as root).
fn read_only_dir(dir: &TempDir) -> Option<PathBuf> {
    let ro = dir.path().join("ro");
    fs::create_dir(&ro).unwrap();
    fs::set_permissions(&ro, fs::Permissions::from_mode(0o555)).unwrap();
    if fs::write(ro.join("probe"), b"").is_err() {
        return Some(ro);
    }
    let sys = PathBuf::from("/sys");
    (sys.is_dir() && fs::write(sys.join("bohm-probe"), b"").is_err()).then_some(sys)
}

#[test]
fn read_only_output_exits_one_without_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let Some(ro) = read_only_dir(&dir) else {
        eprintln!("skipping: no read-only directory available");
        return;
    };
    let cfg = write_config(&dir, QUICK);
    let out = bohm(&["--config", s(&cfg), "--out", s(&ro)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!ro.join("manifest.json").exists());
    let out = bohm(&["--config", s(&cfg), "--out", s(&ro.join("sub"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!ro.join("sub").exists());
}
