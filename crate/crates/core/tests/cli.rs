use std::path::Path;
use std::process::{Command, Output};

fn algograph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_algograph")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const COUNTING: &str = "task = \"counting\"\nmode = \"vary-m\"\nn = 200\nm_values = [50, 200]\ntrials = 3\nseed = 1\n";

#[test]
fn validate_reports_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", COUNTING);
    let o = algograph(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("2 grid points x 3 trials = 6 runs"));
}

#[test]
fn shipped_configs_validate() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        let o = algograph(&["validate", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn config_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "task = \"counting\"\nmode = \"vary-m\"\nn = 200\nm_values = [0]\n");
    let o = algograph(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));

    let cfg = write(dir.path(), "typo.toml", "task = \"counting\"\nmdoe = \"vary-m\"\n");
    assert_eq!(algograph(&["validate", &cfg]).status.code(), Some(2));
}

#[test]
fn predict_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", COUNTING);
    let o = algograph(&["predict", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("task,n,m,k,depth,cost_bound_sum,latency_bound_p,optimal_m_cost,optimal_m_latency"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn sweep_writes_rows_and_summary_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", COUNTING);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let o = algograph(&["sweep", &cfg, "--out", out.to_str().unwrap(), "--workers", workers]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let rows = std::fs::read_to_string(&a).unwrap();
    assert_eq!(rows, std::fs::read_to_string(&b).unwrap());
    assert_eq!(rows.lines().count(), 7);
    let summary = std::fs::read_to_string(dir.path().join("a_summary.csv")).unwrap();
    assert!(summary.starts_with("task,mode,n,m,k,trials,failures,"));
    assert_eq!(summary.lines().count(), 3);
}

#[test]
fn run_dump_and_replay_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.toml",
        "task = \"retrieval\"\nmode = \"vary-m\"\nn = 2000\nm_values = [500]\nseed = 5\n",
    );
    let dumps = dir.path().join("dumps");
    let first = algograph(&["run", &cfg, "--dump-instances", dumps.to_str().unwrap()]);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(stdout(&first).contains("err_retrieval: 0"));
    let file = std::fs::read_dir(&dumps).unwrap().next().unwrap().unwrap().path();
    let replay = algograph(&["run", &cfg, "--replay", file.to_str().unwrap()]);
    assert_eq!(stdout(&first), stdout(&replay));

    let other = write(dir.path(), "c.toml", COUNTING);
    let mismatch = algograph(&["run", &other, "--replay", file.to_str().unwrap()]);
    assert_eq!(mismatch.status.code(), Some(2));
}

#[test]
fn unreachable_backend_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", COUNTING);
    // port 9 on loopback is not listening in the test environment
    let o = algograph(&["run", &cfg, "--backend", "http:http://127.0.0.1:9/v1/chat/completions"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_backend_spec_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", COUNTING);
    assert_eq!(algograph(&["validate", &cfg, "--backend", "mock:nope"]).status.code(), Some(2));
}
