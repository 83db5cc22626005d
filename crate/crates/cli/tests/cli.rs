use std::path::Path;
use std::process::{Command, Output};

use bipartite_bft_cli::output::{latest, read_text};

fn bbft(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bbft"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const K3: &str = r#"
name = "k3"
[topology]
kind = "complete"
n = 3
[protocol]
kind = "broadcast-kn"
f = 1
generals = 1
"#;

const SCRIPTED: &str = r#"
name = "scripted"
[topology]
kind = "complete-bipartite"
n_a = 4
n_b = 4
[protocol]
kind = "ba-lever"
f_a = 1
f_b = 1
g0 = 0
[inputs]
value = true
[adversary]
corruption = [3, 7]
script = "adv.txt"
"#;

#[test]
fn bundled_lever_run_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let o = bbft(dir.path(), &["run", "lever_4_4", "--out", "out"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("unanimous=true value=Some(true)"), "{}", stdout(&o));
    let run = latest(&dir.path().join("out"), "lever_4_4").unwrap();
    assert!(run.join("summary.csv").exists());
    assert!(run.join("agreement.json").exists());
    assert!(run.join("trace-0000.jsonl").exists());
}

#[test]
fn too_few_nodes_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("k3.toml"), K3).unwrap();
    let o = bbft(dir.path(), &["run", "k3.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("3f+1"), "{}", stderr(&o));
}

#[test]
fn malformed_script_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SCRIPTED).unwrap();
    std::fs::write(
        dir.path().join("adv.txt"),
        "# r phase from to general value\n0 1 3 4 0 1\n0 1 3 5 0 2\n",
    )
    .unwrap();
    let o = bbft(dir.path(), &["run", "s.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn explicit_script_runs_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SCRIPTED).unwrap();
    std::fs::write(dir.path().join("adv.txt"), "0 1 3 4 0 0\n0 1 3 5 0 1\n0 2 7 0 0 0\n").unwrap();
    let o = bbft(dir.path(), &["run", "s.toml", "--out", "out"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let trace = latest(&dir.path().join("out"), "scripted")
        .unwrap()
        .join("trace-0000.jsonl");
    let r = bbft(dir.path(), &["replay", trace.to_str().unwrap()]);
    assert!(r.status.success(), "{}{}", stdout(&r), stderr(&r));
    assert!(stdout(&r).contains("identical"), "{}", stdout(&r));
}

#[test]
fn tampered_trace_fails_replay() {
    let dir = tempfile::tempdir().unwrap();
    let o = bbft(dir.path(), &["run", "lever_4_4", "--out", "out"]);
    assert!(o.status.success());
    let trace = latest(&dir.path().join("out"), "lever_4_4")
        .unwrap()
        .join("trace-0000.jsonl");
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.pop();
    std::fs::write(&trace, lines.join("\n") + "\n").unwrap();
    let r = bbft(dir.path(), &["replay", trace.to_str().unwrap()]);
    assert!(!r.status.success());
}

#[test]
fn gzip_traces_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let o = bbft(dir.path(), &["run", "lever_4_4", "--out", "out", "--gzip"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let gz = latest(&dir.path().join("out"), "lever_4_4")
        .unwrap()
        .join("trace-0000.jsonl.gz");
    assert!(read_text(&gz).unwrap().lines().count() > 1);
    let r = bbft(dir.path(), &["replay", gz.to_str().unwrap()]);
    assert!(r.status.success(), "{}{}", stdout(&r), stderr(&r));
}

#[test]
fn exhaustive_broadcast_on_k4_holds() {
    let dir = tempfile::tempdir().unwrap();
    let o = bbft(dir.path(), &["exhaustive", "broadcast_k4", "--out", "out"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let run = latest(&dir.path().join("out"), "broadcast_k4").unwrap();
    assert!(read_text(&run.join("summary.csv")).unwrap().lines().count() > 1);
}

#[test]
fn exhaustive_cap_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let o = bbft(
        dir.path(),
        &["exhaustive", "broadcast_k4", "--cap", "4", "--out", "out"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--cap"), "{}", stderr(&o));
}

#[test]
fn coverage_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = bbft(
        dir.path(),
        &[
            "coverage", "--n-a", "10", "--n-b", "10", "--f-a", "3", "--f-b", "3", "--p", "0.001",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.is_object());
}

#[test]
fn topo_exports_and_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let o = bbft(
        dir.path(),
        &["topo", "butterfly-bipartite:2", "--spectral", "--export", "g.txt"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let again = bbft(dir.path(), &["topo", "g.txt"]);
    assert!(again.status.success(), "{}", stderr(&again));
    let summary =
        |o: &Output| -> serde_json::Value { serde_json::from_str(stdout(o).lines().next().unwrap()).unwrap() };
    let (a, b) = (summary(&o), summary(&again));
    for key in ["nodes", "edges", "degrees", "connected"] {
        assert_eq!(a[key], b[key], "{key}");
    }
}
