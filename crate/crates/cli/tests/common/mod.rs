use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

pub fn ffproj(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffproj"))
        .args(args)
        .current_dir(dir)
        .env("NO_COLOR", "1")
        .output()
        .expect("binary runs")
}

pub fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

/// The report with its timing field removed.
pub fn canonical(out: &Output) -> String {
    let mut v = json(out);
    v.as_object_mut().unwrap().remove("timing_ms");
    serde_json::to_string(&v).unwrap()
}

/// Scratch directory with the input files used by the invocation matrix.
pub fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let w = |name: &str, text: &str| std::fs::write(dir.path().join(name), text).unwrap();
    w("k2.txt", "p 3\nn 2\n0 0\n1 1\n2 2\n1 2\n");
    w("k3.txt", "p 3\nn 3\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n1 1 1\n2 1 0\n");
    w("grid.txt", "p 3\nn 2\n0 0\n0 1\n0 2\n1 0\n1 1\n1 2\n2 0\n2 1\n2 2\n");
    w(
        "planes.txt",
        "p 3\nn 3\nm 2\n1 0 0; 0 1 0\n1 0 0; 0 0 1\n0 1 0; 0 0 1\n1 1 0; 0 0 1\n",
    );
    w("lines.txt", "p 3\nn 3\nm 1\n1 0 0\n0 1 0\n0 0 1\n");
    let row: String = (0..10).map(|i| format!("{i} 0\n")).collect();
    w("k11.txt", &format!("p 11\nn 2\n{row}"));
    w("bad.txt", "p 3\nn 2\n0 0\n1 7 2\n");
    w(
        "sweep.json",
        r#"{"runs": [
            {"check": "lemma37", "count": 10,
             "points": {"generator": "random_pointset", "params": {"n": 3, "p": 3, "size": 9}}},
            {"check": "intersection", "count": 10,
             "points": {"generator": "random_pointset", "params": {"n": 3, "p": 5, "size": 20}}},
            {"check": "bound", "count": 3, "spec": {"name": "line"},
             "points": {"generator": "random_pointset", "params": {"n": 2, "p": 7, "size": 5}},
             "family": {"generator": "random_family", "params": {"n": 2, "m": 1, "p": 7, "size": 4}}},
            {"check": "probe", "spec": {"name": "lpv"}, "p": 7, "n": 2, "count": 5}
        ]}"#,
    );
    dir
}

pub const MATRIX: &[&[&str]] = &[
    &["gr", "count", "--p", "2", "--n", "4", "--m", "2"],
    &["gr", "enum", "--p", "3", "--n", "3", "--m", "1"],
    &["project", "--points", "k3.txt", "--w", "1 0 0"],
    &["project", "--points", "k3.txt", "--dim", "2"],
    &["exceptional", "--points", "k3.txt", "--m", "1", "--not-full"],
    &["exceptional", "--points", "k3.txt", "--m", "2", "--at-most", "4"],
    &["family", "check", "--family", "planes.txt", "--kappa", "1/2"],
    &["incidence", "--points", "grid.txt", "--all-lines"],
    &["incidence", "--points", "k2.txt", "--lines", "1 2 0, 0 1 2"],
    &["stevens", "--p", "3", "--a", "0,1,2", "--b", "0,1,2", "--all-lines"],
    &["verify", "chen", "--points", "k3.txt", "--m", "1", "--statement", "1"],
    &["verify", "chen", "--points", "k2.txt", "--m", "1", "--statement", "2"],
    &[
        "verify",
        "bound",
        "--points",
        "k3.txt",
        "--family",
        "planes.txt",
        "--spec",
        "line",
    ],
    &[
        "verify",
        "bound",
        "--points",
        "k3.txt",
        "--family",
        "lines.txt",
        "--spec",
        "bourgain",
        "--m",
        "2",
        "--epsilon",
        "1/1000",
    ],
    &[
        "verify",
        "props",
        "--points",
        "k3.txt",
        "--w1",
        "1 0 0",
        "--w2",
        "0 1 0",
        "--family",
        "planes.txt",
    ],
    &["verify", "improvement", "--family", "lines.txt", "--k", "1", "--d", "1"],
    &["seq", "--n", "6", "--set", "2,3"],
    &["seq", "--n", "4", "--set", "2"],
    &["sweep", "--config", "sweep.json", "--seed", "5"],
    &["--format", "csv", "seq", "--n", "6", "--set", "2,3"],
];
