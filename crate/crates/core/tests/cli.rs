//! Runs the `subzerocore` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use subzerocore::io::{read_result, write_embeddings, write_labels};
use subzerocore::synthetic::{gaussian_mixture, MixtureSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_subzerocore"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

/// Writes the benchmark embeddings and labels into `dir`.
fn benchmark_files(dir: &Path) -> (PathBuf, PathBuf) {
    let set = gaussian_mixture(&MixtureSpec::BENCHMARK).unwrap();
    let emb = dir.join("bench.emb");
    let labels = dir.join("labels.csv");
    write_embeddings(&emb, set.vectors()).unwrap();
    write_labels(&labels, set.labels()).unwrap();
    (emb, labels)
}

#[test]
fn select_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let (emb, labels) = benchmark_files(dir.path());
    let output = dir.path().join("out.json");
    let out = run(&[
        "select",
        "--embeddings",
        emb.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--alpha",
        "0.9",
        "--gamma",
        "0.6",
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("config: method=subzerocore alpha=0.9 gamma=0.6"));
    // header plus one line per class
    assert_eq!(text(&out.stdout).lines().count(), 11);

    let written = std::fs::read_to_string(&output).unwrap();
    let golden =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/select_alpha090.json");
    if std::env::var_os("SUBZEROCORE_BLESS").is_some() {
        std::fs::write(&golden, &written).unwrap();
    }
    assert!(
        written == std::fs::read_to_string(&golden).unwrap(),
        "result differs from golden"
    );
}

#[test]
fn full_selection_has_full_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let spec = MixtureSpec {
        classes: 2,
        per_class: 30,
        dim: 4,
        seed: 5,
    };
    let set = gaussian_mixture(&spec).unwrap();
    let emb = dir.path().join("e.emb");
    let labels = dir.path().join("l.csv");
    write_embeddings(&emb, set.vectors()).unwrap();
    write_labels(&labels, set.labels()).unwrap();
    let output = dir.path().join("all.json");
    let out = run(&[
        "select",
        "--embeddings",
        emb.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--alpha",
        "0",
        "--method",
        "random",
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert_eq!(read_result(&output).unwrap().totals.selected, 60);

    let out = run(&[
        "coverage",
        "--embeddings",
        emb.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--selection",
        output.to_str().unwrap(),
        "--k",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    let lines: Vec<&str> = stdout.lines().filter(|l| l.starts_with("class=")).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines.iter().all(|l| l.ends_with("coverage=1")), "{stdout}");
}

#[test]
fn unknown_ids_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let spec = MixtureSpec {
        classes: 1,
        per_class: 20,
        dim: 3,
        seed: 1,
    };
    let set = gaussian_mixture(&spec).unwrap();
    let emb = dir.path().join("e.emb");
    let labels = dir.path().join("l.csv");
    write_embeddings(&emb, set.vectors()).unwrap();
    write_labels(&labels, set.labels()).unwrap();
    let output = dir.path().join("sel.json");
    let out = run(&[
        "select",
        "--embeddings",
        emb.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--alpha",
        "0.5",
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
    doc["per_class"][0]["selected_ids"][0] = 999_999.into();
    std::fs::write(&output, doc.to_string()).unwrap();

    let out = run(&[
        "coverage",
        "--embeddings",
        emb.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--selection",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        text(&out.stderr).contains("999999"),
        "{}",
        text(&out.stderr)
    );
}

#[test]
fn argument_errors_exit_one() {
    let out = run(&["find-k", "--n", "5", "--s", "5", "--gamma", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["expected-coverage", "--n", "5", "--s", "2", "--k", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(text(&out.stdout).trim(), "0.4");
    let out = run(&["find-k", "--n", "5", "--s", "2", "--gamma", "0.6"]);
    assert_eq!(text(&out.stdout).trim(), "k=2 expected_coverage=0.7");
    let out = run(&["select", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
}
