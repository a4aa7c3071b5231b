use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn srkbqa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srkbqa"))
        .current_dir(dir)
        .env("SRKBQA_THREADS", "1")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = srkbqa(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const TRIPLES: &str = "turing\tborn_in\tlondon\nturing\tstudied_at\tcambridge\ncambridge\tlocated_in\tengland\nlondon\tcapital_of\tengland\n";

#[test]
fn ingest_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    std::fs::write(tmp.path().join("t.tsv"), TRIPLES).unwrap();
    let a = ok(tmp.path(), &["ingest", "--triples", "t.tsv", "--out", "a.json"]);
    let b = ok(tmp.path(), &["ingest", "--triples", "t.tsv", "--out", "b.json"]);
    assert_eq!(a, b);
    assert_eq!(
        std::fs::read(tmp.path().join("a.json")).unwrap(),
        std::fs::read(tmp.path().join("b.json")).unwrap()
    );
    let m = json(&tmp.path().join("a.json.manifest.json"));
    assert_eq!(m["command"], "ingest");
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn bad_input_exits_with_two() {
    let tmp = TempDir::new().unwrap();
    let missing = srkbqa(tmp.path(), &["ingest", "--triples", "nope.tsv", "--out", "x.json"]);
    assert_eq!(missing.status.code(), Some(2));

    std::fs::write(tmp.path().join("bad.tsv"), "only\ttwo\n").unwrap();
    let malformed = srkbqa(tmp.path(), &["ingest", "--triples", "bad.tsv", "--out", "x.json"]);
    assert_eq!(malformed.status.code(), Some(2));

    let usage = srkbqa(tmp.path(), &["pretrain", "--kb", "x"]);
    assert_eq!(usage.status.code(), Some(2));

    let threads = Command::new(env!("CARGO_BIN_EXE_srkbqa"))
        .current_dir(tmp.path())
        .env("SRKBQA_THREADS", "many")
        .args(["ingest", "--triples", "bad.tsv", "--out", "x.json"])
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn full_pipeline_on_synthetic_data() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(
        dir,
        &[
            "synth", "--out", "d", "--entities", "120", "--relations", "5", "--questions", "80",
            "--test-questions", "20", "--seed", "4",
        ],
    );
    for f in ["triples.tsv", "train.jsonl", "test.jsonl", "manifest.json"] {
        assert!(dir.join("d").join(f).exists(), "{f}");
    }
    ok(dir, &["ingest", "--triples", "d/triples.tsv", "--out", "kb.json"]);

    let log = ok(
        dir,
        &[
            "pretrain", "--kb", "kb.json", "--qa", "d/train.jsonl", "--out", "p.json", "--epochs", "5",
            "--csv", "p.csv", "--epoch-checkpoints", "ck",
        ],
    );
    assert_eq!(log.lines().count(), 5);
    assert!(dir.join("ck/epoch-0005.json").exists());
    assert_eq!(std::fs::read_to_string(dir.join("p.csv")).unwrap().lines().count(), 1 + 5 * 4);

    // stage order is enforced
    let early = srkbqa(
        dir,
        &["finetune", "--kb", "kb.json", "--qa", "d/train.jsonl", "--checkpoint", "p.json", "--out", "f.json"],
    );
    assert_eq!(early.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&early.stderr).contains("train-reasoner"));

    ok(
        dir,
        &[
            "train-reasoner", "--kb", "kb.json", "--qa", "d/train.jsonl", "--checkpoint", "p.json", "--out", "r.json",
            "--epochs", "3",
        ],
    );
    ok(
        dir,
        &[
            "finetune", "--kb", "kb.json", "--qa", "d/train.jsonl", "--checkpoint", "r.json", "--out", "f.json",
            "--epochs", "1",
        ],
    );

    let k = 3;
    let lines = ok(
        dir,
        &["retrieve", "--kb", "kb.json", "--qa", "d/test.jsonl", "--checkpoint", "f.json", "--k", "3"],
    );
    assert_eq!(lines.lines().count(), 20);
    for line in lines.lines() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        let paths = rec["paths"].as_array().unwrap();
        let topics: std::collections::BTreeSet<_> = paths.iter().map(|p| p["topic"].as_str().unwrap()).collect();
        assert!(!paths.is_empty());
        assert!(paths.len() <= topics.len() * k);
        for p in paths {
            let probs = p["step_probs"].as_array().unwrap();
            assert_eq!(probs.len(), p["relations"].as_array().unwrap().len() + 1);
            let product: f64 = probs.iter().map(|v| v.as_f64().unwrap()).product();
            assert!((product - p["joint_prob"].as_f64().unwrap()).abs() < 1e-9);
        }
    }

    let report: serde_json::Value = serde_json::from_str(&ok(
        dir,
        &[
            "eval", "--kb", "kb.json", "--qa", "d/test.jsonl", "--checkpoint", "f.json", "--baseline", "ppr",
            "--validation", "d/train.jsonl", "--out", "eval.json", "--answers", "answers.jsonl",
        ],
    ))
    .unwrap();
    assert_eq!(report["questions"], 20);
    let by_k = report["sr"]["by_k"].as_array().unwrap();
    assert!(by_k[0]["hits"].as_f64().unwrap() <= by_k[1]["hits"].as_f64().unwrap());
    assert!(report["ppr"]["coverage"].as_f64().is_some());
    let f1 = report["qa"]["f1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f1));
    assert_eq!(json(&dir.join("eval.json")), report);
    let answers = std::fs::read_to_string(dir.join("answers.jsonl")).unwrap();
    assert_eq!(answers.lines().count(), 20);
    for line in answers.lines() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        let n = rec["answers"].as_array().unwrap().len();
        assert!(n <= 5);
    }

    // a checkpoint cannot be used against a different KB
    std::fs::write(dir.join("other.tsv"), TRIPLES).unwrap();
    let wrong = srkbqa(
        dir,
        &["retrieve", "--kb", "other.tsv", "--qa", "d/test.jsonl", "--checkpoint", "f.json"],
    );
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn same_seed_same_checkpoint() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(dir, &["synth", "--out", "d", "--entities", "60", "--questions", "30", "--test-questions", "5"]);
    for out in ["a.json", "b.json"] {
        ok(
            dir,
            &["pretrain", "--kb", "d/triples.tsv", "--qa", "d/train.jsonl", "--out", out, "--epochs", "3", "--seed", "9"],
        );
    }
    assert_eq!(std::fs::read(dir.join("a.json")).unwrap(), std::fs::read(dir.join("b.json")).unwrap());
}

#[test]
fn pretrain_from_distant_tuples() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("t.tsv"), TRIPLES).unwrap();
    let tuples = [
        ("where was turing born", "turing", "born_in", "london"),
        ("where did turing study", "turing", "studied_at", "cambridge"),
        ("which country has cambridge", "cambridge", "located_in", "england"),
    ]
    .iter()
    .map(|(s, h, r, t)| serde_json::json!({"sentence": s, "head": h, "relation": r, "tail": t}).to_string() + "\n")
    .collect::<String>();
    std::fs::write(dir.join("tuples.jsonl"), tuples).unwrap();
    ok(
        dir,
        &["pretrain", "--kb", "t.tsv", "--tuples", "tuples.jsonl", "--out", "p.json", "--epochs", "2"],
    );
    let ck = json(&dir.join("p.json"));
    assert!(ck["scorer"].is_object());
}
