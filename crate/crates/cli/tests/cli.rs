// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_verispec"));
    c.arg("--quiet");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn core_fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(rel)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Corpus, vocabulary, dataset and 3-gram model built through the binary.
struct Artifacts {
    dir: TempDir,
}

impl Artifacts {
    fn build() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let a = Self { dir };
        let corpus = core_fixture("corpus");
        let out = run(&[
            "corpus",
            "--input",
            s(&corpus),
            "--output",
            s(&a.path("ds.jsonl")),
            "--vocab",
            s(&a.path("vocab.json")),
            "--vocab-size",
            "320",
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let out = run(&[
            "train-ref",
            "--dataset",
            s(&a.path("ds.jsonl")),
            "--vocab",
            s(&a.path("vocab.json")),
            "--n",
            "3",
            "--heads",
            "4",
            "--output",
            s(&a.path("model.bin")),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        a
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

#[test]
fn help_version_and_usage_codes() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    let help = stdout(&run(&["decode", "--help"]));
    for flag in ["--mode", "--heads", "--trace", "--latency-ms", "--seed", "--workers", "--config"] {
        assert!(help.contains(flag), "{flag} missing from help");
    }
    assert_eq!(code(&run(&["decode", "--no-such-flag"])), 1);
    assert_eq!(code(&run(&[])), 1);
}

#[test]
fn corpus_keeps_planted_survivors_and_is_reproducible() {
    let a = Artifacts::build();
    let first = std::fs::read(a.path("ds.jsonl")).unwrap();
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 15);

    let out = run(&[
        "corpus",
        "--input",
        s(&core_fixture("corpus")),
        "--output",
        s(&a.path("ds2.jsonl")),
        "--vocab",
        s(&a.path("vocab.json")),
        "--report",
        s(&a.path("report.json")),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read(a.path("ds2.jsonl")).unwrap(), first);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.path("report.json")).unwrap()).unwrap();
    assert_eq!(report["kept"], 15);
    assert_eq!(report["files"], 20);
}

#[test]
fn corpus_on_empty_dir_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "corpus",
        "--input",
        s(dir.path()),
        "--output",
        s(&dir.path().join("o.jsonl")),
        "--vocab",
        s(&dir.path().join("v.json")),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no .v files"));
}

#[test]
fn tokenize_roundtrip_and_show_frag_golden() {
    let dir = tempfile::tempdir().unwrap();
    let vocab = dir.path().join("v.json");
    let out = run(&["tokenize", "train", "--input", s(&core_fixture("corpus")), "--vocab-size", "300", "--output", s(&vocab)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let src_path = core_fixture("corpus/counter.v");
    let shown = stdout(&run(&["tokenize", "encode", "--vocab", s(&vocab), "--show-frag", s(&src_path)]));
    assert_eq!(shown, golden("counter_frag.txt"));

    let ids = stdout(&run(&["tokenize", "encode", "--vocab", s(&vocab), s(&src_path)]));
    let ids_path = dir.path().join("ids.txt");
    std::fs::write(&ids_path, &ids).unwrap();
    let back = run(&["tokenize", "decode", "--vocab", s(&vocab), s(&ids_path)]);
    assert_eq!(code(&back), 0);
    assert_eq!(back.stdout, std::fs::read(&src_path).unwrap());

    // each golden line decodes to its quoted fragment
    for line in shown.lines() {
        let (ids, quoted) = line.split_once('\t').unwrap();
        let p = dir.path().join("line.txt");
        std::fs::write(&p, ids).unwrap();
        let text = stdout(&run(&["tokenize", "decode", "--vocab", s(&vocab), s(&p)]));
        assert_eq!(format!("{text:?}"), quoted);
        assert!(ids.ends_with(" 256"));
    }

    let missing = run(&["tokenize", "encode", "--vocab", s(&dir.path().join("nope.json")), s(&src_path)]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn labels_golden_check_and_rejects_zero_heads() {
    let out = run(&["labels", "--ids", "11 256 12 13 256", "--heads", "2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), golden("labels_docs.json"));

    let out = run(&["--seed", "4", "labels", "--ids", "1 2 256", "--heads", "10", "--check", "--random", "300"]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("301 sequences, 0 mismatches"));

    assert_eq!(code(&run(&["labels", "--ids", "1 256", "--heads", "0"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let bin_path = dir.path().join("l.bin");
    let out = run(&["labels", "--ids", "1 256 3", "--heads", "3", "--format", "binary", "--output", s(&bin_path)]);
    assert_eq!(code(&out), 0);
    assert_eq!(&std::fs::read(&bin_path).unwrap()[..4], b"VSLM");
}

#[test]
fn train_ref_is_deterministic() {
    let a = Artifacts::build();
    let args = |out: &str, n: &str| {
        run(&[
            "train-ref",
            "--dataset",
            s(&a.path("ds.jsonl")),
            "--vocab",
            s(&a.path("vocab.json")),
            "--n",
            n,
            "--output",
            s(&a.path(out)),
        ])
    };
    let h1 = stdout(&args("m1.bin", "3"));
    let h2 = stdout(&args("m2.bin", "3"));
    assert_eq!(h1, h2);
    assert_eq!(std::fs::read(a.path("m1.bin")).unwrap(), std::fs::read(a.path("m2.bin")).unwrap());
    let unigram = args("m3.bin", "1");
    assert_eq!(code(&unigram), 0);
    assert_ne!(stdout(&unigram), h1);

    std::fs::write(a.path("empty.jsonl"), "").unwrap();
    let out = run(&[
        "train-ref",
        "--dataset",
        s(&a.path("empty.jsonl")),
        "--vocab",
        s(&a.path("vocab.json")),
        "--output",
        s(&a.path("m4.bin")),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn ntp_equals_spec_without_heads() {
    let a = Artifacts::build();
    let (vocab, model) = (a.path("vocab.json"), a.path("model.bin"));
    let common = [
        "decode",
        "--vocab",
        s(&vocab),
        "--model",
        s(&model),
        "--prompt",
        "module pwm #(",
        "--max-tokens",
        "80",
    ];
    let spec = run(&[&common[..], &["--mode", "spec", "--heads", "0"]].concat());
    let ntp = run(&[&common[..], &["--mode", "ntp"]].concat());
    assert_eq!(code(&spec), 0, "{}", stderr(&spec));
    assert_eq!(stdout(&spec), stdout(&ntp));
    let multi = run(&[&common[..], &["--mode", "spec", "--heads", "4"]].concat());
    assert_eq!(code(&multi), 0);
    assert!(stderr(&multi).contains("fragment violations 0"));
}

fn trace_lines(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn oracle_trace_emits_one_fragment_per_step() {
    let a = Artifacts::build();
    let target = core_fixture("corpus/counter.v");
    let trace = a.path("trace.jsonl");
    let out = run(&[
        "decode",
        "--vocab",
        s(&a.path("vocab.json")),
        "--oracle",
        s(&target),
        "--heads",
        "40",
        "--max-tokens",
        "100000",
        "--trace",
        s(&trace),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out), std::fs::read_to_string(&target).unwrap() + "\n");

    let ids: Vec<u64> = stdout(&run(&["tokenize", "encode", "--vocab", s(&a.path("vocab.json")), s(&target)]))
        .split_whitespace()
        .map(|w| w.parse().unwrap())
        .collect();
    let fragments: Vec<&[u64]> = ids.split_inclusive(|&t| t == 256).collect();
    let steps = trace_lines(&trace);
    assert_eq!(steps.len(), fragments.len());
    for (step, frag) in steps.iter().zip(&fragments) {
        let emitted: Vec<u64> = step["emitted"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
        assert_eq!(&emitted, frag);
        assert_eq!(step["accepted_len"].as_u64().unwrap() as usize, frag.len());
    }
}

#[test]
fn latency_is_charged_per_model_call() {
    let a = Artifacts::build();
    let out = run(&[
        "decode",
        "--vocab",
        s(&a.path("vocab.json")),
        "--oracle",
        s(&core_fixture("corpus/parity.v")),
        "--mode",
        "ntp",
        "--max-tokens",
        "30",
        "--latency-ms",
        "10",
    ]);
    assert_eq!(code(&out), 0);
    let summary = stderr(&out);
    let field = |name: &str| -> f64 {
        let rest = summary.split(&format!("{name} ")).nth(1).unwrap();
        rest.split_whitespace().next().unwrap().trim_end_matches('s').parse().unwrap()
    };
    let (calls, wall) = (field("calls"), field("wall"));
    assert!(calls >= 30.0);
    assert!(wall >= calls * 0.010, "wall {wall}s for {calls} calls");
}

#[test]
fn bench_writes_reports_and_maps_checker_failure() {
    let a = Artifacts::build();
    let prompts = a.path("prompts.jsonl");
    std::fs::write(
        &prompts,
        "{\"id\":\"p0\",\"instruction\":\"\",\"prefix\":\"module adder\",\"testbench\":\"tb.v\"}\n\
         {\"id\":\"p1\",\"instruction\":\"\",\"prefix\":\"module mux4 (\",\"testbench\":\"tb.v\"}\n",
    )
    .unwrap();
    let (vocab, model) = (a.path("vocab.json"), a.path("model.bin"));
    let base = [
        "--seed",
        "1",
        "bench",
        "--prompts",
        s(&prompts),
        "--model",
        s(&model),
        "--vocab",
        s(&vocab),
        "--samples",
        "2",
        "--ks",
        "1,2",
        "--max-tokens",
        "40",
        "--timing",
        "simulated",
    ];
    let report = a.path("report.json");
    let runs = a.path("runs.jsonl");
    let out = run(&[&base[..], &["--output", s(&report), "--runs", s(&runs)]].concat());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = stdout(&out);
    assert!(csv.starts_with("method,speed_tokens_per_s,speedup,mean_accepted_len,pass@1,pass@2,pass_rate"));
    assert_eq!(csv.lines().count(), 4);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["methods"][2]["speedup"], 1.0);
    assert_eq!(std::fs::read_to_string(a.path("runs.jsonl")).unwrap().lines().count(), 12);

    let again = run(&base);
    assert_eq!(stdout(&again), csv);

    let passing = run(&[&base[..], &["--checker", "sh", "-c", "exit 0"]].concat());
    assert_eq!(code(&passing), 0, "{}", stderr(&passing));
    let broken = run(&[&base[..], &["--checker", "/nonexistent/simulator", "{design}"]].concat());
    assert_eq!(code(&broken), 3);
}

#[test]
fn check_reports_and_dumps() {
    let ok = run(&["check", s(&core_fixture("corpus/mux.v"))]);
    assert_eq!(code(&ok), 0);
    assert!(stdout(&ok).ends_with(": ok\n"));
    let bad = run(&["check", s(&core_fixture("corpus/bad_missing_semi.v"))]);
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("expected"));

    let frags = stdout(&run(&["check", "--dump-fragments", s(&core_fixture("corpus/mux.v"))]));
    let joined: String = frags
        .lines()
        .map(|l| serde_json::from_str::<String>(l.split_once('\t').unwrap().1).unwrap())
        .collect();
    assert_eq!(joined, std::fs::read_to_string(core_fixture("corpus/mux.v")).unwrap());
    let ast = stdout(&run(&["check", "--dump-ast", s(&core_fixture("corpus/mux.v"))]));
    assert!(serde_json::from_str::<serde_json::Value>(&ast).is_ok());
}

#[test]
fn config_file_is_strict_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\nheads = 3\n").unwrap();
    assert_eq!(code(&run(&["--config", s(&bad), "check", s(&core_fixture("corpus/mux.v"))])), 1);

    let good = dir.path().join("good.toml");
    std::fs::write(&good, "[labels]\nheads = 1\n").unwrap();
    let from_file = stdout(&run(&["--config", s(&good), "labels", "--ids", "1 2 256"]));
    assert!(from_file.contains("\"heads\": 1"));
    let overridden = stdout(&run(&["--config", s(&good), "labels", "--ids", "1 2 256", "--heads", "2"]));
    assert!(overridden.contains("\"heads\": 2"));

    // the resolved config is logged
    let logged = Command::new(env!("CARGO_BIN_EXE_verispec"))
        .args(["--config", s(&good), "labels", "--ids", "1 256"])
        .env("RUST_LOG", "info")
        .output()
        .unwrap();
    assert!(stderr(&logged).contains("resolved config"));
    assert!(stderr(&logged).contains("\"heads\":1"));
}
