use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qsigker_core::kernels::{kernel, KernelMethod};
use qsigker_core::pauli::{count_even_words, count_pair_words};
use qsigker_core::qsim::{dqc1_probability, Circuit};
use qsigker_core::PiecewiseLinearPath;
use serde_json::Value;
use tempfile::TempDir;

fn qsigker(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsigker"))
        .args(args)
        .env_remove("QSIGKER_SEED")
        .env_remove("QSIGKER_THREADS")
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixtures() -> (TempDir, PathBuf, PathBuf) {
    let dir = TempDir::new().unwrap();
    let line = write(&dir, "line.csv", "t,x1\n0,0\n1,1\n");
    let flat = write(&dir, "flat.csv", "t,x1\n0,0\n1,0\n");
    (dir, line, flat)
}

#[test]
fn signature_of_unit_line() {
    let (_d, line, _) = fixtures();
    let v = json_stdout(&qsigker(&["sig", "--depth", "3", s(&line)]));
    let text = v.to_string();
    for expected in ["1.0", "0.5", "0.16666666666666666"] {
        assert!(text.contains(expected), "{text}");
    }
    let zero = json_stdout(&qsigker(&["sig", "--depth", "0", s(&line)])).to_string();
    assert!(!zero.contains("0.5"), "{zero}");
}

#[test]
fn bad_header_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.csv", "t,x2\n0,0\n1,1\n");
    let out = qsigker(&["sig", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("x1") && err.contains("bad.csv"), "{err}");
}

#[test]
fn gue_series_matches_library() {
    let (_d, line, flat) = fixtures();
    let out = qsigker(&["kernel", "gue-series", s(&line), s(&flat), "--depth", "16"]);
    let v = json_stdout(&out);
    let lib = kernel(
        &PiecewiseLinearPath::line(vec![1.0]),
        &PiecewiseLinearPath::constant(1),
        &KernelMethod::GueSeries { depth: 16 },
    )
    .unwrap();
    assert_eq!(v["value"].as_f64().unwrap(), lib.value);
    assert!(v["tail_bound"].as_f64().is_some());
    assert!((lib.value - 0.5767).abs() < 1e-4);
}

#[test]
fn quantum_auto_mode_echoes_parameters_and_respects_caps() {
    let (_d, line, flat) = fixtures();
    let args = ["kernel", "quantum", s(&line), s(&flat), "--epsilon", "0.1", "--delta", "0.05"];
    // the default constant asks for 61 qubits
    let out = qsigker(&args);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let mut with_c = args.to_vec();
    with_c.extend(["--constant-C", "0.05"]);
    let text = json_stdout(&qsigker(&with_c)).to_string();
    for needle in ["738", "\"n\":4", "\"m\":4", "\"K\":121"] {
        assert!(text.contains(needle), "{needle} missing in {text}");
    }
}

#[test]
fn gram_csv_over_jsonl_dataset() {
    let dir = TempDir::new().unwrap();
    let ds = write(
        &dir,
        "d.jsonl",
        "{\"id\":\"a\",\"t\":[0,1],\"x\":[[0,0],[1,0]]}\n{\"id\":\"b\",\"t\":[0,1,2],\"x\":[[0,0],[0,1],[1,1]]}\n",
    );
    let out = qsigker(&["kernel", "gram", s(&ds), "--method", "signature-pde", "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "id,a,b");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("a,"));
}

#[test]
fn sd_law_commands() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.json", "");
    let v = json_stdout(&qsigker(&["sd-law", "--potential", s(&empty), "--max-degree", "4"]));
    assert!(v.to_string().contains("2.0"), "{v}");

    let quartic = write(&dir, "q.json", r#"{"dim": 1, "couplings": [{"word": [1,1,1,1], "g": 0.01}]}"#);
    let v = json_stdout(&qsigker(&["sd-law", "--potential", s(&quartic), "--max-degree", "8"]));
    assert!(v.get("residual").is_some(), "{v}");

    let wild = write(&dir, "w.json", r#"{"dim": 1, "couplings": [{"word": [1,1,1,1], "g": -5.0}]}"#);
    let out = qsigker(&["sd-law", "--potential", s(&wild), "--max-degree", "8", "--max-iter", "200"]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err.to_string().contains("residual"), "{err}");
}

#[test]
fn counts_match_library() {
    let v = json_stdout(&qsigker(&["counts", "--m", "3", "--p", "2"]));
    assert_eq!(v["W"].to_string(), count_even_words(3, 2).unwrap().to_string());
    assert_eq!(v["N"].to_string(), count_pair_words(3, 2).unwrap().to_string());
}

#[test]
fn seeded_commands_are_byte_reproducible() {
    let (_d, line, _) = fixtures();
    let mc = ["mc", s(&line), "--matrix-n", "32", "--mc-samples", "40", "--trotter-k", "16", "--seed", "7"];
    let a = qsigker(&mc);
    assert!(a.status.success());
    assert_eq!(a.stdout, qsigker(&mc).stdout);
    let other_seed = qsigker(&["mc", s(&line), "--matrix-n", "32", "--mc-samples", "40", "--trotter-k", "16", "--seed", "8"]);
    assert_ne!(a.stdout, other_seed.stdout);

    let q = ["qsim", s(&line), "--n-qubits", "3", "--pauli-m", "3", "--trotter-k", "4", "--shots", "200", "--seed", "7"];
    assert_eq!(qsigker(&q).stdout, qsigker(&q).stdout);
}

#[test]
fn seed_from_environment() {
    let (_d, line, _) = fixtures();
    let args = ["mc", s(&line), "--matrix-n", "16", "--mc-samples", "20", "--trotter-k", "8"];
    let with_env = Command::new(env!("CARGO_BIN_EXE_qsigker")).args(args).env("QSIGKER_SEED", "7").output().unwrap();
    let mut explicit = args.to_vec();
    explicit.extend(["--seed", "7"]);
    assert_eq!(with_env.stdout, qsigker(&explicit).stdout);
}

#[test]
fn circuit_export_has_one_line_per_gate_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "p.csv", "t,x1,x2\n0,0,0\n1,1,0\n2,1,2\n");
    let circuit = dir.path().join("c.jsonl");
    let out = qsigker(&[
        "qsim", s(&path), "--n-qubits", "6", "--pauli-m", "6", "--trotter-k", "16", "--shots", "10",
        "--export-circuit", s(&circuit),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&circuit).unwrap();
    // L = 2 segments, K = 16, d = 2, m = 6
    assert_eq!(text.lines().count(), 2 * 16 * 2 * 6);

    let c = Circuit::read_jsonl(text.as_bytes()).unwrap();
    let replay = json_stdout(&qsigker(&["qsim", "--import-circuit", s(&circuit)]));
    assert_eq!(replay["dqc1_probability"].as_f64().unwrap(), dqc1_probability(&c).unwrap());
    assert_eq!(replay["gates"].as_u64().unwrap(), 384);
}

#[test]
fn flags_are_validated() {
    let (_d, line, flat) = fixtures();
    // not a flag of this method
    let out = qsigker(&["kernel", "gue-series", s(&line), s(&flat), "--shots", "10"]);
    assert_eq!(out.status.code(), Some(2));
    // unknown flag
    let out = qsigker(&["sig", s(&line), "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    // missing file
    let out = qsigker(&["sig", "/nonexistent/x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    // K only applies to truncated classical developments
    let mc = ["kernel", "gue-classical-mc", s(&line), s(&flat), "--matrix-n", "8", "--mc-samples", "4"];
    let out = qsigker(&[&mc[..], &["--trotter-k", "8"]].concat());
    assert_eq!(out.status.code(), Some(2));
    let out = qsigker(&[&mc[..], &["--truncated", "--trotter-k", "8"]].concat());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"development\":\"truncated\""));
    let out = qsigker(&["kernel", "gue-quantum", s(&line), s(&flat), "--truncated"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_lists_flags() {
    let expected: &[(&str, &[&str])] = &[
        ("sig", &["--depth", "--format", "--output"]),
        (
            "kernel",
            &[
                "--method", "--depth", "--grid-h", "--matrix-n", "--mc-samples", "--trotter-k", "--truncated", "--n-qubits",
                "--pauli-m", "--shots", "--epsilon", "--delta", "--constant-C", "--seed", "--shared-samples",
            ],
        ),
        ("sd-law", &["--potential", "--dim", "--max-degree", "--tol", "--max-iter", "--damping"]),
        ("counts", &["--m", "--p"]),
        ("mc", &["--matrix-n", "--mc-samples", "--trotter-k", "--epsilon", "--delta", "--seed"]),
        (
            "qsim",
            &["--n-qubits", "--pauli-m", "--trotter-k", "--shots", "--constant-C", "--export-circuit", "--import-circuit"],
        ),
    ];
    for (cmd, flags) in expected {
        let out = qsigker(&[cmd, "--help"]);
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8_lossy(&out.stdout);
        for f in *flags {
            assert!(text.contains(f), "{cmd} --help lacks {f}");
        }
        assert!(text.contains("--threads"), "{cmd} --help lacks --threads");
    }
}
