use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dtsnn::trace::{Trace, CSV_HEADER};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn dtsnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtsnn"))
        .args(args)
        .output()
        .unwrap()
}

fn infer_args<'a>(fx: &'a str, weights: &'a str, extra: &[&'a str]) -> Vec<String> {
    let mut v: Vec<String> = vec![
        "infer".into(),
        "--weights".into(),
        weights.into(),
        "--images".into(),
        format!("{fx}/images.idx"),
        "--labels".into(),
        format!("{fx}/labels.idx"),
    ];
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

fn run(args: Vec<String>) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    dtsnn(&refs)
}

#[test]
fn patch_mismatch_exits_2() {
    let fx = fixtures();
    let fx = fx.to_str().unwrap();
    let w = format!("{fx}/weights.dtsn");
    let out = run(infer_args(fx, &w, &["--patch", "5", "--limit", "1"]));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("patch 9"), "{err}");
}

#[test]
fn corrupt_weights_exit_2() {
    let fx = fixtures();
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = std::fs::read(fx.join("weights.dtsn")).unwrap();
    bytes[100] ^= 0x40;
    let bad = dir.path().join("bad.dtsn");
    std::fs::write(&bad, bytes).unwrap();
    let out = run(infer_args(
        fx.to_str().unwrap(),
        bad.to_str().unwrap(),
        &["--limit", "1"],
    ));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("CRC"));
}

#[test]
fn one_image_trace_keeps_encoder_times_in_patch_window() {
    let fx = fixtures();
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    let out = run(infer_args(
        fx.to_str().unwrap(),
        fx.join("weights.dtsn").to_str().unwrap(),
        &["--limit", "1", "--trace", t.to_str().unwrap()],
    ));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("accuracy: "));
    assert!(stdout.contains("published_images_per_second: 3400.000"));

    let text = std::fs::read_to_string(&t).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    assert!(text.lines().nth(1).unwrap().starts_with("# image 0 "));
    let trace = Trace::parse_records(&text).unwrap();
    assert!(!trace.layers[0].is_empty());
    assert!(trace.layers[0].iter().all(|&(_, time)| time < 81));
}

#[test]
fn verify_reports_all_matching() {
    let out = dtsnn(&["verify", "--seed", "3", "--cases", "25"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "25/25 traces match"
    );
}

#[test]
fn synth_output_loads() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = dtsnn(&["synth", "--out-dir", d, "--patch", "7", "--count", "3"]);
    assert!(out.status.success());
    let out = run(infer_args(
        d,
        &format!("{d}/weights.dtsn"),
        &["--patch", "7"],
    ));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("total: 3"));
}

#[test]
fn missing_file_exits_2() {
    let out = dtsnn(&[
        "infer",
        "--weights",
        "/nonexistent",
        "--images",
        "x",
        "--labels",
        "y",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fixture_has_published_shape() {
    let (frag, layers) = dtsnn::weight_file::load_weights(fixtures().join("weights.dtsn")).unwrap();
    assert_eq!(frag.patch_size, Some(9));
    assert_eq!(frag.layer_sizes, vec![400, 800, 512, 256, 10]);
    assert_eq!(layers[0].kind(), dtsnn::WeightKind::Ternary);
    assert!(layers[0].data().iter().all(|v| (-1..=1).contains(v)));
}
