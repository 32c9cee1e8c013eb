use std::path::Path;
use std::process::{Command, Output};

fn wmbench(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wmbench"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn embed_attack_detect_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    stdout(&wmbench(d, &["synth", "--count", "2", "--seed", "4", "--out", "corpus"]));
    let src = "corpus/synthetic-00000.png";
    assert!(d.join(src).exists() && d.join("corpus/synthetic-00001.png").exists());

    let out = stdout(&wmbench(d, &["embed", "--input", src, "--output", "marked.png", "--key", "k.key", "--seed", "9"]));
    assert!(out.starts_with("codec=spread-spectrum psnr="), "{out}");
    let read = stdout(&wmbench(d, &["detect", "--input", "marked.png", "--key", "k.key"]));
    assert!(read.contains("bit_accuracy=1.000000") && read.contains("present=true"), "{read}");
    let clean = stdout(&wmbench(d, &["detect", "--input", src, "--key", "k.key"]));
    assert!(clean.contains("present=false"), "{clean}");

    let attacked = stdout(&wmbench(d, &["attack", "--input", "marked.png", "--output", "att.png", "--pipeline", "jpeg-ar-attack"]));
    assert!(attacked.contains("pipeline=jpeg-ar-attack"), "{attacked}");
    assert!(d.join("att.png").exists());

    let spec = stdout(&wmbench(
        d,
        &["analyze-spectrum", "--clean", src, "--marked", "marked.png", "--attacked", "att.png", "--out", "spec", "--format", "csv,svg"],
    ));
    assert!(spec.starts_with("parseval_error="), "{spec}");
    assert!(d.join("spec/spectrum.csv").exists() && d.join("spec/spectrum.svg").exists());
}

#[test]
fn noise_check_mode_reports_a_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = stdout(&wmbench(tmp.path(), &["analyze-spectrum", "--noise-sigma", "0.05", "--size", "17x23", "--seed", "3"]));
    assert!(out.contains("passed=true"), "{out}");
}

#[test]
fn bench_writes_reports_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(
        d.join("exp.toml"),
        r#"
[[dataset]]
synthetic = { count = 4, width = 64, height = 64 }
[[codec]]
kind = "spread-spectrum"
[[codec]]
kind = "additive"
[[attack]]
builtin = "none"
[[attack]]
builtin = "denoise-attack"
"#,
    )
    .unwrap();
    for out in ["a", "b"] {
        stdout(&wmbench(d, &["bench", "--config", "exp.toml", "--seed", "5", "--workers", "2", "--out", out]));
    }
    let csv = |o: &str| std::fs::read(d.join(o).join("report.csv")).unwrap();
    assert_eq!(csv("a"), csv("b"));
    assert_eq!(String::from_utf8(csv("a")).unwrap().lines().count(), 5);
    assert!(d.join("a/report.md").exists());
    assert!(d.join("a/accuracy-spread-spectrum.svg").exists() && d.join("a/accuracy-additive.svg").exists());

    stdout(&wmbench(d, &["mix", "--config", "exp.toml", "--out", "m", "--format", "csv"]));
    assert_eq!(std::fs::read_to_string(d.join("m/report.csv")).unwrap().lines().count(), 1 + 2 * 2 * 4);
    assert!(!d.join("m/report.md").exists());
}

#[test]
fn failures_carry_a_category_and_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("bad.toml"), "sede = 1\n").unwrap();
    let o = wmbench(d, &["bench", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("wmbench: error[config]:"));

    std::fs::create_dir(d.join("empty")).unwrap();
    std::fs::write(d.join("empty.toml"), "[[dataset]]\npath = \"empty\"\n[[codec]]\nkind = \"additive\"\n[[attack]]\nbuiltin = \"none\"\n").unwrap();
    let o = wmbench(d, &["bench", "--config", "empty.toml"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error[dataset]: no valid images"));

    let o = wmbench(d, &["detect", "--input", "missing.png", "--key", "missing.key"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("wmbench: error[io]:"));
}
