use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_metricbias");

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/mini_corpus")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["batch", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["batch", "somewhere"]).status.code(), Some(1));
    assert_eq!(run(&["analyze", "x.png", "--rule", "median"]).status.code(), Some(1));
    assert_eq!(
        run(&["threshold", "x.png", "-K", "2", "--objective", "entropy"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["batch", "x", "--out", "y", "--workers", "0"]).status.code(),
        Some(1)
    );
}

#[test]
fn unsupported_threshold_count_exits_1() {
    let img = corpus().join("synthetic_trilevel.png");
    let out = run(&["threshold", path(&img), "-K", "4", "--objective", "otsu"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.png");
    assert_eq!(run(&["analyze", path(&missing)]).status.code(), Some(2));
    let out = dir.path().join("out");
    assert_eq!(
        run(&["batch", path(dir.path()), "--out", path(&out)]).status.code(),
        Some(2)
    );
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "id,x\n").unwrap();
    assert_eq!(run(&["report", path(&bad), "--out", path(&out)]).status.code(), Some(2));
}

#[test]
fn threshold_prints_optimum() {
    let img = corpus().join("synthetic_trilevel.png");
    let out = run(&["threshold", path(&img), "-K", "2", "--objective", "kapur"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("kapur K=2: thresholds "), "{}", stdout(&out));
}

#[test]
fn analyze_writes_curves_and_overlays() {
    let dir = tempfile::tempdir().unwrap();
    let img = corpus().join("natural_coins.png");
    let out = run(&["analyze", path(&img), "--rule", "midpoint", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("image_id,rho_otsu_ssim,rho_otsu_psnr,rho_kapur_ssim,rho_kapur_psnr,dropped_points")
    );
    assert!(lines.next().unwrap().starts_with("natural_coins,"));
    let curves = fs::read_to_string(dir.path().join("natural_coins.csv")).unwrap();
    assert_eq!(curves.lines().count(), 256);
    assert!(dir.path().join("plots/overlay_otsu_psnr.svg").exists());
}

#[test]
fn batch_then_report_agree() {
    let data = tempfile::tempdir().unwrap();
    for name in ["natural_camera.png", "synthetic_bimodal.png", "synthetic_gradient.png"] {
        fs::copy(corpus().join(name), data.path().join(name)).unwrap();
    }
    let out = tempfile::tempdir().unwrap();
    let batch = run(&[
        "batch",
        path(data.path()),
        "--out",
        path(out.path()),
        "--workers",
        "2",
        "--bins",
        "10",
    ]);
    assert_eq!(
        batch.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&batch.stderr)
    );
    assert!(stdout(&batch).contains("images: 3 analyzed, 0 skipped"));

    let again = tempfile::tempdir().unwrap();
    let correlations = out.path().join("correlations.csv");
    let report = run(&[
        "report",
        path(&correlations),
        "--out",
        path(again.path()),
        "--bins",
        "10",
    ]);
    assert_eq!(report.status.code(), Some(0));

    let batch_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("report.json")).unwrap()).unwrap();
    let report_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(again.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(batch_json["pairs"], report_json["pairs"]);
    assert_eq!(batch_json["wins"], report_json["wins"]);
    assert_eq!(batch_json["histogram_bins"], 10);
    for pair in ["otsu_ssim", "otsu_psnr", "kapur_ssim", "kapur_psnr"] {
        let a = fs::read(out.path().join(format!("plots/hist_{pair}.svg"))).unwrap();
        let b = fs::read(again.path().join(format!("plots/hist_{pair}.svg"))).unwrap();
        assert_eq!(a, b, "{pair}");
    }
}
