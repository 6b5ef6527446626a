use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn irisloc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irisloc")).args(args).current_dir(dir).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn synth(dir: &Path, count: &str) {
    let o = irisloc(&["synth", "--out", "eyes", "--count", count, "--seed", "3", "--test-fraction", "0.5"], dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn benchmark_without_timing_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "8");
    fs::write(
        dir.path().join("exp.toml"),
        "name = \"d\"\ndetector = \"daugman\"\ntest = [\"eyes/annotations.csv\"]\noutput_dir = \"out\"\n",
    )
    .unwrap();
    let run = || {
        let o = irisloc(&["benchmark", "exp.toml", "--no-timing", "--workers", "2"], dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(dir.path().join("out/summary.csv")).unwrap()
    };
    let first = run();
    assert_eq!(run(), first);
    let row = first.lines().nth(1).unwrap();
    assert!(row.ends_with(",0"), "{row}");
    let per_image = fs::read_to_string(dir.path().join("out/eyes/per_image.csv")).unwrap();
    assert!(per_image.lines().skip(1).all(|l| l.ends_with(",0")));
}

#[test]
fn detect_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "6");
    let o = irisloc(
        &["detect", "--detector", "daugman", "--manifest", "eyes/annotations.csv", "--split", "test", "--out", "d.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dets = fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert!(dets.lines().count() > 1);
    let o = irisloc(
        &["evaluate", "--manifest", "eyes/annotations.csv", "--detections", "d.csv", "--split", "test", "--out", "rep", "--overlays"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("rep/summary.csv").is_file());
    assert!(dir.path().join("rep/per_image.csv").is_file());
    assert!(fs::read_dir(dir.path().join("rep/overlays")).unwrap().count() > 0);

    let o = irisloc(&["detect", "--detector", "daugman", "--image", "eyes/images/eye_00000.pgm"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("eye_00000"));
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&irisloc(&["benchmark", "missing.toml"], dir.path())), 1);
    fs::write(dir.path().join("bad.toml"), "name = \"x\"\ndetector = \"sift\"\n").unwrap();
    assert_eq!(code(&irisloc(&["benchmark", "bad.toml"], dir.path())), 1);
    fs::write(dir.path().join("empty.toml"), "name = \"x\"\ndetector = \"daugman\"\ntest = []\noutput_dir = \"o\"\n").unwrap();
    assert_eq!(code(&irisloc(&["benchmark", "empty.toml"], dir.path())), 1);
    assert_eq!(code(&irisloc(&["frobnicate"], dir.path())), 1);
    assert_eq!(code(&irisloc(&["detect", "--detector", "daugman"], dir.path())), 1);
    assert_eq!(code(&irisloc(&["detect", "--detector", "hogsvm", "--image", "x.pgm"], dir.path())), 1);
    assert_eq!(code(&irisloc(&["--help"], dir.path())), 0);
}

#[test]
fn train_and_detection_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "8");
    let o = irisloc(
        &["train", "--manifest", "eyes/annotations.csv", "--out", "m.json", "--c-grid", "0.1,1", "--folds", "2", "--epochs", "3"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let model = fs::read(dir.path().join("m.json")).unwrap();

    let mut tiny = b"P5\n32 32\n255\n".to_vec();
    tiny.extend([100u8; 32 * 32]);
    fs::write(dir.path().join("tiny.pgm"), tiny).unwrap();
    let o = irisloc(&["detect", "--detector", "hogsvm", "--model", "m.json", "--image", "tiny.pgm"], dir.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(dir.path().join("m.json")).unwrap(), model);
}
