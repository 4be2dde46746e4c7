use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rbtr_core::imaging::ColorImage;
use rbtr_core::{format, RbTensor};
use serde_json::Value;

fn rbtr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbtr")).args(args).output().expect("run rbtr")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn gradient_image(side: usize) -> ColorImage {
    let pixels = (0..side * side)
        .map(|i| {
            let (r, c) = (i / side, i % side);
            [(r * 255 / side) as u8, (c * 255 / side) as u8, ((r + c) * 127 / side) as u8]
        })
        .collect();
    ColorImage::new(side, side, pixels).unwrap()
}

fn write_image(dir: &Path, name: &str, img: &ColorImage) -> PathBuf {
    let p = dir.join(name);
    img.save(&p).unwrap();
    p
}

fn astronaut() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/astronaut_64.png")
}

#[test]
fn decompose_near_lossless() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_image(tmp.path(), "g.png", &gradient_image(8));
    let out = tmp.path().join("run");
    let r = report(&rbtr(&["decompose", s(&input), "--eps", "1e-12", "--out", s(&out)]));
    assert!(r["metrics"]["rse"].as_f64().unwrap() < 1e-8);
    assert!(r["metrics"]["storage_cost"].as_u64().unwrap() > 0);
    for f in ["report.json", "reconstruction.png", "cores/cores.json", "cores/core_01.rbt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(ColorImage::load(&out.join("reconstruction.png")).unwrap(), gradient_image(8));
}

#[test]
fn decompose_respects_eps() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let r = report(&rbtr(&["decompose", s(&astronaut()), "--eps", "0.05", "--out", s(&out)]));
    let rse = r["metrics"]["rse"].as_f64().unwrap();
    assert!(rse <= 0.05 * 1.05, "{rse}");
    assert!(r["metrics"]["compression_ratio"].as_f64().unwrap() > 1.0);
}

#[test]
fn decompose_tensor_and_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
    let t = RbTensor::random(&[3, 4, 2], &mut rng);
    let tp = tmp.path().join("t.rbt");
    format::save_tensor(&tp, &t).unwrap();
    let out = tmp.path().join("tr");
    let r = report(&rbtr(&["decompose", s(&tp), "--eps", "1e-10", "--out", s(&out)]));
    assert!(r["metrics"]["rse"].as_f64().unwrap() < 1e-8);
    let back = format::load_tensor(&out.join("reconstruction.rbt")).unwrap();
    assert!(back.relative_error(&t).unwrap() < 1e-8);

    let frames = tmp.path().join("frames");
    fs::create_dir(&frames).unwrap();
    for i in 0..3 {
        write_image(&frames, &format!("f{i}.png"), &gradient_image(4));
    }
    let out = tmp.path().join("fr");
    let r = report(&rbtr(&["decompose", s(&frames), "--eps", "1e-10", "--out", s(&out)]));
    assert!(r["metrics"]["rse"].as_f64().unwrap() < 1e-8);
    assert_eq!(fs::read_dir(out.join("reconstruction")).unwrap().count(), 3);
}

#[test]
fn missing_input_fails_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let res = rbtr(&["decompose", s(&tmp.path().join("nope.png")), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&res.stderr).is_empty());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn corrupt_input_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.png");
    fs::write(&bad, b"not an image").unwrap();
    let res = rbtr(&["decompose", s(&bad), "--out", s(&tmp.path().join("run"))]);
    assert_eq!(res.status.code(), Some(3));
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn non_power_of_two_and_bad_flags_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let img = write_image(tmp.path(), "odd.png", &ColorImage::filled(6, 6, [1, 2, 3]));
    let out = tmp.path().join("run");
    assert_eq!(rbtr(&["decompose", s(&img), "--out", s(&out)]).status.code(), Some(2));
    let ok = write_image(tmp.path(), "g.png", &gradient_image(4));
    assert_eq!(rbtr(&["complete", s(&ok), "--sr", "1.5", "--out", s(&out)]).status.code(), Some(2));
    assert_eq!(rbtr(&["complete", s(&ok), "--out", s(&out)]).status.code(), Some(2));
    assert_eq!(rbtr(&["complete", s(&ok), "--sr", "0.5", "--d", "9", "--out", s(&out)]).status.code(), Some(2));
    assert_eq!(rbtr(&["decompose", s(&ok), "--bogus", "--out", s(&out)]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn complete_full_sampling_returns_input() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_image(tmp.path(), "g.png", &gradient_image(8));
    let out = tmp.path().join("run");
    let r = report(&rbtr(&["complete", s(&input), "--sr", "1", "--out", s(&out)]));
    assert_eq!(r["solve"]["iterations"], 1);
    assert_eq!(r["metrics"]["rse"], 0.0);
    assert_eq!(r["metrics"]["psnr"], "inf");
    assert_eq!(ColorImage::load(&out.join("recovered.png")).unwrap(), gradient_image(8));
    for f in ["observed.png", "mask.rbm", "report.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn complete_is_deterministic_and_reports_progress() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_image(tmp.path(), "g.png", &gradient_image(16));
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let res = rbtr(&["complete", s(&input), "--sr", "0.5", "--seed", "3", "--max-iter", "20", "--out", s(&out)]);
        assert!(res.status.success());
        (res, fs::read(out.join("report.json")).unwrap())
    };
    let (a, file_a) = run("a");
    let (b, file_b) = run("b");
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(file_a, file_b);
    assert_eq!(a.stdout, file_a);
    let err = String::from_utf8_lossy(&a.stderr);
    assert!(err.contains("iter   10") && err.contains("iter   20"), "{err}");
    let r: Value = serde_json::from_slice(&a.stdout).unwrap();
    let gain = r["metrics"]["psnr"].as_f64().unwrap() - r["observed_metrics"]["psnr"].as_f64().unwrap();
    assert!(gain > 0.0);
}

#[test]
fn config_file_is_layered_under_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_image(tmp.path(), "g.png", &gradient_image(4));
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# test\nsr = 0.5\nlambda = 0.7\nmax-iter = 5\nformat = json\n").unwrap();
    let out = tmp.path().join("run");
    let r = report(&rbtr(&["complete", s(&input), "--config", s(&cfg), "--lambda", "0.2", "--out", s(&out)]));
    assert_eq!(r["config"]["lambda"], 0.2);
    assert_eq!(r["config"]["max_iter"], 5);
    assert_eq!(r["sr"], 0.5);

    fs::write(&cfg, "sr = 0.5\nepsilon = 3\n").unwrap();
    let res = rbtr(&["complete", s(&input), "--config", s(&cfg), "--out", s(&tmp.path().join("x"))]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("epsilon"));
}

#[test]
fn eval_reports_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write_image(tmp.path(), "a.png", &gradient_image(4));
    let black = write_image(tmp.path(), "b.png", &ColorImage::filled(4, 4, [0, 0, 0]));
    let r = report(&rbtr(&["eval", s(&a), s(&a)]));
    assert_eq!(r["rse"], 0.0);
    assert_eq!(r["psnr"], "inf");
    let r = report(&rbtr(&["eval", s(&a), s(&black)]));
    assert!((r["rse"].as_f64().unwrap() - 1.0).abs() < 1e-15);

    // every colour component off by 51/255 = 0.2 gives 10 log10(1 / 0.04)
    let grey = write_image(tmp.path(), "c.png", &ColorImage::filled(4, 4, [100, 100, 100]));
    let lighter = write_image(tmp.path(), "d.png", &ColorImage::filled(4, 4, [151, 151, 151]));
    let r = report(&rbtr(&["eval", s(&grey), s(&lighter)]));
    assert!((r["psnr"].as_f64().unwrap() - 10.0 * 25.0f64.log10()).abs() < 1e-9);

    let csv = rbtr(&["eval", s(&a), s(&a), "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("psnr,psnr_formula,rse\ninf,"), "{text}");

    let small = write_image(tmp.path(), "e.png", &gradient_image(2));
    assert_eq!(rbtr(&["eval", s(&a), s(&small)]).status.code(), Some(2));
}
