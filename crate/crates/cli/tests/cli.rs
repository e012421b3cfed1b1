use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use motionseg_core::dtfcn::Checkpoint;
use motionseg_core::image::import_png;
use motionseg_core::io::LabelFile;
use motionseg_core::mocap::{parse_bvh, to_cartesian, write_bvh};
use motionseg_core::{build_model, CoordinateSpace, NetConfig, RngStream};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motionseg"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn synth_corpus(dir: &Path, sequences: usize, frames: usize) -> PathBuf {
    let out = dir.join("corpus");
    let o = run(&[
        "synth",
        "--out",
        p(&out),
        "--sequences",
        &sequences.to_string(),
        "--frames",
        &frames.to_string(),
        "--seed",
        "5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["rfs", "--w", "x"]).status.code(), Some(1));
    assert_eq!(run(&["rfs", "--w", "4"]).status.code(), Some(1));
}

#[test]
fn rfs_table() {
    let o = run(&["rfs", "--w", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rfs: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("conv"))
        .map(|l| l.split('\t').nth(4).unwrap())
        .collect();
    assert_eq!(rfs, ["3", "9", "27", "81", "243"]);
    assert!(text.contains("params\t663,562"), "{text}");
    assert!(stdout(&run(&["rfs", "--w", "5"])).contains("params\t1,101,834"));
    assert!(stdout(&run(&["rfs", "--w", "1"])).contains("params\t225,290"));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.bvh");
    let out = dir.path().join("x.png");
    assert_eq!(run(&["convert", p(&missing), "--out", p(&out)]).status.code(), Some(2));
    let bad = dir.path().join("bad.bvh");
    fs::write(&bad, "HIERARCHY\nROOT Hips\n{\n").unwrap();
    assert_eq!(run(&["convert", p(&bad), "--out", p(&out)]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn convert_local_ignores_root_motion_and_sidecar_inverts() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 1, 60);
    let bvh = corpus.join("synth_000.bvh");
    let (skeleton, mut motion) = parse_bvh(&fs::read_to_string(&bvh).unwrap()).unwrap();
    let original = motion.clone();
    let mut rng = RngStream::new(3);
    let shift: Vec<f64> = (0..6).map(|_| rng.uniform_in(-90.0, 90.0)).collect();
    for t in 0..motion.frame_count() {
        for (c, s) in shift.iter().enumerate() {
            motion.frame_mut(t)[c] += s;
        }
    }
    let moved = dir.path().join("moved.bvh");
    fs::write(&moved, write_bvh(&skeleton, &motion)).unwrap();

    let a = dir.path().join("a.png");
    let b = dir.path().join("b.png");
    assert!(run(&["convert", p(&bvh), "--out", p(&a)]).status.success());
    assert!(run(&["convert", p(&moved), "--out", p(&b)]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let img = import_png(&a).unwrap();
    assert_eq!((img.height(), img.width()), (224, 60));

    // Native height skips resampling, so pixels map straight back to joints.
    let joints = skeleton.joint_count();
    let native = dir.path().join("native.png");
    let o = run(&["convert", p(&bvh), "--out", p(&native), "--height", &joints.to_string(), "--space", "global"]);
    assert!(o.status.success());
    let sidecar: serde_json::Value = serde_json::from_slice(&fs::read(native.with_extension("json")).unwrap()).unwrap();
    assert_eq!(sidecar["joints"], joints);
    assert_eq!(sidecar["frames"], 60);
    let lo: Vec<f64> = serde_json::from_value(sidecar["channel_min"].clone()).unwrap();
    let hi: Vec<f64> = serde_json::from_value(sidecar["channel_max"].clone()).unwrap();
    let cart = to_cartesian(&skeleton, &original, CoordinateSpace::Global).unwrap();
    let img = import_png(&native).unwrap();
    for j in 0..joints {
        for t in 0..60 {
            let pos = cart.position(j, t);
            for c in 0..3 {
                let back = lo[c] + img.pixels().get(j, t, c) / 255.0 * (hi[c] - lo[c]);
                assert!((back - pos[c]).abs() <= (hi[c] - lo[c]) / 255.0 * 0.5 + 1e-9);
            }
        }
    }

    let npy = dir.path().join("a.npy");
    assert!(run(&["convert", p(&bvh), "--out", p(&npy), "--height", "32"]).status.success());
    let bytes = fs::read(&npy).unwrap();
    assert_eq!(&bytes[..6], b"\x93NUMPY");
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    assert_eq!(bytes.len(), 10 + header_len + 32 * 60 * 3 * 8);
}

#[test]
fn train_segment_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 4, 120);
    let manifest = corpus.join("manifest.json");
    let train = |out: &Path, epochs: &str| {
        let o = run(&[
            "train", p(&manifest), "--preset", "desk", "--folds", "2", "--epochs", epochs, "--noise", "random:0.3",
            "--seed", "9", "--out", p(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    let r1 = dir.path().join("run1");
    let r2 = dir.path().join("run2");
    train(&r1, "2");
    train(&r2, "2");
    for f in ["metrics.csv", "confusion.csv", "fold_0.ckpt.json", "fold_1.ckpt.json", "resolved_config.json"] {
        assert_eq!(fs::read(r1.join(f)).unwrap(), fs::read(r2.join(f)).unwrap(), "{f} differs between runs");
    }
    let metrics = fs::read_to_string(r1.join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(lines.next(), Some("fold,epoch,split,loss,accuracy"));
    // Per fold: one initial test row, then a train and a test row per epoch.
    assert_eq!(lines.count(), 2 * (1 + 2 * 2));

    // Zero epochs leaves every fold at its initialization.
    let r0 = dir.path().join("run0");
    train(&r0, "0");
    for k in 0..2u64 {
        let ckpt = Checkpoint::load(&r0.join(format!("fold_{k}.ckpt.json"))).unwrap();
        let init = build_model(&ckpt.config, RngStream::mix(9, k)).unwrap();
        assert_eq!(ckpt.to_model().unwrap().flat_params(), init.flat_params());
        assert_eq!(ckpt.config.classes, 10);
        assert_eq!(ckpt.config, NetConfig { classes: 10, ..NetConfig::desk() });
    }

    let bvh = corpus.join("synth_000.bvh");
    let truth = corpus.join("synth_000.labels.json");
    let labels = dir.path().join("pred.json");
    let viz = dir.path().join("viz.png");
    let probs = dir.path().join("probs.png");
    let o = run(&[
        "segment", p(&r1.join("fold_0.ckpt.json")), p(&bvh), "--out", p(&labels), "--truth", p(&truth), "--viz",
        p(&viz), "--probs", p(&probs),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("accuracy\t"));
    let pred = LabelFile::load(&labels).unwrap();
    assert_eq!(pred.to_track().unwrap().len(), 120);
    let raw: serde_json::Value = serde_json::from_slice(&fs::read(&labels).unwrap()).unwrap();
    assert_eq!(raw.as_object().unwrap().len(), 2);
    assert!(raw["segments"].as_array().unwrap().iter().all(|s| s.as_object().unwrap().len() == 3));
    let strip = import_png(&viz).unwrap();
    assert_eq!((strip.height(), strip.width()), (32, 120));
    assert!(probs.exists());

    let o = run(&["eval", p(&truth), p(&truth), "--confusion", p(&dir.path().join("c.csv"))]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "accuracy\t1.000000");
    let csv = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 2, 60);
    let manifest = corpus.join("manifest.json");
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"epochs": 1, "learning_rat": 0.1}"#).unwrap();
    let out = dir.path().join("out");
    let o = run(&["train", p(&manifest), "--config", p(&bad), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));

    let good = dir.path().join("good.json");
    let net = serde_json::to_string(&NetConfig::desk()).unwrap();
    fs::write(&good, format!(r#"{{"epochs": 5, "folds": 2, "seed": 4, "net": {net}}}"#)).unwrap();
    let o = run(&["train", p(&manifest), "--config", p(&good), "--epochs", "1", "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let resolved: serde_json::Value = serde_json::from_slice(&fs::read(out.join("resolved_config.json")).unwrap()).unwrap();
    assert_eq!(resolved["epochs"], 1);
    assert_eq!(resolved["seed"], 4);
    assert_eq!(resolved["folds"], 2);
    assert_eq!(run(&["train", p(&manifest), "--noise", "blur:3", "--out", p(&out)]).status.code(), Some(1));
}

#[test]
fn gradcheck_desk_passes() {
    let o = run(&["gradcheck"]);
    assert!(o.status.success(), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS"));
}
