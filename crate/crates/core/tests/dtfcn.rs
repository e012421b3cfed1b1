mod common;

use common::random_tensor;
use motionseg_core::dtfcn::{
    build_model, evaluate, predict_labels, receptive_field, train, Checkpoint, ModelObjective, NetConfig, Sample,
    TrainConfig,
};
use motionseg_core::experiments::synth::{synthesize_dataset, SynthSpec};
use motionseg_core::nn::{gradient_check, GradCheckOptions, Mode};
use motionseg_core::{CoordinateSpace, LabelTrack, RngStream, Tensor};

fn tiny() -> NetConfig {
    NetConfig {
        height: 6,
        conv_channels: vec![4, 4, 5],
        classes: 4,
        ..NetConfig::default()
    }
}

/// Pre-activation of the last conv layer with every weight made positive,
/// so each path through the ReLUs is active.
fn last_conv(config: &NetConfig, input: &Tensor) -> Vec<f64> {
    let mut model = build_model(config, 1).unwrap();
    for p in model.params_mut() {
        for v in p.value.data_mut() {
            *v = v.abs();
        }
    }
    let trace = model.forward_trace(input, Mode::Infer, &mut RngStream::new(0)).unwrap();
    trace[2 * config.conv_channels.len() - 2].data().to_vec()
}

#[test]
fn output_depends_only_on_receptive_field() {
    let config = tiny();
    let rfs = *receptive_field(&config).last().unwrap();
    assert_eq!(rfs, 27);
    let half = rfs / 2;
    let m = 80;
    let mut rng = RngStream::new(4);
    let input = random_tensor(&[6, m, 3], 0.0, 255.0, &mut rng);
    let base = last_conv(&config, &input);
    let t = 40;
    let channels = *config.conv_channels.last().unwrap();
    for frame in 0..m {
        let mut x = input.clone();
        for r in 0..6 {
            x.data_mut()[(r * m + frame) * 3] += 50.0;
        }
        let out = last_conv(&config, &x);
        let changed = (0..channels).any(|c| out[c * m + t] != base[c * m + t]);
        assert_eq!(changed, frame.abs_diff(t) <= half, "frame {frame}");
    }
}

#[test]
fn convolution_stack_is_shift_equivariant() {
    let config = tiny();
    let m = 120;
    let shift = 7;
    let mut rng = RngStream::new(8);
    let input = random_tensor(&[6, m, 3], 0.0, 255.0, &mut rng);
    let mut shifted = Tensor::zeros(&[6, m, 3]);
    for r in 0..6 {
        for t in shift..m {
            for c in 0..3 {
                shifted.data_mut()[(r * m + t) * 3 + c] = input.data()[(r * m + t - shift) * 3 + c];
            }
        }
    }
    let a = last_conv(&config, &input);
    let b = last_conv(&config, &shifted);
    let margin = *receptive_field(&config).last().unwrap();
    for c in 0..config.conv_channels[2] {
        for t in margin + shift..m - margin {
            assert!((a[c * m + t - shift] - b[c * m + t]).abs() < 1e-9);
        }
    }
}

#[test]
fn fresh_model_loss_is_near_ln_c() {
    let spec = SynthSpec {
        sequences: 3,
        frames: 120,
        ..SynthSpec::default()
    };
    let ds = synthesize_dataset(&spec, CoordinateSpace::Local, 32).unwrap();
    let mut model = build_model(&NetConfig::desk(), 5).unwrap();
    let samples: Vec<Sample> = ds.items().iter().map(|i| Sample { image: &i.image, labels: &i.labels }).collect();
    let eval = evaluate(&mut model, &samples).unwrap();
    assert!((eval.loss - 10f64.ln()).abs() < 0.2, "{}", eval.loss);
}

#[test]
fn full_model_gradient_check() {
    let config = NetConfig {
        height: 5,
        conv_channels: vec![3, 4, 4, 3],
        classes: 3,
        ..NetConfig::default()
    };
    let mut model = build_model(&config, 2).unwrap();
    let mut rng = RngStream::new(3);
    let m = 30;
    let input = random_tensor(&[5, m, 3], 0.0, 1.0, &mut rng);
    let labels = LabelTrack::new((0..m).map(|_| rng.below(3)).collect(), 3).unwrap();
    let labels = labels.with_mask((0..m).map(|t| t % 4 != 1).collect()).unwrap();
    let mut obj = ModelObjective {
        model: &mut model,
        input,
        labels,
        mode: Mode::Train,
        seed: 6,
    };
    let report = gradient_check(&mut obj, &GradCheckOptions::default()).unwrap();
    assert!(report.passed(), "{report:?}");
    assert!(report.checked() > report.skipped());
}

#[test]
fn checkpoint_round_trip_and_zero_epochs() {
    let spec = SynthSpec {
        sequences: 2,
        frames: 80,
        classes: 3,
        ..SynthSpec::default()
    };
    let ds = synthesize_dataset(&spec, CoordinateSpace::Local, 32).unwrap();
    let config = NetConfig {
        classes: 3,
        ..NetConfig::desk()
    };
    let mut model = build_model(&config, 7).unwrap();
    let before = model.flat_params();
    let samples: Vec<Sample> = ds.items().iter().map(|i| Sample { image: &i.image, labels: &i.labels }).collect();
    let history = train(&mut model, &samples, &TrainConfig { epochs: 0, ..TrainConfig::default() }, &[]).unwrap();
    assert!(history.is_empty());
    assert_eq!(model.flat_params(), before);

    train(&mut model, &samples, &TrainConfig { epochs: 2, ..TrainConfig::default() }, &[]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let ckpt = Checkpoint::from_model(&model, CoordinateSpace::Local)
        .with_class_names(ds.class_names().to_vec())
        .unwrap();
    ckpt.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    assert_eq!(loaded, ckpt);
    let mut restored = loaded.to_model().unwrap();
    assert_eq!(restored.flat_params(), model.flat_params());
    let image = &ds.items()[0].image;
    assert_eq!(predict_labels(&mut restored, image).unwrap(), predict_labels(&mut model, image).unwrap());

    let wrong = NetConfig { classes: 4, ..config };
    let mut tampered = serde_json::to_value(&ckpt).unwrap();
    tampered["config"] = serde_json::to_value(&wrong).unwrap();
    let tampered: Checkpoint = serde_json::from_value(tampered).unwrap();
    assert!(tampered.to_model().is_err());
}

#[test]
fn training_rejects_mismatched_samples() {
    let spec = SynthSpec {
        sequences: 1,
        frames: 40,
        ..SynthSpec::default()
    };
    let ds = synthesize_dataset(&spec, CoordinateSpace::Local, 32).unwrap();
    let short = LabelTrack::new(vec![0; 39], 10).unwrap();
    let mut model = build_model(&NetConfig::desk(), 0).unwrap();
    let bad = [Sample { image: &ds.items()[0].image, labels: &short }];
    assert!(train(&mut model, &bad, &TrainConfig::default(), &[]).is_err());
    let tall = NetConfig { height: 64, ..NetConfig::desk() };
    let mut model = build_model(&tall, 0).unwrap();
    assert!(predict_labels(&mut model, &ds.items()[0].image).is_err());
}
