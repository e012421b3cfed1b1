use std::path::{Path, PathBuf};

use clap::Args;
use motionseg_core::dtfcn::{
    dilations, padding_schedule, parameter_count, predict_labels, receptive_field, Checkpoint, ModelObjective,
};
use motionseg_core::experiments::synth::{synthesize_motion, Activity, SynthSpec};
use motionseg_core::experiments::{
    confusion, per_frame_accuracy, run_experiment, write_confusion_csv, write_metrics_csv, Dataset, NoiseSpec,
};
use motionseg_core::image::{
    export_npy, export_png, motion_image, render_label_strip, render_probability_heatmap, save_rgb_png, stack_strips, ChannelRange,
    DEFAULT_HEIGHT,
};
use motionseg_core::io::{write_atomic, write_json, LabelFile, Manifest, ManifestEntry};
use motionseg_core::mocap::{parse_bvh, to_cartesian, write_bvh};
use motionseg_core::nn::{gradient_check, AdamConfig, GradCheckOptions, Mode, RngStream};
use motionseg_core::{build_model, CoordinateSpace, Error, LabelTrack, Result, TrainConfig, PRIMITIVES};
use serde::Serialize;

use crate::config::{load_net, Preset, RunConfig};
use crate::Failure;

const STRIP_HEIGHT: usize = 16;

fn read_bvh(path: &Path) -> Result<(motionseg_core::Skeleton, motionseg_core::MotionSequence)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_bvh(&text)?)
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    pub bvh: PathBuf,
    /// `local` (root transform removed) or `global`.
    #[arg(long, default_value = "local")]
    pub space: CoordinateSpace,
    /// Image rows after vertical resampling.
    #[arg(long, default_value_t = DEFAULT_HEIGHT)]
    pub height: usize,
    /// Output path; `.npy` writes float64 values, anything else an 8-bit PNG.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct Sidecar {
    joints: usize,
    frames: usize,
    height: usize,
    space: CoordinateSpace,
    channel_min: [f64; 3],
    channel_max: [f64; 3],
}

pub fn convert(args: ConvertArgs) -> std::result::Result<(), Failure> {
    let (skeleton, motion) = read_bvh(&args.bvh)?;
    let cartesian = to_cartesian(&skeleton, &motion, args.space)?;
    let (image, range): (_, ChannelRange) = motion_image(&cartesian, args.height)?;
    let npy = args.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("npy"));
    if npy {
        export_npy(&image, &args.out)?;
    } else {
        export_png(&image, &args.out)?;
    }
    let sidecar = Sidecar {
        joints: skeleton.joint_count(),
        frames: motion.frame_count(),
        height: image.height(),
        space: args.space,
        channel_min: range.min,
        channel_max: range.max,
    };
    let sidecar_path = args.out.with_extension("json");
    write_json(&sidecar_path, &sidecar)?;
    log::info!(
        "{}: {} joints x {} frames -> {} ({}x{})",
        args.bvh.display(),
        sidecar.joints,
        sidecar.frames,
        args.out.display(),
        image.height(),
        image.width()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory for BVH files, label files and `manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 28)]
    pub sequences: usize,
    #[arg(long, default_value_t = 480)]
    pub frames: usize,
    #[arg(long, default_value_t = 48.0)]
    pub fps: f64,
    #[arg(long, default_value_t = 19)]
    pub joints: usize,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rotation noise in degrees.
    #[arg(long, default_value_t = 0.5)]
    pub jitter: f64,
    /// Comma-separated subset of walk, turn, pick; empty for standing only.
    #[arg(long, value_delimiter = ',', default_value = "walk,turn,pick")]
    pub activities: Vec<String>,
}

fn parse_activity(s: &str) -> Result<Activity> {
    match s.trim() {
        "walk" => Ok(Activity::Walk),
        "turn" => Ok(Activity::Turn),
        "pick" => Ok(Activity::Pick),
        other => Err(Error::Config(format!("unknown activity {other:?}"))),
    }
}

pub fn synth(args: SynthArgs) -> std::result::Result<(), Failure> {
    let activities = args
        .activities
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_activity(s))
        .collect::<Result<Vec<_>>>()?;
    let spec = SynthSpec {
        sequences: args.sequences,
        frames: args.frames,
        fps: args.fps,
        joint_count: args.joints,
        classes: args.classes,
        seed: args.seed,
        activities,
        jitter_deg: args.jitter,
    };
    log::info!("synthesizing with {}", serde_json::to_string(&spec).unwrap_or_default());
    let sequences = synthesize_motion(&spec)?;
    create_dir(&args.out)?;
    let names = spec.class_names();
    let mut items = Vec::with_capacity(sequences.len());
    for s in &sequences {
        let bvh = PathBuf::from(format!("{}.bvh", s.name));
        let labels = PathBuf::from(format!("{}.labels.json", s.name));
        write_atomic(&args.out.join(&bvh), write_bvh(&s.skeleton, &s.motion).as_bytes())?;
        LabelFile::from_track(&s.labels, &names)?.save(&args.out.join(&labels))?;
        items.push(ManifestEntry {
            bvh,
            labels,
            name: Some(s.name.clone()),
        });
    }
    write_json(&args.out.join("manifest.json"), &Manifest { items })?;
    log::info!("wrote {} sequences to {}", sequences.len(), args.out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset manifest JSON listing BVH and label file pairs.
    pub manifest: PathBuf,
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Network preset, used when the configuration supplies no `net`.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Cross-validation folds; 1 trains and tests on every item.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Passes over the training items per fold.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// `none`, `random:<fraction>`, `window:<n>` or `mask:<n>`.
    #[arg(long)]
    pub noise: Option<String>,
    /// Seeds initialization and dropout; fold k derives its own stream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seeds the label-noise streams.
    #[arg(long)]
    pub noise_seed: Option<u64>,
    /// `local` (root transform removed) or `global`.
    #[arg(long)]
    pub space: Option<CoordinateSpace>,
    /// Adam step size.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Output directory for checkpoints, metrics and the resolved config.
    #[arg(long)]
    pub out: PathBuf,
}

fn resolve_run_config(args: &TrainArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(preset) = args.preset {
        config.net = preset.net();
    }
    if let Some(v) = args.folds {
        config.folds = v;
    }
    if let Some(v) = args.epochs {
        config.epochs = v;
    }
    if let Some(v) = &args.noise {
        config.noise = v.clone();
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.noise_seed {
        config.noise_seed = v;
    }
    if let Some(v) = args.space {
        config.space = v;
    }
    if let Some(v) = args.learning_rate {
        config.learning_rate = v;
    }
    config.validate()?;
    Ok(config)
}

pub fn train(args: TrainArgs) -> std::result::Result<(), Failure> {
    let mut config = resolve_run_config(&args)?;
    let dataset = Dataset::from_manifest(&args.manifest, config.space, config.net.height)?;
    if config.net.classes != dataset.class_count() {
        log::info!(
            "network classes set to {} to match the dataset",
            dataset.class_count()
        );
        config.net.classes = dataset.class_count();
    }
    log::info!(
        "resolved config: {}",
        serde_json::to_string(&config).map_err(|e| Error::Config(e.to_string()))?
    );
    log::info!("seeds: model/dropout {} noise {}", config.seed, config.noise_seed);

    let noise = NoiseSpec::new(config.noise_mode()?, config.noise_seed)?;
    let train_config = TrainConfig {
        epochs: config.epochs,
        adam: AdamConfig {
            learning_rate: config.learning_rate,
            ..AdamConfig::default()
        },
        seed: config.seed,
    };
    let outcome = run_experiment(&dataset, &config.net, &train_config, &noise, config.folds)?;

    create_dir(&args.out)?;
    write_json(&args.out.join("resolved_config.json"), &config)?;
    for (k, model) in outcome.models.iter().enumerate() {
        Checkpoint::from_model(model, config.space)
            .with_class_names(dataset.class_names().to_vec())?
            .save(&args.out.join(format!("fold_{k}.ckpt.json")))?;
    }
    write_metrics_csv(&args.out.join("metrics.csv"), &outcome.rows)?;
    write_confusion_csv(&args.out.join("confusion.csv"), &outcome.report.confusion, dataset.class_names())?;
    write_json(&args.out.join("report.json"), &outcome.report)?;
    log::info!(
        "per-frame accuracy {:.4} over {} folds in {:.1}s",
        outcome.report.per_frame_accuracy,
        outcome.report.folds.len(),
        outcome.report.wall_clock_seconds
    );
    println!("accuracy\t{:.6}", outcome.report.per_frame_accuracy);
    Ok(())
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Checkpoint written by `train`.
    pub checkpoint: PathBuf,
    pub bvh: PathBuf,
    /// Predicted label file (JSON segments).
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth labels; enables accuracy reporting and the truth strip in `--viz`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Label strip image: truth on top (when given) and prediction below.
    #[arg(long)]
    pub viz: Option<PathBuf>,
    /// Per-class probability heat map image.
    #[arg(long)]
    pub probs: Option<PathBuf>,
}

fn class_names_for(checkpoint: &Checkpoint) -> Vec<String> {
    let classes = checkpoint.config.classes;
    if checkpoint.class_names.len() == classes {
        checkpoint.class_names.clone()
    } else if classes == PRIMITIVES.len() {
        motionseg_core::labels::primitive_names()
    } else {
        (0..classes).map(|k| format!("class{k}")).collect()
    }
}

pub fn segment(args: SegmentArgs) -> std::result::Result<(), Failure> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let mut model = checkpoint.to_model()?;
    let (skeleton, motion) = read_bvh(&args.bvh)?;
    let cartesian = to_cartesian(&skeleton, &motion, checkpoint.space)?;
    let (image, _) = motion_image(&cartesian, checkpoint.config.height)?;
    let pred = predict_labels(&mut model, &image)?;
    let names = class_names_for(&checkpoint);
    LabelFile::from_track(&pred, &names)?.save(&args.out)?;

    let truth = match &args.truth {
        Some(path) => {
            let track = LabelFile::load(path)?.to_track()?;
            let acc = per_frame_accuracy(&pred, &track)?;
            println!("accuracy\t{acc:.6}");
            Some(track)
        }
        None => None,
    };
    if let Some(path) = &args.viz {
        let mut strips = Vec::new();
        if let Some(t) = &truth {
            strips.push(render_label_strip(t, STRIP_HEIGHT)?);
        }
        strips.push(render_label_strip(&pred, STRIP_HEIGHT)?);
        save_rgb_png(&stack_strips(&strips)?, path)?;
    }
    if let Some(path) = &args.probs {
        let probs = model.forward(&image, Mode::Infer, &mut RngStream::new(0))?;
        save_rgb_png(&render_probability_heatmap(&probs, 4)?, path)?;
    }
    log::info!("{}: {} frames, {} segments", args.bvh.display(), pred.len(), pred.segments().len());
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted label file.
    pub pred: PathBuf,
    /// Ground-truth label file.
    pub truth: PathBuf,
    /// Write the confusion matrix (rows = truth, columns = prediction) as CSV.
    #[arg(long)]
    pub confusion: Option<PathBuf>,
}

pub fn eval(args: EvalArgs) -> std::result::Result<(), Failure> {
    let pred_file = LabelFile::load(&args.pred)?;
    let truth_file = LabelFile::load(&args.truth)?;
    if pred_file.class_names != truth_file.class_names {
        return Err(Error::Labels("prediction and truth use different class names".into()).into());
    }
    let pred: LabelTrack = pred_file.to_track()?;
    let truth = truth_file.to_track()?;
    let acc = per_frame_accuracy(&pred, &truth)?;
    println!("accuracy\t{acc:.6}");
    if let Some(path) = &args.confusion {
        write_confusion_csv(path, &confusion(&pred, &truth)?, &truth_file.class_names)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct RfsArgs {
    /// Odd temporal kernel width.
    #[arg(long, default_value_t = 3)]
    pub w: usize,
    #[arg(long, default_value_t = DEFAULT_HEIGHT)]
    pub height: usize,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    /// Conv layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "64,64,128,256,512")]
    pub channels: Vec<usize>,
}

fn with_commas(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

pub fn rfs(args: RfsArgs) -> std::result::Result<(), Failure> {
    let config = motionseg_core::NetConfig {
        w: args.w,
        height: args.height,
        classes: args.classes,
        conv_channels: args.channels,
        ..motionseg_core::NetConfig::default()
    };
    config.validate()?;
    println!("layer\tchannels\td\tp\tRFS");
    let d = dilations(&config);
    let p = padding_schedule(&config);
    let r = receptive_field(&config);
    for (l, c) in config.conv_channels.iter().enumerate() {
        println!("conv{}\t{}\t{}\t{}\t{}", l + 1, c, d[l], p[l], r[l]);
    }
    println!("params\t{}", with_commas(parameter_count(&config)));
    Ok(())
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Network config JSON; defaults to the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "desk")]
    pub preset: Preset,
    /// Frames of the random input sequence.
    #[arg(long, default_value_t = 12)]
    pub frames: usize,
    /// Entries checked per parameter array.
    #[arg(long, default_value_t = 24)]
    pub samples: usize,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn gradcheck(args: GradcheckArgs) -> std::result::Result<(), Failure> {
    let net = load_net(args.config.as_deref(), args.preset)?;
    if args.frames == 0 {
        return Err(Error::Config("frames must be positive".into()).into());
    }
    let mut model = build_model(&net, args.seed)?;
    let mut rng = RngStream::derive(args.seed, 7);
    let values: Vec<f64> = (0..net.height * args.frames * net.input_channels)
        .map(|_| rng.uniform_in(0.0, 1.0))
        .collect();
    let input = motionseg_core::Tensor::new(vec![net.height, args.frames, net.input_channels], values)?;
    let labels = LabelTrack::new((0..args.frames).map(|_| rng.below(net.classes)).collect(), net.classes)?;
    let mut objective = ModelObjective {
        model: &mut model,
        input,
        labels,
        mode: Mode::Train,
        seed: args.seed,
    };
    let options = GradCheckOptions {
        tolerance: args.tolerance,
        max_entries_per_param: Some(args.samples),
        seed: args.seed,
        ..GradCheckOptions::default()
    };
    let report = gradient_check(&mut objective, &options)?;
    for p in &report.params {
        println!("{}\tchecked {}\tskipped {}\tmax rel error {:.3e}", p.name, p.checked, p.skipped, p.max_rel_error);
    }
    println!(
        "{}\tmax rel error {:.3e} (tolerance {:.1e})",
        if report.passed() { "PASS" } else { "FAIL" },
        report.max_rel_error,
        report.tolerance
    );
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check("gradient check failed".into()))
    }
}
