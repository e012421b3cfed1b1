//! Datasets, label-noise protocols, cross-validation and metrics.

mod dataset;
mod kfold;
mod metrics;
mod noise;
mod runner;
pub mod synth;

pub use dataset::{Dataset, DatasetItem};
pub use kfold::{kfold_plan, Fold};
pub use metrics::{confusion, per_frame_accuracy, Confusion, FoldReport, MetricsReport, MetricsRow};
pub use noise::{boundary_mask, find_boundaries, inject_boundary_noise, inject_random_noise, NoiseMode, NoiseSpec};
pub use runner::{run_experiment, write_confusion_csv, write_metrics_csv, ExperimentOutcome};
pub use synth::{synthesize_dataset, synthesize_motion, Activity, SynthSequence, SynthSpec};
