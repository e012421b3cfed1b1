use std::path::Path;
use std::time::Instant;

use super::dataset::Dataset;
use super::kfold::{kfold_plan, Fold};
use super::metrics::{Confusion, FoldReport, MetricsReport, MetricsRow};
use super::noise::NoiseSpec;
use crate::dtfcn::{build_model, evaluate, predict_labels, train, Model, NetConfig, Sample, TrainConfig};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::labels::LabelTrack;
use crate::nn::RngStream;

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub report: MetricsReport,
    /// Final model of each fold, in fold order.
    pub models: Vec<Model>,
    pub rows: Vec<MetricsRow>,
}

/// Cross-validated training and evaluation. Noise touches only the labels of
/// training items; every test score is computed against the clean labels.
/// `folds == 1` trains and tests on the whole dataset. Fold `k` derives its
/// initialization and dropout seed from `(train.seed, k)`.
pub fn run_experiment(
    dataset: &Dataset,
    net: &NetConfig,
    train_config: &TrainConfig,
    noise: &NoiseSpec,
    folds: usize,
) -> Result<ExperimentOutcome> {
    let started = Instant::now();
    if dataset.is_empty() {
        return Err(Error::Config("dataset is empty".into()));
    }
    if dataset.class_count() != net.classes {
        return Err(Error::Config(format!(
            "dataset has {} classes, network {}",
            dataset.class_count(),
            net.classes
        )));
    }
    let plan = match folds {
        1 => vec![Fold {
            train: (0..dataset.len()).collect(),
            test: (0..dataset.len()).collect(),
        }],
        _ => kfold_plan(dataset.len(), folds)?,
    };
    let items = dataset.items();
    let noisy: Vec<LabelTrack> = items.iter().enumerate().map(|(i, item)| noise.apply(&item.labels, i)).collect();

    let mut confusion = Confusion::new(dataset.class_count());
    let mut fold_reports = Vec::with_capacity(plan.len());
    let mut models = Vec::with_capacity(plan.len());
    let mut rows = Vec::new();
    for (k, fold) in plan.iter().enumerate() {
        let seed = RngStream::mix(train_config.seed, k as u64);
        let mut model = build_model(net, seed)?;
        let fold_config = TrainConfig {
            seed,
            ..train_config.clone()
        };
        let train_samples: Vec<Sample<'_>> = fold
            .train
            .iter()
            .map(|&i| Sample {
                image: &items[i].image,
                labels: &noisy[i],
            })
            .collect();
        let test_samples: Vec<Sample<'_>> = fold
            .test
            .iter()
            .map(|&i| Sample {
                image: &items[i].image,
                labels: &items[i].labels,
            })
            .collect();

        let initial = evaluate(&mut model, &test_samples)?;
        rows.push(MetricsRow {
            fold: k,
            epoch: 0,
            split: "test",
            loss: initial.loss,
            accuracy: initial.accuracy,
        });
        for record in train(&mut model, &train_samples, &fold_config, &test_samples)? {
            rows.push(MetricsRow {
                fold: k,
                epoch: record.epoch,
                split: "train",
                loss: record.train_loss,
                accuracy: record.train_accuracy,
            });
            if let Some(eval) = record.eval {
                rows.push(MetricsRow {
                    fold: k,
                    epoch: record.epoch,
                    split: "test",
                    loss: eval.loss,
                    accuracy: eval.accuracy,
                });
            }
        }

        let mut fold_confusion = Confusion::new(dataset.class_count());
        for &i in &fold.test {
            let pred = predict_labels(&mut model, &items[i].image)?;
            let truth = &items[i].labels;
            for (&p, &t) in pred.classes().iter().zip(truth.classes()) {
                fold_confusion.add(t, p);
            }
        }
        log::info!(
            "fold {k}: {} train / {} test items, test accuracy {:.4}",
            fold.train.len(),
            fold.test.len(),
            fold_confusion.accuracy()
        );
        fold_reports.push(FoldReport {
            fold: k,
            test_items: fold.test.clone(),
            frames: fold_confusion.total(),
            accuracy: fold_confusion.accuracy(),
        });
        confusion.merge(&fold_confusion)?;
        models.push(model);
    }
    let report = MetricsReport {
        per_frame_accuracy: confusion.accuracy(),
        confusion,
        folds: fold_reports,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(ExperimentOutcome { report, models, rows })
}

fn csv_bytes(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    write(&mut writer)?;
    writer
        .into_inner()
        .map_err(|e| Error::Numeric(format!("csv buffer: {e}")))
}

/// Columns `fold, epoch, split, loss, accuracy`.
pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let bytes = csv_bytes(|w| {
        for row in rows {
            w.serialize(row)?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

/// One row per ground-truth class, one column per predicted class.
pub fn write_confusion_csv(path: &Path, confusion: &Confusion, class_names: &[String]) -> Result<()> {
    if class_names.len() != confusion.classes() {
        return Err(Error::Shape(format!(
            "{} class names for a {}-class confusion matrix",
            class_names.len(),
            confusion.classes()
        )));
    }
    let bytes = csv_bytes(|w| {
        let mut header = vec!["truth".to_string()];
        header.extend(class_names.iter().cloned());
        w.write_record(&header)?;
        for (t, name) in class_names.iter().enumerate() {
            let mut record = vec![name.clone()];
            record.extend((0..confusion.classes()).map(|p| confusion.get(t, p).to_string()));
            w.write_record(&record)?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}
