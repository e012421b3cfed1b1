use serde::{Deserialize, Serialize};

use super::model::Model;
use crate::error::{Error, Result};
use crate::image::MotionImage;
use crate::labels::LabelTrack;
use crate::nn::{argmax_per_frame, masked_cross_entropy, softmax_per_frame, Adam, AdamConfig, Mode, RngStream, Tensor};

const DROPOUT_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub adam: AdamConfig,
    /// Seeds the dropout stream.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

/// One training or evaluation sequence. A loss mask on `labels` is honored
/// during training and ignored during evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub image: &'a MotionImage,
    pub labels: &'a LabelTrack,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    /// Mean per-frame cross entropy.
    pub loss: f64,
    pub accuracy: f64,
    pub frames: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean loss over the kept frames of the epoch's training pass.
    pub train_loss: f64,
    /// Accuracy of the training-pass predictions (dropout active) against the
    /// training labels, over kept frames.
    pub train_accuracy: f64,
    pub eval: Option<EvalResult>,
}

fn check_sample(model: &Model, s: &Sample<'_>) -> Result<()> {
    if s.image.width() != s.labels.len() {
        return Err(Error::Shape(format!(
            "image has {} frames, labels have {}",
            s.image.width(),
            s.labels.len()
        )));
    }
    if s.labels.class_count() > model.config().classes {
        return Err(Error::Shape(format!(
            "labels use {} classes, network has {}",
            s.labels.class_count(),
            model.config().classes
        )));
    }
    Ok(())
}

/// Per-sequence Adam training in dataset order; one update per image.
/// When `eval` is non-empty it is scored after every epoch.
pub fn train(
    model: &mut Model,
    samples: &[Sample<'_>],
    config: &TrainConfig,
    eval: &[Sample<'_>],
) -> Result<Vec<EpochRecord>> {
    let inputs = samples
        .iter()
        .map(|s| {
            check_sample(model, s)?;
            model.input_tensor(s.image)
        })
        .collect::<Result<Vec<Tensor>>>()?;
    for s in eval {
        check_sample(model, s)?;
    }
    let mut rng = RngStream::derive(config.seed, DROPOUT_STREAM);
    let mut adam = Adam::new(config.adam);
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let mut loss_sum = 0.0;
        let mut kept_total = 0usize;
        let mut correct = 0usize;
        for (i, (s, input)) in samples.iter().zip(&inputs).enumerate() {
            let logits = model.forward_logits(input, Mode::Train, &mut rng)?;
            let probs = softmax_per_frame(&logits)?;
            let (loss, grad) = masked_cross_entropy(&probs, s.labels, s.labels.loss_mask())?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "loss became {loss} at epoch {epoch}, sequence {i}"
                )));
            }
            model.zero_grad();
            model.backward(&grad)?;
            adam.step(model.params_mut())?;

            let kept: Vec<usize> = (0..s.labels.len()).filter(|&t| s.labels.is_kept(t)).collect();
            let pred = argmax_per_frame(&probs)?;
            correct += kept.iter().filter(|&&t| pred[t] == s.labels.classes()[t]).count();
            loss_sum += loss * kept.len() as f64;
            kept_total += kept.len();
        }
        for p in model.params() {
            p.value.check_finite(&p.name)?;
        }
        let denom = kept_total.max(1) as f64;
        let eval = if eval.is_empty() {
            None
        } else {
            Some(evaluate(model, eval)?)
        };
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / denom,
            train_accuracy: correct as f64 / denom,
            eval,
        };
        log::debug!("{record:?}");
        history.push(record);
    }
    Ok(history)
}

/// Inference-mode loss and per-frame accuracy pooled over all frames.
pub fn evaluate(model: &mut Model, samples: &[Sample<'_>]) -> Result<EvalResult> {
    let mut rng = RngStream::new(0);
    let mut loss_sum = 0.0;
    let mut frames = 0;
    let mut correct = 0;
    for s in samples {
        check_sample(model, s)?;
        let probs = model.forward(s.image, Mode::Infer, &mut rng)?;
        let (loss, _) = masked_cross_entropy(&probs, s.labels, None)?;
        let pred = argmax_per_frame(&probs)?;
        correct += pred.iter().zip(s.labels.classes()).filter(|(p, t)| p == t).count();
        loss_sum += loss * s.labels.len() as f64;
        frames += s.labels.len();
    }
    let denom = frames.max(1) as f64;
    Ok(EvalResult {
        loss: loss_sum / denom,
        accuracy: correct as f64 / denom,
        frames,
        correct,
    })
}
