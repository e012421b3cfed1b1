use serde::Serialize;

use crate::error::{Error, Result};
use crate::labels::LabelTrack;

/// `counts[truth][pred]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Confusion {
    classes: usize,
    counts: Vec<u64>,
}

impl Confusion {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.classes + pred]
    }

    pub fn add(&mut self, truth: usize, pred: usize) {
        self.counts[truth * self.classes + pred] += 1;
    }

    pub fn merge(&mut self, other: &Confusion) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::Shape("confusion matrices differ in size".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|k| self.get(k, k)).sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        (0..self.classes).map(|p| self.get(truth, p)).sum()
    }

    /// `trace / total`; zero when empty.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.trace() as f64 / n as f64,
        }
    }
}

fn check_pair(pred: &LabelTrack, truth: &LabelTrack) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "prediction has {} frames, ground truth {}",
            pred.len(),
            truth.len()
        )));
    }
    Ok(())
}

/// Fraction of frames where prediction equals ground truth (0 for empty tracks).
pub fn per_frame_accuracy(pred: &LabelTrack, truth: &LabelTrack) -> Result<f64> {
    check_pair(pred, truth)?;
    if truth.is_empty() {
        return Ok(0.0);
    }
    let hits = pred.classes().iter().zip(truth.classes()).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

pub fn confusion(pred: &LabelTrack, truth: &LabelTrack) -> Result<Confusion> {
    check_pair(pred, truth)?;
    let classes = pred.class_count().max(truth.class_count());
    let mut c = Confusion::new(classes);
    for (&p, &t) in pred.classes().iter().zip(truth.classes()) {
        c.add(t, p);
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_items: Vec<usize>,
    pub frames: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Pooled over all test frames of all folds.
    pub per_frame_accuracy: f64,
    pub confusion: Confusion,
    pub folds: Vec<FoldReport>,
    pub wall_clock_seconds: f64,
}

/// One line of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub fold: usize,
    pub epoch: usize,
    pub split: &'static str,
    pub loss: f64,
    pub accuracy: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track(c: &[usize]) -> LabelTrack {
        LabelTrack::new(c.to_vec(), 3).unwrap()
    }

    #[test]
    fn identical_and_disjoint() {
        let a = track(&[0, 1, 2, 2]);
        assert_eq!(per_frame_accuracy(&a, &a).unwrap(), 1.0);
        let b = track(&[1, 2, 0, 0]);
        assert_eq!(per_frame_accuracy(&b, &a).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(per_frame_accuracy(&track(&[0]), &track(&[0, 1])).is_err());
        assert!(confusion(&track(&[0]), &track(&[0, 1])).is_err());
    }

    #[test]
    fn confusion_rows_and_trace() {
        let truth = track(&[0, 0, 1, 2, 2, 2]);
        let pred = track(&[0, 1, 1, 2, 0, 2]);
        let c = confusion(&pred, &truth).unwrap();
        assert_eq!(c.get(0, 1), 1);
        assert_eq!(c.row_sum(2), 3);
        assert_eq!(c.trace(), 4);
        assert_eq!(c.accuracy(), per_frame_accuracy(&pred, &truth).unwrap());
    }
}
