use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::LabelTrack;
use crate::nn::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum NoiseMode {
    /// Replace `round(pct·M)` frames with uniformly drawn classes.
    RandomPct { pct: f64 },
    /// Randomize every frame within `n` of a segment boundary.
    BoundaryWindow { n: usize },
    /// Exclude every frame within `n` of a segment boundary from the loss.
    BoundaryMask { n: usize },
}

/// A training-label corruption protocol and its seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub mode: NoiseMode,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn clean() -> Self {
        Self {
            mode: NoiseMode::RandomPct { pct: 0.0 },
            seed: 0,
        }
    }

    pub fn new(mode: NoiseMode, seed: u64) -> Result<Self> {
        if let NoiseMode::RandomPct { pct } = mode {
            if !(0.0..=1.0).contains(&pct) {
                return Err(Error::Config(format!("noise percentage {pct} outside [0, 1]")));
            }
        }
        Ok(Self { mode, seed })
    }

    /// Corrupt the training labels of sequence `index`. Each sequence draws
    /// from its own stream, so reordering a dataset leaves each sequence's
    /// corruption unchanged.
    pub fn apply(&self, labels: &LabelTrack, index: usize) -> LabelTrack {
        let mut rng = RngStream::derive(self.seed, index as u64);
        match self.mode {
            NoiseMode::RandomPct { pct } => random_noise_with(labels, pct, &mut rng),
            NoiseMode::BoundaryWindow { n } => boundary_noise_with(labels, n, &mut rng),
            NoiseMode::BoundaryMask { n } => {
                let mask = boundary_mask(labels, n);
                labels.clone().with_mask(mask).expect("mask has one entry per frame")
            }
        }
    }
}

/// Parses `none`, `random:<pct>`, `window:<n>` and `mask:<n>`; the percentage
/// is a fraction in `[0, 1]`.
impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad noise spec {s:?}; use none, random:<pct>, window:<n> or mask:<n>"));
        if s == "none" {
            return Ok(NoiseMode::RandomPct { pct: 0.0 });
        }
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "random" => {
                let pct: f64 = arg.parse().map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&pct) {
                    return Err(Error::Config(format!("noise percentage {pct} outside [0, 1]")));
                }
                Ok(NoiseMode::RandomPct { pct })
            }
            "window" => Ok(NoiseMode::BoundaryWindow { n: arg.parse().map_err(|_| bad())? }),
            "mask" => Ok(NoiseMode::BoundaryMask { n: arg.parse().map_err(|_| bad())? }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseMode::RandomPct { pct } if *pct == 0.0 => write!(f, "none"),
            NoiseMode::RandomPct { pct } => write!(f, "random:{pct}"),
            NoiseMode::BoundaryWindow { n } => write!(f, "window:{n}"),
            NoiseMode::BoundaryMask { n } => write!(f, "mask:{n}"),
        }
    }
}

fn random_noise_with(labels: &LabelTrack, pct: f64, rng: &mut RngStream) -> LabelTrack {
    let m = labels.len();
    let count = ((pct.clamp(0.0, 1.0) * m as f64) + 0.5).floor() as usize;
    let count = count.min(m);
    let mut classes = labels.classes().to_vec();
    let positions = index::sample(rng.inner(), m, count);
    for t in positions.iter() {
        classes[t] = rng.below(labels.class_count());
    }
    labels.with_classes(classes)
}

/// Set exactly `round(pct·M)` distinct frames to uniformly drawn classes
/// (which may equal the original). Deterministic for a given seed.
pub fn inject_random_noise(labels: &LabelTrack, pct: f64, seed: u64) -> LabelTrack {
    random_noise_with(labels, pct, &mut RngStream::new(seed))
}

/// Frames `t ≥ 1` whose class differs from frame `t − 1`.
pub fn find_boundaries(labels: &LabelTrack) -> Vec<usize> {
    labels
        .classes()
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] != w[1])
        .map(|(t, _)| t + 1)
        .collect()
}

/// Union of `[b − n, b + n]` over all boundaries, truncated to the track.
fn boundary_windows(labels: &LabelTrack, n: usize) -> BTreeSet<usize> {
    let last = labels.len().saturating_sub(1);
    find_boundaries(labels)
        .into_iter()
        .flat_map(|b| b.saturating_sub(n)..=(b + n).min(last))
        .collect()
}

fn boundary_noise_with(labels: &LabelTrack, n: usize, rng: &mut RngStream) -> LabelTrack {
    let mut classes = labels.classes().to_vec();
    for t in boundary_windows(labels, n) {
        classes[t] = rng.below(labels.class_count());
    }
    labels.with_classes(classes)
}

/// Randomize all frames within `n` of a boundary (windows of width `2n + 1`).
pub fn inject_boundary_noise(labels: &LabelTrack, n: usize, seed: u64) -> LabelTrack {
    boundary_noise_with(labels, n, &mut RngStream::new(seed))
}

/// Loss mask that is `false` inside boundary windows and `true` elsewhere.
pub fn boundary_mask(labels: &LabelTrack, n: usize) -> Vec<bool> {
    let mut mask = vec![true; labels.len()];
    for t in boundary_windows(labels, n) {
        mask[t] = false;
    }
    mask
}
