//! Motion primitive label set and per-frame label tracks.

use crate::error::{Error, Result};

/// A motion primitive class: canonical name and display color (RGB in `[0, 1]`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub name: &'static str,
    pub color: [f64; 3],
}

/// The ten motion primitives, in class-index order.
pub const PRIMITIVES: [Primitive; 10] = [
    Primitive { name: "standing", color: [0.0, 0.0, 0.0] },
    Primitive { name: "beginRightStep", color: [1.0, 0.0, 0.0] },
    Primitive { name: "beginLeftStep", color: [0.0, 1.0, 0.0] },
    Primitive { name: "rightStep", color: [0.0, 0.0, 1.0] },
    Primitive { name: "leftStep", color: [1.0, 1.0, 0.0] },
    Primitive { name: "endRightStep", color: [1.0, 0.0, 1.0] },
    Primitive { name: "endLeftStep", color: [0.0, 1.0, 1.0] },
    Primitive { name: "turnRight", color: [0.72, 0.29, 0.94] },
    Primitive { name: "reach", color: [1.0, 0.66, 0.07] },
    Primitive { name: "retrieve", color: [0.39, 0.25, 0.15] },
];

pub const STANDING: usize = 0;
pub const BEGIN_RIGHT_STEP: usize = 1;
pub const BEGIN_LEFT_STEP: usize = 2;
pub const RIGHT_STEP: usize = 3;
pub const LEFT_STEP: usize = 4;
pub const END_RIGHT_STEP: usize = 5;
pub const END_LEFT_STEP: usize = 6;
pub const TURN: usize = 7;
pub const REACH: usize = 8;
pub const RETRIEVE: usize = 9;

/// Canonical class names for the full label set.
pub fn primitive_names() -> Vec<String> {
    PRIMITIVES.iter().map(|p| p.name.to_string()).collect()
}

/// 8-bit display color for a class index, `None` beyond the primitive table.
pub fn class_color(class: usize) -> Option<[u8; 3]> {
    PRIMITIVES
        .get(class)
        .map(|p| p.color.map(|c| (c * 255.0 + 0.5).floor() as u8))
}

/// Per-frame class indices with an optional loss mask (`true` = frame contributes to the loss).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTrack {
    classes: Vec<usize>,
    class_count: usize,
    loss_mask: Option<Vec<bool>>,
}

impl LabelTrack {
    pub fn new(classes: Vec<usize>, class_count: usize) -> Result<Self> {
        if let Some((t, &c)) = classes.iter().enumerate().find(|(_, &c)| c >= class_count) {
            return Err(Error::Labels(format!(
                "frame {t} has class {c}, but only {class_count} classes exist"
            )));
        }
        Ok(Self {
            classes,
            class_count,
            loss_mask: None,
        })
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.classes.len() {
            return Err(Error::Labels(format!(
                "mask has {} entries for {} frames",
                mask.len(),
                self.classes.len()
            )));
        }
        self.loss_mask = Some(mask);
        Ok(self)
    }

    pub fn without_mask(mut self) -> Self {
        self.loss_mask = None;
        self
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn loss_mask(&self) -> Option<&[bool]> {
        self.loss_mask.as_deref()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Whether frame `t` contributes to the loss.
    pub fn is_kept(&self, t: usize) -> bool {
        self.loss_mask.as_ref().is_none_or(|m| m[t])
    }

    /// Run-length segments as `(class, start, end)` with `end` exclusive.
    pub fn segments(&self) -> Vec<(usize, usize, usize)> {
        let mut out: Vec<(usize, usize, usize)> = Vec::new();
        for (t, &c) in self.classes.iter().enumerate() {
            match out.last_mut() {
                Some(last) if last.0 == c => last.2 = t + 1,
                _ => out.push((c, t, t + 1)),
            }
        }
        out
    }

    /// Replace the class at each frame, keeping class count and mask.
    pub(crate) fn with_classes(&self, classes: Vec<usize>) -> Self {
        debug_assert_eq!(classes.len(), self.classes.len());
        Self {
            classes,
            class_count: self.class_count,
            loss_mask: self.loss_mask.clone(),
        }
    }
}
