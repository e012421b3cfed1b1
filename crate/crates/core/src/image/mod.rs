//! Motion images: normalized joint positions laid out as an RGB raster.

mod export;
mod resample;

pub use export::{
    export_npy, export_png, import_png, render_label_strip, render_probability_heatmap,
    save_rgb_png, stack_strips, to_rgb8, upsample_output_for_viz,
};
pub use image::RgbImage;
pub use resample::{cubic_weight, resize_vertical_bicubic, resize_vertical_bicubic_unclamped};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mocap::CartesianSequence;

/// Default standardized motion-image height.
pub const DEFAULT_HEIGHT: usize = 224;

/// Real-valued `rows × cols × 3` raster.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl PixelGrid {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols * 3 {
            return Err(Error::Shape(format!(
                "{} values for a {rows} x {cols} x 3 grid",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols * 3],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(row * self.cols + col) * 3 + channel]
    }

    pub fn set(&mut self, row: usize, col: usize, channel: usize, value: f64) {
        self.data[(row * self.cols + col) * 3 + channel] = value;
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

/// Per-channel range used for normalization; stored alongside exported images
/// so pixel values can be mapped back to coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRange {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl ChannelRange {
    /// Inverse of the normalization map for channel `c`.
    pub fn denormalize(&self, c: usize, pixel: f64) -> f64 {
        self.min[c] + pixel / 255.0 * (self.max[c] - self.min[c])
    }
}

/// `H × M × 3` image with values in `[0, 255]`; one column per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionImage {
    pixels: PixelGrid,
    source_height: usize,
}

impl MotionImage {
    pub fn new(pixels: PixelGrid, source_height: usize) -> Result<Self> {
        if let Some(v) = pixels.data.iter().find(|v| !(0.0..=255.0).contains(*v)) {
            return Err(Error::Shape(format!("pixel value {v} outside [0, 255]")));
        }
        Ok(Self {
            pixels,
            source_height,
        })
    }

    pub fn pixels(&self) -> &PixelGrid {
        &self.pixels
    }

    pub fn height(&self) -> usize {
        self.pixels.rows
    }

    pub fn width(&self) -> usize {
        self.pixels.cols
    }

    pub fn source_height(&self) -> usize {
        self.source_height
    }
}

/// Affine map of each XYZ channel onto `[0, 255]` using the sequence-wide
/// minimum and maximum. A constant channel maps to 0.
pub fn normalize_to_rgb(seq: &CartesianSequence) -> (PixelGrid, ChannelRange) {
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for p in seq.positions().chunks_exact(3) {
        for c in 0..3 {
            min[c] = min[c].min(p[c]);
            max[c] = max[c].max(p[c]);
        }
    }
    let data = seq
        .positions()
        .chunks_exact(3)
        .flat_map(|p| {
            (0..3).map(move |c| {
                let span = max[c] - min[c];
                if span > 0.0 {
                    255.0 * (p[c] - min[c]) / span
                } else {
                    0.0
                }
            })
        })
        .collect();
    let grid = PixelGrid {
        rows: seq.joint_count(),
        cols: seq.frame_count(),
        data,
    };
    (grid, ChannelRange { min, max })
}

/// Full pipeline from joint positions to a standardized motion image.
pub fn motion_image(seq: &CartesianSequence, height: usize) -> Result<(MotionImage, ChannelRange)> {
    let (grid, range) = normalize_to_rgb(seq);
    let image = resize_vertical_bicubic(&grid, height)?;
    Ok((image, range))
}
