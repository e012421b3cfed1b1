use super::{MotionImage, PixelGrid};
use crate::error::{Error, Result};

const A: f64 = -0.5;

/// Cubic convolution kernel with `a = -0.5`.
pub fn cubic_weight(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Resample every column and channel along the row axis to `height` rows,
/// without clamping. Half-pixel-center alignment, edge replication.
pub fn resize_vertical_bicubic_unclamped(image: &PixelGrid, height: usize) -> Result<PixelGrid> {
    if height < 1 {
        return Err(Error::Config("target height must be at least 1".into()));
    }
    let n = image.rows();
    if n < 1 {
        return Err(Error::Shape("cannot resize an image with no rows".into()));
    }
    let cols = image.cols();
    let row_len = cols * 3;
    let scale = n as f64 / height as f64;
    let last = n as isize - 1;
    let mut out = vec![0.0; height * row_len];
    for (i, dst) in out.chunks_exact_mut(row_len).enumerate() {
        let src = (i as f64 + 0.5) * scale - 0.5;
        let base = src.floor();
        let frac = src - base;
        let base = base as isize;
        for k in -1..=2isize {
            let w = cubic_weight(frac - k as f64);
            if w == 0.0 {
                continue;
            }
            let r = (base + k).clamp(0, last) as usize;
            let src_row = &image.data()[r * row_len..(r + 1) * row_len];
            for (d, s) in dst.iter_mut().zip(src_row) {
                *d += w * s;
            }
        }
    }
    PixelGrid::new(height, cols, out)
}

/// Bicubic vertical resize to `height` rows, clamped to `[0, 255]`.
pub fn resize_vertical_bicubic(image: &PixelGrid, height: usize) -> Result<MotionImage> {
    let mut grid = if image.rows() == height {
        image.clone()
    } else {
        resize_vertical_bicubic_unclamped(image, height)?
    };
    for v in grid.data.iter_mut() {
        *v = v.clamp(0.0, 255.0);
    }
    MotionImage::new(grid, image.rows())
}
