use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, Rgb, RgbImage};

use super::{MotionImage, PixelGrid};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::labels::{class_color, LabelTrack};
use crate::nn::{argmax_per_frame, Tensor};

fn quantize(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// 8-bit quantization with round-half-up.
pub fn to_rgb8(img: &MotionImage) -> RgbImage {
    let grid = img.pixels();
    RgbImage::from_fn(grid.cols() as u32, grid.rows() as u32, |x, y| {
        let (r, c) = (y as usize, x as usize);
        Rgb([0, 1, 2].map(|ch| quantize(grid.get(r, c, ch))))
    })
}

fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

/// Atomically write any RGB raster as PNG.
pub fn save_rgb_png(img: &RgbImage, path: &Path) -> Result<()> {
    write_atomic(path, &encode_png(img)?)
}

/// Write an 8-bit RGB PNG with `height` rows and one column per frame.
pub fn export_png(img: &MotionImage, path: impl AsRef<Path>) -> Result<()> {
    save_rgb_png(&to_rgb8(img), path.as_ref())
}

pub fn import_png(path: impl AsRef<Path>) -> Result<MotionImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let rgb = image::load_from_memory_with_format(&bytes, ImageFormat::Png)?.into_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data = rgb.into_raw().into_iter().map(f64::from).collect();
    MotionImage::new(PixelGrid::new(h, w, data)?, h)
}

/// Write the real-valued `H × M × 3` tensor as a little-endian float64 `.npy` file.
pub fn export_npy(img: &MotionImage, path: impl AsRef<Path>) -> Result<()> {
    let header = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, {}, 3), }}",
        img.height(),
        img.width()
    );
    // magic (6) + version (2) + header length (2) + header + '\n', padded to 64 bytes
    let unpadded = 10 + header.len() + 1;
    let padding = (64 - unpadded % 64) % 64;
    let header = format!("{header}{}\n", " ".repeat(padding));
    let mut out = Vec::with_capacity(10 + header.len() + img.pixels().data().len() * 8);
    out.extend_from_slice(b"\x93NUMPY\x01\x00");
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for v in img.pixels().data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path.as_ref(), &out)
}

/// One column per frame, filled with the class color, `height` rows tall.
pub fn render_label_strip(labels: &LabelTrack, height: usize) -> Result<RgbImage> {
    let colors = labels
        .classes()
        .iter()
        .map(|&c| class_color(c).ok_or_else(|| Error::Labels(format!("no color for class {c}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(RgbImage::from_fn(colors.len() as u32, height as u32, |x, _| {
        Rgb(colors[x as usize])
    }))
}

/// Stack images of equal width top to bottom.
pub fn stack_strips(strips: &[RgbImage]) -> Result<RgbImage> {
    let width = strips.first().map_or(0, |s| s.width());
    if strips.iter().any(|s| s.width() != width) {
        return Err(Error::Shape("strips differ in width".into()));
    }
    let height: u32 = strips.iter().map(|s| s.height()).sum();
    let mut out = RgbImage::new(width, height);
    let mut y0 = 0;
    for s in strips {
        for (x, y, p) in s.enumerate_pixels() {
            out.put_pixel(x, y0 + y, *p);
        }
        y0 += s.height();
    }
    Ok(out)
}

/// Per-frame argmax color strip replicated to `height` rows.
pub fn upsample_output_for_viz(probs: &Tensor, height: usize) -> Result<RgbImage> {
    let classes = probs.shape().first().copied().unwrap_or(0);
    let track = LabelTrack::new(argmax_per_frame(probs)?, classes)?;
    render_label_strip(&track, height)
}

/// One horizontal band per class; band brightness is the class probability
/// applied to the class color (black bands for `standing` are drawn in gray).
pub fn render_probability_heatmap(probs: &Tensor, band_height: usize) -> Result<RgbImage> {
    let (classes, frames) = probs.dims2()?;
    let mut out = RgbImage::new(frames as u32, (classes * band_height) as u32);
    for c in 0..classes {
        let color = class_color(c)
            .filter(|rgb| rgb.iter().any(|&v| v > 0))
            .unwrap_or([255, 255, 255]);
        for t in 0..frames {
            let p = probs.data()[c * frames + t];
            let px = Rgb(color.map(|v| quantize(f64::from(v) * p)));
            for y in 0..band_height {
                out.put_pixel(t as u32, (c * band_height + y) as u32, px);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::{LEFT_STEP, RIGHT_STEP, STANDING};

    #[test]
    fn round_half_up() {
        assert_eq!(quantize(127.5), 128);
        assert_eq!(quantize(127.49), 127);
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(255.0), 255);
    }

    #[test]
    fn strip_colors() {
        let t = LabelTrack::new(vec![STANDING; 4], 10).unwrap();
        let s = render_label_strip(&t, 3).unwrap();
        assert!(s.pixels().all(|p| p.0 == [0, 0, 0]));

        let t = LabelTrack::new(vec![LEFT_STEP, LEFT_STEP, LEFT_STEP, RIGHT_STEP, RIGHT_STEP], 10).unwrap();
        let s = render_label_strip(&t, 1).unwrap();
        let row: Vec<[u8; 3]> = (0..5).map(|x| s.get_pixel(x, 0).0).collect();
        assert_eq!(row[..3], [[255, 255, 0]; 3]);
        assert_eq!(row[3..], [[0, 0, 255]; 2]);

        let empty = LabelTrack::new(vec![], 10).unwrap();
        assert_eq!(render_label_strip(&empty, 5).unwrap().width(), 0);
    }

    #[test]
    fn unknown_class_has_no_color() {
        let t = LabelTrack::new(vec![11], 12).unwrap();
        assert!(render_label_strip(&t, 1).is_err());
    }
}
