//! Acausal temporal convolutions (cross-correlation orientation, zero padding,
//! output length equal to input length).

use super::Tensor;
use crate::error::{Error, Result};

/// Gradients of a convolution with respect to its input, kernels and bias.
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub input: Tensor,
    pub kernels: Tensor,
    pub bias: Tensor,
}

/// Frame range `[lo, hi)` of outputs whose tap at `offset` lands inside
/// `[0, m)`; empty (`lo == hi`) when the offset reaches past the sequence.
#[inline]
fn valid_range(offset: isize, m: usize) -> (usize, usize) {
    let m = m as isize;
    let lo = (-offset).clamp(0, m);
    let hi = (m - offset).clamp(0, m);
    (lo as usize, hi.max(lo) as usize)
}

#[inline]
fn tap_offset(k: usize, half: usize, dilation: usize) -> isize {
    (k as isize - half as isize) * dilation as isize
}

/// `out[f][t] = bias[f] + Σ_i Σ_k w[f][i][k] · x[i][t + (k − w/2)·d]`
pub(crate) struct Conv1dGeometry {
    pub c_in: usize,
    pub c_out: usize,
    pub width: usize,
    pub frames: usize,
    pub dilation: usize,
}

impl Conv1dGeometry {
    pub(crate) fn forward(&self, x: &[f64], w: &[f64], bias: &[f64], out: &mut [f64]) {
        let (m, kw, half) = (self.frames, self.width, self.width / 2);
        for f in 0..self.c_out {
            let row = &mut out[f * m..(f + 1) * m];
            row.fill(bias[f]);
            for i in 0..self.c_in {
                let xi = &x[i * m..(i + 1) * m];
                for k in 0..kw {
                    let wv = w[(f * self.c_in + i) * kw + k];
                    let off = tap_offset(k, half, self.dilation);
                    let (lo, hi) = valid_range(off, m);
                    if lo == hi {
                        continue;
                    }
                    let src = &xi[(lo as isize + off) as usize..(hi as isize + off) as usize];
                    for (o, s) in row[lo..hi].iter_mut().zip(src) {
                        *o += wv * s;
                    }
                }
            }
        }
    }

    /// Accumulates into `gx` (if given), `gw` and `gb`.
    pub(crate) fn backward(
        &self,
        x: &[f64],
        w: &[f64],
        g: &[f64],
        mut gx: Option<&mut [f64]>,
        gw: &mut [f64],
        gb: &mut [f64],
    ) {
        let (m, kw, half) = (self.frames, self.width, self.width / 2);
        for f in 0..self.c_out {
            let gf = &g[f * m..(f + 1) * m];
            gb[f] += gf.iter().sum::<f64>();
            for i in 0..self.c_in {
                let xi = &x[i * m..(i + 1) * m];
                for k in 0..kw {
                    let widx = (f * self.c_in + i) * kw + k;
                    let off = tap_offset(k, half, self.dilation);
                    let (lo, hi) = valid_range(off, m);
                    if lo == hi {
                        continue;
                    }
                    let (slo, shi) = ((lo as isize + off) as usize, (hi as isize + off) as usize);
                    let src = &xi[slo..shi];
                    let mut acc = 0.0;
                    for (gv, s) in gf[lo..hi].iter().zip(src) {
                        acc += gv * s;
                    }
                    gw[widx] += acc;
                    if let Some(gx) = gx.as_deref_mut() {
                        let wv = w[widx];
                        for (d, gv) in gx[i * m + slo..i * m + shi].iter_mut().zip(&gf[lo..hi]) {
                            *d += wv * gv;
                        }
                    }
                }
            }
        }
    }
}

fn check_width(width: usize) -> Result<()> {
    if width == 0 || width.is_multiple_of(2) {
        return Err(Error::Config(format!("kernel width {width} must be odd")));
    }
    Ok(())
}

fn conv1d_geometry(input: &Tensor, kernels: &Tensor, dilation: usize) -> Result<Conv1dGeometry> {
    let (c_in, frames) = input.dims2()?;
    let (c_out, k_in, width) = kernels.dims3()?;
    check_width(width)?;
    if dilation < 1 {
        return Err(Error::Config("dilation must be at least 1".into()));
    }
    if k_in != c_in {
        return Err(Error::Shape(format!(
            "kernels expect {k_in} input channels, input has {c_in}"
        )));
    }
    Ok(Conv1dGeometry {
        c_in,
        c_out,
        width,
        frames,
        dilation,
    })
}

fn check_bias(bias: &Tensor, c_out: usize) -> Result<()> {
    if bias.shape() != [c_out] {
        return Err(Error::Shape(format!(
            "bias shape {:?}, expected [{c_out}]",
            bias.shape()
        )));
    }
    Ok(())
}

/// Dilated acausal 1-D convolution: input `C_in × M`, kernels `F × C_in × w`,
/// bias `F`; output `F × M`.
pub fn dilated_conv1d(input: &Tensor, kernels: &Tensor, bias: &Tensor, dilation: usize) -> Result<Tensor> {
    let geo = conv1d_geometry(input, kernels, dilation)?;
    check_bias(bias, geo.c_out)?;
    let mut out = Tensor::zeros(&[geo.c_out, geo.frames]);
    geo.forward(input.data(), kernels.data(), bias.data(), out.data_mut());
    Ok(out)
}

pub fn dilated_conv1d_backward(
    input: &Tensor,
    kernels: &Tensor,
    dilation: usize,
    grad_output: &Tensor,
) -> Result<ConvGrads> {
    let geo = conv1d_geometry(input, kernels, dilation)?;
    if grad_output.shape() != [geo.c_out, geo.frames] {
        return Err(Error::Shape(format!(
            "upstream gradient {:?}, expected [{}, {}]",
            grad_output.shape(),
            geo.c_out,
            geo.frames
        )));
    }
    let mut gx = Tensor::zeros(input.shape());
    let mut gw = Tensor::zeros(kernels.shape());
    let mut gb = Tensor::zeros(&[geo.c_out]);
    geo.backward(
        input.data(),
        kernels.data(),
        grad_output.data(),
        Some(gx.data_mut()),
        gw.data_mut(),
        gb.data_mut(),
    );
    Ok(ConvGrads {
        input: gx,
        kernels: gw,
        bias: gb,
    })
}

/// `[H, M, 3]` image to `[H·3, M]` rows indexed by `h·3 + c`.
pub(crate) fn image_to_rows(input: &[f64], height: usize, frames: usize) -> Vec<f64> {
    let mut out = vec![0.0; height * 3 * frames];
    for h in 0..height {
        for t in 0..frames {
            for c in 0..3 {
                out[(h * 3 + c) * frames + t] = input[(h * frames + t) * 3 + c];
            }
        }
    }
    out
}

pub(crate) fn rows_to_image(rows: &[f64], height: usize, frames: usize) -> Vec<f64> {
    let mut out = vec![0.0; height * frames * 3];
    for h in 0..height {
        for t in 0..frames {
            for c in 0..3 {
                out[(h * frames + t) * 3 + c] = rows[(h * 3 + c) * frames + t];
            }
        }
    }
    out
}

/// `[F, H, w, 3]` kernels to `[F, H·3, w]`.
pub(crate) fn kernels_to_rows(k: &[f64], filters: usize, height: usize, width: usize) -> Vec<f64> {
    let mut out = vec![0.0; k.len()];
    for f in 0..filters {
        for h in 0..height {
            for j in 0..width {
                for c in 0..3 {
                    out[(f * height * 3 + h * 3 + c) * width + j] = k[((f * height + h) * width + j) * 3 + c];
                }
            }
        }
    }
    out
}

pub(crate) fn rows_to_kernels(r: &[f64], filters: usize, height: usize, width: usize) -> Vec<f64> {
    let mut out = vec![0.0; r.len()];
    for f in 0..filters {
        for h in 0..height {
            for j in 0..width {
                for c in 0..3 {
                    out[((f * height + h) * width + j) * 3 + c] = r[(f * height * 3 + h * 3 + c) * width + j];
                }
            }
        }
    }
    out
}

pub(crate) struct Conv2dDims {
    pub height: usize,
    pub frames: usize,
    pub filters: usize,
    pub width: usize,
}

pub(crate) fn conv2d_dims(input: &Tensor, kernels: &Tensor) -> Result<Conv2dDims> {
    let (height, frames, ch) = input.dims3()?;
    let (filters, k_h, width, k_c) = match *kernels.shape() {
        [a, b, c, d] => (a, b, c, d),
        _ => return Err(Error::Shape(format!("expected [F, H, w, 3] kernels, got {:?}", kernels.shape()))),
    };
    check_width(width)?;
    if ch != 3 || k_c != 3 {
        return Err(Error::Shape("temporal 2-d convolution needs 3 input channels".into()));
    }
    if k_h != height {
        return Err(Error::Shape(format!(
            "kernel height {k_h} differs from input height {height}"
        )));
    }
    Ok(Conv2dDims {
        height,
        frames,
        filters,
        width,
    })
}

/// Temporal 2-D convolution: full-height kernels `F × H × w × 3` slide along
/// the time axis of an `H × M × 3` image; output `F × M`.
pub fn temporal_conv2d(input: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let d = conv2d_dims(input, kernels)?;
    check_bias(bias, d.filters)?;
    let x = image_to_rows(input.data(), d.height, d.frames);
    let w = kernels_to_rows(kernels.data(), d.filters, d.height, d.width);
    let geo = Conv1dGeometry {
        c_in: d.height * 3,
        c_out: d.filters,
        width: d.width,
        frames: d.frames,
        dilation: 1,
    };
    let mut out = Tensor::zeros(&[d.filters, d.frames]);
    geo.forward(&x, &w, bias.data(), out.data_mut());
    Ok(out)
}

pub fn temporal_conv2d_backward(input: &Tensor, kernels: &Tensor, grad_output: &Tensor) -> Result<ConvGrads> {
    let d = conv2d_dims(input, kernels)?;
    if grad_output.shape() != [d.filters, d.frames] {
        return Err(Error::Shape(format!(
            "upstream gradient {:?}, expected [{}, {}]",
            grad_output.shape(),
            d.filters,
            d.frames
        )));
    }
    let x = image_to_rows(input.data(), d.height, d.frames);
    let w = kernels_to_rows(kernels.data(), d.filters, d.height, d.width);
    let geo = Conv1dGeometry {
        c_in: d.height * 3,
        c_out: d.filters,
        width: d.width,
        frames: d.frames,
        dilation: 1,
    };
    let mut gx = vec![0.0; x.len()];
    let mut gw = vec![0.0; w.len()];
    let mut gb = vec![0.0; d.filters];
    geo.backward(&x, &w, grad_output.data(), Some(&mut gx), &mut gw, &mut gb);
    Ok(ConvGrads {
        input: Tensor::new(input.shape().to_vec(), rows_to_image(&gx, d.height, d.frames))?,
        kernels: Tensor::new(
            kernels.shape().to_vec(),
            rows_to_kernels(&gw, d.filters, d.height, d.width),
        )?,
        bias: Tensor::new(vec![d.filters], gb)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_contract_to_six() {
        let input = Tensor::new(vec![2, 4, 3], vec![1.0; 24]).unwrap();
        let k = Tensor::new(vec![1, 2, 1, 3], vec![1.0; 6]).unwrap();
        let out = temporal_conv2d(&input, &k, &Tensor::zeros(&[1])).unwrap();
        assert_eq!(out.data(), &[6.0; 4]);
    }

    #[test]
    fn dilation_tap_geometry() {
        let mut x = Tensor::zeros(&[1, 13]);
        x.data_mut()[6] = 1.0;
        let k = Tensor::new(vec![1, 1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        let out = dilated_conv1d(&x, &k, &Tensor::zeros(&[1]), 4).unwrap();
        let nz: Vec<(usize, f64)> = out.data().iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
        // output at t reads x[t - 4], x[t], x[t + 4]
        assert_eq!(nz, vec![(2, 3.0), (6, 2.0), (10, 1.0)]);
    }

    #[test]
    fn dilation_past_sequence_sees_only_centre_tap() {
        let x = Tensor::new(vec![1, 4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let k = Tensor::new(vec![1, 1, 3], vec![5.0, 2.0, 7.0]).unwrap();
        let out = dilated_conv1d(&x, &k, &Tensor::zeros(&[1]), 9).unwrap();
        assert_eq!(out.data(), &[2.0, 4.0, 6.0, 8.0]);
        let g = Tensor::new(vec![1, 4], vec![1.0; 4]).unwrap();
        let grads = dilated_conv1d_backward(&x, &k, 9, &g).unwrap();
        assert_eq!(grads.input.data(), &[2.0; 4]);
        assert_eq!(grads.kernels.data(), &[0.0, 10.0, 0.0]);
    }

    #[test]
    fn impulse_response_2d() {
        let (h, m) = (2, 7);
        let mut input = Tensor::zeros(&[h, m, 3]);
        input.data_mut()[(m + 3) * 3 + 1] = 2.0; // h = 1, t = 3, c = 1
        let kdata: Vec<f64> = (0..h * 3 * 3).map(|i| i as f64 + 1.0).collect();
        let k = Tensor::new(vec![1, h, 3, 3], kdata.clone()).unwrap();
        let out = temporal_conv2d(&input, &k, &Tensor::zeros(&[1])).unwrap();
        for t in 0..m {
            let expect = if (2..=4).contains(&t) {
                let j = 3 + 1 - t; // tap index reading frame 3
                2.0 * kdata[((h - 1) * 3 + j) * 3 + 1]
            } else {
                0.0
            };
            assert_eq!(out.data()[t], expect, "frame {t}");
        }
    }

    #[test]
    fn one_by_one_backward_is_scalar_chain_rule() {
        let x = Tensor::new(vec![1, 3], vec![0.5, -2.0, 3.0]).unwrap();
        let k = Tensor::new(vec![1, 1, 1], vec![1.5]).unwrap();
        let g = Tensor::new(vec![1, 3], vec![1.0, 2.0, -1.0]).unwrap();
        let grads = dilated_conv1d_backward(&x, &k, 1, &g).unwrap();
        assert_eq!(grads.input.data(), &[1.5, 3.0, -1.5]);
        assert_eq!(grads.kernels.data(), &[0.5 - 4.0 - 3.0]);
        assert_eq!(grads.bias.data(), &[2.0]);
    }

    #[test]
    fn shape_errors() {
        let x = Tensor::zeros(&[2, 5]);
        let even = Tensor::zeros(&[1, 2, 2]);
        assert!(dilated_conv1d(&x, &even, &Tensor::zeros(&[1]), 1).is_err());
        let k = Tensor::zeros(&[1, 2, 3]);
        assert!(dilated_conv1d(&x, &k, &Tensor::zeros(&[1]), 0).is_err());
        let wrong_in = Tensor::zeros(&[1, 3, 3]);
        assert!(dilated_conv1d(&x, &wrong_in, &Tensor::zeros(&[1]), 1).is_err());
        let img = Tensor::zeros(&[4, 5, 3]);
        let short = Tensor::zeros(&[1, 3, 3, 3]);
        assert!(temporal_conv2d(&img, &short, &Tensor::zeros(&[1])).is_err());
    }
}
