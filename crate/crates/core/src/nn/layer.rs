use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use super::conv::{conv2d_dims, image_to_rows, kernels_to_rows, rows_to_image, rows_to_kernels, Conv1dGeometry};
use super::{RngStream, Tensor};
use crate::error::{Error, Result};

/// Trainable tensor with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// A differentiable stage. `forward` caches whatever `backward` needs;
/// `backward` accumulates parameter gradients and returns the input gradient.
pub trait Layer: Send {
    fn kind(&self) -> &'static str;

    fn forward(&mut self, input: &Tensor, mode: Mode, rng: &mut RngStream) -> Result<Tensor>;

    fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor>;

    fn params(&self) -> Vec<&Parameter> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        Vec::new()
    }

    /// Fingerprint of the piecewise-linear region of the last forward pass
    /// (ReLU on/off pattern, NormReLU argmax). Finite-difference checks skip
    /// coordinates whose perturbation crosses a region boundary.
    fn region(&self) -> u64 {
        0
    }
}

fn cached<'a>(cache: &'a Option<Tensor>, kind: &str) -> Result<&'a Tensor> {
    cache
        .as_ref()
        .ok_or_else(|| Error::Shape(format!("{kind}: backward called before forward")))
}

/// Full-height temporal convolution over an `H × M × 3` image.
#[derive(Debug, Clone)]
pub struct TemporalConv2d {
    pub kernels: Parameter,
    pub bias: Parameter,
    /// When false, `backward` skips the input gradient and returns an empty tensor.
    pub propagate: bool,
    rows: Option<Tensor>,
    input_shape: Vec<usize>,
}

impl TemporalConv2d {
    pub fn new(kernels: Tensor, bias: Tensor) -> Self {
        Self {
            kernels: Parameter::new("kernels", kernels),
            bias: Parameter::new("bias", bias),
            propagate: true,
            rows: None,
            input_shape: Vec::new(),
        }
    }
}

impl Layer for TemporalConv2d {
    fn kind(&self) -> &'static str {
        "temporal_conv2d"
    }

    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut RngStream) -> Result<Tensor> {
        let d = conv2d_dims(input, &self.kernels.value)?;
        let rows = image_to_rows(input.data(), d.height, d.frames);
        let w = kernels_to_rows(self.kernels.value.data(), d.filters, d.height, d.width);
        let geo = Conv1dGeometry {
            c_in: d.height * 3,
            c_out: d.filters,
            width: d.width,
            frames: d.frames,
            dilation: 1,
        };
        let mut out = Tensor::zeros(&[d.filters, d.frames]);
        geo.forward(&rows, &w, self.bias.value.data(), out.data_mut());
        self.rows = Some(Tensor::new(vec![d.height * 3, d.frames], rows)?);
        self.input_shape = input.shape().to_vec();
        Ok(out)
    }

    fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor> {
        let rows = cached(&self.rows, self.kind())?;
        let (filters, height, width) = match *self.kernels.value.shape() {
            [f, h, w, _] => (f, h, w),
            _ => unreachable!("kernel shape validated in forward"),
        };
        let frames = rows.shape()[1];
        if grad_output.shape() != [filters, frames] {
            return Err(Error::Shape(format!(
                "temporal_conv2d: upstream gradient {:?}, expected [{filters}, {frames}]",
                grad_output.shape()
            )));
        }
        let geo = Conv1dGeometry {
            c_in: height * 3,
            c_out: filters,
            width,
            frames,
            dilation: 1,
        };
        let w = kernels_to_rows(self.kernels.value.data(), filters, height, width);
        let mut gw = vec![0.0; w.len()];
        let mut gx = self.propagate.then(|| vec![0.0; rows.len()]);
        geo.backward(
            rows.data(),
            &w,
            grad_output.data(),
            gx.as_deref_mut(),
            &mut gw,
            self.bias.grad.data_mut(),
        );
        let gw = rows_to_kernels(&gw, filters, height, width);
        for (g, d) in self.kernels.grad.data_mut().iter_mut().zip(gw) {
            *g += d;
        }
        match gx {
            Some(gx) => Tensor::new(self.input_shape.clone(), rows_to_image(&gx, height, frames)),
            None => Ok(Tensor::zeros(&[0])),
        }
    }

    fn params(&self) -> Vec<&Parameter> {
        vec![&self.kernels, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.kernels, &mut self.bias]
    }
}

/// Dilated acausal convolution over a `C_in × M` sequence.
#[derive(Debug, Clone)]
pub struct DilatedConv1d {
    pub kernels: Parameter,
    pub bias: Parameter,
    pub dilation: usize,
    input: Option<Tensor>,
}

impl DilatedConv1d {
    pub fn new(kernels: Tensor, bias: Tensor, dilation: usize) -> Self {
        Self {
            kernels: Parameter::new("kernels", kernels),
            bias: Parameter::new("bias", bias),
            dilation,
            input: None,
        }
    }

    fn geometry(&self, frames: usize) -> Conv1dGeometry {
        let s = self.kernels.value.shape();
        Conv1dGeometry {
            c_in: s[1],
            c_out: s[0],
            width: s[2],
            frames,
            dilation: self.dilation,
        }
    }
}

impl Layer for DilatedConv1d {
    fn kind(&self) -> &'static str {
        "dilated_conv1d"
    }

    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut RngStream) -> Result<Tensor> {
        let out = super::dilated_conv1d(input, &self.kernels.value, &self.bias.value, self.dilation)?;
        self.input = Some(input.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor> {
        let input = cached(&self.input, self.kind())?;
        let frames = input.shape()[1];
        let geo = self.geometry(frames);
        if grad_output.shape() != [geo.c_out, frames] {
            return Err(Error::Shape(format!(
                "dilated_conv1d: upstream gradient {:?}, expected [{}, {frames}]",
                grad_output.shape(),
                geo.c_out
            )));
        }
        let mut gx = Tensor::zeros(input.shape());
        geo.backward(
            input.data(),
            self.kernels.value.data(),
            grad_output.data(),
            Some(gx.data_mut()),
            self.kernels.grad.data_mut(),
            self.bias.grad.data_mut(),
        );
        Ok(gx)
    }

    fn params(&self) -> Vec<&Parameter> {
        vec![&self.kernels, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.kernels, &mut self.bias]
    }
}

#[derive(Debug, Clone, Default)]
pub struct Relu {
    active: Vec<bool>,
    shape: Vec<usize>,
}

impl Layer for Relu {
    fn kind(&self) -> &'static str {
        "relu"
    }

    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut RngStream) -> Result<Tensor> {
        self.active = input.data().iter().map(|&v| v > 0.0).collect();
        self.shape = input.shape().to_vec();
        Ok(super::relu(input))
    }

    fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor> {
        if grad_output.shape() != self.shape.as_slice() {
            return Err(Error::Shape(format!(
                "relu: upstream gradient {:?}, expected {:?}",
                grad_output.shape(),
                self.shape
            )));
        }
        let mut g = grad_output.clone();
        for (v, &a) in g.data_mut().iter_mut().zip(&self.active) {
            if !a {
                *v = 0.0;
            }
        }
        Ok(g)
    }

    fn region(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.active.hash(&mut h);
        h.finish()
    }
}

/// ReLU followed by division by (global maximum + ε).
#[derive(Debug, Clone)]
pub struct NormRelu {
    pub eps: f64,
    relu: Option<Tensor>,
    argmax: Option<usize>,
}

impl NormRelu {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            relu: None,
            argmax: None,
        }
    }
}

impl Layer for NormRelu {
    fn kind(&self) -> &'static str {
        "norm_relu"
    }

    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut RngStream) -> Result<Tensor> {
        let r = super::relu(input);
        let mut argmax = 0;
        for (i, &v) in r.data().iter().enumerate() {
            if v > r.data()[argmax] {
                argmax = i;
            }
        }
        let scale = r.data().get(argmax).copied().unwrap_or(0.0) + self.eps;
        let mut out = r.clone();
        out.data_mut().iter_mut().for_each(|v| *v /= scale);
        self.relu = Some(r);
        self.argmax = Some(argmax);
        Ok(out)
    }

    fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor> {
        let r = cached(&self.relu, self.kind())?;
        grad_output.same_shape(r, "norm_relu upstream gradient")?;
        let a = self.argmax.unwrap_or(0);
        let max = r.data().get(a).copied().unwrap_or(0.0);
        let scale = max + self.eps;
        // d/dr_i = g_i / s, plus the max term -Σ g_j r_j / s² routed to the argmax
        let dot: f64 = grad_output.data().iter().zip(r.data()).map(|(g, v)| g * v).sum();
        let mut gr: Vec<f64> = grad_output.data().iter().map(|g| g / scale).collect();
        if let Some(ga) = gr.get_mut(a) {
            *ga -= dot / (scale * scale);
        }
        for (g, &v) in gr.iter_mut().zip(r.data()) {
            if v <= 0.0 {
                *g = 0.0;
            }
        }
        Tensor::new(r.shape().to_vec(), gr)
    }

    fn region(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.argmax.hash(&mut h);
        if let Some(r) = &self.relu {
            r.data().iter().map(|&v| v > 0.0).collect::<Vec<_>>().hash(&mut h);
        }
        h.finish()
    }
}

/// Inverted dropout: survivors are scaled by `1 / (1 − p)` during training;
/// identity at inference.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub p: f64,
    scale: Option<Vec<f64>>,
}

impl Dropout {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Config(format!("dropout probability {p} outside [0, 1)")));
        }
        Ok(Self { p, scale: None })
    }
}

impl Layer for Dropout {
    fn kind(&self) -> &'static str {
        "dropout"
    }

    fn forward(&mut self, input: &Tensor, mode: Mode, rng: &mut RngStream) -> Result<Tensor> {
        if mode == Mode::Infer || self.p == 0.0 {
            self.scale = None;
            return Ok(input.clone());
        }
        let keep = 1.0 / (1.0 - self.p);
        let scale: Vec<f64> = (0..input.len())
            .map(|_| if rng.uniform() < self.p { 0.0 } else { keep })
            .collect();
        let mut out = input.clone();
        for (v, s) in out.data_mut().iter_mut().zip(&scale) {
            *v *= s;
        }
        self.scale = Some(scale);
        Ok(out)
    }

    fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor> {
        let mut g = grad_output.clone();
        if let Some(scale) = &self.scale {
            if scale.len() != g.len() {
                return Err(Error::Shape("dropout: upstream gradient size changed".into()));
            }
            for (v, s) in g.data_mut().iter_mut().zip(scale) {
                *v *= s;
            }
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_backward_gates() {
        let mut l = Relu::default();
        let mut rng = RngStream::new(0);
        let x = Tensor::new(vec![3], vec![-1.0, 0.5, 2.0]).unwrap();
        l.forward(&x, Mode::Train, &mut rng).unwrap();
        let g = l.backward(&Tensor::new(vec![3], vec![5.0, 6.0, 7.0]).unwrap()).unwrap();
        assert_eq!(g.data(), &[0.0, 6.0, 7.0]);
    }

    #[test]
    fn dropout_identity_paths() {
        let mut rng = RngStream::new(1);
        let x = Tensor::new(vec![4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut d = Dropout::new(0.5).unwrap();
        assert_eq!(d.forward(&x, Mode::Infer, &mut rng).unwrap(), x);
        let mut d0 = Dropout::new(0.0).unwrap();
        assert_eq!(d0.forward(&x, Mode::Train, &mut rng).unwrap(), x);
        assert!(Dropout::new(1.0).is_err());
    }

    #[test]
    fn dropout_preserves_mean() {
        let mut rng = RngStream::new(2);
        let x = Tensor::new(vec![100_000], vec![1.0; 100_000]).unwrap();
        let mut d = Dropout::new(0.5).unwrap();
        let y = d.forward(&x, Mode::Train, &mut rng).unwrap();
        let mean = y.data().iter().sum::<f64>() / y.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
        assert!(y.data().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn backward_before_forward_is_an_error() {
        let mut l = DilatedConv1d::new(Tensor::zeros(&[1, 1, 1]), Tensor::zeros(&[1]), 1);
        assert!(l.backward(&Tensor::zeros(&[1, 3])).is_err());
    }
}
