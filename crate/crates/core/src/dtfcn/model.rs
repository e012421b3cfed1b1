use super::config::{dilations, NetConfig};
use crate::error::{Error, Result};
use crate::image::MotionImage;
use crate::labels::LabelTrack;
use crate::nn::{
    argmax_per_frame, masked_cross_entropy, softmax_per_frame, DilatedConv1d, Dropout, Layer, Mode,
    NormRelu, Objective, Parameter, Relu, RngStream, TemporalConv2d, Tensor,
};

/// A built network: configuration plus the ordered layer stack.
pub struct Model {
    config: NetConfig,
    layers: Vec<Box<dyn Layer>>,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kinds: Vec<&str> = self.layers.iter().map(|l| l.kind()).collect();
        f.debug_struct("Model")
            .field("config", &self.config)
            .field("layers", &kinds)
            .finish()
    }
}

fn he_uniform(shape: &[usize], fan_in: usize, rng: &mut RngStream) -> Result<Tensor> {
    let limit = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.uniform_in(-limit, limit)).collect();
    Tensor::new(shape.to_vec(), data)
}

/// Build a freshly initialized model (He-uniform weights, zero biases).
pub fn build_model(config: &NetConfig, seed: u64) -> Result<Model> {
    build_model_from_stream(config, &mut RngStream::new(seed))
}

pub fn build_model_from_stream(config: &NetConfig, rng: &mut RngStream) -> Result<Model> {
    config.validate()?;
    let w = config.w;
    let h = config.height;
    let dil = dilations(config);
    let depth = config.conv_channels.len();
    let mut layers: Vec<Box<dyn Layer>> = Vec::new();

    let c1 = config.conv_channels[0];
    let mut first = TemporalConv2d::new(
        he_uniform(&[c1, h, w, 3], h * w * 3, rng)?,
        Tensor::zeros(&[c1]),
    );
    first.propagate = false;
    layers.push(Box::new(first));
    let mut c_in = c1;
    for l in 0..depth {
        if l > 0 {
            let c_out = config.conv_channels[l];
            layers.push(Box::new(DilatedConv1d::new(
                he_uniform(&[c_out, c_in, w], c_in * w, rng)?,
                Tensor::zeros(&[c_out]),
                dil[l],
            )));
            c_in = c_out;
        }
        if l + 1 < depth {
            layers.push(Box::new(Relu::default()));
        } else {
            layers.push(Box::new(NormRelu::new(config.norm_eps)));
        }
    }
    layers.push(Box::new(Dropout::new(config.dropout)?));
    layers.push(Box::new(DilatedConv1d::new(
        he_uniform(&[config.classes, c_in, 1], c_in, rng)?,
        Tensor::zeros(&[config.classes]),
        1,
    )));

    let mut model = Model {
        config: config.clone(),
        layers,
    };
    model.name_parameters();
    Ok(model)
}

impl Model {
    fn name_parameters(&mut self) {
        let depth = self.config.conv_channels.len();
        let mut conv = 0;
        for layer in &mut self.layers {
            let params = layer.params_mut();
            if params.is_empty() {
                continue;
            }
            conv += 1;
            let prefix = if conv > depth {
                "dense".to_string()
            } else {
                format!("conv{conv}")
            };
            for p in params {
                let base = p.name.rsplit('.').next().unwrap_or("").to_string();
                p.name = format!("{prefix}.{base}");
            }
        }
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Box<dyn Layer>] {
        &self.layers
    }

    pub fn params(&self) -> Vec<&Parameter> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Flattened parameter values in layer order.
    pub fn flat_params(&self) -> Vec<f64> {
        self.params().iter().flat_map(|p| p.value.data().iter().copied()).collect()
    }

    /// Image tensor `[H, M, 3]` for this model, checking the height.
    pub fn input_tensor(&self, image: &MotionImage) -> Result<Tensor> {
        if image.height() != self.config.height {
            return Err(Error::Shape(format!(
                "image height {} differs from network height {}",
                image.height(),
                self.config.height
            )));
        }
        Tensor::new(
            vec![image.height(), image.width(), 3],
            image.pixels().data().to_vec(),
        )
    }

    /// Logits `C × M` for an `[H, M, 3]` input tensor.
    pub fn forward_logits(&mut self, input: &Tensor, mode: Mode, rng: &mut RngStream) -> Result<Tensor> {
        self.check_input(input)?;
        let mut x = input.clone();
        for layer in &mut self.layers {
            x = layer.forward(&x, mode, rng)?;
        }
        x.check_finite("forward")?;
        Ok(x)
    }

    /// Output of every layer in order; the last entry is the logits.
    pub fn forward_trace(&mut self, input: &Tensor, mode: Mode, rng: &mut RngStream) -> Result<Vec<Tensor>> {
        self.check_input(input)?;
        let mut outputs: Vec<Tensor> = Vec::with_capacity(self.layers.len());
        for layer in &mut self.layers {
            let x = layer.forward(outputs.last().unwrap_or(input), mode, rng)?;
            outputs.push(x);
        }
        Ok(outputs)
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        let (h, m, _) = input.dims3()?;
        if h != self.config.height {
            return Err(Error::Shape(format!(
                "input height {h} differs from network height {}",
                self.config.height
            )));
        }
        if m == 0 {
            return Err(Error::Shape("input has no frames".into()));
        }
        Ok(())
    }

    /// Per-frame class probabilities `C × M`.
    pub fn forward(&mut self, image: &MotionImage, mode: Mode, rng: &mut RngStream) -> Result<Tensor> {
        let input = self.input_tensor(image)?;
        softmax_per_frame(&self.forward_logits(&input, mode, rng)?)
    }

    /// Backpropagate a logit gradient, accumulating into parameter gradients.
    /// The input image gradient is not computed.
    pub fn backward(&mut self, grad_logits: &Tensor) -> Result<()> {
        let mut g = grad_logits.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(())
    }

    pub fn region(&self) -> u64 {
        self.layers
            .iter()
            .fold(0u64, |acc, l| acc.rotate_left(7) ^ l.region())
    }
}

/// Per-frame argmax labels in inference mode.
pub fn predict_labels(model: &mut Model, image: &MotionImage) -> Result<LabelTrack> {
    let mut rng = RngStream::new(0);
    let probs = model.forward(image, Mode::Infer, &mut rng)?;
    LabelTrack::new(argmax_per_frame(&probs)?, model.config.classes)
}

/// Cross-entropy of a model on one image, for gradient checking. Every
/// evaluation replays the same dropout stream.
pub struct ModelObjective<'a> {
    pub model: &'a mut Model,
    pub input: Tensor,
    pub labels: LabelTrack,
    pub mode: Mode,
    pub seed: u64,
}

impl ModelObjective<'_> {
    fn probs(&mut self) -> Result<Tensor> {
        let mut rng = RngStream::new(self.seed);
        softmax_per_frame(&self.model.forward_logits(&self.input, self.mode, &mut rng)?)
    }
}

impl Objective for ModelObjective<'_> {
    fn parameters(&mut self) -> Vec<&mut Parameter> {
        self.model.params_mut()
    }

    fn loss(&mut self) -> Result<f64> {
        let probs = self.probs()?;
        Ok(masked_cross_entropy(&probs, &self.labels, self.labels.loss_mask())?.0)
    }

    fn loss_and_gradients(&mut self) -> Result<f64> {
        let probs = self.probs()?;
        let (loss, grad) = masked_cross_entropy(&probs, &self.labels, self.labels.loss_mask())?;
        self.model.zero_grad();
        self.model.backward(&grad)?;
        Ok(loss)
    }

    fn region(&self) -> u64 {
        self.model.region()
    }
}
