//! Dense-tensor neural network engine with hand-written backpropagation.
//!
//! Everything runs in `f64` on a single thread so that training is
//! bit-reproducible for a fixed seed.

mod activation;
mod conv;
mod gradcheck;
mod layer;
mod loss;
mod optim;
mod rng;
mod tensor;

pub use activation::{argmax_per_frame, norm_relu, relu, softmax_per_frame};
pub use conv::{
    dilated_conv1d, dilated_conv1d_backward, temporal_conv2d, temporal_conv2d_backward, ConvGrads,
};
pub use gradcheck::{gradient_check, GradCheckOptions, GradCheckReport, LayerObjective, Objective, ParamCheck};
pub use layer::{DilatedConv1d, Dropout, Layer, Mode, NormRelu, Parameter, Relu, TemporalConv2d};
pub use loss::masked_cross_entropy;
pub use optim::{adam_step, Adam, AdamConfig, AdamState};
pub use rng::RngStream;
pub use tensor::Tensor;

/// ε added to the maximum in NormReLU.
pub const NORM_RELU_EPS: f64 = 1e-5;
/// Probability floor inside the cross-entropy logarithm.
pub const PROB_FLOOR: f64 = 1e-12;
