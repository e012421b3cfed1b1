//! The dilated temporal fully-convolutional network.
//!
//! Layer stack for `L` conv layers of width `w`:
//!
//! ```text
//! temporal conv2d (H × w, d = 1) → ReLU
//! [dilated conv1d (d = w^(l−1)) → ReLU] × (L − 2)
//! dilated conv1d (d = w^(L−1)) → NormReLU
//! dropout → width-1 conv (dense per frame) → softmax
//! ```

mod checkpoint;
mod config;
mod model;
mod train;

pub use checkpoint::Checkpoint;
pub use config::{dilations, padding_schedule, parameter_count, receptive_field, NetConfig};
pub use model::{build_model, build_model_from_stream, predict_labels, Model, ModelObjective};
pub use train::{evaluate, train, EpochRecord, EvalResult, Sample, TrainConfig};
