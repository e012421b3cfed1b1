//! Motion capture semantic segmentation.
//!
//! The pipeline turns a skeletal motion sequence into an RGB *motion image*
//! (rows are joints, columns are frames, channels are normalized XYZ joint
//! positions) and labels every frame with a motion primitive using a dilated
//! temporal fully-convolutional network (DT-FCN).
//!
//! * [`mocap`] parses BVH files and runs forward kinematics.
//! * [`image`] builds motion images, resizes them and exports PNGs.
//! * [`nn`] is a small dense-tensor engine with hand-written backprop.
//! * [`dtfcn`] assembles, trains and checkpoints the network.
//! * [`experiments`] holds label-noise protocols, cross-validation, metrics
//!   and a procedural dataset generator.

pub mod dtfcn;
pub mod error;
pub mod experiments;
pub mod image;
pub mod io;
pub mod labels;
pub mod mocap;
pub mod nn;

pub use dtfcn::{build_model, Model, NetConfig, TrainConfig};
pub use error::{Error, ErrorKind, Result};
pub use experiments::{Dataset, DatasetItem, MetricsReport, NoiseSpec};
pub use image::MotionImage;
pub use labels::{LabelTrack, PRIMITIVES};
pub use mocap::{CartesianSequence, CoordinateSpace, MotionSequence, Skeleton};
pub use nn::{RngStream, Tensor};
