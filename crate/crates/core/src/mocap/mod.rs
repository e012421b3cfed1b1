//! Skeleton hierarchies, BVH parsing and forward kinematics.

mod bvh;
mod kinematics;

pub use bvh::{parse_bvh, write_bvh, BvhError};
pub use kinematics::{forward_kinematics, to_cartesian, CartesianSequence, CoordinateSpace};

use std::fmt;
use std::str::FromStr;

/// A single degree of freedom of a joint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    pub fn is_rotation(self) -> bool {
        matches!(self, Channel::Xrotation | Channel::Yrotation | Channel::Zrotation)
    }

    /// Axis index (0 = X, 1 = Y, 2 = Z).
    pub fn axis(self) -> usize {
        match self {
            Channel::Xposition | Channel::Xrotation => 0,
            Channel::Yposition | Channel::Yrotation => 1,
            Channel::Zposition | Channel::Zrotation => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Xposition => "Xposition",
            Channel::Yposition => "Yposition",
            Channel::Zposition => "Zposition",
            Channel::Xrotation => "Xrotation",
            Channel::Yrotation => "Yrotation",
            Channel::Zrotation => "Zrotation",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "Xposition" => Channel::Xposition,
            "Yposition" => Channel::Yposition,
            "Zposition" => Channel::Zposition,
            "Xrotation" => Channel::Xrotation,
            "Yrotation" => Channel::Yrotation,
            "Zrotation" => Channel::Zrotation,
            _ => return Err(()),
        })
    }
}

/// A channel-bearing joint. `End Site` blocks are kept as an optional leaf
/// offset on their parent rather than as joints of their own.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    pub offset: [f64; 3],
    pub channels: Vec<Channel>,
    pub end_site: Option<[f64; 3]>,
}

/// Joint hierarchy in depth-first declaration order; parents always precede children.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    joints: Vec<Joint>,
    channel_starts: Vec<usize>,
    total_channels: usize,
}

impl Skeleton {
    /// Build a skeleton, checking topological order, a single root and channel counts.
    pub fn new(joints: Vec<Joint>) -> crate::Result<Self> {
        use crate::Error;
        if joints.is_empty() {
            return Err(Error::Config("skeleton has no joints".into()));
        }
        let mut channel_starts = Vec::with_capacity(joints.len());
        let mut total = 0;
        for (i, j) in joints.iter().enumerate() {
            match (i, j.parent) {
                (0, None) => {}
                (0, Some(_)) => {
                    return Err(Error::Config("first joint must be the root".into()))
                }
                (_, None) => {
                    return Err(Error::Config(format!("joint {} is a second root", j.name)))
                }
                (_, Some(p)) if p >= i => {
                    return Err(Error::Config(format!(
                        "joint {} has parent index {p} not preceding it",
                        j.name
                    )))
                }
                _ => {}
            }
            if j.channels.len() != 3 && j.channels.len() != 6 {
                return Err(Error::Config(format!(
                    "joint {} has {} channels; expected 3 or 6",
                    j.name,
                    j.channels.len()
                )));
            }
            channel_starts.push(total);
            total += j.channels.len();
        }
        Ok(Self {
            joints,
            channel_starts,
            total_channels: total,
        })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn total_channels(&self) -> usize {
        self.total_channels
    }

    /// Column of the first channel of joint `j` in a frame row.
    pub fn channel_start(&self, j: usize) -> usize {
        self.channel_starts[j]
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }
}

/// Per-frame channel values (`frames × total_channels`, rotations in degrees).
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    frame_count: usize,
    frame_time: f64,
    channels: usize,
    values: Vec<f64>,
}

impl MotionSequence {
    pub fn new(frame_time: f64, channels: usize, values: Vec<f64>) -> crate::Result<Self> {
        use crate::Error;
        if !(frame_time > 0.0) {
            return Err(Error::Config(format!("frame time {frame_time} must be positive")));
        }
        if channels == 0 || !values.len().is_multiple_of(channels) || values.is_empty() {
            return Err(Error::Shape(format!(
                "{} values do not form whole frames of {channels} channels",
                values.len()
            )));
        }
        Ok(Self {
            frame_count: values.len() / channels,
            frame_time,
            channels,
            values,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn frame_time(&self) -> f64 {
        self.frame_time
    }

    pub fn channel_count(&self) -> usize {
        self.channels
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * self.channels..(t + 1) * self.channels]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.values[t * self.channels..(t + 1) * self.channels]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
