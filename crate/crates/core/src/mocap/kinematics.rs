use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::{Channel, MotionSequence, Skeleton};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CoordinateSpace {
    Global,
    /// Root transform (offset, translation and rotation) replaced by identity.
    #[default]
    Local,
}

impl std::str::FromStr for CoordinateSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(CoordinateSpace::Global),
            "local" => Ok(CoordinateSpace::Local),
            _ => Err(Error::Config(format!("unknown coordinate space {s:?}"))),
        }
    }
}

/// Joint positions over time, stored joints × frames × XYZ.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianSequence {
    joints: usize,
    frames: usize,
    space: CoordinateSpace,
    positions: Vec<f64>,
}

impl CartesianSequence {
    pub fn new(joints: usize, frames: usize, space: CoordinateSpace, positions: Vec<f64>) -> Result<Self> {
        if joints == 0 || frames == 0 || positions.len() != joints * frames * 3 {
            return Err(Error::Shape(format!(
                "{} positions for {joints} joints x {frames} frames x 3",
                positions.len()
            )));
        }
        Ok(Self {
            joints,
            frames,
            space,
            positions,
        })
    }

    pub fn joint_count(&self) -> usize {
        self.joints
    }

    pub fn frame_count(&self) -> usize {
        self.frames
    }

    pub fn space(&self) -> CoordinateSpace {
        self.space
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, joint: usize, frame: usize) -> [f64; 3] {
        let i = (joint * self.frames + frame) * 3;
        [self.positions[i], self.positions[i + 1], self.positions[i + 2]]
    }
}

fn axis_rotation(channel: Channel, degrees: f64) -> Matrix3<f64> {
    let angle = degrees.to_radians();
    let axis = match channel.axis() {
        0 => Vector3::x_axis(),
        1 => Vector3::y_axis(),
        _ => Vector3::z_axis(),
    };
    *Rotation3::from_axis_angle(&axis, angle).matrix()
}

/// Global joint positions for one frame row. With `zero_root`, the root's
/// local transform is the identity.
fn solve_frame(skeleton: &Skeleton, row: &[f64], zero_root: bool) -> Vec<[f64; 3]> {
    let n = skeleton.joint_count();
    let mut rot: Vec<Matrix3<f64>> = Vec::with_capacity(n);
    let mut pos: Vec<Vector3<f64>> = Vec::with_capacity(n);
    for (j, joint) in skeleton.joints().iter().enumerate() {
        let (local_rot, local_pos) = if j == 0 && zero_root {
            (Matrix3::identity(), Vector3::zeros())
        } else {
            let mut t = Vector3::from(joint.offset);
            let mut r = Matrix3::identity();
            let start = skeleton.channel_start(j);
            for (k, &ch) in joint.channels.iter().enumerate() {
                let v = row[start + k];
                if ch.is_rotation() {
                    r *= axis_rotation(ch, v);
                } else {
                    t[ch.axis()] += v;
                }
            }
            (r, t)
        };
        match joint.parent {
            None => {
                rot.push(local_rot);
                pos.push(local_pos);
            }
            Some(p) => {
                pos.push(pos[p] + rot[p] * local_pos);
                rot.push(rot[p] * local_rot);
            }
        }
    }
    pos.into_iter().map(|p| [p.x, p.y, p.z]).collect()
}

/// Global positions of every joint at `frame`.
pub fn forward_kinematics(
    skeleton: &Skeleton,
    motion: &MotionSequence,
    frame: usize,
) -> Result<Vec<[f64; 3]>> {
    check_shapes(skeleton, motion)?;
    if frame >= motion.frame_count() {
        return Err(Error::FrameOutOfRange {
            frame,
            frames: motion.frame_count(),
        });
    }
    Ok(solve_frame(skeleton, motion.frame(frame), false))
}

/// Joint positions for every frame in the requested space.
pub fn to_cartesian(
    skeleton: &Skeleton,
    motion: &MotionSequence,
    space: CoordinateSpace,
) -> Result<CartesianSequence> {
    check_shapes(skeleton, motion)?;
    let n = skeleton.joint_count();
    let m = motion.frame_count();
    let zero_root = space == CoordinateSpace::Local;
    let mut positions = vec![0.0; n * m * 3];
    for t in 0..m {
        for (j, p) in solve_frame(skeleton, motion.frame(t), zero_root).into_iter().enumerate() {
            let i = (j * m + t) * 3;
            positions[i..i + 3].copy_from_slice(&p);
        }
    }
    CartesianSequence::new(n, m, space, positions)
}

fn check_shapes(skeleton: &Skeleton, motion: &MotionSequence) -> Result<()> {
    if skeleton.total_channels() != motion.channel_count() {
        return Err(Error::Shape(format!(
            "skeleton has {} channels, motion rows have {}",
            skeleton.total_channels(),
            motion.channel_count()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mocap::Joint;

    fn chain() -> Skeleton {
        let rot = vec![Channel::Zrotation, Channel::Xrotation, Channel::Yrotation];
        let mut root_ch = vec![Channel::Xposition, Channel::Yposition, Channel::Zposition];
        root_ch.extend(rot.iter().copied());
        Skeleton::new(vec![
            Joint { name: "root".into(), parent: None, offset: [0.0; 3], channels: root_ch, end_site: None },
            Joint { name: "a".into(), parent: Some(0), offset: [0.0, 1.0, 0.0], channels: rot.clone(), end_site: None },
            Joint { name: "b".into(), parent: Some(1), offset: [0.0, 1.0, 0.0], channels: rot, end_site: None },
        ])
        .unwrap()
    }

    fn close(a: [f64; 3], b: [f64; 3]) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9)
    }

    #[test]
    fn zero_rotations_accumulate_offsets() {
        let skel = chain();
        let motion = MotionSequence::new(0.01, 12, vec![0.0; 12]).unwrap();
        let p = forward_kinematics(&skel, &motion, 0).unwrap();
        assert_eq!(p, vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 2.0, 0.0]]);
    }

    #[test]
    fn root_z_rotation() {
        let skel = chain();
        let mut row = vec![0.0; 12];
        row[3] = 90.0;
        let motion = MotionSequence::new(0.01, 12, row).unwrap();
        let p = forward_kinematics(&skel, &motion, 0).unwrap();
        assert!(close(p[1], [-1.0, 0.0, 0.0]));
        assert!(close(p[2], [-2.0, 0.0, 0.0]));
    }

    #[test]
    fn frame_out_of_range() {
        let skel = chain();
        let motion = MotionSequence::new(0.01, 12, vec![0.0; 12]).unwrap();
        assert!(matches!(
            forward_kinematics(&skel, &motion, 1),
            Err(Error::FrameOutOfRange { frame: 1, frames: 1 })
        ));
    }

    #[test]
    fn local_root_is_zero_and_identity_root_matches_global() {
        let skel = chain();
        let mut row = vec![0.0; 24];
        row[12 + 7] = 30.0;
        row[12 + 10] = -12.0;
        let motion = MotionSequence::new(0.01, 12, row).unwrap();
        let local = to_cartesian(&skel, &motion, CoordinateSpace::Local).unwrap();
        let global = to_cartesian(&skel, &motion, CoordinateSpace::Global).unwrap();
        for t in 0..2 {
            assert_eq!(local.position(0, t), [0.0; 3]);
        }
        assert_eq!(local.positions(), global.positions());
    }
}
