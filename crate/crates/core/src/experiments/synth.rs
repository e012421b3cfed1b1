//! Procedural labeled motion: a humanoid skeleton animated by phase-driven
//! sinusoids, with labels taken from the generating script.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, DatasetItem};
use crate::error::{Error, Result};
use crate::image::motion_image;
use crate::labels::{self, LabelTrack, PRIMITIVES};
use crate::mocap::{to_cartesian, Channel, CoordinateSpace, Joint, MotionSequence, Skeleton};
use crate::nn::RngStream;

/// Joints outside the torso chain: root plus two 3-joint legs and two 3-joint arms.
const LIMB_JOINTS: usize = 13;
pub const MIN_JOINTS: usize = LIMB_JOINTS + 1;

const WALK_STEPS: usize = 4;
const HIP_SWING_DEG: f64 = 25.0;
const KNEE_SWING_DEG: f64 = 45.0;
const KNEE_SWING_EDGE_DEG: f64 = 35.0;
const ARM_SWING_RATIO: f64 = 0.6;
const TURN_DEG: f64 = 90.0;
const REACH_SHOULDER_DEG: f64 = 75.0;
const REACH_SPINE_DEG: f64 = 35.0;
const REACH_KNEE_DEG: f64 = 25.0;
const RETRIEVE_ELBOW_DEG: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activity {
    /// Begin step, alternating mid steps, end step.
    Walk,
    /// Quarter turn on the spot.
    Turn,
    /// Reach forward then retrieve.
    Pick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub sequences: usize,
    /// Frames per sequence.
    pub frames: usize,
    pub fps: f64,
    pub joint_count: usize,
    /// Number of label classes, 1..=10. Below 10, the trailing primitives
    /// merge into a final "other" class.
    pub classes: usize,
    pub seed: u64,
    /// Activities cycled between standing spans; empty means standing only.
    pub activities: Vec<Activity>,
    /// Standard deviation of per-channel rotation noise, degrees.
    pub jitter_deg: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            sequences: 28,
            frames: 480,
            fps: 48.0,
            joint_count: 19,
            classes: PRIMITIVES.len(),
            seed: 0,
            activities: vec![Activity::Walk, Activity::Turn, Activity::Pick],
            jitter_deg: 0.5,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sequences == 0 || self.frames == 0 {
            return Err(Error::Config("synthetic spec needs at least one sequence and frame".into()));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Config(format!("fps must be positive, got {}", self.fps)));
        }
        if self.joint_count < MIN_JOINTS {
            return Err(Error::Config(format!(
                "synthetic skeleton needs at least {MIN_JOINTS} joints, got {}",
                self.joint_count
            )));
        }
        if self.classes == 0 || self.classes > PRIMITIVES.len() {
            return Err(Error::Config(format!(
                "classes must be in 1..={}, got {}",
                PRIMITIVES.len(),
                self.classes
            )));
        }
        if !(self.jitter_deg.is_finite() && self.jitter_deg >= 0.0) {
            return Err(Error::Config(format!("jitter must be non-negative, got {}", self.jitter_deg)));
        }
        Ok(())
    }

    pub fn class_names(&self) -> Vec<String> {
        if self.classes == PRIMITIVES.len() {
            return labels::primitive_names();
        }
        let mut names: Vec<String> = PRIMITIVES[..self.classes - 1].iter().map(|p| p.name.to_string()).collect();
        names.push("other".into());
        names
    }

    fn collapse(&self, primitive: usize) -> usize {
        primitive.min(self.classes - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSequence {
    pub skeleton: Skeleton,
    pub motion: MotionSequence,
    pub labels: LabelTrack,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

impl Side {
    fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum StepPhase {
    Begin,
    Mid,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Motion {
    Idle,
    Step { phase: StepPhase, swing: Side, hip: f64 },
    Turn { direction: f64 },
    Reach { side: Side },
    Retrieve { side: Side },
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    motion: Motion,
    primitive: usize,
    len: usize,
}

/// Joint indices of the generated skeleton.
#[derive(Debug, Clone)]
struct Rig {
    legs: [[usize; 3]; 2],
    arms: [[usize; 3]; 2],
    /// Torso joints that share the forward bend.
    spine: Vec<usize>,
}

fn smooth(u: f64) -> f64 {
    u * u * (3.0 - 2.0 * u)
}

fn frames_for(rng: &mut RngStream, base: f64, lo: f64, hi: f64) -> usize {
    ((base * rng.uniform_in(lo, hi)).round() as usize).max(1)
}

fn build_skeleton(joint_count: usize, rng: &mut RngStream) -> (Skeleton, Rig) {
    let leg = rng.uniform_in(0.9, 1.1);
    let torso = rng.uniform_in(0.9, 1.1);
    let arm = rng.uniform_in(0.9, 1.1);
    let rot = || vec![Channel::Zrotation, Channel::Xrotation, Channel::Yrotation];
    let joint = |name: &str, parent: usize, offset: [f64; 3], end_site: Option<[f64; 3]>| Joint {
        name: name.to_string(),
        parent: Some(parent),
        offset,
        channels: rot(),
        end_site,
    };

    let mut joints = vec![Joint {
        name: "Hips".into(),
        parent: None,
        offset: [0.0; 3],
        channels: vec![
            Channel::Xposition,
            Channel::Yposition,
            Channel::Zposition,
            Channel::Zrotation,
            Channel::Xrotation,
            Channel::Yrotation,
        ],
        end_site: None,
    }];
    let mut legs = [[0; 3]; 2];
    for (side, (prefix, x)) in [("Left", 0.1), ("Right", -0.1)].into_iter().enumerate() {
        let base = joints.len();
        joints.push(joint(&format!("{prefix}UpLeg"), 0, [x * leg, -0.05 * leg, 0.0], None));
        joints.push(joint(&format!("{prefix}Leg"), base, [0.0, -0.45 * leg, 0.0], None));
        joints.push(joint(&format!("{prefix}Foot"), base + 1, [0.0, -0.42 * leg, 0.0], Some([0.0, -0.05, 0.15 * leg])));
        legs[side] = [base, base + 1, base + 2];
    }

    let chain = joint_count - LIMB_JOINTS;
    let attach = chain.saturating_sub(3);
    let seg = 0.6 * torso / chain as f64;
    let chain_start = joints.len();
    for i in 0..chain {
        let name = if i + 1 == chain {
            "Head".to_string()
        } else if i + 2 == chain {
            "Neck".to_string()
        } else if i == 0 {
            "Spine".to_string()
        } else {
            format!("Spine{i}")
        };
        let parent = if i == 0 { 0 } else { chain_start + i - 1 };
        let end_site = (i + 1 == chain).then_some([0.0, 0.15 * torso, 0.0]);
        joints.push(joint(&name, parent, [0.0, seg, 0.0], end_site));
    }
    let chest = chain_start + attach;

    let mut arms = [[0; 3]; 2];
    for (side, (prefix, x)) in [("Left", 0.18), ("Right", -0.18)].into_iter().enumerate() {
        let base = joints.len();
        joints.push(joint(&format!("{prefix}Arm"), chest, [x * arm, 0.0, 0.0], None));
        joints.push(joint(&format!("{prefix}ForeArm"), base, [0.0, -0.28 * arm, 0.0], None));
        joints.push(joint(&format!("{prefix}Hand"), base + 1, [0.0, -0.25 * arm, 0.0], Some([0.0, -0.1 * arm, 0.0])));
        arms[side] = [base, base + 1, base + 2];
    }
    let skeleton = Skeleton::new(joints).expect("generated skeleton is well formed");
    let rig = Rig {
        legs,
        arms,
        spine: (chain_start..=chest).collect(),
    };
    (skeleton, rig)
}

fn walk_segments(rng: &mut RngStream, step: f64, out: &mut Vec<Segment>) {
    let mut swing = if rng.uniform() < 0.5 { Side::Left } else { Side::Right };
    let hip = HIP_SWING_DEG * rng.uniform_in(0.85, 1.15);
    for k in 0..WALK_STEPS {
        let phase = match k {
            0 => StepPhase::Begin,
            k if k + 1 == WALK_STEPS => StepPhase::End,
            _ => StepPhase::Mid,
        };
        let primitive = match (phase, swing) {
            (StepPhase::Begin, Side::Right) => labels::BEGIN_RIGHT_STEP,
            (StepPhase::Begin, Side::Left) => labels::BEGIN_LEFT_STEP,
            (StepPhase::Mid, Side::Right) => labels::RIGHT_STEP,
            (StepPhase::Mid, Side::Left) => labels::LEFT_STEP,
            (StepPhase::End, Side::Right) => labels::END_RIGHT_STEP,
            (StepPhase::End, Side::Left) => labels::END_LEFT_STEP,
        };
        let len = match phase {
            StepPhase::Mid => frames_for(rng, step, 0.9, 1.1),
            _ => frames_for(rng, 1.5 * step, 0.9, 1.1),
        };
        out.push(Segment {
            motion: Motion::Step { phase, swing, hip },
            primitive,
            len,
        });
        swing = swing.other();
    }
}

fn script(spec: &SynthSpec, rng: &mut RngStream) -> Vec<Segment> {
    let step = (spec.fps * rng.uniform_in(0.45, 0.6)).round().max(2.0);
    let mut segments = Vec::new();
    let mut total = 0;
    if spec.activities.is_empty() {
        segments.push(Segment {
            motion: Motion::Idle,
            primitive: labels::STANDING,
            len: spec.frames,
        });
        return segments;
    }
    let mut order = spec.activities.clone();
    'outer: loop {
        order.shuffle(rng.inner());
        for &activity in &order {
            if total >= spec.frames {
                break 'outer;
            }
            let start = segments.len();
            segments.push(Segment {
                motion: Motion::Idle,
                primitive: labels::STANDING,
                len: frames_for(rng, step / 3.0, 0.8, 1.4),
            });
            match activity {
                Activity::Walk => walk_segments(rng, step, &mut segments),
                Activity::Turn => {
                    let direction = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
                    segments.push(Segment {
                        motion: Motion::Turn { direction },
                        primitive: labels::TURN,
                        len: frames_for(rng, step, 1.0, 1.2),
                    });
                }
                Activity::Pick => {
                    let side = if rng.uniform() < 0.5 { Side::Left } else { Side::Right };
                    segments.push(Segment {
                        motion: Motion::Reach { side },
                        primitive: labels::REACH,
                        len: frames_for(rng, step, 1.0, 1.3),
                    });
                    segments.push(Segment {
                        motion: Motion::Retrieve { side },
                        primitive: labels::RETRIEVE,
                        len: frames_for(rng, step, 1.0, 1.3),
                    });
                }
            }
            total += segments[start..].iter().map(|s| s.len).sum::<usize>();
        }
    }
    // Trim to the requested length.
    let mut remaining = spec.frames;
    segments.retain_mut(|s| {
        if remaining == 0 {
            return false;
        }
        s.len = s.len.min(remaining);
        remaining -= s.len;
        true
    });
    segments
}

/// Joint angles in degrees; hip and shoulder angles are positive forward,
/// knee and elbow angles positive when flexed.
#[derive(Debug, Clone, Copy, Default)]
struct Pose {
    hip: [f64; 2],
    hip_abduct: [f64; 2],
    knee: [f64; 2],
    shoulder: [f64; 2],
    elbow: [f64; 2],
    spine_bend: f64,
    spine_twist: f64,
    yaw: f64,
    crouch: f64,
}

struct Walker {
    position: [f64; 3],
    yaw: f64,
    leg_length: f64,
}

impl Walker {
    /// Pose at phase `u ∈ [0, 1)` of `motion`, advancing the root along the way.
    fn pose(&mut self, motion: Motion, u: f64, len: usize) -> Pose {
        let mut pose = Pose {
            yaw: self.yaw,
            ..Pose::default()
        };
        match motion {
            Motion::Idle => {}
            Motion::Step { phase, swing, hip } => {
                let (s, st) = (swing.index(), swing.other().index());
                let (swing_hip, knee, stride) = match phase {
                    StepPhase::Begin => (hip * (0.5 * PI * u).sin(), KNEE_SWING_EDGE_DEG, 0.5),
                    StepPhase::Mid => (-hip * (PI * u).cos(), KNEE_SWING_DEG, 1.0),
                    StepPhase::End => (-hip * (0.5 * PI * u).cos(), KNEE_SWING_EDGE_DEG, 0.5),
                };
                pose.hip[s] = swing_hip;
                pose.hip[st] = -swing_hip;
                pose.knee[s] = knee * (PI * u).sin();
                for side in 0..2 {
                    pose.shoulder[side] = -ARM_SWING_RATIO * pose.hip[side];
                }
                let step = stride * 2.0 * self.leg_length * hip.to_radians().sin() / len as f64;
                let yaw = self.yaw.to_radians();
                self.position[0] += step * yaw.sin();
                self.position[2] += step * yaw.cos();
            }
            Motion::Turn { direction } => {
                let wave = (2.0 * PI * u).sin();
                pose.hip_abduct = [10.0 * wave, -10.0 * wave];
                pose.knee = [20.0 * wave.abs(); 2];
                pose.spine_twist = 15.0 * direction * (PI * u).sin();
                pose.yaw = self.yaw + direction * TURN_DEG * smooth(u);
                // Commit the full turn on the final frame's successor.
                if (u * len as f64).round() as usize + 1 == len {
                    self.yaw += direction * TURN_DEG;
                }
            }
            Motion::Reach { side } => {
                let arm = smooth(u);
                let bend = arm * arm;
                pose.shoulder[side.index()] = REACH_SHOULDER_DEG * arm;
                pose.spine_bend = REACH_SPINE_DEG * bend;
                pose.knee = [REACH_KNEE_DEG * bend; 2];
                pose.crouch = bend;
            }
            Motion::Retrieve { side } => {
                let s = smooth(u);
                let arm = 1.0 - s * s;
                let bend = 1.0 - s;
                pose.shoulder[side.index()] = REACH_SHOULDER_DEG * arm;
                pose.elbow[side.index()] = RETRIEVE_ELBOW_DEG * (PI * u).sin();
                pose.spine_bend = REACH_SPINE_DEG * bend;
                pose.knee = [REACH_KNEE_DEG * bend; 2];
                pose.crouch = bend;
            }
        }
        pose
    }
}

/// Channel values for one frame. Each rotation triple is stored as Z, X, Y.
fn write_frame(pose: &Pose, t: usize, fps: f64, rig: &Rig, skeleton: &Skeleton, root: [f64; 3], row: &mut [f64]) {
    let mut set = |joint: usize, z: f64, x: f64, y: f64| {
        let start = skeleton.channel_start(joint) + skeleton.joints()[joint].channels.len() - 3;
        row[start] = z;
        row[start + 1] = x;
        row[start + 2] = y;
    };
    set(0, 0.0, 0.0, pose.yaw);
    for side in 0..2 {
        let [hip, knee, _] = rig.legs[side];
        set(hip, pose.hip_abduct[side], -pose.hip[side], 0.0);
        set(knee, 0.0, pose.knee[side], 0.0);
        let [shoulder, elbow, _] = rig.arms[side];
        set(shoulder, 0.0, -pose.shoulder[side], 0.0);
        set(elbow, 0.0, -pose.elbow[side], 0.0);
    }
    let breath = 1.5 * (2.0 * PI * t as f64 / (3.0 * fps)).sin();
    let n = rig.spine.len() as f64;
    for (i, &j) in rig.spine.iter().enumerate() {
        let twist = if i == 0 { pose.spine_twist } else { 0.0 };
        set(j, 0.0, (pose.spine_bend + breath) / n, twist);
    }
    row[0] = root[0];
    row[1] = root[1] - 0.1 * pose.crouch;
    row[2] = root[2];
}

fn synthesize_one(spec: &SynthSpec, index: usize) -> SynthSequence {
    let mut rng = RngStream::derive(spec.seed, 2 * index as u64);
    let mut noise = RngStream::derive(spec.seed, 2 * index as u64 + 1);
    let (skeleton, rig) = build_skeleton(spec.joint_count, &mut rng);
    let segments = script(spec, &mut rng);

    let leg_length = skeleton.joints()[rig.legs[0][1]].offset[1].abs() * 2.0;
    let mut walker = Walker {
        position: [0.0, leg_length + 0.05, 0.0],
        yaw: 360.0 * rng.uniform(),
        leg_length,
    };
    let channels = skeleton.total_channels();
    let mut values = vec![0.0; spec.frames * channels];
    let mut classes = Vec::with_capacity(spec.frames);
    let mut t = 0;
    for seg in &segments {
        for k in 0..seg.len {
            let u = k as f64 / seg.len as f64;
            let root = walker.position;
            let pose = walker.pose(seg.motion, u, seg.len);
            let row = &mut values[t * channels..(t + 1) * channels];
            write_frame(&pose, t, spec.fps, &rig, &skeleton, root, row);
            if spec.jitter_deg > 0.0 {
                for (j, joint) in skeleton.joints().iter().enumerate() {
                    let start = skeleton.channel_start(j);
                    for (c, ch) in joint.channels.iter().enumerate() {
                        if ch.is_rotation() {
                            row[start + c] += spec.jitter_deg * noise.normal();
                        }
                    }
                }
            }
            classes.push(spec.collapse(seg.primitive));
            t += 1;
        }
    }
    let motion = MotionSequence::new(1.0 / spec.fps, channels, values).expect("frame buffer matches channel count");
    let labels = LabelTrack::new(classes, spec.classes).expect("collapsed classes are in range");
    SynthSequence {
        skeleton,
        motion,
        labels,
        name: format!("synth_{index:03}"),
    }
}

/// Generate raw skeletal motion with exact per-frame labels.
pub fn synthesize_motion(spec: &SynthSpec) -> Result<Vec<SynthSequence>> {
    spec.validate()?;
    Ok((0..spec.sequences).map(|i| synthesize_one(spec, i)).collect())
}

/// Generate sequences and pass them through forward kinematics and
/// motion-image conversion.
pub fn synthesize_dataset(spec: &SynthSpec, space: CoordinateSpace, height: usize) -> Result<Dataset> {
    let items = synthesize_motion(spec)?
        .into_iter()
        .map(|s| {
            let cartesian = to_cartesian(&s.skeleton, &s.motion, space)?;
            let (image, _) = motion_image(&cartesian, height)?;
            Ok(DatasetItem {
                image,
                labels: s.labels,
                name: s.name,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(items, spec.class_names())
}
