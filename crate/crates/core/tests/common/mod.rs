//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use motionseg_core::mocap::{Channel, MotionSequence, Skeleton};
use motionseg_core::{RngStream, Tensor};

pub fn random_tensor(shape: &[usize], lo: f64, hi: f64, rng: &mut RngStream) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.uniform_in(lo, hi)).collect()).unwrap()
}

/// `out[f][t] = b[f] + Σ_h Σ_k Σ_c K[f][h][k][c] · x[h][t + k − w/2][c]`, zero outside.
pub fn naive_temporal_conv2d(x: &Tensor, k: &Tensor, b: &Tensor) -> Vec<Vec<f64>> {
    let (h, m, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (f, w) = (k.shape()[0], k.shape()[2]);
    let xi = |r: usize, t: usize, ch: usize| x.data()[(r * m + t) * c + ch];
    let ki = |ff: usize, r: usize, tap: usize, ch: usize| k.data()[((ff * h + r) * w + tap) * c + ch];
    let mut out = vec![vec![0.0; m]; f];
    for ff in 0..f {
        for t in 0..m {
            let mut acc = b.data()[ff];
            for r in 0..h {
                for tap in 0..w {
                    let src = t as isize + tap as isize - (w / 2) as isize;
                    if src < 0 || src >= m as isize {
                        continue;
                    }
                    for ch in 0..c {
                        acc += ki(ff, r, tap, ch) * xi(r, src as usize, ch);
                    }
                }
            }
            out[ff][t] = acc;
        }
    }
    out
}

/// `out[f][t] = b[f] + Σ_c Σ_k K[f][c][k] · x[c][t + (k − w/2)·d]`, zero outside.
pub fn naive_dilated_conv1d(x: &Tensor, k: &Tensor, b: &Tensor, d: usize) -> Vec<Vec<f64>> {
    let (cin, m) = (x.shape()[0], x.shape()[1]);
    let (f, w) = (k.shape()[0], k.shape()[2]);
    let mut out = vec![vec![0.0; m]; f];
    for ff in 0..f {
        for t in 0..m {
            let mut acc = b.data()[ff];
            for c in 0..cin {
                for tap in 0..w {
                    let src = t as isize + (tap as isize - (w / 2) as isize) * d as isize;
                    if src < 0 || src >= m as isize {
                        continue;
                    }
                    acc += k.data()[(ff * cin + c) * w + tap] * x.data()[c * m + src as usize];
                }
            }
            out[ff][t] = acc;
        }
    }
    out
}

type Mat4 = [[f64; 4]; 4];

fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn identity() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn rotation(axis: usize, deg: f64) -> Mat4 {
    let (s, c) = deg.to_radians().sin_cos();
    let mut m = identity();
    let (a, b) = match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    m[a][a] = c;
    m[a][b] = -s;
    m[b][a] = s;
    m[b][b] = c;
    m
}

/// Global joint positions from 4×4 homogeneous transforms. With `zero_root`
/// the root's local transform is the identity.
pub fn homogeneous_fk(skeleton: &Skeleton, motion: &MotionSequence, frame: usize, zero_root: bool) -> Vec<[f64; 3]> {
    let row = motion.frame(frame);
    let mut globals: Vec<Mat4> = Vec::new();
    let mut col = 0;
    for (j, joint) in skeleton.joints().iter().enumerate() {
        let mut translation = joint.offset;
        let mut rot = identity();
        for ch in &joint.channels {
            let v = row[col];
            col += 1;
            match ch {
                Channel::Xposition => translation[0] += v,
                Channel::Yposition => translation[1] += v,
                Channel::Zposition => translation[2] += v,
                Channel::Xrotation => rot = mat_mul(&rot, &rotation(0, v)),
                Channel::Yrotation => rot = mat_mul(&rot, &rotation(1, v)),
                Channel::Zrotation => rot = mat_mul(&rot, &rotation(2, v)),
            }
        }
        let mut local = rot;
        for (i, t) in translation.iter().enumerate() {
            local[i][3] = *t;
        }
        if j == 0 && zero_root {
            local = identity();
        }
        let global = match joint.parent {
            Some(p) => mat_mul(&globals[p], &local),
            None => local,
        };
        globals.push(global);
    }
    globals.iter().map(|g| [g[0][3], g[1][3], g[2][3]]).collect()
}

/// Catmull-Rom (a = −0.5) weight.
pub fn keys_weight(x: f64) -> f64 {
    let x = x.abs();
    if x < 1.0 {
        1.5 * x * x * x - 2.5 * x * x + 1.0
    } else if x < 2.0 {
        -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0
    } else {
        0.0
    }
}

/// Resample one column from `src.len()` to `n` samples: half-pixel centers,
/// edge replication, clamp to `[0, 255]`.
pub fn resample_column(src: &[f64], n: usize) -> Vec<f64> {
    let len = src.len() as isize;
    (0..n)
        .map(|i| {
            let pos = (i as f64 + 0.5) * src.len() as f64 / n as f64 - 0.5;
            let base = pos.floor() as isize;
            let mut acc = 0.0;
            for k in base - 1..=base + 2 {
                let idx = k.clamp(0, len - 1) as usize;
                acc += keys_weight(pos - k as f64) * src[idx];
            }
            acc.clamp(0.0, 255.0)
        })
        .collect()
}
