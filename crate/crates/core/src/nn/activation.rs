use super::Tensor;
use crate::error::Result;

pub fn relu(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

/// `relu(x) / (max(relu(x)) + eps)` with the maximum over the whole tensor.
pub fn norm_relu(x: &Tensor, eps: f64) -> Tensor {
    let mut out = relu(x);
    let max = out.data().iter().copied().fold(0.0, f64::max);
    let scale = max + eps;
    out.data_mut().iter_mut().for_each(|v| *v /= scale);
    out
}

/// Column-wise softmax of a `C × M` tensor, with per-column max subtraction.
pub fn softmax_per_frame(logits: &Tensor) -> Result<Tensor> {
    let (c, m) = logits.dims2()?;
    let x = logits.data();
    let mut out = Tensor::zeros(&[c, m]);
    let p = out.data_mut();
    for t in 0..m {
        let max = (0..c).map(|k| x[k * m + t]).fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for k in 0..c {
            let e = (x[k * m + t] - max).exp();
            p[k * m + t] = e;
            sum += e;
        }
        for k in 0..c {
            p[k * m + t] /= sum;
        }
    }
    Ok(out)
}

/// Index of the largest entry per column; ties go to the lowest class.
pub fn argmax_per_frame(probs: &Tensor) -> Result<Vec<usize>> {
    let (c, m) = probs.dims2()?;
    let p = probs.data();
    Ok((0..m)
        .map(|t| {
            let mut best = 0;
            for k in 1..c {
                if p[k * m + t] > p[best * m + t] {
                    best = k;
                }
            }
            best
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn relu_and_norm_relu() {
        let x = t(&[3], &[-1.0, 0.0, 2.0]);
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
        let n = norm_relu(&x, 1e-5);
        assert_eq!(n.data(), &[0.0, 0.0, 2.0 / (2.0 + 1e-5)]);
        assert!(n.data()[2] < 1.0);
        let neg = t(&[2], &[-3.0, -0.5]);
        assert_eq!(norm_relu(&neg, 1e-5).data(), &[0.0, 0.0]);
    }

    #[test]
    fn softmax_closed_forms() {
        let z = Tensor::zeros(&[10, 1]);
        let p = softmax_per_frame(&z).unwrap();
        assert!(p.data().iter().all(|v| (v - 0.1).abs() < 1e-15));

        let p = softmax_per_frame(&t(&[2, 1], &[2f64.ln(), 0.0])).unwrap();
        assert!((p.data()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.data()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_shift_invariant() {
        let x = t(&[3, 2], &[0.3, -1.0, 2.0, 0.5, -0.7, 4.0]);
        let mut y = x.clone();
        // add a per-column constant
        for (i, v) in y.data_mut().iter_mut().enumerate() {
            *v += if i % 2 == 0 { 123.4 } else { -57.0 };
        }
        let (a, b) = (softmax_per_frame(&x).unwrap(), softmax_per_frame(&y).unwrap());
        for (p, q) in a.data().iter().zip(b.data()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_ties_to_lowest() {
        let mut col = vec![0.05; 10];
        col[7] = 0.55;
        assert_eq!(argmax_per_frame(&t(&[10, 1], &col)).unwrap(), vec![7]);
        let mut col = vec![0.0; 10];
        col[2] = 0.5;
        col[5] = 0.5;
        assert_eq!(argmax_per_frame(&t(&[10, 1], &col)).unwrap(), vec![2]);
    }
}
