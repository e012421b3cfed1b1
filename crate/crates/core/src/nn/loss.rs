use super::{Tensor, PROB_FLOOR};
use crate::error::{Error, Result};
use crate::labels::LabelTrack;

/// Mean cross entropy over the frames kept by `mask` (all frames when `None`),
/// and its gradient with respect to the softmax logits. Masked frames get
/// exactly zero loss and gradient; their labels are never read.
pub fn masked_cross_entropy(
    probs: &Tensor,
    labels: &LabelTrack,
    mask: Option<&[bool]>,
) -> Result<(f64, Tensor)> {
    let (c, m) = probs.dims2()?;
    if labels.len() != m {
        return Err(Error::Shape(format!("{} labels for {m} frames", labels.len())));
    }
    if labels.class_count() > c {
        return Err(Error::Shape(format!(
            "labels use {} classes, network outputs {c}",
            labels.class_count()
        )));
    }
    if let Some(mask) = mask {
        if mask.len() != m {
            return Err(Error::Shape(format!("{} mask entries for {m} frames", mask.len())));
        }
    }
    let kept = |t: usize| mask.is_none_or(|mk| mk[t]);
    let count = (0..m).filter(|&t| kept(t)).count();
    let mut grad = Tensor::zeros(&[c, m]);
    if count == 0 {
        return Ok((0.0, grad));
    }
    let scale = 1.0 / count as f64;
    let p = probs.data();
    let g = grad.data_mut();
    let mut loss = 0.0;
    for t in 0..m {
        if !kept(t) {
            continue;
        }
        let y = labels.classes()[t];
        loss -= p[y * m + t].max(PROB_FLOOR).ln();
        for k in 0..c {
            g[k * m + t] = p[k * m + t] * scale;
        }
        g[y * m + t] -= scale;
    }
    Ok((loss * scale, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_ln_c() {
        let probs = Tensor::new(vec![10, 4], vec![0.1; 40]).unwrap();
        let labels = LabelTrack::new(vec![0, 3, 9, 2], 10).unwrap();
        let (loss, _) = masked_cross_entropy(&probs, &labels, None).unwrap();
        assert!((loss - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction() {
        let probs = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let labels = LabelTrack::new(vec![0, 1], 2).unwrap();
        let (loss, grad) = masked_cross_entropy(&probs, &labels, None).unwrap();
        assert!(loss <= 1e-6);
        assert!(grad.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn fully_masked_is_zero() {
        let probs = Tensor::new(vec![2, 2], vec![0.3, 0.6, 0.7, 0.4]).unwrap();
        let labels = LabelTrack::new(vec![0, 1], 2).unwrap();
        let (loss, grad) = masked_cross_entropy(&probs, &labels, Some(&[false, false])).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn saturated_probability_is_floored() {
        let probs = Tensor::new(vec![2, 1], vec![0.0, 1.0]).unwrap();
        let labels = LabelTrack::new(vec![0], 2).unwrap();
        let (loss, _) = masked_cross_entropy(&probs, &labels, None).unwrap();
        assert!((loss - (-PROB_FLOOR.ln())).abs() < 1e-12);
    }
}
