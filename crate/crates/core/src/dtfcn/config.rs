use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::NORM_RELU_EPS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    /// Odd temporal kernel width shared by every conv layer.
    pub w: usize,
    /// Motion image height the first layer's kernels span.
    pub height: usize,
    pub input_channels: usize,
    /// Output channels of each conv layer; the first is the 2-D temporal conv.
    pub conv_channels: Vec<usize>,
    pub classes: usize,
    pub dropout: f64,
    pub norm_eps: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            w: 3,
            height: 224,
            input_channels: 3,
            conv_channels: vec![64, 64, 128, 256, 512],
            classes: 10,
            dropout: 0.5,
            norm_eps: NORM_RELU_EPS,
        }
    }
}

impl NetConfig {
    /// Scaled-down preset for tests and laptops.
    pub fn desk() -> Self {
        Self {
            height: 32,
            conv_channels: vec![8, 8, 16, 32, 64],
            ..Self::default()
        }
    }

    pub fn with_w(mut self, w: usize) -> Self {
        self.w = w;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.w == 0 || self.w.is_multiple_of(2) {
            return fail(format!("kernel width w = {} must be odd", self.w));
        }
        if self.conv_channels.is_empty() {
            return fail("conv_channels must list at least one layer".into());
        }
        if self.conv_channels.contains(&0) {
            return fail("conv_channels entries must be positive".into());
        }
        if self.height == 0 {
            return fail("height must be positive".into());
        }
        if self.input_channels != 3 {
            return fail(format!("input_channels must be 3 (XYZ), got {}", self.input_channels));
        }
        if self.classes == 0 {
            return fail("classes must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.norm_eps > 0.0) {
            return fail("norm_eps must be positive".into());
        }
        dilation_checked(self.w, self.conv_channels.len())?;
        Ok(())
    }
}

fn dilation_checked(w: usize, layers: usize) -> Result<Vec<usize>> {
    (0..layers)
        .map(|l| {
            w.checked_pow(l as u32)
                .ok_or_else(|| Error::Config(format!("dilation {w}^{l} overflows")))
        })
        .collect()
}

/// Dilation of each conv layer: `w^(l−1)` for `l = 1..L`.
pub fn dilations(config: &NetConfig) -> Vec<usize> {
    dilation_checked(config.w, config.conv_channels.len()).unwrap_or_default()
}

/// Total zero padding per conv layer, `d·(w − 1)` (half on each side).
pub fn padding_schedule(config: &NetConfig) -> Vec<usize> {
    dilations(config).iter().map(|d| d * (config.w - 1)).collect()
}

/// Receptive field (frames) after each conv layer: `1 + Σ (w − 1)·d_l`.
pub fn receptive_field(config: &NetConfig) -> Vec<usize> {
    padding_schedule(config)
        .iter()
        .scan(1, |rfs, p| {
            *rfs += p;
            Some(*rfs)
        })
        .collect()
}

/// Closed-form parameter count of all conv layers plus the dense output layer.
pub fn parameter_count(config: &NetConfig) -> usize {
    let mut total = 0;
    let mut c_in = config.input_channels * config.height;
    for &c_out in &config.conv_channels {
        total += c_in * config.w * c_out + c_out;
        c_in = c_out;
    }
    total + c_in * config.classes + config.classes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let full = NetConfig::default();
        assert_eq!(receptive_field(&full.clone().with_w(3)), vec![3, 9, 27, 81, 243]);
        assert_eq!(receptive_field(&full.clone().with_w(5)), vec![5, 25, 125, 625, 3125]);
        assert_eq!(receptive_field(&full.clone().with_w(1)), vec![1; 5]);
        assert_eq!(padding_schedule(&full.clone().with_w(3)), vec![2, 6, 18, 54, 162]);
        assert_eq!(padding_schedule(&full.clone().with_w(5)), vec![4, 20, 100, 500, 2500]);
        assert_eq!(padding_schedule(&full.clone().with_w(1)), vec![0; 5]);
        assert_eq!(dilations(&full.clone().with_w(3)), vec![1, 3, 9, 27, 81]);
        assert_eq!(parameter_count(&full.clone().with_w(1)), 225_290);
        assert_eq!(parameter_count(&full.clone().with_w(3)), 663_562);
        assert_eq!(parameter_count(&full.with_w(5)), 1_101_834);
    }

    #[test]
    fn validation() {
        assert!(NetConfig::default().validate().is_ok());
        assert!(NetConfig::default().with_w(4).validate().is_err());
        let empty = NetConfig { conv_channels: vec![], ..NetConfig::default() };
        assert!(empty.validate().is_err());
        let rgba = NetConfig { input_channels: 4, ..NetConfig::default() };
        assert!(rgba.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<NetConfig>(r#"{"w": 3, "depth": 5}"#).is_err());
        let c: NetConfig = serde_json::from_str(r#"{"w": 5}"#).unwrap();
        assert_eq!(c.w, 5);
        assert_eq!(c.height, 224);
    }
}
