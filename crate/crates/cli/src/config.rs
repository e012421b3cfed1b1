use std::path::Path;

use motionseg_core::dtfcn::NetConfig;
use motionseg_core::experiments::NoiseMode;
use motionseg_core::io::read_json;
use motionseg_core::{CoordinateSpace, Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// 224-row input, channels 64-64-128-256-512.
    Full,
    /// 32-row input, channels 8-8-16-32-64.
    Desk,
}

impl Preset {
    pub fn net(self) -> NetConfig {
        match self {
            Preset::Full => NetConfig::default(),
            Preset::Desk => NetConfig::desk(),
        }
    }
}

/// Training run settings. Loaded from an optional JSON file, then overridden
/// by command-line flags; the result is logged and saved with the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub net: NetConfig,
    pub epochs: usize,
    pub folds: usize,
    /// `none`, `random:<fraction>`, `window:<n>` or `mask:<n>`.
    pub noise: String,
    pub seed: u64,
    pub noise_seed: u64,
    pub space: CoordinateSpace,
    pub learning_rate: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            net: NetConfig::default(),
            epochs: 100,
            folds: 7,
            noise: "none".into(),
            seed: 0,
            noise_seed: 1,
            space: CoordinateSpace::Local,
            learning_rate: 1e-3,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path).map_err(|e| match e {
            Error::Json { context, source } => Error::Config(format!("{context}: {source}")),
            other => other,
        })
    }

    pub fn noise_mode(&self) -> Result<NoiseMode> {
        self.noise.parse()
    }

    pub fn validate(&self) -> Result<()> {
        self.net.validate()?;
        self.noise_mode()?;
        if self.folds == 0 {
            return Err(Error::Config("folds must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        Ok(())
    }
}

/// Network config from a JSON file, or the preset when no file is given.
pub fn load_net(path: Option<&Path>, preset: Preset) -> Result<NetConfig> {
    let net = match path {
        Some(p) => read_json::<NetConfig>(p).map_err(|e| match e {
            Error::Json { context, source } => Error::Config(format!("{context}: {source}")),
            other => other,
        })?,
        None => preset.net(),
    };
    net.validate()?;
    Ok(net)
}
