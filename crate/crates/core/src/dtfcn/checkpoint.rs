use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::NetConfig;
use super::model::{build_model, Model};
use crate::error::{Error, Result};
use crate::io::{read_json, write_json};
use crate::mocap::CoordinateSpace;

const FORMAT: &str = "motionseg-dtfcn";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoredParam {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

/// Versioned JSON container: network config, the coordinate space the model
/// was trained on, and every parameter array in layer order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    format: String,
    version: u32,
    pub config: NetConfig,
    pub space: CoordinateSpace,
    /// Output class names in index order; may be empty.
    #[serde(default)]
    pub class_names: Vec<String>,
    parameters: Vec<StoredParam>,
}

impl Checkpoint {
    pub fn from_model(model: &Model, space: CoordinateSpace) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            config: model.config().clone(),
            space,
            class_names: Vec::new(),
            parameters: model
                .params()
                .iter()
                .map(|p| StoredParam {
                    name: p.name.clone(),
                    shape: p.value.shape().to_vec(),
                    values: p.value.data().to_vec(),
                })
                .collect(),
        }
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if !names.is_empty() && names.len() != self.config.classes {
            return Err(Error::Config(format!(
                "{} class names for a {}-class network",
                names.len(),
                self.config.classes
            )));
        }
        self.class_names = names;
        Ok(self)
    }

    pub fn to_model(&self) -> Result<Model> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let mut model = build_model(&self.config, 0)?;
        let params = model.params_mut();
        if params.len() != self.parameters.len() {
            return Err(Error::Shape(format!(
                "checkpoint has {} parameter arrays, config implies {}",
                self.parameters.len(),
                params.len()
            )));
        }
        for (p, stored) in params.into_iter().zip(&self.parameters) {
            if p.name != stored.name || p.value.shape() != stored.shape.as_slice() || stored.values.len() != p.value.len() {
                return Err(Error::Shape(format!(
                    "checkpoint parameter {} {:?} does not match {} {:?}",
                    stored.name,
                    stored.shape,
                    p.name,
                    p.value.shape()
                )));
            }
            p.value.data_mut().copy_from_slice(&stored.values);
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}
