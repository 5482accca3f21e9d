use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Parameterized;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Versioned JSON checkpoint of named tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    #[serde(default)]
    pub metadata: serde_json::Map<String, serde_json::Value>,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn capture<M: Parameterized>(model: &M) -> Self {
        let tensors = model
            .params()
            .into_iter()
            .map(|p| NamedTensor { name: p.name, shape: p.shape, data: p.data.to_vec() })
            .collect();
        Checkpoint { format_version: CHECKPOINT_VERSION, metadata: Default::default(), tensors }
    }

    /// Copies tensors into `model`, matching by name and shape.
    pub fn restore<M: Parameterized>(&self, model: &mut M) -> Result<()> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(Error::Data(format!("unsupported checkpoint version {}", self.format_version)));
        }
        let layout: Vec<(String, Vec<usize>)> = model.params().into_iter().map(|p| (p.name, p.shape)).collect();
        if layout.len() != self.tensors.len() {
            return Err(Error::Shape(format!("checkpoint has {} tensors, model {}", self.tensors.len(), layout.len())));
        }
        for ((name, shape), t) in layout.iter().zip(&self.tensors) {
            if *name != t.name || *shape != t.shape || t.data.len() != shape.iter().product::<usize>() {
                return Err(Error::Shape(format!("checkpoint tensor {} {:?} does not match {name} {shape:?}", t.name, t.shape)));
            }
        }
        for (dst, t) in model.params_mut().into_iter().zip(&self.tensors) {
            dst.copy_from_slice(&t.data);
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}
