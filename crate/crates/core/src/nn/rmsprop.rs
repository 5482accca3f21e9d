use serde::{Deserialize, Serialize};

use super::Parameterized;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        RmsPropConfig { learning_rate: 1e-3, decay: 0.99, epsilon: 1e-8 }
    }
}

/// RMSProp with one squared-gradient accumulator per parameter:
/// `acc <- decay * acc + (1 - decay) * g^2`, `theta <- theta - lr * g / sqrt(acc + eps)`.
#[derive(Debug, Clone)]
pub struct RmsProp {
    pub config: RmsPropConfig,
    accumulators: Vec<Vec<f64>>,
}

impl RmsProp {
    pub fn new<M: Parameterized>(config: RmsPropConfig, model: &M) -> Self {
        let accumulators = model.params().iter().map(|p| vec![0.0; p.data.len()]).collect();
        RmsProp { config, accumulators }
    }

    pub fn accumulators(&self) -> &[Vec<f64>] {
        &self.accumulators
    }

    pub fn step<M: Parameterized>(&mut self, params: &mut M, grads: &M) -> Result<()> {
        let grads = grads.params();
        let mut params = params.params_mut();
        let shapes_match = params.len() == self.accumulators.len()
            && grads.len() == params.len()
            && params
                .iter()
                .zip(&grads)
                .zip(&self.accumulators)
                .all(|((p, g), a)| p.len() == g.data.len() && p.len() == a.len());
        if !shapes_match {
            return Err(Error::Shape("parameter, gradient and optimizer state shapes differ".into()));
        }
        let RmsPropConfig { learning_rate, decay, epsilon } = self.config;
        for ((p, g), acc) in params.iter_mut().zip(&grads).zip(&mut self.accumulators) {
            for ((theta, &g), a) in p.iter_mut().zip(g.data).zip(acc.iter_mut()) {
                *a = decay * *a + (1.0 - decay) * g * g;
                *theta -= learning_rate * g / (*a + epsilon).sqrt();
            }
        }
        Ok(())
    }
}
