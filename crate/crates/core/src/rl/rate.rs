use serde::{Deserialize, Serialize};

/// How the per-weight step size evolves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum RateRule {
    /// `ε_w = min(ε₀ / √(G_w + δ), cap·ε₀)` with `G_w` the running sum of
    /// squared gradients, updated before the rate is read.
    Adagrad { delta: f64, cap_factor: f64 },
    Constant,
}

impl Default for RateRule {
    fn default() -> Self {
        RateRule::Adagrad {
            delta: 1e-8,
            cap_factor: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningRate {
    eps0: f64,
    rule: RateRule,
    history: Vec<f64>,
}

impl LearningRate {
    pub fn new(eps0: f64, rule: RateRule, n_weights: usize) -> Self {
        Self {
            eps0,
            rule,
            history: vec![0.0; n_weights],
        }
    }

    /// Records gradient `g` for weight `id` and returns its step size.
    pub fn rate(&mut self, id: usize, g: f64) -> f64 {
        match self.rule {
            RateRule::Constant => self.eps0,
            RateRule::Adagrad { delta, cap_factor } => {
                self.history[id] += g * g;
                (self.eps0 / (self.history[id] + delta).sqrt()).min(cap_factor * self.eps0)
            }
        }
    }

    /// Step size weight `id` would get from its history alone.
    pub fn current(&self, id: usize) -> f64 {
        match self.rule {
            RateRule::Constant => self.eps0,
            RateRule::Adagrad { delta, cap_factor } => {
                (self.eps0 / (self.history[id] + delta).sqrt()).min(cap_factor * self.eps0)
            }
        }
    }

    pub fn accumulated(&self, id: usize) -> f64 {
        self.history[id]
    }
}
