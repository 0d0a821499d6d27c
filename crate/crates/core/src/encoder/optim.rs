use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::params::EncoderParameters;

/// Adaptive-moment optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamSettings {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamSettings {
    fn default() -> Self {
        AdamSettings {
            learning_rate: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    settings: AdamSettings,
    first: EncoderParameters,
    second: EncoderParameters,
    step: i32,
}

impl Adam {
    pub fn new(settings: AdamSettings, like: &EncoderParameters) -> Self {
        Adam {
            settings,
            first: like.zeros_like(),
            second: like.zeros_like(),
            step: 0,
        }
    }

    /// One bias-corrected update of `params` along `grads`.
    pub fn step(&mut self, params: &mut EncoderParameters, grads: &EncoderParameters) {
        self.step += 1;
        let AdamSettings { learning_rate, beta1, beta2, epsilon } = self.settings;
        let c1 = 1.0 - beta1.powi(self.step);
        let c2 = 1.0 - beta2.powi(self.step);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.first.tensors_mut())
            .zip(self.second.tensors_mut());
        for ((((_, p), (_, g)), (_, m)), (_, v)) in tensors {
            Zip::from(p).and(&g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *p -= learning_rate * (*m / c1) / ((*v / c2).sqrt() + epsilon);
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EncoderConfig;

    fn cfg() -> EncoderConfig {
        EncoderConfig { num_layers: 1, num_heads: 1, d_model: 2, d_ff: 2, vocab_size: 3, max_seq_len: 4, rng_seed: 1 }
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let mut p = EncoderParameters::init(&cfg());
        let before = p.clone();
        let mut g = p.clone();
        g.add_scaled(&before, 3.0);
        let mut adam = Adam::new(AdamSettings { learning_rate: 0.0, ..AdamSettings::default() }, &p);
        adam.step(&mut p, &g);
        adam.step(&mut p, &g);
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = EncoderParameters::zeros(&cfg());
        let mut g = p.zeros_like();
        g.token_embed[[0, 0]] = 4.0;
        g.token_embed[[0, 1]] = -0.5;
        let mut adam = Adam::new(AdamSettings { learning_rate: 0.1, ..AdamSettings::default() }, &p);
        adam.step(&mut p, &g);
        assert!((p.token_embed[[0, 0]] + 0.1).abs() < 1e-8);
        assert!((p.token_embed[[0, 1]] - 0.1).abs() < 1e-8);
        assert_eq!(p.token_embed[[1, 0]], 0.0);
    }
}
