use serde::{Deserialize, Serialize};

use super::EncoderError;

/// Shape and seed of the toy encoder. The relative-position dimension equals
/// the per-head dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub num_layers: usize,
    pub num_heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub vocab_size: usize,
    pub max_seq_len: usize,
    pub rng_seed: u64,
}

impl EncoderConfig {
    pub fn head_dim(&self) -> usize {
        self.d_model / self.num_heads.max(1)
    }

    pub fn rpe_dim(&self) -> usize {
        self.head_dim()
    }

    pub fn validate(&self) -> Result<(), EncoderError> {
        let bad = |msg: &str| Err(EncoderError::Config(msg.to_string()));
        if self.num_heads == 0 || self.d_model == 0 || self.d_ff == 0 || self.vocab_size == 0 || self.max_seq_len == 0 {
            return bad("all dimensions must be >= 1");
        }
        if !self.d_model.is_multiple_of(self.num_heads) {
            return bad("d_model must be divisible by num_heads");
        }
        if !self.rpe_dim().is_multiple_of(2) {
            return bad("per-head dimension must be even for the sin/cos position table");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> EncoderConfig {
        EncoderConfig { num_layers: 1, num_heads: 2, d_model: 8, d_ff: 16, vocab_size: 10, max_seq_len: 16, rng_seed: 0 }
    }

    #[test]
    fn validation() {
        assert!(base().validate().is_ok());
        assert_eq!(base().head_dim(), 4);
        assert!(EncoderConfig { num_heads: 3, ..base() }.validate().is_err());
        assert!(EncoderConfig { d_model: 6, num_heads: 2, ..base() }.validate().is_err());
        assert!(EncoderConfig { vocab_size: 0, ..base() }.validate().is_err());
        assert!(EncoderConfig { num_layers: 0, ..base() }.validate().is_ok());
    }
}
