use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::EncoderConfig;
use super::loss::pretrain_loss;
use super::model::Encoder;
use super::optim::{Adam, AdamSettings};
use super::params::EncoderParameters;
use super::EncoderError;
use crate::corpus::{make_pretrain_batch, PretrainCorpus, PretrainOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub steps: usize,
    pub batch_size: usize,
    pub optimizer: AdamSettings,
    pub data: PretrainOptions,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            steps: 200,
            batch_size: 8,
            optimizer: AdamSettings::default(),
            data: PretrainOptions::default(),
        }
    }
}

/// One row of the pretraining loss log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: usize,
    pub mlm_loss: f64,
    pub nsp_loss: f64,
    pub span_loss: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: EncoderParameters,
    pub log: Vec<LossRecord>,
}

/// Seed of the batch drawn at `step`.
pub fn batch_seed(rng_seed: u64, step: usize) -> u64 {
    rng_seed ^ (step as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Pretrains freshly initialized parameters for `settings.steps` updates.
pub fn train(corpus: &PretrainCorpus, config: &EncoderConfig, settings: &TrainSettings) -> Result<TrainOutcome, EncoderError> {
    let encoder = Encoder::new(*config)?;
    train_from(&encoder, EncoderParameters::init(config), corpus, settings)
}

pub fn train_from(
    encoder: &Encoder,
    mut params: EncoderParameters,
    corpus: &PretrainCorpus,
    settings: &TrainSettings,
) -> Result<TrainOutcome, EncoderError> {
    if settings.steps == 0 || settings.batch_size == 0 {
        return Err(EncoderError::Config("steps and batch_size must be >= 1".into()));
    }
    encoder.check_params(&params)?;
    let config = encoder.config();
    if corpus.vocab_size() > config.vocab_size {
        return Err(EncoderError::Config(format!(
            "corpus vocabulary ({}) exceeds encoder vocab_size ({})",
            corpus.vocab_size(),
            config.vocab_size
        )));
    }
    let data = PretrainOptions {
        max_seq_len: settings.data.max_seq_len.min(config.max_seq_len),
        ..settings.data
    };
    let mut adam = Adam::new(settings.optimizer, &params);
    let mut log = Vec::with_capacity(settings.steps);
    for step in 0..settings.steps {
        let batch = make_pretrain_batch(corpus, settings.batch_size, &data, batch_seed(config.rng_seed, step));
        let (loss, grads) = pretrain_loss(encoder, &params, &batch)?;
        if !loss.total.is_finite() {
            return Err(EncoderError::NonFiniteLoss { step, value: loss.total });
        }
        if loss.no_masked_tokens {
            log::warn!("step {step}: batch has no masked tokens");
        }
        log::debug!("step {step}: loss {:.5}", loss.total);
        log.push(LossRecord {
            step,
            mlm_loss: loss.mlm,
            nsp_loss: loss.nsp,
            span_loss: loss.span,
            total: loss.total,
        });
        adam.step(&mut params, &grads);
    }
    Ok(TrainOutcome { params, log })
}

/// Writes the loss log as CSV with a header row.
pub fn write_loss_log<W: Write>(writer: W, log: &[LossRecord]) -> Result<(), EncoderError> {
    let mut w = csv::Writer::from_writer(writer);
    for record in log {
        w.serialize(record).map_err(|e| EncoderError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| EncoderError::Io(e.to_string()))?;
    Ok(())
}
