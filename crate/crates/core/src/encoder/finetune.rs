use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{argmax, classification_loss, classify, ClassificationInput};
use super::model::Encoder;
use super::optim::{Adam, AdamSettings};
use super::params::EncoderParameters;
use super::EncoderError;
use crate::corpus::{FineTuneExample, Vocab, CLS, SEP};
use crate::expansion::WordVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FineTuneSettings {
    pub batch_size: usize,
    pub epochs: usize,
    /// Share of each class held out for validation.
    pub validation_fraction: f64,
    pub optimizer: AdamSettings,
    pub rng_seed: u64,
}

impl Default for FineTuneSettings {
    fn default() -> Self {
        FineTuneSettings {
            batch_size: 16,
            epochs: 10,
            validation_fraction: 0.2,
            optimizer: AdamSettings::default(),
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct FineTuneOutcome {
    /// Parameters from the epoch with the best validation accuracy (the
    /// input parameters when no epoch ran).
    pub params: EncoderParameters,
    pub history: Vec<EpochReport>,
    pub best_epoch: Option<usize>,
}

/// `[CLS] word [SEP] text [SEP]` with segments 0 and 1, text truncated to fit.
pub fn encode_pair(word: &str, text: &str, vocab: &Vocab, max_seq_len: usize, label: usize) -> ClassificationInput {
    let word_ids = vocab.encode_word(word);
    let text_ids = vocab.encode_word(text);
    let mut tokens = Vec::with_capacity(word_ids.len() + text_ids.len() + 3);
    tokens.push(CLS);
    tokens.extend(word_ids.iter().take(max_seq_len.saturating_sub(3)));
    tokens.push(SEP);
    let first = tokens.len();
    let room = max_seq_len.saturating_sub(first + 1);
    tokens.extend(text_ids.iter().take(room));
    tokens.push(SEP);
    let mut segments = vec![0u8; first];
    segments.resize(tokens.len(), 1);
    ClassificationInput { tokens, segments, label }
}

/// Splits rows into class-balanced train and validation sets: the majority
/// class is downsampled to the minority count, then the same share of each
/// class is held out.
pub fn balanced_split(
    examples: &[FineTuneExample],
    validation_fraction: f64,
    rng_seed: u64,
) -> Result<(Vec<FineTuneExample>, Vec<FineTuneExample>), EncoderError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut pos: Vec<&FineTuneExample> = examples.iter().filter(|e| e.tag == 1).collect();
    let mut neg: Vec<&FineTuneExample> = examples.iter().filter(|e| e.tag == 0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(EncoderError::SingleClass);
    }
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let per_class = pos.len().min(neg.len());
    pos.truncate(per_class);
    neg.truncate(per_class);
    let held = ((per_class as f64) * validation_fraction.clamp(0.0, 1.0)).round() as usize;
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for class in [pos, neg] {
        valid.extend(class[..held].iter().map(|e| (*e).clone()));
        train.extend(class[held..].iter().map(|e| (*e).clone()));
    }
    Ok((train, valid))
}

fn accuracy(encoder: &Encoder, params: &EncoderParameters, data: &[ClassificationInput]) -> Result<f64, EncoderError> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for ex in data {
        let probs = classify(encoder, params, &ex.tokens, &ex.segments)?;
        correct += (argmax(probs.view()) == ex.label) as usize;
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Trains the `[CLS]` classifier (and the encoder under it) on word/text
/// relatedness.
pub fn fine_tune(
    encoder: &Encoder,
    params: &EncoderParameters,
    examples: &[FineTuneExample],
    vocab: &Vocab,
    settings: &FineTuneSettings,
) -> Result<FineTuneOutcome, EncoderError> {
    encoder.check_params(params)?;
    if settings.batch_size == 0 {
        return Err(EncoderError::Config("batch_size must be >= 1".into()));
    }
    let (train, valid) = balanced_split(examples, settings.validation_fraction, settings.rng_seed)?;
    let max_len = encoder.config().max_seq_len;
    let encode = |rows: &[FineTuneExample]| -> Vec<ClassificationInput> {
        rows.iter()
            .map(|e| encode_pair(&e.word, &e.text, vocab, max_len, e.tag as usize))
            .collect()
    };
    let mut train = encode(&train);
    let valid = encode(&valid);
    if train.is_empty() {
        return Err(EncoderError::Config("no training rows left after the validation split".into()));
    }

    let mut current = params.clone();
    let mut best = params.clone();
    let mut best_accuracy = f64::NEG_INFINITY;
    let mut best_epoch = None;
    let mut history = Vec::with_capacity(settings.epochs);
    let mut adam = Adam::new(settings.optimizer, &current);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.rng_seed.wrapping_add(1));
    for epoch in 0..settings.epochs {
        train.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for batch in train.chunks(settings.batch_size) {
            let (loss, grads, c) = classification_loss(encoder, &current, batch)?;
            if !loss.is_finite() {
                return Err(EncoderError::NonFiniteLoss { step: epoch, value: loss });
            }
            loss_sum += loss * batch.len() as f64;
            correct += c;
            adam.step(&mut current, &grads);
        }
        let validation_accuracy = accuracy(encoder, &current, &valid)?;
        let report = EpochReport {
            epoch: epoch + 1,
            train_loss: loss_sum / train.len() as f64,
            train_accuracy: correct as f64 / train.len() as f64,
            validation_accuracy,
        };
        log::info!(
            "fine-tune epoch {}: train acc {:.4}, validation acc {:.4}",
            report.epoch,
            report.train_accuracy,
            report.validation_accuracy
        );
        if validation_accuracy > best_accuracy {
            best_accuracy = validation_accuracy;
            best = current.clone();
            best_epoch = Some(epoch + 1);
        }
        history.push(report);
    }
    Ok(FineTuneOutcome { params: best, history, best_epoch })
}

/// The `[CLS]` vector of `[CLS] word [SEP]`.
pub fn embed_word(encoder: &Encoder, params: &EncoderParameters, vocab: &Vocab, word: &str) -> Result<WordVector, EncoderError> {
    let seq = crate::corpus::TokenSequence::single_word(word, vocab).map_err(|_| EncoderError::EmptyWord)?;
    if seq.len() > encoder.config().max_seq_len {
        return Err(EncoderError::SequenceTooLong { len: seq.len(), max_seq_len: encoder.config().max_seq_len });
    }
    let out = encoder.encoder_forward(&seq, params)?;
    Ok(WordVector(out.cls_vector().to_vec()))
}
