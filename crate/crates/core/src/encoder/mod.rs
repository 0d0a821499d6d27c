//! Small transformer encoder with sinusoidal relative position terms in
//! attention, trained from scratch with hand-written backpropagation.

mod checkpoint;
mod config;
mod finetune;
mod layers;
mod loss;
mod model;
mod optim;
mod params;
mod rpe;
mod train;

use thiserror::Error;

pub use checkpoint::{read_checkpoint, write_checkpoint, MAGIC as CHECKPOINT_MAGIC};
pub use config::EncoderConfig;
pub use finetune::{balanced_split, embed_word, encode_pair, fine_tune, EpochReport, FineTuneOutcome, FineTuneSettings};
pub use layers::{attention_layer, ffn, layer_norm, AttentionCache, LAYER_NORM_EPS};
pub use loss::{classification_loss, classify, pretrain_loss, ClassificationInput, PretrainLoss};
pub use model::{embed_input, Encoder, EncoderOutput, ForwardTrace};
pub use optim::{Adam, AdamSettings};
pub use params::{EncoderParameters, LayerParams};
pub use rpe::RelativePositionTable;
pub use train::{batch_seed, train, train_from, write_loss_log, LossRecord, TrainOutcome, TrainSettings};

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("invalid encoder config: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("token id {token} out of range for vocabulary of {vocab_size}")]
    TokenOutOfRange { token: u32, vocab_size: usize },
    #[error("relative offset {delta} outside the table for max_seq_len {max_seq_len}")]
    DeltaOutOfRange { delta: i64, max_seq_len: usize },
    #[error("sequence of {len} tokens exceeds max_seq_len {max_seq_len}")]
    SequenceTooLong { len: usize, max_seq_len: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty word")]
    EmptyWord,
    #[error("fine-tuning data must contain both labels")]
    SingleClass,
    #[error("non-finite loss {value} at step {step}")]
    NonFiniteLoss { step: usize, value: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("io: {0}")]
    Io(String),
}
