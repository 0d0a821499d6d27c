//! Building blocks for a search-volume investment activity index.
//!
//! - [`corpus`]: segmentation, vocabulary and pretraining/fine-tuning examples
//! - [`encoder`]: a small relative-position transformer encoder with exact gradients
//! - [`expansion`]: cosine ranking of candidate words against seed indicators
//! - [`index`]: polarity normalization, entropy weights and composite indices
//! - [`analytics`]: screening, factor scores, OLS with F-test and lag correlation

pub mod corpus;
pub mod encoder;
pub mod expansion;
pub mod index;
pub mod analytics;
