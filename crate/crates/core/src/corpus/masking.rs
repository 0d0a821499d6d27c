use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sequence::TokenSequence;
use super::vocab::{Vocab, MASK};

/// How a masked position is presented to the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Replacement {
    Mask,
    /// Replaced by the given ordinary token id.
    Random(u32),
    Keep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedToken {
    pub position: usize,
    pub replacement: Replacement,
    /// Original token id, the prediction target.
    pub label: u32,
}

/// Masked positions, sorted by position.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskingPlan {
    pub entries: Vec<MaskedToken>,
}

impl MaskingPlan {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.position)
    }

    pub fn contains(&self, position: usize) -> bool {
        self.entries
            .binary_search_by_key(&position, |e| e.position)
            .is_ok()
    }

    /// Token ids as seen by the encoder once the plan is applied.
    pub fn apply(&self, tokens: &[u32]) -> Vec<u32> {
        let mut out = tokens.to_vec();
        for e in &self.entries {
            match e.replacement {
                Replacement::Mask => out[e.position] = MASK,
                Replacement::Random(id) => out[e.position] = id,
                Replacement::Keep => {}
            }
        }
        out
    }
}

/// Whole-word masking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskSettings {
    /// Target fraction of maskable tokens to cover.
    pub rate: f64,
    /// Share of masked positions shown as `[MASK]`.
    pub mask_share: f64,
    /// Share of masked positions shown as a random ordinary token.
    pub random_share: f64,
}

impl Default for MaskSettings {
    fn default() -> Self {
        MaskSettings {
            rate: 0.15,
            mask_share: 0.8,
            random_share: 0.1,
        }
    }
}

impl MaskSettings {
    pub fn with_rate(rate: f64) -> Self {
        MaskSettings {
            rate,
            ..Self::default()
        }
    }
}

/// Samples whole words until at least `rate` of the maskable tokens are
/// covered. `[CLS]` and `[SEP]` are never candidates.
pub fn plan_whole_word_mask(
    seq: &TokenSequence,
    settings: &MaskSettings,
    vocab_size: usize,
    rng_seed: u64,
) -> MaskingPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    plan_with_forced_words(seq, &[], settings, vocab_size, &mut rng)
}

/// Like [`plan_whole_word_mask`], but the words at indices `forced` (into
/// `seq.word_spans`) are masked first and count toward the budget.
pub fn plan_with_forced_words<R: Rng>(
    seq: &TokenSequence,
    forced: &[usize],
    settings: &MaskSettings,
    vocab_size: usize,
    rng: &mut R,
) -> MaskingPlan {
    let maskable: Vec<usize> = seq
        .word_spans
        .iter()
        .enumerate()
        .filter(|(_, span)| !span.positions().any(|p| seq.is_boundary(p)))
        .map(|(i, _)| i)
        .collect();
    let maskable_tokens: usize = maskable.iter().map(|&i| seq.word_spans[i].len()).sum();
    let target = settings.rate.clamp(0.0, 1.0) * maskable_tokens as f64;

    let mut chosen: Vec<usize> = forced
        .iter()
        .copied()
        .filter(|i| maskable.contains(i))
        .collect();
    chosen.sort_unstable();
    chosen.dedup();
    let mut covered: usize = chosen.iter().map(|&i| seq.word_spans[i].len()).sum();

    let mut pool: Vec<usize> = maskable.into_iter().filter(|i| !chosen.contains(i)).collect();
    pool.shuffle(rng);
    for word in pool {
        if covered as f64 >= target {
            break;
        }
        covered += seq.word_spans[word].len();
        chosen.push(word);
    }

    let mut positions: Vec<usize> = chosen
        .iter()
        .flat_map(|&i| seq.word_spans[i].positions())
        .collect();
    positions.sort_unstable();

    let first_ordinary = Vocab::first_ordinary_id();
    let entries = positions
        .into_iter()
        .map(|position| {
            let u: f64 = rng.random();
            let replacement = if u < settings.mask_share {
                Replacement::Mask
            } else if u < settings.mask_share + settings.random_share {
                if (vocab_size as u32) > first_ordinary {
                    Replacement::Random(rng.random_range(first_ordinary..vocab_size as u32))
                } else {
                    Replacement::Mask
                }
            } else {
                Replacement::Keep
            };
            MaskedToken {
                position,
                replacement,
                label: seq.tokens[position],
            }
        })
        .collect();
    MaskingPlan { entries }
}
