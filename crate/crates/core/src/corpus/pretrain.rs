use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lexicon::{segment, Lexicon};
use super::masking::{plan_with_forced_words, MaskSettings, MaskingPlan};
use super::sequence::{TokenSequence, WordSpan};
use super::vocab::Vocab;
use super::{is_content_word, CorpusError, SentenceSplitter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NspLabel {
    IsNext,
    NotNext,
}

impl NspLabel {
    pub fn class_index(self) -> usize {
        match self {
            NspLabel::IsNext => 0,
            NspLabel::NotNext => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PretrainExample {
    pub token_seq: TokenSequence,
    pub masking: MaskingPlan,
    pub nsp_label: NspLabel,
    /// Contiguous token range covered by the span objective.
    pub span_target: Option<WordSpan>,
}

impl PretrainExample {
    /// Token ids with the masking plan applied.
    pub fn input_tokens(&self) -> Vec<u32> {
        self.masking.apply(&self.token_seq.tokens)
    }

    /// Per-token in-span indicator (1 inside the span target).
    pub fn span_labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.token_seq.len()];
        if let Some(span) = self.span_target {
            for p in span.positions() {
                labels[p] = 1;
            }
        }
        labels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrainOptions {
    pub max_seq_len: usize,
    pub mask: MaskSettings,
    /// Inclusive range of whole words covered by the span target.
    pub span_words: (usize, usize),
}

impl Default for PretrainOptions {
    fn default() -> Self {
        PretrainOptions {
            max_seq_len: 64,
            mask: MaskSettings::default(),
            span_words: (2, 3),
        }
    }
}

/// Sentences of a corpus, segmented into words and encoded as token ids.
#[derive(Debug, Clone)]
pub struct PretrainCorpus {
    sentences: Vec<Vec<Vec<u32>>>,
    /// Sentences whose successor lives in the same document.
    with_successor: Vec<usize>,
    vocab_size: usize,
}

impl PretrainCorpus {
    pub fn new(
        documents: &[String],
        lexicon: &Lexicon,
        vocab: &Vocab,
        splitter: &SentenceSplitter,
    ) -> Result<Self, CorpusError> {
        let mut sentences = Vec::new();
        let mut with_successor = Vec::new();
        for doc in documents {
            let first = sentences.len();
            for sentence in splitter.split(doc) {
                let words: Vec<Vec<u32>> = segment(sentence, lexicon)
                    .into_iter()
                    .filter(|w| !w.trim().is_empty())
                    .map(|w| vocab.encode_word(w))
                    .collect();
                if !words.is_empty() {
                    sentences.push(words);
                }
            }
            with_successor.extend(first..sentences.len().saturating_sub(1).max(first));
        }
        if with_successor.is_empty() || sentences.len() < 3 {
            return Err(CorpusError::CorpusTooSmall {
                sentences: sentences.len(),
                pairs: with_successor.len(),
            });
        }
        Ok(PretrainCorpus {
            sentences,
            with_successor,
            vocab_size: vocab.len(),
        })
    }

    pub fn num_sentences(&self) -> usize {
        self.sentences.len()
    }

    pub fn sentence(&self, index: usize) -> &[Vec<u32>] {
        &self.sentences[index]
    }

    /// Sentence indices that have a true successor.
    pub fn pairable(&self) -> &[usize] {
        &self.with_successor
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Builds one example from sentences `a` and `b` with a given label.
    /// The caller decides whether `b` really follows `a`.
    pub fn pair_example<R: Rng>(
        &self,
        a: usize,
        b: usize,
        nsp_label: NspLabel,
        options: &PretrainOptions,
        rng: &mut R,
    ) -> PretrainExample {
        let mut first = self.sentences[a].clone();
        let mut second = self.sentences[b].clone();
        truncate_pair(&mut first, &mut second, options.max_seq_len.saturating_sub(3));
        let token_seq = TokenSequence::from_word_segments(&first, Some(&second));

        // word indices in token_seq: [CLS]=0, first words 1..=|a|, [SEP], second words, [SEP]
        let first_words: Vec<usize> = (1..=first.len()).collect();
        let second_words: Vec<usize> = (first.len() + 2..first.len() + 2 + second.len()).collect();
        let (min_len, max_len) = options.span_words;
        let eligible: Vec<&Vec<usize>> = [&first_words, &second_words]
            .into_iter()
            .filter(|ws| ws.len() >= min_len.max(1))
            .collect();
        let mut forced = Vec::new();
        let mut span_target = None;
        if !eligible.is_empty() {
            let words = eligible[rng.random_range(0..eligible.len())];
            let len = rng.random_range(min_len.max(1)..=max_len.max(min_len)).min(words.len());
            let start = rng.random_range(0..=words.len() - len);
            forced.extend_from_slice(&words[start..start + len]);
            let spans = &token_seq.word_spans;
            span_target = Some(WordSpan::new(
                spans[forced[0]].start,
                spans[*forced.last().unwrap()].end,
            ));
        }
        let masking = plan_with_forced_words(&token_seq, &forced, &options.mask, self.vocab_size, rng);
        PretrainExample {
            token_seq,
            masking,
            nsp_label,
            span_target,
        }
    }
}

fn token_count(words: &[Vec<u32>]) -> usize {
    words.iter().map(Vec::len).sum()
}

/// Drops whole words from the end of the longer segment until both fit.
fn truncate_pair(first: &mut Vec<Vec<u32>>, second: &mut Vec<Vec<u32>>, budget: usize) {
    while token_count(first) + token_count(second) > budget {
        let target = if token_count(first) >= token_count(second) {
            &mut *first
        } else {
            &mut *second
        };
        if target.pop().is_none() {
            break;
        }
    }
}

/// Samples `batch_size` sentence-pair examples. Each pair is the true
/// successor with probability 1/2, otherwise a uniformly drawn sentence other
/// than `a` and its successor.
pub fn make_pretrain_batch(
    corpus: &PretrainCorpus,
    batch_size: usize,
    options: &PretrainOptions,
    rng_seed: u64,
) -> Vec<PretrainExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = corpus.num_sentences();
    (0..batch_size)
        .map(|_| {
            let a = corpus.pairable()[rng.random_range(0..corpus.pairable().len())];
            if rng.random_bool(0.5) {
                corpus.pair_example(a, a + 1, NspLabel::IsNext, options, &mut rng)
            } else {
                // n >= 3 guarantees a candidate outside {a, a + 1}
                let mut b = rng.random_range(0..n - 2);
                if b >= a {
                    b += 2;
                }
                corpus.pair_example(a, b, NspLabel::NotNext, options, &mut rng)
            }
        })
        .collect()
}

/// Unique content words of a corpus minus stopwords and seeds.
pub fn build_candidates(
    documents: &[String],
    lexicon: &Lexicon,
    stopwords: &std::collections::BTreeSet<String>,
    seeds: &std::collections::BTreeSet<String>,
) -> Result<std::collections::BTreeSet<String>, CorpusError> {
    if documents.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(documents
        .iter()
        .flat_map(|doc| segment(doc, lexicon))
        .filter(|w| is_content_word(w))
        .filter(|w| !stopwords.contains(*w) && !seeds.contains(*w))
        .map(str::to_string)
        .collect())
}
