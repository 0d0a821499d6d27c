use std::collections::BTreeMap;

use super::CorpusError;

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const CLS: u32 = 2;
pub const SEP: u32 = 3;
pub const MASK: u32 = 4;

const SPECIALS: [&str; 5] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"];

/// Character-level vocabulary. Ids 0..5 are the special tokens, ordinary
/// characters follow in sorted order so the mapping is reproducible from the
/// same inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    ids: BTreeMap<String, u32>,
}

impl Vocab {
    /// Builds the vocabulary from every character appearing in `texts`.
    /// Whitespace is not a token.
    pub fn from_texts<'a, I>(texts: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let chars: std::collections::BTreeSet<char> = texts
            .into_iter()
            .flat_map(str::chars)
            .filter(|c| !c.is_whitespace())
            .collect();
        Self::from_tokens(chars.into_iter().map(String::from))
            .expect("chars are unique and never special")
    }

    /// Builds the vocabulary from an explicit ordinary-token list (specials
    /// are prepended).
    pub fn from_tokens<I>(tokens: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = String>,
    {
        let mut all: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        all.extend(tokens);
        let mut ids = BTreeMap::new();
        for (i, tok) in all.iter().enumerate() {
            if ids.insert(tok.clone(), i as u32).is_some() {
                return Err(CorpusError::DuplicateToken(tok.clone()));
            }
        }
        Ok(Vocab { tokens: all, ids })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Ordinary tokens in id order, for persisting next to a checkpoint.
    pub fn ordinary_tokens(&self) -> &[String] {
        &self.tokens[SPECIALS.len()..]
    }

    pub fn is_special(id: u32) -> bool {
        (id as usize) < SPECIALS.len()
    }

    /// First id that is not a special token.
    pub fn first_ordinary_id() -> u32 {
        SPECIALS.len() as u32
    }

    /// Character ids for one word, skipping whitespace.
    pub fn encode_word(&self, word: &str) -> Vec<u32> {
        word.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| {
                let mut buf = [0u8; 4];
                self.id(c.encode_utf8(&mut buf))
            })
            .collect()
    }
}
