use std::collections::BTreeSet;

use super::CorpusError;

/// Dictionary used by the forward maximum-matching segmenter.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    words: BTreeSet<String>,
    max_word_len: usize,
}

impl Lexicon {
    pub fn new<I, S>(words: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut lexicon = Lexicon::default();
        for word in words {
            lexicon.insert(word.into())?;
        }
        Ok(lexicon)
    }

    pub fn insert(&mut self, word: String) -> Result<(), CorpusError> {
        if word.is_empty() {
            return Err(CorpusError::EmptyLexiconWord);
        }
        self.max_word_len = self.max_word_len.max(word.chars().count());
        self.words.insert(word);
        Ok(())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    /// Character length of the longest word.
    pub fn max_word_len(&self) -> usize {
        self.max_word_len
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

/// Forward maximum matching.
///
/// At every position the longest lexicon word starting there is emitted;
/// a character that starts no lexicon word is emitted on its own. The
/// concatenation of the output always equals `text`.
pub fn segment<'a>(text: &'a str, lexicon: &Lexicon) -> Vec<&'a str> {
    // byte offset of every char boundary, including the end
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let n_chars = bounds.len() - 1;
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < n_chars {
        let longest = lexicon.max_word_len().min(n_chars - pos);
        let width = (2..=longest)
            .rev()
            .find(|&w| lexicon.contains(&text[bounds[pos]..bounds[pos + w]]))
            .unwrap_or(1);
        out.push(&text[bounds[pos]..bounds[pos + width]]);
        pos += width;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lex(words: &[&str]) -> Lexicon {
        Lexicon::new(words.iter().copied()).unwrap()
    }

    #[test]
    fn empty_text() {
        assert!(segment("", &lex(&["ab"])).is_empty());
    }

    #[test]
    fn longest_match_wins() {
        assert_eq!(segment("abcd", &lex(&["ab", "abc", "c", "d"])), vec!["abc", "d"]);
    }

    #[test]
    fn unknown_chars_fall_back() {
        assert_eq!(segment("xz", &lex(&["ab"])), vec!["x", "z"]);
    }

    #[test]
    fn multibyte_words() {
        let lexicon = lex(&["基础设施", "投资", "基础"]);
        assert_eq!(
            segment("基础设施投资增长", &lexicon),
            vec!["基础设施", "投资", "增", "长"]
        );
    }

    #[test]
    fn max_word_len_tracks_chars() {
        let lexicon = lex(&["a", "房地产", "ab"]);
        assert_eq!(lexicon.max_word_len(), 3);
        assert!(Lexicon::new([""]).is_err());
    }

    proptest! {
        #[test]
        fn segmentation_round_trips(text in "\\PC{0,40}", words in proptest::collection::vec("[a-c投资]{1,3}", 0..8)) {
            let lexicon = Lexicon::new(words).unwrap();
            let parts = segment(&text, &lexicon);
            prop_assert_eq!(parts.concat(), text.clone());
            prop_assert!(parts.iter().all(|p| !p.is_empty()));
        }
    }
}
