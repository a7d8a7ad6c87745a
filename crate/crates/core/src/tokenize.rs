//! WordPiece tokenization that keeps track of which pieces belong to which
//! word, so masking can operate on whole words.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::VocabTable;

/// A sentence split into words and subword pieces.
///
/// `spans[i]` is the half-open piece range of `words[i]`. Spans are
/// contiguous, in order, and cover `pieces` exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedSentence {
    pub words: Vec<String>,
    pub pieces: Vec<String>,
    pub spans: Vec<Range<usize>>,
}

impl TokenizedSentence {
    pub fn word_spans(&self) -> &[Range<usize>] {
        &self.spans
    }

    pub fn len_words(&self) -> usize {
        self.words.len()
    }

    pub fn len_pieces(&self) -> usize {
        self.pieces.len()
    }

    /// Checks the span invariants; returns a description of the first violation.
    pub fn check(&self) -> Result<(), String> {
        if self.spans.len() != self.words.len() {
            return Err(format!("{} spans for {} words", self.spans.len(), self.words.len()));
        }
        let mut next = 0;
        for (i, span) in self.spans.iter().enumerate() {
            if span.start != next || span.end <= span.start {
                return Err(format!("span {i} = {span:?} does not continue at {next}"));
            }
            next = span.end;
        }
        if next != self.pieces.len() {
            return Err(format!("spans cover {next} of {} pieces", self.pieces.len()));
        }
        Ok(())
    }
}

/// Free-function form of [`TokenizedSentence::word_spans`].
pub fn word_spans(ts: &TokenizedSentence) -> &[Range<usize>] {
    ts.word_spans()
}

pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{00A1}' | '\u{00A7}' | '\u{00AB}' | '\u{00B6}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
            | '\u{2010}'..='\u{2027}'
            | '\u{2030}'..='\u{205E}'
            | '\u{3001}'..='\u{3003}'
            | '\u{3008}'..='\u{3011}')
}

/// Splits on whitespace, then splits every punctuation character off as a
/// word of its own. Casing is preserved.
pub fn pre_tokenize(text: &str) -> Vec<String> {
    let mut words = Vec::new();
    for chunk in text.split_whitespace() {
        let mut current = String::new();
        for c in chunk.chars() {
            if is_punctuation(c) {
                if !current.is_empty() {
                    words.push(std::mem::take(&mut current));
                }
                words.push(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            words.push(current);
        }
    }
    words
}

/// Greedy longest-prefix-first decomposition of a single word.
///
/// The word is lowercased first. Words longer than the vocabulary's
/// character limit, or with no complete decomposition, become one
/// unknown-token piece.
pub fn wordpiece_word(word: &str, vocab: &VocabTable) -> Vec<String> {
    let lowered = word.to_lowercase();
    let chars: Vec<char> = lowered.chars().collect();
    if chars.is_empty() || chars.len() > vocab.max_input_chars_per_word() {
        return vec![vocab.unknown_token().to_string()];
    }

    let prefix = vocab.continuation_prefix();
    let mut pieces = Vec::new();
    let mut start = 0;
    let mut candidate = String::new();
    while start < chars.len() {
        let mut end = chars.len();
        let mut found = None;
        while start < end {
            candidate.clear();
            if start > 0 {
                candidate.push_str(prefix);
            }
            candidate.extend(&chars[start..end]);
            if vocab.contains(&candidate) {
                found = Some(candidate.clone());
                break;
            }
            end -= 1;
        }
        match found {
            Some(piece) => pieces.push(piece),
            None => return vec![vocab.unknown_token().to_string()],
        }
        start = end;
    }
    pieces
}

/// Tokenizes already-split words.
pub fn tokenize_words<S: AsRef<str>>(words: &[S], vocab: &VocabTable) -> TokenizedSentence {
    let mut pieces = Vec::new();
    let mut spans = Vec::with_capacity(words.len());
    for word in words {
        let begin = pieces.len();
        pieces.extend(wordpiece_word(word.as_ref(), vocab));
        spans.push(begin..pieces.len());
    }
    TokenizedSentence {
        words: words.iter().map(|w| w.as_ref().to_string()).collect(),
        pieces,
        spans,
    }
}

pub fn wordpiece_tokenize(text: &str, vocab: &VocabTable) -> TokenizedSentence {
    tokenize_words(&pre_tokenize(text), vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::VocabOptions;

    fn vocab(tokens: &[&str]) -> VocabTable {
        let mut all = vec!["[PAD]", "[UNK]", "[MASK]"];
        all.extend_from_slice(tokens);
        VocabTable::new(all.into_iter().map(String::from).collect(), VocabOptions::default()).unwrap()
    }

    #[test]
    fn eating_splits_into_two_pieces() {
        let v = vocab(&["a", "tiger", "is", "eat", "##ing"]);
        let ts = wordpiece_tokenize("A tiger is eating", &v);
        assert_eq!(ts.pieces, vec!["a", "tiger", "is", "eat", "##ing"]);
        assert_eq!(ts.spans[3], 3..5);
        assert!(ts.check().is_ok());
    }

    #[test]
    fn unrepresentable_word_is_unknown() {
        let v = vocab(&["a"]);
        let ts = wordpiece_tokenize("ßøç", &v);
        assert_eq!(ts.pieces, vec!["[UNK]"]);
        assert_eq!(ts.spans, vec![0..1]);
    }

    #[test]
    fn partial_decomposition_falls_back_to_unknown() {
        let v = vocab(&["eat"]);
        assert_eq!(wordpiece_word("eating", &v), vec!["[UNK]"]);
    }

    #[test]
    fn overlong_word_is_unknown() {
        let v = vocab(&["a", "##a"]);
        assert_eq!(wordpiece_word(&"a".repeat(100), &v).len(), 100);
        assert_eq!(wordpiece_word(&"a".repeat(101), &v), vec!["[UNK]"]);
    }

    #[test]
    fn spans_for_simple_cases() {
        let v = vocab(&["tiger", "eat", "##ing"]);
        assert_eq!(word_spans(&wordpiece_tokenize("tiger", &v)), vec![0..1]);
        assert_eq!(word_spans(&wordpiece_tokenize("eating", &v)), vec![0..2]);
    }

    #[test]
    fn punctuation_is_split_off() {
        assert_eq!(
            pre_tokenize("A man, riding a bike.  \"Wow\"!"),
            vec!["A", "man", ",", "riding", "a", "bike", ".", "\"", "Wow", "\"", "!"]
        );
        assert_eq!(pre_tokenize("don't"), vec!["don", "'", "t"]);
        assert!(pre_tokenize("   ").is_empty());
    }

    #[test]
    fn check_detects_broken_spans() {
        let mut ts = tokenize_words(&["a", "b"], &vocab(&["a", "b"]));
        ts.spans[1] = 2..3;
        assert!(ts.check().is_err());
    }
}
