use std::collections::{HashMap, HashSet};
use std::path::Path;

use super::read_to_string;
use crate::{Error, Result};

const BUILTIN_STOPWORDS: &str = include_str!("../../data/stopwords.txt");
const BUILTIN_PUNCTUATION: &str = include_str!("../../data/punctuation.txt");

fn resource_error(name: &str, message: impl Into<String>) -> Error {
    Error::Resource {
        name: name.to_string(),
        message: message.into(),
    }
}

fn term_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

/// Object, attribute and relationship vocabularies. A term may appear in
/// more than one list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LexiconSet {
    pub objects: HashSet<String>,
    pub attributes: HashSet<String>,
    pub relationships: HashSet<String>,
}

impl LexiconSet {
    pub fn from_files(objects: &Path, attributes: &Path, relationships: &Path) -> Result<Self> {
        Ok(Self {
            objects: term_list(&read_to_string(objects)?),
            attributes: term_list(&read_to_string(attributes)?),
            relationships: term_list(&read_to_string(relationships)?),
        })
    }

    pub fn from_terms<'a>(
        objects: impl IntoIterator<Item = &'a str>,
        attributes: impl IntoIterator<Item = &'a str>,
        relationships: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let norm = |terms: &mut dyn Iterator<Item = &'a str>| -> HashSet<String> {
            terms
                .map(|t| t.trim().to_lowercase())
                .filter(|t| !t.is_empty())
                .collect()
        };
        Self {
            objects: norm(&mut objects.into_iter()),
            attributes: norm(&mut attributes.into_iter()),
            relationships: norm(&mut relationships.into_iter()),
        }
    }
}

/// Lemma concreteness ratings on the 1 to 5 scale.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConcretenessTable {
    scores: HashMap<String, f64>,
}

impl ConcretenessTable {
    pub const MIN_SCORE: f64 = 1.0;
    pub const MAX_SCORE: f64 = 5.0;

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?, &path.display().to_string())
    }

    /// Parses `lemma<TAB>score` lines. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut scores = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (lemma, score) = match (cols.next(), cols.next(), cols.next()) {
                (Some(l), Some(s), None) => (l.trim().to_lowercase(), s.trim()),
                _ => {
                    return Err(resource_error(
                        name,
                        format!("line {line_no}: expected two tab-separated columns"),
                    ))
                }
            };
            let score: f64 = score
                .parse()
                .map_err(|_| resource_error(name, format!("line {line_no}: bad score `{score}`")))?;
            if lemma.is_empty() {
                return Err(resource_error(name, format!("line {line_no}: empty lemma")));
            }
            Self::check_score(score).map_err(|m| resource_error(name, format!("line {line_no}: {m}")))?;
            if scores.insert(lemma.clone(), score).is_some() {
                return Err(Error::Duplicate {
                    what: "concreteness lemma",
                    key: lemma,
                });
            }
        }
        Ok(Self { scores })
    }

    pub fn from_entries<'a>(entries: impl IntoIterator<Item = (&'a str, f64)>) -> Result<Self> {
        let mut scores = HashMap::new();
        for (lemma, score) in entries {
            Self::check_score(score).map_err(|m| resource_error("concreteness", m))?;
            scores.insert(lemma.to_lowercase(), score);
        }
        Ok(Self { scores })
    }

    fn check_score(score: f64) -> std::result::Result<(), String> {
        if (Self::MIN_SCORE..=Self::MAX_SCORE).contains(&score) {
            Ok(())
        } else {
            Err(format!("score {score} outside [1, 5]"))
        }
    }

    pub fn get(&self, lemma: &str) -> Option<f64> {
        self.scores.get(lemma).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabOptions {
    pub unknown_token: String,
    pub mask_token: String,
    pub continuation_prefix: String,
    pub max_input_chars_per_word: usize,
}

impl Default for VocabOptions {
    fn default() -> Self {
        Self {
            unknown_token: "[UNK]".into(),
            mask_token: "[MASK]".into(),
            continuation_prefix: "##".into(),
            max_input_chars_per_word: 100,
        }
    }
}

/// Ordered WordPiece vocabulary.
#[derive(Debug, Clone)]
pub struct VocabTable {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    options: VocabOptions,
    /// Ids eligible as random replacements: everything except bracketed
    /// special tokens such as `[CLS]` or `[unused0]`.
    replacement_ids: Vec<u32>,
}

impl VocabTable {
    pub fn new(tokens: Vec<String>, options: VocabOptions) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, token) in tokens.iter().enumerate() {
            if index.insert(token.clone(), id as u32).is_some() {
                return Err(Error::Duplicate {
                    what: "vocabulary token",
                    key: token.clone(),
                });
            }
        }
        for (role, symbol) in [("mask", &options.mask_token), ("unknown", &options.unknown_token)] {
            if !index.contains_key(symbol) {
                return Err(resource_error("vocabulary", format!("missing {role} token `{symbol}`")));
            }
        }
        if options.continuation_prefix.is_empty() {
            return Err(resource_error("vocabulary", "empty continuation prefix"));
        }
        let mut replacement_ids: Vec<u32> = tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| !(t.starts_with('[') && t.ends_with(']')))
            .map(|(id, _)| id as u32)
            .collect();
        if replacement_ids.is_empty() {
            replacement_ids = (0..tokens.len() as u32).collect();
        }
        Ok(Self {
            tokens,
            index,
            options,
            replacement_ids,
        })
    }

    pub fn from_file(path: &Path, options: VocabOptions) -> Result<Self> {
        let text = read_to_string(path)?;
        Self::new(
            text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect(),
            options,
        )
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn replacement_ids(&self) -> &[u32] {
        &self.replacement_ids
    }

    pub fn mask_token(&self) -> &str {
        &self.options.mask_token
    }

    pub fn unknown_token(&self) -> &str {
        &self.options.unknown_token
    }

    pub fn continuation_prefix(&self) -> &str {
        &self.options.continuation_prefix
    }

    pub fn max_input_chars_per_word(&self) -> usize {
        self.options.max_input_chars_per_word
    }
}

/// Frozen stop-word list plus the punctuation character set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordSet {
    words: HashSet<String>,
    punctuation: HashSet<char>,
}

impl StopwordSet {
    pub fn new(words: HashSet<String>, punctuation: HashSet<char>) -> Self {
        Self { words, punctuation }
    }

    /// The bundled union of the nltk and gensim English lists with ASCII and
    /// common typographic punctuation.
    pub fn builtin() -> Self {
        Self::new(term_list(BUILTIN_STOPWORDS), punctuation_chars(BUILTIN_PUNCTUATION))
    }

    /// Loads either file, using the bundled data for whichever is absent.
    pub fn from_files(stopwords: Option<&Path>, punctuation: Option<&Path>) -> Result<Self> {
        let words = match stopwords {
            Some(p) => term_list(&read_to_string(p)?),
            None => term_list(BUILTIN_STOPWORDS),
        };
        let punctuation = match punctuation {
            Some(p) => punctuation_chars(&read_to_string(p)?),
            None => punctuation_chars(BUILTIN_PUNCTUATION),
        };
        Ok(Self::new(words, punctuation))
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn is_punct(&self, word: &str) -> bool {
        !word.is_empty() && word.chars().all(|c| self.punctuation.contains(&c))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

fn punctuation_chars(text: &str) -> HashSet<char> {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concreteness_line_parses() {
        let table = ConcretenessTable::parse("tiger\t5.0\n", "c").unwrap();
        assert_eq!(table.get("tiger"), Some(5.0));
    }

    #[test]
    fn concreteness_out_of_range_is_rejected() {
        let err = ConcretenessTable::parse("x\t7.2\n", "c").unwrap_err();
        assert!(matches!(err, Error::Resource { .. }), "{err}");
        assert!(ConcretenessTable::parse("x\t0.99\n", "c").is_err());
        assert!(ConcretenessTable::parse("x\tfive\n", "c").is_err());
        assert!(ConcretenessTable::parse("x\n", "c").is_err());
    }

    #[test]
    fn concreteness_bounds_are_inclusive() {
        let table = ConcretenessTable::parse("# lemma\tscore\na\t1.0\nb\t5\n", "c").unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.get("b"), Some(5.0));
    }

    #[test]
    fn vocab_requires_special_tokens() {
        let toks = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert!(VocabTable::new(toks(&["[UNK]", "a"]), VocabOptions::default()).is_err());
        assert!(VocabTable::new(toks(&["[MASK]", "a"]), VocabOptions::default()).is_err());
        let err = VocabTable::new(toks(&["[UNK]", "[MASK]", "a", "a"]), VocabOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Duplicate { .. }));
        let vocab = VocabTable::new(toks(&["[PAD]", "[UNK]", "[MASK]", "a", "##b"]), VocabOptions::default()).unwrap();
        assert_eq!(vocab.id("##b"), Some(4));
        assert_eq!(vocab.replacement_ids(), &[3, 4]);
    }

    #[test]
    fn builtin_stopwords() {
        let stops = StopwordSet::builtin();
        assert!(stops.is_stopword("the"));
        assert!(stops.is_stopword("The"));
        assert!(!stops.is_stopword("tiger"));
        assert!(stops.is_punct("."));
        assert!(stops.is_punct("?!"));
        assert!(!stops.is_punct("a."));
        assert!(!stops.is_punct(""));
        assert_eq!(stops.len(), 390);
    }

    #[test]
    fn lexicon_terms_are_lowercased() {
        let lex = LexiconSet::from_terms(["Tiger", "wash cloth"], ["orange"], ["eating"]);
        assert!(lex.objects.contains("tiger"));
        assert!(lex.objects.contains("wash cloth"));
    }
}
