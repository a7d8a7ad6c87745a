//! Lexicon-plus-suffix part-of-speech tagger over a five-tag set.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const BUILTIN_LEXICON: &str = include_str!("../../data/pos_lexicon.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adp,
    Other,
}

impl PosTag {
    /// Maps an external tag label onto the five-tag set. Labels other than
    /// NOUN, VERB, ADJ and ADP (including PROPN, DET, AUX, ...) become OTHER.
    pub fn from_label(label: &str) -> Self {
        match label.trim().to_ascii_uppercase().as_str() {
            "NOUN" => PosTag::Noun,
            "VERB" => PosTag::Verb,
            "ADJ" => PosTag::Adj,
            "ADP" => PosTag::Adp,
            _ => PosTag::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adp => "ADP",
            PosTag::Other => "OTHER",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "NOUN" => Ok(PosTag::Noun),
            "VERB" => Ok(PosTag::Verb),
            "ADJ" => Ok(PosTag::Adj),
            "ADP" => Ok(PosTag::Adp),
            "OTHER" => Ok(PosTag::Other),
            other => Err(format!("unknown tag `{other}`")),
        }
    }
}

const VERB_SUFFIXES: [&str; 2] = ["ing", "ed"];
const ADJ_SUFFIXES: [&str; 3] = ["ous", "ful", "ish"];

#[derive(Debug, Clone, Default)]
pub struct Tagger {
    lexicon: HashMap<String, PosTag>,
}

impl Tagger {
    pub fn new(lexicon: HashMap<String, PosTag>) -> Self {
        Self { lexicon }
    }

    /// Tagger backed by the bundled most-frequent-tag lexicon.
    pub fn builtin() -> Self {
        Self::parse_lexicon(BUILTIN_LEXICON).expect("bundled POS lexicon is valid")
    }

    /// Parses `word<TAB>TAG` lines; `#` starts a comment line.
    pub fn parse_lexicon(text: &str) -> Result<Self> {
        let mut lexicon = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed = line
                .split_once('\t')
                .ok_or_else(|| "expected `word<TAB>TAG`".to_string())
                .and_then(|(w, t)| Ok((w.trim().to_lowercase(), t.trim().parse::<PosTag>()?)));
            let (word, tag) = parsed.map_err(|message| Error::Resource {
                name: "pos lexicon".into(),
                message: format!("line {}: {message}", i + 1),
            })?;
            lexicon.entry(word).or_insert(tag);
        }
        Ok(Self { lexicon })
    }

    pub fn tag_word(&self, word: &str) -> PosTag {
        let lowered = word.to_lowercase();
        if let Some(&tag) = self.lexicon.get(&lowered) {
            return tag;
        }
        if !lowered.chars().any(char::is_alphabetic) {
            return PosTag::Other;
        }
        let has_suffix = |suffix: &str| lowered.ends_with(suffix) && lowered.chars().count() >= suffix.len() + 2;
        if VERB_SUFFIXES.iter().any(|s| has_suffix(s)) {
            PosTag::Verb
        } else if ADJ_SUFFIXES.iter().any(|s| has_suffix(s)) {
            PosTag::Adj
        } else {
            PosTag::Noun
        }
    }

    pub fn tag<S: AsRef<str>>(&self, words: &[S]) -> Vec<PosTag> {
        words.iter().map(|w| self.tag_word(w.as_ref())).collect()
    }
}

/// Tags `words`, passing externally supplied labels through when present.
pub fn pos_tag<S: AsRef<str>>(words: &[S], supplied: Option<&[String]>, tagger: &Tagger) -> Result<Vec<PosTag>> {
    match supplied {
        Some(labels) if labels.len() != words.len() => Err(Error::Config(format!(
            "{} pos tags supplied for {} words",
            labels.len(),
            words.len()
        ))),
        Some(labels) => Ok(labels.iter().map(|l| PosTag::from_label(l)).collect()),
        None => Ok(tagger.tag(words)),
    }
}
