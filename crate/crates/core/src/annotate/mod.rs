//! Per-word annotation: part of speech, stop-word status, semantic class,
//! concreteness and scene-graph grounding.
//!
//! Semantic classes are predicted from the words alone (tag plus lexicon
//! membership). Grounding is computed independently from the image's scene
//! graph by exact, case-insensitive string match, so the two can be scored
//! against each other with [`evaluate_detection`].

mod detect;
mod tagger;

use serde::{Deserialize, Serialize};

pub use detect::{evaluate_detection, ClassDetection, DetectionAccumulator, DetectionReport, SemanticClass};
pub use tagger::{pos_tag, PosTag, Tagger};

use crate::corpus::{CaptionRecord, ConcretenessTable, JsonlRecord, LexiconSet, SceneGraph, StopwordSet};
use crate::tokenize::pre_tokenize;
use crate::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StopFlags {
    pub is_stopword: bool,
    pub is_punct: bool,
    pub is_content: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SemanticFlags {
    pub is_object: bool,
    pub is_attribute: bool,
    pub is_relationship: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GroundFlags {
    pub object: bool,
    pub attribute: bool,
    pub relationship: bool,
}

/// Annotation of a single word, as a view into a [`SentenceAnnotation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenAnnotation {
    pub pos: PosTag,
    pub stop: StopFlags,
    pub semantic: SemanticFlags,
    pub concreteness: Option<f64>,
    /// `None` when the sentence's image has no scene graph.
    pub grounded: Option<GroundFlags>,
}

/// One line of `annotations.jsonl`: per-word flag arrays for a sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceAnnotation {
    pub id: String,
    pub image_id: String,
    pub words: Vec<String>,
    pub pos: Vec<PosTag>,
    pub is_stopword: Vec<bool>,
    pub is_punct: Vec<bool>,
    pub is_content: Vec<bool>,
    pub is_object: Vec<bool>,
    pub is_attribute: Vec<bool>,
    pub is_relationship: Vec<bool>,
    pub concreteness: Vec<Option<f64>>,
    pub has_scene_graph: bool,
    pub grounded_object: Option<Vec<bool>>,
    pub grounded_attribute: Option<Vec<bool>>,
    pub grounded_relationship: Option<Vec<bool>>,
}

impl SentenceAnnotation {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, i: usize) -> TokenAnnotation {
        let grounded = match (
            &self.grounded_object,
            &self.grounded_attribute,
            &self.grounded_relationship,
        ) {
            (Some(o), Some(a), Some(r)) => Some(GroundFlags {
                object: o[i],
                attribute: a[i],
                relationship: r[i],
            }),
            _ => None,
        };
        TokenAnnotation {
            pos: self.pos[i],
            stop: StopFlags {
                is_stopword: self.is_stopword[i],
                is_punct: self.is_punct[i],
                is_content: self.is_content[i],
            },
            semantic: SemanticFlags {
                is_object: self.is_object[i],
                is_attribute: self.is_attribute[i],
                is_relationship: self.is_relationship[i],
            },
            concreteness: self.concreteness[i],
            grounded,
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        let n = self.words.len();
        let lengths = [
            ("pos", self.pos.len()),
            ("is_stopword", self.is_stopword.len()),
            ("is_punct", self.is_punct.len()),
            ("is_content", self.is_content.len()),
            ("is_object", self.is_object.len()),
            ("is_attribute", self.is_attribute.len()),
            ("is_relationship", self.is_relationship.len()),
            ("concreteness", self.concreteness.len()),
        ];
        for (name, len) in lengths {
            if len != n {
                return Err(format!("`{name}` has {len} entries for {n} words"));
            }
        }
        let grounded = [
            &self.grounded_object,
            &self.grounded_attribute,
            &self.grounded_relationship,
        ];
        for flags in grounded {
            match flags {
                Some(_) if !self.has_scene_graph => return Err("grounded flags without scene graph".into()),
                Some(f) if f.len() != n => {
                    return Err(format!("grounded flags have {} entries for {n} words", f.len()))
                }
                None if self.has_scene_graph => return Err("missing grounded flags".into()),
                _ => {}
            }
        }
        for i in 0..n {
            if self.is_content[i] == (self.is_stopword[i] || self.is_punct[i]) {
                return Err(format!("word {i}: is_content inconsistent with stop-word flags"));
            }
        }
        Ok(())
    }
}

impl JsonlRecord for SentenceAnnotation {
    fn validate(&mut self) -> std::result::Result<(), String> {
        self.check().map_err(|m| format!("annotation `{}`: {m}", self.id))
    }
}

pub fn mark_stopwords<S: AsRef<str>>(words: &[S], stops: &StopwordSet) -> Vec<StopFlags> {
    words
        .iter()
        .map(|w| {
            let w = w.as_ref();
            let is_stopword = stops.is_stopword(w);
            let is_punct = stops.is_punct(w);
            StopFlags {
                is_stopword,
                is_punct,
                is_content: !(is_stopword || is_punct),
            }
        })
        .collect()
}

/// Object: NOUN in the object lexicon. Attribute: ADJ in the attribute
/// lexicon. Relationship: ADP or VERB in the relationship lexicon.
pub fn classify_semantic<S: AsRef<str>>(words: &[S], tags: &[PosTag], lexicons: &LexiconSet) -> Vec<SemanticFlags> {
    debug_assert_eq!(words.len(), tags.len());
    words
        .iter()
        .zip(tags)
        .map(|(w, &tag)| {
            let w = w.as_ref().to_lowercase();
            SemanticFlags {
                is_object: tag == PosTag::Noun && lexicons.objects.contains(&w),
                is_attribute: tag == PosTag::Adj && lexicons.attributes.contains(&w),
                is_relationship: matches!(tag, PosTag::Adp | PosTag::Verb) && lexicons.relationships.contains(&w),
            }
        })
        .collect()
}

const CONCRETENESS_SUFFIXES: [&str; 4] = ["es", "s", "ing", "ed"];

/// Exact lemma lookup, then the word with a plural or verbal suffix
/// stripped (`-es`, `-s`, `-ing`, `-ed`, first hit wins).
pub fn concreteness_of(word: &str, table: &ConcretenessTable) -> Option<f64> {
    let lowered = word.to_lowercase();
    table.get(&lowered).or_else(|| {
        CONCRETENESS_SUFFIXES.iter().find_map(|suffix| {
            lowered
                .strip_suffix(suffix)
                .filter(|stem| !stem.is_empty())
                .and_then(|stem| table.get(stem))
        })
    })
}

pub fn score_concreteness<S: AsRef<str>>(words: &[S], table: &ConcretenessTable) -> Vec<Option<f64>> {
    words.iter().map(|w| concreteness_of(w.as_ref(), table)).collect()
}

/// Exact match of each lowercased word against the scene-graph names.
/// Multi-word names never match a single word.
pub fn ground<S: AsRef<str>>(words: &[S], graph: &SceneGraph) -> Vec<GroundFlags> {
    words
        .iter()
        .map(|w| {
            let w = w.as_ref().to_lowercase();
            GroundFlags {
                object: graph.objects.contains(&w),
                attribute: graph.attributes.contains(&w),
                relationship: graph.relationships.contains(&w),
            }
        })
        .collect()
}

/// Bundles the read-only resources needed to annotate sentences.
#[derive(Debug, Clone, Copy)]
pub struct Annotator<'a> {
    pub lexicons: &'a LexiconSet,
    pub stopwords: &'a StopwordSet,
    pub concreteness: &'a ConcretenessTable,
    pub tagger: &'a Tagger,
}

impl<'a> Annotator<'a> {
    /// Words come from the record's pre-split list when present, otherwise
    /// from [`pre_tokenize`].
    pub fn annotate(&self, record: &CaptionRecord, graph: Option<&SceneGraph>) -> Result<SentenceAnnotation> {
        let words = match &record.words {
            Some(words) => words.clone(),
            None => pre_tokenize(&record.text),
        };
        let pos = pos_tag(&words, record.pos.as_deref(), self.tagger)
            .map_err(|e| crate::Error::sentence(&record.id, e.to_string()))?;
        let stop = mark_stopwords(&words, self.stopwords);
        let semantic = classify_semantic(&words, &pos, self.lexicons);
        let concreteness = score_concreteness(&words, self.concreteness);
        let grounded = graph.map(|g| ground(&words, g));

        let pick = |f: fn(&GroundFlags) -> bool| grounded.as_ref().map(|g| g.iter().map(f).collect());
        Ok(SentenceAnnotation {
            id: record.id.clone(),
            image_id: record.image_id.clone(),
            pos,
            is_stopword: stop.iter().map(|s| s.is_stopword).collect(),
            is_punct: stop.iter().map(|s| s.is_punct).collect(),
            is_content: stop.iter().map(|s| s.is_content).collect(),
            is_object: semantic.iter().map(|s| s.is_object).collect(),
            is_attribute: semantic.iter().map(|s| s.is_attribute).collect(),
            is_relationship: semantic.iter().map(|s| s.is_relationship).collect(),
            concreteness,
            has_scene_graph: graph.is_some(),
            grounded_object: pick(|g| g.object),
            grounded_attribute: pick(|g| g.attribute),
            grounded_relationship: pick(|g| g.relationship),
            words,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lexicons() -> LexiconSet {
        LexiconSet::from_terms(
            ["rabbit", "carrot", "tiger", "woman", "man"],
            ["orange", "red"],
            ["eating", "on", "holding"],
        )
    }

    #[test]
    fn rabbit_sentence_classes() {
        let words = pre_tokenize("The rabbit is eating the orange carrot");
        let tags = Tagger::builtin().tag(&words);
        let flags = classify_semantic(&words, &tags, &lexicons());
        let pick = |f: fn(&SemanticFlags) -> bool| -> Vec<&str> {
            words
                .iter()
                .zip(&flags)
                .filter(|(_, s)| f(s))
                .map(|(w, _)| w.as_str())
                .collect()
        };
        assert_eq!(pick(|s| s.is_object), vec!["rabbit", "carrot"]);
        assert_eq!(pick(|s| s.is_attribute), vec!["orange"]);
        assert_eq!(pick(|s| s.is_relationship), vec!["eating"]);
    }

    #[test]
    fn stopword_only_sentence_has_no_classes() {
        let words = pre_tokenize("the of and is");
        let tags = Tagger::builtin().tag(&words);
        let flags = classify_semantic(&words, &tags, &lexicons());
        assert!(flags.iter().all(|f| *f == SemanticFlags::default()));
    }

    #[test]
    fn noun_outside_lexicon_is_not_object() {
        let flags = classify_semantic(&["zebra"], &[PosTag::Noun], &lexicons());
        assert!(!flags[0].is_object);
        let flags = classify_semantic(&["tiger"], &[PosTag::Verb], &lexicons());
        assert!(!flags[0].is_object);
    }

    #[test]
    fn stopword_and_punct_flags() {
        let flags = mark_stopwords(&["the", ".", "tiger"], &StopwordSet::builtin());
        assert!(flags[0].is_stopword && !flags[0].is_content);
        assert!(flags[1].is_punct && !flags[1].is_content);
        assert!(flags[2].is_content);
    }

    #[test]
    fn concreteness_lookup_and_suffix_fallback() {
        let table =
            ConcretenessTable::from_entries([("tiger", 5.0), ("box", 4.9), ("horse", 5.0), ("eat", 4.4)]).unwrap();
        assert_eq!(concreteness_of("tiger", &table), Some(5.0));
        assert_eq!(concreteness_of("Tigers", &table), Some(5.0));
        assert_eq!(concreteness_of("boxes", &table), Some(4.9));
        assert_eq!(concreteness_of("horses", &table), Some(5.0));
        assert_eq!(concreteness_of("eating", &table), Some(4.4));
        assert_eq!(concreteness_of("hunger", &table), None);
        assert_eq!(concreteness_of("s", &table), None);
    }

    #[test]
    fn grounding_is_exact() {
        let graph = SceneGraph::new("i", &["woman", "tiger", "wash cloth"], &[], &[]);
        let g = ground(&["women", "Tiger", "wash", "cloth"], &graph);
        assert_eq!(
            g.iter().map(|f| f.object).collect::<Vec<_>>(),
            vec![false, true, false, false]
        );

        let empty = SceneGraph::new("i", &[], &[], &[]);
        assert!(ground(&["tiger", "the"], &empty)
            .iter()
            .all(|f| *f == GroundFlags::default()));
    }

    #[test]
    fn annotate_without_scene_graph_leaves_grounding_absent() {
        let lex = lexicons();
        let stops = StopwordSet::builtin();
        let table = ConcretenessTable::from_entries([("tiger", 5.0)]).unwrap();
        let tagger = Tagger::builtin();
        let annotator = Annotator {
            lexicons: &lex,
            stopwords: &stops,
            concreteness: &table,
            tagger: &tagger,
        };
        let record = CaptionRecord {
            id: "s1".into(),
            image_id: "i1".into(),
            text: "A tiger is eating.".into(),
            words: None,
            pos: None,
        };
        let ann = annotator.annotate(&record, None).unwrap();
        assert_eq!(ann.words, vec!["A", "tiger", "is", "eating", "."]);
        assert!(!ann.has_scene_graph);
        assert!(ann.grounded_object.is_none());
        assert!(ann.word(1).grounded.is_none());
        assert_eq!(ann.concreteness[1], Some(5.0));
        assert!(ann.check().is_ok());

        let graph = SceneGraph::new("i1", &["tiger"], &[], &["eating"]);
        let ann = annotator.annotate(&record, Some(&graph)).unwrap();
        let w = ann.word(1);
        assert_eq!(
            w.grounded,
            Some(GroundFlags {
                object: true,
                attribute: false,
                relationship: false
            })
        );
        assert!(ann.word(3).grounded.unwrap().relationship);
    }

    #[test]
    fn annotate_uses_supplied_words_and_tags() {
        let lex = lexicons();
        let stops = StopwordSet::builtin();
        let table = ConcretenessTable::default();
        let tagger = Tagger::builtin();
        let annotator = Annotator {
            lexicons: &lex,
            stopwords: &stops,
            concreteness: &table,
            tagger: &tagger,
        };
        let record = CaptionRecord {
            id: "s1".into(),
            image_id: "i1".into(),
            text: "tiger on rock".into(),
            words: Some(vec!["tiger".into(), "on".into(), "rock".into()]),
            pos: Some(vec!["VERB".into(), "ADP".into(), "NOUN".into()]),
        };
        let ann = annotator.annotate(&record, None).unwrap();
        assert_eq!(ann.pos, vec![PosTag::Verb, PosTag::Adp, PosTag::Noun]);
        assert!(!ann.is_object[0]);
        assert!(ann.is_relationship[1]);
    }
}
