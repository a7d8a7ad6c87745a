//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vlmask::annotate::{Annotator, SentenceAnnotation, Tagger};
use vlmask::corpus::{CaptionRecord, ConcretenessTable, LexiconSet, SceneGraph, StopwordSet, VocabOptions, VocabTable};
use vlmask::tokenize::{tokenize_words, TokenizedSentence};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn vocab() -> VocabTable {
    VocabTable::from_file(&fixture("vocab.txt"), VocabOptions::default()).expect("fixture vocab")
}

/// Fixture vocabulary, lexicons and concreteness table plus the bundled
/// stop-word list and tagger.
pub struct Kit {
    pub vocab: VocabTable,
    pub lexicons: LexiconSet,
    pub stopwords: StopwordSet,
    pub concreteness: ConcretenessTable,
    pub tagger: Tagger,
}

impl Kit {
    pub fn new() -> Self {
        Self::with_lexicons("objects.txt", "attributes.txt", "relationships.txt")
    }

    pub fn with_lexicons(objects: &str, attributes: &str, relationships: &str) -> Self {
        Kit {
            vocab: vocab(),
            lexicons: LexiconSet::from_files(&fixture(objects), &fixture(attributes), &fixture(relationships))
                .expect("fixture lexicons"),
            stopwords: StopwordSet::builtin(),
            concreteness: ConcretenessTable::from_file(&fixture("concreteness.tsv")).expect("fixture concreteness"),
            tagger: Tagger::builtin(),
        }
    }

    pub fn annotator(&self) -> Annotator<'_> {
        Annotator {
            lexicons: &self.lexicons,
            stopwords: &self.stopwords,
            concreteness: &self.concreteness,
            tagger: &self.tagger,
        }
    }

    pub fn record(id: &str, words: &[&str]) -> CaptionRecord {
        CaptionRecord {
            id: id.to_string(),
            image_id: format!("img-{id}"),
            text: words.join(" "),
            words: Some(words.iter().map(|w| w.to_string()).collect()),
            pos: None,
        }
    }

    /// Tokenizes and annotates pre-split words.
    pub fn sentence(
        &self,
        id: &str,
        words: &[&str],
        graph: Option<&SceneGraph>,
    ) -> (TokenizedSentence, SentenceAnnotation) {
        let ann = self
            .annotator()
            .annotate(&Self::record(id, words), graph)
            .expect("annotate");
        let ts = tokenize_words(&ann.words, &self.vocab);
        (ts, ann)
    }
}

/// Word pool for random sentences: function words, punctuation, lexicon
/// words, words that split into several pieces and words outside every
/// resource.
pub const WORD_POOL: &[&str] = &[
    "a",
    "the",
    "of",
    "on",
    "with",
    "and",
    "is",
    "in",
    "near",
    ".",
    ",",
    "!",
    "man",
    "woman",
    "dog",
    "cat",
    "table",
    "pizza",
    "shirt",
    "bus",
    "street",
    "kite",
    "sky",
    "beach",
    "horse",
    "red",
    "blue",
    "white",
    "wooden",
    "tall",
    "small",
    "riding",
    "holding",
    "eating",
    "sitting",
    "flying",
    "skateboarders",
    "snowboarder",
    "surfboards",
    "xylophone",
    "bathroom",
    "motorcycles",
    "crowded",
    "watching",
    "parade",
    "Kites",
    "TALL",
    "buildings",
];

/// Random sentence lengths in `min..=max` drawn from [`WORD_POOL`]; every
/// other sentence gets a scene graph built from a random subset of its
/// words.
pub fn random_corpus(
    kit: &Kit,
    seed: u64,
    n: usize,
    min: usize,
    max: usize,
) -> Vec<(TokenizedSentence, SentenceAnnotation)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.random_range(min..=max);
            let words: Vec<&str> = (0..len).map(|_| *WORD_POOL.choose(&mut rng).unwrap()).collect();
            let graph = (i % 2 == 0).then(|| {
                let subset: Vec<&str> = words.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
                SceneGraph::new("g", &subset, &subset, &subset)
            });
            kit.sentence(&format!("r{seed}-{i}"), &words, graph.as_ref())
        })
        .collect()
}
