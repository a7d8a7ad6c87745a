//! Loading and validation of every external input: caption corpora, scene
//! graphs, class lexicons, the concreteness table, the subword vocabulary
//! and the stop-word list.
//!
//! All loaded structures are immutable once built and can be shared across
//! worker threads by reference.

mod jsonl;
mod records;
mod resources;

use std::path::PathBuf;

pub use jsonl::{ErrorPolicy, JsonlReader, JsonlRecord};
pub use records::{load_captions, load_scene_graphs, CaptionReader, CaptionRecord, SceneGraph, SceneGraphs};
pub use resources::{ConcretenessTable, LexiconSet, StopwordSet, VocabOptions, VocabTable};

use crate::Result;

/// File locations for [`load_resources`]. Stop-word and punctuation files
/// fall back to the lists bundled with the crate.
#[derive(Debug, Clone, Default)]
pub struct ResourcePaths {
    pub objects: PathBuf,
    pub attributes: PathBuf,
    pub relationships: PathBuf,
    pub concreteness: PathBuf,
    pub vocab: PathBuf,
    pub stopwords: Option<PathBuf>,
    pub punctuation: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Resources {
    pub lexicons: LexiconSet,
    pub concreteness: ConcretenessTable,
    pub vocab: VocabTable,
    pub stopwords: StopwordSet,
}

pub fn load_resources(paths: &ResourcePaths, vocab_options: VocabOptions) -> Result<Resources> {
    let lexicons = LexiconSet::from_files(&paths.objects, &paths.attributes, &paths.relationships)?;
    let concreteness = ConcretenessTable::from_file(&paths.concreteness)?;
    let vocab = VocabTable::from_file(&paths.vocab, vocab_options)?;
    let stopwords = match (&paths.stopwords, &paths.punctuation) {
        (None, None) => StopwordSet::builtin(),
        (words, punct) => StopwordSet::from_files(words.as_deref(), punct.as_deref())?,
    };
    Ok(Resources {
        lexicons,
        concreteness,
        vocab,
        stopwords,
    })
}

pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))
}
