use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::jsonl::{ErrorPolicy, JsonlReader, JsonlRecord};
use crate::{Error, Result};

/// The sentence side of a sentence/image pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub id: String,
    pub image_id: String,
    pub text: String,
    /// Optional pre-split words; when present they replace the built-in
    /// pre-tokenizer so external tags stay aligned.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub words: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Vec<String>>,
}

impl JsonlRecord for CaptionRecord {
    fn validate(&mut self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty `id`".into());
        }
        if self.text.trim().is_empty() {
            return Err(format!("record `{}` has empty `text`", self.id));
        }
        match (&self.words, &self.pos) {
            (None, Some(_)) => Err(format!("record `{}` has `pos` without `words`", self.id)),
            (Some(words), Some(pos)) if words.len() != pos.len() => Err(format!(
                "record `{}`: {} words but {} pos tags",
                self.id,
                words.len(),
                pos.len()
            )),
            (Some(words), _) if words.iter().any(|w| w.trim().is_empty()) => {
                Err(format!("record `{}` has an empty word", self.id))
            }
            _ => Ok(()),
        }
    }
}

/// Caption stream that also rejects ids already seen earlier in the file.
pub struct CaptionReader<R> {
    inner: JsonlReader<R, CaptionRecord>,
    seen: HashSet<String>,
}

impl<R: BufRead> CaptionReader<R> {
    pub fn new(reader: R, source_name: impl Into<String>, policy: ErrorPolicy) -> Self {
        Self {
            inner: JsonlReader::new(reader, source_name, policy),
            seen: HashSet::new(),
        }
    }

    pub fn skipped(&self) -> usize {
        self.inner.skipped()
    }
}

impl<R: BufRead> Iterator for CaptionReader<R> {
    type Item = Result<(usize, CaptionRecord)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (line, record) = match self.inner.next()? {
                Ok(item) => item,
                Err(e) => return Some(Err(e)),
            };
            if self.seen.insert(record.id.clone()) {
                return Some(Ok((line, record)));
            }
            let message = format!("duplicate id `{}`", record.id);
            match self.inner.policy() {
                ErrorPolicy::Strict => return Some(Err(self.inner.record_error(line, message))),
                ErrorPolicy::Skip => self.inner.count_skip(),
            }
        }
    }
}

pub fn load_captions(path: &Path, policy: ErrorPolicy) -> Result<CaptionReader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(CaptionReader::new(
        BufReader::new(file),
        path.display().to_string(),
        policy,
    ))
}

/// Ground-truth object, attribute and relationship names for one image.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub image_id: String,
    #[serde(default)]
    pub objects: BTreeSet<String>,
    #[serde(default)]
    pub attributes: BTreeSet<String>,
    #[serde(default)]
    pub relationships: BTreeSet<String>,
}

fn normalize_names(names: &BTreeSet<String>) -> BTreeSet<String> {
    names
        .iter()
        .map(|n| n.trim().to_lowercase())
        .filter(|n| !n.is_empty())
        .collect()
}

impl SceneGraph {
    pub fn new(image_id: &str, objects: &[&str], attributes: &[&str], relationships: &[&str]) -> Self {
        let collect = |names: &[&str]| -> BTreeSet<String> {
            names
                .iter()
                .map(|n| n.trim().to_lowercase())
                .filter(|n| !n.is_empty())
                .collect()
        };
        Self {
            image_id: image_id.to_string(),
            objects: collect(objects),
            attributes: collect(attributes),
            relationships: collect(relationships),
        }
    }
}

impl JsonlRecord for SceneGraph {
    fn validate(&mut self) -> Result<(), String> {
        if self.image_id.is_empty() {
            return Err("empty `image_id`".into());
        }
        self.objects = normalize_names(&self.objects);
        self.attributes = normalize_names(&self.attributes);
        self.relationships = normalize_names(&self.relationships);
        Ok(())
    }
}

pub type SceneGraphs = HashMap<String, SceneGraph>;

pub fn load_scene_graphs(path: &Path) -> Result<SceneGraphs> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_scene_graphs(BufReader::new(file), &path.display().to_string())
}

pub(crate) fn read_scene_graphs<R: BufRead>(reader: R, source_name: &str) -> Result<SceneGraphs> {
    let mut graphs = SceneGraphs::new();
    for item in JsonlReader::<_, SceneGraph>::new(reader, source_name, ErrorPolicy::Strict) {
        let (_, graph) = item?;
        if graphs.contains_key(&graph.image_id) {
            return Err(Error::Duplicate {
                what: "scene graph image_id",
                key: graph.image_id,
            });
        }
        graphs.insert(graph.image_id.clone(), graph);
    }
    Ok(graphs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn captions(input: &str, policy: ErrorPolicy) -> CaptionReader<&[u8]> {
        CaptionReader::new(input.as_bytes(), "captions.jsonl", policy)
    }

    #[test]
    fn parses_a_caption_line() {
        let line = r#"{"id":"s1","image_id":"i1","text":"A tiger is eating the carrot"}"#;
        let records: Vec<_> = captions(line, ErrorPolicy::Strict).map(|r| r.unwrap().1).collect();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].id, "s1");
        assert_eq!(records[0].image_id, "i1");
        assert_eq!(records[0].text, "A tiger is eating the carrot");
        assert!(records[0].words.is_none());
    }

    #[test]
    fn empty_text_is_rejected() {
        let line = r#"{"id":"s1","image_id":"i1","text":""}"#;
        let err = captions(line, ErrorPolicy::Strict).next().unwrap().unwrap_err();
        assert!(matches!(err, Error::Record { line: 1, .. }), "{err}");
    }

    #[test]
    fn pos_must_align_with_words() {
        let bad = [
            r#"{"id":"s","image_id":"i","text":"a b","pos":["NOUN"]}"#,
            r#"{"id":"s","image_id":"i","text":"a b","words":["a","b"],"pos":["NOUN"]}"#,
        ];
        for line in bad {
            assert!(captions(line, ErrorPolicy::Strict).next().unwrap().is_err());
        }
    }

    #[test]
    fn duplicate_ids_are_record_errors() {
        let input = concat!(
            r#"{"id":"s1","image_id":"i1","text":"one"}"#,
            "\n",
            r#"{"id":"s1","image_id":"i2","text":"two"}"#,
            "\n",
            r#"{"id":"s2","image_id":"i2","text":"three"}"#,
        );
        let strict: Vec<_> = captions(input, ErrorPolicy::Strict).collect();
        assert!(strict[1].is_err());

        let mut lenient = captions(input, ErrorPolicy::Skip);
        let ids: Vec<String> = lenient.by_ref().map(|r| r.unwrap().1.id).collect();
        assert_eq!(ids, vec!["s1", "s2"]);
        assert_eq!(lenient.skipped(), 1);
    }

    #[test]
    fn scene_graph_names_are_normalized() {
        let line = r#"{"image_id":"i1","objects":["Tiger"," carrot "],"attributes":["Orange"],"relationships":[]}"#;
        let graphs = read_scene_graphs(line.as_bytes(), "sg").unwrap();
        let g = &graphs["i1"];
        assert_eq!(g.objects.iter().collect::<Vec<_>>(), vec!["carrot", "tiger"]);
        assert!(g.attributes.contains("orange"));
        assert!(g.relationships.is_empty());
    }

    #[test]
    fn duplicate_scene_graph_is_an_error() {
        let input = "{\"image_id\":\"i1\"}\n{\"image_id\":\"i1\",\"objects\":[\"x\"]}\n";
        let err = read_scene_graphs(input.as_bytes(), "sg").unwrap_err();
        assert!(matches!(err, Error::Duplicate { .. }));
    }
}
