//! Scoring the lexicon heuristics against scene-graph grounding.

use serde::{Deserialize, Serialize};

use super::SentenceAnnotation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticClass {
    Object,
    Attribute,
    Relationship,
}

impl SemanticClass {
    pub const ALL: [SemanticClass; 3] = [
        SemanticClass::Object,
        SemanticClass::Attribute,
        SemanticClass::Relationship,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SemanticClass::Object => "objects",
            SemanticClass::Attribute => "attributes",
            SemanticClass::Relationship => "relationships",
        }
    }

    fn predicted(self, ann: &SentenceAnnotation) -> &[bool] {
        match self {
            SemanticClass::Object => &ann.is_object,
            SemanticClass::Attribute => &ann.is_attribute,
            SemanticClass::Relationship => &ann.is_relationship,
        }
    }

    fn grounded(self, ann: &SentenceAnnotation) -> Option<&[bool]> {
        match self {
            SemanticClass::Object => ann.grounded_object.as_deref(),
            SemanticClass::Attribute => ann.grounded_attribute.as_deref(),
            SemanticClass::Relationship => ann.grounded_relationship.as_deref(),
        }
    }
}

/// Word-level confusion counts for one class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub words: u64,
    pub true_positive: u64,
    pub predicted: u64,
    pub grounded: u64,
}

impl ClassCounts {
    fn add(&mut self, predicted: &[bool], grounded: &[bool]) {
        for (&p, &g) in predicted.iter().zip(grounded) {
            self.words += 1;
            self.predicted += p as u64;
            self.grounded += g as u64;
            self.true_positive += (p && g) as u64;
        }
    }

    fn merge(&mut self, other: &ClassCounts) {
        self.words += other.words;
        self.true_positive += other.true_positive;
        self.predicted += other.predicted;
        self.grounded += other.grounded;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDetection {
    pub class: SemanticClass,
    pub counts: ClassCounts,
    /// True positives over predicted positives; absent with no predictions.
    pub precision: Option<f64>,
    /// True positives over grounded positives; absent with nothing grounded.
    pub recall: Option<f64>,
    /// Word-level accuracy including true negatives.
    pub token_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub sentences_evaluated: u64,
    pub sentences_without_scene_graph: u64,
    pub classes: Vec<ClassDetection>,
}

/// Streaming accumulator; shards merge by summing counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DetectionAccumulator {
    evaluated: u64,
    without_graph: u64,
    counts: [ClassCounts; 3],
}

impl DetectionAccumulator {
    pub fn add(&mut self, ann: &SentenceAnnotation) {
        if !ann.has_scene_graph {
            self.without_graph += 1;
            return;
        }
        self.evaluated += 1;
        for (i, class) in SemanticClass::ALL.into_iter().enumerate() {
            if let Some(grounded) = class.grounded(ann) {
                self.counts[i].add(class.predicted(ann), grounded);
            }
        }
    }

    pub fn merge(&mut self, other: &DetectionAccumulator) {
        self.evaluated += other.evaluated;
        self.without_graph += other.without_graph;
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            mine.merge(theirs);
        }
    }

    pub fn finish(&self) -> DetectionReport {
        let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        let classes = SemanticClass::ALL
            .into_iter()
            .zip(self.counts)
            .map(|(class, c)| {
                let true_negative = c.words + c.true_positive - c.predicted - c.grounded;
                ClassDetection {
                    class,
                    counts: c,
                    precision: ratio(c.true_positive, c.predicted),
                    recall: ratio(c.true_positive, c.grounded),
                    token_accuracy: ratio(c.true_positive + true_negative, c.words),
                }
            })
            .collect();
        DetectionReport {
            sentences_evaluated: self.evaluated,
            sentences_without_scene_graph: self.without_graph,
            classes,
        }
    }
}

/// Scores predicted class flags against grounded flags over every sentence
/// that has a scene graph. Sentences without one are counted and skipped.
pub fn evaluate_detection<'a>(annotations: impl IntoIterator<Item = &'a SentenceAnnotation>) -> DetectionReport {
    let mut acc = DetectionAccumulator::default();
    for ann in annotations {
        acc.add(ann);
    }
    acc.finish()
}
