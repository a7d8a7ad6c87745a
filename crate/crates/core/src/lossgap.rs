//! Image-necessity metrics over masked-prediction logs.
//!
//! Each [`PredictionRecord`] holds the loss and top-k predictions for one
//! masked word, once with the image and once without it. LossGap is the
//! difference `loss_without - loss_with`; large values mean the image was
//! needed to recover the word.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotate::SentenceAnnotation;
use crate::corpus::JsonlRecord;
use crate::{Error, Result};

/// One line of `predictions.jsonl`. Both loss sides are required; records
/// missing either are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub word_index: usize,
    pub gold: String,
    pub loss_with: f64,
    pub loss_without: f64,
    pub topk_with: Vec<String>,
    pub topk_without: Vec<String>,
}

impl JsonlRecord for PredictionRecord {
    fn validate(&mut self) -> std::result::Result<(), String> {
        for (name, loss) in [("loss_with", self.loss_with), ("loss_without", self.loss_without)] {
            if !loss.is_finite() || loss < 0.0 {
                return Err(format!(
                    "prediction `{}`: `{name}` must be a non-negative number, got {loss}",
                    self.id
                ));
            }
        }
        if self.topk_with.is_empty() || self.topk_without.is_empty() {
            return Err(format!("prediction `{}`: empty top-k list", self.id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    With,
    Without,
}

impl PredictionRecord {
    pub fn loss(&self, side: Side) -> f64 {
        match side {
            Side::With => self.loss_with,
            Side::Without => self.loss_without,
        }
    }

    pub fn topk(&self, side: Side) -> &[String] {
        match side {
            Side::With => &self.topk_with,
            Side::Without => &self.topk_without,
        }
    }

    /// Whether the gold word is among the first `k` predictions on `side`.
    /// Comparison ignores surrounding whitespace and case.
    pub fn hit_at_k(&self, k: usize, side: Side) -> bool {
        let gold = self.gold.trim().to_lowercase();
        self.topk(side).iter().take(k).any(|p| p.trim().to_lowercase() == gold)
    }
}

pub fn lossgap(rec: &PredictionRecord) -> f64 {
    rec.loss_without - rec.loss_with
}

pub fn accuracy_at_k(records: &[PredictionRecord], k: usize, side: Side) -> Result<f64> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if records.is_empty() {
        return Err(Error::Empty("accuracy_at_k over an empty record set"));
    }
    let hits = records.iter().filter(|r| r.hit_at_k(k, side)).count();
    Ok(hits as f64 / records.len() as f64)
}

/// How per-record losses are turned into one "(exp)" number.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// `exp(mean(loss))`, a perplexity.
    #[default]
    ExpOfMean,
    /// `mean(exp(loss))`.
    MeanOfExp,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp-of-mean" => Ok(Aggregation::ExpOfMean),
            "mean-of-exp" => Ok(Aggregation::MeanOfExp),
            other => Err(Error::Config(format!("unknown aggregation `{other}`"))),
        }
    }
}

pub fn exp_mean_loss(records: &[PredictionRecord], side: Side, aggregation: Aggregation) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("exp_mean_loss over an empty record set"));
    }
    let n = records.len() as f64;
    Ok(match aggregation {
        Aggregation::ExpOfMean => (records.iter().map(|r| r.loss(side)).sum::<f64>() / n).exp(),
        Aggregation::MeanOfExp => records.iter().map(|r| r.loss(side).exp()).sum::<f64>() / n,
    })
}

/// Word classes for grouping predictions. Classes may overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordClass {
    All,
    StopwordPunct,
    Content,
    Object,
    Attribute,
    Relationship,
    GroundedObject,
    NonGroundedObject,
    GroundedAttribute,
    NonGroundedAttribute,
    GroundedRelationship,
    NonGroundedRelationship,
}

impl WordClass {
    pub const ALL: [WordClass; 12] = [
        WordClass::All,
        WordClass::StopwordPunct,
        WordClass::Content,
        WordClass::Object,
        WordClass::Attribute,
        WordClass::Relationship,
        WordClass::GroundedObject,
        WordClass::NonGroundedObject,
        WordClass::GroundedAttribute,
        WordClass::NonGroundedAttribute,
        WordClass::GroundedRelationship,
        WordClass::NonGroundedRelationship,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WordClass::All => "all",
            WordClass::StopwordPunct => "stopword_punct",
            WordClass::Content => "content",
            WordClass::Object => "object",
            WordClass::Attribute => "attribute",
            WordClass::Relationship => "relationship",
            WordClass::GroundedObject => "grounded_object",
            WordClass::NonGroundedObject => "non_grounded_object",
            WordClass::GroundedAttribute => "grounded_attribute",
            WordClass::NonGroundedAttribute => "non_grounded_attribute",
            WordClass::GroundedRelationship => "grounded_relationship",
            WordClass::NonGroundedRelationship => "non_grounded_relationship",
        }
    }

    /// Grounded classes need a scene graph: a word whose sentence has none
    /// belongs to neither the grounded nor the non-grounded variant.
    pub fn contains(self, ann: &SentenceAnnotation, i: usize) -> bool {
        let grounded = |flags: &Option<Vec<bool>>, want: bool| flags.as_ref().is_some_and(|g| g[i] == want);
        match self {
            WordClass::All => true,
            WordClass::StopwordPunct => !ann.is_content[i],
            WordClass::Content => ann.is_content[i],
            WordClass::Object => ann.is_object[i],
            WordClass::Attribute => ann.is_attribute[i],
            WordClass::Relationship => ann.is_relationship[i],
            WordClass::GroundedObject => grounded(&ann.grounded_object, true),
            WordClass::NonGroundedObject => ann.is_object[i] && grounded(&ann.grounded_object, false),
            WordClass::GroundedAttribute => grounded(&ann.grounded_attribute, true),
            WordClass::NonGroundedAttribute => ann.is_attribute[i] && grounded(&ann.grounded_attribute, false),
            WordClass::GroundedRelationship => grounded(&ann.grounded_relationship, true),
            WordClass::NonGroundedRelationship => ann.is_relationship[i] && grounded(&ann.grounded_relationship, false),
        }
    }
}

impl fmt::Display for WordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WordClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WordClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown word class `{s}`")))
    }
}

/// Preset class lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Grounded,
    Semantic,
    Stopword,
}

impl GroupBy {
    pub fn classes(self) -> Vec<WordClass> {
        match self {
            GroupBy::Grounded => vec![
                WordClass::GroundedObject,
                WordClass::NonGroundedObject,
                WordClass::GroundedAttribute,
                WordClass::NonGroundedAttribute,
                WordClass::GroundedRelationship,
                WordClass::NonGroundedRelationship,
            ],
            GroupBy::Semantic => vec![
                WordClass::Object,
                WordClass::Attribute,
                WordClass::Relationship,
                WordClass::StopwordPunct,
                WordClass::Content,
            ],
            GroupBy::Stopword => vec![WordClass::StopwordPunct, WordClass::Content],
        }
    }
}

impl FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grounded" => Ok(GroupBy::Grounded),
            "semantic" => Ok(GroupBy::Semantic),
            "stopword" => Ok(GroupBy::Stopword),
            other => Err(Error::Config(format!("unknown group-by `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: WordClass,
    pub count: u64,
    /// Mean of per-record `loss_without - loss_with`.
    pub mean_lossgap: f64,
    pub exp_loss_with: f64,
    pub exp_loss_without: f64,
    /// `exp_loss_without - exp_loss_with`.
    pub exp_loss_gap: f64,
    pub acc_at_k_with: f64,
    pub acc_at_k_without: f64,
    /// `acc_at_k_with - acc_at_k_without`.
    pub acc_gap: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct ClassAccumulator {
    count: u64,
    gap: f64,
    loss_with: f64,
    loss_without: f64,
    exp_with: f64,
    exp_without: f64,
    hits_with: u64,
    hits_without: u64,
}

impl ClassAccumulator {
    fn add(&mut self, rec: &PredictionRecord, k: usize) {
        self.count += 1;
        self.gap += lossgap(rec);
        self.loss_with += rec.loss_with;
        self.loss_without += rec.loss_without;
        self.exp_with += rec.loss_with.exp();
        self.exp_without += rec.loss_without.exp();
        self.hits_with += rec.hit_at_k(k, Side::With) as u64;
        self.hits_without += rec.hit_at_k(k, Side::Without) as u64;
    }

    fn finish(&self, class: WordClass, aggregation: Aggregation) -> ClassReport {
        let n = self.count as f64;
        let (exp_with, exp_without) = match aggregation {
            Aggregation::ExpOfMean => ((self.loss_with / n).exp(), (self.loss_without / n).exp()),
            Aggregation::MeanOfExp => (self.exp_with / n, self.exp_without / n),
        };
        let acc_with = self.hits_with as f64 / n;
        let acc_without = self.hits_without as f64 / n;
        ClassReport {
            class,
            count: self.count,
            mean_lossgap: self.gap / n,
            exp_loss_with: exp_with,
            exp_loss_without: exp_without,
            exp_loss_gap: exp_without - exp_with,
            acc_at_k_with: acc_with,
            acc_at_k_without: acc_without,
            acc_gap: acc_with - acc_without,
        }
    }
}

/// Groups records by the classes of their masked word and reports each
/// non-empty class, ranked by mean LossGap (highest first).
pub fn class_report<'a>(
    records: impl IntoIterator<Item = &'a PredictionRecord>,
    annotations: &HashMap<String, SentenceAnnotation>,
    classes: &[WordClass],
    k: usize,
    aggregation: Aggregation,
) -> Result<Vec<ClassReport>> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let mut accs = vec![ClassAccumulator::default(); classes.len()];
    for rec in records {
        let ann = annotations
            .get(&rec.id)
            .filter(|a| rec.word_index < a.len())
            .ok_or_else(|| Error::Unjoinable {
                id: rec.id.clone(),
                word_index: rec.word_index,
            })?;
        for (acc, class) in accs.iter_mut().zip(classes) {
            if class.contains(ann, rec.word_index) {
                acc.add(rec, k);
            }
        }
    }
    let mut reports: Vec<ClassReport> = accs
        .iter()
        .zip(classes)
        .filter(|(acc, _)| acc.count > 0)
        .map(|(acc, &class)| acc.finish(class, aggregation))
        .collect();
    reports.sort_by(|a, b| b.mean_lossgap.total_cmp(&a.mean_lossgap).then(a.class.cmp(&b.class)));
    Ok(reports)
}

pub fn class_reports_tsv(reports: &[ClassReport]) -> String {
    let mut out = String::from(
        "class\tcount\tmean_lossgap\texp_loss_with\texp_loss_without\texp_loss_gap\tacc_at_k_with\tacc_at_k_without\tacc_gap\n",
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            r.class,
            r.count,
            r.mean_lossgap,
            r.exp_loss_with,
            r.exp_loss_without,
            r.exp_loss_gap,
            r.acc_at_k_with,
            r.acc_at_k_without,
            r.acc_gap
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(loss_with: f64, loss_without: f64) -> PredictionRecord {
        PredictionRecord {
            id: "s".into(),
            word_index: 0,
            gold: "motorcycle".into(),
            loss_with,
            loss_without,
            topk_with: vec!["motorcycle".into()],
            topk_without: vec!["car".into()],
        }
    }

    #[test]
    fn gap_signs() {
        assert!((lossgap(&rec(0.25, 3.96)) - 3.71).abs() < 1e-12);
        assert_eq!(lossgap(&rec(1.5, 1.5)), 0.0);
        assert_eq!(lossgap(&rec(2.0, 1.0)), -1.0);
    }

    #[test]
    fn accuracy_hits_and_misses() {
        let mut r = rec(0.0, 0.0);
        r.topk_with = ["a", "b", "motorcycle", "c", "d"].map(String::from).to_vec();
        assert!(r.hit_at_k(5, Side::With));
        assert!(!r.hit_at_k(2, Side::With));
        assert!(!r.hit_at_k(5, Side::Without));
        assert_eq!(accuracy_at_k(&[r.clone()], 3, Side::With).unwrap(), 1.0);
        assert!(accuracy_at_k(&[], 3, Side::With).is_err());
        assert!(accuracy_at_k(&[r], 0, Side::With).is_err());
    }

    #[test]
    fn exp_of_single_record() {
        assert_eq!(
            exp_mean_loss(&[rec(0.0, 0.0)], Side::With, Aggregation::ExpOfMean).unwrap(),
            1.0
        );
        let r = rec(0.7, 1.3);
        for agg in [Aggregation::ExpOfMean, Aggregation::MeanOfExp] {
            assert!(
                (exp_mean_loss(std::slice::from_ref(&r), Side::Without, agg).unwrap() - 1.3f64.exp()).abs() < 1e-12
            );
        }
        assert!(exp_mean_loss(&[], Side::With, Aggregation::ExpOfMean).is_err());
    }

    #[test]
    fn aggregations_differ_on_spread_losses() {
        let records = [rec(0.0, 0.0), rec(2.0, 0.0)];
        let eom = exp_mean_loss(&records, Side::With, Aggregation::ExpOfMean).unwrap();
        let moe = exp_mean_loss(&records, Side::With, Aggregation::MeanOfExp).unwrap();
        assert!((eom - 1.0f64.exp()).abs() < 1e-12);
        assert!((moe - (1.0 + 2.0f64.exp()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_records() {
        let mut r = rec(-0.1, 1.0);
        assert!(r.validate().is_err());
        let mut r = rec(0.1, f64::NAN);
        assert!(r.validate().is_err());
        let mut r = rec(0.1, 1.0);
        r.topk_without.clear();
        assert!(r.validate().is_err());
        let missing = r#"{"id":"s","word_index":0,"gold":"x","loss_with":0.1,"topk_with":["x"],"topk_without":["y"]}"#;
        assert!(serde_json::from_str::<PredictionRecord>(missing).is_err());
    }

    #[test]
    fn class_names_round_trip() {
        for class in WordClass::ALL {
            assert_eq!(class.as_str().parse::<WordClass>().unwrap(), class);
        }
    }
}
