//! Corpus length histograms and strategy-level masking reports: how often
//! nothing is masked, and which word classes the masked words fall in.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::annotate::SentenceAnnotation;
use crate::mask::{plan_selection, trial_seed, StrategyConfig};
use crate::tokenize::TokenizedSentence;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub sentences: u64,
    pub total_words: u64,
    pub total_pieces: u64,
    /// sentence length in words -> sentence count
    pub words: BTreeMap<usize, u64>,
    /// sentence length in pieces -> sentence count
    pub pieces: BTreeMap<usize, u64>,
}

impl LengthHistogram {
    pub fn add(&mut self, ts: &TokenizedSentence) {
        self.sentences += 1;
        self.total_words += ts.len_words() as u64;
        self.total_pieces += ts.len_pieces() as u64;
        *self.words.entry(ts.len_words()).or_default() += 1;
        *self.pieces.entry(ts.len_pieces()).or_default() += 1;
    }

    pub fn merge(&mut self, other: &LengthHistogram) {
        self.sentences += other.sentences;
        self.total_words += other.total_words;
        self.total_pieces += other.total_pieces;
        for (&len, &n) in &other.words {
            *self.words.entry(len).or_default() += n;
        }
        for (&len, &n) in &other.pieces {
            *self.pieces.entry(len).or_default() += n;
        }
    }

    pub fn mean_words(&self) -> f64 {
        ratio(self.total_words, self.sentences)
    }

    pub fn mean_pieces(&self) -> f64 {
        ratio(self.total_pieces, self.sentences)
    }

    /// `length<TAB>words<TAB>pieces` rows, one per length seen at either granularity.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("length\twords\tpieces\n");
        let lengths: std::collections::BTreeSet<usize> = self.words.keys().chain(self.pieces.keys()).copied().collect();
        for len in lengths {
            let w = self.words.get(&len).copied().unwrap_or(0);
            let p = self.pieces.get(&len).copied().unwrap_or(0);
            let _ = writeln!(out, "{len}\t{w}\t{p}");
        }
        out
    }
}

pub fn length_histogram<'a>(sentences: impl IntoIterator<Item = &'a TokenizedSentence>) -> LengthHistogram {
    let mut hist = LengthHistogram::default();
    for ts in sentences {
        hist.add(ts);
    }
    hist
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Word classes tracked in masking reports. Classes overlap except the
/// first two, which partition every sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareClass {
    StopwordPunct,
    Content,
    Object,
    Attribute,
    Relationship,
    GroundedObject,
}

impl ShareClass {
    pub const ALL: [ShareClass; 6] = [
        ShareClass::StopwordPunct,
        ShareClass::Content,
        ShareClass::Object,
        ShareClass::Attribute,
        ShareClass::Relationship,
        ShareClass::GroundedObject,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ShareClass::StopwordPunct => "stopword_punct",
            ShareClass::Content => "content",
            ShareClass::Object => "object",
            ShareClass::Attribute => "attribute",
            ShareClass::Relationship => "relationship",
            ShareClass::GroundedObject => "grounded_object",
        }
    }

    pub fn contains(self, ann: &SentenceAnnotation, word: usize) -> bool {
        match self {
            ShareClass::StopwordPunct => !ann.is_content[word],
            ShareClass::Content => ann.is_content[word],
            ShareClass::Object => ann.is_object[word],
            ShareClass::Attribute => ann.is_attribute[word],
            ShareClass::Relationship => ann.is_relationship[word],
            ShareClass::GroundedObject => ann.grounded_object.as_ref().is_some_and(|g| g[word]),
        }
    }
}

type ClassCounts = [u64; ShareClass::ALL.len()];

fn add_word(counts: &mut ClassCounts, ann: &SentenceAnnotation, word: usize, weight: u64) {
    for (slot, class) in counts.iter_mut().zip(ShareClass::ALL) {
        if class.contains(ann, word) {
            *slot += weight;
        }
    }
}

/// Integer counts behind a [`MaskingReport`]; merging is commutative, so
/// shards can be reduced in any order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportAccumulator {
    sentences: u64,
    plans: u64,
    empty_plans: u64,
    fallbacks: u64,
    selected_words: u64,
    selected_pieces: u64,
    selected_by_class: ClassCounts,
    selected_pieces_by_class: ClassCounts,
    corpus_words: u64,
    corpus_pieces: u64,
    corpus_by_class: ClassCounts,
    corpus_pieces_by_class: ClassCounts,
}

impl ReportAccumulator {
    /// Plans `trials` repetitions of one sentence and counts the outcome.
    pub fn add_sentence(
        &mut self,
        ts: &TokenizedSentence,
        ann: &SentenceAnnotation,
        cfg: &StrategyConfig,
        trials: u64,
    ) -> Result<()> {
        self.sentences += 1;
        for word in 0..ann.len() {
            let width = ts.spans[word].len() as u64;
            self.corpus_words += 1;
            self.corpus_pieces += width;
            add_word(&mut self.corpus_by_class, ann, word, 1);
            add_word(&mut self.corpus_pieces_by_class, ann, word, width);
        }
        let mut trial_cfg = cfg.clone();
        for trial in 0..trials {
            trial_cfg.seed = trial_seed(cfg.seed, trial);
            let plan = plan_selection(ts, ann, &trial_cfg)?;
            self.plans += 1;
            self.empty_plans += plan.is_empty() as u64;
            self.fallbacks += plan.fallback_used as u64;
            for &word in &plan.selected {
                let width = ts.spans[word].len() as u64;
                self.selected_words += 1;
                self.selected_pieces += width;
                add_word(&mut self.selected_by_class, ann, word, 1);
                add_word(&mut self.selected_pieces_by_class, ann, word, width);
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ReportAccumulator) {
        self.sentences += other.sentences;
        self.plans += other.plans;
        self.empty_plans += other.empty_plans;
        self.fallbacks += other.fallbacks;
        self.selected_words += other.selected_words;
        self.selected_pieces += other.selected_pieces;
        self.corpus_words += other.corpus_words;
        self.corpus_pieces += other.corpus_pieces;
        let pairs = [
            (&mut self.selected_by_class, &other.selected_by_class),
            (&mut self.selected_pieces_by_class, &other.selected_pieces_by_class),
            (&mut self.corpus_by_class, &other.corpus_by_class),
            (&mut self.corpus_pieces_by_class, &other.corpus_pieces_by_class),
        ];
        for (mine, theirs) in pairs {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
    }

    pub fn finish(&self, cfg: &StrategyConfig, trials: u64, piece_shares: bool) -> MaskingReport {
        let shares = |counts: &ClassCounts, total: u64| -> BTreeMap<ShareClass, f64> {
            ShareClass::ALL
                .into_iter()
                .zip(counts)
                .map(|(class, &n)| (class, ratio(n, total)))
                .collect()
        };
        MaskingReport {
            strategy: cfg.kind.to_string(),
            seed: cfg.seed,
            trials,
            sentences: self.sentences,
            plans: self.plans,
            empty_plan_rate: ratio(self.empty_plans, self.plans),
            mean_selected_per_sentence: ratio(self.selected_words, self.plans),
            fallback_rate: ratio(self.fallbacks, self.plans),
            selected_words: self.selected_words,
            masked_class_shares: shares(&self.selected_by_class, self.selected_words),
            corpus_class_shares: shares(&self.corpus_by_class, self.corpus_words),
            masked_piece_class_shares: piece_shares
                .then(|| shares(&self.selected_pieces_by_class, self.selected_pieces)),
            corpus_piece_class_shares: piece_shares.then(|| shares(&self.corpus_pieces_by_class, self.corpus_pieces)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskingReport {
    pub strategy: String,
    pub seed: u64,
    pub trials: u64,
    pub sentences: u64,
    /// sentences x trials
    pub plans: u64,
    pub empty_plan_rate: f64,
    pub mean_selected_per_sentence: f64,
    pub fallback_rate: f64,
    pub selected_words: u64,
    /// Fraction of selected words in each class.
    pub masked_class_shares: BTreeMap<ShareClass, f64>,
    /// Fraction of corpus words in each class, for comparison.
    pub corpus_class_shares: BTreeMap<ShareClass, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masked_piece_class_shares: Option<BTreeMap<ShareClass, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_piece_class_shares: Option<BTreeMap<ShareClass, f64>>,
}

impl MaskingReport {
    pub fn share(&self, class: ShareClass) -> f64 {
        self.masked_class_shares.get(&class).copied().unwrap_or(0.0)
    }
}

/// Runs the strategy `trials` times over the corpus (trial `t` uses global
/// seed [`trial_seed`]`(cfg.seed, t)`) and aggregates the plans.
pub fn masking_report(
    corpus: &[(TokenizedSentence, SentenceAnnotation)],
    cfg: &StrategyConfig,
    trials: u64,
    piece_shares: bool,
) -> Result<MaskingReport> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    cfg.validate()?;
    let mut acc = ReportAccumulator::default();
    for (ts, ann) in corpus {
        acc.add_sentence(ts, ann, cfg, trials)?;
    }
    Ok(acc.finish(cfg, trials, piece_shares))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::PosTag;
    use crate::mask::{RestrictedClass, StrategyKind};

    fn item(id: &str, words: &[(&str, bool, bool)]) -> (TokenizedSentence, SentenceAnnotation) {
        let n = words.len();
        let ts = TokenizedSentence {
            words: words.iter().map(|w| w.0.to_string()).collect(),
            pieces: words.iter().map(|w| w.0.to_string()).collect(),
            spans: (0..n).map(|i| i..i + 1).collect(),
        };
        let ann = SentenceAnnotation {
            id: id.into(),
            image_id: "i".into(),
            words: ts.words.clone(),
            pos: vec![PosTag::Noun; n],
            is_stopword: words.iter().map(|w| !w.1).collect(),
            is_punct: vec![false; n],
            is_content: words.iter().map(|w| w.1).collect(),
            is_object: words.iter().map(|w| w.2).collect(),
            is_attribute: vec![false; n],
            is_relationship: vec![false; n],
            concreteness: vec![None; n],
            has_scene_graph: false,
            grounded_object: None,
            grounded_attribute: None,
            grounded_relationship: None,
        };
        (ts, ann)
    }

    #[test]
    fn single_caption_histogram() {
        let (ts, _) = item("s", &[("a", false, false); 5]);
        let hist = length_histogram([&ts]);
        assert_eq!(hist.mean_words(), 5.0);
        assert_eq!(hist.words[&5], 1);
        assert_eq!(hist.to_tsv(), "length\twords\tpieces\n5\t1\t1\n");
    }

    #[test]
    fn zero_trials_is_an_error() {
        let corpus = vec![item("s", &[("a", true, false)])];
        assert!(masking_report(&corpus, &StrategyConfig::new(StrategyKind::Uniform), 0, false).is_err());
    }

    #[test]
    fn stopword_restricted_share_is_one() {
        let corpus = vec![
            item(
                "s1",
                &[("the", false, false), ("tiger", true, true), (".", false, false)],
            ),
            item("s2", &[("a", false, false), ("dog", true, true)]),
        ];
        let cfg = StrategyConfig::new(StrategyKind::ClassRestricted)
            .with_class(RestrictedClass::StopwordPunct)
            .with_probability(0.5);
        let report = masking_report(&corpus, &cfg, 200, true).unwrap();
        assert_eq!(report.share(ShareClass::StopwordPunct), 1.0);
        assert_eq!(report.share(ShareClass::Content), 0.0);
        assert!(report.selected_words > 0);
        assert_eq!(
            report.masked_piece_class_shares.as_ref().unwrap()[&ShareClass::StopwordPunct],
            1.0
        );
    }

    #[test]
    fn report_is_reproducible_and_shard_independent() {
        let corpus: Vec<_> = (0..20)
            .map(|i| {
                item(
                    &format!("s{i}"),
                    &[("the", false, false), ("tiger", true, true), ("runs", true, false)],
                )
            })
            .collect();
        let cfg = StrategyConfig::new(StrategyKind::Uniform).with_seed(5);
        let a = masking_report(&corpus, &cfg, 10, false).unwrap();
        assert_eq!(a, masking_report(&corpus, &cfg, 10, false).unwrap());

        let mut left = ReportAccumulator::default();
        let mut right = ReportAccumulator::default();
        for (ts, ann) in corpus.iter().rev().take(7) {
            left.add_sentence(ts, ann, &cfg, 10).unwrap();
        }
        for (ts, ann) in corpus.iter().rev().skip(7) {
            right.add_sentence(ts, ann, &cfg, 10).unwrap();
        }
        right.merge(&left);
        assert_eq!(right.finish(&cfg, 10, false), a);
        let sp = a.share(ShareClass::StopwordPunct) + a.share(ShareClass::Content);
        assert!((sp - 1.0).abs() < 1e-12);
    }
}
