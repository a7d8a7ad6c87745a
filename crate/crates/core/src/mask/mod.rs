//! Seeded, whole-word mask plans.
//!
//! A plan is built in two steps. A strategy selects word indices, then the
//! replacement policy draws one action per selected word and applies it to
//! every piece of that word. Both steps use RNG streams derived from the
//! global seed and the sentence id only, so a corpus always yields the same
//! plans regardless of thread count or record order.

mod policy;
mod seed;
mod select;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use policy::{apply_replacement_policy, render, PlanRecord, Rendered};
pub use seed::{derive_seed, splitmix64, trial_seed};
pub use select::{
    plan_ablation, plan_class_restricted, plan_one_word, plan_selection, plan_uniform, CONTENT_WORD_PROBABILITY,
    TOP_CONCRETE_WEIGHTS,
};

use crate::annotate::SentenceAnnotation;
use crate::corpus::VocabTable;
use crate::tokenize::TokenizedSentence;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Uniform,
    ClassRestricted,
    OneWordRandom,
    OneWordObject,
    OneWordContent80,
    OneWordTopConcrete,
    AblationNoZero,
    AblationNoMulti,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 8] = [
        StrategyKind::Uniform,
        StrategyKind::ClassRestricted,
        StrategyKind::OneWordRandom,
        StrategyKind::OneWordObject,
        StrategyKind::OneWordContent80,
        StrategyKind::OneWordTopConcrete,
        StrategyKind::AblationNoZero,
        StrategyKind::AblationNoMulti,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Uniform => "uniform",
            StrategyKind::ClassRestricted => "class_restricted",
            StrategyKind::OneWordRandom => "one_word_random",
            StrategyKind::OneWordObject => "one_word_object",
            StrategyKind::OneWordContent80 => "one_word_content80",
            StrategyKind::OneWordTopConcrete => "one_word_top_concrete",
            StrategyKind::AblationNoZero => "ablation_no_zero",
            StrategyKind::AblationNoMulti => "ablation_no_multi",
        }
    }

    pub fn is_one_word(self) -> bool {
        matches!(
            self,
            StrategyKind::OneWordRandom
                | StrategyKind::OneWordObject
                | StrategyKind::OneWordContent80
                | StrategyKind::OneWordTopConcrete
        )
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestrictedClass {
    StopwordPunct,
    Content,
}

impl RestrictedClass {
    pub fn as_str(self) -> &'static str {
        match self {
            RestrictedClass::StopwordPunct => "stopword_punct",
            RestrictedClass::Content => "content",
        }
    }

    pub fn contains(self, ann: &SentenceAnnotation, word: usize) -> bool {
        match self {
            RestrictedClass::StopwordPunct => !ann.is_content[word],
            RestrictedClass::Content => ann.is_content[word],
        }
    }
}

impl FromStr for RestrictedClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stopword_punct" => Ok(RestrictedClass::StopwordPunct),
            "content" => Ok(RestrictedClass::Content),
            other => Err(Error::Config(format!("unknown class `{other}`"))),
        }
    }
}

/// Proportions of MASK / RANDOM / KEEP actions for selected words.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplacementPolicy {
    pub mask: f64,
    pub random: f64,
    pub keep: f64,
}

impl Default for ReplacementPolicy {
    fn default() -> Self {
        Self {
            mask: 0.8,
            random: 0.1,
            keep: 0.1,
        }
    }
}

impl ReplacementPolicy {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(mask: f64, random: f64, keep: f64) -> Result<Self> {
        let policy = Self { mask, random, keep };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.mask, self.random, self.keep];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config(format!(
                "policy proportions must lie in [0, 1], got {self}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::Config(format!(
                "policy proportions must sum to 1, got {sum} ({self})"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for ReplacementPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.mask, self.random, self.keep)
    }
}

impl FromStr for ReplacementPolicy {
    type Err = Error;

    /// Parses `mask:random:keep`, e.g. `0.8:0.1:0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [m, r, k] = parts.as_slice() else {
            return Err(Error::Config(format!("policy `{s}` is not of the form m:r:k")));
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("policy `{s}`: `{x}` is not a number")))
        };
        Self::new(num(m)?, num(r)?, num(k)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    #[serde(default = "default_mask_probability")]
    pub mask_probability: f64,
    #[serde(default)]
    pub restricted_class: Option<RestrictedClass>,
    #[serde(default)]
    pub policy: ReplacementPolicy,
    #[serde(default)]
    pub seed: u64,
}

fn default_mask_probability() -> f64 {
    StrategyConfig::DEFAULT_MASK_PROBABILITY
}

impl StrategyConfig {
    pub const DEFAULT_MASK_PROBABILITY: f64 = 0.15;

    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            mask_probability: Self::DEFAULT_MASK_PROBABILITY,
            restricted_class: None,
            policy: ReplacementPolicy::default(),
            seed: 0,
        }
    }

    pub fn with_probability(mut self, p: f64) -> Self {
        self.mask_probability = p;
        self
    }

    pub fn with_class(mut self, class: RestrictedClass) -> Self {
        self.restricted_class = Some(class);
        self
    }

    pub fn with_policy(mut self, policy: ReplacementPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mask_probability) {
            return Err(Error::Config(format!(
                "mask probability {} outside [0, 1]",
                self.mask_probability
            )));
        }
        if self.kind == StrategyKind::ClassRestricted && self.restricted_class.is_none() {
            return Err(Error::Config(
                "class_restricted strategy needs a restricted class".into(),
            ));
        }
        self.policy.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    #[serde(rename = "MASK")]
    Mask,
    #[serde(rename = "RANDOM")]
    Random,
    #[serde(rename = "KEEP")]
    Keep,
}

/// Action for one piece of a selected word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceAction {
    pub pos: usize,
    pub kind: ActionKind,
    /// Replacement token for [`ActionKind::Random`].
    pub replacement: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskPlan {
    pub id: String,
    /// Sorted, unique word indices.
    pub selected: Vec<usize>,
    /// Empty until [`apply_replacement_policy`] runs.
    pub actions: Vec<PieceAction>,
    /// The selector found no eligible word and fell back to a uniform pick.
    pub fallback_used: bool,
    pub seed: u64,
}

impl MaskPlan {
    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Checks the whole-word contract against `ts`: actions, when present,
    /// cover exactly the pieces of the selected words and nothing else.
    pub fn check(&self, ts: &TokenizedSentence) -> std::result::Result<(), String> {
        if self.selected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("selected words not sorted/unique: {:?}", self.selected));
        }
        if let Some(&last) = self.selected.last() {
            if last >= ts.len_words() {
                return Err(format!("word {last} out of range for {} words", ts.len_words()));
            }
        }
        if self.actions.is_empty() {
            return Ok(());
        }
        let expected: Vec<usize> = self.selected.iter().flat_map(|&w| ts.spans[w].clone()).collect();
        let got: Vec<usize> = self.actions.iter().map(|a| a.pos).collect();
        if expected != got {
            return Err(format!(
                "action positions {got:?} != pieces of selected words {expected:?}"
            ));
        }
        for &w in &self.selected {
            let kinds: Vec<ActionKind> = self
                .actions
                .iter()
                .filter(|a| ts.spans[w].contains(&a.pos))
                .map(|a| a.kind)
                .collect();
            if kinds.windows(2).any(|k| k[0] != k[1]) {
                return Err(format!("word {w} has mixed actions {kinds:?}"));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_aligned(ts: &TokenizedSentence, ann: &SentenceAnnotation) -> Result<()> {
    if ts.len_words() != ann.len() {
        return Err(Error::sentence(
            &ann.id,
            format!(
                "tokenized sentence has {} words, annotation {}",
                ts.len_words(),
                ann.len()
            ),
        ));
    }
    Ok(())
}

/// Selection followed by the replacement policy.
pub fn make_plan(
    ts: &TokenizedSentence,
    ann: &SentenceAnnotation,
    cfg: &StrategyConfig,
    vocab: &VocabTable,
) -> Result<MaskPlan> {
    let plan = plan_selection(ts, ann, cfg)?;
    Ok(apply_replacement_policy(plan, ts, vocab, &cfg.policy))
}
