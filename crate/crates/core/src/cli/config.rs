//! `--config` documents and flag resolution. A flag (or its environment
//! variable) wins over the config document, which wins over the default.

use std::path::{Path, PathBuf};

use anyhow::bail;
use serde::Deserialize;

use super::args::{StrategyArgs, VocabArgs};
use crate::corpus::{ErrorPolicy, VocabOptions, VocabTable};
use crate::mask::{ReplacementPolicy, StrategyConfig, StrategyKind};

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub captions: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub scene_graphs: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub objects: Option<PathBuf>,
    pub attributes: Option<PathBuf>,
    pub relationships: Option<PathBuf>,
    pub concreteness: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub punctuation: Option<PathBuf>,
    pub pos_lexicon: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub probe: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub histogram: Option<PathBuf>,
    pub json: Option<PathBuf>,

    pub unk_token: Option<String>,
    pub mask_token: Option<String>,
    pub max_chars_per_word: Option<usize>,

    pub strategy: Option<String>,
    pub p: Option<f64>,
    pub policy: Option<String>,
    pub seed: Option<u64>,
    pub class: Option<String>,
    pub trials: Option<u64>,
    pub piece_shares: Option<bool>,

    pub k: Option<usize>,
    pub k_max: Option<usize>,
    pub classes: Option<String>,
    pub group_by: Option<String>,
    pub aggregation: Option<String>,
    pub plural_fold: Option<bool>,
    pub micro: Option<bool>,

    pub threads: Option<usize>,
    pub lenient: Option<bool>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = crate::corpus::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| crate::Error::Config(format!("config {}: {e}", path.display())).into())
    }
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub threads: usize,
    pub error_policy: ErrorPolicy,
    pub file: ConfigFile,
}

impl RunConfig {
    pub fn resolve(config: Option<&Path>, threads: Option<usize>, lenient: bool) -> anyhow::Result<Self> {
        let file = match config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let threads = threads
            .or(file.threads)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if threads == 0 {
            return Err(crate::Error::Config("parallelism must be at least 1".into()).into());
        }
        let error_policy = if lenient || file.lenient.unwrap_or(false) {
            ErrorPolicy::Skip
        } else {
            ErrorPolicy::Strict
        };
        Ok(Self {
            threads,
            error_policy,
            file,
        })
    }
}

/// First of `flag`, `file`; errors naming the flag when both are absent.
pub fn required<T: Clone>(flag: &Option<T>, file: &Option<T>, name: &str) -> anyhow::Result<T> {
    match flag.as_ref().or(file.as_ref()) {
        Some(v) => Ok(v.clone()),
        None => Err(crate::Error::Config(format!("missing required --{name}")).into()),
    }
}

pub fn optional<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.as_ref().or(file.as_ref()).cloned()
}

pub fn load_vocab(args: &VocabArgs, file: &ConfigFile) -> anyhow::Result<VocabTable> {
    let path = required(&args.vocab, &file.vocab, "vocab")?;
    let defaults = VocabOptions::default();
    let options = VocabOptions {
        unknown_token: optional(&args.unk_token, &file.unk_token).unwrap_or(defaults.unknown_token),
        mask_token: optional(&args.mask_token, &file.mask_token).unwrap_or(defaults.mask_token),
        max_input_chars_per_word: optional(&args.max_chars_per_word, &file.max_chars_per_word)
            .unwrap_or(defaults.max_input_chars_per_word),
        ..defaults
    };
    Ok(VocabTable::from_file(&path, options)?)
}

pub fn strategy_config(args: &StrategyArgs, file: &ConfigFile) -> anyhow::Result<StrategyConfig> {
    let Some(kind) = optional(&args.strategy, &file.strategy) else {
        bail!(crate::Error::Config("missing required --strategy".into()));
    };
    let mut cfg = StrategyConfig::new(kind.parse::<StrategyKind>()?);
    if let Some(p) = optional(&args.p, &file.p) {
        cfg.mask_probability = p;
    }
    if let Some(policy) = optional(&args.policy, &file.policy) {
        cfg.policy = policy.parse::<ReplacementPolicy>()?;
    }
    if let Some(seed) = optional(&args.seed, &file.seed) {
        cfg.seed = seed;
    }
    if let Some(class) = optional(&args.class, &file.class) {
        cfg.restricted_class = Some(class.parse()?);
    }
    cfg.validate()?;
    Ok(cfg)
}
