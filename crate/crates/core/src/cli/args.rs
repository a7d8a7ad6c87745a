use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "vlmask",
    version,
    about = "Mask planning and evaluation for cross-modal masked language modeling"
)]
pub struct Cli {
    /// JSON document supplying defaults for any flag below.
    #[arg(long, global = true, env = "VLMASK_CONFIG")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: available cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Skip and count malformed records instead of aborting.
    #[arg(long, global = true)]
    pub lenient: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit WordPiece pieces and word spans as JSONL.
    Tokenize(TokenizeArgs),
    /// Annotate captions with per-word classes, concreteness and grounding.
    Annotate(AnnotateArgs),
    /// Generate mask plans.
    Mask(MaskArgs),
    /// Masking statistics and caption length histogram.
    Stats(StatsArgs),
    /// LossGap and Accuracy@k per word class from prediction logs.
    Lossgap(LossgapArgs),
    /// Prompt-based object detection precision/recall.
    Probe(ProbeArgs),
    /// Score the class heuristics against scene-graph grounding.
    EvalDetect(EvalDetectArgs),
}

#[derive(Debug, Args, Default)]
pub struct VocabArgs {
    #[arg(long, env = "VLMASK_VOCAB")]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub unk_token: Option<String>,
    #[arg(long)]
    pub mask_token: Option<String>,
    #[arg(long)]
    pub max_chars_per_word: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TokenizeArgs {
    #[arg(long, env = "VLMASK_CAPTIONS")]
    pub captions: Option<PathBuf>,
    #[command(flatten)]
    pub vocab: VocabArgs,
    #[arg(long, short, env = "VLMASK_OUTPUT")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long, env = "VLMASK_CAPTIONS")]
    pub captions: Option<PathBuf>,
    #[arg(long, env = "VLMASK_SCENE_GRAPHS")]
    pub scene_graphs: Option<PathBuf>,
    #[arg(long, env = "VLMASK_OBJECTS")]
    pub objects: Option<PathBuf>,
    #[arg(long, env = "VLMASK_ATTRIBUTES")]
    pub attributes: Option<PathBuf>,
    #[arg(long, env = "VLMASK_RELATIONSHIPS")]
    pub relationships: Option<PathBuf>,
    #[arg(long, env = "VLMASK_CONCRETENESS")]
    pub concreteness: Option<PathBuf>,
    /// Stop-word list (default: bundled list).
    #[arg(long, env = "VLMASK_STOPWORDS")]
    pub stopwords: Option<PathBuf>,
    /// Punctuation characters (default: bundled set).
    #[arg(long, env = "VLMASK_PUNCTUATION")]
    pub punctuation: Option<PathBuf>,
    /// `word<TAB>TAG` lexicon for the built-in tagger (default: bundled).
    #[arg(long, env = "VLMASK_POS_LEXICON")]
    pub pos_lexicon: Option<PathBuf>,
    #[arg(long, short, env = "VLMASK_OUTPUT")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct StrategyArgs {
    /// uniform | class_restricted | one_word_random | one_word_object |
    /// one_word_content80 | one_word_top_concrete | ablation_no_zero | ablation_no_multi
    #[arg(long)]
    pub strategy: Option<String>,
    /// Per-word masking probability.
    #[arg(long = "p")]
    pub p: Option<f64>,
    /// Replacement proportions `mask:random:keep`.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// stopword_punct | content (class_restricted only).
    #[arg(long = "class")]
    pub class: Option<String>,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    #[arg(long, env = "VLMASK_CAPTIONS")]
    pub captions: Option<PathBuf>,
    #[arg(long, env = "VLMASK_ANNOTATIONS")]
    pub annotations: Option<PathBuf>,
    #[command(flatten)]
    pub vocab: VocabArgs,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[arg(long, short, env = "VLMASK_OUTPUT")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long, env = "VLMASK_CAPTIONS")]
    pub captions: Option<PathBuf>,
    #[arg(long, env = "VLMASK_ANNOTATIONS")]
    pub annotations: Option<PathBuf>,
    #[command(flatten)]
    pub vocab: VocabArgs,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    /// Repetitions of the strategy over the corpus.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Also report class shares over masked pieces.
    #[arg(long)]
    pub piece_shares: bool,
    /// Report JSON (default: stdout).
    #[arg(long, short, env = "VLMASK_OUTPUT")]
    pub output: Option<PathBuf>,
    /// Length histogram TSV.
    #[arg(long, env = "VLMASK_HISTOGRAM")]
    pub histogram: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LossgapArgs {
    #[arg(long, env = "VLMASK_PREDICTIONS")]
    pub predictions: Option<PathBuf>,
    #[arg(long, env = "VLMASK_ANNOTATIONS")]
    pub annotations: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated class names; overrides --group-by.
    #[arg(long)]
    pub classes: Option<String>,
    /// grounded | semantic | stopword
    #[arg(long)]
    pub group_by: Option<String>,
    /// exp-of-mean | mean-of-exp
    #[arg(long)]
    pub aggregation: Option<String>,
    /// TSV report (default: stdout).
    #[arg(long, short, env = "VLMASK_OUTPUT")]
    pub output: Option<PathBuf>,
    /// JSON report.
    #[arg(long, env = "VLMASK_JSON")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long, env = "VLMASK_PROBE")]
    pub input: Option<PathBuf>,
    #[arg(long, env = "VLMASK_SCENE_GRAPHS")]
    pub scene_graphs: Option<PathBuf>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub plural_fold: bool,
    /// Pool hits across images instead of averaging per image.
    #[arg(long)]
    pub micro: bool,
    #[arg(long, short, env = "VLMASK_OUTPUT")]
    pub output: Option<PathBuf>,
    #[arg(long, env = "VLMASK_JSON")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalDetectArgs {
    #[arg(long, env = "VLMASK_ANNOTATIONS")]
    pub annotations: Option<PathBuf>,
    #[arg(long, short, env = "VLMASK_OUTPUT")]
    pub output: Option<PathBuf>,
}
