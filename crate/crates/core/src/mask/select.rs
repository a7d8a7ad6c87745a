//! Word selection for every masking strategy.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::seed::{derive_seed, selection_rng};
use super::{check_aligned, MaskPlan, StrategyConfig, StrategyKind};
use crate::annotate::SentenceAnnotation;
use crate::tokenize::TokenizedSentence;
use crate::{Error, Result};

/// Probability that `one_word_content80` draws from the content-word pool.
pub const CONTENT_WORD_PROBABILITY: f64 = 0.8;

/// Sampling weights for the three most concrete words, by rank.
pub const TOP_CONCRETE_WEIGHTS: [f64; 3] = [0.55, 0.30, 0.15];

struct Selection {
    words: Vec<usize>,
    fallback_used: bool,
}

impl Selection {
    fn of(words: Vec<usize>) -> Self {
        Self {
            words,
            fallback_used: false,
        }
    }

    fn one(word: usize) -> Self {
        Self::of(vec![word])
    }
}

fn expect_kind(cfg: &StrategyConfig, allowed: &[StrategyKind], op: &str) -> Result<()> {
    if allowed.contains(&cfg.kind) {
        Ok(())
    } else {
        Err(Error::Config(format!("{op} cannot run strategy `{}`", cfg.kind)))
    }
}

fn build(
    ann: &SentenceAnnotation,
    cfg: &StrategyConfig,
    select: impl FnOnce(&mut ChaCha8Rng) -> Result<Selection>,
) -> Result<MaskPlan> {
    let seed = derive_seed(cfg.seed, &ann.id);
    let mut rng = selection_rng(seed);
    let mut selection = select(&mut rng)?;
    selection.words.sort_unstable();
    Ok(MaskPlan {
        id: ann.id.clone(),
        selected: selection.words,
        actions: Vec::new(),
        fallback_used: selection.fallback_used,
        seed,
    })
}

fn bernoulli(rng: &mut ChaCha8Rng, candidates: impl Iterator<Item = usize>, p: f64) -> Vec<usize> {
    candidates.filter(|_| rng.random::<f64>() < p).collect()
}

fn pick(rng: &mut ChaCha8Rng, pool: &[usize]) -> usize {
    pool[rng.random_range(0..pool.len())]
}

fn non_empty(ann: &SentenceAnnotation) -> Result<usize> {
    match ann.len() {
        0 => Err(Error::sentence(&ann.id, "empty sentence cannot select a word")),
        n => Ok(n),
    }
}

/// Each word is selected independently with probability `p`.
pub fn plan_uniform(ts: &TokenizedSentence, ann: &SentenceAnnotation, cfg: &StrategyConfig) -> Result<MaskPlan> {
    expect_kind(cfg, &[StrategyKind::Uniform], "plan_uniform")?;
    check_aligned(ts, ann)?;
    build(ann, cfg, |rng| {
        Ok(Selection::of(bernoulli(rng, 0..ann.len(), cfg.mask_probability)))
    })
}

/// Bernoulli(`p`) over the words of the restricted class only.
pub fn plan_class_restricted(
    ts: &TokenizedSentence,
    ann: &SentenceAnnotation,
    cfg: &StrategyConfig,
) -> Result<MaskPlan> {
    expect_kind(cfg, &[StrategyKind::ClassRestricted], "plan_class_restricted")?;
    check_aligned(ts, ann)?;
    let class = cfg
        .restricted_class
        .ok_or_else(|| Error::Config("class_restricted strategy needs a restricted class".into()))?;
    build(ann, cfg, |rng| {
        let eligible = (0..ann.len()).filter(|&i| class.contains(ann, i));
        Ok(Selection::of(bernoulli(rng, eligible, cfg.mask_probability)))
    })
}

/// Selects exactly one word with the configured selector.
pub fn plan_one_word(ts: &TokenizedSentence, ann: &SentenceAnnotation, cfg: &StrategyConfig) -> Result<MaskPlan> {
    expect_kind(
        cfg,
        &[
            StrategyKind::OneWordRandom,
            StrategyKind::OneWordObject,
            StrategyKind::OneWordContent80,
            StrategyKind::OneWordTopConcrete,
        ],
        "plan_one_word",
    )?;
    check_aligned(ts, ann)?;
    let n = non_empty(ann)?;
    let all: Vec<usize> = (0..n).collect();
    build(ann, cfg, |rng| {
        let selection = match cfg.kind {
            StrategyKind::OneWordRandom => Selection::one(pick(rng, &all)),
            StrategyKind::OneWordObject => {
                let objects: Vec<usize> = (0..n).filter(|&i| ann.is_object[i]).collect();
                if objects.is_empty() {
                    Selection {
                        words: vec![pick(rng, &all)],
                        fallback_used: true,
                    }
                } else {
                    Selection::one(pick(rng, &objects))
                }
            }
            StrategyKind::OneWordContent80 => {
                let (content, function): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| ann.is_content[i]);
                let (preferred, other) = if rng.random::<f64>() < CONTENT_WORD_PROBABILITY {
                    (&content, &function)
                } else {
                    (&function, &content)
                };
                let pool = if preferred.is_empty() { other } else { preferred };
                Selection::one(pick(rng, pool))
            }
            StrategyKind::OneWordTopConcrete => match top_concrete(rng, ann) {
                Some(word) => Selection::one(word),
                None => Selection {
                    words: vec![pick(rng, &all)],
                    fallback_used: true,
                },
            },
            _ => unreachable!("kind checked above"),
        };
        Ok(selection)
    })
}

/// Ranks scored words by concreteness (ties: earlier position first) and
/// samples among the top three with [`TOP_CONCRETE_WEIGHTS`], renormalized
/// when fewer than three words carry a score.
fn top_concrete(rng: &mut ChaCha8Rng, ann: &SentenceAnnotation) -> Option<usize> {
    let mut scored: Vec<(usize, f64)> = ann
        .concreteness
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| (i, s)))
        .collect();
    if scored.is_empty() {
        return None;
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(TOP_CONCRETE_WEIGHTS.len());
    let weights = &TOP_CONCRETE_WEIGHTS[..scored.len()];
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (&(word, _), &w) in scored.iter().zip(weights) {
        if u < w {
            return Some(word);
        }
        u -= w;
    }
    scored.last().map(|&(word, _)| word)
}

/// Uniform Bernoulli(`p`), then forbid an empty plan (`ablation_no_zero`)
/// or down-sample to a single word (`ablation_no_multi`).
pub fn plan_ablation(ts: &TokenizedSentence, ann: &SentenceAnnotation, cfg: &StrategyConfig) -> Result<MaskPlan> {
    expect_kind(
        cfg,
        &[StrategyKind::AblationNoZero, StrategyKind::AblationNoMulti],
        "plan_ablation",
    )?;
    check_aligned(ts, ann)?;
    let n = non_empty(ann)?;
    build(ann, cfg, |rng| {
        let drawn = bernoulli(rng, 0..n, cfg.mask_probability);
        let words = match cfg.kind {
            StrategyKind::AblationNoZero if drawn.is_empty() => vec![rng.random_range(0..n)],
            StrategyKind::AblationNoMulti if drawn.len() > 1 => vec![pick(rng, &drawn)],
            _ => drawn,
        };
        Ok(Selection::of(words))
    })
}

/// Dispatches on `cfg.kind`.
pub fn plan_selection(ts: &TokenizedSentence, ann: &SentenceAnnotation, cfg: &StrategyConfig) -> Result<MaskPlan> {
    match cfg.kind {
        StrategyKind::Uniform => plan_uniform(ts, ann, cfg),
        StrategyKind::ClassRestricted => plan_class_restricted(ts, ann, cfg),
        StrategyKind::AblationNoZero | StrategyKind::AblationNoMulti => plan_ablation(ts, ann, cfg),
        _ => plan_one_word(ts, ann, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::PosTag;
    use crate::mask::RestrictedClass;
    use crate::tokenize::TokenizedSentence;

    /// Sentence with one piece per word; flags set from the closures.
    fn sentence(
        id: &str,
        words: &[&str],
        content: impl Fn(&str) -> bool,
        object: impl Fn(&str) -> bool,
        score: impl Fn(&str) -> Option<f64>,
    ) -> (TokenizedSentence, SentenceAnnotation) {
        let n = words.len();
        let ts = TokenizedSentence {
            words: words.iter().map(|w| w.to_string()).collect(),
            pieces: words.iter().map(|w| w.to_string()).collect(),
            spans: (0..n).map(|i| i..i + 1).collect(),
        };
        let is_content: Vec<bool> = words.iter().map(|w| content(w)).collect();
        let ann = SentenceAnnotation {
            id: id.into(),
            image_id: "img".into(),
            words: ts.words.clone(),
            pos: vec![PosTag::Noun; n],
            is_stopword: is_content.iter().map(|c| !c).collect(),
            is_punct: vec![false; n],
            is_content,
            is_object: words.iter().map(|w| object(w)).collect(),
            is_attribute: vec![false; n],
            is_relationship: vec![false; n],
            concreteness: words.iter().map(|w| score(w)).collect(),
            has_scene_graph: false,
            grounded_object: None,
            grounded_attribute: None,
            grounded_relationship: None,
        };
        (ts, ann)
    }

    fn plain(words: &[&str]) -> (TokenizedSentence, SentenceAnnotation) {
        sentence("s", words, |_| true, |_| false, |_| None)
    }

    #[test]
    fn probability_extremes() {
        let (ts, ann) = plain(&["a", "b", "c", "d"]);
        for seed in 0..50 {
            let cfg = StrategyConfig::new(StrategyKind::Uniform).with_seed(seed);
            assert!(plan_uniform(&ts, &ann, &cfg.clone().with_probability(0.0))
                .unwrap()
                .is_empty());
            assert_eq!(
                plan_uniform(&ts, &ann, &cfg.with_probability(1.0)).unwrap().selected,
                vec![0, 1, 2, 3]
            );
        }
    }

    #[test]
    fn class_restricted_respects_class() {
        let (ts, ann) = sentence(
            "s",
            &["the", "tiger", ",", "ate"],
            |w| w == "tiger" || w == "ate",
            |_| false,
            |_| None,
        );
        let cfg = StrategyConfig::new(StrategyKind::ClassRestricted)
            .with_class(RestrictedClass::StopwordPunct)
            .with_probability(1.0);
        assert_eq!(plan_class_restricted(&ts, &ann, &cfg).unwrap().selected, vec![0, 2]);

        let (ts, ann) = plain(&["tiger", "ate"]);
        for seed in 0..50 {
            let cfg = cfg.clone().with_seed(seed);
            assert!(plan_class_restricted(&ts, &ann, &cfg).unwrap().is_empty());
        }
    }

    #[test]
    fn object_selector_prefers_objects() {
        let words = ["a", "tiger", "is", "eating", "the", "carrot"];
        let (ts, ann) = sentence("s", &words, |_| true, |w| w == "tiger" || w == "carrot", |_| None);
        for seed in 0..200 {
            let cfg = StrategyConfig::new(StrategyKind::OneWordObject).with_seed(seed);
            let plan = plan_one_word(&ts, &ann, &cfg).unwrap();
            assert_eq!(plan.selected.len(), 1);
            assert!(matches!(plan.selected[0], 1 | 5));
            assert!(!plan.fallback_used);
        }
    }

    #[test]
    fn object_selector_falls_back() {
        let (ts, ann) = plain(&["a", "happy", "day"]);
        let cfg = StrategyConfig::new(StrategyKind::OneWordObject).with_seed(3);
        let plan = plan_one_word(&ts, &ann, &cfg).unwrap();
        assert_eq!(plan.selected.len(), 1);
        assert!(plan.fallback_used);
    }

    #[test]
    fn single_word_sentence_always_selects_it() {
        let (ts, ann) = sentence("s", &["tiger"], |_| true, |_| true, |_| Some(5.0));
        for kind in StrategyKind::ALL.into_iter().filter(|k| k.is_one_word()) {
            for seed in 0..20 {
                let cfg = StrategyConfig::new(kind).with_seed(seed);
                assert_eq!(plan_one_word(&ts, &ann, &cfg).unwrap().selected, vec![0], "{kind}");
            }
        }
    }

    #[test]
    fn empty_sentence_is_an_error_for_single_word_selectors() {
        let (ts, ann) = plain(&[]);
        let cfg = StrategyConfig::new(StrategyKind::OneWordRandom);
        assert!(plan_one_word(&ts, &ann, &cfg).is_err());
        let cfg = StrategyConfig::new(StrategyKind::AblationNoZero);
        assert!(plan_ablation(&ts, &ann, &cfg).is_err());
        let cfg = StrategyConfig::new(StrategyKind::Uniform);
        assert!(plan_uniform(&ts, &ann, &cfg).unwrap().is_empty());
    }

    #[test]
    fn top_concrete_never_picks_outside_top_three() {
        let scores = |w: &str| match w {
            "tiger" => Some(5.0),
            "carrot" => Some(4.9),
            "eating" => Some(4.4),
            "the" => Some(1.4),
            _ => None,
        };
        let (ts, ann) = sentence(
            "s",
            &["the", "tiger", "is", "eating", "the", "carrot"],
            |_| true,
            |_| false,
            scores,
        );
        for seed in 0..300 {
            let cfg = StrategyConfig::new(StrategyKind::OneWordTopConcrete).with_seed(seed);
            let plan = plan_one_word(&ts, &ann, &cfg).unwrap();
            assert!(matches!(plan.selected[..], [1] | [3] | [5]), "{:?}", plan.selected);
        }
    }

    #[test]
    fn top_concrete_ties_rank_earlier_word_first() {
        let mut rng = selection_rng(1);
        let (_, ann) = sentence("s", &["a", "b", "c", "d"], |_| true, |_| false, |_| Some(3.0));
        for _ in 0..200 {
            assert!(top_concrete(&mut rng, &ann).unwrap() < 3);
        }
    }

    #[test]
    fn top_concrete_without_scores_falls_back() {
        let (ts, ann) = plain(&["a", "b"]);
        let cfg = StrategyConfig::new(StrategyKind::OneWordTopConcrete);
        let plan = plan_one_word(&ts, &ann, &cfg).unwrap();
        assert_eq!(plan.selected.len(), 1);
        assert!(plan.fallback_used);
    }

    #[test]
    fn ablations_bound_selection_counts() {
        let (ts, ann) = plain(&["a", "b", "c", "d", "e", "f", "g"]);
        for seed in 0..500 {
            let no_zero = StrategyConfig::new(StrategyKind::AblationNoZero).with_seed(seed);
            assert!(!plan_ablation(&ts, &ann, &no_zero).unwrap().is_empty());
            let no_multi = StrategyConfig::new(StrategyKind::AblationNoMulti)
                .with_seed(seed)
                .with_probability(0.5);
            assert!(plan_ablation(&ts, &ann, &no_multi).unwrap().selected.len() <= 1);
        }
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let (ts, ann) = plain(&["a"]);
        let cfg = StrategyConfig::new(StrategyKind::OneWordRandom);
        assert!(plan_uniform(&ts, &ann, &cfg).is_err());
        assert!(plan_ablation(&ts, &ann, &cfg).is_err());
        assert!(plan_one_word(&ts, &ann, &StrategyConfig::new(StrategyKind::Uniform)).is_err());
    }

    #[test]
    fn misaligned_annotation_is_rejected() {
        let (ts, _) = plain(&["a", "b"]);
        let (_, ann) = plain(&["a"]);
        assert!(plan_uniform(&ts, &ann, &StrategyConfig::new(StrategyKind::Uniform)).is_err());
    }

    #[test]
    fn plans_depend_on_id_and_seed_only() {
        let words = ["a", "b", "c", "d", "e", "f", "g", "h"];
        let (ts, ann) = plain(&words);
        let cfg = StrategyConfig::new(StrategyKind::Uniform)
            .with_probability(0.5)
            .with_seed(11);
        let first = plan_uniform(&ts, &ann, &cfg).unwrap();
        assert_eq!(first, plan_uniform(&ts, &ann, &cfg).unwrap());
        assert_eq!(first.seed, derive_seed(11, "s"));
    }
}
