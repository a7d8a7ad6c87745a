use rand::Rng;
use serde::{Deserialize, Serialize};

use super::seed::policy_rng;
use super::{ActionKind, MaskPlan, PieceAction, ReplacementPolicy};
use crate::corpus::VocabTable;
use crate::tokenize::TokenizedSentence;

/// Draws one action per selected word and applies it to all of the word's
/// pieces. RANDOM replaces each piece independently with a uniform
/// non-special vocabulary token.
pub fn apply_replacement_policy(
    mut plan: MaskPlan,
    ts: &TokenizedSentence,
    vocab: &VocabTable,
    policy: &ReplacementPolicy,
) -> MaskPlan {
    let mut rng = policy_rng(plan.seed);
    let candidates = vocab.replacement_ids();
    let mut actions = Vec::new();
    for &word in &plan.selected {
        let u = rng.random::<f64>();
        let kind = if u < policy.mask {
            ActionKind::Mask
        } else if u < policy.mask + policy.random {
            ActionKind::Random
        } else {
            ActionKind::Keep
        };
        for pos in ts.spans[word].clone() {
            let replacement = (kind == ActionKind::Random).then(|| {
                let id = candidates[rng.random_range(0..candidates.len())];
                vocab.token(id).unwrap_or_default().to_string()
            });
            actions.push(PieceAction { pos, kind, replacement });
        }
    }
    plan.actions = actions;
    plan
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub pieces: Vec<String>,
    /// `(position, gold piece)` for every acted-on piece.
    pub labels: Vec<(usize, String)>,
}

impl Rendered {
    pub fn text(&self) -> String {
        self.pieces.join(" ")
    }
}

pub fn render(ts: &TokenizedSentence, plan: &MaskPlan, mask_token: &str) -> Rendered {
    let mut pieces = ts.pieces.clone();
    let mut labels = Vec::with_capacity(plan.actions.len());
    for action in &plan.actions {
        labels.push((action.pos, ts.pieces[action.pos].clone()));
        match action.kind {
            ActionKind::Mask => pieces[action.pos] = mask_token.to_string(),
            ActionKind::Random => {
                if let Some(token) = &action.replacement {
                    pieces[action.pos] = token.clone();
                }
            }
            ActionKind::Keep => {}
        }
    }
    Rendered { pieces, labels }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub pos: usize,
    pub action: ActionKind,
    pub gold: String,
}

/// One line of `plans.jsonl`. `pieces` is the rendered (masked) sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub id: String,
    pub selected_words: Vec<usize>,
    pub fallback_used: bool,
    pub pieces: Vec<String>,
    pub actions: Vec<ActionRecord>,
    pub masked_text: String,
}

impl PlanRecord {
    pub fn new(ts: &TokenizedSentence, plan: &MaskPlan, mask_token: &str) -> Self {
        let rendered = render(ts, plan, mask_token);
        let actions = plan
            .actions
            .iter()
            .zip(&rendered.labels)
            .map(|(a, (pos, gold))| ActionRecord {
                pos: *pos,
                action: a.kind,
                gold: gold.clone(),
            })
            .collect();
        Self {
            id: plan.id.clone(),
            selected_words: plan.selected.clone(),
            fallback_used: plan.fallback_used,
            masked_text: rendered.text(),
            pieces: rendered.pieces,
            actions,
        }
    }
}
