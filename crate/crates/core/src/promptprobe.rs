//! Cloze-prompt object detection scoring: a model's ranked completions for
//! a prompt such as `"A photo of a [MASK]"` are intersected with the image's
//! ground-truth object names.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{JsonlRecord, SceneGraphs};
use crate::{Error, Result};

/// One line of `probe.jsonl`; predictions are ranked, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub image_id: String,
    pub prompt: String,
    pub predictions: Vec<String>,
}

fn normalize(s: &str) -> String {
    s.trim().to_lowercase()
}

impl ProbeRecord {
    fn check(&self) -> std::result::Result<(), String> {
        if self.predictions.is_empty() {
            return Err(format!("probe for `{}` has no predictions", self.image_id));
        }
        let mut seen = HashSet::new();
        for p in &self.predictions {
            if !seen.insert(normalize(p)) {
                return Err(format!("probe for `{}` repeats prediction `{p}`", self.image_id));
            }
        }
        Ok(())
    }
}

impl JsonlRecord for ProbeRecord {
    fn validate(&mut self) -> std::result::Result<(), String> {
        self.check()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Per-image precision and recall, then the mean over images.
    #[default]
    Macro,
    /// Pool hits over all images before dividing.
    Micro,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProbeOptions {
    /// Also accept a prediction that differs from an object name by a
    /// trailing `s` or `es`.
    pub plural_fold: bool,
    pub averaging: Averaging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub images: usize,
    /// Images whose scene graph lists no objects; they count towards
    /// precision only.
    pub images_without_objects: usize,
    pub points: Vec<ProbePoint>,
}

impl ProbeResult {
    pub fn at(&self, k: usize) -> Option<&ProbePoint> {
        self.points.get(k.checked_sub(1)?)
    }
}

fn is_match(prediction: &str, objects: &BTreeSet<String>, plural_fold: bool) -> bool {
    let p = normalize(prediction);
    if objects.contains(&p) {
        return true;
    }
    if !plural_fold {
        return false;
    }
    let stripped = ["es", "s"].iter().filter_map(|s| p.strip_suffix(s)).map(str::to_string);
    let extended = ["s", "es"].iter().map(|s| format!("{p}{s}"));
    stripped.chain(extended).any(|c| !c.is_empty() && objects.contains(&c))
}

/// Precision@k and recall@k for k = 1..=`k_max` over one set of records.
pub fn evaluate_probe(
    records: &[ProbeRecord],
    graphs: &SceneGraphs,
    k_max: usize,
    options: ProbeOptions,
) -> Result<ProbeResult> {
    if k_max == 0 {
        return Err(Error::Config("k-max must be at least 1".into()));
    }
    if records.is_empty() {
        return Err(Error::Empty("no probe records"));
    }
    let missing: BTreeSet<String> = records
        .iter()
        .filter(|r| !graphs.contains_key(&r.image_id))
        .map(|r| r.image_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingSceneGraph(missing.into_iter().collect()));
    }
    for r in records {
        r.check().map_err(Error::Config)?;
        if r.predictions.len() < k_max {
            return Err(Error::Config(format!(
                "k-max {k_max} exceeds the {} predictions for image `{}`",
                r.predictions.len(),
                r.image_id
            )));
        }
    }

    // Per image: cumulative hit counts and the object count. Sorted so the
    // floating-point sums below do not depend on record order.
    let mut per_image: Vec<(&ProbeRecord, Vec<u64>, usize)> = records
        .iter()
        .map(|r| {
            let objects = &graphs[&r.image_id].objects;
            let mut hits = 0;
            let cumulative = r.predictions[..k_max]
                .iter()
                .map(|p| {
                    hits += is_match(p, objects, options.plural_fold) as u64;
                    hits
                })
                .collect();
            (r, cumulative, objects.len())
        })
        .collect();
    per_image.sort_by(|a, b| (&a.0.image_id, &a.0.predictions).cmp(&(&b.0.image_id, &b.0.predictions)));

    let images = per_image.len();
    let with_objects = per_image.iter().filter(|(_, _, n)| *n > 0).count();
    let total_objects: usize = per_image.iter().map(|(_, _, n)| n).sum();
    let points = (1..=k_max)
        .map(|k| {
            let hits: u64 = per_image.iter().map(|(_, c, _)| c[k - 1]).sum();
            let precision = hits as f64 / (k * images) as f64;
            let recall = match options.averaging {
                Averaging::Macro if with_objects > 0 => {
                    per_image
                        .iter()
                        .filter(|(_, _, n)| *n > 0)
                        .map(|(_, c, n)| c[k - 1] as f64 / *n as f64)
                        .sum::<f64>()
                        / with_objects as f64
                }
                Averaging::Micro if total_objects > 0 => hits as f64 / total_objects as f64,
                _ => 0.0,
            };
            ProbePoint { k, precision, recall }
        })
        .collect();

    Ok(ProbeResult {
        images,
        images_without_objects: images - with_objects,
        points,
    })
}

/// Evaluates each prompt string separately.
pub fn evaluate_by_prompt(
    records: &[ProbeRecord],
    graphs: &SceneGraphs,
    k_max: usize,
    options: ProbeOptions,
) -> Result<BTreeMap<String, ProbeResult>> {
    let mut by_prompt: BTreeMap<String, Vec<ProbeRecord>> = BTreeMap::new();
    for r in records {
        by_prompt.entry(r.prompt.clone()).or_default().push(r.clone());
    }
    by_prompt
        .into_iter()
        .map(|(prompt, group)| Ok((prompt, evaluate_probe(&group, graphs, k_max, options)?)))
        .collect()
}

pub fn probe_tsv(results: &BTreeMap<String, ProbeResult>) -> String {
    let mut out = String::from("prompt\tk\tprecision\trecall\n");
    for (prompt, result) in results {
        for p in &result.points {
            let _ = writeln!(out, "{prompt}\t{}\t{:.6}\t{:.6}", p.k, p.precision, p.recall);
        }
    }
    out
}
