use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::args::{
    AnnotateArgs, Cli, Command, EvalDetectArgs, LossgapArgs, MaskArgs, ProbeArgs, StatsArgs, TokenizeArgs,
};
use super::config::{load_vocab, optional, required, strategy_config, RunConfig};
use crate::annotate::{Annotator, DetectionAccumulator, DetectionReport, SentenceAnnotation, Tagger};
use crate::corpus::{
    load_captions, load_scene_graphs, CaptionReader, CaptionRecord, ConcretenessTable, ErrorPolicy, JsonlReader,
    LexiconSet, StopwordSet,
};
use crate::lossgap::{class_report, class_reports_tsv, Aggregation, GroupBy, PredictionRecord, WordClass};
use crate::mask::{make_plan, PlanRecord};
use crate::promptprobe::{evaluate_by_prompt, probe_tsv, Averaging, ProbeOptions, ProbeRecord};
use crate::stats::{LengthHistogram, ReportAccumulator};
use crate::tokenize::tokenize_words;
use crate::tokenize::wordpiece_tokenize;
use crate::Error;

const CHUNK_PER_THREAD: usize = 512;

pub(super) fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let run = RunConfig::resolve(cli.config.as_deref(), cli.threads, cli.lenient)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.threads)
        .build()
        .context("building worker pool")?;
    let mut ctx = Ctx { run, pool, skipped: 0 };
    match cli.command {
        Command::Tokenize(a) => tokenize(&mut ctx, a)?,
        Command::Annotate(a) => annotate(&mut ctx, a)?,
        Command::Mask(a) => mask(&mut ctx, a)?,
        Command::Stats(a) => stats(&mut ctx, a)?,
        Command::Lossgap(a) => lossgap(&mut ctx, a)?,
        Command::Probe(a) => probe(&mut ctx, a)?,
        Command::EvalDetect(a) => eval_detect(&mut ctx, a)?,
    }
    if ctx.skipped > 0 {
        eprintln!("{}", json!({ "records_skipped": ctx.skipped }));
    }
    Ok(())
}

struct Ctx {
    run: RunConfig,
    pool: rayon::ThreadPool,
    skipped: usize,
}

impl Ctx {
    fn chunk_size(&self) -> usize {
        CHUNK_PER_THREAD * self.run.threads
    }

    /// Maps `items` through `f` on the pool, chunk by chunk, handing results
    /// to `sink` in input order. Under the lenient policy failed items are
    /// counted and dropped.
    fn ordered<T, U, I, F, S>(&mut self, items: I, f: F, mut sink: S) -> anyhow::Result<()>
    where
        I: Iterator<Item = crate::Result<T>>,
        T: Send,
        U: Send,
        F: Fn(T) -> crate::Result<U> + Sync,
        S: FnMut(U) -> anyhow::Result<()>,
    {
        let mut items = items.peekable();
        while items.peek().is_some() {
            let chunk: Vec<T> = items.by_ref().take(self.chunk_size()).collect::<crate::Result<_>>()?;
            let results: Vec<crate::Result<U>> = self.pool.install(|| chunk.into_par_iter().map(&f).collect());
            for result in results {
                match result {
                    Ok(u) => sink(u)?,
                    Err(_) if self.run.error_policy == ErrorPolicy::Skip => self.skipped += 1,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        Ok(())
    }
}

fn open_input(path: &Path) -> anyhow::Result<BufReader<File>> {
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(BufReader::new(file))
}

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => {
            let file = File::create(p).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            Box::new(BufWriter::new(file))
        }
        _ => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_json_line<T: Serialize>(out: &mut dyn Write, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    let mut out = open_output(Some(path))?;
    out.write_all(contents.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn jsonl<T: crate::corpus::JsonlRecord>(
    path: &Path,
    policy: ErrorPolicy,
) -> anyhow::Result<JsonlReader<BufReader<File>, T>> {
    Ok(JsonlReader::new(open_input(path)?, path.display().to_string(), policy))
}

fn words_of(record: &CaptionRecord) -> Vec<String> {
    match &record.words {
        Some(words) => words.clone(),
        None => crate::tokenize::pre_tokenize(&record.text),
    }
}

#[derive(Serialize)]
struct TokenizedLine {
    id: String,
    words: Vec<String>,
    pieces: Vec<String>,
    spans: Vec<[usize; 2]>,
}

fn tokenize(ctx: &mut Ctx, a: TokenizeArgs) -> anyhow::Result<()> {
    let file = ctx.run.file.clone();
    let captions = required(&a.captions, &file.captions, "captions")?;
    let vocab = load_vocab(&a.vocab, &file)?;
    let mut out = open_output(optional(&a.output, &file.output).as_deref())?;
    let mut reader = load_captions(&captions, ctx.run.error_policy)?;
    ctx.ordered(
        reader.by_ref().map(|r| r.map(|(_, rec)| rec)),
        |rec| {
            let ts = match &rec.words {
                Some(words) => tokenize_words(words, &vocab),
                None => wordpiece_tokenize(&rec.text, &vocab),
            };
            Ok(TokenizedLine {
                id: rec.id,
                spans: ts.spans.iter().map(|s| [s.start, s.end]).collect(),
                words: ts.words,
                pieces: ts.pieces,
            })
        },
        |line| write_json_line(&mut out, &line),
    )?;
    ctx.skipped += reader.skipped();
    out.flush()?;
    Ok(())
}

fn annotate(ctx: &mut Ctx, a: AnnotateArgs) -> anyhow::Result<()> {
    let file = ctx.run.file.clone();
    let captions = required(&a.captions, &file.captions, "captions")?;
    let lexicons = LexiconSet::from_files(
        &required(&a.objects, &file.objects, "objects")?,
        &required(&a.attributes, &file.attributes, "attributes")?,
        &required(&a.relationships, &file.relationships, "relationships")?,
    )?;
    let concreteness = ConcretenessTable::from_file(&required(&a.concreteness, &file.concreteness, "concreteness")?)?;
    let stopwords = StopwordSet::from_files(
        optional(&a.stopwords, &file.stopwords).as_deref(),
        optional(&a.punctuation, &file.punctuation).as_deref(),
    )?;
    let tagger = match optional(&a.pos_lexicon, &file.pos_lexicon) {
        Some(path) => Tagger::parse_lexicon(&crate::corpus::read_to_string(&path)?)?,
        None => Tagger::builtin(),
    };
    let graphs = match optional(&a.scene_graphs, &file.scene_graphs) {
        Some(path) => Some(load_scene_graphs(&path)?),
        None => None,
    };
    let annotator = Annotator {
        lexicons: &lexicons,
        stopwords: &stopwords,
        concreteness: &concreteness,
        tagger: &tagger,
    };
    let mut out = open_output(optional(&a.output, &file.output).as_deref())?;
    let mut reader = load_captions(&captions, ctx.run.error_policy)?;
    ctx.ordered(
        reader.by_ref().map(|r| r.map(|(_, rec)| rec)),
        |rec| {
            let graph = graphs.as_ref().and_then(|g| g.get(&rec.image_id));
            annotator.annotate(&rec, graph)
        },
        |ann| write_json_line(&mut out, &ann),
    )?;
    ctx.skipped += reader.skipped();
    out.flush()?;
    Ok(())
}

/// Walks captions and annotations in lockstep; both files must list the
/// same ids in the same order (as written by `annotate`).
struct Joined {
    captions: CaptionReader<BufReader<File>>,
    annotations: JsonlReader<BufReader<File>, SentenceAnnotation>,
}

impl Joined {
    fn open(captions: &Path, annotations: &Path, policy: ErrorPolicy) -> anyhow::Result<Self> {
        Ok(Self {
            captions: load_captions(captions, policy)?,
            annotations: jsonl(annotations, policy)?,
        })
    }

    fn skipped(&self) -> usize {
        self.captions.skipped() + self.annotations.skipped()
    }
}

impl Iterator for Joined {
    type Item = crate::Result<(CaptionRecord, SentenceAnnotation)>;

    fn next(&mut self) -> Option<Self::Item> {
        match (self.captions.next(), self.annotations.next()) {
            (None, None) => None,
            (Some(Err(e)), _) | (_, Some(Err(e))) => Some(Err(e)),
            (Some(Ok((_, cap))), Some(Ok((_, ann)))) if cap.id == ann.id => Some(Ok((cap, ann))),
            (Some(Ok((_, cap))), Some(Ok((line, ann)))) => Some(Err(Error::Record {
                source_name: self.annotations.source_name().to_string(),
                line,
                message: format!("annotation `{}` does not match caption `{}`", ann.id, cap.id),
            })),
            (Some(Ok((_, cap))), None) => Some(Err(Error::sentence(&cap.id, "no annotation for caption"))),
            (None, Some(Ok((_, ann)))) => Some(Err(Error::sentence(&ann.id, "annotation without caption"))),
        }
    }
}

fn mask(ctx: &mut Ctx, a: MaskArgs) -> anyhow::Result<()> {
    let file = ctx.run.file.clone();
    let captions = required(&a.captions, &file.captions, "captions")?;
    let annotations = required(&a.annotations, &file.annotations, "annotations")?;
    let vocab = load_vocab(&a.vocab, &file)?;
    let cfg = strategy_config(&a.strategy, &file)?;
    let mut out = open_output(optional(&a.output, &file.output).as_deref())?;
    let mut items = Joined::open(&captions, &annotations, ctx.run.error_policy)?;
    ctx.ordered(
        items.by_ref(),
        |(cap, ann)| {
            if words_of(&cap) != ann.words {
                return Err(Error::sentence(&cap.id, "annotation words differ from caption words"));
            }
            let ts = tokenize_words(&ann.words, &vocab);
            let plan = make_plan(&ts, &ann, &cfg, &vocab)?;
            Ok(PlanRecord::new(&ts, &plan, vocab.mask_token()))
        },
        |record| write_json_line(&mut out, &record),
    )?;
    ctx.skipped += items.skipped();
    out.flush()?;
    Ok(())
}

fn stats(ctx: &mut Ctx, a: StatsArgs) -> anyhow::Result<()> {
    let file = ctx.run.file.clone();
    let captions = required(&a.captions, &file.captions, "captions")?;
    let annotations = required(&a.annotations, &file.annotations, "annotations")?;
    let vocab = load_vocab(&a.vocab, &file)?;
    let cfg = strategy_config(&a.strategy, &file)?;
    let trials = optional(&a.trials, &file.trials).unwrap_or(1);
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()).into());
    }
    let piece_shares = a.piece_shares || file.piece_shares.unwrap_or(false);

    let mut report = ReportAccumulator::default();
    let mut hist = LengthHistogram::default();
    let mut items = Joined::open(&captions, &annotations, ctx.run.error_policy)?;
    ctx.ordered(
        items.by_ref(),
        |(_, ann)| {
            let ts = tokenize_words(&ann.words, &vocab);
            let mut acc = ReportAccumulator::default();
            acc.add_sentence(&ts, &ann, &cfg, trials)?;
            let mut h = LengthHistogram::default();
            h.add(&ts);
            Ok((acc, h))
        },
        |(acc, h)| {
            report.merge(&acc);
            hist.merge(&h);
            Ok(())
        },
    )?;
    ctx.skipped += items.skipped();

    let mut doc = serde_json::to_value(report.finish(&cfg, trials, piece_shares))?;
    if let Some(obj) = doc.as_object_mut() {
        obj.insert("mean_words_per_sentence".into(), json!(hist.mean_words()));
        obj.insert("mean_pieces_per_sentence".into(), json!(hist.mean_pieces()));
    }
    let mut out = open_output(optional(&a.output, &file.output).as_deref())?;
    serde_json::to_writer_pretty(&mut out, &doc)?;
    out.write_all(b"\n")?;
    out.flush()?;
    if let Some(path) = optional(&a.histogram, &file.histogram) {
        write_file(&path, &hist.to_tsv())?;
    }
    Ok(())
}

fn lossgap(ctx: &mut Ctx, a: LossgapArgs) -> anyhow::Result<()> {
    let file = ctx.run.file.clone();
    let predictions = required(&a.predictions, &file.predictions, "predictions")?;
    let annotations_path = required(&a.annotations, &file.annotations, "annotations")?;
    let k = optional(&a.k, &file.k).unwrap_or(5);
    let aggregation: Aggregation = optional(&a.aggregation, &file.aggregation)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or_default();
    let classes: Vec<WordClass> = match (
        optional(&a.classes, &file.classes),
        optional(&a.group_by, &file.group_by),
    ) {
        (Some(list), _) => list
            .split(',')
            .map(|c| c.trim().parse())
            .collect::<crate::Result<_>>()?,
        (None, Some(group)) => group.parse::<GroupBy>()?.classes(),
        (None, None) => WordClass::ALL.to_vec(),
    };

    let mut annotations = HashMap::new();
    let mut reader = jsonl::<SentenceAnnotation>(&annotations_path, ctx.run.error_policy)?;
    for item in reader.by_ref() {
        let (_, ann) = item?;
        annotations.insert(ann.id.clone(), ann);
    }
    ctx.skipped += reader.skipped();

    let mut records = Vec::new();
    let mut reader = jsonl::<PredictionRecord>(&predictions, ctx.run.error_policy)?;
    for item in reader.by_ref() {
        records.push(item?.1);
    }
    ctx.skipped += reader.skipped();
    if records.is_empty() {
        return Err(Error::Empty("no prediction records").into());
    }

    let reports = class_report(&records, &annotations, &classes, k, aggregation)?;
    let mut out = open_output(optional(&a.output, &file.output).as_deref())?;
    out.write_all(class_reports_tsv(&reports).as_bytes())?;
    out.flush()?;
    if let Some(path) = optional(&a.json, &file.json) {
        let doc = json!({ "k": k, "aggregation": aggregation, "records": records.len(), "classes": reports });
        write_file(&path, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    }
    Ok(())
}

fn probe(ctx: &mut Ctx, a: ProbeArgs) -> anyhow::Result<()> {
    let file = ctx.run.file.clone();
    let input = required(&a.input, &file.probe, "input")?;
    let graphs = load_scene_graphs(&required(&a.scene_graphs, &file.scene_graphs, "scene-graphs")?)?;
    let k_max = optional(&a.k_max, &file.k_max).unwrap_or(5);
    let options = ProbeOptions {
        plural_fold: a.plural_fold || file.plural_fold.unwrap_or(false),
        averaging: if a.micro || file.micro.unwrap_or(false) {
            Averaging::Micro
        } else {
            Averaging::Macro
        },
    };
    let mut records = Vec::new();
    let mut reader = jsonl::<ProbeRecord>(&input, ctx.run.error_policy)?;
    for item in reader.by_ref() {
        records.push(item?.1);
    }
    ctx.skipped += reader.skipped();

    let results = evaluate_by_prompt(&records, &graphs, k_max, options)?;
    let mut out = open_output(optional(&a.output, &file.output).as_deref())?;
    out.write_all(probe_tsv(&results).as_bytes())?;
    out.flush()?;
    if let Some(path) = optional(&a.json, &file.json) {
        write_file(&path, &(serde_json::to_string_pretty(&results)? + "\n"))?;
    }
    Ok(())
}

fn detection_tsv(report: &DetectionReport) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{:.4}", 100.0 * x));
    let mut out = String::from("class\tpredicted\ttrue_positive\tgrounded\twords\tprecision\trecall\ttoken_accuracy\n");
    for c in &report.classes {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            c.class.name(),
            c.counts.predicted,
            c.counts.true_positive,
            c.counts.grounded,
            c.counts.words,
            fmt(c.precision),
            fmt(c.recall),
            fmt(c.token_accuracy)
        ));
    }
    out
}

fn eval_detect(ctx: &mut Ctx, a: EvalDetectArgs) -> anyhow::Result<()> {
    let file = ctx.run.file.clone();
    let path = required(&a.annotations, &file.annotations, "annotations")?;
    let mut acc = DetectionAccumulator::default();
    let mut reader = jsonl::<SentenceAnnotation>(&path, ctx.run.error_policy)?;
    ctx.ordered(
        reader.by_ref().map(|r| r.map(|(_, ann)| ann)),
        |ann| {
            let mut one = DetectionAccumulator::default();
            one.add(&ann);
            Ok(one)
        },
        |one| {
            acc.merge(&one);
            Ok(())
        },
    )?;
    ctx.skipped += reader.skipped();
    let report = acc.finish();
    if report.sentences_evaluated == 0 {
        return Err(anyhow!(Error::Empty("no annotated sentence has a scene graph")));
    }
    let mut out = open_output(optional(&a.output, &file.output).as_deref())?;
    out.write_all(detection_tsv(&report).as_bytes())?;
    out.flush()?;
    Ok(())
}
