//! Stage 7 and orchestration: runs the seven stages over a run directory, merges the
//! survivors by category and derives the statistics report.
//!
//! A run directory holds one subdirectory per stage (`01_normalize` .. `07_merge`). Each
//! stage reads only the previous stage's directory, so any stage can be re-run from
//! persisted output. Removed documents go to `rejected/` inside the removing stage's
//! directory, which is what the statistics are computed from.

mod config;
mod stats;

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dedup_exact::ExactDeduper;
use crate::document::{Category, Document};
use crate::filters::{evaluate_document, FilterConfig, FilterError};
use crate::fuzzy::{
    fuzzy_dedup_shard, inter_shard_dedup, plan_shards, segment_key, DedupMode, DuplicateGroup, LshParams,
    PlanError, ShardCaps, ShardInput, ShardPlan,
};
use crate::jsonl::{list_jsonl_files, DocumentReader, DocumentWriter, JsonlError, ReadCounters};
use crate::langid::{LanguageIdentifier, StopwordClassifier};
use crate::metrics::annotate_metrics;
use crate::normalize::normalize_document;

pub use config::{FuzzySettings, RunConfig, RunConfigError, ShardSettings, WordListPaths};
pub use stats::{
    emit_stats_report, DerivedPercentages, FinalShares, IngestCounts, PipelineStats, Stage, StageCounts,
    StagePercent, StageTable, StatsReport, BYTE_UNIT,
};

const CHUNK: usize = 4096;
const REJECTED: &str = "rejected";
const AUDIT: &str = "audit";
const GROUPS_FILE: &str = "groups.jsonl";
const PLAN_FILE: &str = "plan.json";
const INGEST_FILE: &str = "ingest.json";
const COMPLETE_MARKER: &str = "_COMPLETE";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Config(#[from] RunConfigError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("document id {0:?} occurs more than once")]
    DuplicateId(String),
    #[error("no input at {0}")]
    MissingInput(PathBuf),
    #[error("stage {stage} has no complete output in {dir}; run the earlier stages first")]
    IncompleteStage { stage: &'static str, dir: PathBuf },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

#[cfg(feature = "parallel")]
fn try_map_docs<E, F>(docs: Vec<Document>, f: F) -> Result<Vec<Document>, E>
where
    E: Send,
    F: Fn(Document) -> Result<Document, E> + Sync + Send,
{
    use rayon::prelude::*;
    docs.into_par_iter().map(|d| if d.is_removed() { Ok(d) } else { f(d) }).collect()
}

#[cfg(not(feature = "parallel"))]
fn try_map_docs<E, F>(docs: Vec<Document>, f: F) -> Result<Vec<Document>, E>
where
    F: Fn(Document) -> Result<Document, E>,
{
    docs.into_iter().map(|d| if d.is_removed() { Ok(d) } else { f(d) }).collect()
}

/// Documents read, kept and removed by one stage invocation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFileCounts {
    pub read: u64,
    pub kept: u64,
    pub removed: u64,
    pub parse_errors: u64,
    pub missing_text: u64,
}

impl StageFileCounts {
    fn absorb(&mut self, other: StageFileCounts) {
        self.read += other.read;
        self.kept += other.kept;
        self.removed += other.removed;
        self.parse_errors += other.parse_errors;
        self.missing_text += other.missing_text;
    }

    fn skipped(&mut self, c: ReadCounters) {
        self.parse_errors += c.parse_errors;
        self.missing_text += c.missing_text;
    }
}

/// Reads `input` in chunks, transforms each chunk, and routes removed documents to
/// `rejected` (dropped when `None`) and the rest to `kept`.
fn stream_stage<F>(
    input: &Path,
    strict: bool,
    kept: &mut DocumentWriter,
    mut rejected: Option<&mut DocumentWriter>,
    mut transform: F,
) -> Result<StageFileCounts, PipelineError>
where
    F: FnMut(Vec<Document>) -> Result<Vec<Document>, PipelineError>,
{
    let mut reader = DocumentReader::open(input)?.strict(strict);
    let mut counts = StageFileCounts::default();
    loop {
        let mut chunk = Vec::with_capacity(CHUNK);
        for doc in reader.by_ref().take(CHUNK) {
            chunk.push(doc?);
        }
        if chunk.is_empty() {
            break;
        }
        counts.read += chunk.len() as u64;
        for doc in transform(chunk)? {
            if doc.is_removed() {
                counts.removed += 1;
                if let Some(r) = rejected.as_deref_mut() {
                    r.write(&doc)?;
                }
            } else {
                counts.kept += 1;
                kept.write(&doc)?;
            }
        }
    }
    counts.skipped(reader.counters());
    Ok(counts)
}

fn open_optional(path: Option<&Path>) -> Result<Option<DocumentWriter>, JsonlError> {
    path.map(DocumentWriter::create).transpose()
}

fn finish_optional(writer: Option<DocumentWriter>) -> Result<(), JsonlError> {
    writer.map(DocumentWriter::finish).transpose().map(|_| ())
}

fn normalize_into(
    input: &Path,
    strict: bool,
    ids: &mut HashSet<String>,
    kept: &mut DocumentWriter,
    rejected: Option<&mut DocumentWriter>,
) -> Result<StageFileCounts, PipelineError> {
    stream_stage(input, strict, kept, rejected, |chunk| {
        for d in &chunk {
            if !ids.insert(d.id.clone()) {
                return Err(PipelineError::DuplicateId(d.id.clone()));
            }
        }
        try_map_docs(chunk, |d| Ok(normalize_document(d)))
    })
}

/// Stage 1 over one file. Documents left empty go to `rejected` when given.
pub fn normalize_file(input: &Path, output: &Path, rejected: Option<&Path>, strict: bool) -> Result<StageFileCounts, PipelineError> {
    let mut kept = DocumentWriter::create(output)?;
    let mut rej = open_optional(rejected)?;
    let counts = normalize_into(input, strict, &mut HashSet::new(), &mut kept, rej.as_mut())?;
    kept.finish()?;
    finish_optional(rej)?;
    Ok(counts)
}

/// Stage 2 over one file.
pub fn metrics_file(
    input: &Path,
    output: &Path,
    langid: &dyn LanguageIdentifier,
    strict: bool,
) -> Result<StageFileCounts, PipelineError> {
    let mut kept = DocumentWriter::create(output)?;
    let counts = stream_stage(input, strict, &mut kept, None, |chunk| {
        try_map_docs(chunk, |d| Ok::<_, PipelineError>(annotate_metrics(d, langid)))
    })?;
    kept.finish()?;
    Ok(counts)
}

/// Stage 3 over one file. Rejected documents carry their failed filters.
pub fn filter_file(
    input: &Path,
    output: &Path,
    cfg: &FilterConfig,
    rejected: Option<&Path>,
    strict: bool,
) -> Result<StageFileCounts, PipelineError> {
    let mut kept = DocumentWriter::create(output)?;
    let mut rej = open_optional(rejected)?;
    let counts = stream_stage(input, strict, &mut kept, rej.as_mut(), |chunk| {
        Ok(try_map_docs(chunk, |d| evaluate_document(d, cfg).map(|(d, _)| d))?)
    })?;
    kept.finish()?;
    finish_optional(rej)?;
    Ok(counts)
}

fn dedup_exact_into(
    deduper: &mut ExactDeduper,
    input: &Path,
    strict: bool,
    kept: &mut DocumentWriter,
    rejected: Option<&mut DocumentWriter>,
) -> Result<StageFileCounts, PipelineError> {
    stream_stage(input, strict, kept, rejected, |mut chunk| {
        for d in chunk.iter_mut().filter(|d| !d.is_removed()) {
            deduper.observe(d);
        }
        Ok(chunk)
    })
}

/// Stage 4 over several files treated as one stream in the given order.
pub fn dedup_exact_files(
    inputs: &[PathBuf],
    output: &Path,
    rejected: Option<&Path>,
    strict: bool,
) -> Result<StageFileCounts, PipelineError> {
    let mut deduper = ExactDeduper::new();
    let mut kept = DocumentWriter::create(output)?;
    let mut rej = open_optional(rejected)?;
    let mut total = StageFileCounts::default();
    for input in inputs {
        total.absorb(dedup_exact_into(&mut deduper, input, strict, &mut kept, rej.as_mut())?);
    }
    kept.finish()?;
    finish_optional(rej)?;
    Ok(total)
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".to_string())
}

/// Stage 5: writes each input's documents to `<out_dir>/<segment>/<input stem>.jsonl`.
/// Returns document counts per segment.
pub fn segment_files(inputs: &[PathBuf], out_dir: &Path, strict: bool) -> Result<BTreeMap<String, u64>, PipelineError> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for input in inputs {
        let name = format!("{}.jsonl", file_stem(input));
        let mut writers: BTreeMap<String, DocumentWriter> = BTreeMap::new();
        for doc in DocumentReader::open(input)?.strict(strict) {
            let doc = doc?;
            if doc.is_removed() {
                continue;
            }
            let key = segment_key(&doc);
            if !writers.contains_key(&key) {
                writers.insert(key.clone(), DocumentWriter::create(out_dir.join(&key).join(&name))?);
            }
            writers.get_mut(&key).expect("just inserted").write(&doc)?;
            *counts.entry(key).or_default() += 1;
        }
        for w in writers.into_values() {
            w.finish()?;
        }
    }
    Ok(counts)
}

/// Settings for stage 6.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyOptions {
    pub params: LshParams,
    pub caps: ShardCaps,
    /// Mode for languages above the job cap; unlisted languages use intra.
    pub modes: BTreeMap<String, DedupMode>,
    /// When set, replaces `modes` for every language.
    pub mode_override: Option<DedupMode>,
    /// Segments copied through without deduplication.
    pub skip: Vec<String>,
}

impl FuzzyOptions {
    pub fn from_config(cfg: &RunConfig) -> Self {
        FuzzyOptions {
            params: cfg.lsh_params(),
            caps: cfg.shards.caps(),
            modes: cfg.shards.modes.clone(),
            mode_override: None,
            skip: cfg.fuzzy.skip.clone(),
        }
    }

    fn mode_for(&self, lang: &str) -> DedupMode {
        self.mode_override.or_else(|| self.modes.get(lang).copied()).unwrap_or_default()
    }
}

/// One line of the groups file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub survivor: String,
    pub members: Vec<String>,
    pub size: u64,
    pub lang: String,
}

impl GroupRecord {
    fn new(lang: &str, g: &DuplicateGroup) -> Self {
        GroupRecord {
            survivor: g.survivor_id.clone(),
            members: g.member_ids.iter().cloned().collect(),
            size: g.size() as u64,
            lang: lang.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FuzzyReport {
    pub plans: BTreeMap<String, ShardPlan>,
    pub groups: BTreeMap<String, Vec<DuplicateGroup>>,
    pub skipped: Vec<String>,
    pub docs_in: u64,
    pub docs_out: u64,
}

fn read_docs(files: &[PathBuf]) -> Result<Vec<Document>, PipelineError> {
    let mut docs = Vec::new();
    for f in files {
        for d in DocumentReader::open(f)?.strict(true) {
            docs.push(d?);
        }
    }
    Ok(docs)
}

/// Language segments of a segment directory: one per subdirectory, plus the directory
/// itself (named after it) when it holds JSONL files directly.
fn segments_of(dir: &Path) -> Result<BTreeMap<String, Vec<PathBuf>>, PipelineError> {
    let mut out = BTreeMap::new();
    let direct = list_jsonl_files(dir)?;
    if !direct.is_empty() {
        out.insert(file_stem(dir), direct);
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(dir)))
        .collect::<Result<_, _>>()?;
    entries.sort();
    for path in entries.into_iter().filter(|p| p.is_dir()) {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if name == REJECTED {
            continue;
        }
        let files = list_jsonl_files(&path)?;
        if !files.is_empty() {
            out.insert(name, files);
        }
    }
    Ok(out)
}

/// Stage 6 over a segment directory.
///
/// Writes `<out_dir>/<lang>.jsonl` with survivors, `<out_dir>/rejected/<lang>.jsonl`
/// with removed documents, the groups file, and the shard plans (by default
/// `<out_dir>/plan.json`).
pub fn dedup_fuzzy_dir(
    in_dir: &Path,
    out_dir: &Path,
    opts: &FuzzyOptions,
    groups_out: &Path,
    plan_out: Option<&Path>,
) -> Result<FuzzyReport, PipelineError> {
    let mut report = FuzzyReport::default();
    let mut group_writer = GroupWriter::create(groups_out)?;
    for (lang, files) in segments_of(in_dir)? {
        let out_path = out_dir.join(format!("{lang}.jsonl"));
        if opts.skip.contains(&lang) {
            log::info!("fuzzy dedup: passing {lang} through");
            let docs = read_docs(&files)?;
            report.docs_in += docs.len() as u64;
            report.docs_out += docs.len() as u64;
            crate::jsonl::write_documents(&docs, &out_path)?;
            report.skipped.push(lang);
            continue;
        }

        let mut inputs = Vec::with_capacity(files.len());
        for f in &files {
            let bytes = fs::metadata(f).map_err(io_err(f))?.len();
            let name = f.strip_prefix(in_dir).unwrap_or(f).to_string_lossy().into_owned();
            inputs.push(ShardInput { name, source: file_stem(f), bytes });
        }
        let modes = BTreeMap::from([(lang.clone(), opts.mode_for(&lang))]);
        let plan = plan_shards(&BTreeMap::from([(lang.clone(), inputs)]), &modes, opts.caps)?
            .remove(&lang)
            .expect("plan covers every language");
        let mut shards = Vec::with_capacity(plan.shards.len());
        for s in &plan.shards {
            shards.push(read_docs(&s.members.iter().map(|m| in_dir.join(m)).collect::<Vec<_>>())?);
        }
        report.docs_in += shards.iter().map(|s| s.len() as u64).sum::<u64>();
        log::info!("fuzzy dedup: {lang}, {} shard(s), {} mode", shards.len(), plan.mode);

        let (kept, removed, groups) = if plan.mode == DedupMode::Inter && shards.len() >= 2 {
            let out = inter_shard_dedup(shards, &opts.params).expect("at least two shards");
            (out.kept.into_iter().flatten().collect::<Vec<_>>(), out.removed, out.groups)
        } else {
            let (mut kept, mut removed, mut groups) = (Vec::new(), Vec::new(), Vec::new());
            for shard in shards {
                let out = fuzzy_dedup_shard(shard, &opts.params);
                kept.extend(out.kept);
                removed.extend(out.removed);
                groups.extend(out.groups);
            }
            groups.sort_by(|a, b| a.survivor_id.cmp(&b.survivor_id));
            (kept, removed, groups)
        };

        report.docs_out += kept.len() as u64;
        crate::jsonl::write_documents(&kept, &out_path)?;
        if !removed.is_empty() {
            crate::jsonl::write_documents(&removed, out_dir.join(REJECTED).join(format!("{lang}.jsonl")))?;
        }
        for g in &groups {
            group_writer.write(&GroupRecord::new(&lang, g))?;
        }
        report.plans.insert(lang.clone(), plan);
        report.groups.insert(lang, groups);
    }
    group_writer.finish()?;
    let plan_path = plan_out.unwrap_or(&out_dir.join(PLAN_FILE)).to_path_buf();
    if let Some(parent) = plan_path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let plan_json = serde_json::to_string_pretty(&report.plans).expect("plans always serialize") + "\n";
    fs::write(&plan_path, plan_json).map_err(io_err(&plan_path))?;
    Ok(report)
}

struct GroupWriter {
    path: PathBuf,
    lines: String,
}

impl GroupWriter {
    fn create(path: &Path) -> Result<Self, PipelineError> {
        Ok(GroupWriter { path: path.to_path_buf(), lines: String::new() })
    }

    fn write(&mut self, record: &GroupRecord) -> Result<(), PipelineError> {
        self.lines.push_str(&serde_json::to_string(record).expect("group records always serialize"));
        self.lines.push('\n');
        Ok(())
    }

    fn finish(self) -> Result<(), PipelineError> {
        if let Some(parent) = self.path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&self.path, self.lines).map_err(io_err(&self.path))
    }
}

/// Reads a groups file.
pub fn read_groups(path: &Path) -> Result<Vec<GroupRecord>, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                PipelineError::Jsonl(JsonlError::Malformed { path: path.to_path_buf(), line: i as u64 + 1, message: e.to_string() })
            })
        })
        .collect()
}

/// Stage 7: routes every surviving document to `<out_dir>/<category slug>.jsonl`.
/// Fails on an id seen twice. Returns document counts per category.
pub fn merge_files(inputs: &[PathBuf], out_dir: &Path) -> Result<BTreeMap<Category, u64>, PipelineError> {
    let mut seen = HashSet::new();
    let mut writers: BTreeMap<Category, DocumentWriter> = BTreeMap::new();
    let mut counts = BTreeMap::new();
    for input in inputs {
        for doc in DocumentReader::open(input)?.strict(true) {
            let doc = doc?;
            if doc.is_removed() {
                continue;
            }
            if !seen.insert(doc.id.clone()) {
                return Err(PipelineError::DuplicateId(doc.id));
            }
            let writer = match writers.entry(doc.category) {
                Entry::Occupied(e) => e.into_mut(),
                Entry::Vacant(e) => {
                    let path = out_dir.join(format!("{}.jsonl", doc.category.slug()));
                    e.insert(DocumentWriter::create(path)?)
                }
            };
            writer.write(&doc)?;
            *counts.entry(doc.category).or_default() += 1;
        }
    }
    for w in writers.into_values() {
        w.finish()?;
    }
    Ok(counts)
}

/// Recomputes the statistics of a run directory from its rejected files, merged output
/// and groups file.
pub fn collect_stats(run_dir: &Path) -> Result<PipelineStats, PipelineError> {
    let mut stats = PipelineStats::new();
    let ingest_path = run_dir.join(Stage::Normalize.dir_name()).join(INGEST_FILE);
    if ingest_path.exists() {
        let text = fs::read_to_string(&ingest_path).map_err(io_err(&ingest_path))?;
        stats.ingest = serde_json::from_str(&text).map_err(|e| PipelineError::Jsonl(JsonlError::Malformed {
            path: ingest_path.clone(),
            line: 1,
            message: e.to_string(),
        }))?;
    }
    let mut terminal = Vec::new();
    for stage in [Stage::Normalize, Stage::Filter, Stage::DedupExact, Stage::DedupFuzzy] {
        let dir = run_dir.join(stage.dir_name()).join(REJECTED);
        if dir.is_dir() {
            terminal.extend(list_jsonl_files(&dir)?);
        }
    }
    let merged = run_dir.join(Stage::Merge.dir_name());
    if merged.is_dir() {
        terminal.extend(list_jsonl_files(&merged)?);
    }
    for file in terminal {
        for doc in DocumentReader::open(&file)?.strict(true) {
            stats.record(&doc?);
        }
    }
    let groups = groups_path(run_dir);
    if groups.exists() {
        for g in read_groups(&groups)? {
            stats.record_group(g.size);
        }
    }
    Ok(stats)
}

/// Location of the groups file inside a run directory.
pub fn groups_path(run_dir: &Path) -> PathBuf {
    run_dir.join(Stage::DedupFuzzy.dir_name()).join(AUDIT).join(GROUPS_FILE)
}

/// Baseline stop-word identifier over the configured stop-word lists.
pub fn baseline_identifier(filters: &FilterConfig) -> StopwordClassifier {
    StopwordClassifier::new(filters.stopwords.clone())
}

/// The full pipeline over one run directory.
pub struct Pipeline<'a> {
    cfg: RunConfig,
    filters: FilterConfig,
    langid: Box<dyn LanguageIdentifier + 'a>,
    out_dir: PathBuf,
}

impl<'a> Pipeline<'a> {
    /// Uses the baseline identifier when `langid` is `None`.
    pub fn new(
        cfg: RunConfig,
        out_dir: impl Into<PathBuf>,
        langid: Option<Box<dyn LanguageIdentifier + 'a>>,
    ) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let filters = cfg.filter_config()?;
        let langid = langid.unwrap_or_else(|| Box::new(baseline_identifier(&filters)));
        Ok(Pipeline { cfg, filters, langid, out_dir: out_dir.into() })
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.out_dir.join(stage.dir_name())
    }

    fn fresh_dir(&self, stage: Stage) -> Result<PathBuf, PipelineError> {
        let dir = self.stage_dir(stage);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
        }
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(dir)
    }

    fn mark_complete(dir: &Path) -> Result<(), PipelineError> {
        let marker = dir.join(COMPLETE_MARKER);
        fs::write(&marker, b"").map_err(io_err(&marker))
    }

    fn previous_files(&self, stage: Stage) -> Result<Vec<PathBuf>, PipelineError> {
        let dir = self.stage_dir(stage);
        if !dir.join(COMPLETE_MARKER).exists() {
            return Err(PipelineError::IncompleteStage { stage: stage.name(), dir });
        }
        Ok(list_jsonl_files(&dir)?)
    }

    fn previous_dir(&self, stage: Stage) -> Result<PathBuf, PipelineError> {
        let dir = self.stage_dir(stage);
        if !dir.join(COMPLETE_MARKER).exists() {
            return Err(PipelineError::IncompleteStage { stage: stage.name(), dir });
        }
        Ok(dir)
    }

    /// Runs all stages on `input` (a JSONL file or a directory of them) and returns the
    /// statistics.
    pub fn run(&self, input: &Path) -> Result<PipelineStats, PipelineError> {
        self.run_stage(Stage::Normalize, Some(input))?;
        self.resume_from(Stage::Metrics)
    }

    /// Runs `start` and every later stage from the persisted output of the stage before.
    pub fn resume_from(&self, start: Stage) -> Result<PipelineStats, PipelineError> {
        for stage in Stage::ALL.into_iter().filter(|&s| s >= start) {
            self.run_stage(stage, None)?;
        }
        collect_stats(&self.out_dir)
    }

    /// Runs one stage. Only the normalize stage reads `input`; the others read the
    /// previous stage's directory.
    pub fn run_stage(&self, stage: Stage, input: Option<&Path>) -> Result<(), PipelineError> {
        log::info!("stage {}", stage.name());
        let strict = true;
        match stage {
            Stage::Normalize => {
                let input = input.ok_or_else(|| PipelineError::MissingInput(PathBuf::from("<none>")))?;
                let files = if input.is_dir() {
                    list_jsonl_files(input)?
                } else if input.is_file() {
                    vec![input.to_path_buf()]
                } else {
                    return Err(PipelineError::MissingInput(input.to_path_buf()));
                };
                let dir = self.fresh_dir(stage)?;
                let mut ids = HashSet::new();
                let mut total = StageFileCounts::default();
                for f in &files {
                    let name = format!("{}.jsonl", file_stem(f));
                    let mut kept = DocumentWriter::create(dir.join(&name))?;
                    let mut rejected = DocumentWriter::create(dir.join(REJECTED).join(&name))?;
                    total.absorb(normalize_into(f, self.cfg.strict, &mut ids, &mut kept, Some(&mut rejected))?);
                    kept.finish()?;
                    rejected.finish()?;
                }
                let ingest = IngestCounts {
                    files: files.len() as u64,
                    parse_errors: total.parse_errors,
                    missing_text: total.missing_text,
                };
                if ingest.parse_errors + ingest.missing_text > 0 {
                    log::warn!("skipped {} malformed and {} text-less input lines", ingest.parse_errors, ingest.missing_text);
                }
                let path = dir.join(INGEST_FILE);
                let json = serde_json::to_string_pretty(&ingest).expect("counts always serialize") + "\n";
                fs::write(&path, json).map_err(io_err(&path))?;
                Self::mark_complete(&dir)
            }
            Stage::Metrics => {
                let files = self.previous_files(Stage::Normalize)?;
                let dir = self.fresh_dir(stage)?;
                for f in &files {
                    metrics_file(f, &dir.join(f.file_name().expect("listed files have names")), self.langid.as_ref(), strict)?;
                }
                Self::mark_complete(&dir)
            }
            Stage::Filter => {
                let files = self.previous_files(Stage::Metrics)?;
                let dir = self.fresh_dir(stage)?;
                for f in &files {
                    let name = f.file_name().expect("listed files have names");
                    filter_file(f, &dir.join(name), &self.filters, Some(&dir.join(REJECTED).join(name)), strict)?;
                }
                Self::mark_complete(&dir)
            }
            Stage::DedupExact => {
                let files = self.previous_files(Stage::Filter)?;
                let dir = self.fresh_dir(stage)?;
                let mut deduper = ExactDeduper::new();
                for f in &files {
                    let name = f.file_name().expect("listed files have names");
                    let mut kept = DocumentWriter::create(dir.join(name))?;
                    let mut rejected = DocumentWriter::create(dir.join(REJECTED).join(name))?;
                    dedup_exact_into(&mut deduper, f, strict, &mut kept, Some(&mut rejected))?;
                    kept.finish()?;
                    rejected.finish()?;
                }
                Self::mark_complete(&dir)
            }
            Stage::Segment => {
                let files = self.previous_files(Stage::DedupExact)?;
                let dir = self.fresh_dir(stage)?;
                segment_files(&files, &dir, strict)?;
                Self::mark_complete(&dir)
            }
            Stage::DedupFuzzy => {
                let src = self.previous_dir(Stage::Segment)?;
                let dir = self.fresh_dir(stage)?;
                let audit = dir.join(AUDIT);
                dedup_fuzzy_dir(
                    &src,
                    &dir,
                    &FuzzyOptions::from_config(&self.cfg),
                    &audit.join(GROUPS_FILE),
                    Some(&audit.join(PLAN_FILE)),
                )?;
                Self::mark_complete(&dir)
            }
            Stage::Merge => {
                let files = self.previous_files(Stage::DedupFuzzy)?;
                let dir = self.fresh_dir(stage)?;
                merge_files(&files, &dir)?;
                Self::mark_complete(&dir)
            }
        }
    }
}

/// Runs the whole pipeline with the baseline language identifier.
pub fn run_pipeline(cfg: &RunConfig, input: &Path, out_dir: &Path) -> Result<PipelineStats, PipelineError> {
    Pipeline::new(cfg.clone(), out_dir, None)?.run(input)
}
