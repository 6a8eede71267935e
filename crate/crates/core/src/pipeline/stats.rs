use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::document::{Document, RemovalStage};
use crate::filters::FilterId;
use crate::fuzzy::segment_key;

/// The seven pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Normalize,
    Metrics,
    Filter,
    DedupExact,
    Segment,
    DedupFuzzy,
    Merge,
}

impl Stage {
    pub const ALL: [Stage; 7] =
        [Stage::Normalize, Stage::Metrics, Stage::Filter, Stage::DedupExact, Stage::Segment, Stage::DedupFuzzy, Stage::Merge];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Normalize => "normalize",
            Stage::Metrics => "metrics",
            Stage::Filter => "filter",
            Stage::DedupExact => "dedup_exact",
            Stage::Segment => "segment",
            Stage::DedupFuzzy => "dedup_fuzzy",
            Stage::Merge => "merge",
        }
    }

    /// Name of the stage's output directory inside a run directory.
    pub fn dir_name(self) -> &'static str {
        match self {
            Stage::Normalize => "01_normalize",
            Stage::Metrics => "02_metrics",
            Stage::Filter => "03_filter",
            Stage::DedupExact => "04_dedup_exact",
            Stage::Segment => "05_segment",
            Stage::DedupFuzzy => "06_dedup_fuzzy",
            Stage::Merge => "07_merge",
        }
    }

    pub fn of_removal(stage: RemovalStage) -> Stage {
        match stage {
            RemovalStage::Normalize => Stage::Normalize,
            RemovalStage::Filter => Stage::Filter,
            RemovalStage::DedupExact => Stage::DedupExact,
            RemovalStage::DedupFuzzy => Stage::DedupFuzzy,
        }
    }
}

/// Documents and text bytes entering and leaving one stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub docs_in: u64,
    pub docs_out: u64,
    pub bytes_in: u64,
    pub bytes_out: u64,
}

impl StageCounts {
    pub fn docs_removed(&self) -> u64 {
        self.docs_in - self.docs_out
    }

    pub fn bytes_removed(&self) -> u64 {
        self.bytes_in - self.bytes_out
    }

    fn add(&mut self, other: &StageCounts) {
        self.docs_in += other.docs_in;
        self.docs_out += other.docs_out;
        self.bytes_in += other.bytes_in;
        self.bytes_out += other.bytes_out;
    }
}

pub type StageTable = BTreeMap<Stage, StageCounts>;

/// Lines skipped while reading the raw input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestCounts {
    pub files: u64,
    pub parse_errors: u64,
    pub missing_text: u64,
}

/// Counters behind the per-filter, group-size, per-stage and language/category reports.
///
/// All byte figures are UTF-8 bytes of the normalized document text.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub ingest: IngestCounts,
    pub per_stage: StageTable,
    /// Full document bytes attributed to every filter the document failed.
    pub per_filter_removed_bytes: BTreeMap<FilterId, u64>,
    pub per_filter_removed_docs: BTreeMap<FilterId, u64>,
    /// Group size to number of groups.
    pub group_size_histogram: BTreeMap<u64, u64>,
    pub per_language: BTreeMap<String, StageTable>,
    pub per_category: BTreeMap<String, StageTable>,
    /// Surviving bytes, language then category.
    pub final_bytes: BTreeMap<String, BTreeMap<String, u64>>,
    pub final_docs: BTreeMap<String, BTreeMap<String, u64>>,
}

fn empty_table() -> StageTable {
    Stage::ALL.iter().map(|&s| (s, StageCounts::default())).collect()
}

impl PipelineStats {
    pub fn new() -> Self {
        PipelineStats {
            per_stage: empty_table(),
            per_filter_removed_bytes: FilterId::ALL.iter().map(|&f| (f, 0)).collect(),
            per_filter_removed_docs: FilterId::ALL.iter().map(|&f| (f, 0)).collect(),
            ..Default::default()
        }
    }

    /// Accounts one document in its terminal state: removed at some stage, or surviving
    /// to the merged output.
    pub fn record(&mut self, doc: &Document) {
        let bytes = doc.text_bytes();
        let removed_at = doc.removed_stage.map(Stage::of_removal);
        let lang = segment_key(doc);
        let category = doc.category.name().to_string();

        let mut trace = empty_table();
        for stage in Stage::ALL {
            if removed_at.is_some_and(|r| stage > r) {
                break;
            }
            let survived = removed_at != Some(stage);
            let c = trace.get_mut(&stage).expect("all stages present");
            c.docs_in = 1;
            c.bytes_in = bytes;
            if survived {
                c.docs_out = 1;
                c.bytes_out = bytes;
            }
        }
        for (table, key) in [(&mut self.per_language, lang.clone()), (&mut self.per_category, category.clone())] {
            let t = table.entry(key).or_insert_with(empty_table);
            for (stage, c) in &trace {
                t.get_mut(stage).expect("all stages present").add(c);
            }
        }
        for (stage, c) in &trace {
            self.per_stage.get_mut(stage).expect("all stages present").add(c);
        }

        match doc.removed_stage {
            None => {
                *self.final_bytes.entry(lang.clone()).or_default().entry(category.clone()).or_default() += bytes;
                *self.final_docs.entry(lang).or_default().entry(category).or_default() += 1;
            }
            Some(RemovalStage::Filter) => {
                for f in &doc.filters_failed {
                    *self.per_filter_removed_bytes.entry(*f).or_default() += bytes;
                    *self.per_filter_removed_docs.entry(*f).or_default() += 1;
                }
            }
            Some(_) => {}
        }
    }

    pub fn record_group(&mut self, size: u64) {
        *self.group_size_histogram.entry(size).or_default() += 1;
    }

    pub fn total_final_bytes(&self) -> u64 {
        self.final_bytes.values().flat_map(|row| row.values()).sum()
    }

    /// Checks the accounting identities: per-stage conservation, chaining between stages,
    /// and agreement of the breakdowns with the totals. Returns the first violation.
    pub fn check_consistency(&self) -> Result<(), String> {
        let mut previous: Option<(Stage, StageCounts)> = None;
        for (&stage, c) in &self.per_stage {
            if c.docs_out > c.docs_in || c.bytes_out > c.bytes_in {
                return Err(format!("{}: output exceeds input", stage.name()));
            }
            if let Some((p, pc)) = previous {
                if pc.docs_out != c.docs_in || pc.bytes_out != c.bytes_in {
                    return Err(format!("{} output does not match {} input", p.name(), stage.name()));
                }
            }
            previous = Some((stage, *c));
        }
        for (label, breakdown) in [("language", &self.per_language), ("category", &self.per_category)] {
            for stage in Stage::ALL {
                let mut sum = StageCounts::default();
                for table in breakdown.values() {
                    sum.add(&table[&stage]);
                }
                if sum != self.per_stage[&stage] {
                    return Err(format!("per-{label} counts for {} do not sum to the total", stage.name()));
                }
            }
        }
        let merged = self.per_stage[&Stage::Merge];
        let final_docs: u64 = self.final_docs.values().flat_map(|r| r.values()).sum();
        if merged.bytes_out != self.total_final_bytes() || merged.docs_out != final_docs {
            return Err("final matrix does not match merge output".into());
        }
        for (lang, row) in &self.final_bytes {
            let expected = self.per_language.get(lang).map_or(0, |t| t[&Stage::Merge].bytes_out);
            if row.values().sum::<u64>() != expected {
                return Err(format!("final matrix row {lang} does not match its language total"));
            }
        }
        let mut by_category: BTreeMap<&str, u64> = BTreeMap::new();
        for row in self.final_bytes.values() {
            for (cat, b) in row {
                *by_category.entry(cat).or_default() += b;
            }
        }
        for (cat, table) in &self.per_category {
            if by_category.get(cat.as_str()).copied().unwrap_or(0) != table[&Stage::Merge].bytes_out {
                return Err(format!("final matrix column {cat} does not match its category total"));
            }
        }
        Ok(())
    }
}

fn percent(part: u64, whole: u64) -> f64 {
    if whole == 0 { 0.0 } else { 100.0 * part as f64 / whole as f64 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagePercent {
    pub docs_removed: f64,
    pub bytes_removed: f64,
}

/// Shares of the final dataset, in percent of its total text bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalShares {
    pub by_language: BTreeMap<String, f64>,
    pub by_category: BTreeMap<String, f64>,
    pub matrix: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedPercentages {
    /// Removed share of each stage's input.
    pub per_stage: BTreeMap<Stage, StagePercent>,
    /// Bytes removed over the whole pipeline, as a share of normalized input bytes.
    pub total_bytes_removed: f64,
    pub final_shares: FinalShares,
}

/// The report written to disk: raw counters plus derived percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub byte_unit: String,
    pub stats: PipelineStats,
    pub percentages: DerivedPercentages,
}

pub const BYTE_UNIT: &str = "UTF-8 bytes of normalized document text";

impl StatsReport {
    pub fn new(stats: &PipelineStats) -> Self {
        let per_stage = stats
            .per_stage
            .iter()
            .map(|(&s, c)| {
                (s, StagePercent { docs_removed: percent(c.docs_removed(), c.docs_in), bytes_removed: percent(c.bytes_removed(), c.bytes_in) })
            })
            .collect();
        let input = stats.per_stage.get(&Stage::Normalize).map_or(0, |c| c.bytes_in);
        let total = stats.total_final_bytes();

        let mut by_language = BTreeMap::new();
        let mut by_category: BTreeMap<String, f64> = BTreeMap::new();
        let mut matrix: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        let mut category_bytes: BTreeMap<&str, u64> = BTreeMap::new();
        for (lang, row) in &stats.final_bytes {
            by_language.insert(lang.clone(), percent(row.values().sum(), total));
            for (cat, &b) in row {
                matrix.entry(lang.clone()).or_default().insert(cat.clone(), percent(b, total));
                *category_bytes.entry(cat).or_default() += b;
            }
        }
        for (cat, b) in category_bytes {
            by_category.insert(cat.to_string(), percent(b, total));
        }

        StatsReport {
            byte_unit: BYTE_UNIT.to_string(),
            stats: stats.clone(),
            percentages: DerivedPercentages {
                per_stage,
                total_bytes_removed: percent(input - total.min(input), input),
                final_shares: FinalShares { by_language, by_category, matrix },
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("stats always serialize");
        s.push('\n');
        s
    }
}

/// Writes the JSON stats report.
pub fn emit_stats_report(stats: &PipelineStats, path: impl AsRef<Path>) -> std::io::Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, StatsReport::new(stats).to_json())
}
