//! `curate`: command-line front end for the corpus curation pipeline.

mod http_langid;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use curation::fuzzy::{DedupMode, LshParams, ShardCaps};
use curation::jsonl::list_jsonl_files;
use curation::pipeline::{
    self, baseline_identifier, collect_stats, dedup_fuzzy_dir, emit_stats_report, FuzzyOptions, Pipeline, RunConfig,
    Stage, StageFileCounts, StatsReport,
};
use curation::synth::pipeline_fixture;
use curation::{FilterConfig, LanguageIdentifier};

use http_langid::HttpIdentifier;

#[derive(Parser)]
#[command(name = "curate", version, about = "Normalize, filter and deduplicate JSONL text corpora")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stage 1: strip non-printing characters, unify whitespace, apply NFC.
    Normalize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to write documents left empty by normalization.
        #[arg(long)]
        rejected: Option<PathBuf>,
        #[command(flatten)]
        read: ReadOpts,
    },
    /// Stage 2: attach language, character, byte, word and sentence counts and an MD5.
    Metrics {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `baseline` or `external:<url>` (POST {"text"} -> {"lang","confidence"}).
        #[arg(long, default_value = "baseline")]
        langid: String,
        /// Filter config whose stop-word lists the baseline identifier uses.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        read: ReadOpts,
    },
    /// Stage 3: quality filters per the activation matrix.
    Filter {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Filter matrix; the shipped matrix when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write removed documents, with their failed filters, to this file.
        #[arg(long)]
        keep_rejected: Option<PathBuf>,
        #[command(flatten)]
        read: ReadOpts,
    },
    /// Stage 4: remove byte-identical documents; the first occurrence is kept.
    DedupExact {
        /// Files, or directories of .jsonl files, read as one stream in the given order.
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rejected: Option<PathBuf>,
        #[command(flatten)]
        read: ReadOpts,
    },
    /// Stage 5: split documents into per-language directories.
    Segment {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        read: ReadOpts,
    },
    /// Stage 6: MinHash-LSH near-duplicate removal per language segment.
    DedupFuzzy(FuzzyArgs),
    /// Stage 7: route surviving documents to one file per category.
    Merge {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// All seven stages, persisting every stage under the output directory.
    Run {
        /// Run configuration (TOML); defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configured MinHash seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Stats report path; `<out>/stats.json` when omitted.
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long, default_value = "baseline")]
        langid: String,
        /// Re-run from this stage using the persisted output of the stage before it.
        #[arg(long, value_parser = parse_stage)]
        from: Option<Stage>,
    },
    /// Recompute the stats report of an existing run directory.
    Stats {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the synthetic 500-document fixture with planted defects.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print a shipped default configuration.
    DefaultConfig {
        #[arg(value_enum)]
        which: ConfigKind,
    },
}

#[derive(Args)]
struct ReadOpts {
    /// Abort on malformed input lines instead of skipping them.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct FuzzyArgs {
    /// Segment directory: one subdirectory per language, or a single language's files.
    #[arg(long)]
    shards: PathBuf,
    /// Directory for the deduplicated `<lang>.jsonl` files.
    #[arg(long)]
    out: PathBuf,
    /// Forces one mode for every language; otherwise the configured per-language modes.
    #[arg(long)]
    mode: Option<DedupMode>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    jaccard: f64,
    #[arg(long, default_value_t = 10)]
    shingle: usize,
    #[arg(long, default_value_t = 10)]
    hashes: usize,
    #[arg(long, default_value_t = 2)]
    bands: usize,
    /// Largest job (one shard intra, two shards inter) in input bytes.
    #[arg(long, default_value_t = ShardCaps::default().max_job_bytes)]
    max_shard_bytes: u64,
    #[arg(long)]
    groups_out: PathBuf,
    /// Also write the shard plan as JSON.
    #[arg(long)]
    plan_out: Option<PathBuf>,
    /// Segments passed through untouched.
    #[arg(long, value_delimiter = ',', default_value = "code")]
    skip: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConfigKind {
    Filters,
    Run,
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    Stage::ALL
        .into_iter()
        .find(|st| st.name() == s || st.dir_name() == s)
        .ok_or_else(|| {
            let names: Vec<&str> = Stage::ALL.iter().map(|st| st.name()).collect();
            format!("unknown stage {s:?}; expected one of {}", names.join(", "))
        })
}

fn identifier(choice: &str, filters: &FilterConfig) -> Result<Box<dyn LanguageIdentifier>> {
    if choice == "baseline" {
        return Ok(Box::new(baseline_identifier(filters)));
    }
    match choice.strip_prefix("external:") {
        Some(url) if !url.is_empty() => Ok(Box::new(HttpIdentifier::connect(url)?)),
        _ => bail!("--langid must be `baseline` or `external:<url>`, got {choice:?}"),
    }
}

fn filter_config(path: Option<&Path>) -> Result<FilterConfig> {
    match path {
        Some(p) => FilterConfig::from_path(p).with_context(|| format!("loading filter config {}", p.display())),
        None => Ok(FilterConfig::default()),
    }
}

/// Expands directories into their .jsonl files, keeping the given order otherwise.
fn expand_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            out.extend(list_jsonl_files(p)?);
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            bail!("input {} does not exist", p.display());
        }
    }
    Ok(out)
}

fn report(stage: &str, c: StageFileCounts) {
    println!("{stage}: read {}, kept {}, removed {}", c.read, c.kept, c.removed);
    if c.parse_errors + c.missing_text > 0 {
        println!("{stage}: skipped {} malformed and {} text-less lines", c.parse_errors, c.missing_text);
    }
}

fn print_summary(report: &StatsReport) {
    let s = &report.stats;
    println!("{:<12} {:>9} {:>9} {:>14} {:>14}", "stage", "docs_in", "docs_out", "bytes_in", "bytes_out");
    for (stage, c) in &s.per_stage {
        println!("{:<12} {:>9} {:>9} {:>14} {:>14}", stage.name(), c.docs_in, c.docs_out, c.bytes_in, c.bytes_out);
    }
    println!("bytes removed: {:.2}%", report.percentages.total_bytes_removed);
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Normalize { input, out, rejected, read } => {
            report("normalize", pipeline::normalize_file(&input, &out, rejected.as_deref(), read.strict)?);
        }
        Command::Metrics { input, out, langid, config, read } => {
            let filters = filter_config(config.as_deref())?;
            let id = identifier(&langid, &filters)?;
            report("metrics", pipeline::metrics_file(&input, &out, id.as_ref(), read.strict)?);
        }
        Command::Filter { input, out, config, keep_rejected, read } => {
            let cfg = filter_config(config.as_deref())?;
            report("filter", pipeline::filter_file(&input, &out, &cfg, keep_rejected.as_deref(), read.strict)?);
        }
        Command::DedupExact { inputs, out, rejected, read } => {
            let files = expand_inputs(&inputs)?;
            report("dedup-exact", pipeline::dedup_exact_files(&files, &out, rejected.as_deref(), read.strict)?);
        }
        Command::Segment { inputs, out_dir, read } => {
            let files = expand_inputs(&inputs)?;
            for (lang, n) in pipeline::segment_files(&files, &out_dir, read.strict)? {
                println!("{lang}: {n}");
            }
        }
        Command::DedupFuzzy(a) => {
            let params = LshParams {
                shingle_n: a.shingle,
                num_hashes: a.hashes,
                bands: a.bands,
                jaccard_threshold: a.jaccard,
                master_seed: a.seed,
            };
            params.validate()?;
            if a.max_shard_bytes == 0 {
                bail!("--max-shard-bytes must be positive");
            }
            let defaults = RunConfig::default();
            let opts = FuzzyOptions {
                params,
                caps: ShardCaps { max_job_bytes: a.max_shard_bytes },
                modes: defaults.shards.modes,
                mode_override: a.mode,
                skip: a.skip,
            };
            let r = dedup_fuzzy_dir(&a.shards, &a.out, &opts, &a.groups_out, a.plan_out.as_deref())?;
            for (lang, plan) in &r.plans {
                let groups = r.groups.get(lang).map_or(0, Vec::len);
                println!("{lang}: {} shard(s), {} mode, {} group(s)", plan.shards.len(), plan.mode, groups);
            }
            println!("dedup-fuzzy: read {}, kept {}, removed {}", r.docs_in, r.docs_out, r.docs_in - r.docs_out);
        }
        Command::Merge { inputs, out_dir } => {
            let files = expand_inputs(&inputs)?;
            for (category, n) in pipeline::merge_files(&files, &out_dir)? {
                println!("{category}: {n}");
            }
        }
        Command::Run { config, input, out, seed, stats, langid, from } => {
            let mut cfg = match &config {
                Some(p) => RunConfig::from_path(p).with_context(|| format!("loading run config {}", p.display()))?,
                None => RunConfig::default(),
            };
            if seed.is_some() {
                cfg.seed = seed;
            }
            let filters = cfg.filter_config()?;
            let id = identifier(&langid, &filters)?;
            let pipeline = Pipeline::new(cfg, &out, Some(id))?;
            let result = match (from, input) {
                (Some(Stage::Normalize) | None, Some(input)) => pipeline.run(&input)?,
                (Some(Stage::Normalize) | None, None) => bail!("--in is required unless resuming with --from"),
                (Some(stage), _) => pipeline.resume_from(stage)?,
            };
            let path = stats.unwrap_or_else(|| out.join("stats.json"));
            emit_stats_report(&result, &path).with_context(|| format!("writing {}", path.display()))?;
            print_summary(&StatsReport::new(&result));
            println!("stats: {}", path.display());
        }
        Command::Stats { run, out } => {
            let stats = collect_stats(&run)?;
            stats.check_consistency().map_err(anyhow::Error::msg)?;
            let report = StatsReport::new(&stats);
            match out {
                Some(p) => emit_stats_report(&stats, &p)?,
                None => print!("{}", report.to_json()),
            }
        }
        Command::Synth { out, seed } => {
            let fixture = pipeline_fixture(seed);
            fixture.write(&out)?;
            fs::write(out.join("truth.json"), serde_json::to_string_pretty(&fixture.truth)? + "\n")?;
            println!("wrote {} documents to {}", fixture.truth.documents, out.display());
        }
        Command::DefaultConfig { which } => match which {
            ConfigKind::Filters => print!("{}", FilterConfig::shipped_toml()),
            ConfigKind::Run => print!("{}", toml::to_string_pretty(&RunConfig::default())?),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
