use std::fs;
use std::path::Path;

use curation::jsonl::{list_jsonl_files, read_all};
use curation::pipeline::{collect_stats, groups_path, read_groups, run_pipeline, Pipeline, RunConfig, Stage, StatsReport};
use curation::synth::pipeline_fixture;

fn count_records(dir: &Path) -> u64 {
    list_jsonl_files(dir).unwrap().iter().map(|f| read_all(f).unwrap().0.len() as u64).sum()
}

fn seeded(seed: u64) -> RunConfig {
    RunConfig { seed: Some(seed), ..RunConfig::default() }
}

#[test]
fn planted_defects_are_removed_at_their_stage() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = pipeline_fixture(11);
    fixture.write(&dir.path().join("in")).unwrap();
    let stats = run_pipeline(&seeded(42), &dir.path().join("in"), &dir.path().join("out")).unwrap();
    let t = &fixture.truth;
    let s = &stats.per_stage;
    assert_eq!(stats.ingest.parse_errors, t.malformed_lines);
    assert_eq!(s[&Stage::Normalize].docs_in, t.documents);
    assert_eq!(s[&Stage::Normalize].docs_removed(), t.normalize_removed);
    assert_eq!(s[&Stage::Filter].docs_removed(), t.filter_removed);
    assert_eq!(s[&Stage::DedupExact].docs_removed(), t.exact_removed);
    assert_eq!(s[&Stage::DedupFuzzy].docs_removed(), t.fuzzy_removed);
    assert_eq!(s[&Stage::Merge].docs_out, t.survivors);
    stats.check_consistency().unwrap();
}

#[test]
fn stage_outputs_match_counters() {
    let dir = tempfile::tempdir().unwrap();
    pipeline_fixture(12).write(&dir.path().join("in")).unwrap();
    let out = dir.path().join("out");
    let stats = run_pipeline(&seeded(1), &dir.path().join("in"), &out).unwrap();
    for stage in [Stage::Normalize, Stage::Metrics, Stage::Filter, Stage::DedupExact, Stage::DedupFuzzy, Stage::Merge] {
        assert_eq!(count_records(&out.join(stage.dir_name())), stats.per_stage[&stage].docs_out, "{stage:?}");
    }
    let segmented: u64 = fs::read_dir(out.join("05_segment"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .map(|p| count_records(&p))
        .sum();
    assert_eq!(segmented, stats.per_stage[&Stage::Segment].docs_out);
    assert_eq!(collect_stats(&out).unwrap(), stats);
}

#[test]
fn group_histogram_accounts_for_fuzzy_removals() {
    let dir = tempfile::tempdir().unwrap();
    pipeline_fixture(13).write(&dir.path().join("in")).unwrap();
    let out = dir.path().join("out");
    let stats = run_pipeline(&seeded(5), &dir.path().join("in"), &out).unwrap();
    let groups = read_groups(&groups_path(&out)).unwrap();
    let members: u64 = stats.group_size_histogram.iter().map(|(size, n)| size * n).sum();
    let survivors = groups.len() as u64;
    assert_eq!(members, stats.per_stage[&Stage::DedupFuzzy].docs_removed() + survivors);
    for g in &groups {
        assert_eq!(g.size as usize, g.members.len());
        assert_eq!(&g.survivor, g.members.iter().min().unwrap());
    }
}

#[test]
fn clean_output_is_a_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    pipeline_fixture(14).write(&dir.path().join("in")).unwrap();
    let first = dir.path().join("first");
    run_pipeline(&seeded(8), &dir.path().join("in"), &first).unwrap();
    let stats = run_pipeline(&seeded(8), &first.join("07_merge"), &dir.path().join("second")).unwrap();
    for (stage, c) in &stats.per_stage {
        assert_eq!(c.docs_removed(), 0, "{stage:?}");
    }
}

#[test]
fn resuming_a_stage_reproduces_downstream_output() {
    let dir = tempfile::tempdir().unwrap();
    pipeline_fixture(15).write(&dir.path().join("in")).unwrap();
    let out = dir.path().join("out");
    let pipeline = Pipeline::new(seeded(3), &out, None).unwrap();
    let stats = pipeline.run(&dir.path().join("in")).unwrap();
    let merged = fs::read(out.join("07_merge/web_cc.jsonl")).unwrap();
    let again = pipeline.resume_from(Stage::Filter).unwrap();
    assert_eq!(again, stats);
    assert_eq!(fs::read(out.join("07_merge/web_cc.jsonl")).unwrap(), merged);
}

#[test]
fn report_percentages_sum_to_one_hundred() {
    let dir = tempfile::tempdir().unwrap();
    pipeline_fixture(16).write(&dir.path().join("in")).unwrap();
    let stats = run_pipeline(&seeded(2), &dir.path().join("in"), &dir.path().join("out")).unwrap();
    let report = StatsReport::new(&stats);
    let shares = &report.percentages.final_shares;
    let sum: f64 = shares.matrix.values().flat_map(|r| r.values()).sum();
    assert!((sum - 100.0).abs() < 0.1);
    assert!(shares.by_language.contains_key("code"));
}
