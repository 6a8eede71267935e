use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::thread;

fn curate(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curate")).args(args).current_dir(cwd).output().unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = curate(args, cwd);
    assert!(out.status.success(), "curate {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn jsonl_values(path: &Path) -> Vec<serde_json::Value> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn fixture(dir: &Path) {
    ok(&["synth", "--out", "in", "--seed", "21"], dir);
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    for name in ["a", "b"] {
        let stats = format!("{name}.stats.json");
        ok(&["run", "--in", "in", "--out", name, "--seed", "7", "--stats", &stats], d);
    }
    assert_eq!(tree(&d.join("a")), tree(&d.join("b")));
    assert_eq!(fs::read(d.join("a.stats.json")).unwrap(), fs::read(d.join("b.stats.json")).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&fs::read(d.join("a.stats.json")).unwrap()).unwrap();
    assert_eq!(report["byte_unit"], "UTF-8 bytes of normalized document text");
    assert_eq!(report["stats"]["per_stage"]["normalize"]["docs_in"], 500);
}

#[test]
fn stage_commands_reproduce_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    ok(&["run", "--in", "in", "--out", "full", "--seed", "3"], d);

    let mut names: Vec<String> = fs::read_dir(d.join("in"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".jsonl"))
        .collect();
    names.sort();
    for n in &names {
        ok(&["normalize", "--in", &format!("in/{n}"), "--out", &format!("s1/{n}")], d);
        ok(&["metrics", "--in", &format!("s1/{n}"), "--out", &format!("s2/{n}")], d);
        ok(&["filter", "--in", &format!("s2/{n}"), "--out", &format!("s3/{n}"), "--keep-rejected", &format!("s3r/{n}")], d);
    }
    ok(&["dedup-exact", "--in", "s3", "--out", "s4/all.jsonl"], d);
    ok(&["segment", "--in", "s4/all.jsonl", "--out-dir", "s5"], d);
    ok(&["dedup-fuzzy", "--shards", "s5", "--out", "s6", "--seed", "3", "--groups-out", "groups.jsonl"], d);
    ok(&["merge", "--in", "s6", "--out-dir", "s7"], d);

    let full = tree(&d.join("full/07_merge"));
    let staged = tree(&d.join("s7"));
    let strip = |t: BTreeMap<PathBuf, Vec<u8>>| -> BTreeMap<PathBuf, Vec<u8>> {
        t.into_iter().filter(|(p, _)| p.extension().is_some_and(|e| e == "jsonl")).collect()
    };
    assert_eq!(strip(full), strip(staged));

    let rejected = jsonl_values(&d.join("s3r/web.jsonl"));
    assert!(!rejected.is_empty());
    assert!(rejected.iter().all(|r| !r["meta"]["filters_failed"].as_array().unwrap().is_empty()));
    for g in jsonl_values(&d.join("groups.jsonl")) {
        let members = g["members"].as_array().unwrap();
        assert_eq!(g["size"].as_u64().unwrap() as usize, members.len());
        assert_eq!(g["survivor"], members[0]);
    }
}

#[test]
fn inter_mode_with_small_shards_matches_single_shard() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    ok(&["run", "--in", "in", "--out", "full", "--seed", "5"], d);
    ok(
        &["dedup-fuzzy", "--shards", "full/05_segment", "--out", "single", "--seed", "5", "--groups-out", "g1.jsonl"],
        d,
    );
    // Each language segment holds one file per source; an inter shard may hold half a
    // job, so this cap fits the largest file but not every pair of files.
    let largest = tree(&d.join("full/05_segment")).values().map(Vec::len).max().unwrap();
    let cap = (2 * largest).to_string();
    ok(
        &[
            "dedup-fuzzy",
            "--shards",
            "full/05_segment",
            "--out",
            "sharded",
            "--seed",
            "5",
            "--mode",
            "inter",
            "--max-shard-bytes",
            &cap,
            "--groups-out",
            "g2.jsonl",
            "--plan-out",
            "plan.json",
        ],
        d,
    );
    let plan: serde_json::Value = serde_json::from_slice(&fs::read(d.join("plan.json")).unwrap()).unwrap();
    let shards = plan["sv"]["shards"].as_array().unwrap().len();
    assert!(shards >= 2, "expected several sv shards, got {shards}");
    let ids = |dir: &str| -> BTreeMap<String, Vec<String>> {
        fs::read_dir(d.join(dir))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .map(|p| {
                let mut v: Vec<String> =
                    jsonl_values(&p).iter().map(|r| r["id"].as_str().unwrap().to_string()).collect();
                v.sort();
                (p.file_name().unwrap().to_string_lossy().into_owned(), v)
            })
            .collect()
    };
    assert_eq!(ids("single"), ids("sharded"));
    assert_eq!(ids("single"), ids("full/06_dedup_fuzzy"));
}

#[test]
fn resume_reproduces_stats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    ok(&["run", "--in", "in", "--out", "r", "--seed", "2", "--stats", "first.json"], d);
    ok(&["run", "--out", "r", "--seed", "2", "--from", "dedup_exact", "--stats", "second.json"], d);
    assert_eq!(fs::read(d.join("first.json")).unwrap(), fs::read(d.join("second.json")).unwrap());
    ok(&["stats", "--run", "r", "--out", "third.json"], d);
    assert_eq!(fs::read(d.join("first.json")).unwrap(), fs::read(d.join("third.json")).unwrap());
}

#[test]
fn run_config_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    fs::write(d.join("filters.toml"), "[subsets.\"Web CC\"]\nfilters = [4]\n").unwrap();
    fs::write(d.join("run.toml"), "filters = \"filters.toml\"\nseed = 1\n[fuzzy]\nskip = [\"code\", \"sv\"]\n").unwrap();
    ok(&["run", "--config", "run.toml", "--in", "in", "--out", "r"], d);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(d.join("r/stats.json")).unwrap()).unwrap();
    let removed = &report["stats"]["per_filter_removed_docs"];
    assert!(removed["document_length"].as_u64().unwrap() > 0);
    assert_eq!(removed["stop_word"], 0);
    assert_eq!(report["stats"]["per_language"]["sv"]["dedup_fuzzy"]["docs_in"], report["stats"]["per_language"]["sv"]["dedup_fuzzy"]["docs_out"]);

    fs::write(d.join("bad.toml"), "[lsh]\nbands = 3\n").unwrap();
    let out = curate(&["run", "--config", "bad.toml", "--in", "in", "--out", "r2"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bands"));
}

/// Answers every request with the given language.
fn fake_langid_server(lang: &'static str) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut writer = stream;
                loop {
                    let mut length = 0usize;
                    let mut line = String::new();
                    loop {
                        line.clear();
                        if reader.read_line(&mut line).unwrap_or(0) == 0 {
                            return;
                        }
                        if line == "\r\n" {
                            break;
                        }
                        if let Some((k, v)) = line.split_once(':') {
                            if k.eq_ignore_ascii_case("content-length") {
                                length = v.trim().parse().unwrap();
                            }
                        }
                    }
                    let mut body = vec![0; length];
                    reader.read_exact(&mut body).unwrap();
                    let request: serde_json::Value = serde_json::from_slice(&body).unwrap();
                    assert!(request["text"].is_string());
                    let reply = format!("{{\"lang\":\"{lang}\",\"confidence\":0.9}}");
                    let head = format!(
                        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n",
                        reply.len()
                    );
                    if writer.write_all(head.as_bytes()).and_then(|_| writer.write_all(reply.as_bytes())).is_err() {
                        return;
                    }
                }
            });
        }
    });
    format!("http://{addr}/identify")
}

#[test]
fn external_language_identifier() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    let url = fake_langid_server("is");
    ok(&["normalize", "--in", "in/books.jsonl", "--out", "n.jsonl"], d);
    ok(&["metrics", "--in", "n.jsonl", "--out", "m.jsonl", "--langid", &format!("external:{url}")], d);
    let records = jsonl_values(&d.join("m.jsonl"));
    assert!(!records.is_empty());
    assert!(records.iter().all(|r| r["meta"]["lang"] == "is"));

    let out = curate(&["metrics", "--in", "n.jsonl", "--out", "x.jsonl", "--langid", "external:http://127.0.0.1:9/none"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not usable"));
}

#[test]
fn default_configs_parse() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("filters.toml"), ok(&["default-config", "filters"], d)).unwrap();
    let mut run = ok(&["default-config", "run"], d);
    run.insert_str(0, "filters = \"filters.toml\"\n");
    fs::write(d.join("run.toml"), run).unwrap();
    fs::create_dir(d.join("in")).unwrap();
    ok(&["run", "--config", "run.toml", "--in", "in", "--out", "r"], d);
}

#[test]
fn missing_stage_output_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = curate(&["run", "--out", "r", "--from", "filter"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("metrics"));
}
