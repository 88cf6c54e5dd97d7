use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cochange::ingest::HistorySnapshot;
use cochange::synth::{fixtures, generate, SyntheticConfig};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cochange"));
    c.env_remove("COCHANGE_OUTPUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn synthetic_snapshot(dir: &Path, commits: usize) -> PathBuf {
    let g = generate(&SyntheticConfig { seed: 21, total_commits: commits, ..Default::default() });
    let path = dir.join("synthetic.jsonl");
    HistorySnapshot::new("synthetic", g).save(&path).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn evaluate_writes_reports_and_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let snap = tmp.path().join("fixture.jsonl");
    HistorySnapshot::new("fixture", fixtures::eligible_commit()).save(&snap).unwrap();
    let out = tmp.path().join("out");
    let o = run(&["evaluate", "--snapshot", s(&snap), "--pair", "full,fp-no-merge", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("3 events"));
    let csv = fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["events"], 3);
    // rationals kept exact in JSON
    assert!(summary["a"]["success_rate"]["den"].is_number());

    let meta: serde_json::Value = serde_json::from_slice(&fs::read(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "evaluate");
    assert_eq!(meta["snapshot"]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(meta["config"]["fairness"], true);
    assert_eq!(meta["outputs"], serde_json::json!(["records.csv", "summary.json"]));
}

#[test]
fn evaluate_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let snap = synthetic_snapshot(tmp.path(), 120);
    let go = |name: &str| {
        let out = tmp.path().join(name);
        let o = run(&["evaluate", "--snapshot", s(&snap), "--pair", "full,fp-merge", "--out", s(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        (fs::read(out.join("records.csv")).unwrap(), fs::read(out.join("summary.json")).unwrap())
    };
    assert_eq!(go("one"), go("two"));
}

#[test]
fn missing_snapshot_is_a_usage_error() {
    let o = run(&["evaluate", "--pair", "full,fp-merge"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--snapshot"));
    assert!(stderr(&o).to_lowercase().contains("usage"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = run(&["evaluate", "--snapshot", "x", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("evaluate"));
}

#[test]
fn corrupt_snapshot_is_a_data_error_with_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let snap = tmp.path().join("bad.jsonl");
    let good = HistorySnapshot::new("f", fixtures::linear(3)).to_bytes();
    let mut text = String::from_utf8(good).unwrap();
    text.push_str("{not json\n");
    fs::write(&snap, text).unwrap();
    let out = tmp.path().join("out");
    let o = run(&["snapshot-validate", "--snapshot", s(&snap), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":5:"), "{}", stderr(&o));
}

#[test]
fn profile_mixing_requires_override() {
    let tmp = tempfile::tempdir().unwrap();
    let snap = tmp.path().join("f.jsonl");
    HistorySnapshot::new("f", fixtures::eligible_commit()).save(&snap).unwrap();
    let out = tmp.path().join("out");
    let args = ["evaluate", "--snapshot", s(&snap), "--pair", "full,fp-no-merge", "--fairness", "off", "--out", s(&out)];
    let o = run(&args);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("--unsafe-override"));
    let mut with = args.to_vec();
    with.push("--unsafe-override");
    let o = run(&with);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn output_dir_from_environment_and_config() {
    let tmp = tempfile::tempdir().unwrap();
    let snap = tmp.path().join("f.jsonl");
    HistorySnapshot::new("f", fixtures::linear(4)).save(&snap).unwrap();
    let env_dir = tmp.path().join("env-out");
    let o = bin()
        .args(["snapshot-validate", "--snapshot", s(&snap)])
        .env("COCHANGE_OUTPUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(env_dir.join("metadata.json").exists());
    assert!(env_dir.join("validation.json").exists());

    let cfg = tmp.path().join("run.toml");
    let cfg_dir = tmp.path().join("cfg-out");
    fs::write(&cfg, format!("output_dir = {:?}\nprofile = \"merge\"\n", s(&cfg_dir))).unwrap();
    let o = run(&["snapshot-validate", "--snapshot", s(&snap), "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(cfg_dir.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["profile"], "merge");

    fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let o = run(&["snapshot-validate", "--snapshot", s(&snap), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn report_renders_tables_and_empty_notice() {
    let tmp = tempfile::tempdir().unwrap();
    let snap = tmp.path().join("f.jsonl");
    HistorySnapshot::new("f", fixtures::eligible_commit()).save(&snap).unwrap();
    let out = tmp.path().join("eval");
    assert!(run(&["evaluate", "--snapshot", s(&snap), "--repo-set", "demo", "--out", s(&out)]).status.success());
    let rep = tmp.path().join("rep");
    let o = run(&["report", "--summary", s(&out.join("summary.json")), "--out", s(&rep)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let sections: Vec<&str> = text.split("\n\n").collect();
    // title, table, title, table, title, table
    let rows = |i: usize| sections[i].lines().filter(|l| l.starts_with("demo")).count();
    assert_eq!((rows(1), rows(3), rows(5)), (2, 2, 3), "{text}");
    assert!(sections[3].contains("MAP_all") && sections[3].contains("MAP_app"));
    assert!(sections[1].contains("1.000") || sections[1].contains("0.667"));
    assert_eq!(fs::read_to_string(rep.join("report.txt")).unwrap(), text);

    let lin = tmp.path().join("lin.jsonl");
    HistorySnapshot::new("lin", fixtures::linear(6)).save(&lin).unwrap();
    let out2 = tmp.path().join("eval2");
    assert!(run(&["evaluate", "--snapshot", s(&lin), "--out", s(&out2)]).status.success());
    let o = run(&["report", "--summary", s(&out2.join("summary.json")), "--out", s(&rep)]);
    assert!(stdout(&o).contains("no eligible events"));
}

#[test]
fn analysis_commands_write_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let snap = synthetic_snapshot(tmp.path(), 150);
    let out = tmp.path().join("branches");
    let o = run(&["analyze-branches", "--snapshot", s(&snap), "--pair", "full,fp-merge", "--cap-median", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("winner_rates.csv")).unwrap();
    assert!(csv.starts_with("characteristic,cohort,bin_low,bin_high,wins_a,wins_b,draws,n"));

    let out = tmp.path().join("cochange");
    let o = run(&["analyze-cochange", "--snapshot", s(&snap), "--horizon", "50", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("precision.csv")).unwrap();
    assert!(csv.starts_with("merge_id,mode,branch_length,merge_size,mean_precision"));
    assert!(csv.lines().count() > 1);

    let out = tmp.path().join("sample");
    let o = run(&["sample-merges", "--snapshot", s(&snap), "--min-added", "0", "--n", "3", "--seed", "9", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: serde_json::Value = serde_json::from_slice(&fs::read(out.join("sample.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);
}

#[test]
fn recommend_prints_ranked_files() {
    let tmp = tempfile::tempdir().unwrap();
    let snap = tmp.path().join("f.jsonl");
    HistorySnapshot::new("f", fixtures::eligible_commit()).save(&snap).unwrap();
    let out = tmp.path().join("rec");
    let o = run(&["recommend", "--snapshot", s(&snap), "--files", "a", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().trim_start().starts_with("1  "), "{text}");
    assert!(text.lines().count() <= 10);
    let rec: serde_json::Value = serde_json::from_slice(&fs::read(out.join("recommendation.json")).unwrap()).unwrap();
    assert_eq!(rec["strategy"], "full");

    let o = run(&["recommend", "--snapshot", s(&snap), "--files", "/abs", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ingest_and_validate_a_git_repository() {
    let tmp = tempfile::tempdir().unwrap();
    let repo = tmp.path().join("repo");
    fs::create_dir(&repo).unwrap();
    let git = |args: &[&str]| {
        let o = Command::new("git")
            .args(args)
            .current_dir(&repo)
            .env("GIT_AUTHOR_DATE", "2020-01-01T00:00:00Z")
            .env("GIT_COMMITTER_DATE", "2020-01-01T00:00:00Z")
            .env("GIT_AUTHOR_NAME", "t")
            .env("GIT_AUTHOR_EMAIL", "t@example.com")
            .env("GIT_COMMITTER_NAME", "t")
            .env("GIT_COMMITTER_EMAIL", "t@example.com")
            .output()
            .unwrap();
        assert!(o.status.success(), "git {args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    git(&["init", "-q", "-b", "main"]);
    fs::write(repo.join("a.txt"), "1").unwrap();
    fs::write(repo.join("b.txt"), "1").unwrap();
    git(&["add", "."]);
    git(&["commit", "-q", "-m", "one"]);
    fs::write(repo.join("a.txt"), "2").unwrap();
    git(&["commit", "-q", "-am", "two"]);

    let out = tmp.path().join("out");
    let o = run(&["ingest", "--repo", s(&repo), "--label", "demo", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let snap = out.join("snapshot.jsonl");
    assert!(snap.exists());
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["source"]["ref"], "HEAD");
    assert_eq!(meta["source"]["head"].as_str().map(str::len), Some(40));
    let o = run(&["snapshot-validate", "--snapshot", s(&snap), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("demo: 2 commits (0 merges)"));

    let o = run(&["ingest", "--repo", s(&tmp.path().join("nope")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}
