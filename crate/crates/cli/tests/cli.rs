mod common;

use common::{read, run, stderr, stdout, Fixture, KEY_VAR};
use mcqeval_core::experiments::read_results;

#[test]
fn validate_accepts_matching_manifest() {
    let f = Fixture::new(3, 2, 1);
    let out = run(&[
        "validate",
        "--data",
        &f.arg("dataset.jsonl"),
        "--manifest",
        "5/3/2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("5 questions (3 LR, 2 RC)"));
}

#[test]
fn validate_rejects_count_mismatch() {
    let f = Fixture::new(3, 2, 1);
    let out = run(&[
        "validate",
        "--data",
        &f.arg("dataset.jsonl"),
        "--manifest",
        "official-test",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("official-test"), "{}", stderr(&out));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(&["stats", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn stats_on_empty_results_fails() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("results.jsonl");
    std::fs::write(&results, "").unwrap();
    let out = run(&["stats", "--results", &results.display().to_string()]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn live_run_without_credential_names_the_variable() {
    let f = Fixture::new(3, 2, 1);
    let out = run(&[
        "run",
        "position-bias",
        "--data",
        &f.arg("dataset.jsonl"),
        "--manifest",
        &f.manifest(),
        "--config",
        &f.arg("config.toml"),
        "--results",
        &f.arg("results.jsonl"),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains(KEY_VAR), "{}", stderr(&out));
}

#[test]
fn mock_self_consistency_writes_every_sample() {
    let f = Fixture::new(6, 4, 5);
    let args = [
        "run",
        "self-consistency",
        "--data",
        &f.arg("dataset.jsonl"),
        "--manifest",
        &f.manifest(),
        "--config",
        &f.arg("config.toml"),
        "--mock",
        &f.arg("replay"),
        "--results",
        &f.arg("results.jsonl"),
        "--n",
        "5",
    ];
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let records = read_results(&f.path("results.jsonl")).unwrap();
    assert_eq!(records.len(), 50);
    for q in 0..10 {
        let id = format!("m{q:02}");
        let mut samples: Vec<u32> = records
            .iter()
            .filter(|r| r.question_id == id)
            .map(|r| r.sample_index)
            .collect();
        samples.sort_unstable();
        assert_eq!(samples, [0, 1, 2, 3, 4]);
    }

    // a rerun resumes from the log and appends nothing
    let before = read(&f.path("results.jsonl"));
    assert_eq!(run(&args).status.code(), Some(0));
    assert_eq!(read(&f.path("results.jsonl")), before);
}

#[test]
fn missing_fixture_is_provider_error() {
    let f = Fixture::new(3, 2, 1);
    let out = run(&[
        "run",
        "self-consistency",
        "--data",
        &f.arg("dataset.jsonl"),
        "--manifest",
        &f.manifest(),
        "--config",
        &f.arg("config.toml"),
        "--mock",
        &f.arg("replay"),
        "--results",
        &f.arg("results.jsonl"),
        "--n",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn full_pipeline_produces_all_tables() {
    let f = Fixture::new(6, 4, 5);
    for exp in [
        "prompt-sensitivity",
        "position-bias",
        "self-consistency",
        "ablation",
    ] {
        let out = run(&[
            "run",
            exp,
            "--data",
            &f.arg("dataset.jsonl"),
            "--manifest",
            &f.manifest(),
            "--config",
            &f.arg("config.toml"),
            "--mock",
            &f.arg("replay"),
            "--results",
            &f.arg("results.jsonl"),
            "--parallelism",
            "4",
        ]);
        assert_eq!(out.status.code(), Some(0), "{exp}: {}", stderr(&out));
    }
    let out = run(&[
        "stats",
        "--results",
        &f.arg("results.jsonl"),
        "--data",
        &f.arg("dataset.jsonl"),
        "--manifest",
        &f.manifest(),
        "--out",
        &f.arg("stats.json"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let out = run(&[
        "report",
        "--stats",
        &f.arg("stats.json"),
        "--format",
        "csv",
        "--out",
        &f.arg("tables"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csvs = std::fs::read_dir(f.path("tables")).unwrap().count();
    assert_eq!(csvs, 10);

    let out = run(&[
        "report",
        "--stats",
        &f.arg("stats.json"),
        "--table",
        "ablation",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let md = stdout(&out);
    assert!(md.starts_with("## "));
    assert!(md.contains("| mock-model | Overall |"), "{md}");
}

#[test]
fn export_requires_graded_traces() {
    let f = Fixture::new(3, 2, 1);
    std::fs::write(f.path("graded.jsonl"), "").unwrap();
    let out = run(&[
        "export-sft",
        "--data",
        &f.arg("dataset.jsonl"),
        "--manifest",
        &f.manifest(),
        "--graded",
        &f.arg("graded.jsonl"),
        "--out",
        &f.arg("sft.jsonl"),
    ]);
    assert_eq!(out.status.code(), Some(4));
}
