mod common;

use std::fs;

use common::*;
use serde_json::json;
use slicerank::manifest::sha256_file;

#[test]
fn help_and_version_exit_zero_bad_flags_exit_one() {
    assert_eq!(slicerank(&["--help"]).code, 0);
    assert_eq!(slicerank(&["--version"]).code, 0);
    assert_eq!(slicerank(&["train", "--bogus"]).code, 1);
    assert_eq!(slicerank(&[]).code, 1);
    let r = slicerank(&["train", "--corpus", "x", "--model", "bert"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("bert"), "{}", r.stderr);
}

#[test]
fn synth_writes_three_splits_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_json(&dir.path().join("synth.json"), &small_synth(40, 5));
    let digests = |out: &std::path::Path| -> Vec<String> {
        slicerank(&["synth", "--config", p(&cfg), "--out", p(out)]).ok();
        ["train", "dev", "test"]
            .iter()
            .map(|s| sha256_file(&out.join(format!("{s}.jsonl"))).unwrap())
            .collect()
    };
    let a = digests(&dir.path().join("a"));
    let b = digests(&dir.path().join("b"));
    assert_eq!(a, b);
    let lines = fs::read_to_string(dir.path().join("a/dev.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 20);
    let manifest = read_json(&dir.path().join("a/manifest.json"));
    assert_eq!(manifest["data"].as_array().unwrap().len(), 3);
}

#[test]
fn synth_missing_seed_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_synth(40, 5);
    cfg.as_object_mut().unwrap().remove("seed");
    let cfg = write_json(&dir.path().join("synth.json"), &cfg);
    let r = slicerank(&["synth", "--config", p(&cfg), "--out", p(&dir.path().join("o"))]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("seed"), "{}", r.stderr);
    assert!(!dir.path().join("o/train.jsonl").exists());
}

#[test]
fn out_dir_defaults_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_json(&dir.path().join("synth.json"), &small_synth(20, 1));
    let out = dir.path().join("from-env");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_slicerank"))
        .args(["synth", "--config", p(&cfg)])
        .env("SLICERANK_OUT", &out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("train.jsonl").is_file());
}

#[test]
fn ten_random_slices_give_eleven_rows() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 200);
    let out = dir.path().join("slices");
    let r = slicerank(&[
        "slice-report",
        "--corpus",
        p(&corpus),
        "--slices",
        p(&config_path("random_slices.json")),
        "--out",
        p(&out),
    ])
    .ok();
    let report = read_json(&out.join("slice_report.json"));
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0]["name"], "BASE");
    assert_eq!(rows[0]["fraction"], 1.0);
    for row in &rows[1..] {
        let f = row["fraction"].as_f64().unwrap();
        assert!((0.35..0.65).contains(&f), "{row}");
    }
    assert!(r.stdout.contains("random_10"));
    let csv = fs::read_to_string(out.join("slice_matrix.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "qid,slice,member");
    assert_eq!(csv.lines().count(), 1 + 200 * 11);
}

#[test]
fn auto_threshold_is_printed_and_empty_slices_are_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 100);
    let slices = write_json(
        &dir.path().join("slices.json"),
        &json!([
            { "name": "qdtm_low", "kind": "QDTM", "auto_fraction": 0.5 },
            { "name": "nobody", "kind": "QC", "category": "no-such-category" }
        ]),
    );
    let r = slicerank(&["slice-report", "--corpus", p(&corpus), "--slices", p(&slices)]).ok();
    let qdtm = r.stdout.lines().find(|l| l.starts_with("qdtm_low")).unwrap();
    assert!(qdtm.contains("t_qdtm"), "{qdtm}");
    let nobody = r.stdout.lines().find(|l| l.starts_with("nobody")).unwrap();
    assert!(nobody.contains("WARNING: empty slice"), "{nobody}");
    assert!(r.stderr.contains("empty"), "{}", r.stderr);
}

#[test]
fn slice_report_on_a_single_file_and_on_another_split() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 60);
    let slices = write_json(&dir.path().join("s.json"), &regime_slices());
    let r = slicerank(&["slice-report", "--corpus", p(&corpus.join("dev.jsonl")), "--slices", p(&slices), "--split", "dev"]).ok();
    assert!(r.stdout.contains("split dev: 30 instances"), "{}", r.stdout);
    let r = slicerank(&["slice-report", "--corpus", p(&corpus), "--slices", p(&slices), "--split", "test"]).ok();
    assert!(r.stdout.contains("split test: 30 instances"), "{}", r.stdout);
}

#[test]
fn baseline_trains_without_slices_and_sram_requires_them() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 40);
    let tc = write_json(&dir.path().join("train.json"), &tiny_train(1));
    let out = dir.path().join("models");
    slicerank(&["train", "--corpus", p(&corpus), "--train-config", p(&tc), "--model", "baseline", "--out", p(&out)]).ok();
    assert!(out.join("baseline/seed-0/checkpoint.json").is_file());
    assert!(out.join("baseline/seed-0/vocab.tsv").is_file());
    assert!(out.join("baseline/manifest.json").is_file());
    let r = slicerank(&["train", "--corpus", p(&corpus), "--train-config", p(&tc), "--model", "sram", "--out", p(&out)]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("--slices"), "{}", r.stderr);
}

#[test]
fn five_seeds_give_five_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 40);
    let tc = write_json(&dir.path().join("train.json"), &tiny_train(1));
    let slices = write_json(&dir.path().join("s.json"), &regime_slices());
    let out = dir.path().join("models");
    slicerank(&[
        "train", "--corpus", p(&corpus), "--slices", p(&slices), "--train-config", p(&tc),
        "--model", "sram", "--seeds", "0-4", "--out", p(&out),
    ])
    .ok();
    let ckpts = slicerank::commands::list_checkpoints(&out.join("sram")).unwrap();
    assert_eq!(ckpts.iter().map(|c| c.0).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    let summary = read_json(&out.join("sram/train_summary.json"));
    assert_eq!(summary["runs"].as_array().unwrap().len(), 5);
    assert_eq!(summary["slice_names"], json!(["BASE", "qc_regimeA", "qc_regimeB", "qdtm_low"]));
    let manifest = read_json(&out.join("sram/manifest.json"));
    assert_eq!(manifest["checkpoints"].as_array().unwrap().len(), 5);
    let history = read_json(&out.join("sram/seed-3/history.json"));
    assert!(history.get("epoch_seconds").is_none());
}

#[test]
fn negative_alpha_fails_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 40);
    let mut cfg = tiny_train(1);
    cfg["alpha"] = json!(-1.0);
    let tc = write_json(&dir.path().join("train.json"), &cfg);
    let slices = write_json(&dir.path().join("s.json"), &regime_slices());
    let out = dir.path().join("models");
    let r = slicerank(&[
        "train", "--corpus", p(&corpus), "--slices", p(&slices), "--train-config", p(&tc),
        "--model", "sram", "--out", p(&out),
    ]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("alpha"), "{}", r.stderr);
    assert!(!out.exists());
}

#[test]
fn unknown_train_config_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 40);
    let mut cfg = tiny_train(1);
    cfg["learning_rat"] = json!(0.1);
    let tc = write_json(&dir.path().join("train.json"), &cfg);
    let r = slicerank(&["train", "--corpus", p(&corpus), "--train-config", p(&tc), "--model", "baseline", "--out", p(dir.path())]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("learning_rat"), "{}", r.stderr);
}

#[test]
fn evaluating_against_itself_gives_zero_delta() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 40);
    let tc = write_json(&dir.path().join("train.json"), &tiny_train(1));
    let slices = write_json(&dir.path().join("s.json"), &regime_slices());
    let models = dir.path().join("models");
    slicerank(&[
        "train", "--corpus", p(&corpus), "--slices", p(&slices), "--train-config", p(&tc),
        "--model", "sram", "--seeds", "0,1", "--out", p(&models),
    ])
    .ok();
    let ckpts = models.join("sram");
    let out = dir.path().join("eval");
    let r = slicerank(&[
        "eval", "--corpus", p(&corpus), "--checkpoints", p(&ckpts), "--baseline-ckpts", p(&ckpts), "--out", p(&out),
    ])
    .ok();
    assert!(r.stdout.contains("MAP (std)"));
    let report = read_json(&out.join("eval_report.json"));
    assert_eq!(report["relative_improvement"], 0.0);
    assert_eq!(report["t_test"]["significant_at_95"], false);
    let rows = report["slice_report"]["slices"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        if !row["delta_map"].is_null() {
            assert_eq!(row["delta_map"], 0.0, "{row}");
        }
        assert!(row["membership_accuracy"].is_number(), "{row}");
    }
    assert_eq!(report["test_map"]["values"].as_array().unwrap().len(), 2);
    assert!(report["test_map"]["std"].is_number());
    for seed in report["per_seed"].as_array().unwrap() {
        for row in seed["slice_report"]["slices"].as_array().unwrap() {
            if !row["delta_map"].is_null() {
                assert_eq!(row["delta_map"], 0.0);
            }
        }
    }
}

#[test]
fn eval_rejects_unpaired_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 40);
    let tc = write_json(&dir.path().join("train.json"), &tiny_train(1));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, seeds) in [(&a, "0,1"), (&b, "0,2")] {
        slicerank(&["train", "--corpus", p(&corpus), "--train-config", p(&tc), "--model", "baseline", "--seeds", seeds, "--out", p(out)]).ok();
    }
    let r = slicerank(&[
        "eval", "--corpus", p(&corpus), "--checkpoints", p(&a.join("baseline")), "--baseline-ckpts", p(&b.join("baseline")),
        "--out", p(&dir.path().join("e")),
    ]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("paired by seed"), "{}", r.stderr);
}

#[test]
fn corrupted_checkpoint_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 40);
    let tc = write_json(&dir.path().join("train.json"), &tiny_train(1));
    let models = dir.path().join("m");
    slicerank(&["train", "--corpus", p(&corpus), "--train-config", p(&tc), "--model", "baseline", "--seeds", "0,1", "--out", p(&models)]).ok();
    let ckpt = models.join("baseline/seed-1/checkpoint.json");
    let mut v = read_json(&ckpt);
    v["tensors"].as_array_mut().unwrap().pop();
    write_json(&ckpt, &v);
    let ckpts = models.join("baseline");
    let r = slicerank(&[
        "eval", "--corpus", p(&corpus), "--checkpoints", p(&ckpts), "--baseline-ckpts", p(&ckpts), "--out", p(&dir.path().join("e")),
    ]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert!(r.stderr.contains("checkpoint.json"), "{}", r.stderr);
}

fn slice_row(name: &str, size: usize, base: f64, delta: f64, acc: f64) -> serde_json::Value {
    json!({
        "name": name, "size": size,
        "map_model": base + delta, "map_baseline": base, "delta_map": delta,
        "membership_accuracy": acc
    })
}

fn slice_report(rows: Vec<serde_json::Value>) -> serde_json::Value {
    json!({
        "slices": rows,
        "overall_map_model": 0.6, "overall_map_baseline": 0.5, "overall_delta_map": 0.1,
        "avg_delta_map": 0.1, "max_delta_map": 0.2
    })
}

#[test]
fn analyze_needs_three_slices() {
    let dir = tempfile::tempdir().unwrap();
    let rep = write_json(
        &dir.path().join("r.json"),
        &slice_report(vec![
            slice_row("BASE", 100, 0.5, 0.1, 0.9),
            slice_row("a", 10, 0.4, 0.1, 0.9),
            slice_row("b", 20, 0.6, 0.2, 0.8),
        ]),
    );
    let r = slicerank(&["analyze", p(&rep)]);
    assert_ne!(r.code, 0);
    assert!(r.stderr.contains("at least 3"), "{}", r.stderr);
}

#[test]
fn analyze_linear_input_gives_unit_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![
        slice_row("BASE", 100, 0.5, 0.05, 0.9),
        slice_row("a", 10, 0.40, 0.25 - 0.5 * 0.40, 0.95),
        slice_row("b", 25, 0.55, 0.25 - 0.5 * 0.55, 0.80),
        slice_row("c", 17, 0.70, 0.25 - 0.5 * 0.70, 0.85),
        slice_row("d", 40, 0.30, 0.25 - 0.5 * 0.30, 0.99),
    ];
    let rep = write_json(&dir.path().join("r.json"), &json!({ "slice_report": slice_report(rows) }));
    let out = dir.path().join("a");
    let r = slicerank(&["analyze", p(&rep), "--out", p(&out)]).ok();
    assert!(r.stdout.contains("baseline_map"));
    let c = read_json(&out.join("correlation.json"));
    let rows = c[0]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let base = rows.iter().find(|r| r["property"] == "baseline_map").unwrap();
    assert!((base["r"].as_f64().unwrap() + 1.0).abs() < 1e-9, "{base}");
    for row in rows {
        assert!(row["r"].is_number() && row["p_value"].is_number(), "{row}");
    }
}

#[test]
fn validate_reports_duplicate_qids_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 20);
    let text = fs::read_to_string(corpus.join("train.jsonl")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let dup = lines[2].clone();
    lines[6] = dup;
    let bad = dir.path().join("dup.jsonl");
    fs::write(&bad, lines.join("\n")).unwrap();
    let r = slicerank(&["validate", "--corpus", p(&bad)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("lines 3 and 7"), "{}", r.stderr);
    assert_eq!(slicerank(&["validate", "--corpus", p(&bad), "--skip-invalid"]).code, 2);
}

#[test]
fn validate_rejects_or_skips_records_without_a_relevant_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 20);
    let text = fs::read_to_string(corpus.join("train.jsonl")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut rec: serde_json::Value = serde_json::from_str(&lines[4]).unwrap();
    for c in rec["candidates"].as_array_mut().unwrap() {
        c["label"] = json!(0);
    }
    lines[4] = rec.to_string();
    lines.insert(2, String::new());
    let bad = dir.path().join("zero.jsonl");
    fs::write(&bad, lines.join("\n")).unwrap();
    let r = slicerank(&["validate", "--corpus", p(&bad)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains(rec["qid"].as_str().unwrap()), "{}", r.stderr);
    let r = slicerank(&["validate", "--corpus", p(&bad), "--skip-invalid", "--json"]).ok();
    let report: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(report["instances"], 19);

    fs::write(&bad, "{\"qid\": \"x\",\n").unwrap();
    let r = slicerank(&["validate", "--corpus", p(&bad)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 1"), "{}", r.stderr);
    let r = slicerank(&["validate", "--corpus", p(&dir.path().join("missing.jsonl"))]);
    assert_eq!(r.code, 1);
}

#[test]
fn audit_passes_and_reports_every_tensor() {
    let r = slicerank(&["audit"]).ok();
    assert!(r.stdout.contains("baseline:"));
    assert!(r.stdout.contains("sram:"));
    assert!(r.stdout.contains("expert_w"), "{}", r.stdout);
}

#[test]
fn failed_audit_is_a_numerical_abort() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_json(
        &dir.path().join("audit.json"),
        &json!({ "corrupt": "wv" }),
    );
    let r = slicerank(&["audit", "--model", "baseline", "--config", p(&cfg)]);
    assert_eq!(r.code, 3, "{}\n{}", r.stdout, r.stderr);
}
