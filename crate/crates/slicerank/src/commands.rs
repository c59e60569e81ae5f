//! The command implementations. Each writes its outputs under an output
//! directory and returns the structured result.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use slicerank_core::corpus::{
    generate_synthetic, validate_corpus, Corpus, Instance, InvalidPolicy, Split, SynthConfig,
    ValidationReport,
};
use slicerank_core::metrics::{
    correlation_analysis, mean_slice_report, paired_t_test, per_slice_map, CorrelationReport,
    SeedSummary, SliceReport,
};
use slicerank_core::slicing::{build_slice_matrix, slice_report, ResolvedSlice, SliceConfigEntry, SliceMatrix, SliceTag};
use slicerank_core::sram::{ModelKind, TrainedModel};
use slicerank_core::trainer::{finite_diff_audit, train, AuditConfig, AuditReport, Clock, TrainConfig};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::{read_slices, read_train_config, resolve_slices, specs, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::io::{
    corpus_file, lines_to_string, load_split, read_config, read_corpus, read_json,
    write_corpus, write_history_csv, write_json, write_slice_matrix_csv, write_text,
    write_vocab_tsv,
};
use crate::manifest::ManifestBuilder;
use crate::reports::{
    render_correlation, render_eval, render_pipeline, render_slice_stats, render_validation,
    EvalReport, ModelSummary, PipelineSummary, SeedEval, SliceStatsReport,
};

pub const RESOLVED_SLICES: &str = "slices.resolved.json";
pub const CHECKPOINT: &str = "checkpoint.json";

fn core_at(path: &Path) -> impl Fn(slicerank_core::Error) -> CliError + '_ {
    move |e| CliError::in_file(path, e)
}

/// Writes a report as `<stem>.json` and `<stem>.txt`.
fn write_report<T: Serialize>(dir: &Path, stem: &str, value: &T, text: &[String]) -> CliResult<[PathBuf; 2]> {
    let json = dir.join(format!("{stem}.json"));
    let txt = dir.join(format!("{stem}.txt"));
    write_json(&json, value)?;
    write_text(&txt, &lines_to_string(text))?;
    Ok([json, txt])
}

pub fn synth(config: &Path, out: &Path) -> CliResult<()> {
    let cfg: SynthConfig = read_config(config)?;
    synth_with(&cfg, out)?;
    Ok(())
}

fn synth_with(cfg: &SynthConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let (train, dev, test) = generate_synthetic(cfg)?;
    let mut manifest = ManifestBuilder::new(out, "synth");
    let cfg_path = out.join("synth_config.json");
    write_json(&cfg_path, cfg)?;
    manifest.config("synth", &cfg_path);
    let mut files = Vec::new();
    for c in [&train, &dev, &test] {
        let p = corpus_file(out, c.split);
        write_corpus(&p, c)?;
        manifest.data(&p);
        files.push(p);
    }
    manifest.write()?;
    info!(
        "wrote {} / {} / {} instances to {}",
        train.len(),
        dev.len(),
        test.len(),
        out.display()
    );
    Ok(files)
}

pub fn validate(corpus: &Path, split: Split, policy: InvalidPolicy) -> CliResult<(ValidationReport, usize)> {
    let ingested = read_corpus(corpus, split, policy)?;
    Ok((validate_corpus(&ingested.corpus), ingested.skipped.len()))
}

pub fn print_validation(r: &ValidationReport, json: bool) {
    if json {
        println!("{}", serde_json::to_string_pretty(r).expect("report serializes"));
    } else {
        print!("{}", lines_to_string(&render_validation(r)));
    }
}

/// Corpus given as a directory of split files or as a single file.
struct CorpusSource {
    train: Corpus,
    target: Corpus,
}

fn corpus_source(path: &Path, split: Split, policy: InvalidPolicy) -> CliResult<CorpusSource> {
    if path.is_dir() {
        let train = load_split(path, Split::Train, policy)?;
        let target = if split == Split::Train {
            train.clone()
        } else {
            load_split(path, split, policy)?
        };
        Ok(CorpusSource { train, target })
    } else {
        let c = read_corpus(path, split, policy)?.corpus;
        Ok(CorpusSource { train: c.clone(), target: c })
    }
}

fn slice_stats(
    resolved: Vec<ResolvedSlice>,
    target: &Corpus,
) -> CliResult<(SliceStatsReport, SliceMatrix)> {
    let matrix = build_slice_matrix(&target.instances, &specs(&resolved))?;
    let report = SliceStatsReport::new(target.split, target.len(), resolved, &slice_report(&matrix));
    for row in report.rows.iter().filter(|r| r.empty) {
        warn!("slice `{}` is empty on the {} split", row.name, target.split.as_str());
    }
    Ok((report, matrix))
}

pub fn slice_report_cmd(
    corpus: &Path,
    slices: &Path,
    split: Split,
    policy: InvalidPolicy,
    out: Option<&Path>,
) -> CliResult<SliceStatsReport> {
    let entries = read_slices(slices)?;
    let src = corpus_source(corpus, split, policy)?;
    let resolved = resolve_slices(&entries, &src.train.instances).map_err(core_at(slices))?;
    let (report, matrix) = slice_stats(resolved, &src.target)?;
    print!("{}", lines_to_string(&render_slice_stats(&report)));
    if let Some(out) = out {
        write_slice_outputs(out, &report, &matrix)?;
    }
    Ok(report)
}

fn write_slice_outputs(out: &Path, report: &SliceStatsReport, matrix: &SliceMatrix) -> CliResult<Vec<PathBuf>> {
    let mut files = write_report(out, "slice_report", report, &render_slice_stats(report))?.to_vec();
    let resolved = out.join(RESOLVED_SLICES);
    write_json(&resolved, &report.slices)?;
    let csv = out.join("slice_matrix.csv");
    write_slice_matrix_csv(&csv, matrix)?;
    files.extend([resolved, csv]);
    Ok(files)
}

/// Wall clock used for progress logs only.
struct StdClock(Instant);

impl Clock for StdClock {
    fn now_seconds(&mut self) -> Option<f64> {
        Some(self.0.elapsed().as_secs_f64())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub best_step: usize,
    pub best_dev_map: f64,
    pub untrained_dev_map: f64,
    pub epochs_completed: usize,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub model: ModelKind,
    pub slice_names: Vec<String>,
    pub runs: Vec<RunRecord>,
}

pub struct TrainInputs<'a> {
    pub train: &'a Corpus,
    pub dev: &'a Corpus,
    /// Resolved slices; ignored for the baseline.
    pub slices: &'a [ResolvedSlice],
    pub cfg: &'a TrainConfig,
    pub model: ModelKind,
    pub seeds: &'a [u64],
}

/// Trains one model per seed under `out/seed-<seed>/`.
fn train_runs(inp: &TrainInputs, out: &Path, manifest: &mut ManifestBuilder) -> CliResult<TrainSummary> {
    let matrix = if inp.model.is_slice_aware() {
        build_slice_matrix(&inp.train.instances, &specs(inp.slices))?
    } else {
        SliceMatrix::base_only(inp.train.qids())
    };
    if inp.model.is_slice_aware() {
        let p = out.join(RESOLVED_SLICES);
        write_json(&p, &inp.slices)?;
        manifest.report(&p);
        if inp.model == ModelKind::SramRandom
            && inp.slices.iter().any(|s| s.spec.kind.tag() != SliceTag::RANDOM)
        {
            warn!("sram_random is being trained with non-random slices");
        }
    }
    let mut runs = Vec::new();
    for &seed in inp.seeds {
        let cfg = TrainConfig { seed, ..inp.cfg.clone() };
        let started = Instant::now();
        let mut clock = StdClock(started);
        let outcome = train(&inp.train.instances, &inp.dev.instances, &matrix, &cfg, inp.model, &mut clock)?;
        let mut history = outcome.history;
        let timing = std::mem::take(&mut history.epoch_seconds);
        info!(
            "{} seed {seed}: best dev MAP {:.4} at step {} ({:.1}s, epochs {:?})",
            inp.model.as_str(),
            history.best_dev_map,
            history.best_step,
            started.elapsed().as_secs_f64(),
            timing.iter().map(|t| format!("{t:.1}")).collect::<Vec<_>>()
        );
        let dir = out.join(format!("seed-{seed}"));
        let ckpt = dir.join(CHECKPOINT);
        save_checkpoint(&ckpt, &outcome.model)?;
        write_json(&dir.join("history.json"), &history)?;
        write_history_csv(&dir.join("history.csv"), &history)?;
        write_vocab_tsv(&dir.join("vocab.tsv"), &outcome.model.vocab)?;
        let log: Vec<String> = timing
            .iter()
            .enumerate()
            .map(|(e, t)| format!("epoch {} {t:.3}s", e + 1))
            .collect();
        write_text(&dir.join("timing.log"), &lines_to_string(&log))?;
        manifest
            .checkpoint(&ckpt)
            .report(&dir.join("history.json"))
            .report(&dir.join("history.csv"));
        runs.push(RunRecord {
            seed,
            best_step: history.best_step,
            best_dev_map: history.best_dev_map,
            untrained_dev_map: history.untrained_dev_map(),
            epochs_completed: history.epochs_completed,
            stopped_early: history.stopped_early,
        });
    }
    let summary = TrainSummary {
        model: inp.model,
        slice_names: matrix.slice_names.clone(),
        runs,
    };
    let p = out.join("train_summary.json");
    write_json(&p, &summary)?;
    manifest.report(&p);
    Ok(summary)
}

#[allow(clippy::too_many_arguments)]
pub fn train_cmd(
    corpus: &Path,
    slices: Option<&Path>,
    train_config: Option<&Path>,
    model: ModelKind,
    seeds: &[u64],
    policy: InvalidPolicy,
    out: &Path,
) -> CliResult<TrainSummary> {
    let cfg = match train_config {
        Some(p) => read_train_config(p)?,
        None => TrainConfig::default(),
    };
    let entries: Vec<SliceConfigEntry> = match (model.is_slice_aware(), slices) {
        (true, Some(p)) => read_slices(p)?,
        (true, None) => {
            return Err(CliError::Usage(format!(
                "--slices is required for model {}",
                model.as_str()
            )))
        }
        (false, _) => Vec::new(),
    };
    let train_set = load_split(corpus, Split::Train, policy)?;
    let dev = load_split(corpus, Split::Dev, policy)?;
    let resolved = match slices {
        Some(p) => resolve_slices(&entries, &train_set.instances).map_err(core_at(p))?,
        None => Vec::new(),
    };
    let dir = out.join(model.as_str());
    let mut manifest = ManifestBuilder::new(&dir, "train");
    manifest
        .config("corpus/train", &corpus_file(corpus, Split::Train))
        .config("corpus/dev", &corpus_file(corpus, Split::Dev))
        .seeds(seeds)
        .model(model);
    if let Some(p) = slices.filter(|_| model.is_slice_aware()) {
        manifest.config("slices", p);
    }
    if let Some(p) = train_config {
        manifest.config("train", p);
    }
    let summary = train_runs(
        &TrainInputs {
            train: &train_set,
            dev: &dev,
            slices: &resolved,
            cfg: &cfg,
            model,
            seeds,
        },
        &dir,
        &mut manifest,
    )?;
    manifest.write()?;
    Ok(summary)
}

/// `(seed, checkpoint path)` for every `seed-<n>` directory, by seed.
pub fn list_checkpoints(dir: &Path) -> CliResult<Vec<(u64, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut found = Vec::new();
    for e in entries {
        let e = e.map_err(|err| CliError::io(dir, err))?;
        let name = e.file_name().to_string_lossy().to_string();
        if let Some(seed) = name.strip_prefix("seed-").and_then(|s| s.parse::<u64>().ok()) {
            let ckpt = e.path().join(CHECKPOINT);
            if ckpt.is_file() {
                found.push((seed, ckpt));
            }
        }
    }
    found.sort();
    if found.is_empty() {
        return Err(CliError::Usage(format!("no seed-*/{CHECKPOINT} under {}", dir.display())));
    }
    Ok(found)
}

fn score_all(model: &TrainedModel, instances: &[Instance]) -> CliResult<Vec<Vec<f64>>> {
    Ok(instances
        .iter()
        .map(|i| model.score_instance(i))
        .collect::<Result<_, _>>()?)
}

fn membership_rows(model: &TrainedModel, instances: &[Instance]) -> CliResult<Option<Vec<Vec<f64>>>> {
    let mut rows = Vec::with_capacity(instances.len());
    for inst in instances {
        match model.membership_probabilities(inst)? {
            Some(r) => rows.push(r),
            None => return Ok(None),
        }
    }
    Ok(Some(rows))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Evaluates every seed of a model against the same seed of the baseline.
pub fn evaluate(
    test: &Corpus,
    slices: &[ResolvedSlice],
    models: &[(u64, TrainedModel)],
    baselines: &[(u64, TrainedModel)],
) -> CliResult<EvalReport> {
    let seeds: Vec<u64> = models.iter().map(|m| m.0).collect();
    let base_seeds: Vec<u64> = baselines.iter().map(|m| m.0).collect();
    if seeds != base_seeds {
        return Err(CliError::Usage(format!(
            "model seeds {seeds:?} and baseline seeds {base_seeds:?} differ; runs are paired by seed"
        )));
    }
    let matrix = build_slice_matrix(&test.instances, &specs(slices))?;
    let mut per_seed = Vec::new();
    for ((seed, model), (_, base)) in models.iter().zip(baselines) {
        let scores = score_all(model, &test.instances)?;
        let base_scores = score_all(base, &test.instances)?;
        let membership = if model.ranker.slice_names() == matrix.slice_names {
            membership_rows(model, &test.instances)?
        } else {
            if model.kind.is_slice_aware() {
                warn!("seed {seed}: model slices differ from the evaluation slices; membership accuracy omitted");
            }
            None
        };
        let report = per_slice_map(&test.instances, &matrix, &scores, &base_scores, membership.as_deref())?;
        per_seed.push(SeedEval {
            seed: *seed,
            test_map: report.overall_map_model,
            baseline_test_map: report.overall_map_baseline,
            slice_report: report,
        });
    }
    let maps: Vec<f64> = per_seed.iter().map(|s| s.test_map).collect();
    let base_maps: Vec<f64> = per_seed.iter().map(|s| s.baseline_test_map).collect();
    let t_test = if maps.len() >= 2 {
        Some(paired_t_test(&maps, &base_maps)?)
    } else {
        None
    };
    let reports: Vec<SliceReport> = per_seed.iter().map(|s| s.slice_report.clone()).collect();
    Ok(EvalReport {
        model: models[0].1.kind,
        baseline: baselines[0].1.kind,
        seeds,
        relative_improvement: (mean(&maps) - mean(&base_maps)) / mean(&base_maps),
        test_map: SeedSummary::from_values(maps),
        baseline_test_map: SeedSummary::from_values(base_maps),
        t_test,
        slice_report: mean_slice_report(&reports)?,
        per_seed,
    })
}

fn load_models(dir: &Path) -> CliResult<Vec<(u64, TrainedModel)>> {
    list_checkpoints(dir)?
        .into_iter()
        .map(|(seed, p)| load_checkpoint(&p).map(|m| (seed, m)))
        .collect()
}

fn write_eval(out: &Path, report: &EvalReport, manifest: &mut ManifestBuilder) -> CliResult<()> {
    for p in write_report(out, "eval_report", report, &render_eval(report))? {
        manifest.report(&p);
    }
    Ok(())
}

pub fn eval_cmd(
    corpus: &Path,
    checkpoints: &Path,
    baseline_ckpts: &Path,
    slices: Option<&Path>,
    policy: InvalidPolicy,
    out: &Path,
) -> CliResult<EvalReport> {
    let test = load_split(corpus, Split::Test, policy)?;
    let resolved: Vec<ResolvedSlice> = match slices {
        Some(p) => {
            let entries = read_slices(p)?;
            let train_set = load_split(corpus, Split::Train, policy)?;
            resolve_slices(&entries, &train_set.instances).map_err(core_at(p))?
        }
        None => {
            let saved = checkpoints.join(RESOLVED_SLICES);
            if saved.is_file() {
                read_json(&saved)?
            } else {
                Vec::new()
            }
        }
    };
    let models = load_models(checkpoints)?;
    let baselines = load_models(baseline_ckpts)?;
    let report = evaluate(&test, &resolved, &models, &baselines)?;
    let mut manifest = ManifestBuilder::new(out, "eval");
    manifest
        .config("corpus/test", &corpus_file(corpus, Split::Test))
        .seeds(&report.seeds)
        .model(report.model);
    if let Some(p) = slices {
        manifest.config("slices", p);
    }
    for (_, p) in list_checkpoints(checkpoints)?.iter().chain(&list_checkpoints(baseline_ckpts)?) {
        manifest.checkpoint(p);
    }
    write_eval(out, &report, &mut manifest)?;
    manifest.write()?;
    print!("{}", lines_to_string(&render_eval(&report)));
    Ok(report)
}

/// Reads either an evaluation report or a bare slice report.
pub fn read_slice_report(path: &Path) -> CliResult<SliceReport> {
    let value: serde_json::Value = read_json(path)?;
    let inner = value.get("slice_report").cloned().unwrap_or(value);
    serde_json::from_value(inner).map_err(|e| CliError::BadData {
        path: path.to_path_buf(),
        message: format!("not a slice report: {e}"),
    })
}

pub fn analyze_cmd(reports: &[PathBuf], out: Option<&Path>) -> CliResult<Vec<CorrelationReport>> {
    let mut results = Vec::new();
    for p in reports {
        let r = correlation_analysis(&read_slice_report(p)?).map_err(core_at(p))?;
        print!("{}: {}", p.display(), lines_to_string(&render_correlation(&r)));
        results.push(r);
    }
    if let Some(out) = out {
        let text: Vec<String> = results.iter().flat_map(render_correlation).collect();
        write_report(out, "correlation", &results, &text)?;
    }
    Ok(results)
}

pub fn audit_cmd(models: &[ModelKind], cfg: &AuditConfig) -> CliResult<Vec<AuditReport>> {
    models
        .iter()
        .map(|&m| finite_diff_audit(m, cfg).map_err(CliError::from))
        .collect()
}

/// synth, slice reports, three trainings, two evaluations and the
/// correlation analyses, all under `out`.
pub fn pipeline(cfg: &PipelineConfig, out: &Path) -> CliResult<PipelineSummary> {
    cfg.train.validate()?;
    if cfg.seeds.len() < 2 {
        return Err(CliError::Usage("the pipeline needs at least 2 seeds".into()));
    }
    crate::config::parse_seeds(
        &cfg.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
    )?;
    let mut manifest = ManifestBuilder::new(out, "pipeline");
    manifest.seeds(&cfg.seeds);
    let cfg_path = out.join("config/pipeline.json");
    write_json(&cfg_path, cfg)?;
    manifest.config("pipeline", &cfg_path);

    let corpus_dir = out.join("corpus");
    for p in synth_with(&cfg.synth, &corpus_dir)? {
        manifest.data(&p);
    }
    let policy = InvalidPolicy::Reject;
    let train_set = load_split(&corpus_dir, Split::Train, policy)?;
    let dev = load_split(&corpus_dir, Split::Dev, policy)?;
    let test = load_split(&corpus_dir, Split::Test, policy)?;

    let slice_sets = [
        (ModelKind::Sram, cfg.slices.clone()),
        (ModelKind::SramRandom, cfg.random_slices.entries()),
    ];
    let mut resolved_sets = Vec::new();
    for (kind, entries) in &slice_sets {
        let resolved = resolve_slices(entries, &train_set.instances)?;
        let (report, matrix) = slice_stats(resolved.clone(), &train_set)?;
        for p in write_slice_outputs(&out.join("slices").join(kind.as_str()), &report, &matrix)? {
            manifest.report(&p);
        }
        resolved_sets.push((*kind, resolved));
    }

    let mut trained = Vec::new();
    let kinds = [
        (ModelKind::Baseline, Vec::new()),
        (ModelKind::Sram, resolved_sets[0].1.clone()),
        (ModelKind::SramRandom, resolved_sets[1].1.clone()),
    ];
    for (kind, resolved) in &kinds {
        manifest.model(*kind);
        let dir = out.join("models").join(kind.as_str());
        train_runs(
            &TrainInputs {
                train: &train_set,
                dev: &dev,
                slices: resolved,
                cfg: &cfg.train,
                model: *kind,
                seeds: &cfg.seeds,
            },
            &dir,
            &mut manifest,
        )?;
        trained.push((*kind, load_models(&dir)?));
    }

    let baselines = &trained[0].1;
    let mut summaries = Vec::new();
    for ((kind, models), (_, resolved)) in trained[1..].iter().zip(&kinds[1..]) {
        let report = evaluate(&test, resolved, models, baselines)?;
        let dir = out.join("eval").join(kind.as_str());
        write_eval(&dir, &report, &mut manifest)?;
        match correlation_analysis(&report.slice_report) {
            Ok(c) => {
                for p in write_report(&out.join("analysis").join(kind.as_str()), "correlation", &c, &render_correlation(&c))? {
                    manifest.report(&p);
                }
            }
            Err(e) => warn!("{}: correlation analysis skipped: {e}", kind.as_str()),
        }
        summaries.push((report.test_map.mean, ModelSummary::from_eval(&report), report.baseline_test_map));
    }
    let sram_vs_random = Some((summaries[0].0 - summaries[1].0) / summaries[1].0);
    let summary = PipelineSummary {
        seeds: cfg.seeds.clone(),
        baseline_test_map: summaries[0].2.clone(),
        models: summaries.into_iter().map(|s| s.1).collect(),
        sram_vs_sram_random: sram_vs_random,
    };
    for p in write_report(out, "summary", &summary, &render_pipeline(&summary))? {
        manifest.report(&p);
    }
    manifest.write()?;
    print!("{}", lines_to_string(&render_pipeline(&summary)));
    Ok(summary)
}
