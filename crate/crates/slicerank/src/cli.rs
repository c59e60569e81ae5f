use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use slicerank_core::corpus::{InvalidPolicy, Split};
use slicerank_core::sram::ModelKind;
use slicerank_core::trainer::AuditConfig;

use crate::commands;
use crate::config::{parse_seeds, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::io::{lines_to_string, read_config};
use crate::reports::render_audit;

pub const OUT_ENV: &str = "SLICERANK_OUT";

/// Slice-aware response ranking: synthetic corpora, slicing functions,
/// training, evaluation and slice analysis.
#[derive(Debug, Parser)]
#[command(name = "slicerank", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutDir {
    /// Output directory.
    #[arg(long, env = OUT_ENV, default_value = "slicerank-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Ingest {
    /// Drop records that violate corpus invariants instead of failing.
    #[arg(long)]
    pub skip_invalid: bool,
}

impl Ingest {
    fn policy(&self) -> InvalidPolicy {
        if self.skip_invalid {
            InvalidPolicy::Skip
        } else {
            InvalidPolicy::Reject
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus (train/dev/test JSON lines).
    Synth {
        /// Synthetic corpus configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
    /// Check a corpus file against the corpus invariants.
    Validate {
        /// Corpus file (JSON lines).
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "train")]
        split: Split,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        ingest: Ingest,
    },
    /// Resolve slicing functions and print slice sizes.
    SliceReport {
        /// Corpus directory (thresholds resolved on train.jsonl) or a single file.
        #[arg(long)]
        corpus: PathBuf,
        /// Slice configuration (JSON array).
        #[arg(long)]
        slices: PathBuf,
        /// Split to report on when --corpus is a directory.
        #[arg(long, default_value = "train")]
        split: Split,
        /// Also write the report, resolved slices and membership matrix here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        ingest: Ingest,
    },
    /// Train one model per seed; writes <out>/<model>/seed-<n>/.
    Train {
        /// Corpus directory with train.jsonl and dev.jsonl.
        #[arg(long)]
        corpus: PathBuf,
        /// Slice configuration; required for sram and sram-random.
        #[arg(long)]
        slices: Option<PathBuf>,
        /// Training configuration (JSON); defaults apply when omitted.
        #[arg(long)]
        train_config: Option<PathBuf>,
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
        /// Seeds, e.g. 0,1,2 or 0-4.
        #[arg(long, default_value = "0")]
        seeds: String,
        #[command(flatten)]
        out: OutDir,
        #[command(flatten)]
        ingest: Ingest,
    },
    /// Score the test split and compare against baseline checkpoints.
    Eval {
        /// Corpus directory with test.jsonl (and train.jsonl with --slices).
        #[arg(long)]
        corpus: PathBuf,
        /// Model directory containing seed-<n>/checkpoint.json.
        #[arg(long)]
        checkpoints: PathBuf,
        /// Baseline directory containing seed-<n>/checkpoint.json.
        #[arg(long)]
        baseline_ckpts: PathBuf,
        /// Slices to report on; defaults to the slices the model was trained with.
        #[arg(long)]
        slices: Option<PathBuf>,
        #[command(flatten)]
        out: OutDir,
        #[command(flatten)]
        ingest: Ingest,
    },
    /// Correlate slice properties with slice dMAP.
    Analyze {
        /// Evaluation reports or slice reports (JSON).
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Also write correlation.json/txt here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare analytic gradients with finite differences on a small model.
    Audit {
        /// Models to audit (repeatable); baseline and sram by default.
        #[arg(long, value_parser = parse_model)]
        model: Vec<ModelKind>,
        /// Audit settings (JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// synth, slice-report, train (all three models), eval and analyze in one go.
    Pipeline {
        /// Pipeline configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: slicerank_core::Error| e.to_string())
}

/// Largest relative error the audit accepts.
pub const AUDIT_TOLERANCE: f64 = 1e-4;

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Synth { config, out } => commands::synth(&config, &out.out),
        Command::Validate { corpus, split, json, ingest } => {
            let (report, skipped) = commands::validate(&corpus, split, ingest.policy())?;
            commands::print_validation(&report, json);
            if skipped > 0 {
                log::warn!("{skipped} invalid records skipped");
            }
            Ok(())
        }
        Command::SliceReport { corpus, slices, split, out, ingest } => {
            commands::slice_report_cmd(&corpus, &slices, split, ingest.policy(), out.as_deref())?;
            Ok(())
        }
        Command::Train { corpus, slices, train_config, model, seeds, out, ingest } => {
            let seeds = parse_seeds(&seeds)?;
            commands::train_cmd(
                &corpus,
                slices.as_deref(),
                train_config.as_deref(),
                model,
                &seeds,
                ingest.policy(),
                &out.out,
            )?;
            Ok(())
        }
        Command::Eval { corpus, checkpoints, baseline_ckpts, slices, out, ingest } => {
            commands::eval_cmd(&corpus, &checkpoints, &baseline_ckpts, slices.as_deref(), ingest.policy(), &out.out)?;
            Ok(())
        }
        Command::Analyze { reports, out } => {
            commands::analyze_cmd(&reports, out.as_deref())?;
            Ok(())
        }
        Command::Audit { model, config, seed } => audit(model, config.as_deref(), seed),
        Command::Pipeline { config, out } => {
            let cfg: PipelineConfig = read_config(&config)?;
            commands::pipeline(&cfg, &out.out)?;
            Ok(())
        }
    }
}

fn audit(models: Vec<ModelKind>, config: Option<&Path>, seed: Option<u64>) -> CliResult<()> {
    let mut cfg: AuditConfig = match config {
        Some(p) => read_config(p)?,
        None => AuditConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let models = if models.is_empty() {
        vec![ModelKind::Baseline, ModelKind::Sram]
    } else {
        models
    };
    let reports = commands::audit_cmd(&models, &cfg)?;
    for r in &reports {
        print!("{}", lines_to_string(&render_audit(r)));
    }
    match reports.iter().find(|r| !(r.worst_relative_error < AUDIT_TOLERANCE)) {
        Some(r) => Err(CliError::Numerical(format!(
            "{} gradient audit failed: relative error {:.3e} in {} (tolerance {AUDIT_TOLERANCE:e})",
            r.model.as_str(),
            r.worst_relative_error,
            r.worst_tensor
        ))),
        None => Ok(()),
    }
}

