//! Corpus files, JSON documents and tables.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter};
use std::path::{Path, PathBuf};

use log::warn;
use serde::de::DeserializeOwned;
use serde::Serialize;
use slicerank_core::corpus::{Corpus, Ingested, Instance, InvalidPolicy, Split};
use slicerank_core::encoder::Vocabulary;
use slicerank_core::slicing::SliceMatrix;
use slicerank_core::trainer::TrainHistory;
use slicerank_core::Error as CoreError;

use crate::error::{CliError, CliResult};

pub fn corpus_file(dir: &Path, split: Split) -> PathBuf {
    dir.join(format!("{}.jsonl", split.as_str()))
}

/// Reads a line-delimited corpus. Blank lines are ignored; line numbers in
/// errors are 1-based file lines.
pub fn read_corpus(path: &Path, split: Split, policy: InvalidPolicy) -> CliResult<Ingested> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: Instance = serde_json::from_str(&line).map_err(|e| {
            CliError::in_file(
                path,
                CoreError::Record {
                    line: i + 1,
                    message: format!("malformed record: {e}"),
                },
            )
        })?;
        records.push((i + 1, inst));
    }
    let ingested =
        Corpus::from_records(split, records, policy).map_err(|e| CliError::in_file(path, e))?;
    for (line, err) in &ingested.skipped {
        warn!("{}: skipped line {line}: {err}", path.display());
    }
    Ok(ingested)
}

pub fn load_split(dir: &Path, split: Split, policy: InvalidPolicy) -> CliResult<Corpus> {
    Ok(read_corpus(&corpus_file(dir, split), split, policy)?.corpus)
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> CliResult<()> {
    let mut out = String::new();
    for inst in &corpus.instances {
        out.push_str(&serde_json::to_string(inst).expect("instances serialize"));
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Pretty JSON with a trailing newline. Field order follows the types, so
/// equal values always produce equal bytes.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_text(path, &text)
}

/// Reads a JSON configuration; parse failures are configuration errors.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::BadConfig {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads a JSON document produced by this tool; parse failures are data errors.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::BadData {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_table(path: &Path, delimiter: u8, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(BufWriter::new(file));
    let fail = |e: csv::Error| CliError::BadData {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// `id`, `term`, `frequency`, one row per id.
pub fn write_vocab_tsv(path: &Path, vocab: &Vocabulary) -> CliResult<()> {
    let rows = vocab
        .to_table()
        .rows
        .into_iter()
        .map(|(term, id, freq)| vec![id.to_string(), term, freq.to_string()])
        .collect();
    write_table(path, b'\t', &["id", "term", "frequency"], rows)
}

/// `qid`, `slice`, `member` (0/1), row-major.
pub fn write_slice_matrix_csv(path: &Path, m: &SliceMatrix) -> CliResult<()> {
    let rows = m
        .to_table()
        .into_iter()
        .map(|(q, s, v)| vec![q, s, v.to_string()])
        .collect();
    write_table(path, b',', &["qid", "slice", "member"], rows)
}

pub fn read_slice_matrix_csv(path: &Path) -> CliResult<SliceMatrix> {
    let bad = |message: String| CliError::BadData {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut names: Vec<String> = Vec::new();
    let mut qids: Vec<String> = Vec::new();
    let mut membership: Vec<Vec<bool>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let (qid, slice, member) = (&rec[0], &rec[1], &rec[2]);
        if qids.last().map(String::as_str) != Some(qid) {
            qids.push(qid.to_string());
            membership.push(Vec::new());
        }
        let row = membership.last_mut().expect("row pushed");
        if qids.len() == 1 {
            names.push(slice.to_string());
        } else if names.get(row.len()).map(String::as_str) != Some(slice) {
            return Err(bad(format!("qid `{qid}`: unexpected slice `{slice}`")));
        }
        row.push(match member {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("membership must be 0 or 1, got `{other}`"))),
        });
    }
    if membership.iter().any(|r| r.len() != names.len()) {
        return Err(bad("rows have different slice counts".into()));
    }
    Ok(SliceMatrix {
        slice_names: names,
        qids,
        membership,
    })
}

/// One row per optimizer step: losses and the dev MAP of an evaluation
/// made at that step, if any.
pub fn write_history_csv(path: &Path, h: &TrainHistory) -> CliResult<()> {
    let mut evals = h.evals.iter().filter(|e| e.step > 0).peekable();
    let mut rows = Vec::with_capacity(h.steps.len() + 1);
    if let Some(e) = h.evals.first() {
        rows.push(vec![
            "0".into(),
            "0".into(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            e.dev_map.to_string(),
        ]);
    }
    for s in &h.steps {
        let dev = match evals.peek() {
            Some(e) if e.step == s.step => evals.next().map(|e| e.dev_map.to_string()),
            _ => None,
        };
        rows.push(vec![
            s.step.to_string(),
            s.epoch.to_string(),
            s.loss.total.to_string(),
            s.loss.final_term.to_string(),
            s.loss.membership_term.to_string(),
            s.loss.expert_term.to_string(),
            s.grad_norm.to_string(),
            dev.unwrap_or_default(),
        ]);
    }
    write_table(
        path,
        b',',
        &["step", "epoch", "total", "final", "membership", "expert", "grad_norm", "dev_map"],
        rows,
    )
}

/// Joins report lines, each terminated by a newline.
pub fn lines_to_string(lines: &[String]) -> String {
    lines.iter().map(|l| format!("{l}\n")).collect()
}
