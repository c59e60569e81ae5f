#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    fn from(out: Output) -> Self {
        Run {
            code: out.status.code().expect("exited normally"),
            stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        }
    }

    pub fn ok(self) -> Self {
        assert_eq!(self.code, 0, "stdout:\n{}\nstderr:\n{}", self.stdout, self.stderr);
        self
    }
}

pub fn slicerank(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_slicerank"))
        .args(args)
        .env_remove("SLICERANK_OUT")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs");
    Run::from(out)
}

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn config_path(name: &str) -> PathBuf {
    workspace_root().join("configs").join(name)
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

pub fn write_json(path: &Path, v: &Value) -> PathBuf {
    fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path.to_path_buf()
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
        .unwrap()
}

pub fn small_synth(n: usize, seed: u64) -> Value {
    json!({
        "n_train": n, "n_dev": n / 2, "n_test": n / 2,
        "n_candidates": 10, "vocab_size": 400, "regime_mix": 0.5, "seed": seed
    })
}

pub fn tiny_train(epochs: usize) -> Value {
    json!({
        "epochs": epochs, "batch_size": 16, "learning_rate": 0.003,
        "max_len": 32, "d_model": 8, "d_ff": 16, "eval_every": 1000, "patience": 0
    })
}

pub fn regime_slices() -> Value {
    json!([
        { "name": "qc_regimeA", "kind": "QC", "category": "regimeA" },
        { "name": "qc_regimeB", "kind": "QC", "category": "regimeB" },
        { "name": "qdtm_low", "kind": "QDTM", "auto_fraction": 0.5 }
    ])
}

/// Synthesizes a small corpus under `dir/corpus`.
pub fn synth_corpus(dir: &Path, n: usize) -> PathBuf {
    let cfg = write_json(&dir.join("synth.json"), &small_synth(n, 3));
    let corpus = dir.join("corpus");
    slicerank(&["synth", "--config", p(&cfg), "--out", p(&corpus)]).ok();
    corpus
}
