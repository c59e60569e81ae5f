//! Configuration files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use slicerank_core::corpus::{Instance, SynthConfig};
use slicerank_core::slicing::{ResolvedSlice, SliceConfigEntry, SliceSpec, SliceTag};
use slicerank_core::trainer::TrainConfig;
use slicerank_core::Result as CoreResult;

use crate::error::{CliError, CliResult};
use crate::io::read_config;

/// A slice configuration file is a JSON array of entries.
pub fn read_slices(path: &Path) -> CliResult<Vec<SliceConfigEntry>> {
    read_config(path)
}

pub fn read_train_config(path: &Path) -> CliResult<TrainConfig> {
    let cfg: TrainConfig = read_config(path)?;
    cfg.validate().map_err(|e| CliError::in_file(path, e))?;
    Ok(cfg)
}

/// Resolves every `auto_fraction` against the training split.
pub fn resolve_slices(entries: &[SliceConfigEntry], train: &[Instance]) -> CoreResult<Vec<ResolvedSlice>> {
    entries.iter().map(|e| e.resolve(train)).collect()
}

pub fn specs(resolved: &[ResolvedSlice]) -> Vec<SliceSpec> {
    resolved.iter().map(|r| r.spec.clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomSlices {
    pub count: usize,
    pub fraction: f64,
    pub seed: u64,
}

impl Default for RandomSlices {
    fn default() -> Self {
        RandomSlices {
            count: 10,
            fraction: 0.5,
            seed: 1,
        }
    }
}

impl RandomSlices {
    /// `random_01`, `random_02`, ... with consecutive seeds.
    pub fn entries(&self) -> Vec<SliceConfigEntry> {
        (0..self.count)
            .map(|i| SliceConfigEntry {
                name: format!("random_{:02}", i + 1),
                kind: Some(SliceTag::RANDOM),
                fraction: Some(self.fraction),
                seed: Some(self.seed + i as u64),
                ..Default::default()
            })
            .collect()
    }
}

/// Everything the `pipeline` command needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub synth: SynthConfig,
    /// Slices for the slice-aware model.
    pub slices: Vec<SliceConfigEntry>,
    /// Slices for the random-slice ablation.
    #[serde(default)]
    pub random_slices: RandomSlices,
    #[serde(default)]
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
}

/// Parses `"0,1,2"`; ranges like `"0-4"` are accepted as well.
pub fn parse_seeds(text: &str) -> CliResult<Vec<u64>> {
    let bad = || CliError::Usage(format!("cannot parse seed list `{text}` (use e.g. 0,1,2 or 0-4)"));
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    if seeds.is_empty() {
        return Err(bad());
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != seeds.len() {
        return Err(CliError::Usage(format!("seeds must be distinct, got `{text}`")));
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds() {
        assert_eq!(parse_seeds("0,1,2").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("3-5,9").unwrap(), vec![3, 4, 5, 9]);
        assert!(parse_seeds("1,1").is_err());
        assert!(parse_seeds("x").is_err());
        assert!(parse_seeds("").is_err());
    }

    #[test]
    fn random_entries_resolve() {
        let e = RandomSlices::default().entries();
        assert_eq!(e.len(), 10);
        assert_eq!(e[9].name, "random_10");
        for entry in &e {
            SliceSpec::try_from(entry.clone()).unwrap();
        }
    }

    #[test]
    fn pipeline_config_requires_seeds() {
        let text = r#"{"synth": {"n_train": 5, "n_dev": 5, "n_test": 5, "n_candidates": 4,
            "vocab_size": 100, "regime_mix": 0.5, "seed": 1}, "slices": []}"#;
        let err = serde_json::from_str::<PipelineConfig>(text).unwrap_err().to_string();
        assert!(err.contains("seeds"), "{err}");
    }
}
