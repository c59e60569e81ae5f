//! Named-tensor checkpoint container.
//!
//! Shared tensors are stored as `backbone.<name>` and `head.<name>`.
//! Tensors that belong to one slice are split out of their stacked form
//! and stored as `slice.<slice name>.<name>`, so a checkpoint can be read
//! without the slice configuration that produced it.

use std::path::Path;

use serde::{Deserialize, Serialize};
use slicerank_core::encoder::{BackboneConfig, VocabTable, Vocabulary};
use slicerank_core::sram::{BaselineParams, GateMode, ModelKind, Ranker, SramParams, TrainedModel};
use slicerank_core::tensor::{ParamSet, Tensor};
use slicerank_core::Error as CoreError;

use crate::error::{CliError, CliResult};
use crate::io::{read_json, write_json};

pub const FORMAT_VERSION: u32 = 1;

/// Tensors stacked along a leading slice axis in `SramParams`.
const PER_SLICE: [&str; 4] = ["member_w", "member_b", "expert_w", "expert_b"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub seed: u64,
    pub backbone: BackboneConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateMode>,
    pub slice_names: Vec<String>,
    pub vocabulary: VocabTable,
    pub tensors: Vec<Tensor>,
}

fn config_of(ranker: &Ranker) -> BackboneConfig {
    match ranker {
        Ranker::Baseline(p) => p.backbone.config,
        Ranker::Sram(p) => p.backbone.config,
    }
}

impl Checkpoint {
    pub fn from_model(model: &TrainedModel) -> Self {
        let mut tensors = Vec::new();
        let (backbone, gate) = match &model.ranker {
            Ranker::Baseline(p) => (&p.backbone, None),
            Ranker::Sram(p) => (&p.backbone, Some(p.gate)),
        };
        for t in backbone.tensors() {
            tensors.push(Tensor {
                name: format!("backbone.{}", t.name),
                ..t.clone()
            });
        }
        let slice_names = model.ranker.slice_names();
        let heads: Vec<&Tensor> = match &model.ranker {
            Ranker::Baseline(p) => vec![&p.head_w, &p.head_b],
            Ranker::Sram(p) => p.tensors()[backbone.tensors().len()..].to_vec(),
        };
        for t in heads {
            if PER_SLICE.contains(&t.name.as_str()) {
                let k = slice_names.len();
                let inner: Vec<usize> = t.shape[1..].to_vec();
                let chunk = t.data.len() / k;
                for (j, name) in slice_names.iter().enumerate() {
                    tensors.push(Tensor {
                        name: format!("slice.{name}.{}", t.name),
                        shape: if inner.is_empty() { vec![1] } else { inner.clone() },
                        data: t.data[j * chunk..(j + 1) * chunk].to_vec(),
                    });
                }
            } else {
                tensors.push(Tensor {
                    name: format!("head.{}", t.name),
                    ..t.clone()
                });
            }
        }
        Checkpoint {
            format_version: FORMAT_VERSION,
            model_kind: model.kind,
            seed: model.seed,
            backbone: config_of(&model.ranker),
            gate,
            slice_names,
            vocabulary: model.vocab.to_table(),
            tensors,
        }
    }

    pub fn into_model(self) -> Result<TrainedModel, CoreError> {
        if self.format_version != FORMAT_VERSION {
            return Err(CoreError::Input(format!(
                "unsupported checkpoint format version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let vocab = Vocabulary::from_table(self.vocabulary)?;
        if vocab.len() != self.backbone.vocab_size {
            return Err(CoreError::Dimension(format!(
                "vocabulary has {} terms but the backbone expects {}",
                vocab.len(),
                self.backbone.vocab_size
            )));
        }
        let mut ranker = match self.model_kind {
            ModelKind::Baseline => Ranker::Baseline(BaselineParams::init(self.backbone, 0)),
            ModelKind::Sram | ModelKind::SramRandom => {
                let mut p = SramParams::init(self.backbone, self.slice_names.clone(), 0)?;
                p.gate = self.gate.unwrap_or_default();
                Ranker::Sram(p)
            }
        };
        let k = self.slice_names.len();
        let mut stored: std::collections::BTreeMap<String, Tensor> =
            self.tensors.into_iter().map(|t| (t.name.clone(), t)).collect();
        let backbone_count = match &ranker {
            Ranker::Baseline(p) => p.backbone.tensors().len(),
            Ranker::Sram(p) => p.backbone.tensors().len(),
        };
        for (i, t) in ranker.tensors_mut().into_iter().enumerate() {
            if i >= backbone_count && PER_SLICE.contains(&t.name.as_str()) {
                let chunk = t.data.len() / k;
                for (j, slice) in self.slice_names.iter().enumerate() {
                    let key = format!("slice.{slice}.{}", t.name);
                    let src = stored
                        .remove(&key)
                        .ok_or_else(|| CoreError::Input(format!("checkpoint lacks tensor `{key}`")))?;
                    if src.data.len() != chunk {
                        return Err(CoreError::Dimension(format!(
                            "`{key}` has {} values, expected {chunk}",
                            src.data.len()
                        )));
                    }
                    t.data[j * chunk..(j + 1) * chunk].copy_from_slice(&src.data);
                }
            } else {
                let prefix = if i < backbone_count { "backbone" } else { "head" };
                let key = format!("{prefix}.{}", t.name);
                let src = stored
                    .remove(&key)
                    .ok_or_else(|| CoreError::Input(format!("checkpoint lacks tensor `{key}`")))?;
                if src.shape != t.shape || src.data.len() != t.data.len() {
                    return Err(CoreError::Dimension(format!(
                        "`{key}` has shape {:?}, expected {:?}",
                        src.shape, t.shape
                    )));
                }
                t.data = src.data;
            }
        }
        if let Some(extra) = stored.keys().next() {
            return Err(CoreError::Input(format!("unexpected checkpoint tensor `{extra}`")));
        }
        ranker.check()?;
        Ok(TrainedModel {
            kind: self.model_kind,
            seed: self.seed,
            vocab,
            ranker,
        })
    }
}

pub fn save_checkpoint(path: &Path, model: &TrainedModel) -> CliResult<()> {
    write_json(path, &Checkpoint::from_model(model))
}

pub fn load_checkpoint(path: &Path) -> CliResult<TrainedModel> {
    let ckpt: Checkpoint = read_json(path)?;
    ckpt.into_model().map_err(|e| CliError::in_file(path, e))
}
