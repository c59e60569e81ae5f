use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::optim::Optimizer;
use crate::corpus::Instance;
use crate::encoder::{build_vocab, BackboneConfig, EncodedPair};
use crate::metrics::{average_precision_of_scores, mean_average_precision};
use crate::rng::Stream;
use crate::slicing::SliceMatrix;
use crate::sram::{
    BaselineParams, LossBreakdown, LossWeights, ModelKind, Ranker, SramParams, TrainedModel,
};
use crate::tensor::ParamSet;
use crate::{Error, Result};

/// Source of wall-clock readings. Timing never feeds back into training;
/// `NoClock` keeps histories free of it.
pub trait Clock {
    fn now_seconds(&mut self) -> Option<f64>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_seconds(&mut self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub loss: LossBreakdown,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: usize,
    pub epoch: usize,
    pub dev_map: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub steps: Vec<StepRecord>,
    /// The first evaluation is the untrained model at step 0.
    pub evals: Vec<EvalRecord>,
    pub best_step: usize,
    pub best_dev_map: f64,
    pub epochs_completed: usize,
    pub stopped_early: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epoch_seconds: Vec<f64>,
}

impl TrainHistory {
    pub fn untrained_dev_map(&self) -> f64 {
        self.evals[0].dev_map
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters of the best dev-MAP evaluation.
    pub model: TrainedModel,
    pub history: TrainHistory,
}

/// Mean average precision of `model` over `instances`.
pub fn evaluate_map(model: &TrainedModel, instances: &[Instance]) -> Result<f64> {
    let aps = instances
        .iter()
        .map(|inst| average_precision_of_scores(&model.score_instance(inst)?, &inst.labels()))
        .collect::<Result<Vec<f64>>>()?;
    mean_average_precision(&aps)
}

struct Pair {
    encoded: EncodedPair,
    label: u8,
    row: usize,
}

fn encode_all(model: &TrainedModel, instances: &[Instance]) -> Vec<Pair> {
    let mut pairs = Vec::new();
    for (row, inst) in instances.iter().enumerate() {
        for (c, cand) in inst.candidates.iter().enumerate() {
            pairs.push(Pair {
                encoded: model.encode(inst, c),
                label: cand.label,
                row,
            });
        }
    }
    pairs
}

fn sf_row(kind: ModelKind, matrix: &SliceMatrix, row: usize) -> &[bool] {
    if kind.is_slice_aware() {
        matrix.row(row)
    } else {
        &[true]
    }
}

/// Mean loss over every (instance, candidate) pair, without gradients.
pub fn training_loss(
    model: &TrainedModel,
    instances: &[Instance],
    matrix: &SliceMatrix,
    weights: LossWeights,
) -> Result<LossBreakdown> {
    if model.kind.is_slice_aware() {
        matrix.check_alignment(instances)?;
    }
    let pairs = encode_all(model, instances);
    let mut total = LossBreakdown::default();
    for p in &pairs {
        total.add(&model.ranker.loss(&p.encoded, p.label, sf_row(model.kind, matrix, p.row), weights)?);
    }
    Ok(total.scaled(1.0 / pairs.len().max(1) as f64))
}

fn init_model(
    train: &[Instance],
    matrix: &SliceMatrix,
    cfg: &TrainConfig,
    kind: ModelKind,
) -> Result<TrainedModel> {
    let vocab = build_vocab(train, cfg.min_freq)?;
    let config = BackboneConfig {
        vocab_size: vocab.len(),
        d_model: cfg.d_model,
        d_ff: cfg.d_ff,
        max_len: cfg.max_len,
    };
    let ranker = match kind {
        ModelKind::Baseline => Ranker::Baseline(BaselineParams::init(config, cfg.seed)),
        ModelKind::Sram | ModelKind::SramRandom => {
            let mut p = SramParams::init(config, matrix.slice_names.clone(), cfg.seed)?;
            p.gate = cfg.gate;
            Ranker::Sram(p)
        }
    };
    Ok(TrainedModel {
        kind,
        seed: cfg.seed,
        vocab,
        ranker,
    })
}

/// Trains one model. The result is a pure function of the inputs: the
/// vocabulary, initialization and per-epoch shuffles all derive from
/// `cfg.seed`. The slice matrix is ignored for the baseline.
pub fn train(
    train: &[Instance],
    dev: &[Instance],
    matrix: &SliceMatrix,
    cfg: &TrainConfig,
    kind: ModelKind,
    clock: &mut dyn Clock,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let weights = cfg.loss_weights()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::Input("training and dev sets must be non-empty".into()));
    }
    if kind.is_slice_aware() {
        matrix.check_alignment(train)?;
    }
    let mut model = init_model(train, matrix, cfg, kind)?;
    let pairs = encode_all(&model, train);
    let mut optimizer = Optimizer::new(&model.ranker, cfg);
    let mut grads = model.ranker.zeros_like();

    let mut history = TrainHistory {
        steps: Vec::new(),
        evals: Vec::new(),
        best_step: 0,
        best_dev_map: f64::NEG_INFINITY,
        epochs_completed: 0,
        stopped_early: false,
        epoch_seconds: Vec::new(),
    };
    let mut best = model.ranker.clone();
    let mut since_best = 0usize;
    let mut step = 0usize;

    // Returns true when training should stop.
    let mut evaluate = |model: &TrainedModel,
                        history: &mut TrainHistory,
                        best: &mut Ranker,
                        step: usize,
                        epoch: usize|
     -> Result<bool> {
        let dev_map = evaluate_map(model, dev)?;
        history.evals.push(EvalRecord { step, epoch, dev_map });
        if dev_map > history.best_dev_map {
            history.best_dev_map = dev_map;
            history.best_step = step;
            *best = model.ranker.clone();
            since_best = 0;
        } else {
            since_best += 1;
        }
        Ok(cfg.patience > 0 && since_best >= cfg.patience)
    };

    evaluate(&model, &mut history, &mut best, 0, 0)?;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    'epochs: for epoch in 1..=cfg.epochs {
        let started = clock.now_seconds();
        Stream::new(cfg.seed, &format!("trainer/shuffle/{epoch}")).shuffle(&mut order);
        let mut last_eval = usize::MAX;
        for batch in order.chunks(cfg.batch_size) {
            step += 1;
            grads.scale(0.0);
            let mut loss = LossBreakdown::default();
            for &i in batch {
                let p = &pairs[i];
                let row = sf_row(kind, matrix, p.row);
                loss.add(&model.ranker.accumulate(&p.encoded, p.label, row, weights, &mut grads)?);
            }
            let inv = 1.0 / batch.len() as f64;
            let loss = loss.scaled(inv);
            grads.scale(inv);
            if !loss.is_finite() {
                return Err(Error::NonFinite { step, what: String::from("training loss") });
            }
            if !grads.all_finite() {
                return Err(Error::NonFinite { step, what: String::from("gradient") });
            }
            let grad_norm = grads.global_norm();
            if let Some(clip) = cfg.clip_norm {
                if grad_norm > clip {
                    grads.scale(clip / grad_norm);
                }
            }
            optimizer.step(&mut model.ranker, &grads);
            if !model.ranker.all_finite() {
                return Err(Error::NonFinite { step, what: String::from("parameters") });
            }
            history.steps.push(StepRecord { step, epoch, loss, grad_norm });
            if step.is_multiple_of(cfg.eval_every) {
                last_eval = step;
                if evaluate(&model, &mut history, &mut best, step, epoch)? {
                    history.stopped_early = true;
                    history.epochs_completed = epoch;
                    break 'epochs;
                }
            }
        }
        if last_eval != step && evaluate(&model, &mut history, &mut best, step, epoch)? {
            history.stopped_early = true;
        }
        history.epochs_completed = epoch;
        if let (Some(a), Some(b)) = (started, clock.now_seconds()) {
            history.epoch_seconds.push(b - a);
        }
        if history.stopped_early {
            break;
        }
    }
    model.ranker = best;
    Ok(TrainOutcome { model, history })
}

/// Independent runs, one per seed, in the given order.
pub fn multi_seed_run(
    train_set: &[Instance],
    dev: &[Instance],
    matrix: &SliceMatrix,
    cfg: &TrainConfig,
    seeds: &[u64],
    kind: ModelKind,
    clock: &mut dyn Clock,
) -> Result<Vec<(u64, TrainOutcome)>> {
    let distinct: BTreeSet<u64> = seeds.iter().copied().collect();
    if distinct.len() != seeds.len() {
        return Err(Error::Config(format!("seeds must be distinct, got {seeds:?}")));
    }
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    seeds
        .iter()
        .map(|&seed| {
            let cfg = TrainConfig { seed, ..cfg.clone() };
            train(train_set, dev, matrix, &cfg, kind, clock).map(|o| (seed, o))
        })
        .collect()
}
