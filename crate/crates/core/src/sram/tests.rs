use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::corpus::{Candidate, Instance};
use crate::encoder::{build_vocab, BackboneConfig, EncodedPair};
use crate::rng::Stream;
use crate::tensor::{dot, ParamSet};

const TINY: BackboneConfig = BackboneConfig {
    vocab_size: 50,
    d_model: 8,
    d_ff: 16,
    max_len: 16,
};

fn names(k: usize) -> Vec<String> {
    let mut v = vec![String::from("BASE")];
    v.extend((1..=k).map(|i| alloc::format!("s{i}")));
    v
}

fn random_pair(rng: &mut Stream) -> EncodedPair {
    let n = rng.between(3, 16);
    let mut ids = vec![2u32];
    ids.extend((1..n).map(|_| rng.between(4, 49) as u32));
    let mut mask = vec![1u8; n];
    ids.resize(16, 0);
    mask.resize(16, 0);
    EncodedPair { ids, mask }
}

fn jitter(params: &mut SramParams, seed: u64, scale: f64) {
    let mut rng = Stream::new(seed, "jitter");
    for t in params.tensors_mut() {
        for x in t.data.iter_mut() {
            *x += scale * rng.normal();
        }
    }
}

fn random_params(k: usize, seed: u64) -> SramParams {
    let mut p = SramParams::init(TINY, names(k), seed).unwrap();
    jitter(&mut p, seed, 0.1);
    p
}

#[test]
fn singleton_attention_for_base_only() {
    let p = random_params(0, 1);
    let mut rng = Stream::new(1, "pairs");
    for _ in 0..100 {
        let t = sram_forward(&p, &random_pair(&mut rng)).unwrap();
        assert_eq!(t.a, vec![1.0]);
        for (h, r) in t.h.iter().zip(t.expert(0)) {
            assert_eq!(h, r);
        }
    }
}

#[test]
fn attention_is_a_simplex() {
    let mut rng = Stream::new(2, "pairs");
    for trial in 0..100 {
        let p = random_params(1 + trial % 6, trial as u64);
        let t = sram_forward(&p, &random_pair(&mut rng)).unwrap();
        assert!(t.a.iter().all(|&a| a >= 0.0));
        assert!((t.a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn combine_attention_examples() {
    assert_eq!(combine_attention(&[0.3], &[-2.0]), vec![1.0]);
    let a = combine_attention(&[1.0, 0.0, 0.5], &[0.0, 1.0, -0.5]);
    for x in &a {
        assert!((x - 1.0 / 3.0).abs() < 1e-15);
    }
    let a = combine_attention(&[libm::log(2.0), 0.0], &[0.0, 0.0]);
    assert!((a[0] - 2.0 / 3.0).abs() < 1e-15);
    assert!((a[1] - 1.0 / 3.0).abs() < 1e-15);
    let shifted = combine_attention(&[libm::log(2.0) + 5.0, 5.0], &[0.0, 0.0]);
    assert!((shifted[0] - a[0]).abs() < 1e-15);
}

#[test]
fn zero_experts_are_identity() {
    let mut p = random_params(3, 4);
    p.expert_w.fill_zero();
    p.expert_b.fill_zero();
    let t = sram_forward(&p, &random_pair(&mut Stream::new(4, "x"))).unwrap();
    for j in 0..4 {
        assert_eq!(t.expert(j), t.z());
    }
    for (h, z) in t.h.iter().zip(t.z()) {
        assert!((h - z).abs() < 1e-12);
    }
}

#[test]
fn zero_weights_leave_only_final_term() {
    let p = random_params(2, 5);
    let t = sram_forward(&p, &random_pair(&mut Stream::new(5, "x"))).unwrap();
    let l = sram_loss(&t, 1, &[true, false, true], 0.0, 0.0).unwrap();
    assert_eq!(l.total, l.final_term);
    assert!(l.membership_term > 0.0 && l.expert_term > 0.0);
    assert!(sram_loss(&t, 1, &[true, false, true], -1.0, 0.0).is_err());
    assert!(sram_loss(&t, 1, &[false, false, true], 1.0, 1.0).is_err());
    assert!(sram_loss(&t, 1, &[true, false], 1.0, 1.0).is_err());
}

#[test]
fn weighted_sum_is_exact() {
    let p = random_params(2, 6);
    let t = sram_forward(&p, &random_pair(&mut Stream::new(6, "x"))).unwrap();
    let l = sram_loss(&t, 0, &[true, true, false], 0.7, 1.3).unwrap();
    assert_eq!(l.total, l.final_term + 0.7 * l.membership_term + 1.3 * l.expert_term);
    assert!(l.final_term >= 0.0 && l.membership_term >= 0.0 && l.expert_term >= 0.0);
}

#[test]
fn confident_correct_predictions_drive_loss_to_zero() {
    // Saturate every head towards its target: final and expert logits
    // towards the label, membership logits towards the slice row.
    let mut p = SramParams::init(TINY, names(1), 7).unwrap();
    let sf_row = [true, false];
    p.final_w.fill_zero();
    p.final_b.data[0] = 60.0;
    p.slice_head_w.fill_zero();
    p.slice_head_b.data[0] = 60.0;
    p.member_w.fill_zero();
    p.member_b.data = vec![60.0, -60.0];
    let t = sram_forward(&p, &random_pair(&mut Stream::new(7, "x"))).unwrap();
    let l = sram_loss(&t, 1, &sf_row, 1.0, 1.0).unwrap();
    assert!(l.total < 1e-20, "{l:?}");
}

/// Central-difference gradient of `f` for every entry of every tensor;
/// returns the worst relative error against `analytic`.
fn worst_relative_error(
    params: &SramParams,
    analytic: &SramParams,
    f: &dyn Fn(&SramParams) -> f64,
) -> f64 {
    let h = 1e-5;
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for ti in 0..params.tensors().len() {
        for j in 0..params.tensors()[ti].len() {
            let orig = params.tensors()[ti].data[j];
            probe.tensors_mut()[ti].data[j] = orig + h;
            let up = f(&probe);
            probe.tensors_mut()[ti].data[j] = orig - h;
            let down = f(&probe);
            probe.tensors_mut()[ti].data[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.tensors()[ti].data[j];
            worst = worst.max((numeric - a).abs() / numeric.abs().max(a.abs()).max(1e-6));
        }
    }
    worst
}

#[test]
fn gradients_match_central_differences() {
    let p = random_params(2, 8);
    let mut rng = Stream::new(8, "pairs");
    let batch: Vec<(EncodedPair, u8, Vec<bool>)> = vec![
        (random_pair(&mut rng), 1, vec![true, true, false]),
        (random_pair(&mut rng), 0, vec![true, false, true]),
        (random_pair(&mut rng), 1, vec![true, false, false]),
    ];
    let objective = |q: &SramParams| -> f64 {
        batch
            .iter()
            .map(|(x, y, row)| {
                let t = sram_forward(q, x).unwrap();
                sram_loss(&t, *y, row, 0.8, 1.2).unwrap().total
            })
            .sum()
    };
    let mut grads = p.zeros_like();
    for (x, y, row) in &batch {
        let (_, g) = sram_backward(&p, x, *y, row, 0.8, 1.2).unwrap();
        grads.add_scaled(&g, 1.0);
    }
    let worst = worst_relative_error(&p, &grads, &objective);
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn out_of_slice_expert_gets_no_expert_loss_gradient() {
    let mut rng = Stream::new(9, "pairs");
    let only_expert = LossWeights {
        final_weight: 0.0,
        alpha: 0.0,
        beta: 1.0,
    };
    let d = TINY.d_model;
    for trial in 0..100 {
        let k = 2 + trial % 3;
        let p = random_params(k, 100 + trial as u64);
        let mut row = vec![true];
        row.extend((0..k).map(|_| rng.bernoulli(0.5)));
        let mut g = p.zeros_like();
        sram_backward_weighted(&p, &random_pair(&mut rng), (trial % 2) as u8, &row, only_expert, &mut g)
            .unwrap();
        for (j, &inside) in row.iter().enumerate() {
            let w = &g.expert_w.data[j * d * d..(j + 1) * d * d];
            let b = &g.expert_b.data[j * d..(j + 1) * d];
            if !inside {
                assert!(w.iter().chain(b).all(|&x| x == 0.0));
            }
        }
    }
}

#[test]
fn membership_heads_only_reach_loss_through_attention() {
    let p = random_params(2, 10);
    let pair = random_pair(&mut Stream::new(10, "x"));
    let row = [true, true, false];
    let (_, g) = sram_backward(&p, &pair, 1, &row, 0.0, 0.0).unwrap();
    assert!(g.member_w.data.iter().any(|&x| x != 0.0));

    let mut detached = p.clone();
    detached.gate = GateMode::ConfidenceOnly;
    let (_, g) = sram_backward(&detached, &pair, 1, &row, 0.0, 0.0).unwrap();
    assert!(g.member_w.data.iter().chain(&g.member_b.data).all(|&x| x == 0.0));
}

#[test]
fn duplicated_pair_doubles_its_gradient() {
    let p = random_params(1, 11);
    let pair = random_pair(&mut Stream::new(11, "x"));
    let row = [true, true];
    let mut once = p.zeros_like();
    sram_backward_weighted(&p, &pair, 1, &row, LossWeights::default(), &mut once).unwrap();
    let mut twice = p.zeros_like();
    for _ in 0..2 {
        sram_backward_weighted(&p, &pair, 1, &row, LossWeights::default(), &mut twice).unwrap();
    }
    for (a, b) in once.tensors().iter().zip(twice.tensors()) {
        let scale = b.data.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        for (x, y) in a.data.iter().zip(&b.data) {
            assert!((2.0 * x - y).abs() <= 1e-12 * scale + 1e-15, "{} {x} {y}", a.name);
        }
    }
}

#[test]
fn baseline_is_deterministic_and_checks_gradients() {
    let mut p = BaselineParams::init(TINY, 12);
    let mut rng = Stream::new(12, "jitter");
    for t in p.tensors_mut() {
        t.data.iter_mut().for_each(|x| *x += 0.1 * rng.normal());
    }
    let pair = random_pair(&mut Stream::new(12, "x"));
    assert_eq!(baseline_forward(&p, &pair).unwrap(), baseline_forward(&p, &pair).unwrap());

    let mut g = p.zeros_like();
    baseline_backward(&p, &pair, 1, &mut g).unwrap();
    let h = 1e-5;
    let mut probe = p.clone();
    let mut worst: f64 = 0.0;
    for ti in 0..p.tensors().len() {
        for j in 0..p.tensors()[ti].len() {
            let orig = p.tensors()[ti].data[j];
            let f = |q: &BaselineParams| {
                crate::math::bce_with_logits(baseline_forward(q, &pair).unwrap(), 1.0)
            };
            probe.tensors_mut()[ti].data[j] = orig + h;
            let up = f(&probe);
            probe.tensors_mut()[ti].data[j] = orig - h;
            let down = f(&probe);
            probe.tensors_mut()[ti].data[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = g.tensors()[ti].data[j];
            worst = worst.max((numeric - a).abs() / numeric.abs().max(a.abs()).max(1e-6));
        }
    }
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn single_slot_with_zero_expert_collapses_to_baseline() {
    let base = BaselineParams::init(TINY, 13);
    let mut sram = SramParams::init(TINY, names(0), 13).unwrap();
    sram.backbone = base.backbone.clone();
    sram.expert_w.fill_zero();
    sram.expert_b.fill_zero();
    sram.slice_head_w = base.head_w.clone();
    sram.slice_head_b = base.head_b.clone();
    sram.final_w = base.head_w.clone();
    sram.final_b = base.head_b.clone();
    let mut rng = Stream::new(13, "pairs");
    for _ in 0..50 {
        let pair = random_pair(&mut rng);
        let s = sram_forward(&sram, &pair).unwrap().s;
        assert_eq!(s.to_bits(), baseline_forward(&base, &pair).unwrap().to_bits());
    }
}

fn instance(labels: &[u8]) -> Instance {
    Instance {
        qid: "q".into(),
        question: "how do i reset the router".into(),
        context: vec!["it keeps dropping".into()],
        category: None,
        candidates: labels
            .iter()
            .enumerate()
            .map(|(i, &l)| Candidate::new(alloc::format!("try reset option {i} router"), l))
            .collect(),
    }
}

#[test]
fn scoring_is_label_blind() {
    let inst = instance(&[1, 0, 0, 1]);
    let vocab = build_vocab(core::slice::from_ref(&inst), 1).unwrap();
    let config = BackboneConfig {
        vocab_size: vocab.len(),
        ..TINY
    };
    let mut rng = Stream::new(14, "labels");
    for trial in 0..100 {
        let mut params = SramParams::init(config, names(2), trial).unwrap();
        jitter(&mut params, trial, 0.2);
        let model = TrainedModel {
            kind: ModelKind::Sram,
            seed: trial,
            vocab: vocab.clone(),
            ranker: Ranker::Sram(params),
        };
        let mut flipped = inst.clone();
        for c in flipped.candidates.iter_mut() {
            c.label = u8::from(rng.bernoulli(0.5));
        }
        let a = model.score_instance(&inst).unwrap();
        let b = model.score_instance(&flipped).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn ranking_is_stable() {
    assert_eq!(rank_by_scores(&[0.9, 0.1]), vec![0, 1]);
    assert_eq!(rank_by_scores(&[0.5, 0.5, 0.5]), vec![0, 1, 2]);
    assert_eq!(rank_by_scores(&[0.1, 0.7, 0.7, 0.9]), vec![3, 1, 2, 0]);
}

#[test]
fn membership_probabilities_average_candidates() {
    let inst = instance(&[1, 0]);
    let vocab = build_vocab(core::slice::from_ref(&inst), 1).unwrap();
    let config = BackboneConfig {
        vocab_size: vocab.len(),
        ..TINY
    };
    let params = SramParams::init(config, names(1), 3).unwrap();
    let model = TrainedModel {
        kind: ModelKind::Sram,
        seed: 3,
        vocab,
        ranker: Ranker::Sram(params.clone()),
    };
    let probs = model.membership_probabilities(&inst).unwrap().unwrap();
    let mut expected = [0.0; 2];
    for c in 0..2 {
        let t = sram_forward(&params, &model.encode(&inst, c)).unwrap();
        expected[0] += t.q[0] / 2.0;
        expected[1] += t.q[1] / 2.0;
    }
    assert!((probs[0] - expected[0]).abs() < 1e-15);
    assert!((probs[1] - expected[1]).abs() < 1e-15);
    assert_eq!(dot(&[1.0], &[1.0]), 1.0);
}
