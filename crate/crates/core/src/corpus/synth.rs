//! Synthetic corpus with two relevance regimes.
//!
//! * Regime A: the relevant response repeats at least 60% of the question's
//!   content terms; non-relevant responses share almost none and half of them
//!   carry a marker token.
//! * Regime B: the relevant response shares fewer than 20% of the question's
//!   content terms but carries a marker token; non-relevant responses repeat
//!   most of the question and carry no marker.
//!
//! The two regimes draw question terms from disjoint topic pools, so the
//! regime is observable from the question text, and the instance records it
//! in `category`. Within a regime one rule ranks perfectly; applied to the
//! other regime the same rule ranks the relevant response last.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Candidate, Corpus, Instance, Split};
use crate::rng::Stream;
use crate::{Error, Result};

pub const REGIME_A: &str = "regimeA";
pub const REGIME_B: &str = "regimeB";

const MIN_QUESTION_TERMS: usize = 4;
const MAX_QUESTION_TERMS: usize = 10;
const MAX_CONTEXT_TURNS: usize = 3;
const QUESTION_WORDS: [&str; 6] = ["who", "what", "where", "when", "why", "how"];
const QUESTION_WORD_RATE: f64 = 0.75;
const NEGATIVE_MARKER_RATE: f64 = 0.5;
const MIN_VOCAB: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
    pub n_candidates: usize,
    pub vocab_size: usize,
    pub regime_mix: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_train: 2000,
            n_dev: 500,
            n_test: 500,
            n_candidates: 10,
            vocab_size: 400,
            regime_mix: 0.5,
            seed: 13,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_train", self.n_train),
            ("n_dev", self.n_dev),
            ("n_test", self.n_test),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.n_candidates < 2 {
            return Err(Error::Config("n_candidates must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.regime_mix) {
            return Err(Error::Config(format!(
                "regime_mix must lie in [0, 1], got {}",
                self.regime_mix
            )));
        }
        if self.vocab_size < MIN_VOCAB {
            return Err(Error::Config(format!(
                "vocab_size {} is too small to satisfy the overlap constraints (need at least {MIN_VOCAB})",
                self.vocab_size
            )));
        }
        Ok(())
    }
}

struct Pools {
    topic_a: Vec<String>,
    topic_b: Vec<String>,
    filler: Vec<String>,
    markers: Vec<String>,
}

impl Pools {
    fn new(vocab_size: usize) -> Self {
        let topic = vocab_size * 2 / 5;
        let word = |i: usize| format!("w{i}");
        Pools {
            topic_a: (0..topic).map(word).collect(),
            topic_b: (topic..2 * topic).map(word).collect(),
            filler: (2 * topic..vocab_size).map(word).collect(),
            markers: (0..(vocab_size / 20).max(4)).map(|i| format!("mk{i}")).collect(),
        }
    }
}

/// Smallest overlap count that is at least 60% of `n` content terms.
pub(crate) fn high_overlap_min(n: usize) -> usize {
    (3 * n).div_ceil(5)
}

/// Largest overlap count that is strictly below 20% of `n` content terms.
pub(crate) fn low_overlap_max(n: usize) -> usize {
    n.div_ceil(5) - 1
}

/// Generates the train, dev and test splits. Pure in `cfg`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<(Corpus, Corpus, Corpus)> {
    cfg.validate()?;
    let pools = Pools::new(cfg.vocab_size);
    let mut splits = Vec::with_capacity(3);
    for (split, n) in [
        (Split::Train, cfg.n_train),
        (Split::Dev, cfg.n_dev),
        (Split::Test, cfg.n_test),
    ] {
        let mut rng = Stream::new(cfg.seed, &format!("synth/{}", split.as_str()));
        let instances = (0..n)
            .map(|i| {
                let qid = format!("{}-{:05}", split.as_str(), i);
                let regime_b = rng.bernoulli(cfg.regime_mix);
                generate_instance(&mut rng, &pools, qid, regime_b, cfg.n_candidates)
            })
            .collect();
        splits.push(Corpus::new(split, instances)?);
    }
    let test = splits.pop().unwrap();
    let dev = splits.pop().unwrap();
    let train = splits.pop().unwrap();
    Ok((train, dev, test))
}

fn generate_instance(
    rng: &mut Stream,
    pools: &Pools,
    qid: String,
    regime_b: bool,
    n_candidates: usize,
) -> Instance {
    let topic = if regime_b {
        &pools.topic_b
    } else {
        &pools.topic_a
    };
    let n_terms = rng.between(MIN_QUESTION_TERMS, MAX_QUESTION_TERMS);
    let terms = rng.sample(topic, n_terms);
    let off_question: Vec<String> = topic.iter().filter(|w| !terms.contains(w)).cloned().collect();

    let mut question_words = terms.clone();
    rng.shuffle(&mut question_words);
    if rng.bernoulli(QUESTION_WORD_RATE) {
        question_words.insert(0, QUESTION_WORDS[rng.below(QUESTION_WORDS.len())].into());
    }
    let question = format!("{}?", question_words.join(" "));

    let context = (0..rng.between(0, MAX_CONTEXT_TURNS))
        .map(|_| {
            let n = rng.between(3, 6);
            rng.sample(&pools.filler, n).join(" ")
        })
        .collect();

    let high = |rng: &mut Stream| {
        let shared = rng.between(high_overlap_min(n_terms), n_terms);
        let mut words = rng.sample(&terms, shared);
        let extra = rng.between(0, 2);
        words.extend(rng.sample(&off_question, extra));
        let fill = rng.between(3, 6);
        words.extend(rng.sample(&pools.filler, fill));
        words
    };
    let low = |rng: &mut Stream, marker: bool| {
        let shared = rng.between(0, low_overlap_max(n_terms));
        let mut words = rng.sample(&terms, shared);
        let extra = rng.between(2, 5);
        words.extend(rng.sample(&off_question, extra));
        let fill = rng.between(2, 4);
        words.extend(rng.sample(&pools.filler, fill));
        if marker {
            words.push(pools.markers[rng.below(pools.markers.len())].clone());
        }
        words
    };

    let relevant_at = rng.below(n_candidates);
    let candidates = (0..n_candidates)
        .map(|i| {
            let relevant = i == relevant_at;
            let mut words = match (regime_b, relevant) {
                (false, true) => high(rng),
                (false, false) => {
                    let marker = rng.bernoulli(NEGATIVE_MARKER_RATE);
                    low(rng, marker)
                }
                (true, true) => low(rng, true),
                (true, false) => high(rng),
            };
            rng.shuffle(&mut words);
            Candidate::new(words.join(" "), u8::from(relevant))
        })
        .collect();

    Instance {
        qid,
        question,
        context,
        category: Some(if regime_b { REGIME_B } else { REGIME_A }.into()),
        candidates,
    }
}
