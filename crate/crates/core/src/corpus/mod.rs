//! Question/response ranking data: the instance model, its invariants,
//! summary statistics and the synthetic two-regime generator.

mod synth;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::slicing::tokenize_sf;
use crate::{Error, Result};

pub use synth::{generate_synthetic, SynthConfig, REGIME_A, REGIME_B};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub label: u8,
}

impl Candidate {
    pub fn new(text: impl Into<String>, label: u8) -> Self {
        Candidate {
            text: text.into(),
            label,
        }
    }

    pub fn is_relevant(&self) -> bool {
        self.label == 1
    }
}

/// One ranking unit: a question, its dialogue context (oldest turn first),
/// an optional category and the judged candidate responses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub qid: String,
    pub question: String,
    #[serde(default)]
    pub context: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    pub candidates: Vec<Candidate>,
}

impl Instance {
    pub fn labels(&self) -> Vec<u8> {
        self.candidates.iter().map(|c| c.label).collect()
    }

    pub fn relevant(&self) -> impl Iterator<Item = &Candidate> {
        self.candidates.iter().filter(|c| c.is_relevant())
    }

    pub fn num_relevant(&self) -> usize {
        self.relevant().count()
    }

    /// Checks the per-instance invariants.
    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Error::Invariant {
            qid: self.qid.clone(),
            message,
        };
        if self.qid.trim().is_empty() {
            return Err(fail("qid is empty".into()));
        }
        if self.candidates.len() < 2 {
            return Err(fail(format!(
                "needs at least 2 candidates, found {}",
                self.candidates.len()
            )));
        }
        for (i, c) in self.candidates.iter().enumerate() {
            if c.text.trim().is_empty() {
                return Err(fail(format!("candidate {i} has empty text")));
            }
            if c.label > 1 {
                return Err(fail(format!(
                    "candidate {i} has label {}, expected 0 or 1",
                    c.label
                )));
            }
        }
        let relevant = self.num_relevant();
        if relevant == 0 {
            return Err(fail(
                "no relevant candidate (at least one label 1 is required)".into(),
            ));
        }
        if relevant == self.candidates.len() {
            return Err(fail(
                "no non-relevant candidate (at least one label 0 is required)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl core::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// What to do with a well-formed record that violates an instance invariant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum InvalidPolicy {
    #[default]
    Reject,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub split: Split,
    pub instances: Vec<Instance>,
}

/// Result of ingesting records: the corpus plus any skipped records.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub corpus: Corpus,
    pub skipped: Vec<(usize, Error)>,
}

impl Corpus {
    /// Builds a corpus, enforcing every invariant.
    pub fn new(split: Split, instances: Vec<Instance>) -> Result<Self> {
        let records = instances.into_iter().enumerate().map(|(i, r)| (i + 1, r));
        Ok(Self::from_records(split, records, InvalidPolicy::Reject)?.corpus)
    }

    /// Ingests `(line number, instance)` records in order.
    ///
    /// Duplicate qids are always an error; other invariant violations follow
    /// `policy`.
    pub fn from_records(
        split: Split,
        records: impl IntoIterator<Item = (usize, Instance)>,
        policy: InvalidPolicy,
    ) -> Result<Ingested> {
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        let mut instances = Vec::new();
        let mut skipped = Vec::new();
        for (line, inst) in records {
            if let Err(e) = inst.validate() {
                match policy {
                    InvalidPolicy::Reject => {
                        return Err(Error::Record {
                            line,
                            message: e.to_string(),
                        })
                    }
                    InvalidPolicy::Skip => {
                        skipped.push((line, e));
                        continue;
                    }
                }
            }
            if let Some(&first) = seen.get(&inst.qid) {
                return Err(Error::DuplicateQid {
                    qid: inst.qid,
                    first,
                    second: line,
                });
            }
            seen.insert(inst.qid.clone(), line);
            instances.push(inst);
        }
        Ok(Ingested {
            corpus: Corpus { split, instances },
            skipped,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn qids(&self) -> Vec<String> {
        self.instances.iter().map(|i| i.qid.clone()).collect()
    }

    /// Re-checks every invariant, including qid uniqueness.
    pub fn check(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for inst in &self.instances {
            inst.validate()?;
            if !seen.insert(inst.qid.as_str()) {
                return Err(Error::Invariant {
                    qid: inst.qid.clone(),
                    message: "duplicate qid".into(),
                });
            }
        }
        Ok(())
    }
}

/// Distribution of a non-negative integer field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub histogram: BTreeMap<usize, usize>,
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub median: f64,
}

impl LengthStats {
    pub fn from_values(values: &[usize]) -> Self {
        if values.is_empty() {
            return LengthStats::default();
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2] as f64
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
        };
        let mut histogram = BTreeMap::new();
        for &v in &sorted {
            *histogram.entry(v).or_insert(0) += 1;
        }
        LengthStats {
            histogram,
            min: sorted[0],
            max: sorted[n - 1],
            mean: sorted.iter().sum::<usize>() as f64 / n as f64,
            median,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub split: Split,
    pub instances: usize,
    pub candidates: usize,
    pub relevant: usize,
    pub relevant_rate: f64,
    pub candidates_per_instance: LengthStats,
    pub relevant_per_instance: LengthStats,
    /// Question length in slicing-function tokens.
    pub question_length: LengthStats,
    pub context_turns: LengthStats,
    pub response_length: LengthStats,
    pub categories: BTreeMap<String, usize>,
    pub uncategorized: usize,
}

pub fn validate_corpus(corpus: &Corpus) -> ValidationReport {
    let mut candidates = Vec::new();
    let mut relevant = Vec::new();
    let mut qlen = Vec::new();
    let mut turns = Vec::new();
    let mut rlen = Vec::new();
    let mut categories = BTreeMap::new();
    let mut uncategorized = 0;
    for inst in &corpus.instances {
        candidates.push(inst.candidates.len());
        relevant.push(inst.num_relevant());
        qlen.push(tokenize_sf(&inst.question).len());
        turns.push(inst.context.len());
        rlen.extend(inst.candidates.iter().map(|c| tokenize_sf(&c.text).len()));
        match &inst.category {
            Some(c) => *categories.entry(c.clone()).or_insert(0) += 1,
            None => uncategorized += 1,
        }
    }
    let n_candidates: usize = candidates.iter().sum();
    let n_relevant: usize = relevant.iter().sum();
    ValidationReport {
        split: corpus.split,
        instances: corpus.len(),
        candidates: n_candidates,
        relevant: n_relevant,
        relevant_rate: if n_candidates == 0 {
            0.0
        } else {
            n_relevant as f64 / n_candidates as f64
        },
        candidates_per_instance: LengthStats::from_values(&candidates),
        relevant_per_instance: LengthStats::from_values(&relevant),
        question_length: LengthStats::from_values(&qlen),
        context_turns: LengthStats::from_values(&turns),
        response_length: LengthStats::from_values(&rlen),
        categories,
        uncategorized,
    }
}
