use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Instance;
use crate::slicing::tokenize_sf;
use crate::{Error, Result};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const CLS: u32 = 2;
pub const SEP: u32 = 3;
const RESERVED: [&str; 4] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"];

/// Term to id map with contiguous ids; 0..4 are the reserved tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabTable", into = "VocabTable")]
pub struct Vocabulary {
    terms: Vec<String>,
    freqs: Vec<u64>,
    index: BTreeMap<String, u32>,
    min_freq: u64,
}

/// Serialized form: `(term, id, frequency)` rows in id order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabTable {
    pub min_freq: u64,
    pub rows: Vec<(String, u32, u64)>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_freq(&self) -> u64 {
        self.min_freq
    }

    pub fn id(&self, term: &str) -> u32 {
        self.index.get(term).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }

    pub fn term(&self, id: u32) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    pub fn ids(&self, text: &str) -> Vec<u32> {
        tokenize_sf(text).iter().map(|t| self.id(t)).collect()
    }

    pub fn to_table(&self) -> VocabTable {
        VocabTable {
            min_freq: self.min_freq,
            rows: self
                .terms
                .iter()
                .zip(&self.freqs)
                .enumerate()
                .map(|(i, (t, &f))| (t.clone(), i as u32, f))
                .collect(),
        }
    }

    pub fn from_table(table: VocabTable) -> Result<Self> {
        let mut terms = Vec::with_capacity(table.rows.len());
        let mut freqs = Vec::with_capacity(table.rows.len());
        let mut index = BTreeMap::new();
        for (i, (term, id, freq)) in table.rows.into_iter().enumerate() {
            if id as usize != i {
                return Err(Error::Input(format!(
                    "vocabulary ids must be contiguous from 0: row {i} has id {id}"
                )));
            }
            if i < RESERVED.len() && term != RESERVED[i] {
                return Err(Error::Input(format!(
                    "id {i} is reserved for {} but holds `{term}`",
                    RESERVED[i]
                )));
            }
            if index.insert(term.clone(), id).is_some() {
                return Err(Error::Input(format!("duplicate vocabulary term `{term}`")));
            }
            terms.push(term);
            freqs.push(freq);
        }
        if terms.len() < RESERVED.len() {
            return Err(Error::Input("vocabulary is missing reserved tokens".into()));
        }
        Ok(Vocabulary {
            terms,
            freqs,
            index,
            min_freq: table.min_freq,
        })
    }
}

impl TryFrom<VocabTable> for Vocabulary {
    type Error = Error;
    fn try_from(t: VocabTable) -> Result<Self> {
        Vocabulary::from_table(t)
    }
}

impl From<Vocabulary> for VocabTable {
    fn from(v: Vocabulary) -> Self {
        v.to_table()
    }
}

/// Builds a vocabulary from every question, context turn and candidate.
///
/// Terms seen at least `min_freq` times get ids in descending frequency,
/// ties broken lexicographically.
pub fn build_vocab(instances: &[Instance], min_freq: u64) -> Result<Vocabulary> {
    if instances.is_empty() {
        return Err(Error::Input("cannot build a vocabulary from an empty corpus".into()));
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut add = |text: &str| {
        for t in tokenize_sf(text) {
            *counts.entry(t).or_insert(0) += 1;
        }
    };
    for inst in instances {
        add(&inst.question);
        inst.context.iter().for_each(|t| add(t));
        inst.candidates.iter().for_each(|c| add(&c.text));
    }
    let mut kept: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|(t, f)| *f >= min_freq.max(1) && !RESERVED.contains(&t.as_str()))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut terms: Vec<String> = RESERVED.iter().map(|s| String::from(*s)).collect();
    let mut freqs = alloc::vec![0; RESERVED.len()];
    for (t, f) in kept {
        terms.push(t);
        freqs.push(f);
    }
    let index = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();
    Ok(Vocabulary {
        terms,
        freqs,
        index,
        min_freq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Candidate;
    use alloc::vec;

    fn corpus() -> Vec<Instance> {
        vec![Instance {
            qid: "q".into(),
            question: "a a b".into(),
            context: vec!["a c".into()],
            category: None,
            candidates: vec![Candidate::new("a a c", 1), Candidate::new("c", 0)],
        }]
    }

    #[test]
    fn frequency_cutoff() {
        // a x 5, c x 3, b x 1
        let v = build_vocab(&corpus(), 2).unwrap();
        assert!(v.contains("a"));
        assert!(v.contains("c"));
        assert!(!v.contains("b"));
        assert_eq!(v.id("b"), UNK);
        assert_eq!(v.id("a"), 4);
        assert_eq!(v.id("c"), 5);
    }

    #[test]
    fn min_freq_one_keeps_everything() {
        let v = build_vocab(&corpus(), 1).unwrap();
        assert_eq!(v.len(), 4 + 3);
        assert_eq!(v.id("never-seen"), UNK);
    }

    #[test]
    fn ties_break_lexicographically() {
        let inst = Instance {
            qid: "q".into(),
            question: "zeta alpha mid".into(),
            context: vec![],
            category: None,
            candidates: vec![Candidate::new("x", 1), Candidate::new("x", 0)],
        };
        let v = build_vocab(&[inst], 1).unwrap();
        assert_eq!(v.term(4), Some("x"));
        assert_eq!(v.term(5), Some("alpha"));
        assert_eq!(v.term(6), Some("mid"));
        assert_eq!(v.term(7), Some("zeta"));
    }

    #[test]
    fn reserved_ids_are_fixed() {
        let v = build_vocab(&corpus(), 1).unwrap();
        assert_eq!(v.term(PAD), Some("[PAD]"));
        assert_eq!(v.term(UNK), Some("[UNK]"));
        assert_eq!(v.term(CLS), Some("[CLS]"));
        assert_eq!(v.term(SEP), Some("[SEP]"));
    }

    #[test]
    fn table_round_trip_and_checks() {
        let v = build_vocab(&corpus(), 1).unwrap();
        assert_eq!(Vocabulary::from_table(v.to_table()).unwrap(), v);
        let mut t = v.to_table();
        t.rows[5].1 = 9;
        assert!(Vocabulary::from_table(t).is_err());
        let mut t = v.to_table();
        t.rows[2].0 = "cls".into();
        assert!(Vocabulary::from_table(t).is_err());
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(build_vocab(&[], 1).is_err());
    }
}
