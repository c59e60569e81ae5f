use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::vocab::{Vocabulary, CLS, PAD, SEP};

/// `[CLS] context+question [SEP] response [SEP]`, padded to `max_len`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedPair {
    pub ids: Vec<u32>,
    pub mask: Vec<u8>,
}

impl EncodedPair {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Positions with mask 1, in order.
    pub fn active_positions(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m == 1)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Frames and pads one question/response pair.
///
/// Context turns come first, oldest to newest, followed by the question.
/// When the two segments exceed `max_len - 3` tokens, one token at a time is
/// removed from the longer segment (the front of context+question, or the
/// tail of the response; the response on ties) until they fit. Both SEPs
/// are always kept.
///
/// # Panics
/// If `max_len < 8`.
pub fn encode_pair(
    vocab: &Vocabulary,
    question: &str,
    context: &[impl AsRef<str>],
    response: &str,
    max_len: usize,
) -> EncodedPair {
    assert!(max_len >= 8, "max_len must be at least 8, got {max_len}");
    let mut first: Vec<u32> = Vec::new();
    for turn in context {
        first.extend(vocab.ids(turn.as_ref()));
    }
    first.extend(vocab.ids(question));
    let second = vocab.ids(response);

    let budget = max_len - 3;
    let (mut keep_first, mut keep_second) = (first.len(), second.len());
    while keep_first + keep_second > budget {
        if keep_first > keep_second {
            keep_first -= 1;
        } else {
            keep_second -= 1;
        }
    }

    let mut ids = Vec::with_capacity(max_len);
    ids.push(CLS);
    ids.extend_from_slice(&first[first.len() - keep_first..]);
    ids.push(SEP);
    ids.extend_from_slice(&second[..keep_second]);
    ids.push(SEP);
    let used = ids.len();
    ids.resize(max_len, PAD);
    let mut mask = alloc::vec![1u8; used];
    mask.resize(max_len, 0);
    EncodedPair { ids, mask }
}
