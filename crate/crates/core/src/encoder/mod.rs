//! Word-level encoder: vocabulary, `[CLS] q [SEP] r [SEP]` framing and a
//! one-block transformer that pools the CLS position.

mod backbone;
mod pair;
mod vocab;

pub use backbone::{BackboneConfig, BackboneParams, BackboneTrace, LN_EPS};
pub use pair::{encode_pair, EncodedPair};
pub use vocab::{build_vocab, VocabTable, Vocabulary, CLS, PAD, SEP, UNK};
