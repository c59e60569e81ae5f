//! Slicing functions and slice matrices.
//!
//! A slicing function is a pure predicate over an [`Instance`]. Label-aware
//! functions (term match and response similarity) read relevance labels, so
//! they are only evaluated where labels exist; the ranker never consumes
//! their output at inference time.

mod functions;
mod matrix;
mod spec;
mod tfidf;
mod threshold;

pub use functions::{
    question_type, sf_context_length, sf_dls, sf_qdtm, sf_question_category, sf_question_length,
    sf_question_type, sf_random, response_similarity, term_match, top_k_mean,
};
pub use matrix::{build_slice_matrix, slice_report, SliceMatrix, SliceStats, BASE_SLICE};
pub use spec::{QuestionType, ResolvedSlice, SliceConfigEntry, SliceKind, SliceSpec, SliceTag};
pub use tfidf::{cosine, TfidfModel};
pub use threshold::{auto_threshold, AutoThreshold, ThresholdKind};

use alloc::string::String;
use alloc::vec::Vec;

/// Tokenizer shared by the slicing functions and the encoder.
///
/// Lowercases, splits on Unicode whitespace, strips leading and trailing
/// characters that are neither letters nor digits, and drops empty tokens.
/// No stopword removal.
pub fn tokenize_sf(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .map(|tok| tok.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|tok| !tok.is_empty())
        .map(String::from)
        .collect()
}
