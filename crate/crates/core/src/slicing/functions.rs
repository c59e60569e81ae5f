use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::spec::QuestionType;
use super::tfidf::{cosine, TfidfModel};
use super::tokenize_sf;
use crate::corpus::Instance;
use crate::rng::{hash64, unit_interval};
use crate::{Error, Result};

pub fn sf_question_length(inst: &Instance, t_ql: u32) -> bool {
    tokenize_sf(&inst.question).len() > t_ql as usize
}

pub fn sf_context_length(inst: &Instance, t_cl: u32) -> bool {
    inst.context.len() > t_cl as usize
}

/// Case-insensitive exact match on the category field; absent means false.
pub fn sf_question_category(inst: &Instance, category: &str) -> bool {
    inst.category
        .as_deref()
        .is_some_and(|c| c.to_lowercase() == category.to_lowercase())
}

/// First who/what/where/when/why/how token of the question, if any.
pub fn question_type(question: &str) -> Option<QuestionType> {
    tokenize_sf(question)
        .iter()
        .find_map(|t| QuestionType::from_token(t))
}

pub fn sf_question_type(inst: &Instance, qtype: QuestionType) -> bool {
    question_type(&inst.question) == Some(qtype)
}

fn distinct(text: &str) -> BTreeSet<String> {
    tokenize_sf(text).into_iter().collect()
}

/// Mean number of distinct terms shared by the question and each relevant
/// candidate.
pub fn term_match(inst: &Instance) -> Result<f64> {
    let question = distinct(&inst.question);
    let overlaps: Vec<usize> = inst
        .relevant()
        .map(|c| distinct(&c.text).intersection(&question).count())
        .collect();
    if overlaps.is_empty() {
        return Err(Error::Input("no relevant candidate".into()));
    }
    Ok(overlaps.iter().sum::<usize>() as f64 / overlaps.len() as f64)
}

pub fn sf_qdtm(inst: &Instance, t_qdtm: u32) -> Result<bool> {
    Ok(term_match(inst)? < t_qdtm as f64)
}

/// Mean of the `k` largest values; `None` when fewer than `k` are given.
pub fn top_k_mean(values: &[f64], k: usize) -> Option<f64> {
    if k == 0 || values.len() < k {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    Some(sorted[..k].iter().sum::<f64>() / k as f64)
}

/// Mean TF-IDF cosine between the first relevant candidate and its `top_k`
/// most similar other candidates. TF-IDF is fit on this instance's
/// candidate list only.
pub fn response_similarity(inst: &Instance, top_k: usize) -> Result<f64> {
    let reference = inst
        .candidates
        .iter()
        .position(|c| c.is_relevant())
        .ok_or_else(|| Error::Input("no relevant candidate".into()))?;
    let others = inst.candidates.len() - 1;
    if top_k == 0 || others < top_k {
        return Err(Error::Input(format!(
            "top_k = {top_k} but only {others} other candidates"
        )));
    }
    let texts: Vec<&str> = inst.candidates.iter().map(|c| c.text.as_str()).collect();
    let model = TfidfModel::fit(&texts)?;
    let vectors: Vec<Vec<f64>> = texts.iter().map(|t| model.transform(t)).collect();
    let sims: Vec<f64> = vectors
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != reference)
        .map(|(_, v)| cosine(&vectors[reference], v))
        .collect();
    Ok(top_k_mean(&sims, top_k).expect("checked above"))
}

pub fn sf_dls(inst: &Instance, t_dls: f64, top_k: usize) -> Result<bool> {
    Ok(response_similarity(inst, top_k)? > t_dls)
}

/// Membership iff `hash64(seed, qid) / 2^64 < fraction`.
pub fn sf_random(inst: &Instance, fraction: f64, seed: u64) -> bool {
    unit_interval(hash64(seed, inst.qid.as_bytes())) < fraction
}
