use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::tokenize_sf;
use crate::rng::hash64;
use crate::{math, Error, Result};

/// TF-IDF weights with smoothed idf, `ln((1 + N) / (1 + df)) + 1`.
///
/// Document vectors use raw term counts times idf. Terms outside the
/// vocabulary are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub fitted_on: u64,
}

impl TfidfModel {
    pub fn fit(texts: &[&str]) -> Result<Self> {
        if texts.is_empty() {
            return Err(Error::Input("cannot fit TF-IDF on zero texts".into()));
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut fingerprint = 0u64;
        for text in texts {
            fingerprint = hash64(fingerprint, text.as_bytes());
            let mut terms = tokenize_sf(text);
            terms.sort_unstable();
            terms.dedup();
            for t in terms {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        if df.is_empty() {
            return Err(Error::Input("every text is empty after tokenization".into()));
        }
        let n = texts.len() as f64;
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (i, (term, count)) in df.into_iter().enumerate() {
            idf.push(math::ln((1.0 + n) / (1.0 + count as f64)) + 1.0);
            vocabulary.insert(term, i);
        }
        Ok(TfidfModel {
            vocabulary,
            idf,
            fitted_on: fingerprint,
        })
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.vocabulary.get(term).map(|&i| self.idf[i])
    }

    pub fn transform(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.idf.len()];
        for t in tokenize_sf(text) {
            if let Some(&i) = self.vocabulary.get(&t) {
                v[i] += 1.0;
            }
        }
        for (x, idf) in v.iter_mut().zip(&self.idf) {
            *x *= idf;
        }
        v
    }
}

/// Cosine similarity, 0 when either vector is all zero. Clamped to `[0, 1]`,
/// which holds exactly for non-negative weights.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return 0.0;
    }
    (ab / (math::sqrt(aa) * math::sqrt(bb))).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_document_idf_is_one() {
        let m = TfidfModel::fit(&["a b"]).unwrap();
        assert_eq!(m.idf_of("a"), Some(1.0));
        assert_eq!(m.idf_of("b"), Some(1.0));
    }

    #[test]
    fn idf_is_positive_and_smoothed() {
        let m = TfidfModel::fit(&["a b", "a c", "a"]).unwrap();
        // df(a) = 3: ln(4/4) + 1; df(b) = 1: ln(4/2) + 1
        assert!((m.idf_of("a").unwrap() - 1.0).abs() < 1e-15);
        assert!((m.idf_of("b").unwrap() - (libm::log(2.0) + 1.0)).abs() < 1e-15);
        assert!(m.idf.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn unknown_terms_contribute_nothing() {
        let m = TfidfModel::fit(&["a b"]).unwrap();
        assert_eq!(m.transform("zzz"), vec![0.0, 0.0]);
        assert_eq!(cosine(&m.transform("a b"), &m.transform("zzz")), 0.0);
    }

    #[test]
    fn identical_documents_identical_vectors() {
        let m = TfidfModel::fit(&["x y y", "x y y"]).unwrap();
        assert_eq!(m.transform("x y y"), m.transform("y x y"));
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert!(TfidfModel::fit(&[]).is_err());
        assert!(TfidfModel::fit(&["", "?!"]).is_err());
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[0.3, 2.0], &[0.3, 2.0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 4.0]), 0.0);
        assert!((cosine(&[1.0, 0.0], &[1.0, 1.0]) - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }

    proptest! {
        #[test]
        fn cosine_is_symmetric_and_bounded(
            a in proptest::collection::vec(0.0f64..10.0, 5),
            b in proptest::collection::vec(0.0f64..10.0, 5),
        ) {
            let ab = cosine(&a, &b);
            prop_assert_eq!(ab, cosine(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
        }
    }
}
