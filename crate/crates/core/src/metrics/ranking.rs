use alloc::format;
use alloc::vec::Vec;

use crate::sram::rank_by_scores;
use crate::{Error, Result};

/// Labels reordered by descending score, ties in candidate order.
pub fn ranked_labels(scores: &[f64], labels: &[u8]) -> Result<Vec<u8>> {
    if scores.len() != labels.len() {
        return Err(Error::Alignment(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    Ok(rank_by_scores(scores).into_iter().map(|i| labels[i]).collect())
}

/// Average precision of a ranked label list. The denominator is the
/// number of relevant items in the list.
pub fn average_precision(ranked: &[u8]) -> Result<f64> {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &l) in ranked.iter().enumerate() {
        match l {
            0 => {}
            1 => {
                hits += 1;
                sum += hits as f64 / (i + 1) as f64;
            }
            other => return Err(Error::Input(format!("label {other} is not binary"))),
        }
    }
    if hits == 0 {
        return Err(Error::Input("ranked list has no relevant item".into()));
    }
    Ok(sum / hits as f64)
}

pub fn average_precision_of_scores(scores: &[f64], labels: &[u8]) -> Result<f64> {
    average_precision(&ranked_labels(scores, labels)?)
}

pub fn mean_average_precision(aps: &[f64]) -> Result<f64> {
    if aps.is_empty() {
        return Err(Error::Input("mean average precision of zero instances".into()));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use proptest::prelude::*;

    fn brute_force_ap(ranked: &[u8]) -> f64 {
        let r = ranked.iter().filter(|&&l| l == 1).count() as f64;
        let mut total = 0.0;
        for i in 0..ranked.len() {
            if ranked[i] == 1 {
                let prefix = ranked[..=i].iter().filter(|&&l| l == 1).count();
                total += prefix as f64 / (i + 1) as f64;
            }
        }
        total / r
    }

    #[test]
    fn hand_examples() {
        assert_eq!(average_precision(&[1, 0, 0]).unwrap(), 1.0);
        assert!((average_precision(&[1, 0, 1]).unwrap() - 0.833_333_333_333_333_3).abs() < 1e-15);
        assert_eq!(average_precision(&[0, 1]).unwrap(), 0.5);
        assert!(average_precision(&[0, 0]).is_err());
        assert_eq!(mean_average_precision(&[1.0]).unwrap(), 1.0);
        assert_eq!(mean_average_precision(&[1.0, 0.5]).unwrap(), 0.75);
        assert!(mean_average_precision(&[]).is_err());
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = Stream::new(3, "ap");
        for _ in 0..1000 {
            let n = rng.between(2, 10);
            let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.bernoulli(0.4))).collect();
            labels[0] = 1;
            labels[1] = 0;
            rng.shuffle(&mut labels);
            assert_eq!(average_precision(&labels).unwrap(), brute_force_ap(&labels));
        }
    }

    #[test]
    fn ties_keep_candidate_order() {
        assert_eq!(ranked_labels(&[0.5, 0.5, 0.5], &[0, 1, 0]).unwrap(), [0, 1, 0]);
        assert!(ranked_labels(&[0.5], &[0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn ap_in_unit_interval_and_one_iff_sorted(
            labels in proptest::collection::vec(0u8..=1, 2..12)
        ) {
            prop_assume!(labels.contains(&1));
            let ap = average_precision(&labels).unwrap();
            prop_assert!(ap > 0.0 && ap <= 1.0);
            let sorted = labels.windows(2).all(|w| w[0] >= w[1]);
            prop_assert_eq!(ap == 1.0, sorted);
        }

        #[test]
        fn suffix_negatives_do_not_matter(
            labels in proptest::collection::vec(0u8..=1, 2..12),
            extra in 0usize..5,
        ) {
            prop_assume!(labels.contains(&1));
            let mut longer = labels.clone();
            longer.extend(core::iter::repeat_n(0, extra));
            prop_assert_eq!(average_precision(&labels).unwrap(), average_precision(&longer).unwrap());
        }

        #[test]
        fn monotone_transform_keeps_ap(
            scores in proptest::collection::vec(-5.0f64..5.0, 2..10),
            seed in 0u64..1000,
        ) {
            let mut rng = Stream::new(seed, "labels");
            let mut labels: Vec<u8> = scores.iter().map(|_| u8::from(rng.bernoulli(0.5))).collect();
            labels[0] = 1;
            labels[1] = 0;
            let transformed: Vec<f64> = scores.iter().map(|s| libm::exp(2.0 * s) + 3.0).collect();
            prop_assert_eq!(
                average_precision_of_scores(&scores, &labels).unwrap(),
                average_precision_of_scores(&transformed, &labels).unwrap()
            );
        }
    }
}
