//! Information gain and gain ratio of single features against binary labels,
//! as used by ID3/C4.5. Continuous features are scored through the best
//! threshold of a virtual binary split.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{FeatureId, RawFeatures};
use crate::corpus::Corpus;

#[derive(Debug, Error, PartialEq)]
pub enum InfoGainError {
    #[error("empty input")]
    EmptyInput,
    #[error("values and labels differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("feature takes a single value; split information is zero")]
    ZeroSplitInformation,
    #[error("continuous feature has a single distinct value")]
    DegenerateFeature,
}

type Result<T> = std::result::Result<T, InfoGainError>;

/// Shannon entropy in bits of a distribution given by counts; `0 log 0 = 0`.
pub fn entropy_of_counts(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

pub fn entropy(labels: &[bool]) -> Result<f64> {
    if labels.is_empty() {
        return Err(InfoGainError::EmptyInput);
    }
    let pos = labels.iter().filter(|l| **l).count();
    Ok(entropy_of_counts(&[pos, labels.len() - pos]))
}

/// Gain of a partition given per-part `(positive, total)` counts.
fn partition_gain(parts: &[(usize, usize)]) -> f64 {
    let (pos, n) = parts.iter().fold((0, 0), |(p, t), (pp, pt)| (p + pp, t + pt));
    let n_f = n as f64;
    let conditional: f64 = parts.iter().map(|&(p, t)| (t as f64 / n_f) * entropy_of_counts(&[p, t - p])).sum();
    (entropy_of_counts(&[pos, n - pos]) - conditional).max(0.0)
}

fn split_information(parts: &[(usize, usize)]) -> f64 {
    let sizes: Vec<usize> = parts.iter().map(|&(_, t)| t).collect();
    entropy_of_counts(&sizes)
}

fn partition<T: Ord>(values: &[T], labels: &[bool]) -> Result<Vec<(usize, usize)>> {
    if values.len() != labels.len() {
        return Err(InfoGainError::LengthMismatch(values.len(), labels.len()));
    }
    if values.is_empty() {
        return Err(InfoGainError::EmptyInput);
    }
    let mut parts: BTreeMap<&T, (usize, usize)> = BTreeMap::new();
    for (v, &l) in values.iter().zip(labels) {
        let e = parts.entry(v).or_default();
        e.0 += usize::from(l);
        e.1 += 1;
    }
    Ok(parts.into_values().collect())
}

/// Information gain of a nominal feature.
pub fn info_gain<T: Ord>(values: &[T], labels: &[bool]) -> Result<f64> {
    Ok(partition_gain(&partition(values, labels)?))
}

/// Information gain divided by the split information.
pub fn gain_ratio<T: Ord>(values: &[T], labels: &[bool]) -> Result<f64> {
    let parts = partition(values, labels)?;
    if parts.len() < 2 {
        return Err(InfoGainError::ZeroSplitInformation);
    }
    Ok(partition_gain(&parts) / split_information(&parts))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSplit {
    pub gain_ratio: f64,
    pub gain: f64,
    /// Values `<= threshold` fall on the left.
    pub threshold: f64,
}

/// Best gain ratio over thresholds at midpoints between consecutive distinct
/// values. Ties keep the smallest threshold.
pub fn continuous_gain_ratio(values: &[f64], labels: &[bool]) -> Result<ThresholdSplit> {
    if values.len() != labels.len() {
        return Err(InfoGainError::LengthMismatch(values.len(), labels.len()));
    }
    if values.is_empty() {
        return Err(InfoGainError::EmptyInput);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let n = values.len();
    let total_pos = labels.iter().filter(|l| **l).count();

    let mut best: Option<ThresholdSplit> = None;
    let (mut left_pos, mut left_n) = (0, 0);
    let mut i = 0;
    while i < n {
        let v = values[order[i]];
        while i < n && values[order[i]] == v {
            left_pos += usize::from(labels[order[i]]);
            left_n += 1;
            i += 1;
        }
        if i == n {
            break;
        }
        let next = values[order[i]];
        let parts = [(left_pos, left_n), (total_pos - left_pos, n - left_n)];
        let gain = partition_gain(&parts);
        let ratio = gain / split_information(&parts);
        if best.is_none_or(|b| ratio > b.gain_ratio) {
            best = Some(ThresholdSplit { gain_ratio: ratio, gain, threshold: v + (next - v) / 2.0 });
        }
    }
    best.ok_or(InfoGainError::DegenerateFeature)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScore {
    pub feature: FeatureId,
    pub gain: f64,
    pub gain_ratio: f64,
    pub threshold: Option<f64>,
}

/// Scores every feature against the ground-truth labels of all patches and
/// sorts by decreasing gain ratio. Constant features score zero.
pub fn rank_features(corpus: &Corpus) -> Vec<FeatureScore> {
    let raws: Vec<RawFeatures> = corpus.patches().iter().map(RawFeatures::of).collect();
    let labels: Vec<bool> = (0..raws.len()).map(|i| corpus.is_security(i)).collect();
    let mut scores = score_features(&raws, &labels);
    scores.sort_by(|a, b| b.gain_ratio.total_cmp(&a.gain_ratio).then(a.feature.cmp(&b.feature)));
    scores
}

pub fn score_features(raws: &[RawFeatures], labels: &[bool]) -> Vec<FeatureScore> {
    FeatureId::ALL
        .into_iter()
        .map(|feature| {
            if feature.is_continuous() {
                let values: Vec<f64> = raws.iter().map(|r| r.continuous(feature).unwrap()).collect();
                match continuous_gain_ratio(&values, labels) {
                    Ok(s) => {
                        FeatureScore { feature, gain: s.gain, gain_ratio: s.gain_ratio, threshold: Some(s.threshold) }
                    }
                    Err(_) => FeatureScore { feature, gain: 0.0, gain_ratio: 0.0, threshold: None },
                }
            } else {
                let values: Vec<String> = raws.iter().map(|r| r.nominal(feature).unwrap()).collect();
                FeatureScore {
                    feature,
                    gain: info_gain(&values, labels).unwrap_or(0.0),
                    gain_ratio: gain_ratio(&values, labels).unwrap_or(0.0),
                    threshold: None,
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const T: bool = true;
    const F: bool = false;

    #[test]
    fn entropy_fixtures() {
        assert_eq!(entropy(&[T, T]).unwrap(), 0.0);
        assert_eq!(entropy(&[T, F]).unwrap(), 1.0);
        // -(3/4)log2(3/4) - (1/4)log2(1/4) = 0.811278124459...
        assert!((entropy(&[T, T, T, F]).unwrap() - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert_eq!(entropy(&[]), Err(InfoGainError::EmptyInput));
    }

    #[test]
    fn gain_fixtures() {
        assert_eq!(info_gain(&["a", "a", "b", "b"], &[T, T, F, F]).unwrap(), 1.0);
        assert_eq!(info_gain(&["a", "a", "a", "a"], &[T, T, F, F]).unwrap(), 0.0);
        // 1 - (3/4) * H(2/3) with H(2/3) = 0.918295834054...
        let expected = 1.0 - 0.75 * 0.918_295_834_054_489_6;
        assert!((info_gain(&["a", "a", "a", "b"], &[T, T, F, F]).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.3113).abs() < 1e-4);
    }

    #[test]
    fn gain_ratio_fixtures() {
        assert_eq!(gain_ratio(&["a", "a", "b", "b"], &[T, T, F, F]).unwrap(), 1.0);
        assert_eq!(gain_ratio(&["a", "b", "c", "d"], &[T, T, F, F]).unwrap(), 0.5);
        assert_eq!(gain_ratio(&["a", "a", "a", "a"], &[T, T, F, F]), Err(InfoGainError::ZeroSplitInformation));
    }

    #[test]
    fn continuous_fixtures() {
        let s = continuous_gain_ratio(&[1.0, 2.0, 3.0, 4.0], &[F, F, T, T]).unwrap();
        assert_eq!(s.threshold, 2.5);
        assert_eq!(s.gain_ratio, 1.0);
        assert_eq!(continuous_gain_ratio(&[2.0, 2.0, 2.0], &[F, T, T]), Err(InfoGainError::DegenerateFeature));
        // thresholds 1.5 and 2.5 are mirror images for [+,-,+]; the first wins
        let s = continuous_gain_ratio(&[1.0, 2.0, 3.0], &[T, F, T]).unwrap();
        let left = gain_ratio(&[F, T, T], &[T, F, T]).unwrap();
        assert_eq!(s.threshold, 1.5);
        assert_eq!(s.gain_ratio, left);
    }

    /// Scores every midpoint threshold by building the virtual binary feature.
    fn exhaustive_threshold(values: &[f64], labels: &[bool]) -> Option<(f64, f64)> {
        let mut distinct = values.to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let mut best: Option<(f64, f64)> = None;
        for w in distinct.windows(2) {
            let t = w[0] + (w[1] - w[0]) / 2.0;
            let virt: Vec<bool> = values.iter().map(|v| *v > t).collect();
            let r = gain_ratio(&virt, labels).unwrap();
            if best.is_none_or(|(br, _)| r > br) {
                best = Some((r, t));
            }
        }
        best
    }

    #[test]
    fn sweep_matches_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(2..15);
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64 * 0.5).collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            match (continuous_gain_ratio(&values, &labels), exhaustive_threshold(&values, &labels)) {
                (Ok(s), Some((r, t))) => {
                    assert_eq!(s.gain_ratio, r);
                    assert_eq!(s.threshold, t);
                }
                (Err(InfoGainError::DegenerateFeature), None) => {}
                other => panic!("disagreement: {other:?}"),
            }
        }
    }

    proptest! {
        #[test]
        fn bounds(values in proptest::collection::vec(0u8..4, 1..40), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let labels: Vec<bool> = values.iter().map(|_| rng.gen_bool(0.3)).collect();
            let h = entropy(&labels).unwrap();
            prop_assert!((0.0..=1.0).contains(&h));
            let g = info_gain(&values, &labels).unwrap();
            prop_assert!(g >= 0.0 && g <= h + 1e-12);
            if let Ok(r) = gain_ratio(&values, &labels) {
                prop_assert!(r >= 0.0);
            }
        }

        #[test]
        fn identical_class_mixtures_give_zero_gain(reps in 1usize..6, parts in 2usize..5) {
            // every category holds the same label mixture
            let mut values = Vec::new();
            let mut labels = Vec::new();
            for c in 0..parts {
                for _ in 0..reps {
                    values.extend([c, c, c]);
                    labels.extend([true, false, false]);
                }
            }
            prop_assert!(info_gain(&values, &labels).unwrap() < 1e-12);
        }
    }
}
