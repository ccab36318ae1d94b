use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::EvalError;
use crate::corpus::Vocabulary;
use crate::embedspace::EmbeddingSpace;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JaccardResult {
    pub value: f64,
    pub anchors_used: usize,
    pub anchors_dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub n: usize,
    pub anchors_used: usize,
    pub anchors_dropped: usize,
    /// Value `i` leaves model `i` out.
    pub jackknife_values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (divisor `M - 1`).
    pub std: f64,
}

/// Neighbour sets per anchor and model, as ids into a shared word table.
struct Neighbourhoods {
    /// `sets[anchor][model]`, each sorted.
    sets: Vec<Vec<Vec<u32>>>,
    dropped: usize,
}

impl Neighbourhoods {
    fn build<T: Scalar>(
        models: &[&EmbeddingSpace<T>],
        anchors: &[String],
        n: usize,
    ) -> Result<Self, EvalError> {
        if n == 0 {
            return Err(EvalError::ZeroNeighbourhood);
        }
        let kept: Vec<&String> = anchors
            .iter()
            .filter(|a| models.iter().all(|m| m.contains(a)))
            .collect();
        let dropped = anchors.len() - kept.len();
        if kept.is_empty() {
            return Err(EvalError::NoAnchors { dropped });
        }
        let mut table: HashMap<&str, u32> = HashMap::new();
        let global: Vec<Vec<u32>> = models
            .iter()
            .map(|m| {
                m.words()
                    .iter()
                    .map(|w| {
                        let next = table.len() as u32;
                        *table.entry(w.as_str()).or_insert(next)
                    })
                    .collect()
            })
            .collect();
        let sets = kept
            .par_iter()
            .map(|anchor| {
                models
                    .iter()
                    .zip(&global)
                    .map(|(m, ids)| {
                        let row = m.index_of(anchor)?;
                        let mut set: Vec<u32> =
                            m.most_similar_ids(row, n)?.into_iter().map(|(i, _)| ids[i]).collect();
                        set.sort_unstable();
                        Ok(set)
                    })
                    .collect::<Result<Vec<_>, EvalError>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Neighbourhoods { sets, dropped })
    }

    /// Mean over anchors of |intersection| / |union| across the models not
    /// equal to `skip`.
    fn jaccard(&self, skip: Option<usize>) -> f64 {
        let per_anchor: Vec<f64> = self
            .sets
            .par_iter()
            .map(|per_model| {
                let mut counts: HashMap<u32, usize> = HashMap::new();
                let mut members = 0;
                for (i, set) in per_model.iter().enumerate() {
                    if Some(i) == skip {
                        continue;
                    }
                    members += 1;
                    for &w in set {
                        *counts.entry(w).or_default() += 1;
                    }
                }
                let inter = counts.values().filter(|&&c| c == members).count();
                inter as f64 / counts.len() as f64
            })
            .collect();
        per_anchor.iter().sum::<f64>() / per_anchor.len() as f64
    }
}

/// Average Jaccard coefficient of the `n` most similar words over `anchors`.
/// Anchors missing from any model are dropped and counted.
pub fn jaccard_at_n<T: Scalar>(
    models: &[&EmbeddingSpace<T>],
    anchors: &[String],
    n: usize,
) -> Result<JaccardResult, EvalError> {
    if models.len() < 2 {
        return Err(EvalError::TooFewModels(models.len(), 2));
    }
    let hoods = Neighbourhoods::build(models, anchors, n)?;
    Ok(JaccardResult {
        value: hoods.jaccard(None),
        anchors_used: hoods.sets.len(),
        anchors_dropped: hoods.dropped,
    })
}

/// Leave-one-out j@n: one value per model, plus their mean and sample std.
pub fn jackknife_stability<T: Scalar>(
    models: &[&EmbeddingSpace<T>],
    anchors: &[String],
    n: usize,
) -> Result<StabilityReport, EvalError> {
    let m = models.len();
    if m < 3 {
        return Err(EvalError::TooFewModels(m, 3));
    }
    let hoods = Neighbourhoods::build(models, anchors, n)?;
    let values: Vec<f64> = (0..m).map(|i| hoods.jaccard(Some(i))).collect();
    let mean = values.iter().sum::<f64>() / m as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
    Ok(StabilityReport {
        n,
        anchors_used: hoods.sets.len(),
        anchors_dropped: hoods.dropped,
        jackknife_values: values,
        mean,
        std: var.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnchorSelection {
    pub anchors: Vec<String>,
    /// Frequent words skipped because some model lacks them.
    pub dropped: usize,
}

/// The `k` most frequent words of `vocab` present in every model. Words
/// missing from a model are skipped and replaced by the next most frequent.
pub fn select_anchors<T: Scalar>(
    vocab: &Vocabulary,
    k: usize,
    models: &[&EmbeddingSpace<T>],
) -> Result<AnchorSelection, EvalError> {
    if k > vocab.len() {
        return Err(EvalError::TooManyAnchors {
            requested: k,
            available: vocab.len(),
        });
    }
    let mut anchors = Vec::with_capacity(k);
    let mut dropped = 0;
    for w in vocab.words() {
        if anchors.len() == k {
            break;
        }
        if models.iter().all(|m| m.contains(w)) {
            anchors.push(w.clone());
        } else {
            dropped += 1;
        }
    }
    if anchors.is_empty() {
        return Err(EvalError::NoAnchors { dropped });
    }
    Ok(AnchorSelection { anchors, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorize::EmbeddingMatrix;
    use ndarray::Array2;
    use proptest::prelude::*;

    /// Words on a unit circle at the given angles.
    fn circle(words: &[String], angles: &[f64]) -> EmbeddingSpace<f64> {
        let m = Array2::from_shape_fn((words.len(), 2), |(i, c)| {
            if c == 0 {
                angles[i].cos()
            } else {
                angles[i].sin()
            }
        });
        EmbeddingSpace::new(words.to_vec(), EmbeddingMatrix::new(m)).unwrap()
    }

    fn names(prefix: &str, k: usize) -> Vec<String> {
        (0..k).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn identical_models() {
        let words = names("w", 12);
        let angles: Vec<f64> = (0..12).map(|i| i as f64 * 0.37).collect();
        let a = circle(&words, &angles);
        let models = vec![&a; 10];
        let j = jaccard_at_n(&models, &words, 5).unwrap();
        assert_eq!(j.value, 1.0);
        let report = jackknife_stability(&models, &words, 5).unwrap();
        assert!(report.jackknife_values.iter().all(|&v| v == 1.0));
        assert_eq!(report.mean, 1.0);
        assert_eq!(report.std, 0.0);
    }

    /// One anchor with 10 neighbours in each of two models, 5 shared.
    fn overlap_models(shared: usize) -> (EmbeddingSpace<f64>, EmbeddingSpace<f64>) {
        // anchor at angle 0; close words at small angles; far words near pi.
        let mut words = vec!["anchor".to_string()];
        words.extend(names("x", 20));
        let close = |k: usize| 0.01 * (k + 1) as f64;
        let far = |k: usize| 3.0 + 0.001 * k as f64;
        // Model 1: x0..x9 close. Model 2: x(10-shared)..x(19-shared) close.
        let mut a1 = vec![0.0];
        let mut a2 = vec![0.0];
        for k in 0..20 {
            a1.push(if k < 10 { close(k) } else { far(k) });
            let in2 = k >= 10 - shared && k < 20 - shared;
            a2.push(if in2 { close(k) } else { far(k) });
        }
        (circle(&words, &a1), circle(&words, &a2))
    }

    #[test]
    fn hand_built_overlap() {
        let (m1, m2) = overlap_models(5);
        let j = jaccard_at_n(&[&m1, &m2], &["anchor".to_string()], 10).unwrap();
        assert_eq!(j.value, 1.0 / 3.0);
        let (d1, d2) = overlap_models(0);
        let j = jaccard_at_n(&[&d1, &d2], &["anchor".to_string()], 10).unwrap();
        assert_eq!(j.value, 0.0);
    }

    #[test]
    fn missing_anchor_is_counted() {
        let (m1, _) = overlap_models(5);
        let anchors = vec!["anchor".to_string(), "ghost".to_string()];
        let j = jaccard_at_n(&[&m1, &m1], &anchors, 3).unwrap();
        assert_eq!((j.anchors_used, j.anchors_dropped), (1, 1));
        assert!(matches!(
            jaccard_at_n(&[&m1, &m1], &["ghost".to_string()], 3),
            Err(EvalError::NoAnchors { dropped: 1 })
        ));
    }

    #[test]
    fn model_count_preconditions() {
        let (m1, m2) = overlap_models(5);
        let a = ["anchor".to_string()];
        assert!(matches!(jaccard_at_n(&[&m1], &a, 3), Err(EvalError::TooFewModels(1, 2))));
        assert!(matches!(jackknife_stability(&[&m1, &m2], &a, 3), Err(EvalError::TooFewModels(2, 3))));
    }

    #[test]
    fn jackknife_values_leave_one_out() {
        let (m1, m2) = overlap_models(5);
        let a = ["anchor".to_string()];
        let r = jackknife_stability(&[&m1, &m1, &m2], &a, 10).unwrap();
        // Leaving out m1 once still leaves {m1, m2}; leaving out m2 leaves {m1, m1}.
        assert_eq!(r.jackknife_values, vec![1.0 / 3.0, 1.0 / 3.0, 1.0]);
        let mean = 5.0 / 9.0;
        let std = ((2.0 * (1.0f64 / 3.0 - mean).powi(2) + (1.0f64 - mean).powi(2)) / 2.0).sqrt();
        assert!((r.mean - mean).abs() < 1e-15);
        assert!((r.std - std).abs() < 1e-15);
    }

    fn abcd() -> Vocabulary {
        Vocabulary::from_counts([("a", 9), ("b", 5), ("c", 5), ("d", 1)].map(|(w, c)| (w.to_string(), c)), 1)
            .unwrap()
    }

    #[test]
    fn anchor_selection() {
        let vocab = abcd();
        let all = circle(&["a", "b", "c", "d"].map(String::from), &[0.0, 1.0, 2.0, 3.0]);
        let sel = select_anchors(&vocab, 3, &[&all]).unwrap();
        assert_eq!(sel.anchors, ["a", "b", "c"]);
        assert_eq!(sel.dropped, 0);
        let sel = select_anchors(&vocab, 4, &[&all, &all]).unwrap();
        assert_eq!(sel.anchors, ["a", "b", "c", "d"]);

        let no_b = circle(&["a", "c", "d"].map(String::from), &[0.0, 1.0, 2.0]);
        let sel = select_anchors(&vocab, 3, &[&all, &no_b]).unwrap();
        assert_eq!(sel.anchors, ["a", "c", "d"]);
        assert_eq!(sel.dropped, 1);
        assert!(matches!(select_anchors(&vocab, 5, &[&all]), Err(EvalError::TooManyAnchors { .. })));
    }

    fn random_model(seed: u64, words: &[String]) -> EmbeddingSpace<f64> {
        let mut rng = crate::seed::rng(seed);
        let angles: Vec<f64> = words.iter().map(|_| rand::Rng::gen_range(&mut rng, 0.0..std::f64::consts::TAU)).collect();
        circle(words, &angles)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn permutation_invariant_and_monotone(seeds in proptest::collection::vec(any::<u64>(), 3..6), n in 1usize..6) {
            let words = names("w", 10);
            let models: Vec<EmbeddingSpace<f64>> = seeds.iter().map(|&s| random_model(s, &words)).collect();
            let refs: Vec<&EmbeddingSpace<f64>> = models.iter().collect();
            let base = jaccard_at_n(&refs, &words, n).unwrap().value;
            prop_assert!((0.0..=1.0).contains(&base));

            let mut rev = refs.clone();
            rev.reverse();
            let mut anchors = words.clone();
            anchors.reverse();
            let permuted = jaccard_at_n(&rev, &anchors, n).unwrap().value;
            prop_assert!((base - permuted).abs() < 1e-12);

            // Per anchor, adding a model never increases the coefficient.
            for a in &words {
                let one = std::slice::from_ref(a);
                let fewer = jaccard_at_n(&refs[..refs.len() - 1], one, n).unwrap().value;
                let more = jaccard_at_n(&refs, one, n).unwrap().value;
                prop_assert!(more <= fewer);
            }

            let report = jackknife_stability(&refs, &words, n).unwrap();
            let lo = report.jackknife_values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = report.jackknife_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(report.mean >= lo - 1e-15 && report.mean <= hi + 1e-15);
        }
    }
}
