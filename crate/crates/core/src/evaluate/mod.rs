//! Accuracy (word similarity, analogies) and stability (j@n) measurements.

mod analogy;
mod similarity;
mod stability;

use thiserror::Error;

pub use analogy::{
    eval_analogy, solve_analogy, AnalogyQuestion, AnalogyScore, AnalogyTestSet, SectionScore,
    EPSILON,
};
pub use similarity::{eval_similarity, fractional_ranks, spearman, SimilarityScore, SimilarityTestSet};
pub use stability::{
    jackknife_stability, jaccard_at_n, select_anchors, AnchorSelection, JaccardResult,
    StabilityReport,
};

use crate::embedspace::SpaceError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two observations, got {0}")]
    TooFewObservations(usize),
    #[error("one of the rankings has zero variance")]
    ZeroVariance,
    #[error("only {used} of {total} pairs are covered by the vocabulary (coverage {coverage:.3})")]
    InsufficientPairs {
        used: usize,
        total: usize,
        coverage: f64,
    },
    #[error("none of {total} analogy questions is answerable (coverage 0)")]
    NoAnswerableQuestions { total: usize },
    #[error("{0} models given, at least {1} required")]
    TooFewModels(usize, usize),
    #[error("neighbourhood size must be positive")]
    ZeroNeighbourhood,
    #[error("no anchor is shared by all models ({dropped} dropped)")]
    NoAnchors { dropped: usize },
    #[error("anchor count {requested} exceeds vocabulary size {available}")]
    TooManyAnchors { requested: usize, available: usize },
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Unit-length copies of every row in `f64`; zero rows stay zero.
pub(crate) fn unit_rows<T: crate::Scalar>(space: &crate::embedspace::EmbeddingSpace<T>) -> Vec<Vec<f64>> {
    space
        .matrix()
        .vectors()
        .rows()
        .into_iter()
        .map(|row| {
            let v: Vec<f64> = row.iter().map(|x| x.f64()).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 {
                v
            } else {
                v.into_iter().map(|x| x / n).collect()
            }
        })
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
