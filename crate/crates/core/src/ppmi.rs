//! Positive pointwise mutual information.

use rayon::prelude::*;
use thiserror::Error;

use crate::cooccur::CooccurrenceMatrix;
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum PpmiError {
    #[error("co-occurrence matrix has no mass")]
    ZeroMass,
    #[error("context smoothing exponent {0} outside (0, 1]")]
    BadSmoothing(f64),
}

/// Sparse matrix holding only the strictly positive PPMI cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PpmiMatrix<T> {
    matrix: CsrMatrix<T>,
}

impl<T: Scalar> PpmiMatrix<T> {
    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn get(&self, word: usize, context: usize) -> T {
        self.matrix.get(word, context)
    }

    /// Wraps a matrix read back from a triple file. Non-positive cells are
    /// discarded.
    pub fn from_csr(matrix: CsrMatrix<T>) -> Self {
        let kept = matrix.iter().filter(|&(_, _, v)| v > T::zero());
        let matrix = CsrMatrix::from_sorted_triples(matrix.rows(), matrix.cols(), kept.collect::<Vec<_>>())
            .expect("filtered triples stay sorted");
        PpmiMatrix { matrix }
    }
}

/// `log(P(i,j) / (P(i) P(j)))` where the ratio exceeds 1, natural log.
///
/// `P(i,j) = c(i,j)/D`, `P(i) = row(i)/D` and the context marginal is
/// `col(j)^alpha / sum_k col(k)^alpha`; `alpha = 1` leaves it unsmoothed.
pub fn to_ppmi<T: Scalar>(
    counts: &CooccurrenceMatrix<T>,
    alpha: f64,
) -> Result<PpmiMatrix<T>, PpmiError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(PpmiError::BadSmoothing(alpha));
    }
    let m = counts.matrix();
    let total = counts.total_mass();
    if total <= 0.0 {
        return Err(PpmiError::ZeroMass);
    }
    let rows = m.row_sums();
    let (cols, col_total) = if alpha == 1.0 {
        (m.col_sums(), total)
    } else {
        let smoothed: Vec<f64> = m.col_sums().into_iter().map(|c| c.powf(alpha)).collect();
        let sum = smoothed.iter().sum();
        (smoothed, sum)
    };

    let kept: Vec<Vec<(usize, usize, T)>> = (0..m.rows())
        .into_par_iter()
        .map(|r| {
            let (idx, vals) = m.row(r);
            let p_row = rows[r] / total;
            idx.iter()
                .zip(vals)
                .filter_map(|(&c, &v)| {
                    let p_joint = v.f64() / total;
                    let p_col = cols[c as usize] / col_total;
                    let ratio = p_joint / (p_row * p_col);
                    (ratio > 1.0).then(|| (r, c as usize, T::of(ratio.ln())))
                })
                .filter(|&(_, _, v)| v > T::zero())
                .collect()
        })
        .collect();
    let matrix = CsrMatrix::from_sorted_triples(m.rows(), m.cols(), kept.into_iter().flatten())
        .expect("rows are produced in order");
    Ok(PpmiMatrix { matrix })
}
