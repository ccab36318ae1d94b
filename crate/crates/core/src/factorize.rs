//! Truncated SVD of a sparse matrix and embedding extraction.
//!
//! The factorization is a thick-restart Golub-Kahan-Lanczos bidiagonalization
//! with full reorthogonalization. The starting vector comes from a fixed
//! built-in seed and every reduction runs in a fixed order, so identical input
//! bits give identical output bits. Each singular pair is then sign-normalized
//! so that the largest-magnitude entry of the left vector is positive.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::ppmi::PpmiMatrix;
use crate::scalar::Scalar;
use crate::seed;
use crate::sparse::CsrMatrix;

/// Seed of the Lanczos starting vector and of any breakdown replacements.
pub const SVD_SEED: u64 = 0x5356_445f_5345_4544;

#[derive(Debug, Error, PartialEq)]
pub enum SvdError {
    #[error("rank {rank} must be between 1 and min(rows, cols) = {max}")]
    BadRank { rank: usize, max: usize },
    #[error(
        "no convergence after {restarts} restarts: largest residual {residual:e} \
         exceeds {tolerance:e} (Krylov dimension {krylov})"
    )]
    NoConvergence {
        restarts: usize,
        residual: f64,
        tolerance: f64,
        krylov: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdOptions {
    /// Relative residual bound `||A^T u - s v|| <= tol * s_max`.
    pub tolerance: f64,
    pub max_restarts: usize,
    /// Krylov subspace size; `None` picks `min(n, max(2k, k + 32))`.
    pub krylov_dim: Option<usize>,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            tolerance: 1e-10,
            max_restarts: 1000,
            krylov_dim: None,
        }
    }
}

/// Leading singular triplets `M ~ U diag(s) V^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSvd<T> {
    pub u: Array2<T>,
    pub singular_values: Array1<T>,
    pub v: Array2<T>,
    /// Restarts used until convergence.
    pub restarts: usize,
}

impl<T: Scalar> TruncatedSvd<T> {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }
}

/// Dense word vectors, one row per vocabulary entry.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    vectors: Array2<T>,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    /// Panics on non-finite entries.
    pub fn new(vectors: Array2<T>) -> Self {
        assert!(
            vectors.iter().all(|v| v.is_finite()),
            "embedding entries must be finite"
        );
        EmbeddingMatrix { vectors }
    }

    pub fn rows(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vectors(&self) -> &Array2<T> {
        &self.vectors
    }

    pub fn row(&self, i: usize) -> ndarray::ArrayView1<'_, T> {
        self.vectors.row(i)
    }

    pub fn into_inner(self) -> Array2<T> {
        self.vectors
    }
}

pub fn truncated_svd<T: Scalar>(m: &PpmiMatrix<T>, rank: usize) -> Result<TruncatedSvd<T>, SvdError> {
    truncated_svd_with(m.matrix(), rank, &SvdOptions::default())
}

/// Row `i` of the result is `U[i, :] * s^exponent`; exponent 0 returns `U`.
pub fn extract_embeddings<T: Scalar>(svd: &TruncatedSvd<T>, exponent: f64) -> EmbeddingMatrix<T> {
    if exponent == 0.0 {
        return EmbeddingMatrix::new(svd.u.clone());
    }
    let scale: Vec<T> = svd
        .singular_values
        .iter()
        .map(|s| T::of(s.f64().powf(exponent)))
        .collect();
    let mut vectors = svd.u.clone();
    for mut row in vectors.rows_mut() {
        for (x, &w) in row.iter_mut().zip(&scale) {
            *x = *x * w;
        }
    }
    EmbeddingMatrix::new(vectors)
}

/// Basis vectors stored as rows of one contiguous buffer.
struct Basis {
    len: usize,
    data: Vec<f64>,
}

impl Basis {
    fn new(len: usize) -> Self {
        Basis { len, data: Vec::new() }
    }

    fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.len..(i + 1) * self.len]
    }

    fn truncate(&mut self, n: usize) {
        self.data.truncate(n * self.len);
    }

    fn push(&mut self, v: &[f64]) {
        debug_assert_eq!(v.len(), self.len);
        self.data.extend_from_slice(v);
    }

    /// Two passes of classical Gram-Schmidt against the first `upto` vectors.
    fn orthogonalize(&self, upto: usize, x: &mut [f64]) {
        if upto == 0 {
            return;
        }
        for _ in 0..2 {
            let coeffs: Vec<f64> = (0..upto).into_par_iter().map(|i| dot(self.get(i), x)).collect();
            x.par_chunks_mut(1024).enumerate().for_each(|(chunk, xs)| {
                let offset = chunk * 1024;
                for (i, &c) in coeffs.iter().enumerate() {
                    let b = &self.get(i)[offset..offset + xs.len()];
                    for (xe, be) in xs.iter_mut().zip(b) {
                        *xe -= c * be;
                    }
                }
            });
        }
    }

    /// Rows of `Q^T B` for the first `keep` columns of `q` (k x k).
    fn rotate(&self, q: &DMatrix<f64>, order: &[usize], keep: usize) -> Vec<f64> {
        let k = q.nrows();
        let mut out = vec![0.0; keep * self.len];
        out.par_chunks_mut(self.len).enumerate().for_each(|(c, dst)| {
            let col = order[c];
            for i in 0..k {
                let w = q[(i, col)];
                if w != 0.0 {
                    for (d, b) in dst.iter_mut().zip(self.get(i)) {
                        *d += w * b;
                    }
                }
            }
        });
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: &mut [f64], s: f64) {
    a.iter_mut().for_each(|x| *x *= s);
}

/// A unit vector orthogonal to the first `upto` basis vectors.
fn fresh_direction(basis: &Basis, upto: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = (0..basis.len).map(|_| rng.gen::<f64>() - 0.5).collect();
        basis.orthogonalize(upto, &mut x);
        let n = norm(&x);
        if n > 1e-8 {
            scale(&mut x, 1.0 / n);
            return x;
        }
    }
}

/// Truncated SVD of a general sparse matrix.
pub fn truncated_svd_with<T: Scalar>(
    a: &CsrMatrix<T>,
    rank: usize,
    options: &SvdOptions,
) -> Result<TruncatedSvd<T>, SvdError> {
    let (m, n) = (a.rows(), a.cols());
    let max = m.min(n);
    if rank == 0 || rank > max {
        return Err(SvdError::BadRank { rank, max });
    }
    // The right basis lives in the larger space only when the matrix is tall,
    // so wide inputs are factored through their transpose.
    if m < n {
        let at = a.transpose();
        let p = lanczos(&at, a, rank, options)?;
        return Ok(finish(m, n, rank, p.v_rows, p.u_rows, p.values, p.smax, p.restarts));
    }
    let p = lanczos(a, &a.transpose(), rank, options)?;
    Ok(finish(m, n, rank, p.u_rows, p.v_rows, p.values, p.smax, p.restarts))
}

struct Partial {
    u_rows: Vec<f64>,
    v_rows: Vec<f64>,
    values: Vec<f64>,
    smax: f64,
    restarts: usize,
}

/// Thick-restart Golub-Kahan-Lanczos on a matrix with at least as many rows
/// as columns; `at` is its transpose.
fn lanczos<T: Scalar>(
    a: &CsrMatrix<T>,
    at: &CsrMatrix<T>,
    rank: usize,
    options: &SvdOptions,
) -> Result<Partial, SvdError> {
    let (m, n) = (a.rows(), a.cols());
    let max = n;
    let k = options
        .krylov_dim
        .unwrap_or_else(|| (2 * rank).max(rank + 32))
        .clamp(rank, max);
    let anorm = a.frobenius_norm();
    let breakdown = 1e-13 * anorm.max(f64::MIN_POSITIVE);
    let mut rng = seed::rng(SVD_SEED);

    let mut us = Basis::new(m);
    let mut vs = Basis::new(n);
    let mut b = DMatrix::<f64>::zeros(k, k);

    let mut start: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let nrm = norm(&start);
    scale(&mut start, 1.0 / nrm);
    vs.push(&start);

    // Number of Ritz vectors carried over from the previous cycle and their
    // couplings to the first new Lanczos vector.
    let mut locked = 0usize;
    let mut rho: Vec<f64> = Vec::new();
    let mut restarts = 0usize;
    let mut p = vec![0.0; m];
    let mut r = vec![0.0; n];

    loop {
        let mut beta_last = 0.0;
        for j in locked..k {
            a.mul_vec(vs.get(j), &mut p);
            if j == locked && locked > 0 {
                for (i, &c) in rho.iter().enumerate() {
                    p.iter_mut().zip(us.get(i)).for_each(|(x, u)| *x -= c * u);
                }
            } else if j > 0 {
                let beta = b[(j - 1, j)];
                p.iter_mut().zip(us.get(j - 1)).for_each(|(x, u)| *x -= beta * u);
            }
            us.orthogonalize(j, &mut p);
            let mut alpha = norm(&p);
            if alpha <= breakdown {
                p = fresh_direction(&us, j, &mut rng);
                alpha = 0.0;
            } else {
                scale(&mut p, 1.0 / alpha);
            }
            us.push(&p);
            b[(j, j)] = alpha;

            at.mul_vec(us.get(j), &mut r);
            r.iter_mut().zip(vs.get(j)).for_each(|(x, v)| *x -= alpha * v);
            vs.orthogonalize(j + 1, &mut r);
            let beta = norm(&r);
            if j + 1 < k {
                let next = if beta <= breakdown {
                    b[(j, j + 1)] = 0.0;
                    fresh_direction(&vs, j + 1, &mut rng)
                } else {
                    b[(j, j + 1)] = beta;
                    r.iter().map(|x| x / beta).collect()
                };
                vs.push(&next);
            } else {
                beta_last = beta;
            }
        }

        let svd = b.clone().svd(true, true);
        let left = svd.u.expect("requested");
        let right = svd.v_t.expect("requested").transpose();
        let sigma = svd.singular_values;
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]).then(x.cmp(&y)));

        let smax = sigma[order[0]];
        let residual = |c: usize| beta_last * left[(k - 1, order[c])].abs();
        let worst = (0..rank).map(residual).fold(0.0, f64::max);
        let tolerance = options.tolerance * smax;
        let converged = worst <= tolerance || beta_last <= breakdown;

        if converged || restarts >= options.max_restarts {
            if !converged {
                return Err(SvdError::NoConvergence {
                    restarts,
                    residual: worst / smax.max(f64::MIN_POSITIVE),
                    tolerance: options.tolerance,
                    krylov: k,
                });
            }
            let u_rows = us.rotate(&left, &order, rank);
            let v_rows = vs.rotate(&right, &order, rank);
            let values: Vec<f64> = order[..rank].iter().map(|&c| sigma[c]).collect();
            return Ok(Partial {
                u_rows,
                v_rows,
                values,
                smax,
                restarts,
            });
        }

        restarts += 1;
        let keep = (rank + (k - rank) / 2).min(k - 1);
        let u_rows = us.rotate(&left, &order, keep);
        let v_rows = vs.rotate(&right, &order, keep);
        us = Basis { len: m, data: u_rows };
        vs = Basis { len: n, data: v_rows };
        rho = (0..keep).map(|c| beta_last * left[(k - 1, order[c])]).collect();
        b.fill(0.0);
        for c in 0..keep {
            b[(c, c)] = sigma[order[c]];
            b[(c, keep)] = rho[c];
        }
        let next: Vec<f64> = if beta_last <= breakdown {
            fresh_direction(&vs, keep, &mut rng)
        } else {
            let mut x: Vec<f64> = r.iter().map(|x| x / beta_last).collect();
            // Guard against drift of the rotated basis.
            vs.orthogonalize(keep, &mut x);
            let nx = norm(&x);
            scale(&mut x, 1.0 / nx);
            x
        };
        vs.truncate(keep);
        vs.push(&next);
        us.truncate(keep);
        locked = keep;
    }
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Scalar>(
    m: usize,
    n: usize,
    rank: usize,
    mut u_rows: Vec<f64>,
    mut v_rows: Vec<f64>,
    values: Vec<f64>,
    smax: f64,
    restarts: usize,
) -> TruncatedSvd<T> {
    for c in 0..rank {
        let u = &mut u_rows[c * m..(c + 1) * m];
        let pivot = u
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &x)| if x.abs() > best.1 { (i, x.abs()) } else { best });
        if u[pivot.0] < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
            v_rows[c * n..(c + 1) * n].iter_mut().for_each(|x| *x = -*x);
        }
    }
    let negligible = values.iter().filter(|&&s| s <= 1e-12 * smax.max(f64::MIN_POSITIVE)).count();
    if negligible > 0 {
        log::warn!(
            "requested rank {rank} exceeds the numerical rank; {negligible} singular values are zero"
        );
    }
    let values: Vec<f64> = values
        .into_iter()
        .map(|s| if s <= 1e-12 * smax.max(f64::MIN_POSITIVE) { 0.0 } else { s })
        .collect();
    let u = Array2::from_shape_fn((m, rank), |(i, c)| T::of(u_rows[c * m + i]));
    let v = Array2::from_shape_fn((n, rank), |(i, c)| T::of(v_rows[c * n + i]));
    TruncatedSvd {
        u,
        singular_values: values.into_iter().map(T::of).collect(),
        v,
        restarts,
    }
}
