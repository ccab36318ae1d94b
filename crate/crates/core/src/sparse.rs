//! Compressed sparse row storage and the `rows cols nnz` triple file format.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::scalar::{format_exact, Scalar};

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("entry ({row}, {col}) out of order or duplicated")]
    Unsorted { row: usize, col: usize },
    #[error("entry ({row}, {col}) outside a {rows}x{cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("header announces {expected} entries, found {found}")]
    CountMismatch { expected: usize, found: usize },
}

/// Row-major sparse matrix with sorted column indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CsrMatrix {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from triples sorted by row, then column, without duplicates.
    pub fn from_sorted_triples(
        rows: usize,
        cols: usize,
        triples: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self, SparseError> {
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (row, col, value) in triples {
            if row >= rows || col >= cols {
                return Err(SparseError::OutOfBounds {
                    row,
                    col,
                    rows,
                    cols,
                });
            }
            if last.is_some_and(|prev| prev >= (row, col)) {
                return Err(SparseError::Unsorted { row, col });
            }
            last = Some((row, col));
            indptr[row + 1] += 1;
            indices.push(col as u32);
            values.push(value);
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Ok(CsrMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    /// Dense row-major input; zeros are not stored.
    pub fn from_dense(rows: usize, cols: usize, data: &[T]) -> Self {
        assert_eq!(data.len(), rows * cols);
        let triples = (0..rows).flat_map(|r| {
            (0..cols).filter_map(move |c| {
                let v = data[r * cols + c];
                (v != T::zero()).then_some((r, c, v))
            })
        });
        Self::from_sorted_triples(rows, cols, triples).expect("dense input is ordered")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[T]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let (idx, vals) = self.row(r);
        match idx.binary_search(&(c as u32)) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (idx, vals) = self.row(r);
            idx.iter().zip(vals).map(move |(&c, &v)| (r, c as usize, v))
        })
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).1.iter().map(|v| v.f64()).sum())
            .collect()
    }

    /// Column sums, each accumulated in row order.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for (_, c, v) in self.iter() {
            sums[c] += v.f64();
        }
        sums
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.indices {
            counts[c as usize + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0u32; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for (r, c, v) in self.iter() {
            let slot = next[c];
            indices[slot] = r as u32;
            values[slot] = v;
            next[c] += 1;
        }
        CsrMatrix {
            rows: self.cols,
            cols: self.rows,
            indptr,
            indices,
            values,
        }
    }

    pub fn map_values<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            rows: self.rows,
            cols: self.cols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `y = A x`, rows in parallel; every row is summed sequentially so the
    /// result does not depend on the thread count.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        y.par_iter_mut().enumerate().for_each(|(r, out)| {
            let (idx, vals) = self.row(r);
            *out = idx
                .iter()
                .zip(vals)
                .map(|(&c, v)| v.f64() * x[c as usize])
                .sum();
        });
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.f64() * v.f64()).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.cols];
        for (r, c, v) in self.iter() {
            out[r * self.cols + c] = v.f64();
        }
        out
    }

    /// Header `rows cols nnz`, then one `row col value` line per entry with
    /// 17 significant digits.
    pub fn write_triples<W: Write>(&self, out: W) -> io::Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "{} {} {}", self.rows, self.cols, self.nnz())?;
        for (r, c, v) in self.iter() {
            writeln!(out, "{r} {c} {}", format_exact(v))?;
        }
        out.flush()
    }

    pub fn read_triples<R: io::Read>(input: R) -> Result<Self, SparseError> {
        let mut lines = BufReader::new(input).lines().enumerate();
        let malformed = |line: usize, message: &str| SparseError::Malformed {
            line,
            message: message.to_string(),
        };
        let io_err = |e| SparseError::Io {
            path: PathBuf::new(),
            source: e,
        };
        let (_, header) = lines.next().ok_or_else(|| malformed(1, "missing header"))?;
        let header = header.map_err(io_err)?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| malformed(1, "header must be `rows cols nnz`"))?;
        let [rows, cols, nnz] = dims[..] else {
            return Err(malformed(1, "header must be `rows cols nnz`"));
        };
        let mut triples = Vec::with_capacity(nnz);
        for (i, line) in lines {
            let line = line.map_err(io_err)?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parsed = (|| {
                let r: usize = parts.next()?.parse().ok()?;
                let c: usize = parts.next()?.parse().ok()?;
                let v: f64 = parts.next()?.parse().ok()?;
                parts.next().is_none().then_some((r, c, T::of(v)))
            })();
            triples.push(parsed.ok_or_else(|| malformed(i + 1, "expected `row col value`"))?);
        }
        if triples.len() != nnz {
            return Err(SparseError::CountMismatch {
                expected: nnz,
                found: triples.len(),
            });
        }
        Self::from_sorted_triples(rows, cols, triples)
    }

    pub fn save(&self, path: &Path) -> Result<(), SparseError> {
        let file = fs::File::create(path).map_err(|source| SparseError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_triples(file).map_err(|source| SparseError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, SparseError> {
        let file = fs::File::open(path).map_err(|source| SparseError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_triples(file)
    }
}
