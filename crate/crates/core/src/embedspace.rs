//! Finished embedding spaces: cosine queries and word2vec text I/O.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use ndarray::Array2;
use rayon::prelude::*;
use thiserror::Error;

use crate::factorize::EmbeddingMatrix;
use crate::scalar::{format_exact, Scalar};

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("unknown word `{0}`")]
    UnknownWord(String),
    #[error("asked for {requested} neighbours but only {available} other words exist")]
    TooManyNeighbours { requested: usize, available: usize },
    #[error("{words} words but {rows} vectors")]
    SizeMismatch { words: usize, rows: usize },
    #[error("line 1: malformed header `{0}` (expected `<count> <dim>`)")]
    MalformedHeader(String),
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: duplicate word `{word}`")]
    DuplicateWord { line: usize, word: String },
    #[error("line {line}: non-finite or unparsable value `{value}`")]
    NonFinite { line: usize, value: String },
    #[error("header announces {expected} words, file has {found}")]
    Truncated { expected: usize, found: usize },
    #[error("zero vector for `{0}` cannot be unit-normalized")]
    ZeroVector(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// A vocabulary (in row order) with one vector per word.
///
/// Row order doubles as the tie-break order of every ranking, so spaces built
/// from a frequency-sorted vocabulary break ties by frequency, then
/// lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace<T> {
    words: Vec<String>,
    index: HashMap<String, usize>,
    matrix: EmbeddingMatrix<T>,
    norms: Vec<f64>,
    unit_normalized: bool,
}

impl<T: Scalar> EmbeddingSpace<T> {
    pub fn new(words: Vec<String>, matrix: EmbeddingMatrix<T>) -> Result<Self, SpaceError> {
        if words.len() != matrix.rows() {
            return Err(SpaceError::SizeMismatch {
                words: words.len(),
                rows: matrix.rows(),
            });
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(SpaceError::DuplicateWord {
                    line: i + 2,
                    word: w.clone(),
                });
            }
        }
        let norms = row_norms(matrix.vectors());
        Ok(EmbeddingSpace {
            words,
            index,
            matrix,
            norms,
            unit_normalized: false,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn matrix(&self) -> &EmbeddingMatrix<T> {
        &self.matrix
    }

    pub fn is_unit_normalized(&self) -> bool {
        self.unit_normalized
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn index_of(&self, word: &str) -> Result<usize, SpaceError> {
        self.index
            .get(word)
            .copied()
            .ok_or_else(|| SpaceError::UnknownWord(word.to_string()))
    }

    /// Scales every row to unit length. Fails on all-zero rows.
    pub fn normalized(&self) -> Result<Self, SpaceError> {
        let mut vectors = self.matrix.vectors().clone();
        for (i, mut row) in vectors.rows_mut().into_iter().enumerate() {
            let n = self.norms[i];
            if n == 0.0 {
                return Err(SpaceError::ZeroVector(self.words[i].clone()));
            }
            row.iter_mut().for_each(|x| *x = T::of(x.f64() / n));
        }
        let matrix = EmbeddingMatrix::new(vectors);
        let norms = row_norms(matrix.vectors());
        Ok(EmbeddingSpace {
            words: self.words.clone(),
            index: self.index.clone(),
            matrix,
            norms,
            unit_normalized: true,
        })
    }

    fn cosine_at(&self, a: usize, b: usize) -> f64 {
        let (na, nb) = (self.norms[a], self.norms[b]);
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        let va = self.matrix.row(a);
        let vb = self.matrix.row(b);
        let dot: f64 = va.iter().zip(vb.iter()).map(|(x, y)| x.f64() * y.f64()).sum();
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }

    /// `dot(v1, v2) / (|v1| |v2|)`; zero vectors have cosine 0 with everything.
    pub fn cosine(&self, w1: &str, w2: &str) -> Result<f64, SpaceError> {
        Ok(self.cosine_at(self.index_of(w1)?, self.index_of(w2)?))
    }

    /// Cosine of row `target` with every row, in row order.
    pub fn cosines_to(&self, target: usize) -> Vec<f64> {
        (0..self.len())
            .into_par_iter()
            .with_min_len(256)
            .map(|i| self.cosine_at(target, i))
            .collect()
    }

    /// The `n` words most similar to `anchor`, the anchor itself excluded.
    /// Equal cosines are ordered by row.
    pub fn most_similar(&self, anchor: &str, n: usize) -> Result<Vec<(String, f64)>, SpaceError> {
        let a = self.index_of(anchor)?;
        Ok(self
            .most_similar_ids(a, n)?
            .into_iter()
            .map(|(i, c)| (self.words[i].clone(), c))
            .collect())
    }

    pub fn most_similar_ids(&self, anchor: usize, n: usize) -> Result<Vec<(usize, f64)>, SpaceError> {
        let available = self.len() - 1;
        if n > available {
            return Err(SpaceError::TooManyNeighbours {
                requested: n,
                available,
            });
        }
        let cos = self.cosines_to(anchor);
        let mut candidates: Vec<(usize, f64)> =
            cos.into_iter().enumerate().filter(|&(i, _)| i != anchor).collect();
        let rank = by_score_then_index;
        if n < candidates.len() && n > 0 {
            candidates.select_nth_unstable_by(n - 1, rank);
        }
        candidates.truncate(n);
        candidates.sort_by(rank);
        Ok(candidates)
    }

    /// word2vec text format: `<count> <dim>` header, then one
    /// `<word> <v1> ... <vd>` line per word with 17 significant digits.
    pub fn write<W: Write>(&self, out: W) -> io::Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "{} {}", self.len(), self.dim())?;
        for (i, word) in self.words.iter().enumerate() {
            out.write_all(word.as_bytes())?;
            for x in self.matrix.row(i) {
                write!(out, " {}", format_exact(*x))?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn read<R: Read>(input: R) -> Result<Self, SpaceError> {
        let io_err = |source| SpaceError::Io {
            path: PathBuf::new(),
            source,
        };
        let mut lines = BufReader::new(input).lines();
        let header = lines.next().transpose().map_err(io_err)?.unwrap_or_default();
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| SpaceError::MalformedHeader(header.clone()))?;
        let [count, dim] = dims[..] else {
            return Err(SpaceError::MalformedHeader(header));
        };
        let mut words = Vec::with_capacity(count);
        let mut seen = HashMap::with_capacity(count);
        let mut values: Vec<T> = Vec::with_capacity(count * dim);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(io_err)?;
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            if words.len() == count {
                return Err(SpaceError::Truncated {
                    expected: count,
                    found: count + 1,
                });
            }
            let mut parts = line.split(' ').filter(|p| !p.is_empty());
            let word = parts.next().expect("non-empty line").to_string();
            if seen.insert(word.clone(), words.len()).is_some() {
                return Err(SpaceError::DuplicateWord { line: lineno, word });
            }
            let before = values.len();
            for p in parts {
                let v: f64 = p.parse().map_err(|_| SpaceError::NonFinite {
                    line: lineno,
                    value: p.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(SpaceError::NonFinite {
                        line: lineno,
                        value: p.to_string(),
                    });
                }
                values.push(T::of(v));
            }
            let found = values.len() - before;
            if found != dim {
                return Err(SpaceError::DimensionMismatch {
                    line: lineno,
                    expected: dim,
                    found,
                });
            }
            words.push(word);
        }
        if words.len() != count {
            return Err(SpaceError::Truncated {
                expected: count,
                found: words.len(),
            });
        }
        let vectors = Array2::from_shape_vec((count, dim), values).expect("shape checked per row");
        EmbeddingSpace::new(words, EmbeddingMatrix::new(vectors))
    }

    /// Writes to `path`, gzip-compressed when it ends in `.gz`.
    pub fn save(&self, path: &Path) -> Result<(), SpaceError> {
        let wrap = |source| SpaceError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = fs::File::create(path).map_err(wrap)?;
        if is_gzip(path) {
            let mut enc = GzEncoder::new(file, Compression::default());
            self.write(&mut enc).map_err(wrap)?;
            enc.finish().map_err(wrap)?;
            Ok(())
        } else {
            self.write(file).map_err(wrap)
        }
    }

    pub fn load(path: &Path) -> Result<Self, SpaceError> {
        let file = fs::File::open(path).map_err(|source| SpaceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let result = if is_gzip(path) {
            Self::read(GzDecoder::new(file))
        } else {
            Self::read(file)
        };
        result.map_err(|e| match e {
            SpaceError::Io { source, .. } => SpaceError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

fn row_norms<T: Scalar>(vectors: &Array2<T>) -> Vec<f64> {
    vectors
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|x| x.f64() * x.f64()).sum::<f64>().sqrt())
        .collect()
}

/// Orders `(index, score)` by descending score, then ascending index.
pub(crate) fn by_score_then_index(x: &(usize, f64), y: &(usize, f64)) -> Ordering {
    y.1.total_cmp(&x.1).then(x.0.cmp(&y.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn space(words: &[&str], vectors: Array2<f64>) -> EmbeddingSpace<f64> {
        EmbeddingSpace::new(
            words.iter().map(|w| w.to_string()).collect(),
            EmbeddingMatrix::new(vectors),
        )
        .unwrap()
    }

    fn four() -> EmbeddingSpace<f64> {
        space(
            &["a", "b", "c", "d"],
            array![[1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [-1.0, 0.2]],
        )
    }

    #[test]
    fn cosine_examples() {
        let s = four();
        assert!((s.cosine("a", "a").unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(s.cosine("a", "c").unwrap(), 0.0);
        assert!((s.cosine("a", "b").unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(s.cosine("a", "zz"), Err(SpaceError::UnknownWord(w)) if w == "zz"));
    }

    #[test]
    fn ranking_matches_brute_force() {
        let s = four();
        for anchor in ["a", "b", "c", "d"] {
            let mut oracle: Vec<(String, f64)> = s
                .words()
                .iter()
                .filter(|w| *w != anchor)
                .map(|w| (w.clone(), s.cosine(anchor, w).unwrap()))
                .collect();
            oracle.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap());
            let got = s.most_similar(anchor, 3).unwrap();
            assert_eq!(got, oracle);
        }
        let names: Vec<String> = s.most_similar("a", 3).unwrap().into_iter().map(|p| p.0).collect();
        assert_eq!(names, ["b", "c", "d"]);
        assert!(matches!(
            s.most_similar("a", 4),
            Err(SpaceError::TooManyNeighbours { requested: 4, available: 3 })
        ));
    }

    #[test]
    fn ties_follow_row_order() {
        let s = space(&["x", "p", "q", "r"], array![[1.0, 0.0], [0.0, 1.0], [0.0, 2.0], [0.0, -1.0]]);
        let names: Vec<String> = s.most_similar("x", 3).unwrap().into_iter().map(|p| p.0).collect();
        assert_eq!(names, ["p", "q", "r"]);
    }

    #[test]
    fn sign_flips_do_not_change_rankings() {
        let s = space(
            &["a", "b", "c", "d", "e"],
            array![[0.3, -0.2, 0.9], [0.1, 0.8, -0.3], [-0.5, 0.4, 0.4], [0.7, 0.7, 0.1], [-0.2, -0.9, 0.3]],
        );
        let mut flipped = s.matrix().vectors().clone();
        flipped.column_mut(1).mapv_inplace(|x| -x);
        flipped.column_mut(2).mapv_inplace(|x| -x);
        let t = space(&["a", "b", "c", "d", "e"], flipped);
        for w in s.words() {
            let x: Vec<String> = s.most_similar(w, 4).unwrap().into_iter().map(|p| p.0).collect();
            let y: Vec<String> = t.most_similar(w, 4).unwrap().into_iter().map(|p| p.0).collect();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let s = space(&["a", "b"], array![[0.1, 1.0 / 3.0, -2e-300], [1e10, -0.0, 7.0]]);
        let mut first = Vec::new();
        s.write(&mut first).unwrap();
        let back = EmbeddingSpace::<f64>::read(&first[..]).unwrap();
        assert_eq!(back, s);
        let mut second = Vec::new();
        back.write(&mut second).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn gzip_by_extension() {
        let s = four();
        let dir = tempfile::tempdir().unwrap();
        let plain = dir.path().join("v.txt");
        let packed = dir.path().join("v.txt.gz");
        s.save(&plain).unwrap();
        s.save(&packed).unwrap();
        assert_ne!(fs::read(&plain).unwrap(), fs::read(&packed).unwrap());
        assert_eq!(EmbeddingSpace::<f64>::load(&packed).unwrap(), s);
    }

    #[test]
    fn parse_errors_are_distinct() {
        let ok = EmbeddingSpace::<f64>::read("2 3\nx 1 2 3\ny 4 5 6\n".as_bytes()).unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok.dim(), 3);
        let err = |s: &str| EmbeddingSpace::<f64>::read(s.as_bytes()).unwrap_err();
        assert!(matches!(err("2 3\nx 1 2 3\n"), SpaceError::Truncated { expected: 2, found: 1 }));
        assert!(matches!(err("two 3\n"), SpaceError::MalformedHeader(_)));
        assert!(matches!(err("2\n"), SpaceError::MalformedHeader(_)));
        assert!(matches!(
            err("2 3\nx 1 2 3\ny 4 5\n"),
            SpaceError::DimensionMismatch { line: 3, expected: 3, found: 2 }
        ));
        assert!(matches!(err("2 1\nx 1\nx 2\n"), SpaceError::DuplicateWord { line: 3, .. }));
        assert!(matches!(err("1 2\nx 1 NaN\n"), SpaceError::NonFinite { line: 2, .. }));
        assert!(matches!(err("1 2\nx 1 inf\n"), SpaceError::NonFinite { line: 2, .. }));
        assert!(matches!(err("1 1\nx 1\ny 2\n"), SpaceError::Truncated { .. }));
    }

    #[test]
    fn zero_rows_cannot_be_normalized() {
        let s = space(&["a", "b"], array![[1.0, 0.0], [0.0, 0.0]]);
        assert!(matches!(s.normalized(), Err(SpaceError::ZeroVector(w)) if w == "b"));
        assert_eq!(s.cosine("a", "b").unwrap(), 0.0);
    }

    fn random_space() -> impl proptest::strategy::Strategy<Value = EmbeddingSpace<f64>> {
        (3usize..12, 1usize..5).prop_flat_map(|(n, d)| {
            proptest::collection::vec(-1.0f64..1.0, n * d).prop_map(move |v| {
                let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
                let mut m = Array2::from_shape_vec((n, d), v).unwrap();
                // Keep rows away from zero.
                m.column_mut(0).mapv_inplace(|x| x + 3.0);
                EmbeddingSpace::new(words, EmbeddingMatrix::new(m)).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn prefix_property(s in random_space(), a in 0usize..3) {
            let anchor = s.words()[a].clone();
            let max = s.len() - 1;
            for n in 1..max {
                let shorter = s.most_similar(&anchor, n).unwrap();
                let longer = s.most_similar(&anchor, n + 1).unwrap();
                prop_assert_eq!(&shorter[..], &longer[..n]);
            }
        }

        #[test]
        fn normalization_preserves_queries(s in random_space(), a in 0usize..3) {
            let unit = s.normalized().unwrap();
            prop_assert!(unit.is_unit_normalized());
            for i in 0..unit.len() {
                let n: f64 = unit.matrix().row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!((n - 1.0).abs() <= 1e-10);
            }
            let anchor = s.words()[a].clone();
            let raw = s.most_similar(&anchor, s.len() - 1).unwrap();
            let norm = unit.most_similar(&anchor, s.len() - 1).unwrap();
            for (x, y) in raw.iter().zip(&norm) {
                prop_assert!((x.1 - y.1).abs() <= 1e-10);
            }
            // Rankings agree wherever cosines are separated beyond rounding.
            for (k, (x, y)) in raw.iter().zip(&norm).enumerate() {
                let separated = raw.get(k + 1).is_none_or(|n| (x.1 - n.1).abs() > 1e-9)
                    && (k == 0 || (raw[k - 1].1 - x.1).abs() > 1e-9);
                if separated {
                    prop_assert_eq!(&x.0, &y.0);
                }
            }
        }
    }
}
