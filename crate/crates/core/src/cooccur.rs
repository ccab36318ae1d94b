//! Sliding-window co-occurrence counting with distance and frequency
//! down-sampling.
//!
//! Every word-context pair `(w_i, w_j)` with `1 <= |j - i| <= s` inside one
//! document is an event. Its distance factor is `(s + 1 - d) / s` and its
//! frequency factor `ff(w_i) * ff(w_j)` with `ff(w) = sqrt(t / r(w))` for
//! `r(w) > t`, else 1. Each factor is applied under its own [`Strategy`]:
//! ignored, drawn as a Bernoulli keep/drop decision, or multiplied into the
//! added mass.
//!
//! The corpus is cut into fixed shards of whole documents. Shards accumulate
//! privately and are merged pairwise in shard order, so the floating point
//! summation order is a function of the corpus alone. Probabilistic decisions
//! use one generator stream per shard, derived from the master seed.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Vocabulary};
use crate::scalar::Scalar;
use crate::seed;
use crate::sparse::CsrMatrix;

/// Documents are grouped into shards of at least this many tokens.
pub const SHARD_TOKENS: usize = 1 << 16;

#[derive(Debug, Error, PartialEq)]
pub enum CooccurError {
    #[error("window size must be at least 1")]
    ZeroWindow,
    #[error("frequency threshold {0} outside (0, 1]")]
    BadThreshold(f64),
    #[error("unknown word `{0}`")]
    UnknownWord(String),
}

/// How a down-sampling factor is applied to a word-context pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// The factor is ignored.
    None,
    /// The pair is kept with the factor as probability.
    #[serde(rename = "prob")]
    Probabilistic,
    /// The factor scales the mass added for the pair.
    #[serde(rename = "weight")]
    Weighted,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Probabilistic => "prob",
            Strategy::Weighted => "weight",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Strategy::None),
            "prob" | "probabilistic" => Ok(Strategy::Probabilistic),
            "weight" | "weighted" => Ok(Strategy::Weighted),
            other => Err(format!("unknown strategy `{other}` (expected none|prob|weight)")),
        }
    }
}

/// Treatment of tokens below the vocabulary's minimum count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OovPolicy {
    /// Dropped before windowing: neighbors close the gap.
    #[default]
    Remove,
    /// Kept as placeholders that occupy window positions.
    Keep,
}

impl FromStr for OovPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "remove" => Ok(OovPolicy::Remove),
            "keep" => Ok(OovPolicy::Keep),
            other => Err(format!("unknown oov policy `{other}` (expected remove|keep)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub window: usize,
    pub threshold: f64,
    pub df: Strategy,
    pub ff: Strategy,
    /// Absent means a fresh seed from the operating system per run.
    pub seed: Option<u64>,
    pub oov: OovPolicy,
}

impl SamplingConfig {
    pub fn new(window: usize, threshold: f64, df: Strategy, ff: Strategy) -> Self {
        SamplingConfig {
            window,
            threshold,
            df,
            ff,
            seed: None,
            oov: OovPolicy::Remove,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_oov(mut self, oov: OovPolicy) -> Self {
        self.oov = oov;
        self
    }

    pub fn is_probabilistic(&self) -> bool {
        self.df == Strategy::Probabilistic || self.ff == Strategy::Probabilistic
    }

    pub fn validate(&self) -> Result<(), CooccurError> {
        if self.window == 0 {
            return Err(CooccurError::ZeroWindow);
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(CooccurError::BadThreshold(self.threshold));
        }
        Ok(())
    }
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig::new(5, 1e-4, Strategy::Weighted, Strategy::Weighted)
    }
}

pub fn distance(i: usize, j: usize) -> usize {
    debug_assert_ne!(i, j);
    i.abs_diff(j)
}

/// `(s + 1 - d) / s` for `1 <= d <= s`.
pub fn distance_factor(window: usize, d: usize) -> f64 {
    assert!(
        (1..=window).contains(&d),
        "distance {d} outside window of size {window}"
    );
    (window + 1 - d) as f64 / window as f64
}

/// `sqrt(t / r)` above the threshold, 1 at or below it.
pub fn frequency_factor(relative_frequency: f64, threshold: f64) -> f64 {
    if relative_frequency > threshold {
        (threshold / relative_frequency).sqrt()
    } else {
        1.0
    }
}

/// Frequency factor of a word pair: the product of both words' factors.
pub fn pair_factor(
    w_i: &str,
    w_j: &str,
    vocab: &Vocabulary,
    config: &SamplingConfig,
) -> Result<f64, CooccurError> {
    let ff = |w: &str| {
        vocab
            .id(w)
            .map(|id| frequency_factor(vocab.relative_frequency(id), config.threshold))
            .ok_or_else(|| CooccurError::UnknownWord(w.to_string()))
    };
    Ok(ff(w_i)? * ff(w_j)?)
}

/// Sparse word x context matrix of (possibly fractional) co-occurrence mass.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceMatrix<T> {
    matrix: CsrMatrix<T>,
    total_mass: f64,
    seed: Option<u64>,
}

impl<T: Scalar> CooccurrenceMatrix<T> {
    pub fn from_csr(matrix: CsrMatrix<T>) -> Self {
        let total_mass = matrix.values().iter().map(|v| v.f64()).sum();
        CooccurrenceMatrix {
            matrix,
            total_mass,
            seed: None,
        }
    }

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

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// The seed that drove probabilistic decisions, if any were made.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn into_csr(self) -> CsrMatrix<T> {
        self.matrix
    }
}

type CellMap = FxHashMap<u64, f64>;

#[inline]
fn cell(word: u32, context: u32) -> u64 {
    ((word as u64) << 32) | context as u64
}

/// Accumulates the co-occurrence matrix of `corpus` over `vocab`.
///
/// When a strategy is probabilistic and `config.seed` is absent, a seed is
/// drawn from the operating system; [`CooccurrenceMatrix::seed`] reports it.
pub fn accumulate<T: Scalar>(
    corpus: &Corpus,
    vocab: &Vocabulary,
    config: &SamplingConfig,
) -> Result<CooccurrenceMatrix<T>, CooccurError> {
    config.validate()?;
    let seed = config
        .is_probabilistic()
        .then(|| config.seed.unwrap_or_else(seed::entropy));

    let ff: Vec<f64> = (0..vocab.len() as u32)
        .map(|id| frequency_factor(vocab.relative_frequency(id), config.threshold))
        .collect();
    let df: Vec<f64> = std::iter::once(0.0)
        .chain((1..=config.window).map(|d| distance_factor(config.window, d)))
        .collect();
    let plan = Plan {
        vocab,
        window: config.window,
        df_strategy: config.df,
        ff_strategy: config.ff,
        ff,
        df,
        oov: config.oov,
    };

    let shards = shard_bounds(corpus);
    let docs = corpus.documents();
    let mut maps: Vec<CellMap> = shards
        .par_iter()
        .enumerate()
        .map(|(index, range)| {
            let mut rng = seed.map(|s| seed::rng(seed::derive(s, seed::SAMPLING_STREAM, index as u64)));
            let mut map = CellMap::default();
            let mut ids = Vec::new();
            for doc in &docs[range.clone()] {
                plan.encode(&doc.tokens, &mut ids);
                plan.scan(&ids, &mut map, rng.as_mut());
            }
            map
        })
        .collect();

    while maps.len() > 1 {
        let mut level = std::mem::take(&mut maps).into_iter();
        let mut pairs = Vec::new();
        while let Some(left) = level.next() {
            pairs.push((left, level.next()));
        }
        // Left is always the lower shard index; `left + right` per cell.
        maps = pairs
            .into_par_iter()
            .map(|(mut left, right)| {
                if let Some(right) = right {
                    merge_into(&mut left, right);
                }
                left
            })
            .collect();
    }

    let mut cells: Vec<(u64, f64)> = maps.pop().unwrap_or_default().into_iter().collect();
    cells.par_sort_unstable_by_key(|&(k, _)| k);
    let n = vocab.len();
    let matrix = CsrMatrix::from_sorted_triples(
        n,
        n,
        cells
            .iter()
            .map(|&(k, v)| ((k >> 32) as usize, (k & 0xffff_ffff) as usize, T::of(v))),
    )
    .expect("cells are sorted and in range");
    let total_mass = cells.iter().map(|&(_, v)| v).sum();
    Ok(CooccurrenceMatrix {
        matrix,
        total_mass,
        seed,
    })
}

fn merge_into(left: &mut CellMap, right: CellMap) {
    for (k, v) in right {
        *left.entry(k).or_insert(0.0) += v;
    }
}

fn shard_bounds(corpus: &Corpus) -> Vec<std::ops::Range<usize>> {
    let mut bounds = Vec::new();
    let mut start = 0;
    let mut tokens = 0;
    for (i, doc) in corpus.documents().iter().enumerate() {
        tokens += doc.len();
        if tokens >= SHARD_TOKENS {
            bounds.push(start..i + 1);
            start = i + 1;
            tokens = 0;
        }
    }
    if start < corpus.len() {
        bounds.push(start..corpus.len());
    }
    bounds
}

struct Plan<'a> {
    vocab: &'a Vocabulary,
    window: usize,
    df_strategy: Strategy,
    ff_strategy: Strategy,
    ff: Vec<f64>,
    /// Indexed by distance; slot 0 unused.
    df: Vec<f64>,
    oov: OovPolicy,
}

impl Plan<'_> {
    fn encode(&self, tokens: &[String], out: &mut Vec<Option<u32>>) {
        out.clear();
        let ids = tokens.iter().map(|t| self.vocab.id(t));
        match self.oov {
            OovPolicy::Remove => out.extend(ids.filter(Option::is_some)),
            OovPolicy::Keep => out.extend(ids),
        }
    }

    /// Splits the factors of one event into keep probability and added mass.
    #[inline]
    fn factors(&self, a: u32, b: u32, d: usize) -> (f64, f64) {
        let mut keep = 1.0;
        let mut mass = 1.0;
        let df = self.df[d];
        match self.df_strategy {
            Strategy::None => {}
            Strategy::Probabilistic => keep *= df,
            Strategy::Weighted => mass *= df,
        }
        match self.ff_strategy {
            Strategy::None => {}
            Strategy::Probabilistic => keep *= self.ff[a as usize] * self.ff[b as usize],
            Strategy::Weighted => mass *= self.ff[a as usize] * self.ff[b as usize],
        }
        (keep, mass)
    }

    fn scan(&self, ids: &[Option<u32>], map: &mut CellMap, rng: Option<&mut rand_chacha::ChaCha8Rng>) {
        let len = ids.len();
        match rng {
            None => {
                // Deterministic: each unordered pair feeds both cells in the
                // same sequence, so (a, b) and (b, a) sum identically.
                for i in 0..len {
                    let Some(a) = ids[i] else { continue };
                    for j in i + 1..len.min(i + self.window + 1) {
                        let Some(b) = ids[j] else { continue };
                        let (_, mass) = self.factors(a, b, j - i);
                        *map.entry(cell(a, b)).or_insert(0.0) += mass;
                        *map.entry(cell(b, a)).or_insert(0.0) += mass;
                    }
                }
            }
            Some(rng) => {
                // One independent decision per directed pair, center by center.
                for i in 0..len {
                    let Some(a) = ids[i] else { continue };
                    let lo = i.saturating_sub(self.window);
                    let hi = len.min(i + self.window + 1);
                    for j in (lo..hi).filter(|&j| j != i) {
                        let Some(b) = ids[j] else { continue };
                        let (keep, mass) = self.factors(a, b, distance(i, j));
                        if keep < 1.0 && rng.gen::<f64>() >= keep {
                            continue;
                        }
                        *map.entry(cell(a, b)).or_insert(0.0) += mass;
                    }
                }
            }
        }
    }
}
