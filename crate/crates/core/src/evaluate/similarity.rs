use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::Serialize;

use super::EvalError;
use crate::corpus::normalize;
use crate::embedspace::EmbeddingSpace;
use crate::Scalar;

/// Word pairs with human similarity judgements.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTestSet {
    pub name: String,
    pub entries: Vec<(String, String, f64)>,
    /// Repeated unordered pairs skipped while parsing (first one wins).
    pub duplicates: usize,
}

impl SimilarityTestSet {
    /// `word1 word2 score` per line, whitespace separated. `#` comments and a
    /// header line (non-numeric score) are skipped; words go through the
    /// corpus normalizer.
    pub fn parse<R: Read>(name: &str, input: R) -> Result<Self, EvalError> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        let mut duplicates = 0;
        let mut header_allowed = true;
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let line = line.map_err(|e| EvalError::Io(name.to_string(), e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let parse_err = |message: &str| EvalError::Parse {
                source_name: name.to_string(),
                line: i + 1,
                message: message.to_string(),
            };
            let score = fields.get(2).and_then(|s| s.parse::<f64>().ok());
            let (Some(score), 3) = (score, fields.len()) else {
                if header_allowed {
                    header_allowed = false;
                    continue;
                }
                return Err(parse_err("expected `word1 word2 score`"));
            };
            header_allowed = false;
            if !score.is_finite() {
                return Err(parse_err("score must be finite"));
            }
            let (Some(w1), Some(w2)) = (single_token(fields[0]), single_token(fields[1])) else {
                continue;
            };
            let key = if w1 <= w2 {
                (w1.clone(), w2.clone())
            } else {
                (w2.clone(), w1.clone())
            };
            if !seen.insert(key) {
                duplicates += 1;
                continue;
            }
            entries.push((w1, w2, score));
        }
        Ok(SimilarityTestSet {
            name: name.to_string(),
            entries,
            duplicates,
        })
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let name = display_name(path);
        let file = fs::File::open(path).map_err(|e| EvalError::Io(path.display().to_string(), e))?;
        Self::parse(&name, file)
    }
}

pub(crate) fn display_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub(crate) fn single_token(raw: &str) -> Option<String> {
    let tokens = normalize(raw);
    (!tokens.is_empty()).then(|| tokens.concat())
}

/// Ranks starting at 1; tied values share the mean of their positions.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end share their average.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of the fractional ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(EvalError::TooFewObservations(x.len()));
    }
    let rx = fractional_ranks(x);
    let ry = fractional_ranks(y);
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityScore {
    pub rho: f64,
    pub coverage: f64,
    pub used: usize,
    pub total: usize,
}

/// Spearman correlation between model cosines and human scores over the pairs
/// whose words are both in the vocabulary.
pub fn eval_similarity<T: Scalar>(
    space: &EmbeddingSpace<T>,
    testset: &SimilarityTestSet,
) -> Result<SimilarityScore, EvalError> {
    let total = testset.entries.len();
    if total == 0 {
        return Err(EvalError::EmptyTestSet);
    }
    let (model, human): (Vec<f64>, Vec<f64>) = testset
        .entries
        .iter()
        .filter_map(|(a, b, score)| space.cosine(a, b).ok().map(|c| (c, *score)))
        .unzip();
    let used = model.len();
    let coverage = used as f64 / total as f64;
    if used < 2 {
        return Err(EvalError::InsufficientPairs {
            used,
            total,
            coverage,
        });
    }
    let rho = spearman(&model, &human)?;
    Ok(SimilarityScore {
        rho,
        coverage,
        used,
        total,
    })
}
