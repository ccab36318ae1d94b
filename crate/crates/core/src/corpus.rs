//! Text ingestion, normalization, vocabularies and text-level bootstrap
//! subsampling.

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no word reaches the minimum count of {min_count}")]
    EmptyVocabulary { min_count: u64 },
    #[error("minimum count must be positive")]
    ZeroMinCount,
    #[error("corpus contains no documents")]
    EmptyCorpus,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl CorpusError {
    fn io(path: &Path, source: io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Lowercases, splits on whitespace and strips punctuation characters from
/// every token. Tokens left empty are dropped.
pub fn normalize(raw: &str) -> Vec<String> {
    raw.split_whitespace()
        .filter_map(|piece| {
            let token: String = piece
                .chars()
                .filter(|c| !is_punctuation(*c))
                .flat_map(char::to_lowercase)
                .collect();
            (!token.is_empty()).then_some(token)
        })
        .collect()
}

/// Unicode general category P* (connector, dash, open, close, initial, final,
/// other punctuation).
///
/// The standard library only classifies ASCII punctuation, which misses
/// typographic quotes and dashes, so the non-ASCII ranges are listed here.
pub fn is_punctuation(c: char) -> bool {
    if c.is_ascii() {
        // ASCII symbols such as `$`, `+`, `<` are category S*, not P*.
        return matches!(
            c,
            '!' | '"' | '#' | '%' | '&' | '\'' | '(' | ')' | '*' | ',' | '-' | '.' | '/'
                | ':' | ';' | '?' | '@' | '[' | '\\' | ']' | '_' | '{' | '}'
        );
    }
    let cp = c as u32;
    PUNCTUATION_RANGES
        .binary_search_by(|&(lo, hi)| {
            if hi < cp {
                std::cmp::Ordering::Less
            } else if lo > cp {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        })
        .is_ok()
}

// Non-ASCII code point ranges of category P* (Unicode 13.0), sorted, inclusive.
const PUNCTUATION_RANGES: &[(u32, u32)] = &[
    (0x00A1, 0x00A1),
    (0x00A7, 0x00A7),
    (0x00AB, 0x00AB),
    (0x00B6, 0x00B7),
    (0x00BB, 0x00BB),
    (0x00BF, 0x00BF),
    (0x037E, 0x037E),
    (0x0387, 0x0387),
    (0x055A, 0x055F),
    (0x0589, 0x058A),
    (0x05BE, 0x05BE),
    (0x05C0, 0x05C0),
    (0x05C3, 0x05C3),
    (0x05C6, 0x05C6),
    (0x05F3, 0x05F4),
    (0x0609, 0x060A),
    (0x060C, 0x060D),
    (0x061B, 0x061B),
    (0x061E, 0x061F),
    (0x066A, 0x066D),
    (0x06D4, 0x06D4),
    (0x0700, 0x070D),
    (0x07F7, 0x07F9),
    (0x0830, 0x083E),
    (0x085E, 0x085E),
    (0x0964, 0x0965),
    (0x0970, 0x0970),
    (0x09FD, 0x09FD),
    (0x0A76, 0x0A76),
    (0x0AF0, 0x0AF0),
    (0x0C77, 0x0C77),
    (0x0C84, 0x0C84),
    (0x0DF4, 0x0DF4),
    (0x0E4F, 0x0E4F),
    (0x0E5A, 0x0E5B),
    (0x0F04, 0x0F12),
    (0x0F14, 0x0F14),
    (0x0F3A, 0x0F3D),
    (0x0F85, 0x0F85),
    (0x0FD0, 0x0FD4),
    (0x0FD9, 0x0FDA),
    (0x104A, 0x104F),
    (0x10FB, 0x10FB),
    (0x1360, 0x1368),
    (0x1400, 0x1400),
    (0x166E, 0x166E),
    (0x169B, 0x169C),
    (0x16EB, 0x16ED),
    (0x1735, 0x1736),
    (0x17D4, 0x17D6),
    (0x17D8, 0x17DA),
    (0x1800, 0x180A),
    (0x1944, 0x1945),
    (0x1A1E, 0x1A1F),
    (0x1AA0, 0x1AA6),
    (0x1AA8, 0x1AAD),
    (0x1B5A, 0x1B60),
    (0x1BFC, 0x1BFF),
    (0x1C3B, 0x1C3F),
    (0x1C7E, 0x1C7F),
    (0x1CC0, 0x1CC7),
    (0x1CD3, 0x1CD3),
    (0x2010, 0x2027),
    (0x2030, 0x2043),
    (0x2045, 0x2051),
    (0x2053, 0x205E),
    (0x207D, 0x207E),
    (0x208D, 0x208E),
    (0x2308, 0x230B),
    (0x2329, 0x232A),
    (0x2768, 0x2775),
    (0x27C5, 0x27C6),
    (0x27E6, 0x27EF),
    (0x2983, 0x2998),
    (0x29D8, 0x29DB),
    (0x29FC, 0x29FD),
    (0x2CF9, 0x2CFC),
    (0x2CFE, 0x2CFF),
    (0x2D70, 0x2D70),
    (0x2E00, 0x2E2E),
    (0x2E30, 0x2E4F),
    (0x2E52, 0x2E52),
    (0x3001, 0x3003),
    (0x3008, 0x3011),
    (0x3014, 0x301F),
    (0x3030, 0x3030),
    (0x303D, 0x303D),
    (0x30A0, 0x30A0),
    (0x30FB, 0x30FB),
    (0xA4FE, 0xA4FF),
    (0xA60D, 0xA60F),
    (0xA673, 0xA673),
    (0xA67E, 0xA67E),
    (0xA6F2, 0xA6F7),
    (0xA874, 0xA877),
    (0xA8CE, 0xA8CF),
    (0xA8F8, 0xA8FA),
    (0xA8FC, 0xA8FC),
    (0xA92E, 0xA92F),
    (0xA95F, 0xA95F),
    (0xA9C1, 0xA9CD),
    (0xA9DE, 0xA9DF),
    (0xAA5C, 0xAA5F),
    (0xAADE, 0xAADF),
    (0xAAF0, 0xAAF1),
    (0xABEB, 0xABEB),
    (0xFD3E, 0xFD3F),
    (0xFE10, 0xFE19),
    (0xFE30, 0xFE52),
    (0xFE54, 0xFE61),
    (0xFE63, 0xFE63),
    (0xFE68, 0xFE68),
    (0xFE6A, 0xFE6B),
    (0xFF01, 0xFF03),
    (0xFF05, 0xFF0A),
    (0xFF0C, 0xFF0F),
    (0xFF1A, 0xFF1B),
    (0xFF1F, 0xFF20),
    (0xFF3B, 0xFF3D),
    (0xFF3F, 0xFF3F),
    (0xFF5B, 0xFF5B),
    (0xFF5D, 0xFF5D),
    (0xFF5F, 0xFF65),
    (0x10100, 0x10102),
    (0x1039F, 0x1039F),
    (0x103D0, 0x103D0),
    (0x1056F, 0x1056F),
    (0x10857, 0x10857),
    (0x1091F, 0x1091F),
    (0x1093F, 0x1093F),
    (0x10A50, 0x10A58),
    (0x10A7F, 0x10A7F),
    (0x10AF0, 0x10AF6),
    (0x10B39, 0x10B3F),
    (0x10B99, 0x10B9C),
    (0x10EAD, 0x10EAD),
    (0x10F55, 0x10F59),
    (0x11047, 0x1104D),
    (0x110BB, 0x110BC),
    (0x110BE, 0x110C1),
    (0x11140, 0x11143),
    (0x11174, 0x11175),
    (0x111C5, 0x111C8),
    (0x111CD, 0x111CD),
    (0x111DB, 0x111DB),
    (0x111DD, 0x111DF),
    (0x11238, 0x1123D),
    (0x112A9, 0x112A9),
    (0x1144B, 0x1144F),
    (0x1145A, 0x1145B),
    (0x1145D, 0x1145D),
    (0x114C6, 0x114C6),
    (0x115C1, 0x115D7),
    (0x11641, 0x11643),
    (0x11660, 0x1166C),
    (0x1173C, 0x1173E),
    (0x1183B, 0x1183B),
    (0x11944, 0x11946),
    (0x119E2, 0x119E2),
    (0x11A3F, 0x11A46),
    (0x11A9A, 0x11A9C),
    (0x11A9E, 0x11AA2),
    (0x11C41, 0x11C45),
    (0x11C70, 0x11C71),
    (0x11EF7, 0x11EF8),
    (0x11FFF, 0x11FFF),
    (0x12470, 0x12474),
    (0x16A6E, 0x16A6F),
    (0x16AF5, 0x16AF5),
    (0x16B37, 0x16B3B),
    (0x16B44, 0x16B44),
    (0x16E97, 0x16E9A),
    (0x16FE2, 0x16FE2),
    (0x1BC9F, 0x1BC9F),
    (0x1DA87, 0x1DA8B),
    (0x1E95E, 0x1E95F),
];

/// One text of a corpus: the unit of bootstrap resampling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, raw: &str) -> Self {
        Document {
            id: id.into(),
            tokens: normalize(raw),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// On-disk layout of a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// One document per line of a single file.
    Lines,
    /// One document per file in a directory, taken in file-name order.
    Dir,
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lines" => Ok(CorpusFormat::Lines),
            "dir" => Ok(CorpusFormat::Dir),
            other => Err(format!("unknown corpus format `{other}` (expected lines|dir)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    total_tokens: usize,
}

impl Corpus {
    /// Documents that normalize to nothing are dropped.
    pub fn from_documents(documents: impl IntoIterator<Item = Document>) -> Self {
        let documents: Vec<Document> = documents.into_iter().filter(|d| !d.is_empty()).collect();
        let total_tokens = documents.iter().map(Document::len).sum();
        Corpus {
            documents,
            total_tokens,
        }
    }

    /// Normalizes each raw text into a document, ids being the text's position.
    pub fn from_texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let raw: Vec<String> = texts.into_iter().map(|t| t.as_ref().to_string()).collect();
        let documents: Vec<Document> = raw
            .par_iter()
            .enumerate()
            .map(|(i, t)| Document::new(i.to_string(), t))
            .collect();
        Corpus::from_documents(documents)
    }

    pub fn from_lines<R: Read>(reader: R) -> io::Result<Self> {
        let lines = BufReader::new(reader).lines().collect::<io::Result<Vec<String>>>()?;
        let documents: Vec<Document> = lines
            .par_iter()
            .enumerate()
            .map(|(i, line)| Document::new(format!("line{}", i + 1), line))
            .collect();
        Ok(Corpus::from_documents(documents))
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn total_tokens(&self) -> usize {
        self.total_tokens
    }

    /// Appends the documents of `other`.
    pub fn extend(&mut self, other: Corpus) {
        self.total_tokens += other.total_tokens;
        self.documents.extend(other.documents);
    }

    /// Writes the normalized corpus back out, one document per line.
    pub fn write_lines<W: Write>(&self, mut out: W) -> io::Result<()> {
        for doc in &self.documents {
            writeln!(out, "{}", doc.tokens.join(" "))?;
        }
        out.flush()
    }
}

/// Reads a corpus in the declared on-disk format.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    match format {
        CorpusFormat::Lines => {
            let file = fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
            Corpus::from_lines(file).map_err(|e| CorpusError::io(path, e))
        }
        CorpusFormat::Dir => {
            let mut files: Vec<PathBuf> = fs::read_dir(path)
                .map_err(|e| CorpusError::io(path, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            files.sort();
            let documents = files
                .par_iter()
                .map(|file| {
                    let text = fs::read_to_string(file).map_err(|e| CorpusError::io(file, e))?;
                    let id = file
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    Ok(Document::new(id, &text))
                })
                .collect::<Result<Vec<_>, CorpusError>>()?;
            Ok(Corpus::from_documents(documents))
        }
    }
}

/// Word list in descending frequency order (ties lexicographic), with ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    ids: HashMap<String, u32>,
    total: u64,
}

impl Vocabulary {
    /// Keeps words with at least `min_count` occurrences.
    pub fn from_counts<I>(counts: I, min_count: u64) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (String, u64)>,
    {
        if min_count == 0 {
            return Err(CorpusError::ZeroMinCount);
        }
        let mut entries: Vec<(String, u64)> =
            counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
        if entries.is_empty() {
            return Err(CorpusError::EmptyVocabulary { min_count });
        }
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let total = entries.iter().map(|(_, c)| c).sum();
        let ids = entries
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i as u32))
            .collect();
        let (words, counts) = entries.into_iter().unzip();
        Ok(Vocabulary {
            words,
            counts,
            ids,
            total,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.ids.contains_key(word)
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    /// `counts[w] / total`.
    pub fn relative_frequency(&self, id: u32) -> f64 {
        self.counts[id as usize] as f64 / self.total as f64
    }

    /// `word<TAB>count` lines in vocabulary order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (w, c) in self.words.iter().zip(&self.counts) {
            writeln!(out, "{w}\t{c}")?;
        }
        out.flush()
    }

    pub fn read_tsv(path: &Path) -> Result<Self, CorpusError> {
        let file = fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
        let mut counts = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| CorpusError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| CorpusError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected `word<TAB>count`".into()))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad count: {e}")))?;
            counts.push((word.to_string(), count));
        }
        Vocabulary::from_counts(counts, 1)
    }
}

/// Counts every token of the corpus. Per-shard maps are merged by integer
/// addition, so the result does not depend on scheduling.
pub fn count_words(corpus: &Corpus) -> HashMap<String, u64> {
    corpus
        .documents()
        .par_chunks(64)
        .map(|docs| {
            let mut local: HashMap<String, u64> = HashMap::new();
            for token in docs.iter().flat_map(|d| &d.tokens) {
                match local.get_mut(token) {
                    Some(c) => *c += 1,
                    None => {
                        local.insert(token.clone(), 1);
                    }
                }
            }
            local
        })
        .reduce(HashMap::new, |mut a, b| {
            for (w, c) in b {
                *a.entry(w).or_insert(0) += c;
            }
            a
        })
}

pub fn build_vocabulary(corpus: &Corpus, min_count: u64) -> Result<Vocabulary, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Vocabulary::from_counts(count_words(corpus), min_count)
}

/// Draws `n` documents with replacement from an `n`-document corpus and keeps
/// one copy of each document drawn, in original corpus order.
pub fn bootstrap_subsample(corpus: &Corpus, seed: u64) -> Corpus {
    let n = corpus.len();
    let mut drawn = vec![false; n];
    let mut rng = seed::rng(seed);
    for _ in 0..n {
        // u64 range keeps the draw sequence independent of pointer width.
        let i = rng.gen_range(0..n as u64) as usize;
        drawn[i] = true;
    }
    Corpus::from_documents(
        corpus
            .documents()
            .iter()
            .zip(&drawn)
            .filter(|(_, &keep)| keep)
            .map(|(d, _)| d.clone()),
    )
}
