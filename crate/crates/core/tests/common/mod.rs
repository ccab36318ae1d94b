#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use rand::Rng;
use rand_distr::{Distribution, WeightedIndex};
use wppmi::corpus::{Corpus, Document};
use wppmi::seed;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Shape of a synthetic topic-model corpus.
pub struct Synthetic {
    pub documents: usize,
    pub doc_len: usize,
    pub function_words: usize,
    pub topics: usize,
    pub topic_words: usize,
    /// Share of tokens drawn from the function-word list.
    pub function_share: f64,
    pub seed: u64,
}

impl Default for Synthetic {
    /// About 1.5M tokens.
    fn default() -> Self {
        Synthetic {
            documents: 3000,
            doc_len: 500,
            function_words: 100,
            topics: 60,
            topic_words: 80,
            function_share: 0.45,
            seed: 20240917,
        }
    }
}

fn zipf(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| 1.0 / r as f64)).unwrap()
}

impl Synthetic {
    /// Each document mixes function words (Zipfian over the whole corpus) with
    /// content words from a main topic and, less often, a second topic.
    pub fn generate(&self) -> Corpus {
        let function = zipf(self.function_words);
        let content = zipf(self.topic_words);
        let docs = (0..self.documents).map(|d| {
            let mut rng = seed::rng(seed::derive(self.seed, 0, d as u64));
            let main = rng.gen_range(0..self.topics);
            let side = rng.gen_range(0..self.topics);
            let tokens = (0..self.doc_len)
                .map(|_| {
                    if rng.gen_bool(self.function_share) {
                        format!("fn{}", function.sample(&mut rng))
                    } else {
                        let topic = if rng.gen_bool(0.8) { main } else { side };
                        format!("t{topic}w{}", content.sample(&mut rng))
                    }
                })
                .collect::<Vec<_>>()
                .join(" ");
            Document::new(format!("doc{d}"), &tokens)
        });
        Corpus::from_documents(docs)
    }
}

/// A small corpus of `documents` single-token documents, used where only the
/// document count matters.
pub fn numbered(documents: usize) -> Corpus {
    Corpus::from_documents((0..documents).map(|i| Document::new(i.to_string(), &format!("w{i}"))))
}
