//! Word embeddings from the truncated SVD of a positive pointwise mutual
//! information (PPMI) matrix, with three ways of down-sampling co-occurrences:
//!
//! - **none**: every word-context pair inside the window adds one count,
//! - **probabilistic**: each pair is kept with probability `df * ff`,
//! - **weighted**: each pair adds the fractional count `df * ff`.
//!
//! The weighted variant is a deterministic function of the corpus, so models
//! trained repeatedly on the same data agree exactly. The crate also carries the
//! experimental harness around it: text-level bootstrap subsampling, j@n
//! stability with a leave-one-model-out jackknife, Spearman word-similarity
//! evaluation and 3CosMul analogy evaluation.
//!
//! Numeric containers are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the common `f64` instantiations.
//!
//! ```
//! use wppmi::{corpus, cooccur, ppmi, factorize};
//! use wppmi::cooccur::{SamplingConfig, Strategy};
//!
//! let corpus = corpus::Corpus::from_texts(["a b c a b c a b d", "c d a b"]);
//! let vocab = corpus::build_vocabulary(&corpus, 1).unwrap();
//! let config = SamplingConfig::new(2, 1e-4, Strategy::Weighted, Strategy::Weighted);
//! let counts: wppmi::Cooccurrence = cooccur::accumulate(&corpus, &vocab, &config).unwrap();
//! let assoc = ppmi::to_ppmi(&counts, 1.0).unwrap();
//! let svd = factorize::truncated_svd(&assoc, 2).unwrap();
//! let vectors = factorize::extract_embeddings(&svd, 0.0);
//! assert_eq!(vectors.rows(), vocab.len());
//! ```

pub mod cooccur;
pub mod corpus;
pub mod embedspace;
pub mod evaluate;
pub mod factorize;
pub mod pipeline;
pub mod ppmi;
pub mod scalar;
pub mod seed;
pub mod sparse;

pub use scalar::Scalar;

pub type Cooccurrence = cooccur::CooccurrenceMatrix<f64>;
pub type Cooccurrence32 = cooccur::CooccurrenceMatrix<f32>;
pub type Ppmi = ppmi::PpmiMatrix<f64>;
pub type Ppmi32 = ppmi::PpmiMatrix<f32>;
pub type Svd = factorize::TruncatedSvd<f64>;
pub type Svd32 = factorize::TruncatedSvd<f32>;
pub type Embeddings = factorize::EmbeddingMatrix<f64>;
pub type Embeddings32 = factorize::EmbeddingMatrix<f32>;
pub type Space = embedspace::EmbeddingSpace<f64>;
pub type Space32 = embedspace::EmbeddingSpace<f32>;
