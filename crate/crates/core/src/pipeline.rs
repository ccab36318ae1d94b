//! End-to-end training and multi-model experiments.
//!
//! An experiment directory holds `report.json`, `report.tsv`, `timings.json`
//! and one `model-NN/` subdirectory per model with `embeddings.txt` and
//! `manifest.json`. Rerunning with the same master seed reuses every model
//! whose manifest matches, so a failed run resumes where it stopped.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cooccur::{self, CooccurError, OovPolicy, SamplingConfig, Strategy};
use crate::corpus::{self, Corpus, CorpusError, CorpusFormat};
use crate::embedspace::{EmbeddingSpace, SpaceError};
use crate::evaluate::{self, AnalogyTestSet, EvalError, SimilarityTestSet, StabilityReport};
use crate::factorize::{self, SvdError};
use crate::ppmi::{self, PpmiError};
use crate::seed;
use crate::Scalar;

pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0} does not exist")]
    MissingPath(PathBuf),
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("co-occurrence: {0}")]
    Cooccur(#[from] CooccurError),
    #[error("ppmi: {0}")]
    Ppmi(#[from] PpmiError),
    #[error("factorization: {0}")]
    Svd(#[from] SvdError),
    #[error("embeddings: {0}")]
    Space(#[from] SpaceError),
    #[error("evaluation: {0}")]
    Eval(#[from] EvalError),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] io::Error),
    #[error("model {index} failed: {source}; completed models are kept, rerun with seed={resume_seed} to resume")]
    ModelFailed {
        index: usize,
        resume_seed: u64,
        #[source]
        source: Box<PipelineError>,
    },
}

impl PipelineError {
    /// 1 for usage problems, 2 for bad or missing data, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Svd(SvdError::BadRank { .. }) => 2,
            PipelineError::Ppmi(_) | PipelineError::Svd(_) => 3,
            PipelineError::ModelFailed { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |e| PipelineError::Io(path.to_path_buf(), e)
}

/// Everything that determines one model, given its training corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub sampling: SamplingConfig,
    pub min_count: u64,
    pub alpha: f64,
    pub dim: usize,
    pub eig_exponent: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            sampling: SamplingConfig::default(),
            min_count: 50,
            alpha: 1.0,
            dim: 500,
            eig_exponent: 0.0,
        }
    }
}

/// Written beside every embedding file. Holds no timings, so two runs with
/// the same seeds produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub params: TrainParams,
    pub model_seed: Option<u64>,
    pub subsample_seed: Option<u64>,
    /// Seed actually used for probabilistic down-sampling.
    pub sampling_seed: Option<u64>,
    pub documents: usize,
    pub tokens: usize,
    pub vocabulary_size: usize,
    pub cooccurrence_nnz: usize,
    pub cooccurrence_mass: f64,
    pub ppmi_nnz: usize,
    pub svd_restarts: usize,
}

pub struct TrainedModel<T> {
    pub space: EmbeddingSpace<T>,
    pub manifest: Manifest,
}

impl<T: Scalar> TrainedModel<T> {
    /// Writes `embeddings.txt` and `manifest.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), PipelineError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        self.space.save(&dir.join(EMBEDDINGS_FILE))?;
        write_json(&dir.join(MANIFEST_FILE), &self.manifest)
    }
}

/// Vocabulary, co-occurrence counts, PPMI, truncated SVD, embeddings.
pub fn train<T: Scalar>(corpus: &Corpus, params: &TrainParams) -> Result<TrainedModel<T>, PipelineError> {
    if !(params.alpha > 0.0 && params.alpha <= 1.0) {
        return Err(PipelineError::Config(format!("alpha must lie in (0, 1], got {}", params.alpha)));
    }
    let vocab = corpus::build_vocabulary(corpus, params.min_count)?;
    let counts: cooccur::CooccurrenceMatrix<T> = cooccur::accumulate(corpus, &vocab, &params.sampling)?;
    let assoc = ppmi::to_ppmi(&counts, params.alpha)?;
    let svd = factorize::truncated_svd(&assoc, params.dim)?;
    let vectors = factorize::extract_embeddings(&svd, params.eig_exponent);
    let space = EmbeddingSpace::new(vocab.words().to_vec(), vectors)?;
    let manifest = Manifest {
        params: params.clone(),
        model_seed: None,
        subsample_seed: None,
        sampling_seed: counts.seed(),
        documents: corpus.len(),
        tokens: corpus.total_tokens(),
        vocabulary_size: vocab.len(),
        cooccurrence_nnz: counts.nnz(),
        cooccurrence_mass: counts.total_mass(),
        ppmi_nnz: assoc.nnz(),
        svd_restarts: svd.restarts,
    };
    Ok(TrainedModel { space, manifest })
}

/// Settings of a whole experiment. Every field has a key in the config file
/// format read by [`ExperimentConfig::parse`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub corpus: Vec<PathBuf>,
    pub corpus_format: CorpusFormat,
    pub params: TrainParams,
    pub models: usize,
    pub subsample: bool,
    /// Master seed; absent means one is drawn from the operating system.
    pub seed: Option<u64>,
    pub similarity: Vec<PathBuf>,
    pub analogy: Vec<PathBuf>,
    pub anchors: usize,
    pub jaccard_n: usize,
    pub output: PathBuf,
    pub threads: Option<usize>,
    pub save_embeddings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            corpus: Vec::new(),
            corpus_format: CorpusFormat::Lines,
            params: TrainParams::default(),
            models: 10,
            subsample: false,
            seed: None,
            similarity: Vec::new(),
            analogy: Vec::new(),
            anchors: 1000,
            jaccard_n: 10,
            output: PathBuf::from("experiment"),
            threads: None,
            save_embeddings: true,
        }
    }
}

fn parse_value<V: FromStr>(key: &str, value: &str) -> Result<V, PipelineError>
where
    V::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| PipelineError::Config(format!("{key}: cannot parse `{value}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, PipelineError> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(PipelineError::Config(format!("{key}: expected a boolean, got `{value}`"))),
    }
}

impl ExperimentConfig {
    /// Keys accepted by [`set`](Self::set); they match the CLI flag names.
    pub const KEYS: &'static [&'static str] = &[
        "corpus",
        "corpus-format",
        "window",
        "min-count",
        "threshold-t",
        "df",
        "ff",
        "oov",
        "dim",
        "eig-exponent",
        "alpha",
        "models",
        "subsample",
        "seed",
        "similarity",
        "analogy",
        "anchors",
        "jaccard-n",
        "output",
        "threads",
        "save-embeddings",
    ];

    /// Sets one key. `corpus`, `similarity` and `analogy` append.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let p = &mut self.params;
        match key {
            "corpus" => self.corpus.push(PathBuf::from(value)),
            "corpus-format" => self.corpus_format = parse_value(key, value)?,
            "window" => p.sampling.window = parse_value(key, value)?,
            "min-count" => p.min_count = parse_value(key, value)?,
            "threshold-t" => p.sampling.threshold = parse_value(key, value)?,
            "df" => p.sampling.df = parse_value::<Strategy>(key, value)?,
            "ff" => p.sampling.ff = parse_value::<Strategy>(key, value)?,
            "oov" => p.sampling.oov = parse_value::<OovPolicy>(key, value)?,
            "dim" => p.dim = parse_value(key, value)?,
            "eig-exponent" => p.eig_exponent = parse_value(key, value)?,
            "alpha" => p.alpha = parse_value(key, value)?,
            "models" => self.models = parse_value(key, value)?,
            "subsample" => self.subsample = parse_bool(key, value)?,
            "seed" => self.seed = Some(parse_value(key, value)?),
            "similarity" => self.similarity.push(PathBuf::from(value)),
            "analogy" => self.analogy.push(PathBuf::from(value)),
            "anchors" => self.anchors = parse_value(key, value)?,
            "jaccard-n" => self.jaccard_n = parse_value(key, value)?,
            "output" => self.output = PathBuf::from(value),
            "threads" => self.threads = Some(parse_value(key, value)?),
            "save-embeddings" => self.save_embeddings = parse_bool(key, value)?,
            _ => return Err(PipelineError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// `key = value` lines; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let mut config = ExperimentConfig::default();
        config.apply(text)?;
        Ok(config)
    }

    /// Applies the `key = value` lines of `text` on top of `self`.
    pub fn apply(&mut self, text: &str) -> Result<(), PipelineError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| PipelineError::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        Self::parse(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.corpus.is_empty() {
            return bad("no corpus given".into());
        }
        if self.models == 0 {
            return bad("model count must be at least 1".into());
        }
        if self.params.dim == 0 {
            return bad("dimension must be positive".into());
        }
        if self.anchors == 0 || self.jaccard_n == 0 {
            return bad("anchor count and neighbourhood size must be positive".into());
        }
        if self.params.min_count == 0 {
            return bad("min-count must be positive".into());
        }
        if !(self.params.alpha > 0.0 && self.params.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.params.alpha));
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        self.params
            .sampling
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        for path in self.corpus.iter().chain(&self.similarity).chain(&self.analogy) {
            if !path.exists() {
                return Err(PipelineError::MissingPath(path.clone()));
            }
        }
        if self.subsample && self.models < 2 {
            warn!("subsampling a single model has no stability to measure");
        }
        Ok(())
    }
}

/// Reads and concatenates every corpus path in order.
pub fn load_corpora(paths: &[PathBuf], format: CorpusFormat) -> Result<Corpus, PipelineError> {
    let mut all = Corpus::from_documents([]);
    for path in paths {
        all.extend(corpus::load_corpus(path, format)?);
    }
    if all.is_empty() {
        return Err(CorpusError::EmptyCorpus.into());
    }
    Ok(all)
}

/// One row of the flat report: a metric name with its value and context.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub metric: String,
    pub value: Option<f64>,
    pub std: Option<f64>,
    pub coverage: Option<f64>,
    pub anchors_dropped: Option<usize>,
}

impl Metric {
    fn new(metric: String, value: Option<f64>, coverage: Option<f64>) -> Self {
        Metric {
            metric,
            value,
            std: None,
            coverage,
            anchors_dropped: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRecord {
    pub index: usize,
    pub manifest: Manifest,
    pub similarity: Vec<NamedResult<evaluate::SimilarityScore>>,
    pub analogy: Vec<NamedResult<evaluate::AnalogyScore>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedResult<S> {
    pub name: String,
    pub score: Option<S>,
    /// Set when the test set could not be scored (for example, too few pairs).
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Stability {
    /// Fewer than two models.
    NotApplicable,
    /// Exactly two models: plain j@n, no jackknife.
    Pair(evaluate::JaccardResult),
    Jackknife(StabilityReport),
}

/// Everything in `report.json`. Free of timings so pinned-seed runs are
/// byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub models: Vec<ModelRecord>,
    pub stability: Stability,
    pub metrics: Vec<Metric>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub model_seconds: Vec<f64>,
    pub evaluation_seconds: f64,
    pub total_seconds: f64,
}

pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub timings: Timings,
    pub spaces: Vec<EmbeddingSpace<f64>>,
}

/// Trains `config.models` models, evaluates them and measures their stability.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, PipelineError> {
    config.validate()?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))?
            .install(|| run_inner(config)),
        None => run_inner(config),
    }
}

fn model_dir(config: &ExperimentConfig, index: usize) -> PathBuf {
    config.output.join(format!("model-{index:02}"))
}

/// A previously saved model with exactly these parameters and seed, if any.
fn reusable(dir: &Path, params: &TrainParams, model_seed: u64) -> Option<TrainedModel<f64>> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE)).ok()?).ok()?;
    if &manifest.params != params || manifest.model_seed != Some(model_seed) {
        return None;
    }
    let space = EmbeddingSpace::load(&dir.join(EMBEDDINGS_FILE)).ok()?;
    Some(TrainedModel { space, manifest })
}

fn train_one(
    config: &ExperimentConfig,
    full: &Corpus,
    index: usize,
    model_seed: u64,
) -> Result<TrainedModel<f64>, PipelineError> {
    let dir = model_dir(config, index);
    let mut params = config.params.clone();
    params.sampling.seed = Some(seed::derive(model_seed, seed::SAMPLING_STREAM, 0));
    if config.save_embeddings {
        if let Some(model) = reusable(&dir, &params, model_seed) {
            info!("model {index}: reusing {}", dir.display());
            return Ok(model);
        }
    }
    let subsample_seed = config
        .subsample
        .then(|| seed::derive(model_seed, seed::SUBSAMPLE_STREAM, 0));
    let sample;
    let corpus = match subsample_seed {
        Some(s) => {
            sample = corpus::bootstrap_subsample(full, s);
            &sample
        }
        None => full,
    };
    let mut model = train::<f64>(corpus, &params)?;
    model.manifest.model_seed = Some(model_seed);
    model.manifest.subsample_seed = subsample_seed;
    if config.save_embeddings {
        model.save(&dir)?;
    }
    Ok(model)
}

fn run_inner(config: &ExperimentConfig) -> Result<ExperimentOutcome, PipelineError> {
    let start = Instant::now();
    let similarity: Vec<SimilarityTestSet> = config
        .similarity
        .iter()
        .map(|p| SimilarityTestSet::load(p))
        .collect::<Result<_, _>>()?;
    let analogy: Vec<AnalogyTestSet> = config
        .analogy
        .iter()
        .map(|p| AnalogyTestSet::load(p))
        .collect::<Result<_, _>>()?;
    let full = load_corpora(&config.corpus, config.corpus_format)?;
    let reference_vocab = corpus::build_vocabulary(&full, config.params.min_count)?;
    fs::create_dir_all(&config.output).map_err(io_err(&config.output))?;

    let master_seed = config.seed.unwrap_or_else(seed::entropy);
    info!("master seed {master_seed}");
    let mut trained = Vec::with_capacity(config.models);
    let mut model_seconds = Vec::with_capacity(config.models);
    for index in 0..config.models {
        let t = Instant::now();
        let model_seed = seed::derive(master_seed, seed::MODEL_STREAM, index as u64);
        let model = train_one(config, &full, index, model_seed).map_err(|e| PipelineError::ModelFailed {
            index,
            resume_seed: master_seed,
            source: Box::new(e),
        })?;
        model_seconds.push(t.elapsed().as_secs_f64());
        info!("model {index}: {} words, {:.1}s", model.space.len(), model_seconds[index]);
        trained.push(model);
    }

    let eval_start = Instant::now();
    let mut records = Vec::with_capacity(trained.len());
    for (index, model) in trained.iter().enumerate() {
        let sim = similarity
            .iter()
            .map(|set| named(&set.name, evaluate::eval_similarity(&model.space, set)))
            .collect();
        let ana = analogy
            .iter()
            .map(|set| named(&set.name, evaluate::eval_analogy(&model.space, set)))
            .collect();
        records.push(ModelRecord {
            index,
            manifest: model.manifest.clone(),
            similarity: sim,
            analogy: ana,
        });
    }

    let spaces: Vec<EmbeddingSpace<f64>> = trained.into_iter().map(|m| m.space).collect();
    let refs: Vec<&EmbeddingSpace<f64>> = spaces.iter().collect();
    let stability = if refs.len() < 2 {
        Stability::NotApplicable
    } else {
        let selection = evaluate::select_anchors(&reference_vocab, config.anchors, &refs)?;
        if selection.dropped > 0 {
            warn!("{} frequent words missing from some model were skipped as anchors", selection.dropped);
        }
        if refs.len() == 2 {
            let mut j = evaluate::jaccard_at_n(&refs, &selection.anchors, config.jaccard_n)?;
            j.anchors_dropped += selection.dropped;
            Stability::Pair(j)
        } else {
            let mut r = evaluate::jackknife_stability(&refs, &selection.anchors, config.jaccard_n)?;
            r.anchors_dropped += selection.dropped;
            Stability::Jackknife(r)
        }
    };

    let metrics = flatten(&records, &stability, config.jaccard_n);
    let report = ExperimentReport {
        config: config.clone(),
        master_seed,
        models: records,
        stability,
        metrics,
    };
    let timings = Timings {
        model_seconds,
        evaluation_seconds: eval_start.elapsed().as_secs_f64(),
        total_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&config.output.join("report.json"), &report)?;
    write_tsv(&config.output.join("report.tsv"), &report.metrics)?;
    write_json(&config.output.join("timings.json"), &timings)?;
    Ok(ExperimentOutcome {
        report,
        timings,
        spaces,
    })
}

fn named<S>(name: &str, result: Result<S, EvalError>) -> NamedResult<S> {
    match result {
        Ok(score) => NamedResult {
            name: name.to_string(),
            score: Some(score),
            error: None,
        },
        Err(e) => {
            warn!("{name}: {e}");
            NamedResult {
                name: name.to_string(),
                score: None,
                error: Some(e.to_string()),
            }
        }
    }
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() > 1)
        .then(|| (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), std)
}

/// Per-model rows, then one mean row per test set, then stability.
fn flatten(records: &[ModelRecord], stability: &Stability, n: usize) -> Vec<Metric> {
    let mut rows = Vec::new();
    for r in records {
        for s in &r.similarity {
            rows.push(Metric::new(
                format!("model-{:02}/similarity/{}/rho", r.index, s.name),
                s.score.as_ref().map(|x| x.rho),
                s.score.as_ref().map(|x| x.coverage),
            ));
        }
        for a in &r.analogy {
            rows.push(Metric::new(
                format!("model-{:02}/analogy/{}/accuracy", r.index, a.name),
                a.score.as_ref().map(|x| x.accuracy),
                a.score.as_ref().map(|x| x.coverage),
            ));
        }
    }
    let Some(first) = records.first() else {
        return rows;
    };
    for (k, s) in first.similarity.iter().enumerate() {
        let scores: Vec<_> = records.iter().filter_map(|r| r.similarity[k].score.as_ref()).collect();
        let (value, std) = mean_std(&scores.iter().map(|x| x.rho).collect::<Vec<_>>());
        let (coverage, _) = mean_std(&scores.iter().map(|x| x.coverage).collect::<Vec<_>>());
        rows.push(Metric {
            std,
            ..Metric::new(format!("similarity/{}/rho", s.name), value, coverage)
        });
    }
    for (k, a) in first.analogy.iter().enumerate() {
        let scores: Vec<_> = records.iter().filter_map(|r| r.analogy[k].score.as_ref()).collect();
        let (value, std) = mean_std(&scores.iter().map(|x| x.accuracy).collect::<Vec<_>>());
        let (coverage, _) = mean_std(&scores.iter().map(|x| x.coverage).collect::<Vec<_>>());
        rows.push(Metric {
            std,
            ..Metric::new(format!("analogy/{}/accuracy", a.name), value, coverage)
        });
    }
    let name = format!("stability/j@{n}");
    rows.push(match stability {
        Stability::NotApplicable => Metric::new(name, None, None),
        Stability::Pair(j) => Metric {
            anchors_dropped: Some(j.anchors_dropped),
            ..Metric::new(name, Some(j.value), None)
        },
        Stability::Jackknife(r) => Metric {
            std: Some(r.std),
            anchors_dropped: Some(r.anchors_dropped),
            ..Metric::new(name, Some(r.mean), None)
        },
    });
    rows
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| PipelineError::Io(path.to_path_buf(), io::Error::other(e)))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn cell<V: ToString>(v: &Option<V>) -> String {
    v.as_ref().map_or_else(|| "NA".to_string(), V::to_string)
}

/// Tab-separated `metric value std coverage anchors_dropped`, `NA` for gaps.
pub fn write_metrics_tsv<W: Write>(mut out: W, metrics: &[Metric]) -> io::Result<()> {
    writeln!(out, "metric\tvalue\tstd\tcoverage\tanchors_dropped")?;
    for m in metrics {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            m.metric,
            cell(&m.value),
            cell(&m.std),
            cell(&m.coverage),
            cell(&m.anchors_dropped)
        )?;
    }
    out.flush()
}

fn write_tsv(path: &Path, metrics: &[Metric]) -> Result<(), PipelineError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_metrics_tsv(BufWriter::new(file), metrics).map_err(io_err(path))
}
