//! `wppmi`: train SVD-of-PPMI embeddings, subsample corpora, and measure
//! accuracy and stability.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use wppmi::corpus::{self, Vocabulary};
use wppmi::embedspace::EmbeddingSpace;
use wppmi::evaluate::{self, AnalogyTestSet, SimilarityTestSet};
use wppmi::pipeline::{self, ExperimentConfig, Metric, PipelineError};
use wppmi::seed;

#[derive(Parser)]
#[command(name = "wppmi", version, about = "SVD of (weighted) PPMI word embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write embeddings.txt and manifest.json.
    Train(Train),
    /// Write a bootstrap subsample of a corpus, one document per line.
    Subsample(Subsample),
    /// Spearman correlation on word-similarity test sets.
    EvalSim(EvalSim),
    /// 3CosMul accuracy on analogy test sets.
    EvalAnalogy(EvalAnalogy),
    /// Jackknife j@n stability of saved models.
    Stability(StabilityCmd),
    /// Train several models, evaluate them and measure their stability.
    Experiment(Experiment),
}

/// Flags shared by training commands; each overrides the same key of the
/// config file.
#[derive(Args, Default)]
struct Shared {
    /// Key-value config file (`key = value` per line).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus file or directory; repeat to concatenate.
    #[arg(long)]
    corpus: Vec<PathBuf>,
    /// `lines` (one document per line) or `dir` (one document per file).
    #[arg(long)]
    corpus_format: Option<String>,
    /// Context window size [default: 5].
    #[arg(long)]
    window: Option<String>,
    /// Minimum word count [default: 50].
    #[arg(long)]
    min_count: Option<String>,
    /// Frequency threshold t [default: 1e-4].
    #[arg(long)]
    threshold_t: Option<String>,
    /// Distance down-sampling: none|prob|weight [default: weight].
    #[arg(long)]
    df: Option<String>,
    /// Frequency down-sampling: none|prob|weight [default: weight].
    #[arg(long)]
    ff: Option<String>,
    /// Out-of-vocabulary tokens: remove|keep [default: remove].
    #[arg(long)]
    oov: Option<String>,
    /// Embedding dimension [default: 500].
    #[arg(long)]
    dim: Option<String>,
    /// Exponent applied to singular values [default: 0].
    #[arg(long)]
    eig_exponent: Option<String>,
    /// Context smoothing exponent in (0, 1] [default: 1.0].
    #[arg(long)]
    alpha: Option<String>,
    /// Seed; absent means one is drawn from the operating system.
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    threads: Option<String>,
}

impl Shared {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out: Vec<(&'static str, String)> = self
            .corpus
            .iter()
            .map(|p| ("corpus", p.display().to_string()))
            .collect();
        let scalars = [
            ("corpus-format", &self.corpus_format),
            ("window", &self.window),
            ("min-count", &self.min_count),
            ("threshold-t", &self.threshold_t),
            ("df", &self.df),
            ("ff", &self.ff),
            ("oov", &self.oov),
            ("dim", &self.dim),
            ("eig-exponent", &self.eig_exponent),
            ("alpha", &self.alpha),
            ("seed", &self.seed),
            ("threads", &self.threads),
        ];
        out.extend(scalars.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k, v))));
        out
    }

    /// Defaults, then the config file, then flags.
    fn resolve(&self, extra: Vec<(&'static str, String)>) -> Result<ExperimentConfig, PipelineError> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let flags = self.overrides();
        // Corpus paths given on the command line replace those of the file.
        if flags.iter().any(|(k, _)| *k == "corpus") {
            config.corpus.clear();
        }
        for (key, value) in flags.into_iter().chain(extra) {
            config.set(key, &value)?;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct Train {
    #[command(flatten)]
    shared: Shared,
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct Subsample {
    #[arg(long, required = true)]
    corpus: Vec<PathBuf>,
    #[arg(long, default_value = "lines")]
    corpus_format: String,
    /// Seed; absent means one is drawn from the operating system.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file, one document per line.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvalOutput {
    /// Print JSON instead of TSV.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvalSim {
    /// Embedding file in word2vec text format (optionally .gz).
    #[arg(long)]
    embeddings: PathBuf,
    /// Test set(s): `word1 word2 score` per line.
    #[arg(long, required = true)]
    testset: Vec<PathBuf>,
    #[command(flatten)]
    out: EvalOutput,
}

#[derive(Args)]
struct EvalAnalogy {
    #[arg(long)]
    embeddings: PathBuf,
    /// Test set(s): four words per line, `:` section headers.
    #[arg(long, required = true)]
    testset: Vec<PathBuf>,
    #[command(flatten)]
    out: EvalOutput,
}

#[derive(Args)]
struct StabilityCmd {
    /// Embedding files of the models to compare (at least two).
    #[arg(long, required = true, num_args = 1..)]
    embeddings: Vec<PathBuf>,
    /// Vocabulary TSV (`word<TAB>count`) that ranks anchor candidates; by
    /// default the first model's word order is used.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Number of anchor words.
    #[arg(long, default_value_t = 1000)]
    anchors: usize,
    /// Neighbourhood size n of j@n.
    #[arg(long, default_value_t = 10)]
    jaccard_n: usize,
    #[command(flatten)]
    out: EvalOutput,
}

#[derive(Args)]
struct Experiment {
    #[command(flatten)]
    shared: Shared,
    /// Number of models [default: 10].
    #[arg(long)]
    models: Option<String>,
    /// Train each model on its own bootstrap subsample of the corpus.
    #[arg(long)]
    subsample: bool,
    /// Similarity test set; repeatable.
    #[arg(long)]
    similarity: Vec<PathBuf>,
    /// Analogy test set; repeatable.
    #[arg(long)]
    analogy: Vec<PathBuf>,
    /// Number of anchor words [default: 1000].
    #[arg(long)]
    anchors: Option<String>,
    /// Neighbourhood size n of j@n [default: 10].
    #[arg(long)]
    jaccard_n: Option<String>,
    /// Output directory [default: experiment].
    #[arg(long)]
    output: Option<PathBuf>,
    /// Skip writing per-model embedding files.
    #[arg(long)]
    no_embeddings: bool,
}

fn print_metrics(metrics: &[Metric], json: bool) -> Result<(), PipelineError> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = if json {
        serde_json::to_writer_pretty(&mut out, metrics)
            .map_err(io::Error::other)
            .and_then(|_| writeln!(out))
    } else {
        pipeline::write_metrics_tsv(&mut out, metrics)
    };
    result.map_err(|e| PipelineError::Io(PathBuf::from("<stdout>"), e))
}

fn metric(name: String, value: f64, coverage: Option<f64>) -> Metric {
    Metric {
        metric: name,
        value: Some(value),
        std: None,
        coverage,
        anchors_dropped: None,
    }
}

fn with_threads<R>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, PipelineError>
where
    R: Send,
{
    match threads {
        Some(n) => Ok(rayon_pool(n)?.install(f)),
        None => Ok(f()),
    }
}

fn rayon_pool(n: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))
}

fn train(cmd: Train) -> Result<(), PipelineError> {
    let config = cmd.shared.resolve(Vec::new())?;
    if config.corpus.is_empty() {
        return Err(PipelineError::Config("no corpus given".into()));
    }
    let mut params = config.params.clone();
    params.sampling.seed = config.seed;
    let corpus = pipeline::load_corpora(&config.corpus, config.corpus_format)?;
    let model = with_threads(config.threads, || pipeline::train::<f64>(&corpus, &params))??;
    model.save(&cmd.output)?;
    if let Some(s) = model.manifest.sampling_seed {
        info!("sampling seed {s}");
    }
    info!("{} words, dimension {}", model.space.len(), model.space.dim());
    Ok(())
}

fn subsample(cmd: Subsample) -> Result<(), PipelineError> {
    let format = cmd
        .corpus_format
        .parse()
        .map_err(|e: String| PipelineError::Config(e))?;
    let corpus = pipeline::load_corpora(&cmd.corpus, format)?;
    let s = cmd.seed.unwrap_or_else(seed::entropy);
    let sample = corpus::bootstrap_subsample(&corpus, s);
    let file = fs::File::create(&cmd.output).map_err(|e| PipelineError::Io(cmd.output.clone(), e))?;
    sample
        .write_lines(io::BufWriter::new(file))
        .map_err(|e| PipelineError::Io(cmd.output.clone(), e))?;
    eprintln!("seed {s}: kept {} of {} documents", sample.len(), corpus.len());
    Ok(())
}

fn load_space(path: &Path) -> Result<EmbeddingSpace<f64>, PipelineError> {
    Ok(EmbeddingSpace::load(path)?)
}

fn eval_sim(cmd: EvalSim) -> Result<(), PipelineError> {
    let space = load_space(&cmd.embeddings)?;
    let mut rows = Vec::new();
    for path in &cmd.testset {
        let set = SimilarityTestSet::load(path)?;
        let score = evaluate::eval_similarity(&space, &set)?;
        rows.push(metric(format!("similarity/{}/rho", set.name), score.rho, Some(score.coverage)));
    }
    print_metrics(&rows, cmd.out.json)
}

fn eval_analogy(cmd: EvalAnalogy) -> Result<(), PipelineError> {
    let space = load_space(&cmd.embeddings)?;
    let mut rows = Vec::new();
    for path in &cmd.testset {
        let set = AnalogyTestSet::load(path)?;
        let score = evaluate::eval_analogy(&space, &set)?;
        rows.push(metric(format!("analogy/{}/accuracy", set.name), score.accuracy, Some(score.coverage)));
        for s in &score.sections {
            if let Some(acc) = s.accuracy {
                let coverage = s.answerable as f64 / s.total as f64;
                rows.push(metric(format!("analogy/{}/{}/accuracy", set.name, s.name), acc, Some(coverage)));
            }
        }
    }
    print_metrics(&rows, cmd.out.json)
}

fn stability(cmd: StabilityCmd) -> Result<(), PipelineError> {
    if cmd.embeddings.len() < 2 {
        return Err(PipelineError::Config("stability needs at least two models".into()));
    }
    let spaces: Vec<EmbeddingSpace<f64>> = cmd.embeddings.iter().map(|p| load_space(p)).collect::<Result<_, _>>()?;
    let refs: Vec<&EmbeddingSpace<f64>> = spaces.iter().collect();
    let vocab = match &cmd.vocab {
        Some(path) => Vocabulary::read_tsv(path)?,
        // Row order of a trained model is already frequency order.
        None => Vocabulary::from_counts(
            spaces[0].words().iter().enumerate().map(|(i, w)| (w.clone(), (spaces[0].len() - i) as u64)),
            1,
        )?,
    };
    let anchors = cmd.anchors.min(vocab.len());
    let selection = evaluate::select_anchors(&vocab, anchors, &refs)?;
    let name = format!("stability/j@{}", cmd.jaccard_n);
    let row = if refs.len() == 2 {
        let j = evaluate::jaccard_at_n(&refs, &selection.anchors, cmd.jaccard_n)?;
        Metric {
            anchors_dropped: Some(j.anchors_dropped + selection.dropped),
            ..metric(name, j.value, None)
        }
    } else {
        let r = evaluate::jackknife_stability(&refs, &selection.anchors, cmd.jaccard_n)?;
        Metric {
            std: Some(r.std),
            anchors_dropped: Some(r.anchors_dropped + selection.dropped),
            ..metric(name, r.mean, None)
        }
    };
    print_metrics(&[row], cmd.out.json)
}

fn experiment(cmd: Experiment) -> Result<(), PipelineError> {
    let mut extra: Vec<(&'static str, String)> = Vec::new();
    extra.extend(cmd.models.map(|v| ("models", v)));
    if cmd.subsample {
        extra.push(("subsample", "true".into()));
    }
    extra.extend(cmd.anchors.map(|v| ("anchors", v)));
    extra.extend(cmd.jaccard_n.map(|v| ("jaccard-n", v)));
    extra.extend(cmd.output.map(|p| ("output", p.display().to_string())));
    if cmd.no_embeddings {
        extra.push(("save-embeddings", "false".into()));
    }
    let mut config = cmd.shared.resolve(extra)?;
    if !cmd.similarity.is_empty() {
        config.similarity = cmd.similarity;
    }
    if !cmd.analogy.is_empty() {
        config.analogy = cmd.analogy;
    }
    let outcome = pipeline::run_experiment(&config)?;
    print_metrics(&outcome.report.metrics, false)?;
    eprintln!(
        "master seed {}; report in {}",
        outcome.report.master_seed,
        config.output.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Train(c) => train(c),
        Command::Subsample(c) => subsample(c),
        Command::EvalSim(c) => eval_sim(c),
        Command::EvalAnalogy(c) => eval_analogy(c),
        Command::Stability(c) => stability(c),
        Command::Experiment(c) => experiment(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
