use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

fn wppmi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wppmi"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn train_into(dir: &Path, extra: &[&str]) -> Output {
    let corpus = data("lee_background.cor");
    let mut args = vec!["train", "--corpus", s(&corpus), "--min-count", "3", "--dim", "10", "--output", s(dir)];
    args.extend_from_slice(extra);
    wppmi(&args)
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&wppmi(&["train", "--no-such-flag"])), 1);
    assert_eq!(code(&wppmi(&[])), 1);
    assert_eq!(code(&wppmi(&["train", "--output", "x", "--window", "many", "--corpus", "y"])), 1);
    assert_eq!(code(&wppmi(&["--help"])), 0);
}

#[test]
fn train_is_deterministic_and_evaluable() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&train_into(&a, &[])), 0);
    assert_eq!(code(&train_into(&b, &[])), 0);
    let read = |d: &Path| fs::read(d.join("embeddings.txt")).unwrap();
    assert_eq!(read(&a), read(&b));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["params"]["dim"], 10);

    let emb = a.join("embeddings.txt");
    let sim = wppmi(&["eval-sim", "--embeddings", s(&emb), "--testset", s(&data("wordsim353.tsv"))]);
    assert_eq!(code(&sim), 0, "{}", String::from_utf8_lossy(&sim.stderr));
    let text = String::from_utf8(sim.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("similarity/wordsim353/rho\t"));

    let ana = wppmi(&["eval-analogy", "--embeddings", s(&emb), "--testset", s(&data("questions-words.txt")), "--json"]);
    assert_eq!(code(&ana), 0, "{}", String::from_utf8_lossy(&ana.stderr));
    let rows: serde_json::Value = serde_json::from_slice(&ana.stdout).unwrap();
    assert_eq!(rows[0]["metric"], "analogy/questions-words/accuracy");

    let st = wppmi(&["stability", "--embeddings", s(&emb), s(&b.join("embeddings.txt")), s(&emb), "--anchors", "50"]);
    assert_eq!(code(&st), 0, "{}", String::from_utf8_lossy(&st.stderr));
    let text = String::from_utf8(st.stdout).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "stability/j@10\t1\t0\tNA\t0");
}

#[test]
fn probabilistic_training_with_pinned_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let flags = ["--df", "prob", "--ff", "prob", "--seed", "11"];
    assert_eq!(code(&train_into(&a, &flags)), 0);
    assert_eq!(code(&train_into(&b, &flags)), 0);
    assert_eq!(fs::read(a.join("embeddings.txt")).unwrap(), fs::read(b.join("embeddings.txt")).unwrap());
}

#[test]
fn subsample_with_seed_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = data("lee_background.cor");
    let run = |name: &str| {
        let out = tmp.path().join(name);
        assert_eq!(code(&wppmi(&["subsample", "--corpus", s(&corpus), "--seed", "3", "--output", s(&out)])), 0);
        fs::read_to_string(out).unwrap()
    };
    let first = run("a.txt");
    assert_eq!(first, run("b.txt"));
    let lines = first.lines().count();
    assert!(lines > 100 && lines < 299, "{lines}");
}

#[test]
fn experiment_reads_config_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = tmp.path().join("exp.conf");
    fs::write(
        &config,
        format!(
            "# two models\ncorpus = {}\nmin-count = 3\ndim = 50\nmodels = 2\nanchors = 30\nseed = 8\nsimilarity = {}\noutput = {}\n",
            data("lee_background.cor").display(),
            data("wordsim353.tsv").display(),
            out.display()
        ),
    )
    .unwrap();
    let run = wppmi(&["experiment", "--config", s(&config), "--dim", "8"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["params"]["dim"], 8);
    assert_eq!(report["stability"]["status"], "pair");
    assert_eq!(report["models"].as_array().unwrap().len(), 2);
    assert!(out.join("model-01/embeddings.txt").exists());
}

#[test]
fn data_and_numerical_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = wppmi(&["train", "--corpus", "/nonexistent/corpus.txt", "--output", s(tmp.path())]);
    assert_eq!(code(&missing), 2);
    let exp = wppmi(&["experiment", "--corpus", "/nonexistent/corpus.txt", "--output", s(tmp.path())]);
    assert_eq!(code(&exp), 2);

    // One token per document: nothing co-occurs.
    let lonely = tmp.path().join("lonely.txt");
    fs::write(&lonely, "alpha\nbeta\nalpha\nbeta\n").unwrap();
    let out = wppmi(&["train", "--corpus", s(&lonely), "--min-count", "1", "--dim", "1", "--output", s(&tmp.path().join("m"))]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}
