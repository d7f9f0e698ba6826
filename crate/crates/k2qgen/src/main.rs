//! Command-line pipeline driver.
//!
//! Subcommands mirror the pipeline stages and communicate through artifact
//! files in the output directory, so stages can be re-run independently.
//! Every artifact starts with a `# config=<hash> seed=<n>` header line and
//! is written atomically (temp file + rename).
//!
//! Exit codes: 0 success, 2 configuration error, 3 data/processing error.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use k2qgen::config::PipelineConfig;
use k2qgen::corpus::{
    build_stats, filter_natural_questions, load_seed_pairs, KeywordQuery, QuestionCorpus,
};
use k2qgen::experiments::{coverage_curve, cross_validate, evaluate_k2q};
use k2qgen::filters::{kqf_filter, tdf_score_all, tdf_select, PairSet, SyntheticPair};
use k2qgen::generator::{
    estimate_length_prior, generate_pairs, CandidateSet, LengthPrior,
};
use k2qgen::index::build_index;
use k2qgen::phrasing::{detect_phrases, PhraseModel};
use k2qgen::{Error, Result};

#[derive(Parser)]
#[command(name = "k2qgen", about = "Synthetic keyword-to-question training data pipeline")]
struct Cli {
    /// Configuration file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the generation seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores). Results are identical either way.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Artifact directory.
    #[arg(long, global = true, default_value = "out")]
    output: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter the raw corpus down to natural questions.
    Preprocess,
    /// Detect collocations and rewrite the corpus with phrase units.
    Phrases,
    /// Estimate the keyword length prior from the seed pairs.
    Estimate,
    /// Sample candidate keywords for every question.
    Generate,
    /// Keep each question's best-retrieving candidate (builds T).
    Kqf,
    /// Score pairs by cluster retrieval precision and keep the top L (T_L).
    Tdf,
    /// Score the SDM retrieval baseline on the seed pairs.
    Evaluate,
    /// Cross-validated hyperparameter grid search.
    Tune,
    /// Vocabulary coverage of TDF-filtered subsets at increasing cut-offs.
    Coverage,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            match e {
                Error::Config(_) | Error::InvalidParameter(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.gen.global_seed = seed;
    }
    cfg.validate()?;
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&cli.output).map_err(|e| Error::io(&cli.output, e))?;

    let paths = Artifacts::new(&cli.output);
    match cli.command {
        Command::Preprocess => preprocess(&cfg, &paths),
        Command::Phrases => phrases(&cfg, &paths),
        Command::Estimate => estimate(&cfg, &paths),
        Command::Generate => generate(&cfg, &paths),
        Command::Kqf => kqf(&cfg, &paths),
        Command::Tdf => tdf(&cfg, &paths),
        Command::Evaluate => evaluate(&cfg, &paths),
        Command::Tune => tune(&cfg, &paths),
        Command::Coverage => coverage(&cfg, &paths),
    }
}

struct Artifacts {
    corpus: PathBuf,
    phrased: PathBuf,
    phrase_model: PathBuf,
    length_prior: PathBuf,
    candidates: PathBuf,
    pairs: PathBuf,
    scored_pairs: PathBuf,
    selected: PathBuf,
    report: PathBuf,
    cv_report: PathBuf,
    coverage: PathBuf,
}

impl Artifacts {
    fn new(dir: &Path) -> Self {
        let p = |name: &str| dir.join(name);
        Artifacts {
            corpus: p("corpus.jsonl"),
            phrased: p("phrased.jsonl"),
            phrase_model: p("phrase_model.tsv"),
            length_prior: p("length_prior.tsv"),
            candidates: p("candidates.tsv"),
            pairs: p("pairs.tsv"),
            scored_pairs: p("scored_pairs.tsv"),
            selected: p("selected.tsv"),
            report: p("report.tsv"),
            cv_report: p("cv_report.tsv"),
            coverage: p("coverage.tsv"),
        }
    }
}

fn require(path: &Path, hint: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            hint: hint.to_string(),
        })
    }
}

/// Write an artifact atomically with the provenance header.
fn write_artifact(
    path: &Path,
    cfg: &PipelineConfig,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp).map_err(|e| Error::io(&tmp, e))?);
        writeln!(w, "# config={} seed={}", cfg.hash(), cfg.gen.global_seed)
            .and_then(|()| body(&mut w))
            .and_then(|()| w.flush())
            .map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// The generation corpus: phrase-merged when phrases are enabled.
fn load_working_corpus(cfg: &PipelineConfig, paths: &Artifacts) -> Result<QuestionCorpus> {
    if cfg.gen.use_phrases {
        require(&paths.phrased, "run `phrases` first")?;
        QuestionCorpus::load_jsonl(&paths.phrased)
    } else {
        require(&paths.corpus, "run `preprocess` first")?;
        QuestionCorpus::load_jsonl(&paths.corpus)
    }
}

fn preprocess(cfg: &PipelineConfig, paths: &Artifacts) -> Result<()> {
    let raw = QuestionCorpus::load_jsonl(&cfg.corpus_path)?;
    let filtered = filter_natural_questions(&raw);
    if filtered.is_empty() {
        return Err(Error::NoData(
            "no questions survived the natural-question filter".into(),
        ));
    }
    log::info!(
        "kept {} of {} questions in {} clusters",
        filtered.len(),
        raw.len(),
        filtered.clusters().len()
    );
    write_artifact(&paths.corpus, cfg, |w| filtered.write_jsonl(w))
}

fn phrases(cfg: &PipelineConfig, paths: &Artifacts) -> Result<()> {
    require(&paths.corpus, "run `preprocess` first")?;
    let corpus = QuestionCorpus::load_jsonl(&paths.corpus)?;
    let mut model = PhraseModel::new(cfg.phrase_discount, cfg.phrase_threshold, cfg.phrase_passes)?;
    let merged = detect_phrases(&corpus, &mut model)?;
    write_artifact(&paths.phrased, cfg, |w| merged.write_jsonl(w))?;
    write_artifact(&paths.phrase_model, cfg, |w| model.write_tsv(w))
}

fn estimate(cfg: &PipelineConfig, paths: &Artifacts) -> Result<()> {
    let seed_corpus = QuestionCorpus::load_jsonl(&cfg.corpus_path)?;
    let pairs = load_seed_pairs(&cfg.seed_path, &seed_corpus)?;
    let prior = estimate_length_prior(&pairs)?;
    write_artifact(&paths.length_prior, cfg, |w| prior.write_tsv(w))
}

fn load_prior(paths: &Artifacts) -> Result<LengthPrior> {
    require(&paths.length_prior, "run `estimate` first")?;
    let file = File::open(&paths.length_prior).map_err(|e| Error::io(&paths.length_prior, e))?;
    LengthPrior::read_tsv(BufReader::new(file))
}

fn generate(cfg: &PipelineConfig, paths: &Artifacts) -> Result<()> {
    let corpus = load_working_corpus(cfg, paths)?;
    let prior = load_prior(paths)?;
    let stats = build_stats(&corpus)?;
    let sets = generate_pairs(&corpus, &stats, &cfg.gen, &prior)?;
    let total: usize = sets.iter().map(|s| s.candidates.len()).sum();
    log::info!("generated {total} candidates for {} questions", sets.len());
    write_artifact(&paths.candidates, cfg, |w| {
        for set in &sets {
            for (rank, k) in set.candidates.iter().enumerate() {
                writeln!(w, "{}\t{}\t{}", set.question_id, rank + 1, k.joined())?;
            }
        }
        Ok(())
    })
}

fn read_candidates(path: &Path) -> Result<Vec<CandidateSet>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut sets: Vec<CandidateSet> = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        let (qid, _rank, keyword) = match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), Some(c)) if !a.is_empty() && !c.is_empty() => (a, b, c),
            _ => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: "expected question_id, rank, keyword".into(),
                })
            }
        };
        let k = KeywordQuery {
            tokens: keyword.split(' ').map(str::to_string).collect(),
            source_question_id: qid.to_string(),
        };
        match sets.last_mut() {
            Some(s) if s.question_id == qid => s.candidates.push(k),
            _ => sets.push(CandidateSet {
                question_id: qid.to_string(),
                candidates: vec![k],
            }),
        }
    }
    if sets.is_empty() {
        return Err(Error::NoData(format!("no candidates in {}", path.display())));
    }
    Ok(sets)
}

fn kqf(cfg: &PipelineConfig, paths: &Artifacts) -> Result<()> {
    require(&paths.candidates, "run `generate` first")?;
    let corpus = load_working_corpus(cfg, paths)?;
    let sets = read_candidates(&paths.candidates)?;
    let index = build_index(&corpus)?;
    let kept = kqf_filter(&sets, &corpus, &index, &cfg.sdm, cfg.filter_top_n);
    log::info!("KQF kept {} of {} questions", kept.len(), sets.len());
    write_artifact(&paths.pairs, cfg, |w| {
        for p in &kept.pairs {
            writeln!(w, "{}\t{}", p.keyword.joined(), p.question_id)?;
        }
        Ok(())
    })
}

fn read_pairs(path: &Path, with_quality: bool, provenance: &str) -> Result<PairSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let expected = if with_quality { 3 } else { 2 };
        if cols.len() != expected || cols.iter().any(|c| c.is_empty()) {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("expected {expected} tab-separated columns"),
            });
        }
        let quality = if with_quality {
            Some(cols[2].parse::<f64>().map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("bad quality score: {e}"),
            })?)
        } else {
            None
        };
        pairs.push(SyntheticPair {
            keyword: KeywordQuery {
                tokens: cols[0].split(' ').map(str::to_string).collect(),
                source_question_id: cols[1].to_string(),
            },
            question_id: cols[1].to_string(),
            quality,
        });
    }
    if pairs.is_empty() {
        return Err(Error::NoData(format!("no pairs in {}", path.display())));
    }
    Ok(PairSet::new(pairs, provenance))
}

fn tdf(cfg: &PipelineConfig, paths: &Artifacts) -> Result<()> {
    require(&paths.pairs, "run `kqf` first")?;
    let corpus = load_working_corpus(cfg, paths)?;
    let pairs = read_pairs(&paths.pairs, false, "T")?;
    let index = build_index(&corpus)?;
    let clusters = corpus.clusters();
    let scored = tdf_score_all(&pairs, &index, &cfg.sdm, &clusters, &corpus, cfg.filter_top_n)?;
    write_artifact(&paths.scored_pairs, cfg, |w| {
        for p in &scored.pairs {
            writeln!(w, "{}\t{}\t{}", p.keyword.joined(), p.question_id, p.quality.unwrap())?;
        }
        Ok(())
    })?;
    let kept = tdf_select(&scored, cfg.filter_l)?;
    log::info!("TDF kept {} of {} pairs", kept.len(), scored.len());
    // Final export: surface forms with phrase underscores expanded.
    write_artifact(&paths.selected, cfg, |w| {
        for p in &kept.pairs {
            let q = corpus.get(&p.question_id).expect("scored pair resolves");
            let text = k2qgen::corpus::expand_phrase_tokens(&q.tokens).join(" ");
            writeln!(w, "{}\t{}", p.keyword.surface(), text)?;
        }
        Ok(())
    })
}

fn evaluate(cfg: &PipelineConfig, paths: &Artifacts) -> Result<()> {
    let seed_corpus = QuestionCorpus::load_jsonl(&cfg.corpus_path)?;
    let pairs = load_seed_pairs(&cfg.seed_path, &seed_corpus)?;
    let retrieval = filter_natural_questions(&seed_corpus);
    let index = build_index(&retrieval)?;
    // SDM baseline: answer each seed keyword with the best-retrieved question.
    let mut predictions = Vec::new();
    let mut unanswered = 0usize;
    let mut answerable = Vec::new();
    for pair in &pairs {
        let tokens = match index.sdm_baseline_answer(&cfg.sdm, &pair.keyword) {
            Some(id) => k2qgen::corpus::expand_phrase_tokens(&retrieval.get(&id).unwrap().tokens),
            None => {
                unanswered += 1;
                continue;
            }
        };
        predictions.push((pair.keyword.surface(), tokens));
        answerable.push(pair.clone());
    }
    if unanswered > 0 {
        log::warn!("{unanswered} seed keyword(s) retrieved nothing and were skipped");
    }
    let report = evaluate_k2q(&predictions, &answerable, &seed_corpus)?;
    log::info!(
        "SDM baseline over {} pairs: ROUGE-L {:.4}, BLEU {:.4}",
        report.n,
        report.rouge_l,
        report.bleu
    );
    write_artifact(&paths.report, cfg, |w| {
        writeln!(w, "metric\tvalue")?;
        writeln!(w, "rouge_l\t{:.6}", report.rouge_l)?;
        writeln!(w, "rouge_1\t{:.6}", report.rouge_1)?;
        writeln!(w, "rouge_2\t{:.6}", report.rouge_2)?;
        writeln!(w, "bleu\t{:.6}", report.bleu)?;
        writeln!(w, "n\t{}", report.n)?;
        Ok(())
    })
}

fn tune(cfg: &PipelineConfig, paths: &Artifacts) -> Result<()> {
    let seed_corpus = QuestionCorpus::load_jsonl(&cfg.corpus_path)?;
    let pairs = load_seed_pairs(&cfg.seed_path, &seed_corpus)?;
    let report = cross_validate(
        &seed_corpus,
        &pairs,
        &cfg.grid,
        cfg.cv_folds,
        cfg.cv_repeats,
        cfg.gen.global_seed,
    )?;
    if let Some(best) = report.best() {
        log::info!(
            "best: {} (AvgRougeL {:.4} +/- {:.4})",
            best.point.label(),
            best.avg_mean,
            best.avg_std
        );
    }
    write_artifact(&paths.cv_report, cfg, |w| report.write_tsv(w))
}

fn coverage(cfg: &PipelineConfig, paths: &Artifacts) -> Result<()> {
    require(&paths.scored_pairs, "run `tdf` first")?;
    let corpus = load_working_corpus(cfg, paths)?;
    let scored = read_pairs(&paths.scored_pairs, true, "T")?;
    let curve = coverage_curve(&scored, &corpus, cfg.coverage_steps)?;
    write_artifact(&paths.coverage, cfg, |w| {
        writeln!(w, "kept_fraction\tvocab_coverage")?;
        for (frac, cov) in &curve {
            writeln!(w, "{frac:.4}\t{cov:.6}")?;
        }
        Ok(())
    })
}
