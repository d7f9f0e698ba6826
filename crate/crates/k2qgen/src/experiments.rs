//! Cross-validated grid search, end-task evaluation, and coverage analysis.
//!
//! Model selection runs k-fold cross-validation at the paraphrase-cluster
//! level: every cluster's seed pairs land in exactly one fold, so paraphrases
//! of a test question never leak into training. For each grid point and
//! repeat, the length prior is re-estimated on the training folds, one
//! keyword is sampled per held-out question, and its AvgRougeL / MaxRougeL
//! against the cluster's gold keywords is averaged.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::corpus::{expand_phrase_tokens, KeywordQuery, QuestionCorpus, SeedPair};
use crate::corpus::{build_stats, CorpusStats};
use crate::filters::{tdf_select, PairSet};
use crate::generator::{
    baseline_mixture, estimate_length_prior, paraphrase_mixture, per_question_seed, sample_query,
    ModelKind, Strategy,
};
use crate::metrics::{avg_rouge_l, max_rouge_l, score_pair, MetricReport};
use crate::phrasing::{detect_phrases, PhraseModel};
use crate::{Error, Result};

/// Hyperparameter value lists to sweep. `betas` are constrained by
/// `beta <= 1 - alpha` at expansion time.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub models: Vec<ModelKind>,
    pub strategies: Vec<Strategy>,
    pub phrase_on: Vec<bool>,
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        let steps = |n: usize| (1..=n).map(|i| i as f64 / 10.0).collect::<Vec<_>>();
        GridSpec {
            models: vec![ModelKind::Baseline],
            strategies: vec![
                Strategy::Popular,
                Strategy::Discriminative,
                Strategy::Combination,
            ],
            phrase_on: vec![false],
            lambdas: steps(9),
            alphas: steps(9),
            betas: steps(9),
        }
    }
}

/// One concrete hyperparameter setting. `lambda` is meaningful for the
/// baseline model; `alpha`/`beta` for the paraphrase model.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub model: ModelKind,
    pub strategy: Strategy,
    pub use_phrases: bool,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl GridPoint {
    pub fn label(&self) -> String {
        let phr = if self.use_phrases { "+phr" } else { "" };
        match self.model {
            ModelKind::Baseline => format!(
                "{}/{}{phr} lambda={}",
                self.model.name(),
                self.strategy.name(),
                self.lambda
            ),
            ModelKind::Paraphrase => format!(
                "{}/{}{phr} alpha={} beta={}",
                self.model.name(),
                self.strategy.name(),
                self.alpha,
                self.beta
            ),
        }
    }
}

impl GridSpec {
    pub fn expand(&self) -> Vec<GridPoint> {
        let mut points = Vec::new();
        for &model in &self.models {
            for &strategy in &self.strategies {
                for &use_phrases in &self.phrase_on {
                    match model {
                        ModelKind::Baseline => {
                            for &lambda in &self.lambdas {
                                points.push(GridPoint {
                                    model,
                                    strategy,
                                    use_phrases,
                                    lambda,
                                    alpha: 0.0,
                                    beta: 0.0,
                                });
                            }
                        }
                        ModelKind::Paraphrase => {
                            for &alpha in &self.alphas {
                                for &beta in &self.betas {
                                    if alpha + beta <= 1.0 + 1e-12 {
                                        points.push(GridPoint {
                                            model,
                                            strategy,
                                            use_phrases,
                                            lambda: 0.0,
                                            alpha,
                                            beta,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        points
    }
}

/// Cross-validation result for one grid point. Means and population standard
/// deviations are taken over repeats (std is 0 for a single repeat).
#[derive(Debug, Clone)]
pub struct CvRow {
    pub point: GridPoint,
    pub avg_mean: f64,
    pub avg_std: f64,
    pub max_mean: f64,
    pub max_std: f64,
    /// Held-out questions scored per repeat.
    pub n_questions: usize,
}

#[derive(Debug, Clone)]
pub struct CvReport {
    pub rows: Vec<CvRow>,
    pub folds: usize,
    pub repeats: usize,
}

impl CvReport {
    /// Row with the highest mean AvgRougeL.
    pub fn best(&self) -> Option<&CvRow> {
        self.rows
            .iter()
            .max_by(|a, b| a.avg_mean.total_cmp(&b.avg_mean))
    }

    pub fn write_tsv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(
            w,
            "model\tstrategy\tphrases\tlambda\talpha\tbeta\tavg_rouge_l_mean\tavg_rouge_l_std\tmax_rouge_l_mean\tmax_rouge_l_std\tn_questions"
        )?;
        for row in &self.rows {
            let p = &row.point;
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}",
                p.model.name(),
                p.strategy.name(),
                p.use_phrases,
                p.lambda,
                p.alpha,
                p.beta,
                row.avg_mean,
                row.avg_std,
                row.max_mean,
                row.max_std,
                row.n_questions
            )?;
        }
        Ok(())
    }
}

fn repeat_seed(seed_value: u64, repeat: usize) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed_value.to_le_bytes());
    hasher.update([0x2e]);
    hasher.update((repeat as u64).to_le_bytes());
    u64::from_le_bytes(hasher.finalize()[..8].try_into().unwrap())
}

/// Round-robin fold assignment over a shuffled cluster list.
fn assign_folds(cluster_ids: &[String], folds: usize, rng: &mut ChaCha8Rng) -> HashMap<String, usize> {
    let mut shuffled: Vec<&String> = cluster_ids.iter().collect();
    shuffled.shuffle(rng);
    shuffled
        .iter()
        .enumerate()
        .map(|(i, id)| ((*id).clone(), i % folds))
        .collect()
}

struct CorpusVariant {
    corpus: QuestionCorpus,
    stats: CorpusStats,
}

/// Cluster-level k-fold cross-validation over the grid. `corpus` must
/// resolve every seed pair's question id; fold splits are identical across
/// grid points so rows are directly comparable.
pub fn cross_validate(
    corpus: &QuestionCorpus,
    seed_pairs: &[SeedPair],
    grid: &GridSpec,
    folds: usize,
    repeats: usize,
    seed_value: u64,
) -> Result<CvReport> {
    if folds < 2 {
        return Err(Error::InvalidParameter(format!(
            "cross-validation needs at least 2 folds, got {folds}"
        )));
    }
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be >= 1".into()));
    }
    if seed_pairs.is_empty() {
        return Err(Error::NoData("no seed pairs for cross-validation".into()));
    }

    // Cluster of each seed pair, and gold keyword sets per cluster.
    let mut pair_cluster: Vec<String> = Vec::with_capacity(seed_pairs.len());
    let mut gold_by_cluster: BTreeMap<String, Vec<KeywordQuery>> = BTreeMap::new();
    for pair in seed_pairs {
        let q = corpus.get(&pair.question_id).ok_or_else(|| {
            Error::UnknownDocument(pair.question_id.clone())
        })?;
        pair_cluster.push(q.cluster_id.clone());
        gold_by_cluster
            .entry(q.cluster_id.clone())
            .or_default()
            .push(pair.keyword.clone());
    }
    let cluster_ids: Vec<String> = gold_by_cluster.keys().cloned().collect();
    if cluster_ids.len() < folds {
        return Err(Error::NoData(format!(
            "{} clusters cannot fill {folds} folds",
            cluster_ids.len()
        )));
    }

    let plain = CorpusVariant {
        corpus: corpus.clone(),
        stats: build_stats(corpus)?,
    };
    let phrased = if grid.phrase_on.contains(&true) {
        let mut model = PhraseModel::default();
        let merged = detect_phrases(corpus, &mut model)?;
        let stats = build_stats(&merged)?;
        Some(CorpusVariant {
            corpus: merged,
            stats,
        })
    } else {
        None
    };

    // Same splits for every grid point.
    let splits: Vec<HashMap<String, usize>> = (0..repeats)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(repeat_seed(seed_value, r));
            assign_folds(&cluster_ids, folds, &mut rng)
        })
        .collect();

    let points = grid.expand();
    if points.is_empty() {
        return Err(Error::NoData("empty hyperparameter grid".into()));
    }

    let rows: Result<Vec<CvRow>> = points
        .par_iter()
        .map(|point| {
            let variant = if point.use_phrases {
                phrased.as_ref().unwrap()
            } else {
                &plain
            };
            let mut repeat_avgs = Vec::with_capacity(repeats);
            let mut repeat_maxes = Vec::with_capacity(repeats);
            let mut n_questions = 0usize;
            for (r, split) in splits.iter().enumerate() {
                let sample_base = repeat_seed(seed_value ^ 0x5bd1_e995, r);
                let mut sum_avg = 0.0;
                let mut sum_max = 0.0;
                let mut n = 0usize;
                for fold in 0..folds {
                    let train: Vec<SeedPair> = seed_pairs
                        .iter()
                        .zip(&pair_cluster)
                        .filter(|(_, c)| split[*c] != fold)
                        .map(|(p, _)| p.clone())
                        .collect();
                    let prior = estimate_length_prior(&train)?;
                    for (pair, cluster) in seed_pairs.iter().zip(&pair_cluster) {
                        if split[cluster] != fold {
                            continue;
                        }
                        let q = match variant.corpus.get(&pair.question_id) {
                            Some(q) => q,
                            None => continue,
                        };
                        let dist = match point.model {
                            ModelKind::Baseline => {
                                baseline_mixture(q, &variant.stats, point.lambda, point.strategy)
                            }
                            ModelKind::Paraphrase => {
                                let paras = variant.corpus.paraphrases_of(q);
                                paraphrase_mixture(
                                    q,
                                    &paras,
                                    &variant.stats,
                                    point.alpha,
                                    point.beta,
                                    point.strategy,
                                )
                            }
                        };
                        let dist = match dist {
                            Ok(d) => d,
                            Err(e) => {
                                log::warn!("cv: skipping `{}`: {e}", q.id);
                                continue;
                            }
                        };
                        let seed = per_question_seed(sample_base, &q.id);
                        let sampled = sample_query(q, &dist, &prior, seed)?;
                        let gold = &gold_by_cluster[cluster];
                        sum_avg += avg_rouge_l(&sampled.query, gold)?;
                        sum_max += max_rouge_l(&sampled.query, gold)?;
                        n += 1;
                    }
                }
                if n == 0 {
                    return Err(Error::NoData(format!(
                        "no scorable held-out questions for {}",
                        point.label()
                    )));
                }
                repeat_avgs.push(sum_avg / n as f64);
                repeat_maxes.push(sum_max / n as f64);
                n_questions = n;
            }
            let (avg_mean, avg_std) = mean_std(&repeat_avgs);
            let (max_mean, max_std) = mean_std(&repeat_maxes);
            Ok(CvRow {
                point: point.clone(),
                avg_mean,
                avg_std,
                max_mean,
                max_std,
                n_questions,
            })
        })
        .collect();

    Ok(CvReport {
        rows: rows?,
        folds,
        repeats,
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Score keyword-to-question predictions against the gold pairs.
/// `predictions` maps a keyword surface form to predicted question tokens;
/// every gold keyword must have a prediction, otherwise the offending
/// keywords are listed in the error.
pub fn evaluate_k2q(
    predictions: &[(String, Vec<String>)],
    gold: &[SeedPair],
    corpus: &QuestionCorpus,
) -> Result<MetricReport> {
    if gold.is_empty() {
        return Err(Error::NoData("empty gold pair set".into()));
    }
    let by_surface: HashMap<&str, &Vec<String>> = predictions
        .iter()
        .map(|(k, toks)| (k.as_str(), toks))
        .collect();

    let missing: Vec<String> = gold
        .iter()
        .map(|p| p.keyword.surface())
        .filter(|s| !by_surface.contains_key(s.as_str()))
        .collect();
    if !missing.is_empty() {
        return Err(Error::NoData(format!(
            "no prediction for {} gold keyword(s): {}",
            missing.len(),
            missing.join(", ")
        )));
    }

    let mut sums = (0.0, 0.0, 0.0, 0.0);
    for pair in gold {
        let q = corpus
            .get(&pair.question_id)
            .ok_or_else(|| Error::UnknownDocument(pair.question_id.clone()))?;
        let reference = expand_phrase_tokens(&q.tokens);
        let predicted = &by_surface[pair.keyword.surface().as_str()];
        let (rl, r1, r2, bl) = score_pair(predicted, &reference)?;
        sums.0 += rl;
        sums.1 += r1;
        sums.2 += r2;
        sums.3 += bl;
    }
    let n = gold.len();
    let d = n as f64;
    Ok(MetricReport {
        rouge_l: sums.0 / d,
        rouge_1: sums.1 / d,
        rouge_2: sums.2 / d,
        bleu: sums.3 / d,
        n,
    })
}

fn question_vocab(pairs: &PairSet, corpus: &QuestionCorpus) -> Result<HashSet<String>> {
    let mut vocab = HashSet::new();
    for pair in &pairs.pairs {
        let q = corpus
            .get(&pair.question_id)
            .ok_or_else(|| Error::UnknownDocument(pair.question_id.clone()))?;
        for w in expand_phrase_tokens(&q.tokens) {
            vocab.insert(w);
        }
    }
    Ok(vocab)
}

/// Fraction of the unique question words of `full` that also occur in the
/// questions of `subset`. Phrase tokens are expanded to words first.
pub fn vocab_coverage(subset: &PairSet, full: &PairSet, corpus: &QuestionCorpus) -> Result<f64> {
    if full.is_empty() {
        return Err(Error::NoData("empty reference pair set".into()));
    }
    let full_vocab = question_vocab(full, corpus)?;
    let sub_vocab = question_vocab(subset, corpus)?;
    let covered = full_vocab.intersection(&sub_vocab).count();
    Ok(covered as f64 / full_vocab.len() as f64)
}

/// Coverage at `steps` evenly spaced TDF cut-offs of the scored pair set:
/// returns (kept fraction, vocabulary coverage) rows, ending at 1.0.
pub fn coverage_curve(
    scored: &PairSet,
    corpus: &QuestionCorpus,
    steps: usize,
) -> Result<Vec<(f64, f64)>> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be >= 1".into()));
    }
    if scored.is_empty() {
        return Err(Error::NoData("empty scored pair set".into()));
    }
    let mut rows = Vec::with_capacity(steps);
    for i in 1..=steps {
        let frac = i as f64 / steps as f64;
        let l = ((scored.len() as f64 * frac).ceil() as usize).max(1);
        let kept = tdf_select(scored, l)?;
        rows.push((frac, vocab_coverage(&kept, scored, corpus)?));
    }
    Ok(rows)
}
