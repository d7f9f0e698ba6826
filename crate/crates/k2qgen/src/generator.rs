//! Keyword query generation: per-question term distributions (popular,
//! discriminative, combination), the baseline and paraphrase mixtures, the
//! query-length prior, and the sampling loop producing candidate keywords.
//!
//! Question openers never receive probability mass; sampling is without
//! replacement (a drawn unit's mass is zeroed and the rest renormalized);
//! query length is drawn from the prior restricted to lengths shorter than
//! the question.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::corpus::{self, CorpusStats, KeywordQuery, Question, QuestionCorpus, SeedPair};
use crate::{Error, Result};

/// Query lengths considered by the length prior.
pub const MIN_QUERY_LEN: usize = 3;
pub const MAX_QUERY_LEN: usize = 7;

/// Term selection strategy for the per-question distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Mass proportional to within-question term frequency.
    Popular,
    /// Mass proportional to the inverse collection probability.
    Discriminative,
    /// Mass proportional to term frequency times log(N/df).
    Combination,
}

impl Strategy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "popular" => Ok(Strategy::Popular),
            "discriminative" => Ok(Strategy::Discriminative),
            "combination" => Ok(Strategy::Combination),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Popular => "popular",
            Strategy::Discriminative => "discriminative",
            Strategy::Combination => "combination",
        }
    }
}

/// Which mixture model produces the sampling distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Two components: question and collection, weighted by lambda.
    Baseline,
    /// Three components: question, paraphrase cluster, collection.
    Paraphrase,
}

impl ModelKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(ModelKind::Baseline),
            "paraphrase" => Ok(ModelKind::Paraphrase),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Baseline => "baseline",
            ModelKind::Paraphrase => "paraphrase",
        }
    }
}

/// Full generation configuration.
#[derive(Debug, Clone)]
pub struct GenerationConfig {
    pub strategy: Strategy,
    pub model: ModelKind,
    /// Collection mixing weight of the baseline model.
    pub lambda: f64,
    /// Question weight of the paraphrase model.
    pub alpha: f64,
    /// Paraphrase-cluster weight of the paraphrase model.
    pub beta: f64,
    pub use_phrases: bool,
    /// Candidate keywords generated per question (m).
    pub candidates_per_question: usize,
    pub global_seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            strategy: Strategy::Combination,
            model: ModelKind::Baseline,
            lambda: 0.1,
            alpha: 0.5,
            beta: 0.3,
            use_phrases: true,
            candidates_per_question: 20,
            global_seed: 42,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be in [0,1], got {}",
                self.lambda
            )));
        }
        if self.alpha < 0.0 || self.beta < 0.0 || self.alpha + self.beta > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "alpha, beta must be >= 0 with alpha+beta <= 1, got {}, {}",
                self.alpha, self.beta
            )));
        }
        if self.candidates_per_question == 0 {
            return Err(Error::InvalidParameter(
                "candidates_per_question must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Prior probability of keyword query length, supported on [3, 7].
#[derive(Debug, Clone, PartialEq)]
pub struct LengthPrior {
    probs: BTreeMap<usize, f64>,
}

impl LengthPrior {
    pub fn from_probs(probs: BTreeMap<usize, f64>) -> Result<Self> {
        let sum: f64 = probs.values().sum();
        if probs.is_empty() || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "length prior must sum to 1, got {sum}"
            )));
        }
        if probs
            .keys()
            .any(|&s| !(MIN_QUERY_LEN..=MAX_QUERY_LEN).contains(&s))
        {
            return Err(Error::InvalidParameter(
                "length prior support must lie in [3,7]".into(),
            ));
        }
        Ok(LengthPrior { probs })
    }

    pub fn prob(&self, s: usize) -> f64 {
        self.probs.get(&s).copied().unwrap_or(0.0)
    }

    pub fn probs(&self) -> &BTreeMap<usize, f64> {
        &self.probs
    }

    pub fn write_tsv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        for (s, p) in &self.probs {
            writeln!(w, "{s}\t{p}")?;
        }
        Ok(())
    }

    pub fn read_tsv(r: impl std::io::BufRead) -> Result<Self> {
        let mut probs = BTreeMap::new();
        for line in r.lines() {
            let line = line.map_err(|e| Error::Config(e.to_string()))?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let mut cols = t.split('\t');
            let (s, p) = match (cols.next(), cols.next()) {
                (Some(s), Some(p)) => (s, p),
                _ => return Err(Error::Config(format!("bad length prior row `{t}`"))),
            };
            let s: usize = s
                .parse()
                .map_err(|_| Error::Config(format!("bad length `{s}`")))?;
            let p: f64 = p
                .parse()
                .map_err(|_| Error::Config(format!("bad probability `{p}`")))?;
            probs.insert(s, p);
        }
        Self::from_probs(probs)
    }
}

/// Empirical distribution of seed keyword lengths, restricted to [3, 7] and
/// renormalized. Lengths outside the window are dropped.
pub fn estimate_length_prior(seed: &[SeedPair]) -> Result<LengthPrior> {
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for pair in seed {
        let len = pair.keyword.tokens.len();
        if (MIN_QUERY_LEN..=MAX_QUERY_LEN).contains(&len) {
            *counts.entry(len).or_insert(0) += 1;
        }
    }
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::NoData(
            "no seed keyword has length in [3,7]".into(),
        ));
    }
    let probs = counts
        .into_iter()
        .map(|(s, c)| (s, c as f64 / total as f64))
        .collect();
    LengthPrior::from_probs(probs)
}

/// A normalized sampling distribution over term units for one question.
/// Entry order is deterministic; openers carry no mass.
#[derive(Debug, Clone)]
pub struct TermDistribution {
    entries: Vec<(String, f64)>,
    pub origin_question_id: String,
}

impl TermDistribution {
    /// Normalize positive weights into a distribution. Zero-weight entries
    /// are dropped from the support.
    fn from_weights(weights: Vec<(String, f64)>, origin: &str) -> Result<Self> {
        let total: f64 = weights.iter().map(|(_, w)| *w).sum();
        if total <= 0.0 {
            return Err(Error::NoData(format!(
                "question `{origin}` has no sampleable units"
            )));
        }
        let entries = weights
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(t, w)| (t, w / total))
            .collect();
        Ok(TermDistribution {
            entries,
            origin_question_id: origin.to_string(),
        })
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn prob(&self, t: &str) -> f64 {
        self.entries
            .iter()
            .find(|(term, _)| term == t)
            .map(|(_, p)| *p)
            .unwrap_or(0.0)
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }
}

fn strategy_weights(
    tokens: &[&str],
    stats: &CorpusStats,
    strategy: Strategy,
) -> Result<Vec<(String, f64)>> {
    let mut counts: Vec<(String, u64)> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for &t in tokens {
        if corpus::is_opener(t) {
            continue;
        }
        match index.get(t) {
            Some(&i) => counts[i].1 += 1,
            None => {
                index.insert(t, counts.len());
                counts.push((t.to_string(), 1));
            }
        }
    }
    if counts.is_empty() {
        return Err(Error::NoData("only opener units present".into()));
    }
    let weights = match strategy {
        Strategy::Popular => counts
            .into_iter()
            .map(|(t, n)| (t, n as f64))
            .collect::<Vec<_>>(),
        Strategy::Discriminative => {
            let mut out = Vec::with_capacity(counts.len());
            for (t, _) in counts {
                let p = stats.collection_prob(&t);
                if p <= 0.0 {
                    return Err(Error::UnknownTerm(t));
                }
                out.push((t, 1.0 / p));
            }
            out
        }
        Strategy::Combination => {
            let n_docs = stats.num_questions() as f64;
            let mut out = Vec::with_capacity(counts.len());
            for (t, n) in counts {
                let df = stats.doc_freq(&t);
                if df == 0 {
                    return Err(Error::UnknownTerm(t));
                }
                // df == N gives log 1 = 0: excluded from the support.
                out.push((t, n as f64 * (n_docs / df as f64).ln()));
            }
            out
        }
    };
    Ok(weights)
}

fn token_refs(q: &Question) -> Vec<&str> {
    q.tokens.iter().map(String::as_str).collect()
}

/// P(t|q) proportional to the within-question frequency of non-opener units.
pub fn popular_dist(q: &Question) -> Result<TermDistribution> {
    // Strategy needs no stats; an empty stats object would do, but keep the
    // path uniform with a throwaway lookup-free branch.
    let mut counts: Vec<(String, f64)> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for t in &q.tokens {
        if corpus::is_opener(t) {
            continue;
        }
        match index.get(t.as_str()) {
            Some(&i) => counts[i].1 += 1.0,
            None => {
                index.insert(t, counts.len());
                counts.push((t.clone(), 1.0));
            }
        }
    }
    TermDistribution::from_weights(counts, &q.id)
}

/// P(t|q) proportional to 1 / P_collection(t) over distinct non-opener units.
pub fn discriminative_dist(q: &Question, stats: &CorpusStats) -> Result<TermDistribution> {
    let weights = strategy_weights(&token_refs(q), stats, Strategy::Discriminative)?;
    TermDistribution::from_weights(weights, &q.id)
}

/// P(t|q) proportional to n(t,q) * log(N / df(t)).
pub fn combination_dist(q: &Question, stats: &CorpusStats) -> Result<TermDistribution> {
    let weights = strategy_weights(&token_refs(q), stats, Strategy::Combination)?;
    TermDistribution::from_weights(weights, &q.id)
}

pub fn strategy_dist(q: &Question, stats: &CorpusStats, strategy: Strategy) -> Result<TermDistribution> {
    match strategy {
        Strategy::Popular => popular_dist(q),
        _ => {
            let weights = strategy_weights(&token_refs(q), stats, strategy)?;
            TermDistribution::from_weights(weights, &q.id)
        }
    }
}

/// Collection model restricted to non-opener terms, renormalized.
/// Entries sorted by term for deterministic iteration.
fn collection_weights(stats: &CorpusStats) -> Vec<(String, f64)> {
    let mut terms: Vec<(String, f64)> = stats
        .vocabulary()
        .filter(|t| !corpus::is_opener(t))
        .map(|t| (t.to_string(), stats.term_freq(t) as f64))
        .collect();
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    let total: f64 = terms.iter().map(|(_, w)| *w).sum();
    if total > 0.0 {
        for (_, w) in &mut terms {
            *w /= total;
        }
    }
    terms
}

/// Mix sparse strategy components with an optional collection component.
/// Component weight vectors must each be normalized distributions.
fn mix_components(
    components: &[(f64, &TermDistribution)],
    collection_weight: f64,
    collection: &[(String, f64)],
    origin: &str,
) -> Result<TermDistribution> {
    let mut acc: HashMap<&str, f64> = HashMap::new();
    for (w, dist) in components {
        if *w == 0.0 {
            continue;
        }
        for (t, p) in dist.entries() {
            *acc.entry(t.as_str()).or_insert(0.0) += w * p;
        }
    }
    let mut weights: Vec<(String, f64)>;
    if collection_weight > 0.0 {
        weights = Vec::with_capacity(collection.len());
        for (t, p) in collection {
            let extra = acc.remove(t.as_str()).unwrap_or(0.0);
            weights.push((t.clone(), collection_weight * p + extra));
        }
        // Strategy terms absent from the collection vocabulary (possible when
        // distributions come from a differently-merged corpus).
        let mut rest: Vec<(String, f64)> =
            acc.into_iter().map(|(t, w)| (t.to_string(), w)).collect();
        rest.sort_by(|a, b| a.0.cmp(&b.0));
        weights.extend(rest);
    } else {
        weights = acc.into_iter().map(|(t, w)| (t.to_string(), w)).collect();
        weights.sort_by(|a, b| a.0.cmp(&b.0));
    }
    TermDistribution::from_weights(weights, origin)
}

/// Two-component mixture: (1-lambda) strategy(q) + lambda collection, over the
/// opener-excluded vocabulary.
pub fn baseline_mixture(
    q: &Question,
    stats: &CorpusStats,
    lambda: f64,
    strategy: Strategy,
) -> Result<TermDistribution> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be in [0,1], got {lambda}"
        )));
    }
    let question_part = strategy_dist(q, stats, strategy)?;
    if lambda == 0.0 {
        return Ok(question_part);
    }
    let collection = collection_weights(stats);
    mix_components(&[(1.0 - lambda, &question_part)], lambda, &collection, &q.id)
}

/// Three-component mixture: alpha strategy(q) + beta strategy(paraphrases) +
/// (1-alpha-beta) collection. `paraphrases` excludes q itself; when empty,
/// the beta mass folds into the collection component.
pub fn paraphrase_mixture(
    q: &Question,
    paraphrases: &[&Question],
    stats: &CorpusStats,
    alpha: f64,
    beta: f64,
    strategy: Strategy,
) -> Result<TermDistribution> {
    if alpha < 0.0 || beta < 0.0 || alpha + beta > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "alpha, beta must be >= 0 with alpha+beta <= 1, got {alpha}, {beta}"
        )));
    }
    let question_part = strategy_dist(q, stats, strategy)?;
    let (beta, cluster_part) = if paraphrases.is_empty() {
        (0.0, None)
    } else {
        // All paraphrases concatenated into one large document.
        let tokens: Vec<&str> = paraphrases
            .iter()
            .flat_map(|p| p.tokens.iter().map(String::as_str))
            .collect();
        let weights = strategy_weights(&tokens, stats, strategy)?;
        (beta, Some(TermDistribution::from_weights(weights, &q.id)?))
    };
    let collection_weight = 1.0 - alpha - beta;
    let mut components: Vec<(f64, &TermDistribution)> = vec![(alpha, &question_part)];
    if let Some(ref c) = cluster_part {
        components.push((beta, c));
    }
    if collection_weight > 1e-15 {
        let collection = collection_weights(stats);
        mix_components(&components, collection_weight, &collection, &q.id)
    } else {
        mix_components(&components, 0.0, &[], &q.id)
    }
}

/// Stable per-question seed derived from the global seed and the question id,
/// so parallel generation is reproducible and order-independent.
pub fn per_question_seed(global_seed: u64, question_id: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(global_seed.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(question_id.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// One sampled keyword, with a flag set when the distribution's support ran
/// out before the drawn length was reached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledQuery {
    pub query: KeywordQuery,
    pub truncated: bool,
}

fn sample_length(q_len: usize, prior: &LengthPrior, rng: &mut ChaCha8Rng) -> usize {
    let restricted: Vec<(usize, f64)> = prior
        .probs()
        .iter()
        .filter(|(&s, _)| s < q_len)
        .map(|(&s, &p)| (s, p))
        .collect();
    let total: f64 = restricted.iter().map(|(_, p)| *p).sum();
    if total <= 0.0 {
        return q_len.saturating_sub(1).max(1);
    }
    let u = Uniform::new(0.0, total).sample(rng);
    let mut cum = 0.0;
    for (s, p) in &restricted {
        cum += p;
        if u < cum {
            return *s;
        }
    }
    restricted.last().unwrap().0
}

fn sample_with_rng(
    q: &Question,
    dist: &TermDistribution,
    prior: &LengthPrior,
    rng: &mut ChaCha8Rng,
) -> Result<SampledQuery> {
    if dist.entries().is_empty() {
        return Err(Error::NoData(format!(
            "empty term distribution for question `{}`",
            q.id
        )));
    }
    let target_len = sample_length(q.tokens.len(), prior, rng);
    let mut weights: Vec<f64> = dist.entries().iter().map(|(_, p)| *p).collect();
    let mut tokens: Vec<String> = Vec::with_capacity(target_len);
    for _ in 0..target_len {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            break;
        }
        let u = Uniform::new(0.0, total).sample(rng);
        let mut cum = 0.0;
        let mut picked = None;
        for (i, w) in weights.iter().enumerate() {
            if *w <= 0.0 {
                continue;
            }
            cum += w;
            if u < cum {
                picked = Some(i);
                break;
            }
        }
        // Float accumulation may land exactly on the total; fall back to the
        // last positive-mass entry.
        let idx = match picked {
            Some(i) => i,
            None => match weights.iter().rposition(|w| *w > 0.0) {
                Some(i) => i,
                None => break,
            },
        };
        tokens.push(dist.entries()[idx].0.clone());
        weights[idx] = 0.0;
    }
    let truncated = tokens.len() < target_len;
    Ok(SampledQuery {
        query: KeywordQuery {
            tokens,
            source_question_id: q.id.clone(),
        },
        truncated,
    })
}

/// Sample one keyword query for `q` from `dist` under the length prior.
/// Deterministic for a fixed seed.
pub fn sample_query(
    q: &Question,
    dist: &TermDistribution,
    prior: &LengthPrior,
    rng_seed: u64,
) -> Result<SampledQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    sample_with_rng(q, dist, prior, &mut rng)
}

/// The candidate keywords generated for one question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub question_id: String,
    /// Deduplicated, in generation order; at most m entries.
    pub candidates: Vec<KeywordQuery>,
}

fn build_dist_for(
    q: &Question,
    corpus: &QuestionCorpus,
    stats: &CorpusStats,
    config: &GenerationConfig,
    collection: &[(String, f64)],
) -> Result<TermDistribution> {
    match config.model {
        ModelKind::Baseline => {
            let question_part = strategy_dist(q, stats, config.strategy)?;
            if config.lambda == 0.0 {
                Ok(question_part)
            } else {
                mix_components(
                    &[(1.0 - config.lambda, &question_part)],
                    config.lambda,
                    collection,
                    &q.id,
                )
            }
        }
        ModelKind::Paraphrase => {
            let paraphrases = corpus.paraphrases_of(q);
            paraphrase_mixture(q, &paraphrases, stats, config.alpha, config.beta, config.strategy)
        }
    }
}

/// Generate m candidate keywords for every question in the corpus. Questions
/// whose distribution cannot be built are skipped with a log entry, never
/// aborting the batch. Output is ordered by question id and byte-stable for a
/// fixed global seed.
pub fn generate_pairs(
    corpus: &QuestionCorpus,
    stats: &CorpusStats,
    config: &GenerationConfig,
    prior: &LengthPrior,
) -> Result<Vec<CandidateSet>> {
    config.validate()?;
    let needs_collection = match config.model {
        ModelKind::Baseline => config.lambda > 0.0,
        ModelKind::Paraphrase => config.alpha + config.beta < 1.0 - 1e-15,
    };
    let collection = if needs_collection {
        Arc::new(collection_weights(stats))
    } else {
        Arc::new(Vec::new())
    };

    let sets: Vec<CandidateSet> = corpus
        .questions()
        .par_iter()
        .filter_map(|q| {
            let dist = match build_dist_for(q, corpus, stats, config, &collection) {
                Ok(d) => d,
                Err(e) => {
                    log::warn!("skipping question `{}`: {e}", q.id);
                    return None;
                }
            };
            let mut rng = ChaCha8Rng::seed_from_u64(per_question_seed(config.global_seed, &q.id));
            let mut seen: HashSet<Vec<String>> = HashSet::new();
            let mut candidates = Vec::new();
            for _ in 0..config.candidates_per_question {
                match sample_with_rng(q, &dist, prior, &mut rng) {
                    Ok(sampled) => {
                        if sampled.query.tokens.is_empty() {
                            continue;
                        }
                        if seen.insert(sampled.query.tokens.clone()) {
                            candidates.push(sampled.query);
                        }
                    }
                    Err(e) => {
                        log::warn!("sampling failed for `{}`: {e}", q.id);
                        return None;
                    }
                }
            }
            Some(CandidateSet {
                question_id: q.id.clone(),
                candidates,
            })
        })
        .collect();
    Ok(sets)
}
