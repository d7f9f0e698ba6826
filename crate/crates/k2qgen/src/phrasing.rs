//! Count-based phrase detection: adjacent word pairs that co-occur much more
//! often than chance are merged into single underscore-joined units, so the
//! generator can sample meaningful multi-word units whole.
//!
//! Scoring follows the discounted pointwise form
//! `total_terms * (count(a,b) - discount) / (n(a) * n(b))`; repeated passes
//! allow longer units (two passes turn `honda crf 230` into `honda_crf_230`).

use std::collections::HashMap;

use crate::corpus::{self, CorpusStats, Question, QuestionCorpus};
use crate::{Error, Result};

/// Phrase detection model: configuration plus the bigram score table filled
/// in by the latest detection pass.
#[derive(Debug, Clone)]
pub struct PhraseModel {
    pub bigram_scores: HashMap<(String, String), f64>,
    /// Discount delta subtracted from the bigram count.
    pub discount: u64,
    /// Minimum score for a pair to merge.
    pub threshold: f64,
    /// Number of merge passes.
    pub passes: usize,
}

impl Default for PhraseModel {
    fn default() -> Self {
        PhraseModel {
            bigram_scores: HashMap::new(),
            discount: 5,
            threshold: 100.0,
            passes: 2,
        }
    }
}

impl PhraseModel {
    pub fn new(discount: u64, threshold: f64, passes: usize) -> Result<Self> {
        if threshold <= 0.0 {
            return Err(Error::InvalidParameter("phrase threshold must be > 0".into()));
        }
        if passes < 1 {
            return Err(Error::InvalidParameter("phrase passes must be >= 1".into()));
        }
        Ok(PhraseModel {
            bigram_scores: HashMap::new(),
            discount,
            threshold,
            passes,
        })
    }

    /// Dump the score table as TSV `(term_a, term_b, score)`, sorted.
    pub fn write_tsv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        let mut rows: Vec<(&(String, String), &f64)> = self.bigram_scores.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        for ((a, b), score) in rows {
            writeln!(w, "{a}\t{b}\t{score}")?;
        }
        Ok(())
    }
}

/// Score one adjacent pair. Negative numerators clamp to 0.
pub fn score_bigram(
    stats: &CorpusStats,
    a: &str,
    b: &str,
    bigram_count: u64,
    discount: u64,
) -> Result<f64> {
    let na = stats.term_freq(a);
    let nb = stats.term_freq(b);
    if na == 0 {
        return Err(Error::UnknownTerm(a.to_string()));
    }
    if nb == 0 {
        return Err(Error::UnknownTerm(b.to_string()));
    }
    if bigram_count <= discount {
        return Ok(0.0);
    }
    let numer = (bigram_count - discount) as f64;
    Ok(stats.total_terms() as f64 * numer / (na as f64 * nb as f64))
}

/// Count adjacent pairs over the corpus. Pairs involving a question opener
/// are never counted: openers do not participate in phrases.
fn count_bigrams(corpus: &QuestionCorpus) -> HashMap<(String, String), u64> {
    let mut counts: HashMap<(String, String), u64> = HashMap::new();
    for q in corpus.iter() {
        for pair in q.tokens.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if corpus::is_opener(a) || corpus::is_opener(b) {
                continue;
            }
            *counts.entry((a.clone(), b.clone())).or_insert(0) += 1;
        }
    }
    counts
}

fn merge_question(q: &Question, scores: &HashMap<(String, String), f64>, threshold: f64) -> Question {
    let mut merged: Vec<String> = Vec::with_capacity(q.tokens.len());
    let mut i = 0;
    while i < q.tokens.len() {
        if i + 1 < q.tokens.len() {
            let key = (q.tokens[i].clone(), q.tokens[i + 1].clone());
            if scores.get(&key).copied().unwrap_or(0.0) >= threshold {
                merged.push(format!("{}_{}", q.tokens[i], q.tokens[i + 1]));
                i += 2;
                continue;
            }
        }
        merged.push(q.tokens[i].clone());
        i += 1;
    }
    Question {
        id: q.id.clone(),
        cluster_id: q.cluster_id.clone(),
        tokens: merged,
        raw_text: q.raw_text.clone(),
    }
}

/// Run `model.passes` merge passes over the corpus. Each pass recounts
/// statistics over the current token sequences, scores all adjacent pairs,
/// and greedily merges left-to-right, non-overlapping, any pair scoring at
/// least the threshold. The input corpus is untouched; the model's score
/// table holds the scores of the final pass.
pub fn detect_phrases(corpus: &QuestionCorpus, model: &mut PhraseModel) -> Result<QuestionCorpus> {
    let mut current = corpus.clone();
    for _ in 0..model.passes {
        if current.is_empty() {
            break;
        }
        let stats = corpus::build_stats(&current)?;
        let counts = count_bigrams(&current);
        let mut scores: HashMap<(String, String), f64> = HashMap::with_capacity(counts.len());
        for ((a, b), count) in &counts {
            let s = score_bigram(&stats, a, b, *count, model.discount)?;
            scores.insert((a.clone(), b.clone()), s);
        }
        let merged: Vec<Question> = current
            .iter()
            .map(|q| merge_question(q, &scores, model.threshold))
            .collect();
        model.bigram_scores = scores;
        current = QuestionCorpus::from_questions(merged)?;
    }
    Ok(current)
}
