//! Text-overlap metrics: LCS-based ROUGE-L, clipped n-gram ROUGE-1/2,
//! sentence-level BLEU, and the keyword-set aggregates AvgRougeL/MaxRougeL.
//!
//! ROUGE-L reports balanced F1. BLEU uses n-grams up to 4 with add-one
//! smoothing on zero match counts and a brevity penalty against the closest
//! reference length; corpus-level BLEU is the mean of sentence scores.
//! Phrase underscores are expanded before scoring, so a phrase unit counts
//! as its constituent words.

use std::collections::HashMap;

use crate::corpus::{expand_phrase_tokens, KeywordQuery};
use crate::{Error, Result};

/// Aggregated scores over a set of evaluated pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rouge_l: f64,
    pub rouge_1: f64,
    pub rouge_2: f64,
    pub bleu: f64,
    /// Number of evaluated pairs.
    pub n: usize,
}

/// Longest common subsequence length via dynamic programming.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// ROUGE-L: balanced F1 over the LCS.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> Result<f64> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(Error::InvalidParameter(
            "rouge_l requires non-empty inputs".into(),
        ));
    }
    let lcs = lcs_len(candidate, reference) as f64;
    if lcs == 0.0 {
        return Ok(0.0);
    }
    let p = lcs / candidate.len() as f64;
    let r = lcs / reference.len() as f64;
    Ok(2.0 * p * r / (p + r))
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts: HashMap<&[String], u64> = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn clipped_overlap(candidate: &[String], reference: &[String], n: usize) -> u64 {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    cand.iter()
        .map(|(gram, &c)| c.min(refs.get(gram).copied().unwrap_or(0)))
        .sum()
}

/// ROUGE-N (n = 1 or 2): F1 over clipped n-gram overlap counts.
/// A candidate shorter than n scores 0.
pub fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> Result<f64> {
    if n == 0 || n > 2 {
        return Err(Error::InvalidParameter(format!("rouge_n supports n in {{1,2}}, got {n}")));
    }
    if reference.len() < n {
        return Err(Error::InvalidParameter(
            "reference shorter than n".into(),
        ));
    }
    if candidate.len() < n {
        return Ok(0.0);
    }
    let overlap = clipped_overlap(candidate, reference, n) as f64;
    if overlap == 0.0 {
        return Ok(0.0);
    }
    let p = overlap / (candidate.len() - n + 1) as f64;
    let r = overlap / (reference.len() - n + 1) as f64;
    Ok(2.0 * p * r / (p + r))
}

/// Sentence-level BLEU against one or more references.
pub fn bleu(candidate: &[String], references: &[Vec<String>]) -> Result<f64> {
    if candidate.is_empty() {
        return Err(Error::InvalidParameter("bleu requires a non-empty candidate".into()));
    }
    if references.is_empty() {
        return Err(Error::InvalidParameter("bleu requires at least one reference".into()));
    }
    let mut log_sum = 0.0;
    let mut used = 0usize;
    for n in 1..=4 {
        let total = candidate.len().saturating_sub(n - 1);
        if total == 0 {
            // Candidate shorter than n: no n-grams at this order.
            continue;
        }
        let matched: u64 = references
            .iter()
            .map(|r| clipped_overlap(candidate, r, n))
            .max()
            .unwrap_or(0);
        let p = if matched == 0 {
            // Add-one smoothing on zero counts.
            1.0 / (total as f64 + 1.0)
        } else {
            matched as f64 / total as f64
        };
        log_sum += p.ln();
        used += 1;
    }
    let precision = (log_sum / used as f64).exp();

    // Brevity penalty against the reference length closest to the candidate;
    // ties go to the shorter reference.
    let c = candidate.len() as f64;
    let r = references
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| ((len as i64 - candidate.len() as i64).abs(), len))
        .unwrap() as f64;
    let bp = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
    Ok(precision * bp)
}

/// Mean ROUGE-L of a keyword against a set of ground-truth keywords.
pub fn avg_rouge_l(k: &KeywordQuery, gold: &[KeywordQuery]) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::NoData("empty ground-truth keyword set".into()));
    }
    let cand = k.expanded_tokens();
    let mut sum = 0.0;
    for g in gold {
        sum += rouge_l(&cand, &g.expanded_tokens())?;
    }
    Ok(sum / gold.len() as f64)
}

/// Best ROUGE-L of a keyword against a set of ground-truth keywords.
pub fn max_rouge_l(k: &KeywordQuery, gold: &[KeywordQuery]) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::NoData("empty ground-truth keyword set".into()));
    }
    let cand = k.expanded_tokens();
    let mut best = 0.0f64;
    for g in gold {
        best = best.max(rouge_l(&cand, &g.expanded_tokens())?);
    }
    Ok(best)
}

/// Score one prediction (candidate tokens) against one reference, expanding
/// phrase underscores on both sides.
pub fn score_pair(candidate: &[String], reference: &[String]) -> Result<(f64, f64, f64, f64)> {
    let cand = expand_phrase_tokens(candidate);
    let refs = expand_phrase_tokens(reference);
    let rl = rouge_l(&cand, &refs)?;
    let r1 = rouge_n(&cand, &refs, 1)?;
    let r2 = if refs.len() >= 2 {
        rouge_n(&cand, &refs, 2)?
    } else {
        0.0
    };
    let b = bleu(&cand, std::slice::from_ref(&refs))?;
    Ok((rl, r1, r2, b))
}
