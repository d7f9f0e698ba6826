//! Quality filters over generated keyword-question pairs.
//!
//! The keyword query filter (KQF) picks, out of the m candidates generated
//! for a question, the one that retrieves the question best (highest
//! reciprocal rank in top-N SDM search). The training data filter (TDF)
//! scores every surviving pair by retrieval precision against the question's
//! paraphrase cluster and keeps the top-L.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;

use crate::corpus::{KeywordQuery, ParaphraseCluster, Question, QuestionCorpus};
use crate::generator::CandidateSet;
use crate::index::{InvertedIndex, SdmParams};
use crate::{Error, Result};

/// A generated keyword-question pair with an optional quality score.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPair {
    pub keyword: KeywordQuery,
    pub question_id: String,
    /// Retrieval precision P(k,q) in [0,1], set by the TDF scorer.
    pub quality: Option<f64>,
}

/// An ordered set of synthetic pairs with a provenance label
/// (seed, full synthetic set, or filtered subset).
#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    pub pairs: Vec<SyntheticPair>,
    pub provenance: String,
}

impl PairSet {
    pub fn new(pairs: Vec<SyntheticPair>, provenance: impl Into<String>) -> Self {
        PairSet {
            pairs,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Reciprocal rank of `question_id` in the top-N result for `k`; 0 if absent.
pub fn reciprocal_rank(
    index: &InvertedIndex,
    params: &SdmParams,
    k: &KeywordQuery,
    question_id: &str,
    top_n: usize,
) -> f64 {
    match index.search(params, k, top_n).rank_of(question_id) {
        Some(rank) => 1.0 / rank as f64,
        None => 0.0,
    }
}

/// Select the candidate whose top-N retrieval ranks `q` best. Ties go to the
/// earliest candidate. When no candidate retrieves `q` at all, fall back to
/// the candidate with the highest direct SDM score of `q`.
pub fn kqf_select(
    q: &Question,
    candidates: &[KeywordQuery],
    index: &InvertedIndex,
    params: &SdmParams,
    top_n: usize,
) -> Option<KeywordQuery> {
    if candidates.is_empty() {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, k) in candidates.iter().enumerate() {
        let rr = reciprocal_rank(index, params, k, &q.id, top_n);
        match best {
            Some((_, best_rr)) if rr <= best_rr => {}
            _ => best = Some((i, rr)),
        }
    }
    let (best_idx, best_rr) = best?;
    if best_rr > 0.0 {
        return Some(candidates[best_idx].clone());
    }
    // All-zero reciprocal ranks: score q directly under each candidate.
    let mut direct_best: Option<(usize, f64)> = None;
    for (i, k) in candidates.iter().enumerate() {
        let score = index.sdm_score(params, k, &q.id).ok()?;
        match direct_best {
            Some((_, s)) if score <= s => {}
            _ => direct_best = Some((i, score)),
        }
    }
    direct_best.map(|(i, _)| candidates[i].clone())
}

/// Apply KQF to a whole candidate batch, producing the full synthetic set.
/// Questions with an empty candidate list are dropped with a log entry.
pub fn kqf_filter(
    sets: &[CandidateSet],
    corpus: &QuestionCorpus,
    index: &InvertedIndex,
    params: &SdmParams,
    top_n: usize,
) -> PairSet {
    let pairs: Vec<SyntheticPair> = sets
        .par_iter()
        .filter_map(|set| {
            let q = match corpus.get(&set.question_id) {
                Some(q) => q,
                None => {
                    log::warn!("candidate set references unknown question `{}`", set.question_id);
                    return None;
                }
            };
            let keyword = kqf_select(q, &set.candidates, index, params, top_n)?;
            Some(SyntheticPair {
                keyword,
                question_id: set.question_id.clone(),
                quality: None,
            })
        })
        .collect();
    PairSet::new(pairs, "T")
}

/// Retrieval precision of a pair: the fraction of the top-N results for the
/// keyword that are paraphrases of the question (the question itself
/// included). 0 when nothing is retrieved.
pub fn tdf_score(
    pair: &SyntheticPair,
    index: &InvertedIndex,
    params: &SdmParams,
    clusters: &BTreeMap<String, ParaphraseCluster>,
    corpus: &QuestionCorpus,
    top_n: usize,
) -> Result<f64> {
    let q = corpus
        .get(&pair.question_id)
        .ok_or_else(|| Error::UnknownDocument(pair.question_id.clone()))?;
    let cluster = clusters
        .get(&q.cluster_id)
        .ok_or_else(|| Error::UnknownCluster(q.cluster_id.clone()))?;
    let retrieved = index.search(params, &pair.keyword, top_n);
    if retrieved.entries.is_empty() {
        return Ok(0.0);
    }
    let members: HashSet<&str> = cluster.question_ids.iter().map(String::as_str).collect();
    let overlap = retrieved.ids().filter(|id| members.contains(id)).count();
    Ok(overlap as f64 / retrieved.entries.len() as f64)
}

/// Score every pair in the set, in parallel, preserving order.
pub fn tdf_score_all(
    pairs: &PairSet,
    index: &InvertedIndex,
    params: &SdmParams,
    clusters: &BTreeMap<String, ParaphraseCluster>,
    corpus: &QuestionCorpus,
    top_n: usize,
) -> Result<PairSet> {
    let scored: Result<Vec<SyntheticPair>> = pairs
        .pairs
        .par_iter()
        .map(|pair| {
            let quality = tdf_score(pair, index, params, clusters, corpus, top_n)?;
            Ok(SyntheticPair {
                quality: Some(quality),
                ..pair.clone()
            })
        })
        .collect();
    Ok(PairSet::new(scored?, pairs.provenance.clone()))
}

/// Keep the top-L pairs by quality, descending; ties broken by ascending
/// question id. Requires every pair to be scored.
pub fn tdf_select(pairs: &PairSet, l: usize) -> Result<PairSet> {
    let mut scored: Vec<&SyntheticPair> = Vec::with_capacity(pairs.len());
    for p in &pairs.pairs {
        if p.quality.is_none() {
            return Err(Error::InvalidParameter(format!(
                "pair for question `{}` is unscored",
                p.question_id
            )));
        }
        scored.push(p);
    }
    scored.sort_by(|a, b| {
        b.quality
            .partial_cmp(&a.quality)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.question_id.cmp(&b.question_id))
    });
    scored.truncate(l);
    Ok(PairSet::new(
        scored.into_iter().cloned().collect(),
        "T_L",
    ))
}
