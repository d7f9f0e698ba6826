//! Positional inverted index over questions with Sequential Dependence Model
//! scoring and top-N search.
//!
//! SDM combines three Dirichlet-smoothed feature classes per query: unigrams,
//! ordered (exactly adjacent) keyword bigrams, and unordered co-occurrence of
//! keyword bigrams within a fixed window. Features the collection has never
//! seen contribute nothing (their background model is undefined).

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{KeywordQuery, QuestionCorpus};
use crate::{Error, Result};

const INDEX_MAGIC: &[u8; 8] = b"K2QIDX01";

/// SDM feature weights and smoothing settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdmParams {
    pub w_unigram: f64,
    pub w_ordered: f64,
    pub w_unordered: f64,
    /// Dirichlet smoothing parameter.
    pub mu: f64,
    /// Width in tokens of the unordered co-occurrence window.
    pub unordered_window: usize,
}

impl Default for SdmParams {
    fn default() -> Self {
        SdmParams {
            w_unigram: 0.85,
            w_ordered: 0.10,
            w_unordered: 0.05,
            mu: 2500.0,
            unordered_window: 8,
        }
    }
}

impl SdmParams {
    pub fn validate(&self) -> Result<()> {
        let sum = self.w_unigram + self.w_ordered + self.w_unordered;
        if self.w_unigram < 0.0 || self.w_ordered < 0.0 || self.w_unordered < 0.0 {
            return Err(Error::InvalidParameter("SDM weights must be >= 0".into()));
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "SDM weights must sum to 1, got {sum}"
            )));
        }
        if self.mu <= 0.0 {
            return Err(Error::InvalidParameter("mu must be > 0".into()));
        }
        if self.unordered_window < 2 {
            return Err(Error::InvalidParameter(
                "unordered window must be >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// Ranked retrieval result, descending score, ties broken by ascending id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub entries: Vec<(String, f64)>,
}

impl RankedList {
    /// 1-based rank of a question in the list, if present.
    pub fn rank_of(&self, question_id: &str) -> Option<usize> {
        self.entries
            .iter()
            .position(|(id, _)| id == question_id)
            .map(|p| p + 1)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }
}

#[derive(Serialize, Deserialize)]
struct IndexPayload {
    doc_ids: Vec<String>,
    doc_tokens: Vec<Vec<u32>>,
    term_names: Vec<String>,
    postings: Vec<Vec<(u32, Vec<u32>)>>,
    term_cf: Vec<u64>,
    total_terms: u64,
}

/// Immutable positional inverted index.
pub struct InvertedIndex {
    /// Question ids, sorted ascending; positions here are doc indices.
    doc_ids: Vec<String>,
    doc_tokens: Vec<Vec<u32>>,
    id_to_idx: HashMap<String, u32>,
    term_ids: HashMap<String, u32>,
    term_names: Vec<String>,
    /// Per term id: (doc index, positions ascending), doc indices ascending.
    postings: Vec<Vec<(u32, Vec<u32>)>>,
    term_cf: Vec<u64>,
    total_terms: u64,
}

/// Build the index over the whole corpus.
pub fn build_index(corpus: &QuestionCorpus) -> Result<InvertedIndex> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut term_ids: HashMap<String, u32> = HashMap::new();
    let mut term_names: Vec<String> = Vec::new();
    let mut doc_ids = Vec::with_capacity(corpus.len());
    let mut doc_tokens = Vec::with_capacity(corpus.len());
    let mut postings: Vec<Vec<(u32, Vec<u32>)>> = Vec::new();
    let mut term_cf: Vec<u64> = Vec::new();
    let mut total_terms = 0u64;

    // Corpus iteration order is sorted by question id already.
    for (doc_idx, q) in corpus.iter().enumerate() {
        let doc_idx = doc_idx as u32;
        doc_ids.push(q.id.clone());
        let mut tokens = Vec::with_capacity(q.tokens.len());
        for (pos, t) in q.tokens.iter().enumerate() {
            let tid = *term_ids.entry(t.clone()).or_insert_with(|| {
                term_names.push(t.clone());
                postings.push(Vec::new());
                term_cf.push(0);
                (term_names.len() - 1) as u32
            });
            tokens.push(tid);
            term_cf[tid as usize] += 1;
            total_terms += 1;
            let plist = &mut postings[tid as usize];
            match plist.last_mut() {
                Some((d, positions)) if *d == doc_idx => positions.push(pos as u32),
                _ => plist.push((doc_idx, vec![pos as u32])),
            }
        }
        doc_tokens.push(tokens);
    }
    let id_to_idx = doc_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i as u32))
        .collect();
    Ok(InvertedIndex {
        doc_ids,
        doc_tokens,
        id_to_idx,
        term_ids,
        term_names,
        postings,
        term_cf,
        total_terms,
    })
}

/// Resolved query features with their collection frequencies. Features the
/// collection never saw are dropped.
struct QueryFeatures {
    unigrams: Vec<(u32, u64)>,
    ordered: Vec<((u32, u32), u64)>,
    unordered: Vec<((u32, u32), u64)>,
}

fn ordered_pair_count(pa: &[u32], pb: &[u32]) -> u64 {
    // Exact adjacency: position of b equals position of a plus one.
    let mut count = 0;
    let mut j = 0;
    for &a in pa {
        while j < pb.len() && pb[j] < a + 1 {
            j += 1;
        }
        if j < pb.len() && pb[j] == a + 1 {
            count += 1;
        }
    }
    count
}

fn unordered_pair_count(pa: &[u32], pb: &[u32], window: usize) -> u64 {
    // Number of position pairs with |pa - pb| < window.
    let w = window as i64;
    let mut count = 0;
    for &a in pa {
        for &b in pb {
            if (a as i64 - b as i64).abs() < w {
                count += 1;
            }
        }
    }
    count
}

impl InvertedIndex {
    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn total_terms(&self) -> u64 {
        self.total_terms
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn contains_doc(&self, question_id: &str) -> bool {
        self.id_to_idx.contains_key(question_id)
    }

    /// Token sequence of an indexed question.
    pub fn doc_tokens(&self, question_id: &str) -> Option<Vec<String>> {
        let &idx = self.id_to_idx.get(question_id)?;
        Some(
            self.doc_tokens[idx as usize]
                .iter()
                .map(|&tid| self.term_names[tid as usize].clone())
                .collect(),
        )
    }

    pub fn term_collection_freq(&self, term: &str) -> u64 {
        self.term_ids
            .get(term)
            .map(|&tid| self.term_cf[tid as usize])
            .unwrap_or(0)
    }

    fn postings_of(&self, tid: u32) -> &[(u32, Vec<u32>)] {
        &self.postings[tid as usize]
    }

    /// Collection frequency of a bigram feature, computed by intersecting the
    /// two postings lists and counting matches per co-occurring document.
    fn bigram_collection_freq(&self, a: u32, b: u32, window: Option<usize>) -> u64 {
        let pa = self.postings_of(a);
        let pb = self.postings_of(b);
        let mut total = 0;
        let (mut i, mut j) = (0, 0);
        while i < pa.len() && j < pb.len() {
            match pa[i].0.cmp(&pb[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    total += match window {
                        None => ordered_pair_count(&pa[i].1, &pb[j].1),
                        Some(w) => unordered_pair_count(&pa[i].1, &pb[j].1, w),
                    };
                    i += 1;
                    j += 1;
                }
            }
        }
        total
    }

    fn prepare_query(&self, params: &SdmParams, k: &KeywordQuery) -> QueryFeatures {
        let tids: Vec<Option<u32>> = k
            .tokens
            .iter()
            .map(|t| self.term_ids.get(t).copied())
            .collect();
        let unigrams = tids
            .iter()
            .filter_map(|t| *t)
            .map(|tid| (tid, self.term_cf[tid as usize]))
            .filter(|(_, cf)| *cf > 0)
            .collect();
        let mut ordered = Vec::new();
        let mut unordered = Vec::new();
        for pair in tids.windows(2) {
            if let (Some(a), Some(b)) = (pair[0], pair[1]) {
                let cf_o = self.bigram_collection_freq(a, b, None);
                if cf_o > 0 {
                    ordered.push(((a, b), cf_o));
                }
                let cf_u = self.bigram_collection_freq(a, b, Some(params.unordered_window));
                if cf_u > 0 {
                    unordered.push(((a, b), cf_u));
                }
            }
        }
        QueryFeatures {
            unigrams,
            ordered,
            unordered,
        }
    }

    fn dirichlet_log(&self, doc_count: u64, cf: u64, doc_len: usize, mu: f64) -> f64 {
        let background = cf as f64 / self.total_terms as f64;
        ((doc_count as f64 + mu * background) / (doc_len as f64 + mu)).ln()
    }

    fn positions_in_doc(tokens: &[u32], tid: u32) -> Vec<u32> {
        tokens
            .iter()
            .enumerate()
            .filter(|(_, &t)| t == tid)
            .map(|(i, _)| i as u32)
            .collect()
    }

    fn score_doc(&self, doc_idx: u32, params: &SdmParams, features: &QueryFeatures) -> f64 {
        let tokens = &self.doc_tokens[doc_idx as usize];
        let len = tokens.len();
        let mut score = 0.0;
        for &(tid, cf) in &features.unigrams {
            let tf = tokens.iter().filter(|&&t| t == tid).count() as u64;
            score += params.w_unigram * self.dirichlet_log(tf, cf, len, params.mu);
        }
        for &((a, b), cf) in &features.ordered {
            let pa = Self::positions_in_doc(tokens, a);
            let pb = Self::positions_in_doc(tokens, b);
            let count = ordered_pair_count(&pa, &pb);
            score += params.w_ordered * self.dirichlet_log(count, cf, len, params.mu);
        }
        for &((a, b), cf) in &features.unordered {
            let pa = Self::positions_in_doc(tokens, a);
            let pb = Self::positions_in_doc(tokens, b);
            let count = unordered_pair_count(&pa, &pb, params.unordered_window);
            score += params.w_unordered * self.dirichlet_log(count, cf, len, params.mu);
        }
        score
    }

    /// SDM score of one keyword query against one indexed document.
    pub fn sdm_score(&self, params: &SdmParams, k: &KeywordQuery, doc_id: &str) -> Result<f64> {
        params.validate()?;
        let &idx = self
            .id_to_idx
            .get(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))?;
        let features = self.prepare_query(params, k);
        Ok(self.score_doc(idx, params, &features))
    }

    /// Candidate documents: every doc containing at least one query term.
    fn candidate_docs(&self, features: &QueryFeatures) -> Vec<u32> {
        let mut docs: Vec<u32> = features
            .unigrams
            .iter()
            .flat_map(|&(tid, _)| self.postings_of(tid).iter().map(|(d, _)| *d))
            .collect();
        docs.sort_unstable();
        docs.dedup();
        docs
    }

    /// Top-N documents by SDM score; ties broken by ascending question id.
    /// Documents matching no query term are excluded.
    pub fn search(&self, params: &SdmParams, k: &KeywordQuery, top_n: usize) -> RankedList {
        debug_assert!(top_n >= 1);
        let features = self.prepare_query(params, k);
        let mut scored: Vec<(u32, f64)> = self
            .candidate_docs(&features)
            .into_iter()
            .map(|d| (d, self.score_doc(d, params, &features)))
            .collect();
        // Doc indices ascend with ids, so index order is the tie-break order.
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        scored.truncate(top_n);
        RankedList {
            entries: scored
                .into_iter()
                .map(|(d, s)| (self.doc_ids[d as usize].clone(), s))
                .collect(),
        }
    }

    /// The retrieval baseline answer: the rank-1 question for the keyword,
    /// or None when no indexed term matches.
    pub fn sdm_baseline_answer(&self, params: &SdmParams, k: &KeywordQuery) -> Option<String> {
        self.search(params, k, 1)
            .entries
            .first()
            .map(|(id, _)| id.clone())
    }

    /// Content hash over the indexed documents; stored in saved index files
    /// and verified on load.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        for (id, tokens) in self.doc_ids.iter().zip(&self.doc_tokens) {
            hasher.update(id.as_bytes());
            hasher.update([0]);
            for &tid in tokens {
                hasher.update(self.term_names[tid as usize].as_bytes());
                hasher.update([1]);
            }
            hasher.update([2]);
        }
        hasher.finalize().into()
    }

    /// Persist as a versioned binary file: magic header, content hash, then
    /// the serialized payload.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let payload = IndexPayload {
            doc_ids: self.doc_ids.clone(),
            doc_tokens: self.doc_tokens.clone(),
            term_names: self.term_names.clone(),
            postings: self.postings.clone(),
            term_cf: self.term_cf.clone(),
            total_terms: self.total_terms,
        };
        let body = serde_json::to_vec(&payload).map_err(|e| Error::Config(e.to_string()))?;
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(INDEX_MAGIC).map_err(|e| Error::io(path, e))?;
        file.write_all(&self.content_hash())
            .map_err(|e| Error::io(path, e))?;
        file.write_all(&body).map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Load a saved index, verifying magic and content hash.
    pub fn load(path: impl AsRef<Path>) -> Result<InvertedIndex> {
        let path = path.as_ref();
        let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut magic = [0u8; 8];
        file.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
        if &magic != INDEX_MAGIC {
            return Err(Error::Config(format!(
                "{} is not an index file (bad magic)",
                path.display()
            )));
        }
        let mut stored_hash = [0u8; 32];
        file.read_exact(&mut stored_hash)
            .map_err(|e| Error::io(path, e))?;
        let mut body = Vec::new();
        file.read_to_end(&mut body).map_err(|e| Error::io(path, e))?;
        let payload: IndexPayload =
            serde_json::from_slice(&body).map_err(|e| Error::Config(e.to_string()))?;
        let id_to_idx = payload
            .doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        let term_ids = payload
            .term_names
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let index = InvertedIndex {
            doc_ids: payload.doc_ids,
            doc_tokens: payload.doc_tokens,
            id_to_idx,
            term_ids,
            term_names: payload.term_names,
            postings: payload.postings,
            term_cf: payload.term_cf,
            total_terms: payload.total_terms,
        };
        if index.content_hash() != stored_hash {
            return Err(Error::Config(format!(
                "{} content hash mismatch: index does not match its corpus",
                path.display()
            )));
        }
        Ok(index)
    }
}
