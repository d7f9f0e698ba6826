//! Question corpus loading, tokenization, natural-question filtering, and
//! collection statistics.
//!
//! Input format is JSONL with one record per line:
//! `{"id": str, "cluster_id": str, "text": str}`. Seed keyword-question pairs
//! come as TSV with columns `keyword`, `question_id`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// WH words and auxiliary verbs accepted as the first token of a natural
/// language question. Also excluded from keyword sampling.
pub const QUESTION_OPENERS: &[&str] = &[
    "what", "who", "whom", "whose", "which", "where", "when", "why", "how", "is", "are", "was",
    "were", "am", "do", "does", "did", "can", "could", "will", "would", "shall", "should", "may",
    "might", "must", "has", "have", "had",
];

fn opener_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| QUESTION_OPENERS.iter().copied().collect())
}

pub fn is_opener(token: &str) -> bool {
    opener_set().contains(token)
}

/// Lowercase, strip punctuation except apostrophes inside tokens and
/// underscores (phrase joiners), split on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    lowered
        .split_whitespace()
        .filter_map(|word| {
            let kept: String = word
                .chars()
                .filter(|c| c.is_alphanumeric() || *c == '\'' || *c == '_')
                .collect();
            let trimmed = kept.trim_matches('\'');
            if trimmed.is_empty() {
                None
            } else {
                Some(trimmed.to_string())
            }
        })
        .collect()
}

/// A single natural language question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub cluster_id: String,
    /// Lowercase term units; a unit is a word or an underscore-joined phrase.
    pub tokens: Vec<String>,
    pub raw_text: String,
}

/// A paraphrase cluster: questions expressing the same information need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParaphraseCluster {
    pub cluster_id: String,
    /// Member ids, sorted.
    pub question_ids: Vec<String>,
}

/// A keyword query, tied to the question it was sampled from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KeywordQuery {
    pub tokens: Vec<String>,
    pub source_question_id: String,
}

impl KeywordQuery {
    /// Internal form: underscore-joined phrase units, space-separated.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }

    /// User-facing surface form: phrase underscores expanded to spaces.
    pub fn surface(&self) -> String {
        self.expanded_tokens().join(" ")
    }

    /// Tokens with phrase units split back into their constituent words.
    pub fn expanded_tokens(&self) -> Vec<String> {
        expand_phrase_tokens(&self.tokens)
    }
}

/// Split underscore-joined phrase units into their constituent words.
pub fn expand_phrase_tokens(tokens: &[String]) -> Vec<String> {
    tokens
        .iter()
        .flat_map(|t| t.split('_'))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// One hand-labeled keyword-question pair from the seed set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedPair {
    pub keyword: KeywordQuery,
    pub question_id: String,
}

#[derive(Debug, Deserialize, Serialize)]
struct QuestionRecord {
    id: String,
    cluster_id: String,
    text: String,
}

/// Tokenized questions grouped into paraphrase clusters, ordered by id.
#[derive(Debug, Clone, Default)]
pub struct QuestionCorpus {
    questions: Vec<Question>,
    by_id: HashMap<String, usize>,
}

impl QuestionCorpus {
    /// Build a corpus from already-tokenized questions. Questions are sorted
    /// by id; duplicate ids are an integrity error.
    pub fn from_questions(mut questions: Vec<Question>) -> Result<Self> {
        questions.sort_by(|a, b| a.id.cmp(&b.id));
        let mut by_id = HashMap::with_capacity(questions.len());
        for (idx, q) in questions.iter().enumerate() {
            if by_id.insert(q.id.clone(), idx).is_some() {
                return Err(Error::DuplicateId(q.id.clone()));
            }
        }
        Ok(QuestionCorpus { questions, by_id })
    }

    /// Load questions from a JSONL file, applying tokenization.
    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut questions = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            // `#` lines carry artifact provenance headers.
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let rec: QuestionRecord =
                serde_json::from_str(&line).map_err(|e| Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: e.to_string(),
                })?;
            let tokens = tokenize(&rec.text);
            if tokens.is_empty() {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("question `{}` has no tokens after normalization", rec.id),
                });
            }
            questions.push(Question {
                id: rec.id,
                cluster_id: rec.cluster_id,
                tokens,
                raw_text: rec.text,
            });
        }
        Self::from_questions(questions)
    }

    /// Write the corpus back out as JSONL (tokenized text, space-joined).
    pub fn write_jsonl(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        for q in &self.questions {
            let rec = QuestionRecord {
                id: q.id.clone(),
                cluster_id: q.cluster_id.clone(),
                text: q.tokens.join(" "),
            };
            serde_json::to_writer(&mut w, &rec)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Question> {
        self.by_id.get(id).map(|&i| &self.questions[i])
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn iter(&self) -> impl Iterator<Item = &Question> {
        self.questions.iter()
    }

    /// Paraphrase clusters, keyed by cluster id.
    pub fn clusters(&self) -> BTreeMap<String, ParaphraseCluster> {
        let mut map: BTreeMap<String, ParaphraseCluster> = BTreeMap::new();
        for q in &self.questions {
            map.entry(q.cluster_id.clone())
                .or_insert_with(|| ParaphraseCluster {
                    cluster_id: q.cluster_id.clone(),
                    question_ids: Vec::new(),
                })
                .question_ids
                .push(q.id.clone());
        }
        map
    }

    /// Other members of `q`'s paraphrase cluster, excluding `q` itself.
    pub fn paraphrases_of(&self, q: &Question) -> Vec<&Question> {
        self.questions
            .iter()
            .filter(|p| p.cluster_id == q.cluster_id && p.id != q.id)
            .collect()
    }
}

/// Keep only questions that start with a question opener and consist of 5-12
/// terms. Applies to pre-phrase-merge token counts. Clusters emptied by the
/// filter disappear with their members.
pub fn filter_natural_questions(corpus: &QuestionCorpus) -> QuestionCorpus {
    let kept: Vec<Question> = corpus
        .iter()
        .filter(|q| {
            let n = q.tokens.len();
            (5..=12).contains(&n) && is_opener(&q.tokens[0])
        })
        .cloned()
        .collect();
    // Ids were unique in the input, so rebuilding cannot fail.
    QuestionCorpus::from_questions(kept).expect("filtered corpus keeps unique ids")
}

/// Collection statistics: term frequencies n(t), document frequencies df(t),
/// corpus size N, and the vocabulary V. Immutable once built.
#[derive(Debug, Clone)]
pub struct CorpusStats {
    term_freq: HashMap<String, u64>,
    doc_freq: HashMap<String, u64>,
    total_terms: u64,
    num_questions: u64,
}

impl CorpusStats {
    pub fn term_freq(&self, t: &str) -> u64 {
        self.term_freq.get(t).copied().unwrap_or(0)
    }

    pub fn doc_freq(&self, t: &str) -> u64 {
        self.doc_freq.get(t).copied().unwrap_or(0)
    }

    pub fn total_terms(&self) -> u64 {
        self.total_terms
    }

    pub fn num_questions(&self) -> u64 {
        self.num_questions
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.term_freq.keys().map(String::as_str)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.term_freq.len()
    }

    /// Collection language model probability n(t) / total; 0 for unseen terms.
    pub fn collection_prob(&self, t: &str) -> f64 {
        if self.total_terms == 0 {
            return 0.0;
        }
        self.term_freq(t) as f64 / self.total_terms as f64
    }
}

/// Compute collection statistics over the (possibly phrase-merged) corpus.
pub fn build_stats(corpus: &QuestionCorpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut term_freq: HashMap<String, u64> = HashMap::new();
    let mut doc_freq: HashMap<String, u64> = HashMap::new();
    let mut total = 0u64;
    for q in corpus.iter() {
        let mut seen: HashSet<&str> = HashSet::new();
        for t in &q.tokens {
            *term_freq.entry(t.clone()).or_insert(0) += 1;
            total += 1;
            if seen.insert(t) {
                *doc_freq.entry(t.clone()).or_insert(0) += 1;
            }
        }
    }
    Ok(CorpusStats {
        term_freq,
        doc_freq,
        total_terms: total,
        num_questions: corpus.len() as u64,
    })
}

/// Load seed pairs from TSV (`keyword<TAB>question_id`), validating that each
/// question id resolves in the given seed corpus.
pub fn load_seed_pairs(path: impl AsRef<Path>, seed_corpus: &QuestionCorpus) -> Result<Vec<SeedPair>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut pairs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut cols = trimmed.split('\t');
        let (keyword, question_id) = match (cols.next(), cols.next()) {
            (Some(k), Some(q)) if !k.is_empty() && !q.is_empty() => (k, q),
            _ => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: "expected two tab-separated columns: keyword, question_id".into(),
                })
            }
        };
        if seed_corpus.get(question_id).is_none() {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("question id `{question_id}` not present in seed corpus"),
            });
        }
        pairs.push(SeedPair {
            keyword: KeywordQuery {
                tokens: tokenize(keyword),
                source_question_id: question_id.to_string(),
            },
            question_id: question_id.to_string(),
        });
    }
    Ok(pairs)
}
