//! Deterministic synthetic corpus generation for tests and demos.
//!
//! Builds a question corpus with paraphrase clusters and programmatic gold
//! keywords. Each cluster owns a small set of content words; its questions
//! are paraphrases mixing those content words with shared filler words, an
//! opener, and optionally a question-unique noise token. The gold keyword of
//! a question is its content words in question order.
//!
//! Two cluster families let experiments separate frequent from rare
//! vocabulary: "common" clusters draw content from a narrow shared pool and
//! are large; the rest draw from a wide pool and are small.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{KeywordQuery, Question, QuestionCorpus, SeedPair};
use crate::Result;

const OPENERS: &[&str] = &["what", "how", "why", "where", "when", "who"];

const FILLERS: &[&str] = &[
    "good", "best", "top", "real", "today", "now", "old", "new", "big", "small", "free", "easy",
    "fast", "full", "long", "many", "much", "part", "home", "world", "year", "day", "time", "way",
    "place", "thing", "people", "water", "life", "work", "food", "name", "kind", "side", "group",
    "fact", "case", "point", "hand", "right",
];

const SYLLABLES: &[&str] = &[
    "ba", "be", "bo", "da", "du", "ka", "ko", "la", "lu", "ma", "mi", "na", "no", "ra", "ri", "sa",
    "so", "ta", "tu", "vo",
];

/// Pronounceable pseudo-word for content index `i`, distinct from all fillers.
pub fn content_word(i: usize) -> String {
    let b = SYLLABLES.len();
    let mut word = String::new();
    let mut rest = i;
    for _ in 0..3 {
        word.push_str(SYLLABLES[rest % b]);
        rest /= b;
    }
    word
}

#[derive(Debug, Clone)]
pub struct FixtureConfig {
    pub clusters: usize,
    /// Fraction of clusters drawing content from the narrow common pool.
    pub common_cluster_fraction: f64,
    /// Size range (inclusive) of common clusters.
    pub common_cluster_size: (usize, usize),
    /// Size range (inclusive) of the remaining clusters.
    pub rare_cluster_size: (usize, usize),
    /// Wide content pool size.
    pub content_vocab: usize,
    /// Narrow content pool size used by common clusters.
    pub common_vocab: usize,
    /// Filler words added per question.
    pub fillers_per_question: (usize, usize),
    /// Probability of one question-unique noise token.
    pub noise_prob: f64,
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            clusters: 500,
            common_cluster_fraction: 0.2,
            common_cluster_size: (8, 14),
            rare_cluster_size: (6, 12),
            content_vocab: 8000,
            common_vocab: 60,
            fillers_per_question: (1, 3),
            noise_prob: 0.5,
            seed: 7,
        }
    }
}

/// A generated corpus plus its programmatic gold keyword pairs.
pub struct Fixture {
    pub corpus: QuestionCorpus,
    pub seed_pairs: Vec<SeedPair>,
}

pub fn build(cfg: &FixtureConfig) -> Result<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut questions = Vec::new();
    let mut seed_pairs = Vec::new();
    let common_clusters = (cfg.clusters as f64 * cfg.common_cluster_fraction).round() as usize;

    for cluster_idx in 0..cfg.clusters {
        let cluster_id = format!("c{cluster_idx:05}");
        let is_common = cluster_idx < common_clusters;
        // Six content words per cluster; the first is the cluster's theme
        // word, repeated inside questions to carry term-frequency signal.
        let pool = if is_common {
            cfg.common_vocab
        } else {
            cfg.content_vocab
        };
        let offset = if is_common { 0 } else { cfg.common_vocab };
        let mut content: Vec<String> = (0..6)
            .map(|_| content_word(offset + rng.gen_range(0..pool)))
            .collect();
        content.sort();
        content.dedup();
        while content.len() < 4 {
            content.push(content_word(offset + rng.gen_range(0..pool)));
            content.sort();
            content.dedup();
        }

        let (lo, hi) = if is_common {
            cfg.common_cluster_size
        } else {
            cfg.rare_cluster_size
        };
        let size = rng.gen_range(lo..=hi);
        for member in 0..size {
            let qid = format!("q{cluster_idx:05}x{member:02}");
            let opener = OPENERS[rng.gen_range(0..OPENERS.len())];

            // Pick 3-4 content words for this paraphrase; repeat one.
            let take = rng.gen_range(3..=4.min(content.len()));
            let mut chosen: Vec<String> = content
                .choose_multiple(&mut rng, take)
                .cloned()
                .collect();
            chosen.shuffle(&mut rng);
            let repeat = chosen[rng.gen_range(0..chosen.len())].clone();

            let (flo, fhi) = cfg.fillers_per_question;
            let n_fillers = if fhi == 0 { 0 } else { rng.gen_range(flo..=fhi) };
            let mut body: Vec<String> = Vec::new();
            for w in &chosen {
                body.push(w.clone());
            }
            body.push(repeat);
            for _ in 0..n_fillers {
                body.push(FILLERS[rng.gen_range(0..FILLERS.len())].to_string());
            }
            if rng.gen_bool(cfg.noise_prob) {
                body.push(format!("zq{cluster_idx}m{member}"));
            }
            body.shuffle(&mut rng);
            // Keep within the 5-12 word window including the opener.
            body.truncate(11);
            while body.len() < 4 {
                body.push(FILLERS[rng.gen_range(0..FILLERS.len())].to_string());
            }

            let mut tokens = vec![opener.to_string()];
            tokens.extend(body.iter().cloned());
            let raw_text = tokens.join(" ");

            // Gold keyword: this question's content words in question order.
            let mut gold: Vec<String> = tokens
                .iter()
                .filter(|t| chosen.contains(t))
                .cloned()
                .collect();
            gold.dedup();
            gold.truncate(5);

            questions.push(Question {
                id: qid.clone(),
                cluster_id: cluster_id.clone(),
                tokens,
                raw_text,
            });
            seed_pairs.push(SeedPair {
                keyword: KeywordQuery {
                    tokens: gold,
                    source_question_id: qid.clone(),
                },
                question_id: qid,
            });
        }
    }

    let corpus = QuestionCorpus::from_questions(questions)?;
    Ok(Fixture { corpus, seed_pairs })
}

/// Write the fixture's questions as pipeline-ready JSONL.
pub fn write_questions_jsonl(fixture: &Fixture, mut w: impl std::io::Write) -> std::io::Result<()> {
    fixture.corpus.write_jsonl(&mut w)
}

/// Write the gold pairs as seed TSV (`keyword<TAB>question_id`).
pub fn write_seed_tsv(fixture: &Fixture, mut w: impl std::io::Write) -> std::io::Result<()> {
    for pair in &fixture.seed_pairs {
        writeln!(w, "{}\t{}", pair.keyword.joined(), pair.question_id)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::filter_natural_questions;

    #[test]
    fn fixture_is_deterministic_and_well_formed() {
        let cfg = FixtureConfig {
            clusters: 40,
            ..FixtureConfig::default()
        };
        let a = build(&cfg).unwrap();
        let b = build(&cfg).unwrap();
        assert_eq!(a.corpus.questions(), b.corpus.questions());
        assert_eq!(a.seed_pairs, b.seed_pairs);
        assert_eq!(a.corpus.clusters().len(), 40);

        // Every question survives the natural-question filter.
        let filtered = filter_natural_questions(&a.corpus);
        assert_eq!(filtered.len(), a.corpus.len());

        // Gold keywords have 3-5 terms drawn from their question.
        for pair in &a.seed_pairs {
            let q = a.corpus.get(&pair.question_id).unwrap();
            assert!((3..=5).contains(&pair.keyword.tokens.len()), "{:?}", pair.keyword);
            for t in &pair.keyword.tokens {
                assert!(q.tokens.contains(t));
            }
        }
    }

    #[test]
    fn content_words_never_collide_with_fillers() {
        for i in 0..10_000 {
            let w = content_word(i);
            assert!(!FILLERS.contains(&w.as_str()));
            assert!(!OPENERS.contains(&w.as_str()));
        }
    }
}
