//! Pipeline configuration: flat `key = value` files with dotted section
//! prefixes (`gen.lambda = 0.3`), plus a content hash stamped into every
//! artifact header so outputs are traceable to the exact settings that
//! produced them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::experiments::GridSpec;
use crate::generator::{GenerationConfig, ModelKind, Strategy};
use crate::index::SdmParams;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Raw question corpus (JSONL).
    pub corpus_path: PathBuf,
    /// Seed keyword-question pairs (TSV).
    pub seed_path: PathBuf,
    pub gen: GenerationConfig,
    pub sdm: SdmParams,
    pub phrase_discount: u64,
    pub phrase_threshold: f64,
    pub phrase_passes: usize,
    /// Retrieval depth N of the KQF and TDF filters.
    pub filter_top_n: usize,
    /// Pairs kept by the TDF (L).
    pub filter_l: usize,
    pub cv_folds: usize,
    pub cv_repeats: usize,
    pub grid: GridSpec,
    /// Coverage curve resolution.
    pub coverage_steps: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus_path: PathBuf::from("questions.jsonl"),
            seed_path: PathBuf::from("seed.tsv"),
            gen: GenerationConfig::default(),
            sdm: SdmParams::default(),
            phrase_discount: 5,
            phrase_threshold: 100.0,
            phrase_passes: 2,
            filter_top_n: 100,
            filter_l: 1000,
            cv_folds: 5,
            cv_repeats: 1,
            grid: GridSpec::default(),
            coverage_steps: 10,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid boolean `{value}` for `{key}`"
        ))),
    }
}

fn parse_list<T>(key: &str, value: &str, f: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(key, s))
        .collect()
}

impl PipelineConfig {
    /// Parse a config file. Unknown keys are rejected so typos fail loudly.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config `{}`: {e}", path.display())))?;
        let mut cfg = PipelineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected `key = value`, got `{line}`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "corpus.path" => self.corpus_path = PathBuf::from(value),
            "seed.path" => self.seed_path = PathBuf::from(value),
            "gen.strategy" => self.gen.strategy = Strategy::parse(value)?,
            "gen.model" => self.gen.model = ModelKind::parse(value)?,
            "gen.lambda" => self.gen.lambda = parse_num(key, value)?,
            "gen.alpha" => self.gen.alpha = parse_num(key, value)?,
            "gen.beta" => self.gen.beta = parse_num(key, value)?,
            "gen.use_phrases" => self.gen.use_phrases = parse_bool(key, value)?,
            "gen.candidates" => self.gen.candidates_per_question = parse_num(key, value)?,
            "gen.seed" => self.gen.global_seed = parse_num(key, value)?,
            "sdm.w_unigram" => self.sdm.w_unigram = parse_num(key, value)?,
            "sdm.w_ordered" => self.sdm.w_ordered = parse_num(key, value)?,
            "sdm.w_unordered" => self.sdm.w_unordered = parse_num(key, value)?,
            "sdm.mu" => self.sdm.mu = parse_num(key, value)?,
            "sdm.window" => self.sdm.unordered_window = parse_num(key, value)?,
            "phrase.discount" => self.phrase_discount = parse_num(key, value)?,
            "phrase.threshold" => self.phrase_threshold = parse_num(key, value)?,
            "phrase.passes" => self.phrase_passes = parse_num(key, value)?,
            "filter.top_n" => self.filter_top_n = parse_num(key, value)?,
            "filter.l" => self.filter_l = parse_num(key, value)?,
            "cv.folds" => self.cv_folds = parse_num(key, value)?,
            "cv.repeats" => self.cv_repeats = parse_num(key, value)?,
            "grid.models" => {
                self.grid.models = parse_list(key, value, |_, s| ModelKind::parse(s))?
            }
            "grid.strategies" => {
                self.grid.strategies = parse_list(key, value, |_, s| Strategy::parse(s))?
            }
            "grid.phrases" => self.grid.phrase_on = parse_list(key, value, parse_bool)?,
            "grid.lambdas" => self.grid.lambdas = parse_list(key, value, parse_num)?,
            "grid.alphas" => self.grid.alphas = parse_list(key, value, parse_num)?,
            "grid.betas" => self.grid.betas = parse_list(key, value, parse_num)?,
            "coverage.steps" => self.coverage_steps = parse_num(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.gen.validate().map_err(as_config)?;
        self.sdm.validate().map_err(as_config)?;
        if self.phrase_threshold <= 0.0 {
            return Err(Error::Config("phrase.threshold must be > 0".into()));
        }
        if self.phrase_passes == 0 {
            return Err(Error::Config("phrase.passes must be >= 1".into()));
        }
        if self.filter_top_n == 0 || self.filter_l == 0 {
            return Err(Error::Config("filter.top_n and filter.l must be >= 1".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("cv.folds must be >= 2".into()));
        }
        if self.cv_repeats == 0 {
            return Err(Error::Config("cv.repeats must be >= 1".into()));
        }
        if self.coverage_steps == 0 {
            return Err(Error::Config("coverage.steps must be >= 1".into()));
        }
        Ok(())
    }

    /// Canonical listing of every setting, used for hashing and debugging.
    pub fn canonical(&self) -> BTreeMap<String, String> {
        let fmt_f64s = |xs: &[f64]| {
            xs.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut map = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            map.insert(k.to_string(), v);
        };
        put("corpus.path", self.corpus_path.display().to_string());
        put("seed.path", self.seed_path.display().to_string());
        put("gen.strategy", self.gen.strategy.name().to_string());
        put("gen.model", self.gen.model.name().to_string());
        put("gen.lambda", self.gen.lambda.to_string());
        put("gen.alpha", self.gen.alpha.to_string());
        put("gen.beta", self.gen.beta.to_string());
        put("gen.use_phrases", self.gen.use_phrases.to_string());
        put("gen.candidates", self.gen.candidates_per_question.to_string());
        put("gen.seed", self.gen.global_seed.to_string());
        put("sdm.w_unigram", self.sdm.w_unigram.to_string());
        put("sdm.w_ordered", self.sdm.w_ordered.to_string());
        put("sdm.w_unordered", self.sdm.w_unordered.to_string());
        put("sdm.mu", self.sdm.mu.to_string());
        put("sdm.window", self.sdm.unordered_window.to_string());
        put("phrase.discount", self.phrase_discount.to_string());
        put("phrase.threshold", self.phrase_threshold.to_string());
        put("phrase.passes", self.phrase_passes.to_string());
        put("filter.top_n", self.filter_top_n.to_string());
        put("filter.l", self.filter_l.to_string());
        put("cv.folds", self.cv_folds.to_string());
        put("cv.repeats", self.cv_repeats.to_string());
        put(
            "grid.models",
            self.grid
                .models
                .iter()
                .map(|m| m.name())
                .collect::<Vec<_>>()
                .join(","),
        );
        put(
            "grid.strategies",
            self.grid
                .strategies
                .iter()
                .map(|s| s.name())
                .collect::<Vec<_>>()
                .join(","),
        );
        put(
            "grid.phrases",
            self.grid
                .phrase_on
                .iter()
                .map(|b| b.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        put("grid.lambdas", fmt_f64s(&self.grid.lambdas));
        put("grid.alphas", fmt_f64s(&self.grid.alphas));
        put("grid.betas", fmt_f64s(&self.grid.betas));
        put("coverage.steps", self.coverage_steps.to_string());
        map
    }

    /// Short hex digest of the canonical settings.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in self.canonical() {
            hasher.update(k.as_bytes());
            hasher.update([b'=']);
            hasher.update(v.as_bytes());
            hasher.update([b'\n']);
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn as_config(e: Error) -> Error {
    Error::Config(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_round_trips_every_key() {
        let f = write_config(
            "# sample\n\
             corpus.path = data/q.jsonl\n\
             seed.path = data/seed.tsv\n\
             gen.strategy = popular\n\
             gen.model = paraphrase\n\
             gen.lambda = 0.4\n\
             gen.alpha = 0.6\n\
             gen.beta = 0.2\n\
             gen.use_phrases = false\n\
             gen.candidates = 10\n\
             gen.seed = 123\n\
             sdm.mu = 1500\n\
             sdm.window = 6\n\
             phrase.discount = 3\n\
             phrase.threshold = 50\n\
             phrase.passes = 1\n\
             filter.top_n = 50\n\
             filter.l = 200\n\
             cv.folds = 4\n\
             cv.repeats = 3\n\
             grid.strategies = popular,combination\n\
             grid.lambdas = 0.1,0.2\n\
             coverage.steps = 5\n",
        );
        let cfg = PipelineConfig::load(f.path()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.corpus_path, PathBuf::from("data/q.jsonl"));
        assert_eq!(cfg.gen.strategy, Strategy::Popular);
        assert_eq!(cfg.gen.model, ModelKind::Paraphrase);
        assert_eq!(cfg.gen.lambda, 0.4);
        assert!(!cfg.gen.use_phrases);
        assert_eq!(cfg.gen.candidates_per_question, 10);
        assert_eq!(cfg.sdm.mu, 1500.0);
        assert_eq!(cfg.sdm.unordered_window, 6);
        assert_eq!(cfg.phrase_passes, 1);
        assert_eq!(cfg.filter_l, 200);
        assert_eq!(cfg.cv_repeats, 3);
        assert_eq!(cfg.grid.strategies.len(), 2);
        assert_eq!(cfg.grid.lambdas, vec![0.1, 0.2]);
        assert_eq!(cfg.coverage_steps, 5);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let f = write_config("gen.lamda = 0.5\n");
        assert!(matches!(
            PipelineConfig::load(f.path()),
            Err(Error::Config(_))
        ));
        let f = write_config("gen.lambda = high\n");
        assert!(matches!(
            PipelineConfig::load(f.path()),
            Err(Error::Config(_))
        ));
        let f = write_config("no equals sign here\n");
        assert!(PipelineConfig::load(f.path()).is_err());
    }

    #[test]
    fn hash_tracks_semantic_changes_only() {
        let base = PipelineConfig::default();
        let mut changed = PipelineConfig::default();
        assert_eq!(base.hash(), changed.hash());
        changed.gen.lambda = 0.7;
        assert_ne!(base.hash(), changed.hash());
        assert_eq!(base.hash().len(), 16);
    }

    #[test]
    fn validate_catches_out_of_range_settings() {
        let mut cfg = PipelineConfig::default();
        cfg.gen.lambda = 1.5;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = PipelineConfig::default();
        cfg.filter_top_n = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.cv_folds = 1;
        assert!(cfg.validate().is_err());
    }
}
