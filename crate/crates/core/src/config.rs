//! Flat `key = value` experiment configuration. `#` starts a comment.
//! Relative paths are resolved against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::classify::TrainParams;
use crate::corpus::SyntheticSpec;
use crate::error::{Error, Result};
use crate::eval::default_thresholds;
use crate::experiment::{Approach, Settings};
use crate::ir::Bm25Params;
use crate::textprep::{default_stopwords, load_stopwords, Stemmer, SuffixTable, TokenPipeline};

#[derive(Debug, Clone, PartialEq)]
pub enum StopwordSource {
    Default,
    None,
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StemmerChoice {
    None,
    LightSuffix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    pub out_dir: PathBuf,
    pub master_seed: u64,
    pub folds: usize,
    pub train_fraction: f64,
    pub thresholds: Vec<f64>,
    pub cohorts: Vec<usize>,
    pub approaches: Vec<Approach>,
    pub max_iter: usize,
    pub alpha: f64,
    pub train: TrainParams,
    pub smote_k: usize,
    pub bm25: Bm25Params,
    pub stopwords: StopwordSource,
    pub stemmer: StemmerChoice,
    pub suffix_table: Option<PathBuf>,
    pub min_token_len: usize,
    pub trace: bool,
    /// `run` command: which approach, fold and cohort.
    pub run_approach: Approach,
    pub run_fold: usize,
    pub run_cohort: Option<usize>,
    /// `compare` command: approach pairs.
    pub compare: Vec<(Approach, Approach)>,
    pub synth: SyntheticSpec,
}

pub const KEYS: &[&str] = &[
    "corpus",
    "out_dir",
    "master_seed",
    "folds",
    "train_fraction",
    "thresholds",
    "cohorts",
    "approaches",
    "max_iter",
    "alpha",
    "reg_lambda",
    "tol",
    "max_epochs",
    "smote_k",
    "bm25_k1",
    "bm25_b",
    "stopwords",
    "stemmer",
    "suffix_table",
    "min_token_len",
    "trace",
    "approach",
    "fold",
    "cohort",
    "compare",
    "synth.n_topics",
    "synth.n_mps",
    "synth.topics_per_mp",
    "synth.initiatives_per_mp",
    "synth.vocab_size_per_topic",
    "synth.shared_vocab_size",
    "synth.doc_length",
    "synth.noise_fraction",
];

struct Raw<'a> {
    values: BTreeMap<String, String>,
    base: &'a Path,
}

impl Raw<'_> {
    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e: T::Err| Error::config(key, format!("{v:?}: {e}"))),
        }
    }

    fn list<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|e: T::Err| Error::config(key, format!("{s:?}: {e}"))))
                .collect(),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.values.get(key).map(|v| self.base.join(v))
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config("<file>", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        ExperimentConfig::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<ExperimentConfig> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::config(format!("<line {}>", idx + 1), "expected `key = value`"));
            };
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::config(k, "unknown key"));
            }
            if values.insert(k.to_owned(), v.trim().to_owned()).is_some() {
                return Err(Error::config(k, "set more than once"));
            }
        }
        let raw = Raw { values, base };
        let master_seed = raw.get("master_seed", 0u64)?;
        let demo = SyntheticSpec::demo();

        let cfg = ExperimentConfig {
            corpus: raw.path("corpus").unwrap_or_else(|| base.join("corpus.jsonl")),
            out_dir: raw.path("out_dir").unwrap_or_else(|| base.join("out")),
            master_seed,
            folds: raw.get("folds", 5)?,
            train_fraction: raw.get("train_fraction", 0.8)?,
            thresholds: raw.list("thresholds", default_thresholds())?,
            cohorts: raw.list("cohorts", vec![10, 25, 75, 150])?,
            approaches: raw.list("approaches", Approach::ALL.to_vec())?,
            max_iter: raw.get("max_iter", 100)?,
            alpha: raw.get("alpha", 1.0)?,
            train: TrainParams {
                reg_lambda: raw.get("reg_lambda", 1e-3)?,
                tol: raw.get("tol", 1e-6)?,
                max_epochs: raw.get("max_epochs", 500)?,
            },
            smote_k: raw.get("smote_k", 5)?,
            bm25: Bm25Params {
                k1: raw.get("bm25_k1", 1.2)?,
                b: raw.get("bm25_b", 0.75)?,
            },
            stopwords: match raw.values.get("stopwords").map(String::as_str) {
                None | Some("default") => StopwordSource::Default,
                Some("none") => StopwordSource::None,
                Some(_) => StopwordSource::File(raw.path("stopwords").expect("present")),
            },
            stemmer: match raw.values.get("stemmer").map(String::as_str) {
                None | Some("none") => StemmerChoice::None,
                Some("light-suffix") => StemmerChoice::LightSuffix,
                Some(other) => {
                    return Err(Error::config(
                        "stemmer",
                        format!("{other:?}: expected none or light-suffix"),
                    ))
                }
            },
            suffix_table: raw.path("suffix_table"),
            min_token_len: raw.get("min_token_len", 2)?,
            trace: raw.get("trace", false)?,
            run_approach: raw.get("approach", Approach::ALL[2])?,
            run_fold: raw.get("fold", 0)?,
            run_cohort: raw.values.get("cohort").map(|_| raw.get("cohort", 0)).transpose()?,
            compare: raw
                .list::<String>("compare", vec![])?
                .iter()
                .map(|pair| {
                    let (a, b) = pair
                        .split_once(':')
                        .ok_or_else(|| Error::config("compare", format!("{pair:?}: expected a:b")))?;
                    let parse = |s: &str| s.trim().parse::<Approach>().map_err(|e| Error::config("compare", e));
                    Ok((parse(a)?, parse(b)?))
                })
                .collect::<Result<_>>()?,
            synth: SyntheticSpec {
                n_topics: raw.get("synth.n_topics", demo.n_topics)?,
                n_mps: raw.get("synth.n_mps", demo.n_mps)?,
                topics_per_mp: raw.get("synth.topics_per_mp", demo.topics_per_mp)?,
                initiatives_per_mp: raw.get("synth.initiatives_per_mp", demo.initiatives_per_mp)?,
                vocab_size_per_topic: raw.get("synth.vocab_size_per_topic", demo.vocab_size_per_topic)?,
                shared_vocab_size: raw.get("synth.shared_vocab_size", demo.shared_vocab_size)?,
                doc_length: raw.get("synth.doc_length", demo.doc_length)?,
                noise_fraction: raw.get("synth.noise_fraction", demo.noise_fraction)?,
                seed: master_seed,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, msg: &str| if ok { Ok(()) } else { Err(Error::config(key, msg)) };
        check(self.folds >= 1, "folds", "must be >= 1")?;
        check(
            self.train_fraction > 0.0 && self.train_fraction < 1.0,
            "train_fraction",
            "must lie strictly between 0 and 1",
        )?;
        check(!self.thresholds.is_empty(), "thresholds", "must not be empty")?;
        check(
            self.thresholds.iter().all(|t| (0.0..=1.0).contains(t)),
            "thresholds",
            "must lie in [0, 1]",
        )?;
        check(
            !self.cohorts.is_empty() && !self.cohorts.contains(&0),
            "cohorts",
            "must be positive integers",
        )?;
        check(!self.approaches.is_empty(), "approaches", "must not be empty")?;
        check(self.max_iter >= 1, "max_iter", "must be >= 1")?;
        check(self.alpha > 0.0, "alpha", "must be positive")?;
        check(self.train.reg_lambda >= 0.0, "reg_lambda", "must be non-negative")?;
        check(self.train.tol > 0.0, "tol", "must be positive")?;
        check(self.smote_k >= 1, "smote_k", "must be >= 1")?;
        check(self.bm25.k1 >= 0.0, "bm25_k1", "must be non-negative")?;
        check((0.0..=1.0).contains(&self.bm25.b), "bm25_b", "must lie in [0, 1]")?;
        check(self.min_token_len >= 1, "min_token_len", "must be >= 1")?;
        check(self.run_fold < self.folds, "fold", "must be below folds")?;
        Ok(())
    }

    pub fn pipeline(&self) -> Result<TokenPipeline> {
        let stopwords = match &self.stopwords {
            StopwordSource::Default => default_stopwords(),
            StopwordSource::None => Default::default(),
            StopwordSource::File(p) => {
                load_stopwords(p).map_err(|e| Error::config("stopwords", format!("{}: {e}", p.display())))?
            }
        };
        let stemmer = match (self.stemmer, &self.suffix_table) {
            (StemmerChoice::None, _) => Stemmer::None,
            (StemmerChoice::LightSuffix, None) => Stemmer::LightSuffix(SuffixTable::light()),
            (StemmerChoice::LightSuffix, Some(p)) => Stemmer::LightSuffix(
                SuffixTable::load(p).map_err(|e| Error::config("suffix_table", format!("{}: {e}", p.display())))?,
            ),
        };
        Ok(TokenPipeline::new(stopwords, stemmer, self.min_token_len))
    }

    pub fn settings(&self) -> Result<Settings> {
        Ok(Settings {
            pipeline: self.pipeline()?,
            master_seed: self.master_seed,
            folds: self.folds,
            train_fraction: self.train_fraction,
            thresholds: self.thresholds.clone(),
            max_iter: self.max_iter,
            nb_alpha: self.alpha,
            train: self.train,
            smote_k: self.smote_k,
            bm25: self.bm25,
            trace: self.trace,
        })
    }
}
