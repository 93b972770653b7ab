//! Tokenization, stopword removal and light stemming.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const DEFAULT_SUFFIXES: &str = include_str!("../data/suffixes.txt");

/// Stems shorter than this are never produced by suffix stripping.
pub const MIN_STEM_LEN: usize = 3;

/// Reads a one-word-per-line list; `#` starts a comment. Words are lowercased.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn default_stopwords() -> BTreeSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

pub fn load_stopwords(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    Ok(parse_stopwords(&std::fs::read_to_string(path)?))
}

/// Suffix rewrite rules, applied longest-suffix-first until a fixpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixTable {
    // suffix -> replacement, iterated longest suffix first
    rules: Vec<(String, String)>,
}

impl SuffixTable {
    /// Parses `suffix→replacement` lines (`->` is accepted too).
    pub fn parse(text: &str) -> Result<SuffixTable> {
        let mut rules = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: &str| Error::SuffixTable {
                line: idx + 1,
                message: message.to_owned(),
            };
            let (suffix, repl) = line
                .split_once('→')
                .or_else(|| line.split_once("->"))
                .ok_or_else(|| bad("expected suffix→replacement"))?;
            let (suffix, repl) = (suffix.trim(), repl.trim());
            let lower_alnum = |s: &str| s.chars().all(|c| c.is_alphanumeric() && !c.is_uppercase());
            if suffix.is_empty() || !lower_alnum(suffix) || !lower_alnum(repl) {
                return Err(bad("suffix and replacement must be lowercase alphanumeric"));
            }
            if repl != suffix && repl.chars().count() >= suffix.chars().count() {
                return Err(bad("replacement must be shorter than the suffix"));
            }
            rules.insert(suffix.to_owned(), repl.to_owned());
        }
        let mut rules: Vec<(String, String)> = rules.into_iter().collect();
        rules.sort_by(|a, b| b.0.chars().count().cmp(&a.0.chars().count()).then(a.0.cmp(&b.0)));
        Ok(SuffixTable { rules })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SuffixTable> {
        SuffixTable::parse(&std::fs::read_to_string(path)?)
    }

    /// The bundled table.
    pub fn light() -> SuffixTable {
        SuffixTable::parse(DEFAULT_SUFFIXES).expect("bundled suffix table parses")
    }

    fn step(&self, word: &str) -> Option<String> {
        let len = word.chars().count();
        for (suffix, repl) in &self.rules {
            if !word.ends_with(suffix.as_str()) {
                continue;
            }
            let stem_len = len - suffix.chars().count() + repl.chars().count();
            if stem_len < MIN_STEM_LEN {
                continue;
            }
            if suffix == repl {
                return None;
            }
            let mut out = word[..word.len() - suffix.len()].to_owned();
            out.push_str(repl);
            return Some(out);
        }
        None
    }

    /// Rewrites until no rule changes the word. Every change shortens it, so
    /// this terminates, and the result is a fixpoint.
    pub fn stem(&self, word: &str) -> String {
        let mut cur = word.to_owned();
        while let Some(next) = self.step(&cur) {
            cur = next;
        }
        cur
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Stemmer {
    #[default]
    None,
    LightSuffix(SuffixTable),
}

impl Stemmer {
    pub fn stem(&self, word: &str) -> String {
        match self {
            Stemmer::None => word.to_owned(),
            Stemmer::LightSuffix(table) => table.stem(word),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenPipeline {
    pub stopwords: BTreeSet<String>,
    pub stemmer: Stemmer,
    pub min_token_len: usize,
}

impl Default for TokenPipeline {
    fn default() -> Self {
        TokenPipeline {
            stopwords: default_stopwords(),
            stemmer: Stemmer::None,
            min_token_len: 2,
        }
    }
}

impl TokenPipeline {
    pub fn new(stopwords: BTreeSet<String>, stemmer: Stemmer, min_token_len: usize) -> Self {
        let stopwords = stopwords.into_iter().map(|w| w.to_lowercase()).collect();
        TokenPipeline {
            stopwords,
            stemmer,
            min_token_len,
        }
    }

    fn keep(&self, token: &str) -> bool {
        token.chars().count() >= self.min_token_len && !self.stopwords.contains(token)
    }

    /// Lowercases, splits on non-alphanumerics, drops short tokens and
    /// stopwords, then stems. Stems are filtered again so the output never
    /// holds a short token or a stopword.
    pub fn preprocess(&self, text: &str) -> Vec<String> {
        text.to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| self.keep(t))
            .map(|t| self.stemmer.stem(t))
            .filter(|t| self.keep(t))
            .collect()
    }
}
