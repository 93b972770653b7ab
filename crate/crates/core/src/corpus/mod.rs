//! The document collection: initiatives, the per-MP documents inside them,
//! and the participation relation that serves as ground truth.

mod synthetic;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use synthetic::{generate_synthetic, shared_term, term_topic, topic_term, SyntheticCorpus, SyntheticSpec};

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

string_id!(MpId);
string_id!(InitiativeId);

/// One MP's speech in one initiative, as it appears in the interchange file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intervention {
    pub mp: MpId,
    pub initiative: InitiativeId,
    pub text: String,
}

/// A debated item. Each participant contributes exactly one (merged) document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Initiative {
    pub id: InitiativeId,
    documents: BTreeMap<MpId, String>,
}

impl Initiative {
    pub fn participants(&self) -> impl Iterator<Item = &MpId> {
        self.documents.keys()
    }

    pub fn is_participant(&self, mp: &MpId) -> bool {
        self.documents.contains_key(mp)
    }

    pub fn documents(&self) -> &BTreeMap<MpId, String> {
        &self.documents
    }

    pub fn document(&self, mp: &MpId) -> Option<&str> {
        self.documents.get(mp).map(String::as_str)
    }

    /// All participants' speeches joined in MP order: the text a test
    /// initiative is filtered by.
    pub fn full_text(&self) -> String {
        self.documents
            .values()
            .map(String::as_str)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    initiatives: Vec<Initiative>,
    mps: BTreeSet<MpId>,
}

impl Corpus {
    /// Builds a corpus from interventions, merging repeated (mp, initiative)
    /// pairs with a single space. Initiatives keep first-appearance order.
    pub fn from_interventions<I>(interventions: I) -> Result<Corpus>
    where
        I: IntoIterator<Item = Intervention>,
    {
        let mut order: Vec<InitiativeId> = Vec::new();
        let mut docs: HashMap<InitiativeId, BTreeMap<MpId, String>> = HashMap::new();
        for iv in interventions {
            let entry = docs.entry(iv.initiative.clone()).or_insert_with(|| {
                order.push(iv.initiative.clone());
                BTreeMap::new()
            });
            entry
                .entry(iv.mp)
                .and_modify(|text| {
                    text.push(' ');
                    text.push_str(&iv.text);
                })
                .or_insert(iv.text);
        }
        if order.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let initiatives = order
            .into_iter()
            .map(|id| {
                let documents = docs.remove(&id).unwrap_or_default();
                Initiative { id, documents }
            })
            .collect();
        Ok(Corpus::from_initiatives(initiatives))
    }

    fn from_initiatives(initiatives: Vec<Initiative>) -> Corpus {
        let mps = initiatives.iter().flat_map(|i| i.documents.keys().cloned()).collect();
        Corpus { initiatives, mps }
    }

    pub fn initiatives(&self) -> &[Initiative] {
        &self.initiatives
    }

    pub fn mps(&self) -> &BTreeSet<MpId> {
        &self.mps
    }

    pub fn initiative(&self, id: &InitiativeId) -> Option<&Initiative> {
        self.initiatives.iter().find(|i| &i.id == id)
    }

    pub fn initiative_ids(&self) -> Vec<InitiativeId> {
        self.initiatives.iter().map(|i| i.id.clone()).collect()
    }

    /// Number of initiatives each MP participates in.
    pub fn participation_counts(&self) -> BTreeMap<MpId, usize> {
        let mut counts = BTreeMap::new();
        for ini in &self.initiatives {
            for mp in ini.participants() {
                *counts.entry(mp.clone()).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn num_documents(&self) -> usize {
        self.initiatives.iter().map(|i| i.documents.len()).sum()
    }

    /// One record per (initiative, MP) document, in corpus order.
    pub fn interventions(&self) -> impl Iterator<Item = Intervention> + '_ {
        self.initiatives.iter().flat_map(|ini| {
            ini.documents.iter().map(|(mp, text)| Intervention {
                mp: mp.clone(),
                initiative: ini.id.clone(),
                text: text.clone(),
            })
        })
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for iv in self.interventions() {
            let line = serde_json::to_string(&iv).expect("intervention serializes");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct Record {
    mp: String,
    initiative: String,
    text: String,
}

/// Parses line-delimited `{"mp", "initiative", "text"}` records. Blank lines
/// are skipped; line numbers in errors are 1-based.
pub fn parse_jsonl<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut interventions = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if rec.text.trim().is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "text is empty".into(),
            });
        }
        interventions.push(Intervention {
            mp: rec.mp.into(),
            initiative: rec.initiative.into(),
            text: rec.text,
        });
    }
    Corpus::from_interventions(interventions)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let file = File::open(path)?;
    parse_jsonl(BufReader::new(file))
}

/// Keeps only MPs participating in at least `min_k` initiatives. Their
/// documents go with them; initiatives left without participants are dropped.
pub fn filter_min_interventions(corpus: &Corpus, min_k: usize) -> Result<Corpus> {
    if min_k == 0 {
        return Err(Error::config("cohorts", "minimum intervention count must be >= 1"));
    }
    let counts = corpus.participation_counts();
    let keep: BTreeSet<&MpId> = counts.iter().filter(|(_, &n)| n >= min_k).map(|(mp, _)| mp).collect();
    if keep.is_empty() {
        return Err(Error::EmptyCohort { min_k });
    }
    let initiatives: Vec<Initiative> = corpus
        .initiatives
        .iter()
        .filter_map(|ini| {
            let documents: BTreeMap<MpId, String> = ini
                .documents
                .iter()
                .filter(|(mp, _)| keep.contains(mp))
                .map(|(mp, text)| (mp.clone(), text.clone()))
                .collect();
            (!documents.is_empty()).then(|| Initiative {
                id: ini.id.clone(),
                documents,
            })
        })
        .collect();
    Ok(Corpus::from_initiatives(initiatives))
}

/// A train/test partition of the initiative ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub fold_index: usize,
    pub seed: u64,
    pub train: BTreeSet<InitiativeId>,
    pub test: BTreeSet<InitiativeId>,
}

pub const MIN_HOLDOUT_INITIATIVES: usize = 5;

/// `round(fraction * n)`, halves rounded up.
pub fn train_size(n: usize, fraction: f64) -> usize {
    let raw = (fraction * n as f64 + 0.5).floor();
    (raw.max(0.0) as usize).min(n)
}

/// Repeated holdout: `folds` independent uniform partitions. Fold `f` shuffles
/// the initiative ids (corpus order) with the seed
/// [`seed::fold_seed`]`(master_seed, f)` and takes the first
/// `round(train_fraction * N)` as training, kept within `1..N` so neither
/// side is empty.
pub fn repeated_holdout(corpus: &Corpus, folds: usize, train_fraction: f64, master_seed: u64) -> Result<Vec<Split>> {
    let ids = corpus.initiative_ids();
    if ids.len() < MIN_HOLDOUT_INITIATIVES {
        return Err(Error::TooFewInitiatives {
            needed: MIN_HOLDOUT_INITIATIVES,
            found: ids.len(),
        });
    }
    let n_train = train_size(ids.len(), train_fraction).clamp(1, ids.len() - 1);
    Ok((0..folds)
        .map(|fold_index| {
            let seed = seed::fold_seed(master_seed, fold_index);
            let mut shuffled = ids.clone();
            shuffled.shuffle(&mut seed::rng(seed));
            let test = shuffled.split_off(n_train).into_iter().collect();
            Split {
                fold_index,
                seed,
                train: shuffled.into_iter().collect(),
                test,
            }
        })
        .collect())
}
