//! BM25 retrieval comparators. `ir-i` indexes every training document and
//! keeps each MP's best-scoring one; `ir-p` indexes one concatenated profile
//! per MP. Scores are divided by the query's maximum.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::corpus::MpId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IrMode {
    /// One document per intervention.
    Interventions,
    /// One profile document per MP.
    Profiles,
}

impl IrMode {
    pub fn tag(self) -> &'static str {
        match self {
            IrMode::Interventions => "ir-i",
            IrMode::Profiles => "ir-p",
        }
    }
}

impl fmt::Display for IrMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for IrMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ir-i" => Ok(IrMode::Interventions),
            "ir-p" => Ok(IrMode::Profiles),
            other => Err(format!("unknown retrieval mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone)]
pub struct Bm25Index {
    postings: HashMap<String, Vec<(usize, u32)>>,
    doc_lengths: Vec<usize>,
    doc_mp: Vec<MpId>,
    avg_doc_length: f64,
    max_docs_per_mp: (usize, Option<MpId>),
    params: Bm25Params,
}

/// Concatenates each MP's documents in the given order: the `ir-p` profiles.
pub fn build_profiles<'a, I, S>(docs: I) -> Vec<(MpId, Vec<String>)>
where
    I: IntoIterator<Item = (&'a MpId, &'a [S])>,
    S: AsRef<str> + 'a,
{
    let mut profiles: BTreeMap<MpId, Vec<String>> = BTreeMap::new();
    for (mp, tokens) in docs {
        profiles
            .entry(mp.clone())
            .or_default()
            .extend(tokens.iter().map(|t| t.as_ref().to_owned()));
    }
    profiles.into_iter().collect()
}

impl Bm25Index {
    pub fn build<S: AsRef<str>>(docs: &[(MpId, Vec<S>)], params: Bm25Params) -> Result<Bm25Index> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut postings: HashMap<String, Vec<(usize, u32)>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        let mut per_mp: BTreeMap<&MpId, usize> = BTreeMap::new();
        for (handle, (mp, tokens)) in docs.iter().enumerate() {
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t.as_ref()).or_insert(0) += 1;
            }
            for (term, n) in tf {
                postings.entry(term.to_owned()).or_default().push((handle, n));
            }
            doc_lengths.push(tokens.len());
            *per_mp.entry(mp).or_insert(0) += 1;
        }
        let avg_doc_length = doc_lengths.iter().sum::<usize>() as f64 / docs.len() as f64;
        let max_docs_per_mp = per_mp
            .into_iter()
            .max_by_key(|&(_, n)| n)
            .map(|(mp, n)| (n, Some(mp.clone())))
            .unwrap_or((0, None));
        Ok(Bm25Index {
            postings,
            doc_lengths,
            doc_mp: docs.iter().map(|(mp, _)| mp.clone()).collect(),
            avg_doc_length,
            max_docs_per_mp,
            params,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn postings(&self, term: &str) -> &[(usize, u32)] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.n_docs() as f64;
        let df = self.doc_freq(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Raw BM25 score of every document; repeated query terms add up.
    pub fn score_documents<S: AsRef<str>>(&self, query: &[S]) -> Vec<f64> {
        let Bm25Params { k1, b } = self.params;
        let mut scores = vec![0.0; self.n_docs()];
        for term in query {
            let term = term.as_ref();
            let idf = self.idf(term);
            for &(doc, tf) in self.postings(term) {
                let tf = f64::from(tf);
                let len_norm = 1.0 - b + b * self.doc_lengths[doc] as f64 / self.avg_doc_length;
                scores[doc] += idf * tf * (k1 + 1.0) / (tf + k1 * len_norm);
            }
        }
        scores
    }

    /// MPs ranked by max-normalized score (descending, ties by id). Each MP
    /// keeps its best document; zero-score MPs are left out.
    pub fn score_mps<S: AsRef<str>>(&self, query: &[S], mode: IrMode) -> Result<Vec<(MpId, f64)>> {
        if mode == IrMode::Profiles && self.max_docs_per_mp.0 > 1 {
            return Err(Error::IndexMode {
                mp: self.max_docs_per_mp.1.clone().map(|m| m.0).unwrap_or_default(),
                count: self.max_docs_per_mp.0,
            });
        }
        let mut best: BTreeMap<&MpId, f64> = BTreeMap::new();
        for (doc, s) in self.score_documents(query).into_iter().enumerate() {
            if s > 0.0 {
                let e = best.entry(&self.doc_mp[doc]).or_insert(0.0);
                *e = e.max(s);
            }
        }
        let max = best.values().copied().fold(0.0, f64::max);
        let mut out: Vec<(MpId, f64)> = best.into_iter().map(|(mp, s)| (mp.clone(), s / max)).collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(mp: &str, text: &str) -> (MpId, Vec<String>) {
        (mp.into(), text.split_whitespace().map(str::to_owned).collect())
    }

    #[test]
    fn single_document_index() {
        let ix = Bm25Index::build(&[doc("A", "tax budget tax")], Bm25Params::default()).unwrap();
        assert_eq!(ix.avg_doc_length(), 3.0);
        assert!(ix.postings("farm").is_empty());
        let r = ix.score_mps(&["tax", "budget", "tax"], IrMode::Interventions).unwrap();
        assert_eq!(r, vec![(MpId::from("A"), 1.0)]);
    }

    #[test]
    fn no_overlap_or_empty_query_gives_nothing() {
        let ix = Bm25Index::build(&[doc("A", "tax"), doc("B", "farm")], Bm25Params::default()).unwrap();
        assert!(ix.score_mps(&["school"], IrMode::Interventions).unwrap().is_empty());
        assert!(ix.score_mps::<&str>(&[], IrMode::Interventions).unwrap().is_empty());
    }

    #[test]
    fn doc_freq_counts() {
        let ix = Bm25Index::build(
            &[doc("A", "tax tax farm"), doc("B", "farm school"), doc("C", "farm")],
            Bm25Params::default(),
        )
        .unwrap();
        assert_eq!(ix.doc_freq("tax"), 1);
        assert_eq!(ix.doc_freq("farm"), 3);
        assert_eq!(ix.doc_freq("school"), 1);
        assert_eq!(ix.postings("tax"), &[(0, 2)]);
    }

    #[test]
    fn interventions_mode_dedups_mps() {
        let ix = Bm25Index::build(
            &[doc("A", "tax farm"), doc("A", "tax tax"), doc("B", "tax school")],
            Bm25Params::default(),
        )
        .unwrap();
        let r = ix.score_mps(&["tax"], IrMode::Interventions).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0], (MpId::from("A"), 1.0));
        assert!(matches!(
            ix.score_mps(&["tax"], IrMode::Profiles),
            Err(Error::IndexMode { count: 2, .. })
        ));
    }

    #[test]
    fn profiles_concatenate_in_order() {
        let a: MpId = "A".into();
        let b: MpId = "B".into();
        let d1 = ["x", "y"];
        let d2 = ["z"];
        let d3 = ["w"];
        let p = build_profiles([(&a, &d1[..]), (&b, &d3[..]), (&a, &d2[..])]);
        assert_eq!(
            p,
            vec![(a, vec!["x".into(), "y".into(), "z".into()]), (b, vec!["w".into()])]
        );
    }
}
