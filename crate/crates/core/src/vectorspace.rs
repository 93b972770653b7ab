//! Vocabulary, tf-idf sparse vectors, cosine similarity and spherical
//! centroids.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type TermId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    term_to_id: HashMap<String, TermId>,
    doc_freq: Vec<u32>,
    n_train_docs: usize,
}

impl Vocabulary {
    /// Ids are assigned in lexicographic term order, so the vocabulary does
    /// not depend on document order.
    pub fn build<D: AsRef<[S]>, S: AsRef<str>>(train_docs: &[D]) -> Result<Vocabulary> {
        let mut df: BTreeMap<&str, u32> = BTreeMap::new();
        for doc in train_docs {
            let distinct: BTreeSet<&str> = doc.as_ref().iter().map(AsRef::as_ref).collect();
            for t in distinct {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        if df.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut terms = Vec::with_capacity(df.len());
        let mut doc_freq = Vec::with_capacity(df.len());
        let mut term_to_id = HashMap::with_capacity(df.len());
        for (id, (term, n)) in df.into_iter().enumerate() {
            term_to_id.insert(term.to_owned(), id as TermId);
            terms.push(term.to_owned());
            doc_freq.push(n);
        }
        Ok(Vocabulary {
            terms,
            term_to_id,
            doc_freq,
            n_train_docs: train_docs.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<TermId> {
        self.term_to_id.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id as usize]
    }

    pub fn doc_freq(&self, id: TermId) -> u32 {
        self.doc_freq[id as usize]
    }

    pub fn n_train_docs(&self) -> usize {
        self.n_train_docs
    }

    /// Smoothed idf: `ln((N + 1) / (df + 1)) + 1`.
    pub fn idf(&self, id: TermId) -> f64 {
        let n = self.n_train_docs as f64;
        let df = f64::from(self.doc_freq(id));
        ((n + 1.0) / (df + 1.0)).ln() + 1.0
    }

    /// SHA-256 over the terms in id order, NUL separated.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for t in &self.terms {
            h.update(t.as_bytes());
            h.update([0u8]);
        }
        h.finalize().into()
    }

    /// Raw tf times smoothed idf, L2-normalized. Unknown terms are dropped.
    pub fn vectorize<S: AsRef<str>>(&self, doc: &[S]) -> SparseVector {
        let mut tf: BTreeMap<TermId, u32> = BTreeMap::new();
        for t in doc {
            if let Some(id) = self.id(t.as_ref()) {
                *tf.entry(id).or_insert(0) += 1;
            }
        }
        let entries = tf
            .into_iter()
            .map(|(id, n)| (id, f64::from(n) * self.idf(id)))
            .collect();
        SparseVector { entries }.normalized()
    }
}

/// Sorted `(term, weight)` pairs; ids strictly increasing, no zero weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(TermId, f64)>,
}

impl SparseVector {
    /// Sorts by id, sums duplicates and drops zeros.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (TermId, f64)>) -> SparseVector {
        let mut acc: BTreeMap<TermId, f64> = BTreeMap::new();
        for (id, w) in pairs {
            *acc.entry(id).or_insert(0.0) += w;
        }
        SparseVector {
            entries: acc.into_iter().filter(|&(_, w)| w != 0.0).collect(),
        }
    }

    pub fn from_dense(values: &[f64]) -> SparseVector {
        SparseVector::from_pairs(values.iter().enumerate().map(|(i, &w)| (i as TermId, w)))
    }

    pub fn entries(&self) -> &[(TermId, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, id: TermId) -> f64 {
        self.entries
            .binary_search_by_key(&id, |&(t, _)| t)
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> SparseVector {
        let n = self.norm();
        if n > 0.0 {
            for e in &mut self.entries {
                e.1 /= n;
            }
        }
        self
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(t, w)| w * dense[t as usize]).sum()
    }

    pub fn squared_distance(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() || j < b.len() {
            let d = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x.0 == y.0 => {
                    i += 1;
                    j += 1;
                    x.1 - y.1
                }
                (Some(x), Some(y)) if x.0 < y.0 => {
                    i += 1;
                    x.1
                }
                (Some(x), None) => {
                    i += 1;
                    x.1
                }
                (_, Some(y)) => {
                    j += 1;
                    y.1
                }
                (None, None) => unreachable!(),
            };
            acc += d * d;
        }
        acc
    }

    /// `self + t * (other - self)` with exact zeros dropped.
    pub fn lerp(&self, other: &SparseVector, t: f64) -> SparseVector {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        while i < a.len() || j < b.len() {
            let (id, x, y) = match (a.get(i), b.get(j)) {
                (Some(p), Some(q)) if p.0 == q.0 => {
                    i += 1;
                    j += 1;
                    (p.0, p.1, q.1)
                }
                (Some(p), Some(q)) if p.0 < q.0 => {
                    i += 1;
                    (p.0, p.1, 0.0)
                }
                (Some(p), None) => {
                    i += 1;
                    (p.0, p.1, 0.0)
                }
                (_, Some(q)) => {
                    j += 1;
                    (q.0, 0.0, q.1)
                }
                (None, None) => unreachable!(),
            };
            let w = x + t * (y - x);
            if w != 0.0 {
                out.push((id, w));
            }
        }
        SparseVector { entries: out }
    }
}

/// Cosine of two normalized vectors: their dot product. Empty gives 0.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    a.dot(b)
}

/// Per-term mean, L2-normalized.
pub fn centroid<'a, I>(vectors: I) -> Result<SparseVector>
where
    I: IntoIterator<Item = &'a SparseVector>,
{
    let mut acc: BTreeMap<TermId, f64> = BTreeMap::new();
    let mut n = 0usize;
    for v in vectors {
        n += 1;
        for &(t, w) in v.entries() {
            *acc.entry(t).or_insert(0.0) += w;
        }
    }
    let mean = SparseVector::from_pairs(acc.into_iter().map(|(t, w)| (t, w / n.max(1) as f64)));
    if mean.norm() == 0.0 {
        return Err(Error::DegenerateCentroid);
    }
    Ok(mean.normalized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn docs(d: &[&[&str]]) -> Vec<Vec<String>> {
        d.iter().map(|x| x.iter().map(|s| s.to_string()).collect()).collect()
    }

    #[test]
    fn doc_freq_counts_documents() {
        let v = Vocabulary::build(&docs(&[&["a", "b"], &["b"]])).unwrap();
        assert_eq!(v.doc_freq(v.id("a").unwrap()), 1);
        assert_eq!(v.doc_freq(v.id("b").unwrap()), 2);
        assert_eq!(v.n_train_docs(), 2);
        assert_eq!(v.len(), 2);
        let v = Vocabulary::build(&docs(&[&["a", "a", "a"]])).unwrap();
        assert_eq!(v.doc_freq(0), 1);
    }

    #[test]
    fn empty_training_set_rejected() {
        assert!(matches!(
            Vocabulary::build(&docs(&[&[], &[]])),
            Err(Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn single_known_term_has_unit_weight() {
        let v = Vocabulary::build(&docs(&[&["a", "b"], &["b"]])).unwrap();
        let x = v.vectorize(&["a", "zzz"]);
        assert_eq!(x.entries(), &[(0, 1.0)]);
        assert!(v.vectorize(&["zzz"]).is_empty());
    }

    #[test]
    fn weights_follow_smoothed_idf() {
        // N = 3; df(a) = 1, df(b) = 3
        let v = Vocabulary::build(&docs(&[&["a", "b"], &["b"], &["b", "c"]])).unwrap();
        let x = v.vectorize(&["a", "b", "b"]);
        let wa = 1.0 * ((4.0f64 / 2.0).ln() + 1.0);
        let wb = 2.0 * ((4.0f64 / 4.0).ln() + 1.0);
        let n = (wa * wa + wb * wb).sqrt();
        assert!((x.get(v.id("a").unwrap()) - wa / n).abs() < 1e-12);
        assert!((x.get(v.id("b").unwrap()) - wb / n).abs() < 1e-12);
    }

    #[test]
    fn cosine_cases() {
        let x = SparseVector::from_dense(&[0.6, 0.8]);
        assert!((cosine(&x, &x) - 1.0).abs() < 1e-9);
        let a = SparseVector::from_dense(&[1.0, 0.0]);
        let b = SparseVector::from_dense(&[0.0, 1.0]);
        assert_eq!(cosine(&a, &b), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = SparseVector::from_dense(&[h, h]);
        assert!((cosine(&c, &a) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(cosine(&SparseVector::default(), &a), 0.0);
    }

    #[test]
    fn centroid_cases() {
        let x = SparseVector::from_dense(&[0.6, 0.8]);
        let c = centroid([&x]).unwrap();
        assert!((c.get(0) - 0.6).abs() < 1e-12 && (c.get(1) - 0.8).abs() < 1e-12);
        let a = SparseVector::from_dense(&[1.0, 0.0]);
        let b = SparseVector::from_dense(&[0.0, 1.0]);
        let c = centroid([&a, &b]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c.get(0) - h).abs() < 1e-12 && (c.get(1) - h).abs() < 1e-12);
        let e = SparseVector::default();
        assert!(matches!(centroid([&e, &e]), Err(Error::DegenerateCentroid)));
        assert!(matches!(centroid(std::iter::empty()), Err(Error::DegenerateCentroid)));
    }

    #[test]
    fn centroid_beats_sphere_grid() {
        // oracle: brute-force grid over the unit sphere
        let mut r = crate::seed::rng(5);
        use rand::Rng;
        let vs: Vec<SparseVector> = (0..5)
            .map(|_| SparseVector::from_dense(&[r.gen(), r.gen(), r.gen()]).normalized())
            .collect();
        let score = |c: &[f64; 3]| {
            vs.iter()
                .map(|v| v.get(0) * c[0] + v.get(1) * c[1] + v.get(2) * c[2])
                .sum::<f64>()
        };
        let cen = centroid(&vs).unwrap();
        let ours = score(&[cen.get(0), cen.get(1), cen.get(2)]);
        let mut best = f64::MIN;
        let steps = 400;
        for i in 0..=steps {
            let theta = std::f64::consts::PI * i as f64 / steps as f64;
            for j in 0..(2 * steps) {
                let phi = std::f64::consts::PI * j as f64 / steps as f64;
                let c = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
                best = best.max(score(&c));
            }
        }
        assert!(ours >= best - 1e-12, "grid found {best} > {ours}");
        assert!(best >= ours - 1e-3);
    }

    #[test]
    fn repeated_document_vectorizes_identically() {
        let v = Vocabulary::build(&docs(&[&["a", "b"], &["b", "c"]])).unwrap();
        let once = v.vectorize(&["a", "b", "c", "b"]);
        let twice = v.vectorize(&["a", "b", "c", "b", "a", "b", "c", "b"]);
        for (x, y) in once.entries().iter().zip(twice.entries()) {
            assert_eq!(x.0, y.0);
            assert!((x.1 - y.1).abs() < 1e-12);
        }
    }

    #[test]
    fn lerp_and_distance() {
        let a = SparseVector::from_pairs([(0, 1.0), (2, 2.0)]);
        let b = SparseVector::from_pairs([(1, 4.0), (2, 2.0)]);
        assert_eq!(a.lerp(&b, 0.0), a);
        assert_eq!(a.lerp(&b, 1.0), b);
        assert_eq!(a.lerp(&b, 0.5).entries(), &[(0, 0.5), (1, 2.0), (2, 2.0)]);
        assert!((a.squared_distance(&b) - 17.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn vectors_are_unit_and_nonnegative(
            train in proptest::collection::vec(proptest::collection::vec("[a-e]", 0..6), 1..6),
            doc in proptest::collection::vec("[a-g]", 0..10),
        ) {
            prop_assume!(train.iter().any(|d| !d.is_empty()));
            let v = Vocabulary::build(&train).unwrap();
            let before = v.len();
            let x = v.vectorize(&doc);
            prop_assert_eq!(v.len(), before);
            prop_assert!(x.entries().windows(2).all(|w| w[0].0 < w[1].0));
            prop_assert!(x.entries().iter().all(|&(_, w)| w > 0.0));
            if !x.is_empty() {
                prop_assert!((x.norm() - 1.0).abs() < 1e-9);
                let c = cosine(&x, &x);
                prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
            }
        }
    }
}
