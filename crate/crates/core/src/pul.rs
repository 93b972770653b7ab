//! Reliable-negative selection: the first step of two-step positive-unlabeled
//! learning.
//!
//! Three selectors share one output type:
//! - [`select_rn_kmeans`]: 2-means under cosine similarity where the known
//!   positives are pinned to the positive cluster. Unlabeled documents still
//!   in the negative cluster at convergence are the reliable negatives.
//! - [`select_rn_nb`]: multinomial naive Bayes trained on positives vs. all
//!   unlabeled, then used to reclassify the unlabeled pool.
//! - [`select_rn_baseline`]: every unlabeled document is a negative.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::vectorspace::{centroid, cosine, SparseVector};

/// Cosine differences within this band count as ties (assigned negative).
pub const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RnMethod {
    PulKm,
    PulNb,
    Baseline,
}

impl RnMethod {
    pub fn tag(self) -> &'static str {
        match self {
            RnMethod::PulKm => "pul-km",
            RnMethod::PulNb => "pul-nb",
            RnMethod::Baseline => "bas",
        }
    }
}

impl fmt::Display for RnMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for RnMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pul-km" => Ok(RnMethod::PulKm),
            "pul-nb" => Ok(RnMethod::PulNb),
            "bas" => Ok(RnMethod::Baseline),
            other => Err(format!("unknown reliable-negative method {other:?}")),
        }
    }
}

/// Positives `D_i` and the unlabeled pool `D \ D_i` of one MP.
#[derive(Debug, Clone, Copy)]
pub struct PulInput<'a> {
    positives: &'a [SparseVector],
    unlabeled: &'a [SparseVector],
}

impl<'a> PulInput<'a> {
    pub fn new(positives: &'a [SparseVector], unlabeled: &'a [SparseVector]) -> Result<Self> {
        if positives.is_empty() || unlabeled.is_empty() {
            return Err(Error::Training(format!(
                "positive-unlabeled input needs both sets non-empty ({} positives, {} unlabeled)",
                positives.len(),
                unlabeled.len()
            )));
        }
        Ok(PulInput { positives, unlabeled })
    }

    pub fn positives(&self) -> &'a [SparseVector] {
        self.positives
    }

    pub fn unlabeled(&self) -> &'a [SparseVector] {
        self.unlabeled
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReliableNegatives {
    /// Sorted indices into the unlabeled pool.
    pub indices: Vec<usize>,
    pub method: RnMethod,
    pub iterations_used: usize,
    /// Constrained 2-means could not separate a negative cluster; callers
    /// fall back to the baseline.
    pub degenerate: bool,
}

impl ReliableNegatives {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn degenerate(iterations_used: usize) -> Self {
        ReliableNegatives {
            indices: Vec::new(),
            method: RnMethod::PulKm,
            iterations_used,
            degenerate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cluster {
    Positive,
    Negative,
}

/// State after one assignment step of the constrained 2-means.
#[derive(Debug)]
pub struct IterationTrace<'a> {
    /// 1-based.
    pub iteration: usize,
    /// Positives first, then the unlabeled pool, in input order.
    pub assignment: &'a [Cluster],
    pub positive_centroid: &'a SparseVector,
    pub negative_centroid: &'a SparseVector,
    /// Sum of each document's cosine to its own cluster's centroid.
    pub objective: f64,
}

impl IterationTrace<'_> {
    pub fn cluster_sizes(&self) -> (usize, usize) {
        let neg = self.assignment.iter().filter(|&&c| c == Cluster::Negative).count();
        (self.assignment.len() - neg, neg)
    }

    /// `iteration positive_size negative_size objective`
    pub fn line(&self) -> String {
        let (p, n) = self.cluster_sizes();
        format!("{} {} {} {:.12}", self.iteration, p, n, self.objective)
    }
}

pub fn select_rn_kmeans(input: &PulInput<'_>, max_iter: usize) -> ReliableNegatives {
    select_rn_kmeans_traced(input, max_iter, |_| {})
}

/// Constrained 2-means. `on_iteration` sees every assignment step.
pub fn select_rn_kmeans_traced<F>(input: &PulInput<'_>, max_iter: usize, mut on_iteration: F) -> ReliableNegatives
where
    F: FnMut(&IterationTrace<'_>),
{
    let (pos, unl) = (input.positives, input.unlabeled);
    let (Ok(mut c_pos), Ok(mut c_neg)) = (centroid(pos), centroid(unl)) else {
        return ReliableNegatives::degenerate(0);
    };

    let n_pos = pos.len();
    let mut assignment = vec![Cluster::Positive; n_pos + unl.len()];
    let mut previous: Option<Vec<Cluster>> = None;
    let mut iterations = 0;

    for it in 1..=max_iter.max(1) {
        iterations = it;
        let mut objective: f64 = pos.iter().map(|p| cosine(p, &c_pos)).sum();
        for (k, u) in unl.iter().enumerate() {
            let (to_pos, to_neg) = (cosine(u, &c_pos), cosine(u, &c_neg));
            let cluster = if to_neg >= to_pos - TIE_EPS {
                Cluster::Negative
            } else {
                Cluster::Positive
            };
            objective += if cluster == Cluster::Negative { to_neg } else { to_pos };
            assignment[n_pos + k] = cluster;
        }
        on_iteration(&IterationTrace {
            iteration: it,
            assignment: &assignment,
            positive_centroid: &c_pos,
            negative_centroid: &c_neg,
            objective,
        });

        let unl_assign = &assignment[n_pos..];
        if previous.as_deref() == Some(unl_assign) {
            break;
        }
        previous = Some(unl_assign.to_vec());
        if it == max_iter.max(1) {
            break;
        }

        let members = |want: Cluster| {
            unl.iter()
                .zip(unl_assign)
                .filter(move |(_, &c)| c == want)
                .map(|(u, _)| u)
        };
        if members(Cluster::Negative).next().is_none() {
            return ReliableNegatives::degenerate(it);
        }
        c_pos = centroid(pos.iter().chain(members(Cluster::Positive))).expect("positive centroid was defined");
        c_neg = match centroid(members(Cluster::Negative)) {
            Ok(c) => c,
            Err(_) => return ReliableNegatives::degenerate(it),
        };
    }

    // Both centroids on the same point: there is no negative side to speak of.
    if cosine(&c_pos, &c_neg) >= 1.0 - TIE_EPS {
        return ReliableNegatives::degenerate(iterations);
    }
    let indices: Vec<usize> = assignment[n_pos..]
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == Cluster::Negative)
        .map(|(k, _)| k)
        .collect();
    if indices.is_empty() {
        return ReliableNegatives::degenerate(iterations);
    }
    ReliableNegatives {
        indices,
        method: RnMethod::PulKm,
        iterations_used: iterations,
        degenerate: false,
    }
}

/// Multinomial naive Bayes with additive smoothing and document-count priors.
#[derive(Debug, Clone)]
pub struct MultinomialNb {
    log_prior: [f64; 2],
    log_likelihood: HashMap<String, [f64; 2]>,
    log_unseen: [f64; 2],
}

impl MultinomialNb {
    /// Class 0 is positive, class 1 negative.
    pub fn fit<S: AsRef<str>>(positives: &[Vec<S>], negatives: &[Vec<S>], alpha: f64) -> MultinomialNb {
        let mut counts: HashMap<String, [f64; 2]> = HashMap::new();
        let mut totals = [0.0f64; 2];
        for (class, docs) in [positives, negatives].into_iter().enumerate() {
            for doc in docs {
                for t in doc {
                    counts.entry(t.as_ref().to_owned()).or_insert([0.0; 2])[class] += 1.0;
                    totals[class] += 1.0;
                }
            }
        }
        let v = counts.len() as f64;
        let n_docs = (positives.len() + negatives.len()) as f64;
        let log_prior = [
            (positives.len() as f64 / n_docs).ln(),
            (negatives.len() as f64 / n_docs).ln(),
        ];
        let denom = [totals[0] + alpha * v, totals[1] + alpha * v];
        let log_likelihood = counts
            .into_iter()
            .map(|(t, c)| (t, [((c[0] + alpha) / denom[0]).ln(), ((c[1] + alpha) / denom[1]).ln()]))
            .collect();
        MultinomialNb {
            log_prior,
            log_likelihood,
            log_unseen: [(alpha / denom[0]).ln(), (alpha / denom[1]).ln()],
        }
    }

    /// Unnormalized log posteriors `[positive, negative]`.
    pub fn log_scores<S: AsRef<str>>(&self, doc: &[S]) -> [f64; 2] {
        let mut s = self.log_prior;
        for t in doc {
            let l = self.log_likelihood.get(t.as_ref()).unwrap_or(&self.log_unseen);
            s[0] += l[0];
            s[1] += l[1];
        }
        s
    }

    /// `Some(true)` for negative, `None` on a tie.
    pub fn is_negative<S: AsRef<str>>(&self, doc: &[S]) -> Option<bool> {
        let [pos, neg] = self.log_scores(doc);
        let tol = 1e-9 * (1.0 + pos.abs().max(neg.abs()));
        if (neg - pos).abs() <= tol {
            None
        } else {
            Some(neg > pos)
        }
    }
}

/// NB reclassification. Ties stay out of the reliable-negative set.
pub fn select_rn_nb<S: AsRef<str>>(
    input: &PulInput<'_>,
    positives_tokens: &[Vec<S>],
    unlabeled_tokens: &[Vec<S>],
    alpha: f64,
) -> Result<ReliableNegatives> {
    for (vectors, tokens) in [
        (input.positives.len(), positives_tokens.len()),
        (input.unlabeled.len(), unlabeled_tokens.len()),
    ] {
        if vectors != tokens {
            return Err(Error::LengthMismatch {
                left: vectors,
                right: tokens,
            });
        }
    }
    let nb = MultinomialNb::fit(positives_tokens, unlabeled_tokens, alpha);
    let indices = unlabeled_tokens
        .iter()
        .enumerate()
        .filter(|(_, doc)| nb.is_negative(doc) == Some(true))
        .map(|(k, _)| k)
        .collect();
    Ok(ReliableNegatives {
        indices,
        method: RnMethod::PulNb,
        iterations_used: 0,
        degenerate: false,
    })
}

pub fn select_rn_baseline(input: &PulInput<'_>) -> ReliableNegatives {
    ReliableNegatives {
        indices: (0..input.unlabeled.len()).collect(),
        method: RnMethod::Baseline,
        iterations_used: 0,
        degenerate: false,
    }
}

/// Reliable negatives as a set, handy for membership checks.
pub fn index_set(rn: &ReliableNegatives) -> BTreeSet<usize> {
    rn.indices.iter().copied().collect()
}
