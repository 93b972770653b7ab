//! SMOTE oversampling of the minority class before training.

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;
use crate::vectorspace::SparseVector;

/// A synthetic vector and the pair it was interpolated from:
/// `vector = minority[base] + gap * (minority[neighbor] - minority[base])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub vector: SparseVector,
    pub base: usize,
    pub neighbor: usize,
    pub gap: f64,
}

/// Indices of the `k` nearest other samples (Euclidean), ties by index.
fn nearest_neighbors(samples: &[SparseVector], k: usize) -> Vec<Vec<usize>> {
    (0..samples.len())
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..samples.len())
                .filter(|&j| j != i)
                .map(|j| (samples[i].squared_distance(&samples[j]), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Generates `target_count - minority.len()` synthetic samples. `k` is
/// clamped to `minority.len() - 1`; a single sample is duplicated.
pub fn smote(minority: &[SparseVector], target_count: usize, k: usize, seed: u64) -> Result<Vec<SyntheticSample>> {
    if minority.is_empty() {
        return Err(Error::Training("SMOTE needs at least one minority sample".into()));
    }
    if target_count <= minority.len() {
        return Err(Error::Training(format!(
            "SMOTE target {target_count} does not exceed the {} minority samples",
            minority.len()
        )));
    }
    let k = k.max(1).min(minority.len() - 1);
    let neighbors = nearest_neighbors(minority, k);
    let mut rng = seed::rng(seed);
    Ok((minority.len()..target_count)
        .map(|_| {
            let base = rng.gen_range(0..minority.len());
            if k == 0 {
                return SyntheticSample {
                    vector: minority[base].clone(),
                    base,
                    neighbor: base,
                    gap: 0.0,
                };
            }
            let neighbor = neighbors[base][rng.gen_range(0..k)];
            let gap: f64 = rng.gen_range(0.0..=1.0);
            SyntheticSample {
                vector: minority[base].lerp(&minority[neighbor], gap),
                base,
                neighbor,
                gap,
            }
        })
        .collect())
}

/// Oversamples the smaller class to the size of the larger one. Originals
/// come first and are untouched.
pub fn balance_training_set(
    positives: Vec<SparseVector>,
    negatives: Vec<SparseVector>,
    k: usize,
    seed: u64,
) -> Result<(Vec<SparseVector>, Vec<SparseVector>)> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Training("balancing needs both classes".into()));
    }
    use std::cmp::Ordering::*;
    match positives.len().cmp(&negatives.len()) {
        Equal => Ok((positives, negatives)),
        Less => {
            let extra = smote(&positives, negatives.len(), k, seed)?;
            let mut out = positives;
            out.extend(extra.into_iter().map(|s| s.vector));
            Ok((out, negatives))
        }
        Greater => {
            let extra = smote(&negatives, positives.len(), k, seed)?;
            let mut out = negatives;
            out.extend(extra.into_iter().map(|s| s.vector));
            Ok((positives, out))
        }
    }
}
