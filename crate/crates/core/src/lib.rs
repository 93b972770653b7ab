//! Positive-unlabeled learning for per-user document filtering.
//!
//! Every user (an MP in the parliamentary setting this was built for) owns a set
//! of documents they wrote. Those are the positives; everything written by
//! other users is unlabeled. The crate learns one relevance model per user in
//! two steps:
//!
//! 1. select *reliable negatives* from the unlabeled pool ([`pul`]): a
//!    constrained 2-means clustering that pins the positives to their cluster,
//!    a naive Bayes reclassifier, or the all-unlabeled baseline;
//! 2. train a probabilistic linear classifier on positives vs. reliable
//!    negatives ([`classify`]), optionally after SMOTE balancing ([`balance`]).
//!
//! The [`eval`] module scores held-out documents against ground truth with
//! micro- and macro-averaged precision/recall/F over a threshold grid, and
//! [`ir`] provides the BM25 retrieval comparators. [`experiment`] wires all of
//! it into reproducible repeated-holdout sweeps.

pub mod balance;
pub mod classify;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod ir;
pub mod pul;
pub mod seed;
pub mod textprep;
pub mod vectorspace;

pub use error::{Error, Result};
