//! Browser bindings for three small pulrec experiments. Every entry point
//! takes and returns JSON strings; the plain-Rust versions in [`ops`] are
//! what the bindings call and what the tests exercise.

use wasm_bindgen::prelude::*;

pub mod ops;

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Constrained 2-means on 2-D points. Input:
/// `{"positives": [[x, y], ...], "unlabeled": [[x, y], ...], "max_iter": 100}`.
#[wasm_bindgen(js_name = clusterPoints)]
pub fn cluster_points(input: &str) -> Result<String, JsError> {
    js(ops::cluster_points(input))
}

/// Averaged micro/macro F curves for `bas`, `pul-km` and `ir-i` on a small
/// synthetic corpus with the given noise fraction.
#[wasm_bindgen(js_name = thresholdSweep)]
pub fn threshold_sweep(noise_fraction: f64, seed: u32) -> Result<String, JsError> {
    js(ops::threshold_sweep(noise_fraction, u64::from(seed)))
}

/// BM25 ranking of MPs for a query. Input:
/// `{"documents": [{"mp": "...", "text": "..."}], "query": "...", "mode": "ir-i" | "ir-p"}`.
#[wasm_bindgen(js_name = rankMps)]
pub fn rank_mps(input: &str) -> Result<String, JsError> {
    js(ops::rank_mps(input))
}
