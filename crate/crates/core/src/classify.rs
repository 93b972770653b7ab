//! Per-MP probabilistic relevance models.
//!
//! The reference learner is L2-regularized logistic regression fitted by
//! deterministic full-batch gradient descent with a backtracking (Armijo)
//! line search, starting from zero weights. Anything implementing [`Trainer`]
//! can stand in for it.

use std::io::{Read, Write};

use crate::corpus::MpId;
use crate::error::{Error, Result};
use crate::vectorspace::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub reg_lambda: f64,
    pub tol: f64,
    pub max_epochs: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            reg_lambda: 1e-3,
            tol: 1e-6,
            max_epochs: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Gradient infinity-norm fell to `tol`.
    Converged,
    MaxEpochs,
    /// The line search could not find a decreasing step.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    /// Approach tag, e.g. `pul-km-b`.
    pub method: String,
    pub n_positive: usize,
    pub n_negative: usize,
    /// Reliable-negative selection degenerated and all unlabeled were used.
    pub fallback: bool,
    pub stop: StopReason,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceModel {
    pub mp: MpId,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub meta: TrainingMeta,
}

pub fn sigmoid(z: f64) -> f64 {
    const HI: f64 = 1.0 - f64::EPSILON / 2.0;
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, HI)
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl RelevanceModel {
    pub fn linear_score(&self, d: &SparseVector) -> f64 {
        d.dot_dense(&self.weights) + self.bias
    }

    /// `pr_i(d)`, strictly inside (0, 1).
    pub fn predict(&self, d: &SparseVector) -> f64 {
        sigmoid(self.linear_score(d))
    }
}

/// Mean logistic loss plus `lambda / 2 * |w|^2` (bias unregularized).
pub struct LogisticObjective<'a> {
    examples: Vec<(&'a SparseVector, f64)>,
    dim: usize,
    lambda: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(positives: &'a [SparseVector], negatives: &'a [SparseVector], dim: usize, lambda: f64) -> Self {
        let examples = positives
            .iter()
            .map(|x| (x, 1.0))
            .chain(negatives.iter().map(|x| (x, -1.0)))
            .collect();
        LogisticObjective { examples, dim, lambda }
    }

    fn margins(&self, w: &[f64], b: f64) -> Vec<f64> {
        self.examples.iter().map(|(x, _)| x.dot_dense(w) + b).collect()
    }

    fn loss_from_margins(&self, z: &[f64], w_sq: f64) -> f64 {
        let n = self.examples.len() as f64;
        let data: f64 = self.examples.iter().zip(z).map(|((_, y), z)| softplus(-y * z)).sum();
        data / n + 0.5 * self.lambda * w_sq
    }

    pub fn loss(&self, w: &[f64], b: f64) -> f64 {
        let w_sq = w.iter().map(|v| v * v).sum();
        self.loss_from_margins(&self.margins(w, b), w_sq)
    }

    fn gradient_from_margins(&self, w: &[f64], z: &[f64]) -> (Vec<f64>, f64) {
        let n = self.examples.len() as f64;
        let mut gw: Vec<f64> = w.iter().map(|v| self.lambda * v).collect();
        let mut gb = 0.0;
        for ((x, y), z) in self.examples.iter().zip(z) {
            // d/dz softplus(-y z) = -y * sigmoid(-y z)
            let coef = -y * logistic(-y * z) / n;
            gb += coef;
            for &(t, v) in x.entries() {
                gw[t as usize] += coef * v;
            }
        }
        (gw, gb)
    }

    pub fn gradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        self.gradient_from_margins(w, &self.margins(w, b))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

// Unclamped logistic, for the gradient.
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub trait Trainer {
    fn train(
        &self,
        mp: &MpId,
        dim: usize,
        positives: &[SparseVector],
        negatives: &[SparseVector],
    ) -> Result<RelevanceModel>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LogisticTrainer {
    pub params: TrainParams,
}

impl Trainer for LogisticTrainer {
    fn train(
        &self,
        mp: &MpId,
        dim: usize,
        positives: &[SparseVector],
        negatives: &[SparseVector],
    ) -> Result<RelevanceModel> {
        train(mp, dim, positives, negatives, &self.params)
    }
}

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;

/// Fits the logistic model over `dim` features. Both classes must be present.
pub fn train(
    mp: &MpId,
    dim: usize,
    positives: &[SparseVector],
    negatives: &[SparseVector],
    params: &TrainParams,
) -> Result<RelevanceModel> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Training(format!(
            "MP {mp}: need both classes ({} positive, {} negative)",
            positives.len(),
            negatives.len()
        )));
    }
    let obj = LogisticObjective::new(positives, negatives, dim, params.reg_lambda);
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut z = obj.margins(&w, b);
    let mut w_sq = 0.0;
    let mut loss = obj.loss_from_margins(&z, w_sq);
    let mut step = 1.0;
    let mut stop = StopReason::MaxEpochs;
    let mut epochs = 0;

    for _ in 0..params.max_epochs {
        let (gw, gb) = obj.gradient_from_margins(&w, &z);
        let g_inf = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if g_inf <= params.tol {
            stop = StopReason::Converged;
            break;
        }
        epochs += 1;
        // Margins move linearly along the search direction.
        let dz: Vec<f64> = obj.examples.iter().map(|(x, _)| x.dot_dense(&gw) + gb).collect();
        let g_sq = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        let w_dot_g: f64 = w.iter().zip(&gw).map(|(a, b)| a * b).sum();
        let gw_sq: f64 = gw.iter().map(|g| g * g).sum();

        let mut t = step;
        let accepted = loop {
            let z_try: Vec<f64> = z.iter().zip(&dz).map(|(z, d)| z - t * d).collect();
            let w_sq_try = (w_sq - 2.0 * t * w_dot_g + t * t * gw_sq).max(0.0);
            let loss_try = obj.loss_from_margins(&z_try, w_sq_try);
            if loss_try <= loss - ARMIJO_C * t * g_sq {
                break Some((z_try, loss_try));
            }
            t *= 0.5;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some((z_new, loss_new)) = accepted else {
            stop = StopReason::Stalled;
            break;
        };
        for (wi, gi) in w.iter_mut().zip(&gw) {
            *wi -= t * gi;
        }
        b -= t * gb;
        w_sq = w.iter().map(|v| v * v).sum();
        // Refresh margins exactly every so often to stop drift.
        z = if epochs % 32 == 0 { obj.margins(&w, b) } else { z_new };
        loss = if epochs % 32 == 0 {
            obj.loss_from_margins(&z, w_sq)
        } else {
            loss_new
        };
        step = t * 2.0;
    }

    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(Error::Training(format!("MP {mp}: non-finite weights")));
    }
    Ok(RelevanceModel {
        mp: mp.clone(),
        weights: w,
        bias: b,
        meta: TrainingMeta {
            method: String::new(),
            n_positive: positives.len(),
            n_negative: negatives.len(),
            fallback: false,
            stop,
            epochs,
        },
    })
}

/// Binary record layout, all integers little-endian:
///
/// ```text
/// u8        version (= 1)
/// u32 + [u8] MP id (UTF-8)
/// [u8; 32]  vocabulary fingerprint
/// u8 + [u8] method tag (UTF-8)
/// u8        fallback flag
/// u64, u64  positive / negative training counts
/// u8        stop reason (0 converged, 1 max epochs, 2 stalled)
/// u32       epochs
/// f64       bias
/// u64 + [f64] weights
/// ```
pub const MODEL_VERSION: u8 = 1;

pub fn write_model<W: Write>(mut out: W, model: &RelevanceModel, vocab_fingerprint: &[u8; 32]) -> Result<()> {
    out.write_all(&[MODEL_VERSION])?;
    let mp = model.mp.as_str().as_bytes();
    out.write_all(&(mp.len() as u32).to_le_bytes())?;
    out.write_all(mp)?;
    out.write_all(vocab_fingerprint)?;
    let method = model.meta.method.as_bytes();
    let method_len = u8::try_from(method.len()).map_err(|_| Error::Model("method tag too long".into()))?;
    out.write_all(&[method_len])?;
    out.write_all(method)?;
    out.write_all(&[u8::from(model.meta.fallback)])?;
    out.write_all(&(model.meta.n_positive as u64).to_le_bytes())?;
    out.write_all(&(model.meta.n_negative as u64).to_le_bytes())?;
    let stop = match model.meta.stop {
        StopReason::Converged => 0u8,
        StopReason::MaxEpochs => 1,
        StopReason::Stalled => 2,
    };
    out.write_all(&[stop])?;
    out.write_all(&(model.meta.epochs as u32).to_le_bytes())?;
    out.write_all(&model.bias.to_le_bytes())?;
    out.write_all(&(model.weights.len() as u64).to_le_bytes())?;
    for w in &model.weights {
        out.write_all(&w.to_le_bytes())?;
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Model(format!("truncated record: {e}")))?;
    Ok(buf)
}

fn read_string<R: Read>(r: &mut R, len: usize) -> Result<String> {
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Model(format!("truncated record: {e}")))?;
    String::from_utf8(buf).map_err(|_| Error::Model("invalid UTF-8".into()))
}

/// Reads one record written by [`write_model`].
pub fn read_model<R: Read>(mut r: R) -> Result<(RelevanceModel, [u8; 32])> {
    let [version] = read_array::<1, _>(&mut r)?;
    if version != MODEL_VERSION {
        return Err(Error::Model(format!("unsupported version {version}")));
    }
    let mp_len = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let mp = read_string(&mut r, mp_len)?;
    let fingerprint = read_array::<32, _>(&mut r)?;
    let [method_len] = read_array::<1, _>(&mut r)?;
    let method = read_string(&mut r, method_len as usize)?;
    let [fallback] = read_array::<1, _>(&mut r)?;
    let n_positive = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let n_negative = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let stop = match read_array::<1, _>(&mut r)? {
        [0] => StopReason::Converged,
        [1] => StopReason::MaxEpochs,
        [2] => StopReason::Stalled,
        [x] => return Err(Error::Model(format!("bad stop reason {x}"))),
    };
    let epochs = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let bias = f64::from_le_bytes(read_array(&mut r)?);
    let n = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let weights = (0..n)
        .map(|_| read_array(&mut r).map(f64::from_le_bytes))
        .collect::<Result<Vec<f64>>>()?;
    let model = RelevanceModel {
        mp: MpId(mp),
        weights,
        bias,
        meta: TrainingMeta {
            method,
            n_positive,
            n_negative,
            fallback: fallback != 0,
            stop,
            epochs,
        },
    };
    Ok((model, fingerprint))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(x: f64) -> SparseVector {
        SparseVector::from_dense(&[x.max(0.0), (-x).max(0.0)])
    }

    fn mp() -> MpId {
        "mp".into()
    }

    #[test]
    fn separable_data_orders_predictions() {
        let pos = vec![one_d(1.0), one_d(1.0)];
        let neg = vec![one_d(-1.0)];
        let m = train(&mp(), 2, &pos, &neg, &TrainParams::default()).unwrap();
        assert!(m.predict(&pos[0]) > 0.5);
        assert!(m.predict(&neg[0]) < 0.5);
    }

    #[test]
    fn symmetric_data_predicts_one_half() {
        let xs = vec![
            SparseVector::from_dense(&[0.6, 0.8]),
            SparseVector::from_dense(&[1.0, 0.0]),
        ];
        let m = train(&mp(), 2, &xs, &xs, &TrainParams::default()).unwrap();
        for x in &xs {
            assert!((m.predict(x) - 0.5).abs() <= 1e-3);
        }
        assert_eq!(m.meta.stop, StopReason::Converged);
    }

    #[test]
    fn empty_class_is_an_error() {
        let xs = vec![one_d(1.0)];
        assert!(matches!(
            train(&mp(), 2, &xs, &[], &TrainParams::default()),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn training_is_bit_deterministic_and_lowers_loss() {
        let pos = vec![
            SparseVector::from_dense(&[0.6, 0.8, 0.0]),
            SparseVector::from_dense(&[1.0, 0.0, 0.0]),
        ];
        let neg = vec![
            SparseVector::from_dense(&[0.0, 0.6, 0.8]),
            SparseVector::from_dense(&[0.0, 0.0, 1.0]),
        ];
        let p = TrainParams::default();
        let a = train(&mp(), 3, &pos, &neg, &p).unwrap();
        let b = train(&mp(), 3, &pos, &neg, &p).unwrap();
        assert_eq!(a, b);
        let obj = LogisticObjective::new(&pos, &neg, 3, p.reg_lambda);
        assert!(obj.loss(&a.weights, a.bias) <= obj.loss(&[0.0; 3], 0.0));
    }

    #[test]
    fn predict_basics() {
        let mut m = RelevanceModel {
            mp: mp(),
            weights: vec![0.0, 0.0],
            bias: 0.0,
            meta: TrainingMeta {
                method: "bas".into(),
                n_positive: 1,
                n_negative: 1,
                fallback: false,
                stop: StopReason::Converged,
                epochs: 0,
            },
        };
        let d = SparseVector::from_dense(&[0.6, 0.8]);
        assert_eq!(m.predict(&d), 0.5);
        m.bias = 0.7;
        assert_eq!(m.predict(&SparseVector::default()), sigmoid(0.7));
        let before = m.predict(&d);
        m.weights[1] = 0.3;
        assert!(m.predict(&d) > before);
        m.weights[1] = 1e6;
        let p = m.predict(&d);
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn model_record_round_trip() {
        let pos = vec![one_d(1.0)];
        let neg = vec![one_d(-1.0)];
        let mut m = train(&"mp Ä".into(), 2, &pos, &neg, &TrainParams::default()).unwrap();
        m.meta.method = "pul-km-b".into();
        m.meta.fallback = true;
        let mut buf = Vec::new();
        write_model(&mut buf, &m, &[7u8; 32]).unwrap();
        assert_eq!(buf[0], MODEL_VERSION);
        let (back, fp) = read_model(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert_eq!(fp, [7u8; 32]);
        assert!(read_model(&buf[..buf.len() - 1]).is_err());
        buf[0] = 9;
        assert!(read_model(buf.as_slice()).is_err());
    }
}
