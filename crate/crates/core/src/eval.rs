//! Thresholded evaluation against participation ground truth.
//!
//! An initiative is predicted relevant for MP `i` when `pr_i(d) >= t`. Per-MP
//! contingency counts give precision, recall and F; macro measures average
//! the per-MP values, micro measures pool the counts first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::{InitiativeId, MpId};
use crate::error::{Error, Result};

/// MP -> test initiative -> score.
pub type Predictions = BTreeMap<MpId, BTreeMap<InitiativeId, f64>>;
/// Test initiative -> participants.
pub type Truth = BTreeMap<InitiativeId, BTreeSet<MpId>>;

/// The default grid: 0.1, 0.2, ..., 0.9.
pub fn default_thresholds() -> Vec<f64> {
    (1..=9).map(|i| f64::from(i) / 10.0).collect()
}

/// Contingency counts for one MP at one threshold. True negatives are not
/// tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Contingency {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl std::ops::Add for Contingency {
    type Output = Contingency;
    fn add(self, o: Contingency) -> Contingency {
        Contingency {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

/// Counts, for every MP in `predictions`, over every initiative in `truth`.
pub fn count_contingency(
    predictions: &Predictions,
    truth: &Truth,
    threshold: f64,
) -> Result<BTreeMap<MpId, Contingency>> {
    predictions
        .iter()
        .map(|(mp, scores)| {
            let mut c = Contingency::default();
            for (ini, participants) in truth {
                let score = *scores.get(ini).ok_or_else(|| Error::MissingScore {
                    mp: mp.0.clone(),
                    initiative: ini.0.clone(),
                })?;
                match (participants.contains(mp), score >= threshold) {
                    (true, true) => c.tp += 1,
                    (false, true) => c.fp += 1,
                    (true, false) => c.fn_ += 1,
                    (false, false) => {}
                }
            }
            Ok((mp.clone(), c))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub p: f64,
    pub r: f64,
    pub f: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Zero denominators give zero.
pub fn prf(c: Contingency) -> Prf {
    let p = ratio(c.tp, c.tp + c.fp);
    let r = ratio(c.tp, c.tp + c.fn_);
    Prf {
        p,
        r,
        f: harmonic(p, r),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Measures {
    pub micro: Prf,
    pub macro_: Prf,
}

/// Micro: measures of the summed counts. Macro: unweighted means over MPs.
pub fn aggregate(per_mp: &[Contingency]) -> Measures {
    let pooled = per_mp.iter().copied().fold(Contingency::default(), |a, b| a + b);
    let micro = prf(pooled);
    let n = per_mp.len().max(1) as f64;
    let mut sum = Prf::default();
    for c in per_mp {
        let x = prf(*c);
        sum.p += x.p;
        sum.r += x.r;
        sum.f += x.f;
    }
    Measures {
        micro,
        macro_: Prf {
            p: sum.p / n,
            r: sum.r / n,
            f: sum.f / n,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FoldLabel {
    Fold(usize),
    Average,
}

impl fmt::Display for FoldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoldLabel::Fold(i) => write!(f, "{i}"),
            FoldLabel::Average => f.write_str("avg"),
        }
    }
}

impl FromStr for FoldLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "avg" => Ok(FoldLabel::Average),
            n => n.parse().map(FoldLabel::Fold).map_err(|_| format!("bad fold {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Measure {
    MicroP,
    MicroR,
    MicroF,
    MacroP,
    MacroR,
    MacroF,
}

impl Measure {
    pub const ALL: [Measure; 6] = [
        Measure::MicroP,
        Measure::MicroR,
        Measure::MicroF,
        Measure::MacroP,
        Measure::MacroR,
        Measure::MacroF,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::MicroP => "microP",
            Measure::MicroR => "microR",
            Measure::MicroF => "microF",
            Measure::MacroP => "macroP",
            Measure::MacroR => "macroR",
            Measure::MacroF => "macroF",
        }
    }
}

impl FromStr for Measure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown measure {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub approach: String,
    pub cohort: usize,
    pub fold: FoldLabel,
    pub threshold: f64,
    pub measures: Measures,
}

impl EvalRow {
    pub fn get(&self, m: Measure) -> f64 {
        let Measures { micro, macro_ } = &self.measures;
        match m {
            Measure::MicroP => micro.p,
            Measure::MicroR => micro.r,
            Measure::MicroF => micro.f,
            Measure::MacroP => macro_.p,
            Measure::MacroR => macro_.r,
            Measure::MacroF => macro_.f,
        }
    }
}

/// Predictions and ground truth of one fold.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold: usize,
    pub predictions: Predictions,
    pub truth: Truth,
}

/// Per-fold rows for every threshold, plus one fold-averaged row per
/// threshold. Rows come back in canonical order.
pub fn sweep(approach: &str, cohort: usize, folds: &[FoldOutcome], thresholds: &[f64]) -> Result<Vec<EvalRow>> {
    let mut rows = Vec::with_capacity(thresholds.len() * (folds.len() + 1));
    for &t in thresholds {
        let mut per_fold = Vec::with_capacity(folds.len());
        for fo in folds {
            let counts: Vec<Contingency> = count_contingency(&fo.predictions, &fo.truth, t)?
                .into_values()
                .collect();
            per_fold.push(EvalRow {
                approach: approach.to_owned(),
                cohort,
                fold: FoldLabel::Fold(fo.fold),
                threshold: t,
                measures: aggregate(&counts),
            });
        }
        if !per_fold.is_empty() {
            rows.push(average_rows(&per_fold));
        }
        rows.extend(per_fold);
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// Measure-wise arithmetic mean, summed in the given order.
pub fn average_rows(rows: &[EvalRow]) -> EvalRow {
    let n = rows.len() as f64;
    let mean = |get: fn(&Measures) -> f64| rows.iter().map(|r| get(&r.measures)).sum::<f64>() / n;
    EvalRow {
        approach: rows[0].approach.clone(),
        cohort: rows[0].cohort,
        fold: FoldLabel::Average,
        threshold: rows[0].threshold,
        measures: Measures {
            micro: Prf {
                p: mean(|m| m.micro.p),
                r: mean(|m| m.micro.r),
                f: mean(|m| m.micro.f),
            },
            macro_: Prf {
                p: mean(|m| m.macro_.p),
                r: mean(|m| m.macro_.r),
                f: mean(|m| m.macro_.f),
            },
        },
    }
}

/// Canonical order: approach, cohort, threshold, fold (averages last).
pub fn sort_rows(rows: &mut [EvalRow]) {
    rows.sort_by(|a, b| {
        a.approach
            .cmp(&b.approach)
            .then(a.cohort.cmp(&b.cohort))
            .then(a.threshold.total_cmp(&b.threshold))
            .then(a.fold.cmp(&b.fold))
    });
}

pub const REPORT_HEADER: &str = "approach,cohort,fold,threshold,microP,microR,microF,macroP,macroR,macroF";

pub fn write_report<W: Write>(mut out: W, rows: &[EvalRow]) -> Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in rows {
        let Measures { micro, macro_ } = &r.measures;
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.approach, r.cohort, r.fold, r.threshold, micro.p, micro.r, micro.f, macro_.p, macro_.r, macro_.f
        )?;
    }
    Ok(())
}

/// Reads a report written by [`write_report`]. Values carry the file's six
/// decimals of precision.
pub fn read_report<R: BufRead>(input: R) -> Result<Vec<EvalRow>> {
    let mut rows = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if idx == 0 {
            if line.trim() != REPORT_HEADER {
                return Err(Error::Parse {
                    line: 1,
                    message: "unexpected report header".into(),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: String| Error::Parse {
            line: line_no,
            message: m,
        };
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 10 {
            return Err(bad(format!("expected 10 columns, found {}", cells.len())));
        }
        let num = |i: usize| {
            cells[i]
                .parse::<f64>()
                .map_err(|e| bad(format!("column {}: {e}", i + 1)))
        };
        rows.push(EvalRow {
            approach: cells[0].to_owned(),
            cohort: cells[1].parse().map_err(|e| bad(format!("cohort: {e}")))?,
            fold: cells[2].parse().map_err(bad)?,
            threshold: num(3)?,
            measures: Measures {
                micro: Prf {
                    p: num(4)?,
                    r: num(5)?,
                    f: num(6)?,
                },
                macro_: Prf {
                    p: num(7)?,
                    r: num(8)?,
                    f: num(9)?,
                },
            },
        });
    }
    Ok(rows)
}

/// Grid point with the highest fold-averaged `measure`; ties keep the lowest
/// threshold.
pub fn best_threshold(rows: &[EvalRow], approach: &str, cohort: usize, measure: Measure) -> Option<(f64, f64)> {
    rows.iter()
        .filter(|r| r.approach == approach && r.cohort == cohort && r.fold == FoldLabel::Average)
        .map(|r| (r.threshold, r.get(measure)))
        .fold(None, |best: Option<(f64, f64)>, (t, v)| match best {
            Some((bt, bv)) if bv > v || (bv == v && bt <= t) => Some((bt, bv)),
            _ => Some((t, v)),
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub significant: bool,
}

/// Two-sided 95% critical value of Student's t.
pub fn t_critical_95(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1").inverse_cdf(0.975)
}

/// Paired two-sided t-test at 95% on `a - b`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::LengthMismatch { left: n, right: 2 });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    if sd == 0.0 {
        return Ok(if mean == 0.0 {
            TTest {
                t: 0.0,
                significant: false,
            }
        } else {
            TTest {
                t: mean.signum() * f64::INFINITY,
                significant: true,
            }
        });
    }
    let t = mean / (sd / nf.sqrt());
    Ok(TTest {
        t,
        significant: t.abs() > t_critical_95(n - 1),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub approach_a: String,
    pub approach_b: String,
    pub measure: Measure,
    pub cohort: usize,
    pub test: TTest,
}

fn fold_values(rows: &[EvalRow], approach: &str, cohort: usize, threshold: f64, m: Measure) -> Vec<f64> {
    let mut v: Vec<(usize, f64)> = rows
        .iter()
        .filter(|r| r.approach == approach && r.cohort == cohort && r.threshold == threshold)
        .filter_map(|r| match r.fold {
            FoldLabel::Fold(i) => Some((i, r.get(m))),
            FoldLabel::Average => None,
        })
        .collect();
    v.sort_by_key(|&(i, _)| i);
    v.into_iter().map(|(_, x)| x).collect()
}

/// For every cohort both approaches cover and each measure: the per-fold
/// values at each approach's best threshold, compared by a paired t-test.
pub fn compare(rows: &[EvalRow], a: &str, b: &str, measures: &[Measure]) -> Result<Vec<Comparison>> {
    let cohorts =
        |name: &str| -> BTreeSet<usize> { rows.iter().filter(|r| r.approach == name).map(|r| r.cohort).collect() };
    let shared: Vec<usize> = cohorts(a).intersection(&cohorts(b)).copied().collect();
    let mut out = Vec::new();
    for cohort in shared {
        for &m in measures {
            let (Some((ta, _)), Some((tb, _))) =
                (best_threshold(rows, a, cohort, m), best_threshold(rows, b, cohort, m))
            else {
                continue;
            };
            let va = fold_values(rows, a, cohort, ta, m);
            let vb = fold_values(rows, b, cohort, tb, m);
            out.push(Comparison {
                approach_a: a.to_owned(),
                approach_b: b.to_owned(),
                measure: m,
                cohort,
                test: paired_ttest(&va, &vb)?,
            });
        }
    }
    Ok(out)
}

pub const COMPARISON_HEADER: &str = "approach_a,approach_b,measure,cohort,t_stat,significant";

pub fn write_comparisons<W: Write>(mut out: W, rows: &[Comparison]) -> Result<()> {
    writeln!(out, "{COMPARISON_HEADER}")?;
    for c in rows {
        writeln!(
            out,
            "{},{},{},{},{:.6},{}",
            c.approach_a,
            c.approach_b,
            c.measure.name(),
            c.cohort,
            c.test.t,
            c.test.significant
        )?;
    }
    Ok(())
}
