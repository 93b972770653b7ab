//! Repeated-holdout experiments: per fold, build the vocabulary on the
//! training initiatives, learn one relevance model per MP for every approach,
//! and score every test initiative for every MP.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::balance::balance_training_set;
use crate::classify::{train, RelevanceModel, TrainParams};
use crate::corpus::{filter_min_interventions, repeated_holdout, Corpus, InitiativeId, MpId, Split};
use crate::error::{Error, Result};
use crate::eval::{self, EvalRow, FoldOutcome, Predictions, Truth};
use crate::ir::{build_profiles, Bm25Index, Bm25Params, IrMode};
use crate::pul::{select_rn_baseline, select_rn_kmeans_traced, select_rn_nb, PulInput, ReliableNegatives, RnMethod};
use crate::seed;
use crate::textprep::TokenPipeline;
use crate::vectorspace::{SparseVector, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Approach {
    Classifier { negatives: RnMethod, balanced: bool },
    Retrieval(IrMode),
}

impl Approach {
    pub const ALL: [Approach; 8] = [
        Approach::Classifier {
            negatives: RnMethod::Baseline,
            balanced: false,
        },
        Approach::Classifier {
            negatives: RnMethod::Baseline,
            balanced: true,
        },
        Approach::Classifier {
            negatives: RnMethod::PulKm,
            balanced: false,
        },
        Approach::Classifier {
            negatives: RnMethod::PulKm,
            balanced: true,
        },
        Approach::Classifier {
            negatives: RnMethod::PulNb,
            balanced: false,
        },
        Approach::Classifier {
            negatives: RnMethod::PulNb,
            balanced: true,
        },
        Approach::Retrieval(IrMode::Interventions),
        Approach::Retrieval(IrMode::Profiles),
    ];

    pub fn tag(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Approach::Classifier { negatives, balanced } => {
                write!(f, "{negatives}{}", if *balanced { "-b" } else { "" })
            }
            Approach::Retrieval(mode) => write!(f, "{mode}"),
        }
    }
}

impl FromStr for Approach {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Approach::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| format!("unknown approach {s:?}"))
    }
}

/// Everything a sweep needs besides the corpus.
#[derive(Debug, Clone)]
pub struct Settings {
    pub pipeline: TokenPipeline,
    pub master_seed: u64,
    pub folds: usize,
    pub train_fraction: f64,
    pub thresholds: Vec<f64>,
    pub max_iter: usize,
    pub nb_alpha: f64,
    pub train: TrainParams,
    pub smote_k: usize,
    pub bm25: Bm25Params,
    /// Collect constrained 2-means iteration traces.
    pub trace: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            pipeline: TokenPipeline::default(),
            master_seed: 0,
            folds: 5,
            train_fraction: 0.8,
            thresholds: eval::default_thresholds(),
            max_iter: 100,
            nb_alpha: 1.0,
            train: TrainParams::default(),
            smote_k: 5,
            bm25: Bm25Params::default(),
            trace: false,
        }
    }
}

/// One initiative's documents as `(participant, tokens)`.
pub type TokenizedInitiative = (InitiativeId, Vec<(MpId, Vec<String>)>);

/// Preprocessed documents: per initiative, each participant's tokens.
#[derive(Debug, Clone)]
pub struct TokenizedCorpus {
    pub mps: Vec<MpId>,
    pub initiatives: Vec<TokenizedInitiative>,
}

impl TokenizedCorpus {
    pub fn new(corpus: &Corpus, pipeline: &TokenPipeline) -> TokenizedCorpus {
        TokenizedCorpus {
            mps: corpus.mps().iter().cloned().collect(),
            initiatives: corpus
                .initiatives()
                .iter()
                .map(|ini| {
                    let docs = ini
                        .documents()
                        .iter()
                        .map(|(mp, text)| (mp.clone(), pipeline.preprocess(text)))
                        .collect();
                    (ini.id.clone(), docs)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainDoc {
    pub mp: MpId,
    pub initiative: InitiativeId,
    pub tokens: Vec<String>,
    pub vector: SparseVector,
}

#[derive(Debug, Clone)]
pub struct TestDoc {
    pub initiative: InitiativeId,
    pub tokens: Vec<String>,
    pub vector: SparseVector,
}

/// One fold, vectorized under a vocabulary built from its training side.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub split: Split,
    pub mps: Vec<MpId>,
    pub vocab: Vocabulary,
    pub train: Vec<TrainDoc>,
    pub test: Vec<TestDoc>,
    pub truth: Truth,
}

pub fn prepare_fold(tokens: &TokenizedCorpus, split: &Split) -> Result<FoldData> {
    let mut train_raw = Vec::new();
    let mut test_raw = Vec::new();
    let mut truth = Truth::new();
    for (id, docs) in &tokens.initiatives {
        if split.train.contains(id) {
            for (mp, toks) in docs {
                train_raw.push((mp.clone(), id.clone(), toks.clone()));
            }
        } else if split.test.contains(id) {
            let joined: Vec<String> = docs.iter().flat_map(|(_, t)| t.iter().cloned()).collect();
            test_raw.push((id.clone(), joined));
            truth.insert(id.clone(), docs.iter().map(|(mp, _)| mp.clone()).collect());
        }
    }
    let token_lists: Vec<&[String]> = train_raw.iter().map(|(_, _, t)| t.as_slice()).collect();
    let vocab = Vocabulary::build(&token_lists)?;
    let train = train_raw
        .into_iter()
        .map(|(mp, initiative, tokens)| {
            let vector = vocab.vectorize(&tokens);
            TrainDoc {
                mp,
                initiative,
                tokens,
                vector,
            }
        })
        .collect();
    let test = test_raw
        .into_iter()
        .map(|(initiative, tokens)| {
            let vector = vocab.vectorize(&tokens);
            TestDoc {
                initiative,
                tokens,
                vector,
            }
        })
        .collect();
    Ok(FoldData {
        split: split.clone(),
        mps: tokens.mps.clone(),
        vocab,
        train,
        test,
        truth,
    })
}

/// Output of one approach on one fold.
#[derive(Debug, Clone, Default)]
pub struct FoldRun {
    pub predictions: Predictions,
    pub models: Vec<RelevanceModel>,
    /// Human-readable notes: fallbacks, untrainable MPs.
    pub events: Vec<String>,
    pub fallbacks: usize,
    /// `mp iteration positive_size negative_size objective`
    pub trace: Vec<String>,
}

#[cfg(feature = "parallel")]
fn map_ordered<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_ordered<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}

/// approach, scores, model, log notes, fell back
type ApproachResult = (
    Approach,
    BTreeMap<InitiativeId, f64>,
    Option<RelevanceModel>,
    Vec<String>,
    bool,
);

struct MpResult {
    per_approach: Vec<ApproachResult>,
    trace: Vec<String>,
}

fn zero_scores(fold: &FoldData) -> BTreeMap<InitiativeId, f64> {
    fold.test.iter().map(|d| (d.initiative.clone(), 0.0)).collect()
}

fn run_mp(fold: &FoldData, mp: &MpId, approaches: &[Approach], settings: &Settings) -> Result<MpResult> {
    let mut pos_vec = Vec::new();
    let mut pos_tok = Vec::new();
    let mut unl_vec = Vec::new();
    let mut unl_tok = Vec::new();
    for d in &fold.train {
        if &d.mp == mp {
            pos_vec.push(d.vector.clone());
            pos_tok.push(d.tokens.as_slice());
        } else {
            unl_vec.push(d.vector.clone());
            unl_tok.push(d.tokens.as_slice());
        }
    }
    let f = fold.split.fold_index;
    let mut out = MpResult {
        per_approach: Vec::new(),
        trace: Vec::new(),
    };
    let Ok(input) = PulInput::new(&pos_vec, &unl_vec) else {
        for &a in approaches {
            let note = format!(
                "fold {f} {a} {mp}: untrainable ({} positive, {} unlabeled documents); scoring 0",
                pos_vec.len(),
                unl_vec.len()
            );
            out.per_approach.push((a, zero_scores(fold), None, vec![note], false));
        }
        return Ok(out);
    };

    let mut selections: BTreeMap<RnMethod, ReliableNegatives> = BTreeMap::new();
    for &a in approaches {
        let Approach::Classifier {
            negatives: method,
            balanced,
        } = a
        else {
            continue;
        };
        if let Entry::Vacant(slot) = selections.entry(method) {
            let rn = match method {
                RnMethod::Baseline => select_rn_baseline(&input),
                RnMethod::PulKm => select_rn_kmeans_traced(&input, settings.max_iter, |t| {
                    if settings.trace {
                        out.trace.push(format!("{f} {mp} {}", t.line()));
                    }
                }),
                RnMethod::PulNb => {
                    let to_vecs = |v: &[&[String]]| v.iter().map(|t| t.to_vec()).collect::<Vec<_>>();
                    select_rn_nb(&input, &to_vecs(&pos_tok), &to_vecs(&unl_tok), settings.nb_alpha)?
                }
            };
            slot.insert(rn);
        }
        let rn = &selections[&method];
        let mut notes = Vec::new();
        let fallback = rn.degenerate || rn.is_empty();
        let negatives: Vec<SparseVector> = if fallback {
            notes.push(format!(
                "fold {f} {a} {mp}: no reliable negatives selected; falling back to all {} unlabeled documents",
                unl_vec.len()
            ));
            unl_vec.clone()
        } else {
            rn.indices.iter().map(|&k| unl_vec[k].clone()).collect()
        };
        let (p, n) = if balanced {
            balance_training_set(
                pos_vec.clone(),
                negatives,
                settings.smote_k,
                seed::keyed_seed(fold.split.seed, mp.as_str()),
            )?
        } else {
            (pos_vec.clone(), negatives)
        };
        let mut model = train(mp, fold.vocab.len(), &p, &n, &settings.train)?;
        model.meta.method = a.tag();
        model.meta.fallback = fallback;
        let scores = fold
            .test
            .iter()
            .map(|d| (d.initiative.clone(), model.predict(&d.vector)))
            .collect();
        out.per_approach.push((a, scores, Some(model), notes, fallback));
    }
    Ok(out)
}

fn run_retrieval(fold: &FoldData, mode: IrMode, settings: &Settings) -> Result<FoldRun> {
    let docs: Vec<(MpId, Vec<String>)> = match mode {
        IrMode::Interventions => fold.train.iter().map(|d| (d.mp.clone(), d.tokens.clone())).collect(),
        IrMode::Profiles => build_profiles(fold.train.iter().map(|d| (&d.mp, d.tokens.as_slice()))),
    };
    let index = Bm25Index::build(&docs, settings.bm25)?;
    let mut predictions: Predictions = fold.mps.iter().map(|mp| (mp.clone(), BTreeMap::new())).collect();
    for d in &fold.test {
        let ranked: BTreeMap<MpId, f64> = index.score_mps(&d.tokens, mode)?.into_iter().collect();
        for (mp, scores) in predictions.iter_mut() {
            scores.insert(d.initiative.clone(), ranked.get(mp).copied().unwrap_or(0.0));
        }
    }
    Ok(FoldRun {
        predictions,
        ..FoldRun::default()
    })
}

/// Runs every requested approach on one fold. MPs are processed
/// independently (in parallel with the `parallel` feature); results are
/// assembled in MP order so output does not depend on scheduling.
pub fn run_fold(fold: &FoldData, approaches: &[Approach], settings: &Settings) -> Result<BTreeMap<Approach, FoldRun>> {
    let mut runs: BTreeMap<Approach, FoldRun> = BTreeMap::new();
    let classifiers: Vec<Approach> = approaches
        .iter()
        .copied()
        .filter(|a| matches!(a, Approach::Classifier { .. }))
        .collect();
    if !classifiers.is_empty() {
        let per_mp = map_ordered(&fold.mps, |mp| run_mp(fold, mp, &classifiers, settings));
        for (mp, res) in fold.mps.iter().zip(per_mp) {
            let res = res?;
            for (a, scores, model, notes, fallback) in res.per_approach {
                let run = runs.entry(a).or_default();
                run.predictions.insert(mp.clone(), scores);
                run.models.extend(model);
                run.events.extend(notes);
                run.fallbacks += usize::from(fallback);
            }
            // One trace per MP, shared by pul-km and pul-km-b.
            if let Some(run) = runs.get_mut(&Approach::Classifier {
                negatives: RnMethod::PulKm,
                balanced: false,
            }) {
                run.trace.extend(res.trace.iter().cloned());
            } else if let Some(run) = runs.get_mut(&Approach::Classifier {
                negatives: RnMethod::PulKm,
                balanced: true,
            }) {
                run.trace.extend(res.trace.iter().cloned());
            }
        }
    }
    for &a in approaches {
        if let Approach::Retrieval(mode) = a {
            runs.insert(a, run_retrieval(fold, mode, settings)?);
        }
    }
    Ok(runs)
}

/// Everything needed to run folds of one cohort.
pub struct CohortPlan {
    pub cohort: usize,
    pub corpus: Corpus,
    pub tokens: TokenizedCorpus,
    pub splits: Vec<Split>,
}

pub fn plan_cohort(corpus: &Corpus, cohort: usize, settings: &Settings) -> Result<CohortPlan> {
    let filtered = filter_min_interventions(corpus, cohort)?;
    let splits = repeated_holdout(&filtered, settings.folds, settings.train_fraction, settings.master_seed)?;
    let tokens = TokenizedCorpus::new(&filtered, &settings.pipeline);
    Ok(CohortPlan {
        cohort,
        corpus: filtered,
        tokens,
        splits,
    })
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    pub rows: Vec<EvalRow>,
    pub log: Vec<String>,
    pub fallbacks: usize,
    pub trace: Vec<String>,
}

/// The full protocol: for every cohort (MPs with at least that many
/// initiatives), every fold and every approach, sweep the threshold grid.
/// Cohorts nobody qualifies for are skipped and logged; it is an error if
/// every cohort is empty.
pub fn run_sweep(
    corpus: &Corpus,
    cohorts: &[usize],
    approaches: &[Approach],
    settings: &Settings,
) -> Result<SweepOutput> {
    let mut out = SweepOutput::default();
    let mut previous: Option<(Corpus, BTreeMap<Approach, Vec<FoldOutcome>>)> = None;
    let mut any = false;
    for &cohort in cohorts {
        let plan = match plan_cohort(corpus, cohort, settings) {
            Ok(p) => p,
            Err(Error::EmptyCohort { .. }) => {
                out.log.push(format!("cohort {cohort}: no MP qualifies, skipped"));
                continue;
            }
            Err(e) => return Err(e),
        };
        any = true;
        out.log.push(format!(
            "cohort {cohort}: {} MPs, {} initiatives, {} documents",
            plan.corpus.mps().len(),
            plan.corpus.initiatives().len(),
            plan.corpus.num_documents()
        ));
        let outcomes = match &previous {
            Some((c, o)) if c == &plan.corpus => {
                out.log.push(format!(
                    "cohort {cohort}: same corpus as the previous cohort, reusing its folds"
                ));
                o.clone()
            }
            _ => {
                let mut outcomes: BTreeMap<Approach, Vec<FoldOutcome>> = BTreeMap::new();
                for split in &plan.splits {
                    let fold = prepare_fold(&plan.tokens, split)?;
                    for (a, run) in run_fold(&fold, approaches, settings)? {
                        out.log
                            .extend(run.events.iter().map(|e| format!("cohort {cohort} {e}")));
                        out.fallbacks += run.fallbacks;
                        out.trace.extend(run.trace.iter().map(|l| format!("{cohort} {l}")));
                        outcomes.entry(a).or_default().push(FoldOutcome {
                            fold: split.fold_index,
                            predictions: run.predictions,
                            truth: fold.truth.clone(),
                        });
                    }
                }
                outcomes
            }
        };
        for (a, folds) in &outcomes {
            out.rows
                .extend(eval::sweep(&a.tag(), cohort, folds, &settings.thresholds)?);
        }
        previous = Some((plan.corpus, outcomes));
    }
    if !any {
        return Err(Error::EmptyCohort {
            min_k: cohorts.iter().copied().min().unwrap_or(0),
        });
    }
    eval::sort_rows(&mut out.rows);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SyntheticSpec};

    #[test]
    fn approach_tags_round_trip() {
        let tags: Vec<String> = Approach::ALL.iter().map(Approach::tag).collect();
        assert_eq!(
            tags,
            ["bas", "bas-b", "pul-km", "pul-km-b", "pul-nb", "pul-nb-b", "ir-i", "ir-p"]
        );
        for a in Approach::ALL {
            assert_eq!(a.tag().parse::<Approach>().unwrap(), a);
        }
        assert!("svm".parse::<Approach>().is_err());
    }

    #[test]
    fn small_sweep_covers_every_mp_and_initiative() {
        let spec = SyntheticSpec {
            n_topics: 3,
            n_mps: 6,
            topics_per_mp: 1,
            initiatives_per_mp: 12,
            vocab_size_per_topic: 15,
            shared_vocab_size: 10,
            doc_length: 20,
            noise_fraction: 0.1,
            seed: 4,
        };
        let corpus = generate_synthetic(&spec).unwrap().corpus;
        let settings = Settings {
            folds: 2,
            master_seed: 1,
            ..Settings::default()
        };
        let out = run_sweep(&corpus, &[10, 500], &Approach::ALL, &settings).unwrap();
        assert_eq!(out.rows.len(), 8 * 9 * 3);
        assert!(out.log.iter().any(|l| l.contains("cohort 500")));
    }
}
