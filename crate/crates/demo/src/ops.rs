use serde::{Deserialize, Serialize};

use pulrec::corpus::{MpId, SyntheticSpec};
use pulrec::eval::FoldLabel;
use pulrec::experiment::{run_sweep, Approach, Settings};
use pulrec::ir::{build_profiles, Bm25Index, Bm25Params, IrMode};
use pulrec::pul::{select_rn_kmeans_traced, Cluster, PulInput};
use pulrec::textprep::TokenPipeline;
use pulrec::vectorspace::SparseVector;

type Out = Result<String, String>;

fn parse<'a, T: Deserialize<'a>>(input: &'a str) -> Result<T, String> {
    serde_json::from_str(input).map_err(|e| format!("bad input: {e}"))
}

fn emit<T: Serialize>(value: &T) -> Out {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Deserialize)]
struct PointsIn {
    positives: Vec<[f64; 2]>,
    unlabeled: Vec<[f64; 2]>,
    #[serde(default = "default_max_iter")]
    max_iter: usize,
}

fn default_max_iter() -> usize {
    100
}

#[derive(Serialize)]
pub struct Step {
    pub iteration: usize,
    /// true = positive cluster; positives first, then unlabeled.
    pub positive: Vec<bool>,
    pub positive_centroid: [f64; 2],
    pub negative_centroid: [f64; 2],
    pub objective: f64,
}

#[derive(Serialize)]
pub struct ClusterOut {
    pub steps: Vec<Step>,
    /// Indices into `unlabeled`.
    pub reliable_negatives: Vec<usize>,
    pub degenerate: bool,
}

fn xy(v: &SparseVector) -> [f64; 2] {
    [v.get(0), v.get(1)]
}

pub fn cluster_points(input: &str) -> Out {
    let req: PointsIn = parse(input)?;
    let unit = |ps: &[[f64; 2]]| -> Vec<SparseVector> {
        ps.iter().map(|p| SparseVector::from_dense(p).normalized()).collect()
    };
    let (pos, unl) = (unit(&req.positives), unit(&req.unlabeled));
    let input = PulInput::new(&pos, &unl).map_err(|e| e.to_string())?;
    let mut steps = Vec::new();
    let rn = select_rn_kmeans_traced(&input, req.max_iter.max(1), |t| {
        steps.push(Step {
            iteration: t.iteration,
            positive: t.assignment.iter().map(|&c| c == Cluster::Positive).collect(),
            positive_centroid: xy(t.positive_centroid),
            negative_centroid: xy(t.negative_centroid),
            objective: t.objective,
        })
    });
    emit(&ClusterOut {
        steps,
        reliable_negatives: rn.indices,
        degenerate: rn.degenerate,
    })
}

#[derive(Serialize)]
pub struct Curve {
    pub approach: String,
    pub thresholds: Vec<f64>,
    pub micro_f: Vec<f64>,
    pub macro_f: Vec<f64>,
}

pub fn threshold_sweep(noise_fraction: f64, seed: u64) -> Out {
    let spec = SyntheticSpec {
        n_topics: 4,
        n_mps: 8,
        topics_per_mp: 1,
        initiatives_per_mp: 15,
        vocab_size_per_topic: 25,
        shared_vocab_size: 40,
        doc_length: 40,
        noise_fraction,
        seed,
    };
    let syn = pulrec::corpus::generate_synthetic(&spec).map_err(|e| e.to_string())?;
    let settings = Settings {
        master_seed: seed,
        folds: 2,
        ..Settings::default()
    };
    let approaches: Vec<Approach> = ["bas", "pul-km", "ir-i"].iter().map(|t| t.parse().unwrap()).collect();
    let sweep = run_sweep(&syn.corpus, &[1], &approaches, &settings).map_err(|e| e.to_string())?;
    let mut curves = Vec::new();
    for a in &approaches {
        let tag = a.tag();
        let rows: Vec<_> = sweep
            .rows
            .iter()
            .filter(|r| r.approach == tag && r.fold == FoldLabel::Average)
            .collect();
        curves.push(Curve {
            approach: tag,
            thresholds: rows.iter().map(|r| r.threshold).collect(),
            micro_f: rows.iter().map(|r| r.measures.micro.f).collect(),
            macro_f: rows.iter().map(|r| r.measures.macro_.f).collect(),
        });
    }
    emit(&curves)
}

#[derive(Deserialize)]
struct Doc {
    mp: String,
    text: String,
}

#[derive(Deserialize)]
struct RankIn {
    documents: Vec<Doc>,
    query: String,
    #[serde(default = "default_mode")]
    mode: String,
}

fn default_mode() -> String {
    "ir-i".into()
}

#[derive(Serialize)]
pub struct Ranked {
    pub mp: String,
    pub score: f64,
}

pub fn rank_mps(input: &str) -> Out {
    let req: RankIn = parse(input)?;
    let pipeline = TokenPipeline::default();
    let docs: Vec<(MpId, Vec<String>)> = req
        .documents
        .iter()
        .map(|d| (MpId::from(d.mp.as_str()), pipeline.preprocess(&d.text)))
        .collect();
    let mode = match req.mode.as_str() {
        "ir-i" => IrMode::Interventions,
        "ir-p" => IrMode::Profiles,
        other => return Err(format!("unknown mode {other:?}")),
    };
    let docs = match mode {
        IrMode::Interventions => docs,
        IrMode::Profiles => build_profiles(docs.iter().map(|(m, t)| (m, t.as_slice()))),
    };
    let index = Bm25Index::build(&docs, Bm25Params::default()).map_err(|e| e.to_string())?;
    let ranked = index
        .score_mps(&pipeline.preprocess(&req.query), mode)
        .map_err(|e| e.to_string())?;
    emit(
        &ranked
            .into_iter()
            .map(|(mp, score)| Ranked {
                mp: mp.to_string(),
                score,
            })
            .collect::<Vec<_>>(),
    )
}
