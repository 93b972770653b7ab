//! Batch driver: each command reads one config file and writes its outputs
//! under `out_dir` (the synthetic corpus goes to `corpus`).

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use pulrec::classify::write_model;
use pulrec::config::ExperimentConfig;
use pulrec::corpus::{generate_synthetic, load_corpus, Corpus};
use pulrec::eval::{compare, read_report, write_comparisons, write_report, Measure};
use pulrec::experiment::{plan_cohort, prepare_fold, run_fold, run_sweep, Approach};
use pulrec::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_FALLBACK: u8 = 3;

pub const REPORT_FILE: &str = "report.csv";
pub const SIGNIFICANCE_FILE: &str = "significance.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Synth,
    Split,
    Run,
    Sweep,
    /// Explicit pair, or the config's `compare` list when `None`.
    Compare(Option<(String, String)>),
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl Failure {
    fn config(key: &str, message: impl std::fmt::Display) -> Failure {
        Failure {
            code: EXIT_CONFIG,
            message: Error::config(key, message.to_string()).to_string(),
        }
    }

    /// Attributes a library error to the config key whose input caused it.
    fn from_error(key: &str, e: Error) -> Failure {
        if e.is_config() {
            return Failure {
                code: EXIT_CONFIG,
                message: e.to_string(),
            };
        }
        let code = match e {
            Error::Io(_) => EXIT_CONFIG,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: format!("config key `{key}`: {e}"),
        }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub log: Vec<String>,
    pub fallback: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.fallback {
            EXIT_FALLBACK
        } else {
            EXIT_OK
        }
    }
}

type Run<T> = std::result::Result<T, Failure>;

pub fn execute(config_path: &Path, command: &Command) -> Run<Outcome> {
    let cfg = ExperimentConfig::load(config_path).map_err(|e| Failure::from_error("<file>", e))?;
    let mut out = Outcome::default();
    match command {
        Command::Synth => synth(&cfg, &mut out)?,
        Command::Split => split(&cfg, &mut out)?,
        Command::Run => run(&cfg, &mut out)?,
        Command::Sweep => sweep(&cfg, &mut out)?,
        Command::Compare(pair) => compare_cmd(&cfg, pair.as_ref(), &mut out)?,
    }
    Ok(out)
}

fn create(path: &Path, key: &str) -> Run<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Failure::config(key, format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::config(key, format!("{}: {e}", path.display())))
}

fn write_file(
    path: PathBuf,
    key: &str,
    out: &mut Outcome,
    f: impl FnOnce(&mut BufWriter<File>) -> pulrec::Result<()>,
) -> Run<()> {
    let mut w = create(&path, key)?;
    f(&mut w)
        .and_then(|_| w.flush().map_err(Error::from))
        .map_err(|e| Failure::config(key, format!("{}: {e}", path.display())))?;
    out.written.push(path);
    Ok(())
}

fn write_lines(path: PathBuf, key: &str, out: &mut Outcome, lines: &[String]) -> Run<()> {
    write_file(path, key, out, |w| {
        for l in lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })
}

fn load(cfg: &ExperimentConfig) -> Run<Corpus> {
    if !cfg.corpus.exists() {
        return Err(Failure::config(
            "corpus",
            format!("{} does not exist (run `synth` first?)", cfg.corpus.display()),
        ));
    }
    load_corpus(&cfg.corpus).map_err(|e| Failure::from_error("corpus", e))
}

fn synth(cfg: &ExperimentConfig, out: &mut Outcome) -> Run<()> {
    let syn = generate_synthetic(&cfg.synth).map_err(|e| Failure::config("synth", e))?;
    write_file(cfg.corpus.clone(), "corpus", out, |w| syn.corpus.write_jsonl(w))?;
    let topics = serde_json::json!({
        "mp_topics": syn.mp_topics,
        "initiative_topic": syn.initiative_topic,
    });
    write_file(cfg.out_dir.join("synthetic_topics.json"), "out_dir", out, |w| {
        serde_json::to_writer_pretty(&mut *w, &topics).map_err(|e| Error::Io(e.into()))?;
        writeln!(w)?;
        Ok(())
    })?;
    out.log.push(format!(
        "synthetic corpus: {} MPs, {} initiatives, {} documents",
        syn.corpus.mps().len(),
        syn.corpus.initiatives().len(),
        syn.corpus.num_documents()
    ));
    Ok(())
}

fn split(cfg: &ExperimentConfig, out: &mut Outcome) -> Run<()> {
    let corpus = load(cfg)?;
    let settings = cfg.settings().map_err(|e| Failure::from_error("<file>", e))?;
    for &cohort in &cfg.cohorts {
        let plan = match plan_cohort(&corpus, cohort, &settings) {
            Ok(p) => p,
            Err(Error::EmptyCohort { .. }) => {
                out.log.push(format!("cohort {cohort}: no MP qualifies, skipped"));
                continue;
            }
            Err(e) => return Err(Failure::from_error("cohorts", e)),
        };
        let lines = plan
            .splits
            .iter()
            .map(|s| serde_json::to_string(s).expect("split serializes"))
            .collect::<Vec<_>>();
        write_lines(
            cfg.out_dir.join(format!("splits_c{cohort}.jsonl")),
            "out_dir",
            out,
            &lines,
        )?;
    }
    if out.written.is_empty() {
        return Err(Failure::from_error(
            "cohorts",
            Error::EmptyCohort {
                min_k: cfg.cohorts.iter().copied().min().unwrap_or(0),
            },
        ));
    }
    Ok(())
}

fn run(cfg: &ExperimentConfig, out: &mut Outcome) -> Run<()> {
    let corpus = load(cfg)?;
    let settings = cfg.settings().map_err(|e| Failure::from_error("<file>", e))?;
    let cohort = cfg
        .run_cohort
        .or(cfg.cohorts.first().copied())
        .ok_or_else(|| Failure::config("cohort", "no cohort given"))?;
    let key = if cfg.run_cohort.is_some() { "cohort" } else { "cohorts" };
    let plan = plan_cohort(&corpus, cohort, &settings).map_err(|e| Failure::from_error(key, e))?;
    let split = &plan.splits[cfg.run_fold];
    let fold = prepare_fold(&plan.tokens, split).map_err(|e| Failure::from_error("corpus", e))?;
    let approach = cfg.run_approach;
    let mut runs = run_fold(&fold, &[approach], &settings).map_err(|e| Failure::from_error("approach", e))?;
    let result = runs.remove(&approach).expect("requested approach ran");

    let dir = cfg.out_dir.join(format!("run-{approach}-c{cohort}-f{}", cfg.run_fold));
    let mut rows = vec!["mp,initiative,score".to_owned()];
    for (mp, scores) in &result.predictions {
        rows.extend(scores.iter().map(|(ini, s)| format!("{mp},{ini},{s:.6}")));
    }
    write_lines(dir.join("predictions.csv"), "out_dir", out, &rows)?;
    let fingerprint = fold.vocab.fingerprint();
    for model in &result.models {
        write_file(
            dir.join("models").join(format!("{}.model", model.mp)),
            "out_dir",
            out,
            |w| write_model(w, model, &fingerprint),
        )?;
    }
    let mut log = vec![format!(
        "{approach} cohort {cohort} fold {}: {} MPs, {} train / {} test initiatives",
        cfg.run_fold,
        fold.mps.len(),
        split.train.len(),
        split.test.len()
    )];
    log.extend(result.events.iter().cloned());
    log.push(format!("fallbacks: {}", result.fallbacks));
    write_lines(dir.join("run.log"), "out_dir", out, &log)?;
    if cfg.trace {
        write_lines(dir.join("trace.txt"), "trace", out, &result.trace)?;
    }
    out.log.extend(log);
    out.fallback = result.fallbacks > 0;
    Ok(())
}

fn sweep(cfg: &ExperimentConfig, out: &mut Outcome) -> Run<()> {
    let corpus = load(cfg)?;
    let settings = cfg.settings().map_err(|e| Failure::from_error("<file>", e))?;
    let result =
        run_sweep(&corpus, &cfg.cohorts, &cfg.approaches, &settings).map_err(|e| Failure::from_error("cohorts", e))?;
    write_file(cfg.out_dir.join(REPORT_FILE), "out_dir", out, |w| {
        write_report(w, &result.rows)
    })?;
    let mut log = result.log.clone();
    log.push(format!("fallbacks: {}", result.fallbacks));
    write_lines(cfg.out_dir.join("sweep.log"), "out_dir", out, &log)?;
    if cfg.trace {
        write_lines(cfg.out_dir.join("trace.txt"), "trace", out, &result.trace)?;
    }
    out.log.extend(log);
    out.fallback = result.fallbacks > 0;
    Ok(())
}

fn compare_cmd(cfg: &ExperimentConfig, pair: Option<&(String, String)>, out: &mut Outcome) -> Run<()> {
    let pairs: Vec<(String, String)> = match pair {
        Some((a, b)) => {
            for tag in [a, b] {
                tag.parse::<Approach>().map_err(|e| Failure::config("compare", e))?;
            }
            vec![(a.clone(), b.clone())]
        }
        None => cfg.compare.iter().map(|(a, b)| (a.tag(), b.tag())).collect(),
    };
    if pairs.is_empty() {
        return Err(Failure::config("compare", "no approach pairs given"));
    }
    let path = cfg.out_dir.join(REPORT_FILE);
    let file = File::open(&path)
        .map_err(|e| Failure::config("out_dir", format!("{}: {e} (run `sweep` first?)", path.display())))?;
    let rows = read_report(BufReader::new(file)).map_err(|e| Failure::from_error("out_dir", e))?;
    let mut comparisons = Vec::new();
    for (a, b) in &pairs {
        let found =
            compare(&rows, a, b, &[Measure::MicroF, Measure::MacroF]).map_err(|e| Failure::from_error("out_dir", e))?;
        if found.is_empty() {
            out.log.push(format!("{a} vs {b}: no shared cohort in the report"));
        }
        comparisons.extend(found);
    }
    write_file(cfg.out_dir.join(SIGNIFICANCE_FILE), "out_dir", out, |w| {
        write_comparisons(w, &comparisons)
    })?;
    Ok(())
}
