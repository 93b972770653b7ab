use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use sha2::{Digest, Sha256};
use tempfile::TempDir;

use pulrec_cli::{execute, Command, EXIT_CONFIG, EXIT_DATA, EXIT_FALLBACK, REPORT_FILE, SIGNIFICANCE_FILE};

fn bundled_demo(dir: &Path) -> PathBuf {
    let src = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/demo.conf");
    let conf = dir.join("configs/demo.conf");
    fs::create_dir_all(conf.parent().unwrap()).unwrap();
    fs::copy(src, &conf).unwrap();
    conf
}

fn sha(path: &Path) -> Vec<u8> {
    Sha256::digest(fs::read(path).unwrap()).to_vec()
}

fn write_conf(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("exp.conf");
    fs::write(&p, body).unwrap();
    p
}

fn pulrec(conf: &Path, args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_pulrec"))
        .arg("--config")
        .arg(conf)
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn demo_synth_sweep_compare_reproduces() {
    let tmp = TempDir::new().unwrap();
    let conf = bundled_demo(tmp.path());
    let out = tmp.path().join("demo/out");
    let mut digests = Vec::new();
    for _ in 0..2 {
        execute(&conf, &Command::Synth).unwrap();
        let sweep = execute(&conf, &Command::Sweep).unwrap();
        assert_eq!(sweep.exit_code(), 0);
        let report = fs::read_to_string(out.join(REPORT_FILE)).unwrap();
        // 8 approaches x 9 thresholds x 2 cohorts x (5 folds + average)
        assert_eq!(report.lines().count(), 1 + 8 * 9 * 2 * 6);
        digests.push((sha(&tmp.path().join("demo/corpus.jsonl")), sha(&out.join(REPORT_FILE))));
    }
    assert_eq!(digests[0], digests[1]);

    let compared = pulrec(&conf, &["compare", "pul-km", "bas"]);
    assert!(
        compared.status.success(),
        "{}",
        String::from_utf8_lossy(&compared.stderr)
    );
    let sig = fs::read_to_string(out.join(SIGNIFICANCE_FILE)).unwrap();
    let rows: Vec<&str> = sig.lines().skip(1).collect();
    // one row per (measure, cohort)
    assert_eq!(rows.len(), 2 * 2);
    assert!(rows.iter().all(|r| r.starts_with("pul-km,bas,")));
}

#[test]
fn run_writes_predictions_and_models() {
    let tmp = TempDir::new().unwrap();
    let conf = write_conf(
        tmp.path(),
        "synth.n_mps = 6\nsynth.n_topics = 3\nsynth.initiatives_per_mp = 10\ncohorts = 5\napproach = pul-km-b\nfold = 1\ntrace = true\n",
    );
    execute(&conf, &Command::Synth).unwrap();
    let first = execute(&conf, &Command::Run).unwrap();
    assert_eq!(first.exit_code(), 0);
    let dir = tmp.path().join("out/run-pul-km-b-c5-f1");
    let preds = fs::read_to_string(dir.join("predictions.csv")).unwrap();
    assert_eq!(preds.lines().next(), Some("mp,initiative,score"));
    assert_eq!(fs::read_dir(dir.join("models")).unwrap().count(), 6);
    assert!(!fs::read_to_string(dir.join("trace.txt")).unwrap().is_empty());
    let h = sha(&dir.join("predictions.csv"));
    execute(&conf, &Command::Run).unwrap();
    assert_eq!(h, sha(&dir.join("predictions.csv")));
}

#[test]
fn split_writes_one_manifest_per_cohort() {
    let tmp = TempDir::new().unwrap();
    let conf = write_conf(
        tmp.path(),
        "synth.n_mps = 4\nsynth.n_topics = 2\ncohorts = 1, 1000\nfolds = 3\n",
    );
    execute(&conf, &Command::Synth).unwrap();
    let out = execute(&conf, &Command::Split).unwrap();
    assert_eq!(out.written, vec![tmp.path().join("out/splits_c1.jsonl")]);
    let text = fs::read_to_string(&out.written[0]).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(out.log.iter().any(|l| l.contains("cohort 1000")));
}

#[test]
fn degenerate_corpus_falls_back_with_exit_three() {
    let tmp = TempDir::new().unwrap();
    let mut lines = String::new();
    for i in 0..12 {
        for mp in ["a", "b", "c"] {
            if (i + mp.len()) % 2 == 0 || mp == "a" {
                lines.push_str(&format!(
                    "{{\"mp\":\"{mp}\",\"initiative\":\"i{i}\",\"text\":\"same words every time\"}}\n"
                ));
            }
        }
    }
    fs::write(tmp.path().join("corpus.jsonl"), lines).unwrap();
    let conf = write_conf(tmp.path(), "cohorts = 1\napproach = pul-km\n");
    let out = pulrec(&conf, &["run"]);
    assert_eq!(out.status.code(), Some(i32::from(EXIT_FALLBACK)));
    let dir = tmp.path().join("out/run-pul-km-c1-f0");
    assert!(dir.join("predictions.csv").exists());
    let log = fs::read_to_string(dir.join("run.log")).unwrap();
    assert!(log.contains("falling back"), "{log}");
}

#[test]
fn errors_name_the_config_key() {
    let tmp = TempDir::new().unwrap();
    let conf = write_conf(tmp.path(), "approaches = bas, svm\n");
    let out = pulrec(&conf, &["sweep"]);
    assert_eq!(out.status.code(), Some(i32::from(EXIT_CONFIG)));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`approaches`"));

    let conf = write_conf(tmp.path(), "cohorts = 1\n");
    let err = execute(&conf, &Command::Sweep).unwrap_err();
    assert_eq!(err.code, EXIT_CONFIG);
    assert!(err.message.contains("`corpus`"), "{err}");
    let err = execute(&conf, &Command::Compare(None)).unwrap_err();
    assert!(err.message.contains("`compare`"), "{err}");
    let err = execute(&conf, &Command::Compare(Some(("pul-km".into(), "bas".into())))).unwrap_err();
    assert!(err.message.contains("`out_dir`"), "{err}");
    let err = execute(&conf, &Command::Compare(Some(("pul-km".into(), "nope".into())))).unwrap_err();
    assert!(err.message.contains("`compare`"), "{err}");

    fs::write(tmp.path().join("corpus.jsonl"), "{\"mp\":\"a\"}\n").unwrap();
    let err = execute(&conf, &Command::Sweep).unwrap_err();
    assert_eq!(err.code, EXIT_DATA);
    assert!(
        err.message.contains("`corpus`") && err.message.contains("line 1"),
        "{err}"
    );
}
