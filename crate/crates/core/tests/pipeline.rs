use std::collections::BTreeSet;

use pulrec::corpus::{generate_synthetic, repeated_holdout, SyntheticSpec};
use pulrec::eval::{write_report, FoldLabel};
use pulrec::experiment::{prepare_fold, run_fold, run_sweep, Approach, Settings, TokenizedCorpus};

fn small_spec() -> SyntheticSpec {
    SyntheticSpec {
        n_topics: 3,
        n_mps: 6,
        topics_per_mp: 1,
        initiatives_per_mp: 12,
        vocab_size_per_topic: 15,
        shared_vocab_size: 20,
        doc_length: 30,
        noise_fraction: 0.1,
        seed: 5,
    }
}

#[test]
fn every_mp_scores_every_test_initiative() {
    let syn = generate_synthetic(&small_spec()).unwrap();
    let settings = Settings::default();
    let tokens = TokenizedCorpus::new(&syn.corpus, &settings.pipeline);
    let split = &repeated_holdout(&syn.corpus, 1, 0.8, 1).unwrap()[0];
    let fold = prepare_fold(&tokens, split).unwrap();
    let runs = run_fold(&fold, &Approach::ALL, &settings).unwrap();
    assert_eq!(runs.len(), 8);
    let test: BTreeSet<_> = split.test.iter().cloned().collect();
    for (approach, run) in &runs {
        assert_eq!(run.predictions.len(), 6, "{approach}");
        for scores in run.predictions.values() {
            assert_eq!(scores.keys().cloned().collect::<BTreeSet<_>>(), test, "{approach}");
            assert!(scores.values().all(|s| (0.0..=1.0).contains(s)), "{approach}");
        }
    }
    assert_eq!(runs[&Approach::ALL[2]].models.len(), 6);
}

#[test]
fn test_truth_is_participation() {
    let syn = generate_synthetic(&small_spec()).unwrap();
    let tokens = TokenizedCorpus::new(&syn.corpus, &Settings::default().pipeline);
    let split = &repeated_holdout(&syn.corpus, 1, 0.7, 3).unwrap()[0];
    let fold = prepare_fold(&tokens, split).unwrap();
    for (id, mps) in &fold.truth {
        let ini = syn.corpus.initiative(id).unwrap();
        assert_eq!(ini.participants().cloned().collect::<BTreeSet<_>>(), *mps);
    }
    // the vocabulary never sees test documents
    let train_terms: BTreeSet<&str> = fold
        .train
        .iter()
        .flat_map(|d| d.tokens.iter().map(String::as_str))
        .collect();
    assert_eq!(fold.vocab.len(), train_terms.len());
}

#[test]
fn sweep_report_is_sorted_and_averaged() {
    let syn = generate_synthetic(&small_spec()).unwrap();
    let settings = Settings {
        folds: 2,
        ..Settings::default()
    };
    let approaches = [Approach::ALL[0], Approach::ALL[6]];
    let out = run_sweep(&syn.corpus, &[1], &approaches, &settings).unwrap();
    assert_eq!(out.rows.len(), 2 * 3 * 9);
    let avg: Vec<_> = out.rows.iter().filter(|r| r.fold == FoldLabel::Average).collect();
    assert_eq!(avg.len(), 2 * 9);
    for a in avg {
        let folds: Vec<_> = out
            .rows
            .iter()
            .filter(|r| r.approach == a.approach && r.threshold == a.threshold && r.fold != FoldLabel::Average)
            .collect();
        let mean = folds.iter().map(|r| r.measures.macro_.f).sum::<f64>() / folds.len() as f64;
        assert!((mean - a.measures.macro_.f).abs() < 1e-12);
    }
    let mut csv = Vec::new();
    write_report(&mut csv, &out.rows).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("bas,1,"));
}
