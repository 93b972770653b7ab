use std::collections::BTreeSet;

use proptest::prelude::*;

use pulrec::corpus::{filter_min_interventions, repeated_holdout, Corpus, Intervention};
use pulrec::eval::{aggregate, prf, Contingency};
use pulrec::ir::{Bm25Index, Bm25Params, IrMode};
use pulrec::vectorspace::{cosine, SparseVector};
use pulrec::Error;

fn corpus_from(pairs: &[(u8, u8)]) -> Option<Corpus> {
    let ivs: Vec<Intervention> = pairs
        .iter()
        .map(|&(mp, ini)| Intervention {
            mp: format!("m{mp}").into(),
            initiative: format!("i{ini:03}").into(),
            text: format!("w{mp} w{ini}"),
        })
        .collect();
    Corpus::from_interventions(ivs).ok()
}

fn contingency() -> impl Strategy<Value = Contingency> {
    (0u64..50, 0u64..50, 0u64..50).prop_map(|(tp, fp, fn_)| Contingency { tp, fp, fn_ })
}

proptest! {
    #[test]
    fn cohort_size_is_non_increasing_in_min_k(pairs in prop::collection::vec((0u8..8, 0u8..40), 1..120)) {
        let corpus = corpus_from(&pairs).unwrap();
        let mut previous = usize::MAX;
        for k in 1..=45 {
            // brute-force count of MPs with at least k initiatives
            let expected = (0u8..8)
                .filter(|m| pairs.iter().filter(|p| p.0 == *m).map(|p| p.1).collect::<BTreeSet<_>>().len() >= k)
                .count();
            let size = match filter_min_interventions(&corpus, k) {
                Ok(c) => c.mps().len(),
                Err(Error::EmptyCohort { .. }) => 0,
                Err(e) => panic!("{e}"),
            };
            prop_assert_eq!(size, expected);
            prop_assert!(size <= previous);
            previous = size;
        }
    }

    #[test]
    fn holdout_partitions_every_fold(n in 5usize..60, frac in 0.1f64..0.95, seed in any::<u64>()) {
        let pairs: Vec<(u8, u8)> = (0..n).map(|i| ((i % 3) as u8, i as u8)).collect();
        let corpus = corpus_from(&pairs).unwrap();
        let all: BTreeSet<_> = corpus.initiative_ids().into_iter().collect();
        for s in repeated_holdout(&corpus, 3, frac, seed).unwrap() {
            let train: BTreeSet<_> = s.train.iter().cloned().collect();
            let test: BTreeSet<_> = s.test.iter().cloned().collect();
            prop_assert!(train.is_disjoint(&test));
            prop_assert_eq!(&train | &test, all.clone());
            prop_assert!(!train.is_empty() && !test.is_empty());
        }
    }

    #[test]
    fn measures_are_bounded(cs in prop::collection::vec(contingency(), 1..10)) {
        let m = aggregate(&cs);
        for v in [m.micro.p, m.micro.r, m.micro.f, m.macro_.p, m.macro_.r, m.macro_.f] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        for c in &cs {
            let x = prf(*c);
            prop_assert!(x.f <= x.p.max(x.r) + 1e-12);
            prop_assert!(x.f >= x.p.min(x.r) - 1e-12 || x.p.min(x.r) == 0.0);
        }
    }

    #[test]
    fn micro_equals_macro_for_one_mp(c in contingency()) {
        let m = aggregate(&[c]);
        prop_assert!((m.micro.f - m.macro_.f).abs() < 1e-15);
        prop_assert!((m.micro.p - m.macro_.p).abs() < 1e-15);
    }

    #[test]
    fn cosine_is_bounded_and_symmetric(
        a in prop::collection::vec(0.0f64..5.0, 1..12),
        b in prop::collection::vec(0.0f64..5.0, 1..12),
    ) {
        let (a, b) = (SparseVector::from_dense(&a).normalized(), SparseVector::from_dense(&b).normalized());
        let c = cosine(&a, &b);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&c));
        prop_assert!((c - cosine(&b, &a)).abs() < 1e-15);
    }

    #[test]
    fn bm25_normalized_scores(docs in prop::collection::vec((0u8..4, prop::collection::vec(0u8..6, 1..8)), 1..10),
                              query in prop::collection::vec(0u8..6, 1..4)) {
        let docs: Vec<(pulrec::corpus::MpId, Vec<String>)> = docs
            .into_iter()
            .map(|(m, t)| (format!("m{m}").into(), t.into_iter().map(|x| format!("t{x}")).collect()))
            .collect();
        let query: Vec<String> = query.into_iter().map(|x| format!("t{x}")).collect();
        let ix = Bm25Index::build(&docs, Bm25Params::default()).unwrap();
        let ranked = ix.score_mps(&query, IrMode::Interventions).unwrap();
        if let Some(first) = ranked.first() {
            prop_assert_eq!(first.1, 1.0);
        }
        for w in ranked.windows(2) {
            prop_assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
        }
        prop_assert!(ranked.iter().all(|(_, s)| *s > 0.0 && *s <= 1.0));
    }
}
