//! Seeded topical corpus generator with retained ground-truth topic labels.
//!
//! Every topic owns a disjoint block of terms (`t{topic}w{j}`) and all topics
//! share one noise block (`sh{j}`). An initiative is about exactly one topic
//! and groups 1 to 3 MPs who all hold that topic.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, InitiativeId, Intervention, MpId};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_topics: usize,
    pub n_mps: usize,
    pub topics_per_mp: usize,
    pub initiatives_per_mp: usize,
    pub vocab_size_per_topic: usize,
    pub shared_vocab_size: usize,
    pub doc_length: usize,
    pub noise_fraction: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// 5 topics, 20 MPs with 2 topics each, 30 initiatives per MP, 15% noise.
    pub fn demo() -> SyntheticSpec {
        SyntheticSpec {
            n_topics: 5,
            n_mps: 20,
            topics_per_mp: 2,
            initiatives_per_mp: 30,
            vocab_size_per_topic: 40,
            shared_vocab_size: 60,
            doc_length: 50,
            noise_fraction: 0.15,
            seed: 20_170_523,
        }
    }

    fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::SyntheticSpec(m.to_owned()));
        if self.n_topics == 0 || self.n_mps == 0 {
            return fail("n_topics and n_mps must be positive");
        }
        if self.topics_per_mp == 0 || self.topics_per_mp > self.n_topics {
            return fail("topics_per_mp must be in 1..=n_topics");
        }
        if self.initiatives_per_mp == 0 || self.doc_length == 0 || self.vocab_size_per_topic == 0 {
            return fail("initiatives_per_mp, doc_length and vocab_size_per_topic must be positive");
        }
        if !(0.0..=1.0).contains(&self.noise_fraction) {
            return fail("noise_fraction must lie in [0, 1]");
        }
        if self.noise_fraction > 0.0 && self.shared_vocab_size == 0 {
            return fail("noise_fraction > 0 needs a non-empty shared vocabulary");
        }
        Ok(())
    }
}

pub fn topic_term(topic: usize, j: usize) -> String {
    format!("t{topic}w{j}")
}

pub fn shared_term(j: usize) -> String {
    format!("sh{j}")
}

/// Topic block a generated term belongs to; `None` for shared-block terms.
pub fn term_topic(term: &str) -> Option<usize> {
    let rest = term.strip_prefix('t')?;
    let (topic, j) = rest.split_once('w')?;
    j.parse::<usize>().ok()?;
    topic.parse().ok()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub mp_topics: BTreeMap<MpId, Vec<usize>>,
    pub initiative_topic: BTreeMap<InitiativeId, usize>,
}

impl SyntheticCorpus {
    /// Whether `initiative` is about one of `mp`'s topics.
    pub fn shares_topic(&self, mp: &MpId, initiative: &InitiativeId) -> bool {
        match (self.mp_topics.get(mp), self.initiative_topic.get(initiative)) {
            (Some(topics), Some(t)) => topics.contains(t),
            _ => false,
        }
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed);
    let width = spec.n_mps.to_string().len();
    let mps: Vec<MpId> = (0..spec.n_mps).map(|i| MpId(format!("mp{:0width$}", i + 1))).collect();

    // First topic round-robin so every topic has holders, the rest at random.
    let mut topics_of: Vec<Vec<usize>> = Vec::with_capacity(spec.n_mps);
    for i in 0..spec.n_mps {
        let first = i % spec.n_topics;
        let mut others: Vec<usize> = (0..spec.n_topics).filter(|&t| t != first).collect();
        others.shuffle(&mut rng);
        let mut topics = vec![first];
        topics.extend(others.into_iter().take(spec.topics_per_mp - 1));
        topics.sort_unstable();
        topics_of.push(topics);
    }

    let mut remaining = vec![spec.initiatives_per_mp; spec.n_mps];
    let mut interventions = Vec::new();
    let mut initiative_topic = BTreeMap::new();
    let total_slots = spec.n_mps * spec.initiatives_per_mp;
    let id_width = total_slots.to_string().len();
    let mut next_id = 0usize;

    loop {
        let max_left = *remaining.iter().max().expect("n_mps > 0");
        if max_left == 0 {
            break;
        }
        let leaders: Vec<usize> = (0..spec.n_mps).filter(|&i| remaining[i] == max_left).collect();
        let lead = *leaders.choose(&mut rng).expect("non-empty");
        let topic = *topics_of[lead].choose(&mut rng).expect("topics_per_mp > 0");
        let size = rng.gen_range(1..=3usize);
        let mut partners: Vec<usize> = (0..spec.n_mps)
            .filter(|&i| i != lead && remaining[i] > 0 && topics_of[i].contains(&topic))
            .collect();
        partners.shuffle(&mut rng);
        partners.truncate(size - 1);

        next_id += 1;
        let id = InitiativeId(format!("init{next_id:0id_width$}"));
        initiative_topic.insert(id.clone(), topic);
        let mut group = vec![lead];
        group.extend(partners);
        group.sort_unstable();
        for mp in group {
            remaining[mp] -= 1;
            let text = draw_document(spec, topic, &mut rng);
            interventions.push(Intervention {
                mp: mps[mp].clone(),
                initiative: id.clone(),
                text,
            });
        }
    }

    let corpus = Corpus::from_interventions(interventions)?;
    let mp_topics = mps.into_iter().zip(topics_of).collect();
    Ok(SyntheticCorpus {
        corpus,
        mp_topics,
        initiative_topic,
    })
}

fn draw_document<R: Rng>(spec: &SyntheticSpec, topic: usize, rng: &mut R) -> String {
    let words: Vec<String> = (0..spec.doc_length)
        .map(|_| {
            if rng.gen::<f64>() < spec.noise_fraction {
                shared_term(rng.gen_range(0..spec.shared_vocab_size))
            } else {
                topic_term(topic, rng.gen_range(0..spec.vocab_size_per_topic))
            }
        })
        .collect();
    words.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n_topics: 3,
            n_mps: 6,
            topics_per_mp: 2,
            initiatives_per_mp: 8,
            vocab_size_per_topic: 10,
            shared_vocab_size: 10,
            doc_length: 20,
            noise_fraction: 0.2,
            seed,
        }
    }

    #[test]
    fn every_mp_hits_its_quota() {
        let s = generate_synthetic(&small(3)).unwrap();
        for (_, n) in s.corpus.participation_counts() {
            assert_eq!(n, 8);
        }
        for ini in s.corpus.initiatives() {
            let n = ini.participants().count();
            assert!((1..=3).contains(&n));
            for mp in ini.participants() {
                assert!(s.shares_topic(mp, &ini.id));
            }
        }
    }

    #[test]
    fn deterministic_for_identical_spec() {
        assert_eq!(
            generate_synthetic(&small(5)).unwrap(),
            generate_synthetic(&small(5)).unwrap()
        );
        assert_ne!(
            generate_synthetic(&small(5)).unwrap().corpus,
            generate_synthetic(&small(6)).unwrap().corpus
        );
    }

    #[test]
    fn single_topic_is_shared_by_everyone() {
        let mut spec = small(1);
        spec.n_topics = 1;
        spec.topics_per_mp = 1;
        let s = generate_synthetic(&spec).unwrap();
        assert!(s.mp_topics.values().all(|t| t == &[0]));
        for iv in s.corpus.interventions() {
            assert!(iv.text.split(' ').all(|w| term_topic(w).is_none_or(|t| t == 0)));
        }
    }

    #[test]
    fn no_noise_means_only_own_topic_terms() {
        let mut spec = small(11);
        spec.noise_fraction = 0.0;
        let s = generate_synthetic(&spec).unwrap();
        for iv in s.corpus.interventions() {
            let topics = &s.mp_topics[&iv.mp];
            for w in iv.text.split(' ') {
                let t = term_topic(w).expect("topic term");
                assert!(topics.contains(&t));
            }
        }
    }

    #[test]
    fn block_proportions_match_noise_fraction() {
        let spec = SyntheticSpec {
            n_topics: 4,
            n_mps: 10,
            topics_per_mp: 2,
            initiatives_per_mp: 10,
            vocab_size_per_topic: 25,
            shared_vocab_size: 25,
            doc_length: 100,
            noise_fraction: 0.3,
            seed: 99,
        };
        let s = generate_synthetic(&spec).unwrap();
        let (mut shared, mut total) = (0usize, 0usize);
        for iv in s.corpus.interventions() {
            for w in iv.text.split(' ') {
                total += 1;
                if term_topic(w).is_none() {
                    assert!(w.starts_with("sh"));
                    shared += 1;
                }
            }
        }
        assert!(total >= 10_000);
        let frac = shared as f64 / total as f64;
        assert!((frac - 0.3).abs() <= 0.02, "shared fraction {frac}");
    }

    #[test]
    fn inconsistent_spec_rejected() {
        let mut spec = small(1);
        spec.topics_per_mp = 4;
        assert!(matches!(generate_synthetic(&spec), Err(Error::SyntheticSpec(_))));
        let mut spec = small(1);
        spec.noise_fraction = 1.5;
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn term_topic_parses_generated_names() {
        assert_eq!(term_topic(&topic_term(3, 17)), Some(3));
        assert_eq!(term_topic(&shared_term(4)), None);
        assert_eq!(term_topic("tax"), None);
    }
}
