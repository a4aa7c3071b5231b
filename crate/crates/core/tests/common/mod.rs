#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srkbqa::encoder::{sigmoid, RelationScorer};
use srkbqa::{Choice, EntityId, EntitySet, KnowledgeBase, RelationId, ScorerConfig, ScorerParams, Vocab};

pub const WORDS: [&str; 8] = ["who", "what", "where", "is", "the", "of", "did", "which"];

/// Random KB with at most 30 entities and at most 6 relation ids
/// (either 6 plain relations or 3 with inverses).
pub fn random_kb(rng: &mut ChaCha8Rng) -> KnowledgeBase {
    let n = rng.gen_range(4..=30);
    let inverses = rng.gen_bool(0.5);
    let base = if inverses { rng.gen_range(1..=3) } else { rng.gen_range(1..=6) };
    let m = rng.gen_range(n..=2 * n);
    let triples: Vec<(String, String, String)> = (0..m)
        .map(|_| {
            (
                format!("e{}", rng.gen_range(0..n)),
                format!("rel{}", rng.gen_range(0..base)),
                format!("e{}", rng.gen_range(0..n)),
            )
        })
        .collect();
    KnowledgeBase::from_triples(triples, inverses).expect("random kb builds")
}

pub fn random_text(kb: &KnowledgeBase, rng: &mut ChaCha8Rng) -> String {
    let mut words: Vec<String> = (0..rng.gen_range(2..6))
        .map(|_| WORDS.choose(rng).unwrap().to_string())
        .collect();
    let names: Vec<&str> = kb.relation_names().collect();
    for _ in 0..rng.gen_range(0..3) {
        words.push(names.choose(rng).unwrap().to_string());
    }
    words.shuffle(rng);
    words.join(" ")
}

/// Scorer with entries spread wide enough that probabilities are far from 1/2.
pub fn random_scorer(kb: &KnowledgeBase, texts: &[&str], dim: usize, seed: u64, spread: f64) -> ScorerParams {
    let mut p = ScorerParams::init(
        Vocab::build(kb, texts.iter().copied()),
        ScorerConfig {
            dim,
            separate_towers: seed % 2 == 1,
        },
        seed,
    );
    srkbqa::Parameters::scale_by(&mut p, spread);
    p
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn step_frontier(kb: &KnowledgeBase, frontier: &BTreeSet<EntityId>, r: RelationId) -> BTreeSet<EntityId> {
    frontier
        .iter()
        .flat_map(|e| kb.outgoing(*e).filter(|(rr, _)| *rr == r).flat_map(|(_, ts)| ts.iter().copied()))
        .collect()
}

fn out_relations(kb: &KnowledgeBase, frontier: &BTreeSet<EntityId>) -> BTreeSet<RelationId> {
    frontier
        .iter()
        .flat_map(|e| kb.outgoing(*e).filter(|(_, ts)| !ts.is_empty()).map(|(r, _)| r))
        .collect()
}

/// Every instantiable relation sequence of length `0..=max_hops` from
/// `topic` with its joint probability, ranked by probability then ids.
pub fn exhaustive_paths<S: RelationScorer>(
    kb: &KnowledgeBase,
    scorer: &S,
    text: &str,
    topic: EntityId,
    max_hops: usize,
) -> Vec<(Vec<RelationId>, f64)> {
    let end = scorer.encode_relation(kb, Choice::End).unwrap();
    let mut out = Vec::new();
    let mut stack = vec![(Vec::<RelationId>::new(), BTreeSet::from([topic]), 1.0f64)];
    while let Some((rels, frontier, prob)) = stack.pop() {
        let q = scorer.encode_question(kb, text, &rels);
        let s_end = dot(&q, &end);
        let cands = out_relations(kb, &frontier);
        let score = |r: RelationId| dot(&q, &scorer.encode_relation(kb, Choice::Relation(r)).unwrap());
        let p_end: f64 = cands.iter().map(|r| sigmoid(s_end - score(*r))).product();
        out.push((rels.clone(), prob * p_end));
        if rels.len() == max_hops {
            continue;
        }
        for r in cands {
            let next = step_frontier(kb, &frontier, r);
            if next.is_empty() {
                continue;
            }
            let mut longer = rels.clone();
            longer.push(r);
            stack.push((longer, next, prob * sigmoid(score(r) - s_end)));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Directed hop distances from `source` over every relation id.
pub fn bfs(kb: &KnowledgeBase, source: EntityId) -> Vec<Option<usize>> {
    let mut dist = vec![None; kb.entity_count()];
    dist[source.index()] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u.index()].unwrap();
        for (_, ts) in kb.outgoing(u) {
            for t in ts {
                if dist[t.index()].is_none() {
                    dist[t.index()] = Some(d + 1);
                    queue.push_back(*t);
                }
            }
        }
    }
    dist
}

pub fn set(ids: &[EntityId]) -> EntitySet {
    ids.iter().copied().collect()
}
