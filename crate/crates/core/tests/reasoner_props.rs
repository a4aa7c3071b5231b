mod common;

use proptest::prelude::*;
use rand::Rng;
use srkbqa::eval::{qa_metrics, search_threshold};
use srkbqa::reasoner::distribution_from_embedding;
use srkbqa::{induce_tree, merge_subgraphs, EntityId, EntitySet, Question, ReasonerConfig, ReasonerParams, RelationId};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mass_never_reaches_beyond_step_count(seed in any::<u64>(), steps in 1usize..4) {
        let mut rng = common::rng(seed);
        let kb = common::random_kb(&mut rng);
        let n = kb.entity_count() as u32;
        let parts: Vec<_> = (0..rng.gen_range(1..3))
            .map(|_| {
                let topic = EntityId(rng.gen_range(0..n));
                let path: Vec<RelationId> = (0..rng.gen_range(0..=3))
                    .map(|_| RelationId(rng.gen_range(0..kb.relation_count() as u32)))
                    .collect();
                induce_tree(&kb, topic, &path).unwrap().to_subgraph()
            })
            .collect();
        let g = merge_subgraphs(&parts).unwrap();
        prop_assume!(!g.topic_roots.is_empty());
        let cfg = ReasonerConfig { key_dim: 4, step_count: steps };
        let p = ReasonerParams::init(kb.relation_count(), 6, cfg, seed).unwrap();
        let q: Vec<f64> = (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let d = distribution_from_embedding(&p, &q, &g).unwrap();
        prop_assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        // hop distance inside the subgraph from its roots
        let mut dist: Vec<Option<usize>> = vec![None; kb.entity_count()];
        let mut layer: Vec<EntityId> = g.topic_roots.iter().collect();
        for e in &layer {
            dist[e.index()] = Some(0);
        }
        let mut hop = 0;
        while !layer.is_empty() {
            hop += 1;
            let mut next = Vec::new();
            for t in &g.edges {
                if layer.contains(&t.head) && dist[t.tail.index()].is_none() {
                    dist[t.tail.index()] = Some(hop);
                    next.push(t.tail);
                }
            }
            layer = next;
        }
        for (e, prob) in d.entity_ids.iter().zip(&d.probs) {
            if dist[e.index()].map_or(true, |h| h > steps) {
                prop_assert_eq!(*prob, 0.0);
            }
        }
    }

    #[test]
    fn searched_threshold_beats_one_half(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let mut ds = Vec::new();
        let mut qs = Vec::new();
        for i in 0..rng.gen_range(1..6) {
            let m = rng.gen_range(1..6u32);
            let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
            let z: f64 = raw.iter().sum::<f64>().max(1e-12);
            ds.push(srkbqa::AnswerDistribution {
                entity_ids: (0..m).map(EntityId).collect(),
                probs: raw.iter().map(|x| x / z).collect(),
            });
            qs.push(Question {
                id: format!("{i}"),
                text: String::new(),
                topic_entities: EntitySet::singleton(EntityId(100)),
                answers: (0..rng.gen_range(0..3)).map(|_| EntityId(rng.gen_range(0..m))).collect(),
            });
        }
        let t = search_threshold(&ds, &qs, 0.05).unwrap();
        prop_assert!(qa_metrics(&ds, &qs, t).unwrap().f1 >= qa_metrics(&ds, &qs, 0.5).unwrap().f1);
    }
}
