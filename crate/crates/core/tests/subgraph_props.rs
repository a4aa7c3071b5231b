mod common;

use proptest::prelude::*;
use rand::Rng;
use srkbqa::subgraph::{ppr_scores, read_subgraph, write_subgraph};
use srkbqa::{induce_tree, merge_subgraphs, ppr_subgraph, EntityId, EntitySet, PprConfig, RelationId, Subgraph};

fn random_path(rng: &mut rand_chacha::ChaCha8Rng, relations: u32) -> Vec<RelationId> {
    (0..rng.gen_range(0..=3)).map(|_| RelationId(rng.gen_range(0..relations))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tree_layers_follow_the_path(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let kb = common::random_kb(&mut rng);
        let topic = EntityId(rng.gen_range(0..kb.entity_count() as u32));
        let path = random_path(&mut rng, kb.relation_count() as u32);
        let tree = induce_tree(&kb, topic, &path).unwrap();
        prop_assert_eq!(tree.layers.len(), path.len() + 1);
        prop_assert_eq!(&tree.layers[0], &EntitySet::singleton(topic));
        for (i, r) in path.iter().enumerate() {
            prop_assert_eq!(&tree.layers[i + 1], &kb.follow(&tree.layers[i], *r).unwrap());
        }
        for t in &tree.edges {
            prop_assert!(kb.neighbors(t.head, t.relation).contains(&t.tail));
        }
    }

    #[test]
    fn merge_stays_inside_the_union(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let kb = common::random_kb(&mut rng);
        let n = kb.entity_count() as u32;
        let answer = EntityId(rng.gen_range(0..n));
        let parts: Vec<Subgraph> = (0..rng.gen_range(1..4))
            .map(|_| {
                let topic = EntityId(rng.gen_range(0..n));
                let path = random_path(&mut rng, kb.relation_count() as u32);
                induce_tree(&kb, topic, &path).unwrap().to_subgraph()
            })
            .collect();
        let merged = merge_subgraphs(&parts).unwrap();
        let union = parts.iter().skip(1).fold(parts[0].clone(), |acc, g| acc.union(g));
        prop_assert!(merged.is_subgraph_of(&union));
        prop_assert!(merged.is_consistent());
        let total: usize = parts.iter().map(|g| g.entities.len()).sum();
        prop_assert!(merged.entities.len() <= total);
        if parts.len() > 1 && parts.iter().all(|g| g.entities.contains(answer)) {
            prop_assert!(merged.entities.contains(answer));
        }
        if parts.len() == 1 {
            prop_assert_eq!(&merged, &parts[0]);
        }
    }

    #[test]
    fn ppr_mass_is_conserved(seed in any::<u64>(), iterations in 0usize..30) {
        let mut rng = common::rng(seed);
        let kb = common::random_kb(&mut rng);
        let n = kb.entity_count() as u32;
        let topics: EntitySet = (0..rng.gen_range(1..4)).map(|_| EntityId(rng.gen_range(0..n))).collect();
        let s = ppr_scores(&kb, &topics, rng.gen_range(0.0..=1.0), iterations).unwrap();
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(s.iter().all(|x| *x >= 0.0));
        let budget = rng.gen_range(1..=kb.entity_count());
        let g = ppr_subgraph(&kb, &topics, &PprConfig { max_entities: budget, ..Default::default() }).unwrap();
        prop_assert!(g.entities.len() <= budget.max(topics.len()));
        prop_assert!(topics.is_subset(&g.entities));
        prop_assert!(g.is_consistent());
    }

    #[test]
    fn subgraph_files_round_trip(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let kb = common::random_kb(&mut rng);
        let topic = EntityId(rng.gen_range(0..kb.entity_count() as u32));
        let path = random_path(&mut rng, kb.relation_count() as u32);
        let g = induce_tree(&kb, topic, &path).unwrap().to_subgraph();
        let (tsv, sidecar) = write_subgraph(&kb, &g).unwrap();
        prop_assert_eq!(read_subgraph(&kb, &tsv, &sidecar).unwrap(), g);
    }
}
