mod common;

use proptest::prelude::*;
use rand::Rng;
use srkbqa::supervision::{build_weak_labels, decompose_all};
use srkbqa::{induce_tree, Choice, EntityId, EntitySet, Question};

fn random_questions(kb: &srkbqa::KnowledgeBase, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<Question> {
    let n = kb.entity_count() as u32;
    (0..rng.gen_range(1..5))
        .map(|i| Question {
            id: format!("q{i}"),
            text: common::random_text(kb, rng),
            topic_entities: (0..rng.gen_range(1..3)).map(|_| EntityId(rng.gen_range(0..n))).collect(),
            answers: (0..rng.gen_range(1..3)).map(|_| EntityId(rng.gen_range(0..n))).collect(),
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn weak_label_lengths_are_bfs_distances(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let kb = common::random_kb(&mut rng);
        let qs = random_questions(&kb, &mut rng);
        let labels = build_weak_labels(&kb, &qs, 10).unwrap();
        let mut unreachable = 0;
        for (qi, q) in qs.iter().enumerate() {
            for t in q.topic_entities.iter() {
                let dist = common::bfs(&kb, t);
                for a in q.answers.iter() {
                    let Some(d) = dist[a.index()] else {
                        unreachable += 1;
                        continue;
                    };
                    let hits: Vec<_> = labels
                        .instances
                        .iter()
                        .filter(|i| i.question == qi && i.topic == t)
                        .filter(|i| induce_tree(&kb, t, &i.path).unwrap().leaves().contains(a))
                        .collect();
                    prop_assert!(hits.iter().any(|i| i.path.len() == d));
                }
            }
        }
        prop_assert_eq!(labels.unreachable, unreachable);
        for inst in &labels.instances {
            let q = &qs[inst.question];
            let leaves = induce_tree(&kb, inst.topic, &inst.path).unwrap().leaves().clone();
            prop_assert!(leaves.intersects(&q.answers));
            let dist = common::bfs(&kb, inst.topic);
            let shortest_for_some = leaves
                .iter()
                .filter(|e| q.answers.contains(*e))
                .any(|e| dist[e.index()] == Some(inst.path.len()));
            prop_assert!(shortest_for_some);
        }
    }

    #[test]
    fn step_instances_replay_to_the_answer(seed in any::<u64>(), negatives in 0usize..6) {
        let mut rng = common::rng(seed);
        let kb = common::random_kb(&mut rng);
        let qs = random_questions(&kb, &mut rng);
        let labels = build_weak_labels(&kb, &qs, 10).unwrap();
        let steps = decompose_all(&kb, &qs, &labels.instances, negatives, seed).unwrap();
        prop_assert_eq!(&steps, &decompose_all(&kb, &qs, &labels.instances, negatives, seed).unwrap());
        prop_assert_eq!(steps.len(), labels.instances.iter().map(|i| i.path.len() + 1).sum::<usize>());
        let mut cursor = 0;
        for inst in &labels.instances {
            let mut frontier = EntitySet::singleton(inst.topic);
            for (t, step) in steps[cursor..cursor + inst.path.len() + 1].iter().enumerate() {
                prop_assert_eq!(&step.state.history[..], &inst.path[..t]);
                prop_assert!(step.negatives.len() <= negatives);
                match step.gold {
                    Choice::Relation(r) => {
                        prop_assert!(!step.negatives.contains(&r));
                        frontier = kb.follow(&frontier, r).unwrap();
                    }
                    Choice::End => prop_assert_eq!(t, inst.path.len()),
                }
            }
            prop_assert!(frontier.intersects(&qs[inst.question].answers));
            cursor += inst.path.len() + 1;
        }
    }
}
