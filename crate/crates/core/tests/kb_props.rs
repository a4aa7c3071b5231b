mod common;

use proptest::prelude::*;
use rand::Rng;
use srkbqa::{EntityId, EntitySet, KnowledgeBase};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inverse_step_returns_to_start(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let kb = common::random_kb(&mut rng);
        for e in kb.entities() {
            for r in kb.relations() {
                let there = kb.follow(&EntitySet::singleton(e), r).unwrap();
                if there.is_empty() {
                    continue;
                }
                let Some(inv) = kb.inverse_of(r) else { continue };
                prop_assert!(kb.follow(&there, inv).unwrap().contains(e));
            }
        }
    }

    #[test]
    fn candidates_distribute_over_union(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let kb = common::random_kb(&mut rng);
        let n = kb.entity_count() as u32;
        let pick = |rng: &mut rand_chacha::ChaCha8Rng| -> EntitySet {
            (0..rng.gen_range(0..5)).map(|_| EntityId(rng.gen_range(0..n))).collect()
        };
        let (a, b) = (pick(&mut rng), pick(&mut rng));
        let mut both = kb.candidate_relations(&a).unwrap();
        both.extend(kb.candidate_relations(&b).unwrap());
        both.sort_unstable();
        both.dedup();
        prop_assert_eq!(kb.candidate_relations(&a.union(&b)).unwrap(), both);
    }

    #[test]
    fn reingest_is_identical(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let kb = common::random_kb(&mut rng);
        let tsv = kb.facts_tsv();
        let again = KnowledgeBase::from_tsv_str(&tsv, kb.has_inverses()).unwrap();
        prop_assert_eq!(&again, &KnowledgeBase::from_tsv_str(&tsv, kb.has_inverses()).unwrap());
        prop_assert_eq!(&again, &kb);
        prop_assert_eq!(KnowledgeBase::from_artifact(&kb.to_artifact()).unwrap(), kb);
    }
}

#[test]
fn tsv_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kb.tsv");
    std::fs::write(&path, srkbqa::fixtures::TURING_TSV).unwrap();
    let kb = KnowledgeBase::from_tsv_path(&path, true).unwrap();
    assert_eq!(kb, srkbqa::fixtures::turing_kb());
    assert_eq!(kb.triple_count(), 9);
    assert!(KnowledgeBase::from_tsv_path(dir.path().join("missing.tsv"), true).is_err());
}
