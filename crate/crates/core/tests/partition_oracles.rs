//! Checks the partition layer against brute-force recomputation from the
//! definitions.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::{
    brute_force_partitions, d_map_by_tuple, kreweras_by_exhaustion, matches_class_by_definition,
};
use ovfree::partitions::{
    bell, catalan, d_map, enumerate_all, enumerate_class, insert, kernel, kernel_class_count,
    kreweras, restrict, KrewerasVariant, PartitionClass, SetPartition,
};

const CLASSES: [PartitionClass; 7] = [
    PartitionClass::Noncrossing,
    PartitionClass::Interval,
    PartitionClass::Pair,
    PartitionClass::NcPair,
    PartitionClass::IntervalPair,
    PartitionClass::Closed,
    PartitionClass::ClosedNc,
];

fn as_set(list: &[SetPartition]) -> BTreeSet<String> {
    list.iter().map(|p| p.to_string()).collect()
}

#[test]
fn enumerate_all_matches_recursive_construction() {
    for m in 1..=7 {
        let fast = enumerate_all(m).unwrap();
        let slow = brute_force_partitions(m);
        assert_eq!(fast.len(), slow.len(), "m = {m}");
        assert_eq!(as_set(&fast), as_set(&slow), "m = {m}");
        assert_eq!(fast.len() as u128, bell(m), "m = {m}");
    }
}

#[test]
fn class_enumeration_matches_definitional_filter() {
    for m in 1..=7 {
        let all = brute_force_partitions(m);
        for class in CLASSES {
            let closed = matches!(class, PartitionClass::Closed | PartitionClass::ClosedNc);
            if closed && m < 2 {
                assert!(enumerate_class(m, class).is_err());
                continue;
            }
            let fast = enumerate_class(m, class).unwrap();
            let slow: Vec<SetPartition> = all
                .iter()
                .filter(|p| matches_class_by_definition(p, class))
                .cloned()
                .collect();
            assert_eq!(as_set(&fast), as_set(&slow), "m = {m}, class = {class:?}");
            for p in &fast {
                assert!(p.matches_class(class));
            }
        }
    }
}

#[test]
fn noncrossing_counts_are_catalan() {
    for m in 1..=9 {
        let nc = enumerate_class(m, PartitionClass::Noncrossing).unwrap();
        assert_eq!(nc.len() as u128, catalan(m));
        if m % 2 == 0 {
            let pairs = enumerate_class(m, PartitionClass::NcPair).unwrap();
            assert_eq!(pairs.len() as u128, catalan(m / 2));
        } else {
            assert!(enumerate_class(m, PartitionClass::NcPair).unwrap().is_empty());
        }
    }
}

#[test]
fn kreweras_complement_is_the_interleaving_maximum() {
    for m in 1..=6 {
        for pi in enumerate_class(m, PartitionClass::Noncrossing).unwrap() {
            let fast = kreweras(&pi, KrewerasVariant::K).unwrap();
            let slow = kreweras_by_exhaustion(&pi);
            assert_eq!(fast, slow, "pi = {pi}");
        }
    }
}

#[test]
fn outer_kreweras_lands_in_closed_noncrossing_with_inverse() {
    for m in 1..=7 {
        let mut images = BTreeSet::new();
        for pi in enumerate_class(m, PartitionClass::Noncrossing).unwrap() {
            let ok = kreweras(&pi, KrewerasVariant::Ok).unwrap();
            assert_eq!(ok.ground_size(), m + 1);
            assert!(ok.matches_class(PartitionClass::ClosedNc), "pi = {pi}");
            let back = kreweras(&ok, KrewerasVariant::Ik).unwrap();
            assert_eq!(back, pi, "pi = {pi}");
            images.insert(ok.to_string());
        }
        let closed = enumerate_class(m + 1, PartitionClass::ClosedNc).unwrap();
        assert_eq!(images.len(), closed.len(), "m = {m}");
    }
}

#[test]
fn adjacent_pair_quotient_matches_tuple_kernel() {
    for ground in 2..=7 {
        for sigma in enumerate_all(ground).unwrap() {
            let fast = d_map(&sigma).unwrap();
            let slow = d_map_by_tuple(&sigma);
            assert_eq!(fast, slow, "sigma = {sigma}");
        }
    }
}

#[test]
fn insert_restricts_back_to_its_arguments() {
    for m in 1..=4 {
        let evens: Vec<usize> = (1..=m).map(|p| 2 * p).collect();
        let odds: Vec<usize> = (0..=m).map(|p| 2 * p + 1).collect();
        for pi in enumerate_all(m).unwrap() {
            for sigma in enumerate_all(m + 1).unwrap() {
                let combined = insert(&pi, &sigma).unwrap();
                assert_eq!(combined.ground_size(), 2 * m + 1);
                assert_eq!(restrict(&combined, &evens).unwrap(), pi);
                assert_eq!(restrict(&combined, &odds).unwrap(), sigma);
            }
        }
    }
}

#[test]
fn kernel_class_count_matches_tuple_enumeration() {
    for ground in 1..=4 {
        for sigma in enumerate_all(ground).unwrap() {
            for n in 1..=5usize {
                let mut count = 0u128;
                let mut tuple = vec![0usize; ground];
                loop {
                    if kernel(&tuple).unwrap() == sigma {
                        count += 1;
                    }
                    let mut done = true;
                    for pos in (0..ground).rev() {
                        tuple[pos] += 1;
                        if tuple[pos] < n {
                            done = false;
                            break;
                        }
                        tuple[pos] = 0;
                    }
                    if done {
                        break;
                    }
                }
                assert_eq!(
                    kernel_class_count(&sigma, n),
                    count,
                    "sigma = {sigma}, n = {n}"
                );
            }
        }
    }
}

fn arbitrary_partition(max_ground: usize) -> impl Strategy<Value = SetPartition> {
    (1..=max_ground)
        .prop_flat_map(|m| proptest::collection::vec(0..m, m))
        .prop_map(|assign| {
            let mut normalized = assign;
            normalized[0] = 0;
            let mut next = 1;
            for i in 1..normalized.len() {
                if normalized[i] > next {
                    normalized[i] = next;
                }
                if normalized[i] == next {
                    next += 1;
                }
            }
            SetPartition::from_assignment(&normalized).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn display_parse_round_trip(pi in arbitrary_partition(9)) {
        let text = pi.to_string();
        let back: SetPartition = text.parse().unwrap();
        prop_assert_eq!(back, pi);
    }

    #[test]
    fn restricting_to_the_full_ground_set_is_the_identity(pi in arbitrary_partition(9)) {
        let members: Vec<usize> = (1..=pi.ground_size()).collect();
        prop_assert_eq!(restrict(&pi, &members).unwrap(), pi);
    }

    #[test]
    fn kernel_of_block_indices_recovers_the_partition(pi in arbitrary_partition(9)) {
        let labels: Vec<usize> = (1..=pi.ground_size()).map(|p| pi.block_index(p)).collect();
        prop_assert_eq!(kernel(&labels).unwrap(), pi);
    }

    #[test]
    fn refinement_is_reflexive_and_bounded(pi in arbitrary_partition(8)) {
        prop_assert!(pi.leq(&pi).unwrap());
        let m = pi.ground_size();
        let full = SetPartition::new(m, vec![(1..=m).collect()]).unwrap();
        let discrete = SetPartition::new(m, (1..=m).map(|p| vec![p]).collect()).unwrap();
        prop_assert!(pi.leq(&full).unwrap());
        prop_assert!(discrete.leq(&pi).unwrap());
    }
}
