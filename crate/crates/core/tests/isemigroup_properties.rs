use std::collections::BTreeSet;

use cartankit_core::isemigroup::{Chart, InverseMonoid};
use proptest::prelude::*;

fn chart(k: usize) -> impl Strategy<Value = Chart> {
    // random partial injection: a permutation prefix and a domain mask
    (Just(k), prop::collection::vec(0usize..1000, k), prop::collection::vec(any::<bool>(), k)).prop_map(|(k, keys, keep)| {
        let mut targets: Vec<usize> = (0..k).collect();
        targets.sort_by_key(|&t| keys[t]);
        let pairs: Vec<(usize, usize)> = (0..k).filter(|&i| keep[i]).map(|i| (i, targets[i])).collect();
        Chart::from_pairs(k, &pairs).unwrap()
    })
}

fn graph(c: &Chart) -> BTreeSet<(usize, usize)> {
    c.pairs().collect()
}

proptest! {
    #[test]
    fn composition_matches_relational_product(a in chart(4), b in chart(4), c in chart(4)) {
        let ab = a.compose(&b).unwrap();
        let expected: BTreeSet<(usize, usize)> = graph(&b)
            .iter()
            .filter_map(|&(i, j)| a.apply(j).map(|k| (i, k)))
            .collect();
        prop_assert_eq!(graph(&ab), expected);
        prop_assert_eq!(ab.compose(&c).unwrap(), a.compose(&b.compose(&c).unwrap()).unwrap());
        prop_assert_eq!(a.compose(&a.inverse()).unwrap().compose(&a).unwrap(), a.clone());
    }

    #[test]
    fn natural_order_is_graph_inclusion(a in chart(4), b in chart(4)) {
        prop_assert_eq!(a.natural_leq(&b), graph(&a).is_subset(&graph(&b)));
        let m = a.meet(&b).unwrap();
        let common: BTreeSet<(usize, usize)> = graph(&a).intersection(&graph(&b)).cloned().collect();
        prop_assert_eq!(graph(&m), common);
    }

    #[test]
    fn atoms_below_join_to_the_element(a in chart(4)) {
        let s = InverseMonoid::symmetric(4);
        let below: Vec<Chart> = s.atoms().into_iter().filter(|x| x.natural_leq(&a)).collect();
        prop_assert_eq!(below.len(), a.size());
        prop_assert_eq!(Chart::join(4, &below).unwrap(), a);
    }
}

#[test]
fn atoms_are_pairwise_meet_disjoint() {
    for classes in [vec![0, 0], vec![0, 1], vec![0, 0, 1], vec![0, 0, 0]] {
        let s = InverseMonoid::from_classes(&classes);
        let atoms = s.atoms();
        let points = s.elements().iter().filter(|c| c.size() == 1).count();
        assert_eq!(atoms.len(), points);
        for (i, a) in atoms.iter().enumerate() {
            for b in &atoms[i + 1..] {
                assert!(a.meet(b).unwrap().is_zero());
            }
        }
    }
}

#[test]
fn munn_quotient_separates_idempotents() {
    for classes in [vec![0, 0], vec![0, 0, 1], vec![0, 1, 2]] {
        let s = InverseMonoid::from_classes(&classes);
        let table = s.mult_table();
        let (quotient, class_of) = table.munn_quotient().unwrap();
        let idem = table.idempotents();
        let images: BTreeSet<usize> = idem.iter().map(|&e| class_of[e]).collect();
        assert_eq!(images.len(), idem.len());
        // charts form a fundamental monoid, so the quotient is an isomorphism
        assert_eq!(quotient.len(), s.len());
        assert!(s.is_fundamental());
        for a in 0..s.len() {
            for b in 0..s.len() {
                assert_eq!(class_of[table.mul(a, b)], quotient.mul(class_of[a], class_of[b]));
            }
        }
    }
}

#[test]
fn from_classes_counts() {
    // |I_n| = sum_k C(n,k)^2 k!
    let sizes: Vec<usize> = (1..=4).map(|n| InverseMonoid::symmetric(n).len()).collect();
    assert_eq!(sizes, vec![2, 7, 34, 209]);
    assert_eq!(InverseMonoid::from_classes(&[0, 0, 1]).len(), 14);
    assert_eq!(InverseMonoid::semilattice(3).len(), 8);
    assert!(InverseMonoid::semilattice(3).is_clifford());
    assert!(!InverseMonoid::symmetric(2).is_clifford());
    assert!(InverseMonoid::symmetric(3).is_boolean_inverse_monoid());
}
