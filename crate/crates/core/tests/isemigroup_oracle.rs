use cartankit_core::isemigroup::{Chart, InverseMonoid, DEFAULT_CAP};

/// Brute force over every subset of the monoid.
fn spectral_by_subsets(m: &InverseMonoid) -> Vec<Vec<Chart>> {
    let n = m.len();
    let mut out = Vec::new();
    for mask in 0u64..(1 << n) {
        let set: Vec<Chart> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| m.elements()[i].clone())
            .collect();
        if m.is_spectral_set(&set) {
            out.push(set);
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn sorted(mut sets: Vec<Vec<Chart>>) -> Vec<Vec<Chart>> {
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sets
}

#[test]
fn spectral_sets_of_i2_match_subset_search() {
    let m = InverseMonoid::symmetric(2);
    let bfs = sorted(m.enumerate_spectral_sets(DEFAULT_CAP).unwrap());
    assert_eq!(bfs, spectral_by_subsets(&m));
}

#[test]
fn spectral_sets_of_semilattice_match_subset_search() {
    for k in 1..=3 {
        let m = InverseMonoid::semilattice(k);
        let bfs = sorted(m.enumerate_spectral_sets(DEFAULT_CAP).unwrap());
        assert_eq!(bfs, spectral_by_subsets(&m), "k = {k}");
    }
}

#[test]
fn every_enumerated_submonoid_is_closed_and_contains_idempotents() {
    let m = InverseMonoid::from_classes(&[0, 0, 1]);
    let subs = m.enumerate_cartan_submonoids(DEFAULT_CAP).unwrap();
    for s in &subs {
        assert!(s.is_closed());
        for e in m.idempotents() {
            assert!(s.contains(&e));
        }
    }
    assert_eq!(subs.len(), 2);
}
