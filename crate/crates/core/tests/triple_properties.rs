use cartankit_core::bimod::plenty_witness;
use cartankit_core::isemigroup::Chart;
use cartankit_core::linalg::{distance, fro_norm, hermitian_eigen, Matrix};
use cartankit_core::triple::{random_element_in, CartanTripleModel, ExtensionModel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn layouts() -> Vec<(Vec<usize>, Vec<Vec<usize>>)> {
    vec![
        (vec![4], vec![vec![0, 1], vec![2, 3]]),
        (vec![2], vec![vec![0], vec![1]]),
        (vec![3], vec![vec![0], vec![1], vec![2]]),
        (vec![2, 3], vec![vec![0, 1], vec![2, 3, 4]]),
        (vec![6], vec![vec![0, 1], vec![2, 3], vec![4, 5]]),
        (vec![2, 2], vec![vec![0], vec![1], vec![2], vec![3]]),
        (vec![1, 2], vec![vec![0], vec![1], vec![2]]),
    ]
}

fn ext(k: usize) -> ExtensionModel {
    let (blocks, atoms) = &layouts()[k];
    ExtensionModel::build(&CartanTripleModel::from_blocks(blocks, atoms).unwrap()).unwrap()
}

fn close(a: &Matrix, b: &Matrix) -> bool {
    distance(a, b) <= 1e-8 * fro_norm(a).max(fro_norm(b)).max(1.0)
}

/// `sum_i q_i x q_i`
fn e_oracle(t: &CartanTripleModel, x: &Matrix) -> Matrix {
    t.atoms().iter().fold(Matrix::zeros(x.nrows(), x.ncols()), |acc, q| acc + q * x * q)
}

/// Chart read off the nonzero corners of `v`.
fn chart_oracle(t: &CartanTripleModel, v: &Matrix) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (i, qi) in t.atoms().iter().enumerate() {
        for (j, qj) in t.atoms().iter().enumerate() {
            if fro_norm(&(qj * v * qi)) > 1e-6 {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quotient_matches_corner_oracle_and_is_multiplicative(k in 0usize..7, seed in any::<u64>()) {
        let ext = ext(k);
        let t = ext.triple();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, v) = ext.random_normalizer(&mut rng);
        let (r, w) = ext.random_normalizer(&mut rng);
        let qv = ext.quotient(&v).unwrap();
        prop_assert_eq!(&qv, &s);
        prop_assert_eq!(qv.pairs().collect::<Vec<_>>(), chart_oracle(t, &v));
        prop_assert_eq!(ext.quotient(&(&v * &w)).unwrap(), s.compose(&r).unwrap());
        prop_assert_eq!(ext.quotient(&v.adjoint()).unwrap(), s.inverse());
    }

    #[test]
    fn cocycle_identity(k in 0usize..7, seed in any::<u64>()) {
        let ext = ext(k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (qv, v) = ext.random_normalizer(&mut rng);
        let (qw, w) = ext.random_normalizer(&mut rng);
        let vw = &v * &w;
        for s in ext.s().elements() {
            let lhs = ext.cocycle(&vw, s).unwrap();
            let qws = qw.compose(s).unwrap();
            let rhs = ext.cocycle(&v, &qws).unwrap() * ext.cocycle(&w, s).unwrap();
            prop_assert!(close(&lhs, &rhs), "sigma(vw, {}) splits wrongly", s);
            prop_assert!(ext.triple().in_p(&lhs));
            let qvs = qv.compose(s).unwrap();
            let rebuilt = ext.section(&qvs).unwrap() * ext.cocycle(&v, s).unwrap();
            prop_assert!(close(&rebuilt, &(&v * ext.section(s).unwrap())));
        }
    }

    #[test]
    fn expectation_is_the_atom_sum_and_delta(k in 0usize..7, seed in any::<u64>()) {
        let ext = ext(k);
        let t = ext.triple();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, v) = ext.random_normalizer(&mut rng);
        let ev = e_oracle(t, &v);
        prop_assert!(close(&t.expectation(&v).unwrap(), &ev));
        prop_assert!(close(&ext.delta(&v).unwrap(), &ev));
        let fixed = s.meet(&Chart::identity(t.atom_count())).unwrap();
        prop_assert!(close(&(&v * ext.section(&fixed).unwrap()), &ev));
    }

    #[test]
    fn expectation_preserves_order(k in 0usize..7, seed in any::<u64>()) {
        let ext = ext(k);
        let t = ext.triple();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_element_in(t.m(), &mut rng);
        let y = random_element_in(t.m(), &mut rng);
        let lower = x.adjoint() * &x;
        let upper = &lower + y.adjoint() * &y;
        let gap = t.expectation(&upper).unwrap() - t.expectation(&lower).unwrap();
        let (eig, _) = hermitian_eigen(&gap);
        prop_assert!(eig.iter().all(|&l| l > -1e-9 * fro_norm(&upper).max(1.0)));
    }

    #[test]
    fn every_nonzero_element_has_a_plenty_witness(k in 0usize..7, seed in any::<u64>()) {
        let ext = ext(k);
        let t = ext.triple();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_element_in(t.m(), &mut rng);
        let w = plenty_witness(&ext, &x).unwrap().expect("witness");
        let sum = w.terms.iter().fold(Matrix::zeros(t.dim(), t.dim()), |acc, (z, u)| acc + u * *z);
        prop_assert!(close(&sum, &w.compressed));
        prop_assert!(fro_norm(&w.compressed) > 1e-9);
        for (_, u) in &w.terms {
            prop_assert!(t.gn_membership(u).is_ok());
        }
    }

    #[test]
    fn fourier_series_resums(k in 0usize..7, seed in any::<u64>()) {
        let ext = ext(k);
        let t = ext.triple();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_element_in(t.m(), &mut rng);
        let terms = ext.fourier_reconstruct(&x).unwrap();
        prop_assert!(close(&cartankit_core::triple::resum(&terms, t.dim()), &x));
        for term in &terms {
            // each coefficient is E(w* x) for the atom's section
            prop_assert!(close(&term.coefficient, &e_oracle(t, &(term.section.adjoint() * &x))));
        }
    }
}

#[test]
fn frolik_pieces_on_three_cycle() {
    let ext = ext(4);
    let t = ext.triple();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cycle = Chart::from_pairs(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
    let v = ext.random_normalizer_with_chart(&cycle, &mut rng).unwrap();
    let f = ext.frolik_decomposition(&v).unwrap();
    // an odd cycle needs three colours and has no fixed part
    assert!(f.atoms[0].is_empty());
    assert!(f.atoms[1..].iter().all(|a| a.len() == 1));
    for e in &f.projections[1..] {
        let ve = &v * e;
        assert!(fro_norm(&(&ve * &ve)) < 1e-9);
    }
    assert!(close(&(&v * &f.projections[0]), &t.expectation(&v).unwrap()));
}
