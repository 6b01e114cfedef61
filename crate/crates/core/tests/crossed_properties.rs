use cartankit_core::crossed::{build_crossed_product, crossed_cartan_verdict, CrossedProduct, Group, GroupAction};
use cartankit_core::linalg::{distance, fro_norm, identity, Matrix, StarAlgebra, C64};
use cartankit_core::triple::random_element_in;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shift(k: usize, by: usize) -> Matrix {
    let mut u = Matrix::zeros(k, k);
    for i in 0..k {
        u[((i + by) % k, i)] = C64::new(1.0, 0.0);
    }
    u
}

/// `Z_k` acting on the diagonal of `C^k` by rotating `step` places.
fn rotation(k: usize, step: usize) -> CrossedProduct {
    let unitaries: Vec<Matrix> = (0..k).map(|g| shift(k, g * step)).collect();
    let action = GroupAction::from_unitaries(Group::cyclic(k), StarAlgebra::block_diagonal(&vec![1; k]), &unitaries).unwrap();
    build_crossed_product(&action).unwrap()
}

fn close(a: &Matrix, b: &Matrix) -> bool {
    distance(a, b) <= 1e-8 * fro_norm(a).max(fro_norm(b)).max(1.0)
}

#[test]
fn free_rotation_gives_a_full_matrix_algebra() {
    for k in 2..=4 {
        let cp = rotation(k, 1);
        // a free transitive action on k points gives M_k
        assert_eq!(cp.m().dim(), k * k);
        let v = crossed_cartan_verdict(&cp).unwrap();
        assert!(v.direct_cartan && v.predicted_cartan, "k = {k}: {v:?}");
        assert!(cp.triple().is_ok());
    }
}

#[test]
fn trivial_and_non_free_actions_are_not_cartan() {
    // rotating C^4 by two places fixes no point but g = 2 acts trivially
    let cp = rotation(4, 2);
    let v = crossed_cartan_verdict(&cp).unwrap();
    assert!(!v.direct_cartan && !v.predicted_cartan);
    assert!(v.agree());
    assert!(v.properly_outer.iter().any(|&(g, po)| g == 2 && !po));
    let cp = rotation(2, 0);
    let v = crossed_cartan_verdict(&cp).unwrap();
    assert_eq!(cp.m().dim(), 4);
    assert!(!v.direct_cartan && v.agree());
}

#[test]
fn fourier_series_and_expectation_on_unitaries() {
    for (k, step) in [(2, 1), (3, 1), (4, 1), (4, 2)] {
        let cp = rotation(k, step);
        let e = cp.action().group().identity();
        let big = cp.m().ambient_dim();
        for g in 0..k {
            let expected = if g == e { identity(big) } else { Matrix::zeros(big, big) };
            assert!(close(&cp.e_n(cp.unitary(g)), &expected));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        for _ in 0..10 {
            let x = random_element_in(cp.m(), &mut rng);
            let coefficients = cp.fourier_coefficients(&x);
            assert!(coefficients.iter().all(|c| cp.n_image().contains(c)));
            assert!(close(&cp.fourier_resum(&coefficients), &x));
        }
    }
}

#[test]
fn unitaries_implement_the_action() {
    let cp = rotation(3, 1);
    let nalg = cp.action().n_algebra().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let x = random_element_in(&nalg, &mut rng);
        for g in 0..3 {
            let u = cp.unitary(g);
            assert!(close(&(u * cp.pi(&x) * u.adjoint()), &cp.pi(&cp.action().apply(g, &x))));
            // oracle: the action is conjugation by the shift
            let s = shift(3, g);
            assert!(close(&cp.action().apply(g, &x), &(&s * &x * s.adjoint())));
        }
    }
}
