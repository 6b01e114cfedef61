use cartankit_core::linalg::{distance, fro_norm, hermitian_eigen, is_projection, op_norm, Matrix};
use cartankit_core::repmod::{check_extension_equivalence, reconstruct_triple, KernelModuleSpace};
use cartankit_core::triple::{CartanTripleModel, ExtensionModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spaces() -> Vec<(&'static str, KernelModuleSpace)> {
    let layouts: [(&str, Vec<usize>, Vec<Vec<usize>>); 5] = [
        ("m4", vec![4], vec![vec![0, 1], vec![2, 3]]),
        ("m2", vec![2], vec![vec![0], vec![1]]),
        ("m3", vec![3], vec![vec![0], vec![1], vec![2]]),
        ("m2m3", vec![2, 3], vec![vec![0, 1], vec![2, 3, 4]]),
        ("c_m2", vec![1, 2], vec![vec![0], vec![1], vec![2]]),
    ];
    layouts
        .into_iter()
        .map(|(name, blocks, atoms)| {
            let ext = ExtensionModel::build(&CartanTripleModel::from_blocks(&blocks, &atoms).unwrap()).unwrap();
            (name, KernelModuleSpace::build(&ext).unwrap())
        })
        .collect()
}

fn close(a: &Matrix, b: &Matrix) -> bool {
    distance(a, b) <= 1e-8 * fro_norm(a).max(fro_norm(b)).max(1.0)
}

#[test]
fn kernel_gram_is_positive_and_matches_trace_pairing_rank() {
    for (name, space) in spaces() {
        let (eig, _) = hermitian_eigen(space.gram());
        let top = eig.last().copied().unwrap_or(1.0);
        assert!(eig.iter().all(|&l| l > -1e-9 * top), "{name}");
        let d = space.ext().triple().n_algebra().dim();
        let n = space.ext().triple().dim();
        // each label block of the trace pairing is d wide where B has n columns
        let trace_rank = cartankit_core::repmod::psd_rank(&space.trace_gram().unwrap());
        assert_eq!(trace_rank * n, space.dim() * d, "{name}");
    }
}

#[test]
fn lambda_is_an_isometric_star_homomorphism_on_normalizers() {
    for (name, space) in spaces() {
        let ext = space.ext();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (_, v) = ext.random_normalizer(&mut rng);
            let (_, w) = ext.random_normalizer(&mut rng);
            let lv = space.lambda(&v).unwrap();
            let lw = space.lambda(&w).unwrap();
            assert!(close(&(&lv * &lw), &space.lambda(&(&v * &w)).unwrap()), "{name}");
            assert!(close(&lv.adjoint(), &space.lambda(&v.adjoint()).unwrap()), "{name}");
            assert!((op_norm(&lv) - op_norm(&v)).abs() < 1e-8, "{name}");
            // compressing to the identity label recovers the diagonal part
            assert!(close(&space.alpha(&lv), &ext.delta(&v).unwrap()), "{name}");
        }
    }
}

#[test]
fn structural_projections_and_conditional_expectation() {
    for (name, space) in spaces() {
        let p = space.p_projection();
        assert!(is_projection(&p), "{name}");
        let v = space.v_isometry();
        assert!(close(&(&v * v.adjoint()), &p), "{name}");
        let ext = space.ext();
        for s in ext.s().elements() {
            let q = space.q_projection(s);
            assert!(is_projection(&q), "{name} {s}");
            for t in ext.s().elements() {
                assert!(close(&(&q * space.q_projection(t)), &space.q_projection(&s.meet(t).unwrap())));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (_, x) = ext.random_normalizer(&mut rng);
        let lx = space.lambda(&x).unwrap();
        let e = space.e_q(&lx).unwrap();
        assert!(close(&space.e_q(&e).unwrap(), &e), "{name}");
        assert!(close(&space.alpha(&e), &space.alpha(&lx)), "{name}");
    }
}

#[test]
fn reconstruction_is_equivalent_to_the_original() {
    for (name, space) in spaces() {
        let original = space.ext().clone();
        let rec = reconstruct_triple(&space).unwrap();
        assert_eq!(rec.triple.atom_count(), original.triple().atom_count(), "{name}");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let verdict = check_extension_equivalence(&original, &rec, 20, &mut rng).unwrap();
        assert!(verdict.equivalent(), "{name}: {:?}", verdict.failures);
        let (_, v) = original.random_normalizer(&mut rng);
        let lv = rec.space.lambda(&v).unwrap();
        assert!(close(&rec.expectation(&lv).unwrap(), &rec.space.lambda(&original.delta(&v).unwrap()).unwrap()));
    }
}
