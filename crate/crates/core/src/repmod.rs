//! The reproducing-kernel module of an extension, its representation
//! `lambda`, and the triple `(M_q, N_q, D_q)` rebuilt from it.

use rand::Rng;
use serde::Serialize;

use crate::isemigroup::Chart;
use crate::linalg::{
    self, approx_eq, generated_star_algebra, hermitian_eigen, tolerance, unitary_span_decomposition, LinalgError,
    Matrix, StarAlgebra, Subspace,
};
use crate::triple::{CartanTripleModel, ExtensionModel, TripleError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RepError {
    #[error(transparent)]
    Triple(#[from] TripleError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("gram matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("operator is not in M_q (residual {residual:.3e})")]
    NotInMq { residual: f64 },
}

/// `K(t, s) = j(s^dag t ^ 1)`.
pub fn kernel_k(ext: &ExtensionModel, t: &Chart, s: &Chart) -> Result<Matrix, TripleError> {
    let id = Chart::identity(t.atom_count());
    let e = s.inverse().compose(t).unwrap().meet(&id).unwrap();
    Ok(ext.section(&e)?.clone())
}

/// The completed module realized on `C^r` through a factorization
/// `gram = B^* B` over labels `(s, e_i)`.
#[derive(Debug, Clone)]
pub struct KernelModuleSpace {
    ext: ExtensionModel,
    gram: Matrix,
    factor: Matrix,
    pseudo_inverse: Matrix,
    alpha_inverse_basis: Vec<Matrix>,
}

impl KernelModuleSpace {
    pub fn build(ext: &ExtensionModel) -> Result<Self, RepError> {
        let n = ext.triple().dim();
        let elements = ext.s().elements();
        let labels = elements.len() * n;
        let mut gram = Matrix::zeros(labels, labels);
        for (a, s) in elements.iter().enumerate() {
            for (b, t) in elements.iter().enumerate() {
                let k = kernel_k(ext, s, t)?;
                gram.view_mut((a * n, b * n), (n, n)).copy_from(&k);
            }
        }
        let (values, vectors) = hermitian_eigen(&gram);
        let top = values.last().copied().unwrap_or(0.0).max(1.0);
        let cut = 1e3 * tolerance() * top;
        if let Some(&min) = values.first() {
            if min < -cut {
                return Err(RepError::NotPsd { min_eigenvalue: min });
            }
        }
        let kept: Vec<usize> = (0..values.len()).filter(|&k| values[k] > cut).collect();
        let r = kept.len();
        let mut factor = Matrix::zeros(r, labels);
        let mut pseudo_inverse = Matrix::zeros(labels, r);
        for (row, &k) in kept.iter().enumerate() {
            let root = values[k].sqrt();
            let col = vectors.column(k);
            for l in 0..labels {
                factor[(row, l)] = col[l].conj() * root;
                pseudo_inverse[(l, row)] = col[l] / root;
            }
        }
        let mut space = KernelModuleSpace {
            ext: ext.clone(),
            gram,
            factor,
            pseudo_inverse,
            alpha_inverse_basis: Vec::new(),
        };
        let nalg = ext.triple().n_algebra();
        let mut images = Vec::with_capacity(nalg.dim());
        for b in nalg.basis() {
            let mut image = Matrix::zeros(r, r);
            for (coef, u) in unitary_span_decomposition(&b, nalg)? {
                image += space.lambda(&u)? * coef;
            }
            images.push(image);
        }
        space.alpha_inverse_basis = images;
        Ok(space)
    }

    pub fn ext(&self) -> &ExtensionModel {
        &self.ext
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    /// Dimension of the completed module.
    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    fn block(&self, s: &Chart) -> usize {
        self.ext.s().index_of(s).expect("chart of S") * self.ext.triple().dim()
    }

    /// Columns of `B` for the labels `(s, e_i)`: the vectors `k_s (x) e_i`.
    pub fn embed(&self, s: &Chart) -> Matrix {
        let n = self.ext.triple().dim();
        self.factor.columns(self.block(s), n).into_owned()
    }

    /// `lambda(v)(k_s (x) x) = k_{q(v)s} (x) sigma(v, s) x`.
    pub fn lambda(&self, v: &Matrix) -> Result<Matrix, RepError> {
        let t = self.ext.quotient(v)?;
        let n = self.ext.triple().dim();
        let r = self.dim();
        let mut out = Matrix::zeros(r, r);
        for s in self.ext.s().elements() {
            let sigma = self.ext.cocycle(v, s)?;
            let target = t.compose(s).unwrap();
            let left = self.factor.columns(self.block(&target), n);
            let right = self.pseudo_inverse.rows(self.block(s), n);
            out += left * sigma * right;
        }
        Ok(out)
    }

    fn label_map(&self, f: impl Fn(&Chart) -> Chart) -> Matrix {
        let n = self.ext.triple().dim();
        let r = self.dim();
        let mut out = Matrix::zeros(r, r);
        for s in self.ext.s().elements() {
            let left = self.factor.columns(self.block(&f(s)), n);
            let right = self.pseudo_inverse.rows(self.block(s), n);
            out += left * right;
        }
        out
    }

    /// `Q_s : k_t (x) x -> k_{s ^ t} (x) x`.
    pub fn q_projection(&self, s: &Chart) -> Matrix {
        self.label_map(|t| s.meet(t).unwrap())
    }

    /// `P = Q_1`.
    pub fn p_projection(&self) -> Matrix {
        self.q_projection(&Chart::identity(self.ext.s().atom_count()))
    }

    /// `V xi = k_1 (x) xi`.
    pub fn v_isometry(&self) -> Matrix {
        self.embed(&Chart::identity(self.ext.s().atom_count()))
    }

    /// `alpha(x) = V^* x V`.
    pub fn alpha(&self, x: &Matrix) -> Matrix {
        let v = self.v_isometry();
        v.adjoint() * x * v
    }

    /// The inverse of `alpha` on `N`, extended linearly from its values on a
    /// basis of `N`.
    pub fn alpha_inverse(&self, y: &Matrix) -> Result<Matrix, RepError> {
        let nalg = self.ext.triple().n_algebra();
        nalg.check_member(y)?;
        let coords = nalg.space().coordinates(y);
        let r = self.dim();
        Ok(coords
            .iter()
            .zip(&self.alpha_inverse_basis)
            .fold(Matrix::zeros(r, r), |acc, (z, m)| acc + m * *z))
    }

    /// `E_q(x) = alpha^{-1}(V^* x V)`.
    pub fn e_q(&self, x: &Matrix) -> Result<Matrix, RepError> {
        self.alpha_inverse(&self.alpha(x))
    }

    /// Gram matrix of the labels `(s, b)` for `b` in a basis of `N` under the
    /// trace pairing `tr(b^* K(s, t) c)`.
    pub fn trace_gram(&self) -> Result<Matrix, RepError> {
        let nbasis = self.ext.triple().n_algebra().basis();
        let elements = self.ext.s().elements();
        let d = nbasis.len();
        let mut gram = Matrix::zeros(elements.len() * d, elements.len() * d);
        for (a, s) in elements.iter().enumerate() {
            for (b, t) in elements.iter().enumerate() {
                let k = kernel_k(&self.ext, s, t)?;
                for (x, bx) in nbasis.iter().enumerate() {
                    for (y, by) in nbasis.iter().enumerate() {
                        gram[(a * d + x, b * d + y)] = linalg::trace(&(bx.adjoint() * &k * by));
                    }
                }
            }
        }
        Ok(gram)
    }
}

/// Rank of a positive semidefinite matrix.
pub fn psd_rank(gram: &Matrix) -> usize {
    let (values, _) = hermitian_eigen(gram);
    let top = values.last().copied().unwrap_or(0.0).max(1.0);
    values.iter().filter(|&&l| l > 1e3 * tolerance() * top).count()
}

/// `(M_q, N_q, D_q)` acting on the kernel module.
#[derive(Debug, Clone)]
pub struct ReconstructedTriple {
    pub space: KernelModuleSpace,
    pub m_q: StarAlgebra,
    pub n_q: StarAlgebra,
    pub d_q_atoms: Vec<Matrix>,
    pub triple: CartanTripleModel,
}

impl ReconstructedTriple {
    /// `E_q` restricted to `M_q`.
    pub fn expectation(&self, x: &Matrix) -> Result<Matrix, RepError> {
        if x.nrows() != self.space.dim() || !self.m_q.contains(x) {
            let residual = if x.nrows() == self.space.dim() { self.m_q.space().residual(x) } else { f64::INFINITY };
            return Err(RepError::NotInMq { residual });
        }
        self.space.e_q(x)
    }
}

pub fn reconstruct_triple(space: &KernelModuleSpace) -> Result<ReconstructedTriple, RepError> {
    let ext = space.ext();
    let r = space.dim();
    let nalg = ext.triple().n_algebra();
    let mut unitary_images = Vec::new();
    for b in nalg.basis() {
        for (_, u) in unitary_span_decomposition(&b, nalg)? {
            unitary_images.push(space.lambda(&u)?);
        }
    }
    let section_images = ext
        .sections()
        .iter()
        .map(|js| space.lambda(js))
        .collect::<Result<Vec<_>, _>>()?;
    let m_gens: Vec<Matrix> = section_images.iter().chain(&unitary_images).cloned().collect();
    let m_q = generated_star_algebra(&m_gens, r)?;
    let n_q = generated_star_algebra(&unitary_images, r)?;
    let d_q_atoms = ext
        .triple()
        .atoms()
        .iter()
        .map(|q| space.lambda(q))
        .collect::<Result<Vec<_>, _>>()?;
    let triple = CartanTripleModel::new(m_q.clone(), d_q_atoms.clone(), section_images)?;
    Ok(ReconstructedTriple {
        space: space.clone(),
        m_q,
        n_q,
        d_q_atoms,
        triple,
    })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct EquivalenceVerdict {
    pub s_level: bool,
    pub p_level: bool,
    pub squares: bool,
    pub relative_commutant: bool,
    pub failures: Vec<String>,
}

impl EquivalenceVerdict {
    pub fn equivalent(&self) -> bool {
        self.s_level && self.p_level && self.squares && self.relative_commutant
    }
}

/// Compare the original extension with the one carried by the reconstructed
/// triple: the chart action of `lambda(j(s))` on the atoms of `D_q`, the map
/// `alpha` from `N_q` onto `N`, and the squares through `P` and `S` on
/// sampled normalizers.
pub fn check_extension_equivalence<R: Rng + ?Sized>(
    original: &ExtensionModel,
    rec: &ReconstructedTriple,
    samples: usize,
    rng: &mut R,
) -> Result<EquivalenceVerdict, RepError> {
    let mut verdict = EquivalenceVerdict::default();
    let space = &rec.space;
    let tq = &rec.triple;

    // S level: s -> q_pi(lambda(j(s))) is a bijection onto S_q preserving products
    let ext_q = ExtensionModel::build(tq)?;
    let mut s_ok = ext_q.s().len() == original.s().len();
    if !s_ok {
        verdict
            .failures
            .push(format!("|S| = {} but |S_q| = {}", original.s().len(), ext_q.s().len()));
    }
    let mut images = Vec::with_capacity(original.s().len());
    for s in original.s().elements() {
        let image = space.lambda(original.section(s)?)?;
        match tq.gn_membership(&image) {
            Ok(chart) if &chart == s && ext_q.s().contains(&chart) => images.push(image),
            Ok(chart) => {
                s_ok = false;
                verdict.failures.push(format!("lambda(j({s})) has chart {chart}"));
                images.push(image);
            }
            Err(why) => {
                s_ok = false;
                verdict.failures.push(format!("lambda(j({s})) is not a normalizer: {why}"));
                images.push(image);
            }
        }
    }
    if s_ok {
        for (a, s) in original.s().elements().iter().enumerate() {
            for (b, t) in original.s().elements().iter().enumerate() {
                let product = &images[a] * &images[b];
                let expected = s.compose(t).unwrap();
                if tq.gn_membership(&product).ok().as_ref() != Some(&expected) {
                    s_ok = false;
                    verdict.failures.push(format!("chart of lambda(j({s}))lambda(j({t})) is not {expected}"));
                }
            }
        }
    }
    verdict.s_level = s_ok;

    // P level: alpha is a *-isomorphism N_q -> N carrying D_q onto D
    let nalg = original.triple().n_algebra();
    let nq_basis = rec.n_q.basis();
    let mut p_ok = rec.n_q.dim() == nalg.dim();
    if !p_ok {
        verdict
            .failures
            .push(format!("dim N_q = {} but dim N = {}", rec.n_q.dim(), nalg.dim()));
    }
    let alpha_images: Vec<Matrix> = nq_basis.iter().map(|x| space.alpha(x)).collect();
    if !alpha_images.iter().all(|y| nalg.contains(y)) {
        p_ok = false;
        verdict.failures.push("alpha(N_q) is not inside N".into());
    }
    if Subspace::spanned_by(nalg.ambient_dim(), alpha_images.iter()).dim() != nalg.dim() {
        p_ok = false;
        verdict.failures.push("alpha is not onto N".into());
    }
    for (x, ax) in nq_basis.iter().zip(&alpha_images) {
        if !approx_eq(&space.alpha(&x.adjoint()), &ax.adjoint()) {
            p_ok = false;
            verdict.failures.push("alpha does not preserve adjoints".into());
            break;
        }
    }
    'mult: for (x, ax) in nq_basis.iter().zip(&alpha_images) {
        for (y, ay) in nq_basis.iter().zip(&alpha_images) {
            if !approx_eq(&space.alpha(&(x * y)), &(ax * ay)) {
                p_ok = false;
                verdict.failures.push("alpha is not multiplicative".into());
                break 'mult;
            }
        }
    }
    for (i, (dq, q)) in rec.d_q_atoms.iter().zip(original.triple().atoms()).enumerate() {
        if !approx_eq(&space.alpha(dq), q) {
            p_ok = false;
            verdict.failures.push(format!("alpha(D_q atom {i}) is not atom {i}"));
        }
    }
    verdict.p_level = p_ok;

    verdict.relative_commutant = tq.n_algebra().same_as(&rec.n_q);
    if !verdict.relative_commutant {
        verdict.failures.push("N_q differs from the relative commutant of D_q".into());
    }

    // squares on sampled normalizers
    let mut sq_ok = true;
    for k in 0..samples {
        let (s, v) = original.random_normalizer(rng);
        let lv = space.lambda(&v)?;
        if tq.gn_membership(&lv).ok().as_ref() != Some(&s) {
            sq_ok = false;
            verdict.failures.push(format!("sample {k}: chart of lambda(v) is not {s}"));
        }
        let delta = original.delta(&v)?;
        if !approx_eq(&space.alpha(&lv), &delta) {
            sq_ok = false;
            verdict.failures.push(format!("sample {k}: V^* lambda(v) V differs from Delta(v)"));
        }
        if s.is_idempotent() && !approx_eq(&space.alpha_inverse(&v)?, &lv) {
            sq_ok = false;
            verdict.failures.push(format!("sample {k}: alpha^-1(v) differs from lambda(v) on P"));
        }
    }
    verdict.squares = sq_ok;
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, is_negligible, zeros};
    use crate::triple::random_unitary_in;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m4() -> ExtensionModel {
        ExtensionModel::build(&CartanTripleModel::from_blocks(&[4], &[vec![0, 1], vec![2, 3]]).unwrap()).unwrap()
    }

    fn swap() -> Chart {
        Chart::from_pairs(2, &[(0, 1), (1, 0)]).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let ext = m4();
        for s in ext.s().elements() {
            assert!(approx_eq(&kernel_k(&ext, s, s).unwrap(), ext.section(&s.source()).unwrap()));
            for t in ext.s().elements() {
                let kts = kernel_k(&ext, t, s).unwrap();
                assert!(approx_eq(&kts.adjoint(), &kernel_k(&ext, s, t).unwrap()));
            }
        }
        assert!(is_negligible(&kernel_k(&ext, &Chart::identity(2), &swap()).unwrap()));
    }

    #[test]
    fn m4_space_dimensions() {
        let ext = m4();
        let space = KernelModuleSpace::build(&ext).unwrap();
        assert_eq!(space.dim(), 8);
        let span = Subspace::spanned_by(
            4,
            ext.sections()
                .iter()
                .flat_map(|js| ext.triple().n_algebra().basis().into_iter().map(move |b| js * b))
                .collect::<Vec<_>>()
                .iter(),
        );
        assert_eq!(psd_rank(&space.trace_gram().unwrap()), span.dim());
        assert_eq!(span.dim(), 16);
    }

    #[test]
    fn single_atom_space_is_c_k() {
        let t = CartanTripleModel::from_blocks(&[3], &[vec![0, 1, 2]]).unwrap();
        let ext = ExtensionModel::build(&t).unwrap();
        let space = KernelModuleSpace::build(&ext).unwrap();
        assert_eq!(space.dim(), 3);
    }

    #[test]
    fn lambda_is_multiplicative_and_star() {
        let ext = m4();
        let space = KernelModuleSpace::build(&ext).unwrap();
        assert!(approx_eq(&space.lambda(&identity(4)).unwrap(), &identity(8)));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let (_, v1) = ext.random_normalizer(&mut rng);
            let (_, v2) = ext.random_normalizer(&mut rng);
            let l12 = space.lambda(&(&v1 * &v2)).unwrap();
            let l1 = space.lambda(&v1).unwrap();
            let l2 = space.lambda(&v2).unwrap();
            assert!(linalg::distance(&l12, &(&l1 * &l2)) < 1e-8);
            assert!(linalg::distance(&space.lambda(&v1.adjoint()).unwrap(), &l1.adjoint()) < 1e-8);
        }
    }

    #[test]
    fn structural_operators() {
        let ext = m4();
        let space = KernelModuleSpace::build(&ext).unwrap();
        let p = space.p_projection();
        assert!(approx_eq(&p, &space.q_projection(&Chart::identity(2))));
        let v = space.v_isometry();
        assert!(approx_eq(&(v.adjoint() * &v), &identity(4)));
        assert!(approx_eq(&(&v * v.adjoint()), &p));
        let a = Chart::point(2, 0, 1);
        let b = Chart::point(2, 1, 0);
        assert!(is_negligible(&(space.q_projection(&a) * space.q_projection(&b))));
        let total = ext.s().atoms().iter().fold(zeros(8), |acc, a| acc + space.q_projection(a));
        assert!(approx_eq(&total, &identity(8)));
    }

    #[test]
    fn e_q_examples() {
        let ext = m4();
        let space = KernelModuleSpace::build(&ext).unwrap();
        let ls = space.lambda(ext.section(&swap()).unwrap()).unwrap();
        assert!(is_negligible(&space.e_q(&ls).unwrap()));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_unitary_in(ext.triple().n_algebra(), &mut rng);
        let lu = space.lambda(&u).unwrap();
        assert!(approx_eq(&space.e_q(&lu).unwrap(), &lu));
        let rec = reconstruct_triple(&space).unwrap();
        assert!(approx_eq(&rec.expectation(&lu).unwrap(), &lu));
        assert!(matches!(rec.expectation(&identity(3)), Err(RepError::NotInMq { .. })));
    }

    #[test]
    fn m4_round_trip_and_perturbed_section() {
        let ext = m4();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rec = reconstruct_triple(&KernelModuleSpace::build(&ext).unwrap()).unwrap();
        assert_eq!(rec.m_q.dim(), 16);
        let verdict = check_extension_equivalence(&ext, &rec, 10, &mut rng).unwrap();
        assert!(verdict.equivalent(), "{verdict:?}");
        let bent = ext.with_flipped_isometry(0, 1).unwrap();
        let rec = reconstruct_triple(&KernelModuleSpace::build(&bent).unwrap()).unwrap();
        let verdict = check_extension_equivalence(&ext, &rec, 10, &mut rng).unwrap();
        assert!(verdict.equivalent(), "{verdict:?}");
    }
}
