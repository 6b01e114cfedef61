//! Cartan triples `(M, N, D)` with atomic `D`, the groupoid normalizer, and
//! the extension `P -> G -> S` with an order-preserving section.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::isemigroup::{Chart, InverseMonoid};
use crate::linalg::{
    self, c, distance, fro_norm, hermitian_function, identity, is_negligible, is_partial_isometry, is_projection,
    projection_rank, tolerance, zeros, LinalgError, Matrix, StarAlgebra, Subspace, C64,
};

/// Why a matrix is not a groupoid normalizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GnRejection {
    NotInM,
    NotPartialIsometry,
    SourceNotInProjD,
    RangeNotInProjD,
    AtomImageNotAtom,
}

impl std::fmt::Display for GnRejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GnRejection::NotInM => "not_in_m",
            GnRejection::NotPartialIsometry => "not_partial_isometry",
            GnRejection::SourceNotInProjD => "source_not_in_projD",
            GnRejection::RangeNotInProjD => "range_not_in_projD",
            GnRejection::AtomImageNotAtom => "atom_image_not_atom",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TripleError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("no atoms given")]
    NoAtoms,
    #[error("atom {index} is not a nonzero projection")]
    AtomNotProjection { index: usize },
    #[error("atom {index} does not lie in M")]
    AtomNotInM { index: usize },
    #[error("atoms {i} and {j} are not orthogonal")]
    AtomsNotOrthogonal { i: usize, j: usize },
    #[error("atoms do not sum to the identity")]
    AtomsDoNotSumToIdentity,
    #[error("bad block layout: {0}")]
    Layout(String),
    #[error("not regular: atoms {i} and {j} are inequivalent but q_{j} M q_{i} is nonzero")]
    NotRegular { i: usize, j: usize },
    #[error("not full: D differs from the center of N (dim D = {dim_d}, dim Z(N) = {dim_center})")]
    NotFull { dim_d: usize, dim_center: usize },
    #[error("no partial isometry found from atom {from} to atom {to}")]
    NoReferenceIsometry { from: usize, to: usize },
    #[error("not a groupoid normalizer: {0}")]
    NotNormalizer(GnRejection),
    #[error("chart {0} is not in S")]
    ChartNotInS(String),
    #[error("element lies outside the span of the witnesses (residual {residual:.3e})")]
    OutsideSpan { residual: f64 },
}

/// A Cartan triple `(M, N, D)` where `D` is spanned by its atoms.
#[derive(Debug, Clone)]
pub struct CartanTripleModel {
    n: usize,
    m: StarAlgebra,
    atoms: Vec<Matrix>,
    d: StarAlgebra,
    nalg: StarAlgebra,
    classes: Vec<usize>,
    hints: Vec<Matrix>,
    full: bool,
    regular: bool,
    irregular_pair: Option<(usize, usize)>,
    center_dim: usize,
}

impl CartanTripleModel {
    /// Build and validate: the triple must be regular and full.
    pub fn new(m: StarAlgebra, atoms: Vec<Matrix>, hints: Vec<Matrix>) -> Result<Self, TripleError> {
        let model = CartanTripleModel::inspect(m, atoms, hints)?;
        if let Some((i, j)) = model.irregular_pair {
            return Err(TripleError::NotRegular { i, j });
        }
        if !model.full {
            return Err(TripleError::NotFull {
                dim_d: model.d.dim(),
                dim_center: model.center_dim,
            });
        }
        Ok(model)
    }

    /// `M` block diagonal with the given block sizes; each atom is a list of
    /// coordinates.
    pub fn from_blocks(blocks: &[usize], atoms: &[Vec<usize>]) -> Result<Self, TripleError> {
        let n: usize = blocks.iter().sum();
        let mut owner = vec![None; n];
        for (a, coords) in atoms.iter().enumerate() {
            if coords.is_empty() {
                return Err(TripleError::AtomNotProjection { index: a });
            }
            for &x in coords {
                if x >= n {
                    return Err(TripleError::Layout(format!("coordinate {x} out of range for dimension {n}")));
                }
                if let Some(b) = owner[x] {
                    return Err(TripleError::AtomsNotOrthogonal { i: b, j: a });
                }
                owner[x] = Some(a);
            }
        }
        if owner.iter().any(|o| o.is_none()) {
            return Err(TripleError::AtomsDoNotSumToIdentity);
        }
        let m = StarAlgebra::block_diagonal(blocks);
        let projections = atoms.iter().map(|coords| linalg::coordinate_projection(n, coords)).collect();
        CartanTripleModel::new(m, projections, Vec::new())
    }

    /// Build without rejecting irregular or non-full triples; the flags
    /// record what was found.
    pub fn inspect(m: StarAlgebra, atoms: Vec<Matrix>, hints: Vec<Matrix>) -> Result<Self, TripleError> {
        let n = m.ambient_dim();
        if atoms.is_empty() {
            return Err(TripleError::NoAtoms);
        }
        for (index, q) in atoms.iter().enumerate() {
            linalg::check_square(q, n)?;
            if !is_projection(q) || projection_rank(q) == 0 {
                return Err(TripleError::AtomNotProjection { index });
            }
            if !m.contains(q) {
                return Err(TripleError::AtomNotInM { index });
            }
        }
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                if !is_negligible(&(&atoms[i] * &atoms[j])) {
                    return Err(TripleError::AtomsNotOrthogonal { i, j });
                }
            }
        }
        let sum = atoms.iter().fold(zeros(n), |acc, q| acc + q);
        if !linalg::approx_eq(&sum, &identity(n)) {
            return Err(TripleError::AtomsDoNotSumToIdentity);
        }
        let d = StarAlgebra::from_closed_space(Subspace::spanned_by(n, atoms.iter()));
        let nalg = m.relative_commutant(&atoms);
        let center = nalg.center();
        let full = center.same_as(&d);

        // atoms are equivalent in M iff their ranks agree under every minimal central projection
        let central = m.minimal_central_projections()?;
        let rank_vectors: Vec<Vec<usize>> = atoms
            .iter()
            .map(|q| central.iter().map(|z| projection_rank(&(z * q))).collect())
            .collect();
        let mut classes = Vec::with_capacity(atoms.len());
        for (i, rv) in rank_vectors.iter().enumerate() {
            let class = rank_vectors[..i].iter().position(|other| other == rv).map_or(i, |p| classes[p]);
            classes.push(class);
        }

        let basis = m.basis();
        let mut irregular_pair = None;
        'outer: for j in 0..atoms.len() {
            for i in 0..atoms.len() {
                if classes[i] != classes[j] && basis.iter().any(|b| !is_negligible(&(&atoms[j] * b * &atoms[i]))) {
                    irregular_pair = Some((i, j));
                    break 'outer;
                }
            }
        }
        Ok(CartanTripleModel {
            n,
            m,
            atoms,
            d,
            nalg,
            classes,
            hints,
            full,
            regular: irregular_pair.is_none(),
            irregular_pair,
            center_dim: center.dim(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> &StarAlgebra {
        &self.m
    }

    pub fn n_algebra(&self) -> &StarAlgebra {
        &self.nalg
    }

    pub fn d(&self) -> &StarAlgebra {
        &self.d
    }

    pub fn atoms(&self) -> &[Matrix] {
        &self.atoms
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Equivalence class label of each atom (smallest equivalent index).
    pub fn atom_classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn is_regular(&self) -> bool {
        self.regular
    }

    /// `E(x) = sum_i q_i x q_i`.
    pub fn expectation(&self, x: &Matrix) -> Result<Matrix, TripleError> {
        self.m.check_member(x)?;
        Ok(self.expectation_unchecked(x))
    }

    pub(crate) fn expectation_unchecked(&self, x: &Matrix) -> Matrix {
        self.atoms.iter().fold(zeros(self.n), |acc, q| acc + q * x * q)
    }

    /// Indices of the atoms making up `p` when `p` is a projection of `D`.
    pub fn d_projection_support(&self, p: &Matrix) -> Option<Vec<usize>> {
        if p.nrows() != self.n || !is_projection(p) {
            return None;
        }
        let mut support = Vec::new();
        let mut rebuilt = zeros(self.n);
        for (i, q) in self.atoms.iter().enumerate() {
            let weight = linalg::trace_inner(q, p).re / projection_rank(q) as f64;
            if weight > 0.5 {
                support.push(i);
                rebuilt += q;
            }
        }
        linalg::approx_eq(&rebuilt, p).then_some(support)
    }

    /// Sum of the atoms with the given indices.
    pub fn atom_sum(&self, indices: &[usize]) -> Matrix {
        indices.iter().fold(zeros(self.n), |acc, &i| acc + &self.atoms[i])
    }

    /// The chart `q(v)` of a groupoid normalizer.
    pub fn gn_membership(&self, v: &Matrix) -> Result<Chart, GnRejection> {
        if v.nrows() != self.n || v.ncols() != self.n || !self.m.contains(v) {
            return Err(GnRejection::NotInM);
        }
        if !is_partial_isometry(v) {
            return Err(GnRejection::NotPartialIsometry);
        }
        let vs = v.adjoint();
        let source = self
            .d_projection_support(&(&vs * v))
            .ok_or(GnRejection::SourceNotInProjD)?;
        if self.d_projection_support(&(v * &vs)).is_none() {
            return Err(GnRejection::RangeNotInProjD);
        }
        let mut pairs = Vec::with_capacity(source.len());
        for i in source {
            let image = v * &self.atoms[i] * &vs;
            match self.d_projection_support(&image).as_deref() {
                Some([j]) => pairs.push((i, *j)),
                _ => return Err(GnRejection::AtomImageNotAtom),
            }
        }
        Ok(Chart::from_pairs(self.atom_count(), &pairs).expect("conjugation by a partial isometry is injective"))
    }

    /// `v` lies in `N` and normalizes `D` with an idempotent chart.
    pub fn in_p(&self, v: &Matrix) -> bool {
        self.gn_membership(v).is_ok_and(|s| s.is_idempotent()) && self.nalg.contains(v)
    }

    /// A partial isometry with source `q_from` and range `q_to`.
    fn root_isometry(&self, from: usize, to: usize) -> Result<Matrix, TripleError> {
        let (qf, qt) = (&self.atoms[from], &self.atoms[to]);
        let accepts = |w: &Matrix| {
            is_partial_isometry(w) && linalg::approx_eq(&(w.adjoint() * w), qf) && linalg::approx_eq(&(w * w.adjoint()), qt)
        };
        for h in &self.hints {
            let w = qt * h * qf;
            if accepts(&w) {
                return Ok(w);
            }
        }
        let coords = |q: &Matrix| -> Option<Vec<usize>> {
            let mut out = Vec::new();
            for i in 0..self.n {
                for j in 0..self.n {
                    let z = q[(i, j)];
                    let expected = if i == j && z.norm() > 0.5 { 1.0 } else { 0.0 };
                    if (z - c(expected)).norm() > 1e-9 {
                        return None;
                    }
                }
                if q[(i, i)].norm() > 0.5 {
                    out.push(i);
                }
            }
            Some(out)
        };
        if let (Some(cf), Some(ct)) = (coords(qf), coords(qt)) {
            if cf.len() == ct.len() {
                let mut w = zeros(self.n);
                for (&a, &b) in cf.iter().zip(&ct) {
                    w[(b, a)] = c(1.0);
                }
                if self.m.contains(&w) && accepts(&w) {
                    return Ok(w);
                }
            }
        }
        const GOLDEN: f64 = 0.618_033_988_749_895;
        let basis = self.m.basis();
        for attempt in 0..6 {
            let mut x = zeros(self.n);
            for (k, b) in basis.iter().enumerate() {
                let re = ((k as f64 + 1.0) * GOLDEN + 0.29 * attempt as f64).fract() + 0.25;
                let im = ((k as f64 + 3.0) * GOLDEN * GOLDEN + 0.17 * attempt as f64).fract() - 0.5;
                x += b * C64::new(re, im);
            }
            let w = linalg::polar_part(&(qt * x * qf));
            if accepts(&w) {
                return Ok(w);
            }
        }
        Err(TripleError::NoReferenceIsometry { from, to })
    }

    /// Reference isometries `w[j][i]` for equivalent atoms: root-based, so
    /// `w[j][i] = w[j][r] w[i][r]*` with `r` the smallest atom of the class.
    pub fn reference_isometries(&self) -> Result<Vec<Vec<Option<Matrix>>>, TripleError> {
        let k = self.atom_count();
        let mut to_root: Vec<Matrix> = Vec::with_capacity(k);
        for i in 0..k {
            let r = self.classes[i];
            // w_{i r}: from the root to atom i
            let w = if i == r { self.atoms[i].clone() } else { self.root_isometry(r, i)? };
            to_root.push(w);
        }
        let mut w = vec![vec![None; k]; k];
        for j in 0..k {
            for i in 0..k {
                if self.classes[i] == self.classes[j] {
                    w[j][i] = Some(if i == j {
                        self.atoms[i].clone()
                    } else {
                        &to_root[j] * to_root[i].adjoint()
                    });
                }
            }
        }
        Ok(w)
    }
}

/// The extension `P -> G -> S` with a chosen order-preserving section.
#[derive(Debug, Clone)]
pub struct ExtensionModel {
    triple: CartanTripleModel,
    s: InverseMonoid,
    isometries: Vec<Vec<Option<Matrix>>>,
    sections: Vec<Matrix>,
}

impl ExtensionModel {
    pub fn build(triple: &CartanTripleModel) -> Result<Self, TripleError> {
        let s = InverseMonoid::from_classes(triple.atom_classes());
        let isometries = triple.reference_isometries()?;
        Ok(ExtensionModel::assemble(triple.clone(), s, isometries))
    }

    fn assemble(triple: CartanTripleModel, s: InverseMonoid, isometries: Vec<Vec<Option<Matrix>>>) -> Self {
        let n = triple.dim();
        let sections = s
            .elements()
            .iter()
            .map(|chart| {
                chart.pairs().fold(zeros(n), |acc, (i, j)| {
                    acc + isometries[j][i].as_ref().expect("charts only join equivalent atoms")
                })
            })
            .collect();
        ExtensionModel {
            triple,
            s,
            isometries,
            sections,
        }
    }

    /// Same `S`, with `w[j][i]` replaced by `w[j][i] u` and `w[i][j]` by its
    /// adjoint, for a unitary `u` of `q_i N q_i` (`i != j`). The new section
    /// is still order preserving but generally not multiplicative.
    pub fn twisted(&self, i: usize, j: usize, u: &Matrix) -> Result<Self, TripleError> {
        let q = &self.triple.atoms[i];
        let ok = i != j
            && self.isometries[j][i].is_some()
            && self.triple.nalg.contains(u)
            && linalg::approx_eq(&(q * u * q), u)
            && linalg::approx_eq(&(u.adjoint() * u), q)
            && linalg::approx_eq(&(u * u.adjoint()), q);
        if !ok {
            return Err(TripleError::NoReferenceIsometry { from: i, to: j });
        }
        let mut isometries = self.isometries.clone();
        let w = isometries[j][i].as_ref().unwrap() * u;
        isometries[i][j] = Some(w.adjoint());
        isometries[j][i] = Some(w);
        Ok(ExtensionModel::assemble(self.triple.clone(), self.s.clone(), isometries))
    }

    /// Flip the sign of `w[j][i]` (and of `w[i][j]`).
    pub fn with_flipped_isometry(&self, i: usize, j: usize) -> Result<Self, TripleError> {
        let u = -self.triple.atoms[i].clone();
        self.twisted(i, j, &u)
    }

    pub fn triple(&self) -> &CartanTripleModel {
        &self.triple
    }

    pub fn s(&self) -> &InverseMonoid {
        &self.s
    }

    pub fn reference_isometry(&self, to: usize, from: usize) -> Option<&Matrix> {
        self.isometries[to][from].as_ref()
    }

    fn index(&self, s: &Chart) -> Result<usize, TripleError> {
        self.s.index_of(s).ok_or_else(|| TripleError::ChartNotInS(s.to_string()))
    }

    /// The section `j(s)`.
    pub fn section(&self, s: &Chart) -> Result<&Matrix, TripleError> {
        Ok(&self.sections[self.index(s)?])
    }

    /// Section images in the order of `S`.
    pub fn sections(&self) -> &[Matrix] {
        &self.sections
    }

    pub fn quotient(&self, v: &Matrix) -> Result<Chart, TripleError> {
        self.triple.gn_membership(v).map_err(TripleError::NotNormalizer)
    }

    /// `sigma(v, s) = j(q(v) s)^* v j(s)`.
    pub fn cocycle(&self, v: &Matrix, s: &Chart) -> Result<Matrix, TripleError> {
        let t = self.quotient(v)?;
        let ts = t.compose(s).expect("charts share the atom count");
        Ok(self.section(&ts)?.adjoint() * v * self.section(s)?)
    }

    /// `Delta(v) = v j(q(v) ^ 1)`, which equals `E(v)`.
    pub fn delta(&self, v: &Matrix) -> Result<Matrix, TripleError> {
        let t = self.quotient(v)?;
        let fixed = t.meet(&Chart::identity(t.atom_count())).unwrap();
        Ok(v * self.section(&fixed)?)
    }

    /// Split `v^* v` into a fixed part and three parts each moved off itself.
    pub fn frolik_decomposition(&self, v: &Matrix) -> Result<FrolikDecomposition, TripleError> {
        let t = self.quotient(v)?;
        let k = t.atom_count();
        let mut color: Vec<Option<usize>> = vec![None; k];
        let moving: Vec<bool> = (0..k).map(|i| t.apply(i).is_some_and(|j| j != i)).collect();
        for i in 0..k {
            if t.apply(i) == Some(i) {
                color[i] = Some(0);
            }
        }
        let inverse = t.inverse();
        for start in 0..k {
            if !moving[start] || color[start].is_some() {
                continue;
            }
            // walk back to the head of a path, or detect a cycle through `start`
            let mut head = start;
            let mut cycle = false;
            while let Some(p) = inverse.apply(head).filter(|&p| moving[p]) {
                if p == start {
                    cycle = true;
                    break;
                }
                head = p;
            }
            let mut walk = Vec::new();
            let mut cur = if cycle { start } else { head };
            loop {
                walk.push(cur);
                match t.apply(cur).filter(|&nx| moving[nx]) {
                    Some(nx) if nx != walk[0] => cur = nx,
                    _ => break,
                }
            }
            for (pos, &a) in walk.iter().enumerate() {
                color[a] = Some(1 + pos % 2);
            }
            if cycle && walk.len() % 2 == 1 {
                color[*walk.last().unwrap()] = Some(3);
            }
        }
        let mut parts: [Vec<usize>; 4] = Default::default();
        for (i, col) in color.iter().enumerate() {
            if let Some(col) = col {
                parts[*col].push(i);
            }
        }
        let projections = [0, 1, 2, 3].map(|col| self.triple.atom_sum(&parts[col]));
        Ok(FrolikDecomposition {
            atoms: parts,
            projections,
        })
    }

    /// Terms `(a, E(j(a)^* x))` over the atoms of `S`.
    pub fn fourier_reconstruct(&self, x: &Matrix) -> Result<Vec<FourierTerm>, TripleError> {
        self.triple.m.check_member(x)?;
        Ok(self
            .s
            .atoms()
            .into_iter()
            .map(|a| {
                let w = self.sections[self.s.index_of(&a).unwrap()].clone();
                let coefficient = self.triple.expectation_unchecked(&(w.adjoint() * x));
                FourierTerm {
                    chart: a,
                    section: w,
                    coefficient,
                }
            })
            .collect())
    }

    /// `y = sum_k w_k E(w_k^* y)` over atoms of `S` below the charts of the
    /// witnesses.
    pub fn righton_decompose(&self, y: &Matrix, witnesses: &[Matrix]) -> Result<Vec<FourierTerm>, TripleError> {
        self.triple.m.check_member(y)?;
        let charts = witnesses.iter().map(|v| self.quotient(v)).collect::<Result<Vec<_>, _>>()?;
        let terms: Vec<FourierTerm> = self
            .s
            .atoms()
            .into_iter()
            .filter(|a| charts.iter().any(|t| a.natural_leq(t)))
            .map(|a| {
                let w = self.sections[self.s.index_of(&a).unwrap()].clone();
                let coefficient = self.triple.expectation_unchecked(&(w.adjoint() * y));
                FourierTerm {
                    chart: a,
                    section: w,
                    coefficient,
                }
            })
            .collect();
        let residual = distance(&resum(&terms, self.triple.dim()), y);
        if residual > 100.0 * tolerance() * fro_norm(y).max(1.0) {
            return Err(TripleError::OutsideSpan { residual });
        }
        Ok(terms)
    }

    /// A normalizer `j(s) u` with `u` a random unitary of `N`.
    pub fn random_normalizer<R: Rng + ?Sized>(&self, rng: &mut R) -> (Chart, Matrix) {
        let s = self.s.elements()[rng.random_range(0..self.s.len())].clone();
        let u = random_unitary_in(&self.triple.nalg, rng);
        let v = &self.sections[self.s.index_of(&s).unwrap()] * u;
        (s, v)
    }

    /// A normalizer with a prescribed chart.
    pub fn random_normalizer_with_chart<R: Rng + ?Sized>(&self, s: &Chart, rng: &mut R) -> Result<Matrix, TripleError> {
        let u = random_unitary_in(&self.triple.nalg, rng);
        Ok(self.section(s)? * u)
    }

    /// A random element of `P` supported on the given idempotent.
    pub fn random_p_element<R: Rng + ?Sized>(&self, e: &Chart, rng: &mut R) -> Result<Matrix, TripleError> {
        if !e.is_idempotent() {
            return Err(TripleError::ChartNotInS(e.to_string()));
        }
        self.random_normalizer_with_chart(e, rng)
    }
}

/// Output of [`ExtensionModel::frolik_decomposition`]: index 0 is the fixed
/// part.
#[derive(Debug, Clone)]
pub struct FrolikDecomposition {
    pub atoms: [Vec<usize>; 4],
    pub projections: [Matrix; 4],
}

#[derive(Debug, Clone)]
pub struct FourierTerm {
    pub chart: Chart,
    pub section: Matrix,
    pub coefficient: Matrix,
}

pub fn resum(terms: &[FourierTerm], n: usize) -> Matrix {
    terms
        .iter()
        .fold(zeros(n), |acc, t| acc + &t.section * &t.coefficient)
}

/// Gaussian combination of the basis of `algebra`.
pub fn random_element_in<R: Rng + ?Sized>(algebra: &StarAlgebra, rng: &mut R) -> Matrix {
    let n = algebra.ambient_dim();
    algebra.basis().iter().fold(zeros(n), |acc, b| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        acc + b * C64::new(re, im)
    })
}

pub fn random_hermitian_in<R: Rng + ?Sized>(algebra: &StarAlgebra, rng: &mut R) -> Matrix {
    let x = random_element_in(algebra, rng);
    (&x + x.adjoint()) * c(0.5)
}

/// `exp(iH)` for a random Hermitian `H` of `algebra`.
pub fn random_unitary_in<R: Rng + ?Sized>(algebra: &StarAlgebra, rng: &mut R) -> Matrix {
    let h = random_hermitian_in(algebra, rng);
    hermitian_function(&h, |t| C64::new(0.0, t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{approx_eq, unit};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m4() -> CartanTripleModel {
        CartanTripleModel::from_blocks(&[4], &[vec![0, 1], vec![2, 3]]).unwrap()
    }

    fn m2m3() -> CartanTripleModel {
        CartanTripleModel::from_blocks(&[2, 3], &[vec![0, 1], vec![2, 3, 4]]).unwrap()
    }

    fn swap() -> Chart {
        Chart::from_pairs(2, &[(0, 1), (1, 0)]).unwrap()
    }

    #[test]
    fn m4_instance_shape() {
        let t = m4();
        assert_eq!(t.n_algebra().dim(), 8);
        assert!(t.is_full() && t.is_regular());
        let blocks = StarAlgebra::block_diagonal(&[2, 2]);
        assert!(t.n_algebra().same_as(&blocks));
    }

    #[test]
    fn m2m3_instance_has_n_equal_m() {
        let t = m2m3();
        assert!(t.n_algebra().same_as(t.m()));
        assert!(t.is_full());
        let ext = ExtensionModel::build(&t).unwrap();
        assert_eq!(ext.s().len(), 4);
        assert!(ext.s().elements().iter().all(|c| c.is_idempotent()));
    }

    #[test]
    fn rank_mismatch_in_factor_is_rejected() {
        let err = CartanTripleModel::from_blocks(&[3], &[vec![0], vec![1, 2]]).unwrap_err();
        assert!(matches!(err, TripleError::NotRegular { .. }));
    }

    #[test]
    fn atom_straddling_blocks_is_not_full() {
        let err = CartanTripleModel::from_blocks(&[1, 1], &[vec![0, 1]]).unwrap_err();
        assert!(matches!(err, TripleError::NotFull { dim_d: 1, dim_center: 2 }));
    }

    #[test]
    fn bad_layouts() {
        assert!(matches!(
            CartanTripleModel::from_blocks(&[2], &[vec![0]]),
            Err(TripleError::AtomsDoNotSumToIdentity)
        ));
        assert!(matches!(
            CartanTripleModel::from_blocks(&[2], &[vec![0, 1], vec![1]]),
            Err(TripleError::AtomsNotOrthogonal { .. })
        ));
    }

    #[test]
    fn expectation_examples() {
        let t = m4();
        assert!(is_negligible(&t.expectation(&unit(4, 0, 2)).unwrap()));
        let x = unit(4, 0, 1) + unit(4, 2, 3);
        assert!(approx_eq(&t.expectation(&x).unwrap(), &x));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = random_element_in(t.m(), &mut rng);
        let ey = t.expectation(&y).unwrap();
        assert!(t.n_algebra().contains(&ey));
        assert!(approx_eq(&t.expectation(&ey).unwrap(), &ey));
    }

    #[test]
    fn gn_membership_examples() {
        let t = m4();
        assert_eq!(t.gn_membership(&identity(4)).unwrap(), Chart::identity(2));
        let ext = ExtensionModel::build(&t).unwrap();
        let w21 = ext.reference_isometry(1, 0).unwrap().clone();
        assert_eq!(t.gn_membership(&w21).unwrap(), Chart::point(2, 0, 1));
        assert_eq!(t.gn_membership(&unit(4, 0, 1)), Err(GnRejection::SourceNotInProjD));
        assert_eq!(t.gn_membership(&(unit(4, 0, 0) * c(2.0))), Err(GnRejection::NotPartialIsometry));
    }

    #[test]
    fn atom_image_not_atom_is_detected() {
        // three rank-one atoms in M_3; a unitary sending e1 to (e2+e3)/sqrt2
        let t = CartanTripleModel::from_blocks(&[3], &[vec![0], vec![1], vec![2]]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = zeros(3);
        v[(1, 0)] = c(r);
        v[(2, 0)] = c(r);
        v[(1, 1)] = c(r);
        v[(2, 1)] = c(-r);
        v[(0, 2)] = c(1.0);
        assert_eq!(t.gn_membership(&v), Err(GnRejection::AtomImageNotAtom));
    }

    #[test]
    fn extension_of_m4_is_i2() {
        let ext = ExtensionModel::build(&m4()).unwrap();
        assert_eq!(ext.s().len(), 7);
        assert!(approx_eq(ext.section(&Chart::sub_identity(2, &[0])).unwrap(), &ext.triple().atoms()[0]));
        let expected = ext.reference_isometry(1, 0).unwrap() + ext.reference_isometry(0, 1).unwrap();
        assert!(approx_eq(ext.section(&swap()).unwrap(), &expected));
        assert!(approx_eq(ext.section(&Chart::identity(2)).unwrap(), &identity(4)));
    }

    #[test]
    fn section_laws_hold() {
        for ext in [ExtensionModel::build(&m4()).unwrap(), ExtensionModel::build(&m2m3()).unwrap()] {
            let id = Chart::identity(ext.s().atom_count());
            for s in ext.s().elements() {
                assert_eq!(&ext.quotient(ext.section(s).unwrap()).unwrap(), s);
                for t in ext.s().elements() {
                    if s.natural_leq(t) {
                        let rhs = ext.section(t).unwrap() * ext.section(&s.source()).unwrap();
                        assert!(approx_eq(ext.section(s).unwrap(), &rhs));
                    }
                    let e = s.inverse().compose(t).unwrap().meet(&id).unwrap();
                    let je = ext.section(&e).unwrap();
                    let lhs = ext.section(s).unwrap().adjoint() * ext.section(t).unwrap() * je;
                    assert!(approx_eq(&lhs, je));
                }
            }
        }
    }

    #[test]
    fn cocycle_examples() {
        let ext = ExtensionModel::build(&m4()).unwrap();
        for s in ext.s().elements() {
            let sigma = ext.cocycle(&identity(4), s).unwrap();
            assert!(approx_eq(&sigma, ext.section(&s.source()).unwrap()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = ext.random_p_element(&Chart::identity(2), &mut rng).unwrap();
        assert!(approx_eq(&ext.cocycle(&p, &Chart::identity(2)).unwrap(), &p));
        // v = u w21 with u a unitary of q2 N q2, s = id_1
        let q2 = &ext.triple().atoms()[1];
        let corner = StarAlgebra::from_closed_space(Subspace::spanned_by(
            4,
            [unit(4, 2, 2), unit(4, 2, 3), unit(4, 3, 2), unit(4, 3, 3)].iter(),
        ));
        let u = q2 * random_unitary_in(&corner, &mut rng) * q2;
        let w21 = ext.reference_isometry(1, 0).unwrap();
        let v = &u * w21;
        let s = Chart::sub_identity(2, &[0]);
        let sigma = ext.cocycle(&v, &s).unwrap();
        let w12 = ext.reference_isometry(0, 1).unwrap();
        assert!(approx_eq(&sigma, &(w12 * &u * w21)));
        assert!(ext.triple().in_p(&sigma));
    }

    #[test]
    fn frolik_examples() {
        let ext = ExtensionModel::build(&m4()).unwrap();
        let f = ext.frolik_decomposition(ext.section(&swap()).unwrap()).unwrap();
        assert_eq!(f.atoms, [vec![], vec![0], vec![1], vec![]]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = ext.random_p_element(&Chart::identity(2), &mut rng).unwrap();
        let f = ext.frolik_decomposition(&p).unwrap();
        assert!(approx_eq(&f.projections[0], &identity(4)));
        assert!(f.projections[1..].iter().all(is_negligible));
    }

    #[test]
    fn frolik_three_cycle() {
        let t = CartanTripleModel::from_blocks(&[6], &[vec![0, 1], vec![2, 3], vec![4, 5]]).unwrap();
        let ext = ExtensionModel::build(&t).unwrap();
        let cycle = Chart::from_pairs(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let f = ext.frolik_decomposition(ext.section(&cycle).unwrap()).unwrap();
        assert_eq!(f.atoms, [vec![], vec![0], vec![1], vec![2]]);
        let path = Chart::from_pairs(3, &[(1, 2), (0, 1)]).unwrap();
        let f = ext.frolik_decomposition(ext.section(&path).unwrap()).unwrap();
        assert_eq!(f.atoms, [vec![], vec![0], vec![1], vec![]]);
    }

    #[test]
    fn fourier_examples() {
        let ext = ExtensionModel::build(&m4()).unwrap();
        let w21 = ext.reference_isometry(1, 0).unwrap().clone();
        let terms = ext.fourier_reconstruct(&w21).unwrap();
        for term in &terms {
            if term.chart == Chart::point(2, 0, 1) {
                assert!(approx_eq(&term.coefficient, &ext.triple().atoms()[0]));
            } else {
                assert!(is_negligible(&term.coefficient));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_element_in(ext.triple().m(), &mut rng);
        let terms = ext.fourier_reconstruct(&x).unwrap();
        assert!(distance(&resum(&terms, 4), &x) < 1e-8);
    }

    #[test]
    fn righton_examples() {
        let ext = ExtensionModel::build(&m4()).unwrap();
        let js = ext.section(&swap()).unwrap().clone();
        let y = identity(4) * C64::new(0.5, 1.0) + &js * c(-2.0);
        let terms = ext.righton_decompose(&y, &[identity(4), js.clone()]).unwrap();
        assert_eq!(terms.len(), 4);
        let err = ext.righton_decompose(&y, &[identity(4)]).unwrap_err();
        assert!(matches!(err, TripleError::OutsideSpan { .. }));
        let a = ext.section(&Chart::point(2, 0, 1)).unwrap().clone();
        let b = ext.section(&Chart::sub_identity(2, &[1])).unwrap().clone();
        let terms = ext.righton_decompose(&(&a + &b), &[a, b]).unwrap();
        assert_eq!(terms.len(), 2);
    }

    #[test]
    fn twisted_section_stays_order_preserving() {
        let ext = ExtensionModel::build(&m4()).unwrap().with_flipped_isometry(0, 1).unwrap();
        let w = ext.reference_isometry(1, 0).unwrap();
        assert!(approx_eq(&(w.adjoint() * w), &ext.triple().atoms()[0]));
        for s in ext.s().elements() {
            assert_eq!(&ext.quotient(ext.section(s).unwrap()).unwrap(), s);
        }
    }
}
