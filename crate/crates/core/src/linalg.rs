//! Dense complex matrix kernel for finite-dimensional *-algebras.
//!
//! Elements of every algebra in this crate are square complex matrices. Linear
//! subspaces of `M_n(C)` are kept as orthonormal bases under the trace inner
//! product `<a, b> = tr(a* b)`, which for column-major storage is the ordinary
//! Hermitian dot product of the flattened matrices.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

static TOLERANCE: AtomicU64 = AtomicU64::new(DEFAULT_TOLERANCE.to_bits());

/// Global tolerance used for rank and membership decisions.
pub fn tolerance() -> f64 {
    f64::from_bits(TOLERANCE.load(Ordering::Relaxed))
}

pub fn set_tolerance(tol: f64) {
    assert!(tol > 0.0 && tol.is_finite(), "tolerance must be positive");
    TOLERANCE.store(tol.to_bits(), Ordering::Relaxed);
}

/// Slack applied on top of the rank tolerance when testing whether a computed
/// matrix satisfies an identity (products accumulate a few ulps per entry).
fn identity_slack() -> f64 {
    100.0 * tolerance()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("expected a square {expected}x{expected} matrix, got {rows}x{cols}")]
    Dimension {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("matrix is not a projection (defect {defect:.3e})")]
    NotProjection { defect: f64 },
    #[error("matrix does not belong to the algebra (residual {residual:.3e})")]
    NotMember { residual: f64 },
    #[error("spectral decomposition of the center did not separate {expected} minimal projections")]
    CenterSplit { expected: usize },
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> Matrix {
    Matrix::identity(n, n)
}

pub fn zeros(n: usize) -> Matrix {
    Matrix::zeros(n, n)
}

/// Matrix unit `E_ij` (zero-based indices).
pub fn unit(n: usize, i: usize, j: usize) -> Matrix {
    let mut m = zeros(n);
    m[(i, j)] = c(1.0);
    m
}

/// Diagonal 0/1 projection onto the listed coordinates.
pub fn coordinate_projection(n: usize, coords: &[usize]) -> Matrix {
    let mut m = zeros(n);
    for &i in coords {
        m[(i, i)] = c(1.0);
    }
    m
}

pub fn fro_norm(m: &Matrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn distance(a: &Matrix, b: &Matrix) -> f64 {
    fro_norm(&(a - b))
}

/// `tr(a* b)`.
pub fn trace_inner(a: &Matrix, b: &Matrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn trace(m: &Matrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `a` and `b` agree up to the identity slack, scaled by their size.
pub fn approx_eq(a: &Matrix, b: &Matrix) -> bool {
    a.shape() == b.shape() && distance(a, b) <= identity_slack() * (1.0 + fro_norm(a).max(fro_norm(b)))
}

pub fn is_negligible(m: &Matrix) -> bool {
    fro_norm(m) <= identity_slack()
}

pub fn commutator(a: &Matrix, b: &Matrix) -> Matrix {
    a * b - b * a
}

pub fn projection_defect(p: &Matrix) -> f64 {
    if !p.is_square() {
        return f64::INFINITY;
    }
    distance(&(p * p), p).max(distance(&p.adjoint(), p))
}

pub fn is_projection(p: &Matrix) -> bool {
    projection_defect(p) <= identity_slack() * (1.0 + fro_norm(p))
}

pub fn is_partial_isometry(v: &Matrix) -> bool {
    v.is_square() && approx_eq(&(v * v.adjoint() * v), v)
}

pub fn is_unitary(u: &Matrix) -> bool {
    if !u.is_square() {
        return false;
    }
    let id = identity(u.nrows());
    approx_eq(&(u.adjoint() * u), &id) && approx_eq(&(u * u.adjoint()), &id)
}

/// Rank of a projection, read off its trace.
pub fn projection_rank(p: &Matrix) -> usize {
    trace(p).re.round().max(0.0) as usize
}

pub fn check_square(m: &Matrix, n: usize) -> Result<(), LinalgError> {
    if m.nrows() != n || m.ncols() != n {
        return Err(LinalgError::Dimension {
            expected: n,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

pub fn check_projection(p: &Matrix) -> Result<(), LinalgError> {
    if is_projection(p) {
        Ok(())
    } else {
        Err(LinalgError::NotProjection {
            defect: projection_defect(p),
        })
    }
}

/// Make the first significant coordinate of `v` real and positive.
fn normalize_phase(v: &mut Vector) {
    let scale = v.norm();
    if scale == 0.0 {
        return;
    }
    if let Some(first) = v.iter().copied().find(|z| z.norm() > 1e-8 * scale) {
        let phase = first.conj() / first.norm();
        *v *= phase;
    }
}

/// Eigendecomposition of the Hermitian part of `h`: eigenvalues ascending,
/// eigenvectors as columns, each with its first significant coordinate made
/// real positive.
pub fn hermitian_eigen(h: &Matrix) -> (Vec<f64>, Matrix) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    let sym = (h + h.adjoint()) * c(0.5);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let mut vectors = Matrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, &idx) in order.iter().enumerate() {
        let mut col: Vector = eig.eigenvectors.column(idx).into_owned();
        normalize_phase(&mut col);
        vectors.set_column(k, &col);
        values.push(eig.eigenvalues[idx]);
    }
    (values, vectors)
}

/// Apply `f` to a Hermitian matrix through its spectral decomposition.
pub fn hermitian_function(h: &Matrix, f: impl Fn(f64) -> C64) -> Matrix {
    let (values, vectors) = hermitian_eigen(h);
    let diag = Matrix::from_diagonal(&Vector::from_iterator(values.len(), values.iter().map(|&x| f(x))));
    &vectors * diag * vectors.adjoint()
}

/// Operator norm (largest singular value).
pub fn op_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let (values, _) = hermitian_eigen(&(m.adjoint() * m));
    values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Partial isometry `w` of the polar decomposition `x = w |x|`.
pub fn polar_part(x: &Matrix) -> Matrix {
    let gram = x.adjoint() * x;
    let (values, _) = hermitian_eigen(&gram);
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let cut = tolerance() * top.max(f64::MIN_POSITIVE);
    let inv_sqrt = hermitian_function(&gram, |l| if l > cut { c(1.0 / l.sqrt()) } else { c(0.0) });
    x * inv_sqrt
}

fn flatten(m: &Matrix) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

fn unflatten(n: usize, v: &Vector) -> Matrix {
    Matrix::from_column_slice(n, n, v.as_slice())
}

/// Orthonormal basis of the null space of `a` (as column vectors), with
/// singular values below `tol * sigma_max` treated as zero.
///
/// Tall inputs are compressed block-wise through QR so memory stays at
/// `O(cols^2)` plus one block.
pub fn null_space(a: &DMatrix<C64>) -> Vec<Vector> {
    let cols = a.ncols();
    if cols == 0 {
        return Vec::new();
    }
    let reduced = compress_rows(std::iter::once(a.clone()), cols);
    null_space_of_square(&reduced, 0.0)
}

/// Stack the row blocks and reduce them to an upper-triangular `cols x cols`
/// factor with the same right singular structure.
fn compress_rows(blocks: impl Iterator<Item = DMatrix<C64>>, cols: usize) -> DMatrix<C64> {
    let mut r = DMatrix::<C64>::zeros(0, cols);
    for block in blocks {
        assert_eq!(block.ncols(), cols);
        let stacked = if r.nrows() == 0 {
            block
        } else {
            let mut s = DMatrix::<C64>::zeros(r.nrows() + block.nrows(), cols);
            s.rows_mut(0, r.nrows()).copy_from(&r);
            s.rows_mut(r.nrows(), block.nrows()).copy_from(&block);
            s
        };
        if stacked.nrows() > cols {
            r = stacked.qr().r();
        } else {
            r = stacked;
        }
    }
    let mut square = DMatrix::<C64>::zeros(cols, cols);
    let rows = r.nrows().min(cols);
    square.rows_mut(0, rows).copy_from(&r.rows(0, rows));
    square
}

/// Singular values below `tol * max(sigma_max, floor)` count as zero; the
/// floor keeps pure rounding noise from reading as rank.
fn null_space_of_square(a: &DMatrix<C64>, floor: f64) -> Vec<Vector> {
    let n = a.ncols();
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = tolerance() * sigma_max.max(floor);
    let mut out = Vec::new();
    for k in 0..n {
        let s = svd.singular_values[k];
        if sigma_max == 0.0 || s <= cut {
            let row = v_t.row(k);
            let mut v = Vector::from_iterator(n, row.iter().map(|z| z.conj()));
            normalize_phase(&mut v);
            out.push(v);
        }
    }
    out
}

/// A linear subspace of `M_n(C)` with an orthonormal basis under the trace
/// inner product.
#[derive(Debug, Clone)]
pub struct Subspace {
    n: usize,
    vecs: Vec<Vector>,
}

impl Subspace {
    pub fn zero(n: usize) -> Self {
        Subspace { n, vecs: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Subspace::zero(n);
        for j in 0..n {
            for i in 0..n {
                s.vecs.push(flatten(&unit(n, i, j)));
            }
        }
        s
    }

    /// Modified Gram-Schmidt over the inputs, in order.
    pub fn spanned_by<'a>(n: usize, items: impl IntoIterator<Item = &'a Matrix>) -> Self {
        let mut s = Subspace::zero(n);
        for m in items {
            s.extend(m);
        }
        s
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.vecs.len()
    }

    pub fn basis(&self) -> Vec<Matrix> {
        self.vecs.iter().map(|v| unflatten(self.n, v)).collect()
    }

    pub fn basis_element(&self, k: usize) -> Matrix {
        unflatten(self.n, &self.vecs[k])
    }

    fn residual_vec(&self, v: &Vector) -> Vector {
        let mut w = v.clone();
        // two passes keep the basis orthonormal to working precision
        for _ in 0..2 {
            for b in &self.vecs {
                let coef = b.dotc(&w);
                w.axpy(-coef, b, C64::new(1.0, 0.0));
            }
        }
        w
    }

    /// Add `m` to the span; returns whether the dimension grew.
    pub fn extend(&mut self, m: &Matrix) -> bool {
        debug_assert_eq!(m.nrows(), self.n);
        let v = flatten(m);
        let scale = v.norm();
        if scale <= tolerance() {
            return false;
        }
        let w = self.residual_vec(&v);
        let r = w.norm();
        // anything `contains` would accept must not open a new direction
        if r <= 10.0 * identity_slack() * (1.0 + scale) {
            return false;
        }
        self.vecs.push(w / C64::new(r, 0.0));
        true
    }

    /// Coordinates of the orthogonal projection of `m` in the basis.
    pub fn coordinates(&self, m: &Matrix) -> Vec<C64> {
        let v = flatten(m);
        self.vecs.iter().map(|b| b.dotc(&v)).collect()
    }

    pub fn combine(&self, coords: &[C64]) -> Matrix {
        let mut v = Vector::zeros(self.n * self.n);
        for (b, &cf) in self.vecs.iter().zip(coords) {
            v.axpy(cf, b, C64::new(1.0, 0.0));
        }
        unflatten(self.n, &v)
    }

    pub fn project(&self, m: &Matrix) -> Matrix {
        self.combine(&self.coordinates(m))
    }

    /// Frobenius distance from `m` to the subspace.
    pub fn residual(&self, m: &Matrix) -> f64 {
        self.residual_vec(&flatten(m)).norm()
    }

    pub fn contains(&self, m: &Matrix) -> bool {
        m.nrows() == self.n && self.residual(m) <= identity_slack() * (1.0 + fro_norm(m))
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.n == other.n && self.dim() <= other.dim() && self.vecs.iter().all(|v| other.residual_vec(v).norm() <= identity_slack())
    }

    pub fn same_as(&self, other: &Subspace) -> bool {
        self.dim() == other.dim() && self.is_subspace_of(other)
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut s = self.clone();
        for m in other.basis() {
            s.extend(&m);
        }
        s
    }

    pub fn intersection(&self, other: &Subspace) -> Subspace {
        // x = sum c_l b_l with (1 - P_other) x = 0
        let d = self.dim();
        if d == 0 {
            return Subspace::zero(self.n);
        }
        let rows = self.n * self.n;
        let mut a = DMatrix::<C64>::zeros(rows, d);
        for (l, b) in self.vecs.iter().enumerate() {
            a.set_column(l, &other.residual_vec(b));
        }
        let null = null_space(&a);
        let mut s = Subspace::zero(self.n);
        for coeffs in null {
            s.extend(&self.combine(coeffs.as_slice()));
        }
        s
    }
}

/// A unital *-subalgebra of `M_n(C)`.
#[derive(Debug, Clone)]
pub struct StarAlgebra {
    space: Subspace,
    generators: Vec<Matrix>,
}

impl StarAlgebra {
    /// Wrap a subspace already known to be a unital *-algebra.
    pub fn from_closed_space(space: Subspace) -> Self {
        StarAlgebra {
            generators: space.basis(),
            space,
        }
    }

    pub fn full(n: usize) -> Self {
        let mut a = StarAlgebra::from_closed_space(Subspace::full(n));
        a.generators = vec![unit(n, 0, 0)];
        for i in 1..n {
            a.generators.push(unit(n, i - 1, i));
        }
        a
    }

    pub fn scalars(n: usize) -> Self {
        StarAlgebra::from_closed_space(Subspace::spanned_by(n, [&identity(n)]))
    }

    /// Block-diagonal algebra `M_{b1} + ... + M_{bk}` inside `M_n`, `n = sum b`.
    pub fn block_diagonal(blocks: &[usize]) -> Self {
        let n: usize = blocks.iter().sum();
        let mut units = Vec::new();
        let mut offset = 0;
        for &b in blocks {
            for j in 0..b {
                for i in 0..b {
                    units.push(unit(n, offset + i, offset + j));
                }
            }
            offset += b;
        }
        StarAlgebra::from_closed_space(Subspace::spanned_by(n, units.iter()))
    }

    pub fn ambient_dim(&self) -> usize {
        self.space.ambient_dim()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn basis(&self) -> Vec<Matrix> {
        self.space.basis()
    }

    /// A set generating the algebra as a *-algebra.
    pub fn generators(&self) -> &[Matrix] {
        &self.generators
    }

    pub fn unit(&self) -> Matrix {
        identity(self.ambient_dim())
    }

    pub fn contains(&self, m: &Matrix) -> bool {
        self.space.contains(m)
    }

    pub fn check_member(&self, m: &Matrix) -> Result<(), LinalgError> {
        check_square(m, self.ambient_dim())?;
        if self.contains(m) {
            Ok(())
        } else {
            Err(LinalgError::NotMember {
                residual: self.space.residual(m),
            })
        }
    }

    pub fn same_as(&self, other: &StarAlgebra) -> bool {
        self.space.same_as(&other.space)
    }

    pub fn is_subalgebra_of(&self, other: &StarAlgebra) -> bool {
        self.space.is_subspace_of(&other.space)
    }

    /// Closure check: products and adjoints of basis elements stay inside.
    pub fn is_closed(&self) -> bool {
        let basis = self.basis();
        basis.iter().all(|a| self.contains(&a.adjoint()))
            && basis.iter().all(|a| basis.iter().all(|b| self.contains(&(a * b))))
            && self.contains(&self.unit())
    }

    /// Elements of `self` commuting with every matrix in `others`.
    pub fn relative_commutant(&self, others: &[Matrix]) -> StarAlgebra {
        let basis = self.basis();
        let d = basis.len();
        let n = self.ambient_dim();
        let blocks = others.iter().map(|y| {
            let mut block = DMatrix::<C64>::zeros(n * n, d);
            for (l, b) in basis.iter().enumerate() {
                block.set_column(l, &flatten(&commutator(b, y)));
            }
            block
        });
        let reduced = compress_rows(blocks, d);
        let null = if others.is_empty() {
            (0..d)
                .map(|l| {
                    let mut e = Vector::zeros(d);
                    e[l] = c(1.0);
                    e
                })
                .collect()
        } else {
            let floor = others.iter().map(fro_norm).fold(0.0, f64::max);
            null_space_of_square(&reduced, floor)
        };
        let mut space = Subspace::zero(n);
        space.extend(&identity(n));
        for coeffs in null {
            space.extend(&self.space.combine(coeffs.as_slice()));
        }
        StarAlgebra::from_closed_space(space)
    }

    pub fn center(&self) -> StarAlgebra {
        self.relative_commutant(&self.generators)
    }

    pub fn is_abelian(&self) -> bool {
        let basis = self.basis();
        basis.iter().all(|a| basis.iter().all(|b| is_negligible(&commutator(a, b))))
    }

    /// Minimal central projections, ordered by their first supported coordinate.
    pub fn minimal_central_projections(&self) -> Result<Vec<Matrix>, LinalgError> {
        let center = self.center();
        minimal_projections_of_abelian(&center)
    }
}

/// Minimal projections of an abelian unital *-algebra.
pub fn minimal_projections_of_abelian(algebra: &StarAlgebra) -> Result<Vec<Matrix>, LinalgError> {
    let n = algebra.ambient_dim();
    let d = algebra.dim();
    if d <= 1 {
        return Ok(vec![identity(n)]);
    }
    let basis = algebra.basis();
    const GOLDEN: f64 = 0.618_033_988_749_895;
    for attempt in 0..6 {
        let mut h = zeros(n);
        for (k, b) in basis.iter().enumerate() {
            let w1 = ((k as f64 + 1.0) * GOLDEN + attempt as f64 * 0.37).fract() + 0.5;
            let w2 = ((k as f64 + 2.0) * GOLDEN * GOLDEN + attempt as f64 * 0.11).fract() + 0.5;
            let herm = (b + b.adjoint()) * c(0.5);
            let anti = (b - b.adjoint()) * C64::new(0.0, -0.5);
            h += herm * c(w1) + anti * c(w2);
        }
        let (values, vectors) = hermitian_eigen(&h);
        let spread = values.last().unwrap() - values.first().unwrap();
        let gap = 1e-6 * (1.0 + spread.abs());
        let mut projections = Vec::new();
        let mut start = 0;
        for k in 1..=n {
            if k == n || values[k] - values[k - 1] > gap {
                let cols = vectors.columns(start, k - start);
                projections.push(cols * cols.adjoint());
                start = k;
            }
        }
        if projections.len() == d && projections.iter().all(|p| algebra.contains(p)) {
            projections.sort_by_key(first_support);
            return Ok(projections);
        }
    }
    Err(LinalgError::CenterSplit { expected: d })
}

fn first_support(p: &Matrix) -> usize {
    (0..p.nrows()).find(|&i| p[(i, i)].re > 1e-6).unwrap_or(p.nrows())
}

/// Smallest unital *-closed subalgebra of `M_n` containing `generators`.
pub fn generated_star_algebra(generators: &[Matrix], n: usize) -> Result<StarAlgebra, LinalgError> {
    for g in generators {
        check_square(g, n)?;
    }
    let mut gens: Vec<Matrix> = Vec::new();
    {
        let mut span = Subspace::zero(n);
        for g in generators {
            if span.extend(g) {
                gens.push(g.clone());
            }
            let a = g.adjoint();
            if span.extend(&a) {
                gens.push(a);
            }
        }
    }
    let mut space = Subspace::zero(n);
    space.extend(&identity(n));
    for g in &gens {
        space.extend(g);
    }
    // words in the (adjoint-closed) generating set: close under right multiplication
    let mut next = 0;
    while next < space.dim() {
        let b = space.basis_element(next);
        next += 1;
        for g in &gens {
            space.extend(&(&b * g));
        }
    }
    let mut generators_out = gens;
    generators_out.insert(0, identity(n));
    Ok(StarAlgebra {
        space,
        generators: generators_out,
    })
}

/// Commutant of `algebra` in the full matrix algebra `M_n`.
pub fn commutant(algebra: &StarAlgebra) -> StarAlgebra {
    let n = algebra.ambient_dim();
    let nn = n * n;
    // vec(Xy - yX) = (y^T (x) I - I (x) y) vec(X)
    let blocks = algebra.generators().iter().map(|y| {
        let id = identity(n);
        y.transpose().kronecker(&id) - id.kronecker(y)
    });
    let reduced = compress_rows(blocks, nn);
    let floor = algebra.generators().iter().map(fro_norm).fold(0.0, f64::max);
    let null = null_space_of_square(&reduced, floor);
    let mut space = Subspace::zero(n);
    space.extend(&identity(n));
    for v in null {
        space.extend(&unflatten(n, &v));
    }
    StarAlgebra::from_closed_space(space)
}

/// Murray-von Neumann equivalence of projections inside `ambient`, decided by
/// comparing ranks under each minimal central projection.
pub fn projections_equivalent(p: &Matrix, q: &Matrix, ambient: &StarAlgebra) -> Result<bool, LinalgError> {
    check_projection(p)?;
    check_projection(q)?;
    ambient.check_member(p)?;
    ambient.check_member(q)?;
    let central = ambient.minimal_central_projections()?;
    Ok(central
        .iter()
        .all(|z| projection_rank(&(z * p)) == projection_rank(&(z * q))))
}

/// Write `x` as a combination of at most four unitaries of `ambient`.
pub fn unitary_span_decomposition(x: &Matrix, ambient: &StarAlgebra) -> Result<Vec<(C64, Matrix)>, LinalgError> {
    ambient.check_member(x)?;
    if fro_norm(x) <= tolerance() {
        return Ok(Vec::new());
    }
    if is_unitary(x) {
        return Ok(vec![(c(1.0), x.clone())]);
    }
    let re = (x + x.adjoint()) * c(0.5);
    let im = (x - x.adjoint()) * C64::new(0.0, -0.5);
    let mut out = Vec::new();
    for (part, weight) in [(re, c(1.0)), (im, C64::new(0.0, 1.0))] {
        let norm = op_norm(&part);
        if norm <= tolerance() {
            continue;
        }
        let h = &part / c(norm);
        let u = hermitian_function(&h, |l| {
            let l = l.clamp(-1.0, 1.0);
            C64::new(l, (1.0 - l * l).sqrt())
        });
        let coef = weight * c(norm / 2.0);
        let u_adj = u.adjoint();
        out.push((coef, u));
        out.push((coef, u_adj));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize, j: usize) -> Matrix {
        unit(n, i, j)
    }

    #[test]
    fn diagonal_idempotent_generates_two_dims() {
        let a = generated_star_algebra(&[e(2, 0, 0)], 2).unwrap();
        assert_eq!(a.dim(), 2);
        assert!(a.contains(&identity(2)));
        assert!(a.contains(&e(2, 1, 1)));
        assert!(!a.contains(&e(2, 0, 1)));
    }

    #[test]
    fn off_diagonal_unit_generates_full_m2() {
        let a = generated_star_algebra(&[e(2, 0, 1)], 2).unwrap();
        assert_eq!(a.dim(), 4);
    }

    #[test]
    fn empty_generators_give_scalars() {
        let a = generated_star_algebra(&[], 3).unwrap();
        assert_eq!(a.dim(), 1);
        assert!(a.contains(&(identity(3) * c(2.5))));
    }

    #[test]
    fn non_square_generator_is_rejected() {
        let bad = Matrix::zeros(2, 3);
        assert!(matches!(
            generated_star_algebra(&[bad], 2),
            Err(LinalgError::Dimension { .. })
        ));
    }

    #[test]
    fn commutant_of_scalars_is_everything() {
        let a = commutant(&StarAlgebra::scalars(3));
        assert_eq!(a.dim(), 9);
    }

    #[test]
    fn commutant_of_two_block_diagonal_is_m2_plus_m2() {
        let p = coordinate_projection(4, &[0, 1]);
        let q = coordinate_projection(4, &[2, 3]);
        let d = generated_star_algebra(&[p, q], 4).unwrap();
        let n = commutant(&d);
        assert_eq!(n.dim(), 8);
        assert!(n.contains(&e(4, 0, 1)));
        assert!(!n.contains(&e(4, 0, 2)));
        assert!(n.is_closed());
    }

    #[test]
    fn projection_equivalence_examples() {
        let m4 = StarAlgebra::full(4);
        let p = coordinate_projection(4, &[0, 1]);
        let q = coordinate_projection(4, &[2, 3]);
        assert!(projections_equivalent(&p, &q, &m4).unwrap());
        assert!(projections_equivalent(&p, &p, &m4).unwrap());

        let m23 = StarAlgebra::block_diagonal(&[2, 3]);
        let p = coordinate_projection(5, &[0, 1]);
        let q = coordinate_projection(5, &[2, 3, 4]);
        assert!(!projections_equivalent(&p, &q, &m23).unwrap());
        let p1 = coordinate_projection(5, &[0]);
        let q1 = coordinate_projection(5, &[2]);
        assert!(!projections_equivalent(&p1, &q1, &m23).unwrap());
    }

    #[test]
    fn projection_validation() {
        let m2 = StarAlgebra::full(2);
        let not_proj = e(2, 0, 1);
        assert!(matches!(
            projections_equivalent(&not_proj, &identity(2), &m2),
            Err(LinalgError::NotProjection { .. })
        ));
    }

    #[test]
    fn minimal_central_projections_of_blocks() {
        let a = StarAlgebra::block_diagonal(&[2, 1, 3]);
        let z = a.minimal_central_projections().unwrap();
        assert_eq!(z.len(), 3);
        assert_eq!(
            z.iter().map(projection_rank).collect::<Vec<_>>(),
            vec![2, 1, 3]
        );
        assert!(approx_eq(&z[0], &coordinate_projection(6, &[0, 1])));
    }

    #[test]
    fn unitary_decomposition_examples() {
        let m2 = StarAlgebra::full(2);
        let swap = e(2, 0, 1) + e(2, 1, 0);
        let terms = unitary_span_decomposition(&swap, &m2).unwrap();
        assert_eq!(terms.len(), 1);
        assert!(approx_eq(&terms[0].1, &swap));

        assert!(unitary_span_decomposition(&zeros(2), &m2).unwrap().is_empty());

        let terms = unitary_span_decomposition(&e(2, 0, 0), &m2).unwrap();
        assert_eq!(terms.len(), 2);
        let u = e(2, 0, 0) + e(2, 1, 1) * C64::new(0.0, 1.0);
        assert!(approx_eq(&terms[0].1, &u));
        assert!(approx_eq(&((&u + u.adjoint()) * c(0.5)), &e(2, 0, 0)));
        let sum = terms.iter().fold(zeros(2), |acc, (cf, w)| acc + w * *cf);
        assert!(approx_eq(&sum, &e(2, 0, 0)));
    }

    #[test]
    fn decomposition_rejects_non_members() {
        let d = StarAlgebra::block_diagonal(&[1, 1]);
        assert!(matches!(
            unitary_span_decomposition(&e(2, 0, 1), &d),
            Err(LinalgError::NotMember { .. })
        ));
    }

    #[test]
    fn polar_part_of_rank_one() {
        let x = e(3, 1, 0) * c(3.0);
        let w = polar_part(&x);
        assert!(approx_eq(&w, &e(3, 1, 0)));
        assert!(is_partial_isometry(&w));
    }

    #[test]
    fn subspace_intersection() {
        let a = Subspace::spanned_by(2, [&e(2, 0, 0), &e(2, 0, 1)]);
        let b = Subspace::spanned_by(2, [&e(2, 0, 0), &e(2, 1, 1)]);
        let i = a.intersection(&b);
        assert_eq!(i.dim(), 1);
        assert!(i.contains(&e(2, 0, 0)));
    }
}
