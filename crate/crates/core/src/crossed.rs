//! Finite group actions on `N`, crossed products `N x| G`, partial
//! automorphisms of `(N, D)`, and the lifting problem `S -> paut(N, D)`.

use serde::Serialize;

use crate::isemigroup::Chart;
use crate::linalg::{
    self, approx_eq, identity, is_negligible, is_unitary, null_space, LinalgError, Matrix, StarAlgebra, Subspace,
    C64,
};
use crate::triple::{CartanTripleModel, ExtensionModel, TripleError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CrossedError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Triple(#[from] TripleError),
    #[error("not a group: {0}")]
    NotGroup(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("subalgebra is not invariant under the action of group element {g}")]
    NotInvariant { g: usize },
    #[error("partial automorphisms are not compatible")]
    Incompatible,
    #[error("invalid partial automorphism: {0}")]
    InvalidPartialAutomorphism(String),
}

/// A finite group given by its multiplication table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Group {
    table: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
}

impl Group {
    pub fn new(table: Vec<Vec<usize>>, identity: usize) -> Result<Self, CrossedError> {
        let n = table.len();
        if n == 0 || identity >= n || table.iter().any(|r| r.len() != n || r.iter().any(|&x| x >= n)) {
            return Err(CrossedError::NotGroup("table must be square over 0..n".into()));
        }
        for a in 0..n {
            if table[identity][a] != a || table[a][identity] != a {
                return Err(CrossedError::NotGroup(format!("{identity} is not an identity")));
            }
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(CrossedError::NotGroup("not associative".into()));
                    }
                }
            }
        }
        let mut inverse = Vec::with_capacity(n);
        for a in 0..n {
            match (0..n).find(|&b| table[a][b] == identity && table[b][a] == identity) {
                Some(b) => inverse.push(b),
                None => return Err(CrossedError::NotGroup(format!("{a} has no inverse"))),
            }
        }
        Ok(Group { table, identity, inverse })
    }

    pub fn cyclic(k: usize) -> Self {
        let table = (0..k).map(|a| (0..k).map(|b| (a + b) % k).collect()).collect();
        Group::new(table, 0).expect("cyclic group")
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }
}

/// Coordinate matrix of a linear map `N -> N` on the orthonormal basis of `N`.
fn coordinate_map(nalg: &StarAlgebra, f: impl Fn(&Matrix) -> Matrix) -> Matrix {
    let basis = nalg.basis();
    let d = basis.len();
    let mut out = Matrix::zeros(d, d);
    for (k, b) in basis.iter().enumerate() {
        let coords = nalg.space().coordinates(&f(b));
        for (l, z) in coords.into_iter().enumerate() {
            out[(l, k)] = z;
        }
    }
    out
}

fn apply_coordinate_map(nalg: &StarAlgebra, map: &Matrix, x: &Matrix) -> Matrix {
    let coords = linalg::Vector::from_vec(nalg.space().coordinates(x));
    let image = map * coords;
    nalg.space().combine(image.as_slice())
}

/// An action of a finite group on `N` by *-automorphisms, stored as linear
/// maps on the basis of `N`.
#[derive(Debug, Clone)]
pub struct GroupAction {
    group: Group,
    nalg: StarAlgebra,
    maps: Vec<Matrix>,
}

impl GroupAction {
    /// `alpha_g = Ad(u_g)`; each `u_g` must normalize `N`.
    pub fn from_unitaries(group: Group, nalg: StarAlgebra, unitaries: &[Matrix]) -> Result<Self, CrossedError> {
        if unitaries.len() != group.order() {
            return Err(CrossedError::InvalidAction(format!(
                "{} unitaries for a group of order {}",
                unitaries.len(),
                group.order()
            )));
        }
        for (g, u) in unitaries.iter().enumerate() {
            linalg::check_square(u, nalg.ambient_dim())?;
            if !is_unitary(u) {
                return Err(CrossedError::InvalidAction(format!("u_{g} is not unitary")));
            }
            if nalg.basis().iter().any(|b| !nalg.contains(&(u * b * u.adjoint()))) {
                return Err(CrossedError::InvalidAction(format!("Ad(u_{g}) does not preserve N")));
            }
        }
        let maps = unitaries
            .iter()
            .map(|u| coordinate_map(&nalg, |b| u * b * u.adjoint()))
            .collect();
        GroupAction::from_maps(group, nalg, maps)
    }

    /// Validate `alpha_e = id`, `alpha_g alpha_h = alpha_{gh}` and
    /// *-multiplicativity on the basis of `N`.
    pub fn from_maps(group: Group, nalg: StarAlgebra, maps: Vec<Matrix>) -> Result<Self, CrossedError> {
        let d = nalg.dim();
        if maps.len() != group.order() || maps.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(CrossedError::InvalidAction("one d x d map per group element required".into()));
        }
        let action = GroupAction { group, nalg, maps };
        let e = action.group.identity();
        if !approx_eq(&action.maps[e], &identity(d)) {
            return Err(CrossedError::InvalidAction("alpha_e is not the identity".into()));
        }
        let basis = action.nalg.basis();
        for g in 0..action.group.order() {
            for h in 0..action.group.order() {
                let gh = action.group.mul(g, h);
                if !approx_eq(&(&action.maps[g] * &action.maps[h]), &action.maps[gh]) {
                    return Err(CrossedError::InvalidAction(format!("alpha_{g} alpha_{h} != alpha_{gh}")));
                }
            }
            for a in &basis {
                let ga = action.apply(g, a);
                if !approx_eq(&action.apply(g, &a.adjoint()), &ga.adjoint()) {
                    return Err(CrossedError::InvalidAction(format!("alpha_{g} is not *-preserving")));
                }
                for b in &basis {
                    if !approx_eq(&action.apply(g, &(a * b)), &(&ga * action.apply(g, b))) {
                        return Err(CrossedError::InvalidAction(format!("alpha_{g} is not multiplicative")));
                    }
                }
            }
        }
        Ok(action)
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn n_algebra(&self) -> &StarAlgebra {
        &self.nalg
    }

    pub fn apply(&self, g: usize, x: &Matrix) -> Matrix {
        apply_coordinate_map(&self.nalg, &self.maps[g], x)
    }

    /// For each `g != e`: does `y x = x alpha_g(y)` for all `y` in
    /// `restrict_to`, with `x` in `restrict_to`, force `x = 0`?
    pub fn is_properly_outer(&self, restrict_to: &StarAlgebra) -> Result<Vec<(usize, bool)>, CrossedError> {
        let basis = restrict_to.basis();
        let n = restrict_to.ambient_dim();
        let mut out = Vec::new();
        for g in 0..self.group.order() {
            let images: Vec<Matrix> = basis.iter().map(|y| self.apply(g, y)).collect();
            if images.iter().any(|y| !restrict_to.contains(y)) {
                return Err(CrossedError::NotInvariant { g });
            }
            if g == self.group.identity() {
                continue;
            }
            let mut system = Matrix::zeros(n * n * basis.len(), basis.len());
            for (l, (y, ay)) in basis.iter().zip(&images).enumerate() {
                for (k, a) in basis.iter().enumerate() {
                    let r = y * a - a * ay;
                    for (idx, z) in r.iter().enumerate() {
                        system[(l * n * n + idx, k)] = *z;
                    }
                }
            }
            out.push((g, null_space(&system).is_empty()));
        }
        Ok(out)
    }
}

/// `N x| G` on `C^n (x) C^|G|`, block `h` holding `alpha_{h^-1}(n)`.
#[derive(Debug, Clone)]
pub struct CrossedProduct {
    action: GroupAction,
    m: StarAlgebra,
    unitaries: Vec<Matrix>,
    n_image: StarAlgebra,
}

pub fn build_crossed_product(action: &GroupAction) -> Result<CrossedProduct, CrossedError> {
    let n = action.nalg.ambient_dim();
    let order = action.group.order();
    let big = n * order;
    let mut unitaries = Vec::with_capacity(order);
    for g in 0..order {
        let mut u = Matrix::zeros(big, big);
        for h in 0..order {
            let col = action.group.mul(action.group.inv(g), h);
            for i in 0..n {
                u[(h * n + i, col * n + i)] = C64::new(1.0, 0.0);
            }
        }
        unitaries.push(u);
    }
    let mut cp = CrossedProduct {
        action: action.clone(),
        m: StarAlgebra::scalars(big),
        unitaries,
        n_image: StarAlgebra::scalars(big),
    };
    let n_basis: Vec<Matrix> = action.nalg.basis().iter().map(|b| cp.pi(b)).collect();
    cp.n_image = StarAlgebra::from_closed_space(Subspace::spanned_by(big, n_basis.iter()));
    let products: Vec<Matrix> = n_basis
        .iter()
        .flat_map(|b| cp.unitaries.iter().map(move |u| b * u))
        .collect();
    cp.m = StarAlgebra::from_closed_space(Subspace::spanned_by(big, products.iter()));
    if !cp.m.is_closed() {
        return Err(CrossedError::InvalidAction("span of pi(N) u_g is not an algebra".into()));
    }
    Ok(cp)
}

impl CrossedProduct {
    pub fn action(&self) -> &GroupAction {
        &self.action
    }

    pub fn m(&self) -> &StarAlgebra {
        &self.m
    }

    /// `pi(N)` inside `M`.
    pub fn n_image(&self) -> &StarAlgebra {
        &self.n_image
    }

    pub fn unitary(&self, g: usize) -> &Matrix {
        &self.unitaries[g]
    }

    pub fn unitaries(&self) -> &[Matrix] {
        &self.unitaries
    }

    /// `pi(x) = diag_h alpha_{h^-1}(x)`.
    pub fn pi(&self, x: &Matrix) -> Matrix {
        let n = self.action.nalg.ambient_dim();
        let order = self.action.group.order();
        let mut out = Matrix::zeros(n * order, n * order);
        for h in 0..order {
            let block = self.action.apply(self.action.group.inv(h), x);
            out.view_mut((h * n, h * n), (n, n)).copy_from(&block);
        }
        out
    }

    /// `E_N(y) = pi(y_{e,e})`.
    pub fn e_n(&self, y: &Matrix) -> Matrix {
        let n = self.action.nalg.ambient_dim();
        let e = self.action.group.identity();
        let corner = y.view((e * n, e * n), (n, n)).into_owned();
        self.pi(&corner)
    }

    /// `x_g = E_N(x u_g^*)`.
    pub fn fourier_coefficients(&self, x: &Matrix) -> Vec<Matrix> {
        self.unitaries.iter().map(|u| self.e_n(&(x * u.adjoint()))).collect()
    }

    pub fn fourier_resum(&self, coefficients: &[Matrix]) -> Matrix {
        let big = self.m.ambient_dim();
        coefficients
            .iter()
            .zip(&self.unitaries)
            .fold(Matrix::zeros(big, big), |acc, (x, u)| acc + x * u)
    }

    /// Minimal projections of `pi(Z(N))`.
    pub fn center_atoms(&self) -> Result<Vec<Matrix>, CrossedError> {
        let z = self.action.nalg.center();
        Ok(linalg::minimal_projections_of_abelian(&z)?
            .iter()
            .map(|p| self.pi(p))
            .collect())
    }

    /// The triple `(M, D^c, pi(Z(N)))`, validated.
    pub fn triple(&self) -> Result<CartanTripleModel, CrossedError> {
        Ok(CartanTripleModel::new(
            self.m.clone(),
            self.center_atoms()?,
            self.unitaries.clone(),
        )?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossedVerdict {
    pub m_dim: usize,
    pub n_dim: usize,
    pub relative_commutant_dim: usize,
    pub relative_commutant_is_n: bool,
    pub model_error: Option<String>,
    pub properly_outer: Vec<(usize, bool)>,
    pub direct_cartan: bool,
    pub predicted_cartan: bool,
}

impl CrossedVerdict {
    pub fn agree(&self) -> bool {
        self.direct_cartan == self.predicted_cartan
    }
}

/// Decide whether `(N x| G, N, Z(N))` is a Cartan triple directly and through
/// proper outerness on `Z(N)`.
pub fn crossed_cartan_verdict(cp: &CrossedProduct) -> Result<CrossedVerdict, CrossedError> {
    let atoms = cp.center_atoms()?;
    let rel = cp.m.relative_commutant(&atoms);
    let relative_commutant_is_n = rel.same_as(&cp.n_image);
    let model_error = cp.triple().err().map(|e| e.to_string());
    let properly_outer = cp.action.is_properly_outer(&cp.action.nalg.center())?;
    let direct_cartan = relative_commutant_is_n && model_error.is_none();
    let predicted_cartan = properly_outer.iter().all(|(_, po)| *po);
    Ok(CrossedVerdict {
        m_dim: cp.m.dim(),
        n_dim: cp.n_image.dim(),
        relative_commutant_dim: rel.dim(),
        relative_commutant_is_n,
        model_error,
        properly_outer,
        direct_cartan,
        predicted_cartan,
    })
}

/// A partial automorphism `(e, alpha, f)` of `(N, D)`: a *-isomorphism
/// `fN -> eN` carrying `fD` onto `eD`, stored as coordinate maps on `N`
/// precomposed with multiplication by `f` (forward) or `e` (backward).
#[derive(Debug, Clone)]
pub struct PartialAutomorphism {
    e: Matrix,
    f: Matrix,
    forward: Matrix,
    backward: Matrix,
}

fn right_mult_map(nalg: &StarAlgebra, p: &Matrix) -> Matrix {
    coordinate_map(nalg, |b| b * p)
}

impl PartialAutomorphism {
    /// `(vv^*, Ad v, v^*v)` for a normalizer `v`.
    pub fn from_conjugation(triple: &CartanTripleModel, v: &Matrix) -> Result<Self, CrossedError> {
        triple
            .gn_membership(v)
            .map_err(|why| CrossedError::InvalidPartialAutomorphism(why.to_string()))?;
        let nalg = triple.n_algebra();
        let e = v * v.adjoint();
        let f = v.adjoint() * v;
        let forward = coordinate_map(nalg, |b| v * b * v.adjoint());
        let backward = coordinate_map(nalg, |b| v.adjoint() * b * v);
        let pa = PartialAutomorphism { e, f, forward, backward };
        pa.validate(triple)?;
        Ok(pa)
    }

    /// The identity of `pN` for a projection `p` of `D`.
    pub fn identity_on(triple: &CartanTripleModel, p: &Matrix) -> Result<Self, CrossedError> {
        if triple.d_projection_support(p).is_none() {
            return Err(CrossedError::InvalidPartialAutomorphism("p is not a projection of D".into()));
        }
        let m = right_mult_map(triple.n_algebra(), p);
        Ok(PartialAutomorphism {
            e: p.clone(),
            f: p.clone(),
            forward: m.clone(),
            backward: m,
        })
    }

    /// An automorphism of `N` (`e = f = I`) from its coordinate map.
    pub fn automorphism(triple: &CartanTripleModel, map: Matrix, inverse: Matrix) -> Result<Self, CrossedError> {
        let n = triple.dim();
        let pa = PartialAutomorphism {
            e: identity(n),
            f: identity(n),
            forward: map,
            backward: inverse,
        };
        pa.validate(triple)?;
        Ok(pa)
    }

    /// *-multiplicativity on `fN`, inverse maps, and `alpha(fD) = eD`.
    pub fn validate(&self, triple: &CartanTripleModel) -> Result<(), CrossedError> {
        let nalg = triple.n_algebra();
        let bad = |why: &str| Err(CrossedError::InvalidPartialAutomorphism(why.into()));
        if triple.d_projection_support(&self.e).is_none() || triple.d_projection_support(&self.f).is_none() {
            return bad("e or f is not a projection of D");
        }
        if !approx_eq(&self.apply(nalg, &self.f), &self.e) {
            return bad("alpha(f) != e");
        }
        let basis: Vec<Matrix> = nalg.basis().iter().map(|b| b * &self.f).collect();
        for a in &basis {
            let aa = self.apply(nalg, a);
            if !approx_eq(&self.apply_inverse(nalg, &aa), a) {
                return bad("backward map does not invert forward map");
            }
            if !approx_eq(&self.apply(nalg, &a.adjoint()), &aa.adjoint()) {
                return bad("not *-preserving");
            }
            for b in &basis {
                if !approx_eq(&self.apply(nalg, &(a * b)), &(&aa * self.apply(nalg, b))) {
                    return bad("not multiplicative");
                }
            }
        }
        for q in triple.atoms() {
            let fq = &self.f * q;
            if !is_negligible(&fq) && triple.d_projection_support(&self.apply(nalg, &fq)).is_none() {
                return bad("alpha(fD) is not inside D");
            }
        }
        Ok(())
    }

    pub fn e(&self) -> &Matrix {
        &self.e
    }

    pub fn f(&self) -> &Matrix {
        &self.f
    }

    pub fn apply(&self, nalg: &StarAlgebra, x: &Matrix) -> Matrix {
        apply_coordinate_map(nalg, &self.forward, x)
    }

    pub fn apply_inverse(&self, nalg: &StarAlgebra, x: &Matrix) -> Matrix {
        apply_coordinate_map(nalg, &self.backward, x)
    }

    pub fn inverse(&self) -> Self {
        PartialAutomorphism {
            e: self.f.clone(),
            f: self.e.clone(),
            forward: self.backward.clone(),
            backward: self.forward.clone(),
        }
    }

    /// `(a(f_a e_b), a o b, b^-1(f_a e_b))`.
    pub fn compose(&self, other: &Self, nalg: &StarAlgebra) -> Self {
        let middle = &self.f * &other.e;
        let e = self.apply(nalg, &middle);
        let f = other.apply_inverse(nalg, &middle);
        let forward = &self.forward * &other.forward * right_mult_map(nalg, &f);
        let backward = &other.backward * &self.backward * right_mult_map(nalg, &e);
        PartialAutomorphism { e, f, forward, backward }
    }

    /// Restriction to `pN` for a projection `p <= f` of `D`.
    pub fn restrict(&self, p: &Matrix, nalg: &StarAlgebra) -> Self {
        let e = self.apply(nalg, p);
        PartialAutomorphism {
            forward: &self.forward * right_mult_map(nalg, p),
            backward: &self.backward * right_mult_map(nalg, &e),
            e,
            f: p.clone(),
        }
    }

    pub fn same_as(&self, other: &Self, nalg: &StarAlgebra) -> bool {
        approx_eq(&self.e, &other.e)
            && approx_eq(&self.f, &other.f)
            && nalg
                .basis()
                .iter()
                .all(|b| approx_eq(&self.apply(nalg, &(b * &self.f)), &other.apply(nalg, &(b * &other.f))))
    }

    /// `e = f` and `alpha` is the identity of `fN`.
    pub fn is_idempotent(&self, nalg: &StarAlgebra) -> bool {
        approx_eq(&self.e, &self.f)
            && nalg.basis().iter().all(|b| {
                let x = b * &self.f;
                approx_eq(&self.apply(nalg, &x), &x)
            })
    }

    /// Restriction order.
    pub fn leq(&self, other: &Self, triple: &CartanTripleModel) -> bool {
        let nalg = triple.n_algebra();
        approx_eq(&(&self.f * &other.f), &self.f) && other.restrict(&self.f, nalg).same_as(self, nalg)
    }

    pub fn compatible(&self, other: &Self, nalg: &StarAlgebra) -> bool {
        self.inverse().compose(other, nalg).is_idempotent(nalg)
            && self.compose(&other.inverse(), nalg).is_idempotent(nalg)
    }

    /// Largest common restriction, assembled atom by atom.
    pub fn meet(&self, other: &Self, triple: &CartanTripleModel) -> Self {
        let nalg = triple.n_algebra();
        let n = triple.dim();
        let mut p = Matrix::zeros(n, n);
        for q in triple.atoms() {
            let fits = approx_eq(&(&self.f * q), q) && approx_eq(&(&other.f * q), q);
            if fits && nalg.basis().iter().all(|b| {
                let x = b * q;
                approx_eq(&self.apply(nalg, &x), &other.apply(nalg, &x))
            }) {
                p += q;
            }
        }
        self.restrict(&p, nalg)
    }

    /// Join of a pairwise compatible family, built from a disjoint
    /// refinement of the sources.
    pub fn join(family: &[Self], triple: &CartanTripleModel) -> Result<Self, CrossedError> {
        let nalg = triple.n_algebra();
        let n = triple.dim();
        for (i, a) in family.iter().enumerate() {
            for b in &family[i + 1..] {
                if !a.compatible(b, nalg) {
                    return Err(CrossedError::Incompatible);
                }
            }
        }
        let d = nalg.dim();
        let mut covered_f = Matrix::zeros(n, n);
        let mut covered_e = Matrix::zeros(n, n);
        let mut forward = Matrix::zeros(d, d);
        let mut backward = Matrix::zeros(d, d);
        for a in family {
            let fresh_f = &a.f - &a.f * &covered_f;
            let fresh_e = &a.e - &a.e * &covered_e;
            forward += &a.forward * right_mult_map(nalg, &fresh_f);
            backward += &a.backward * right_mult_map(nalg, &fresh_e);
            covered_f += fresh_f;
            covered_e += fresh_e;
        }
        let pa = PartialAutomorphism {
            e: covered_e,
            f: covered_f,
            forward,
            backward,
        };
        pa.validate(triple)?;
        Ok(pa)
    }

    /// Same `e`, `f`, and the same action on `fD`.
    pub fn munn_related(&self, other: &Self, triple: &CartanTripleModel) -> bool {
        let nalg = triple.n_algebra();
        approx_eq(&self.e, &other.e)
            && approx_eq(&self.f, &other.f)
            && triple.atoms().iter().all(|q| {
                let x = &self.f * q;
                approx_eq(&self.apply(nalg, &x), &other.apply(nalg, &x))
            })
    }

    /// Munn class as the induced chart on atoms.
    pub fn munn_class(&self, triple: &CartanTripleModel) -> Chart {
        let nalg = triple.n_algebra();
        let support = triple.d_projection_support(&self.f).unwrap_or_default();
        let pairs: Vec<(usize, usize)> = support
            .into_iter()
            .filter_map(|i| {
                let image = self.apply(nalg, &triple.atoms()[i]);
                match triple.d_projection_support(&image).as_deref() {
                    Some([j]) => Some((i, *j)),
                    _ => None,
                }
            })
            .collect();
        Chart::from_pairs(triple.atom_count(), &pairs).unwrap_or_else(|_| Chart::empty(triple.atom_count()))
    }
}

/// `theta(s) = [j(ss^dag), Ad j(s), j(s^dag s)]`, returned as a
/// representative together with its class.
pub fn theta_map(ext: &ExtensionModel, s: &Chart) -> Result<(PartialAutomorphism, Chart), CrossedError> {
    let pa = PartialAutomorphism::from_conjugation(ext.triple(), ext.section(s)?)?;
    let class = pa.munn_class(ext.triple());
    Ok((pa, class))
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ThetaReport {
    pub elements: usize,
    pub products_checked: usize,
    pub failures: Vec<String>,
}

impl ThetaReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `theta` is multiplicative and injective on all of `S`.
pub fn verify_theta(ext: &ExtensionModel) -> Result<ThetaReport, CrossedError> {
    let elements = ext.s().elements();
    let nalg = ext.triple().n_algebra();
    let reps = elements
        .iter()
        .map(|s| theta_map(ext, s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = ThetaReport {
        elements: elements.len(),
        ..Default::default()
    };
    for (s, (_, class)) in elements.iter().zip(&reps) {
        if class != s {
            report.failures.push(format!("theta({s}) has class {class}"));
        }
    }
    for (a, s) in elements.iter().enumerate() {
        for (b, t) in elements.iter().enumerate() {
            report.products_checked += 1;
            let st = s.compose(t).unwrap();
            let product = reps[a].0.compose(&reps[b].0, nalg);
            let target = &reps[ext.s().index_of(&st).unwrap()].0;
            if !product.munn_related(target, ext.triple()) {
                report.failures.push(format!("theta({s})theta({t}) is not theta({st})"));
            }
        }
    }
    for a in 0..reps.len() {
        for b in a + 1..reps.len() {
            if reps[a].0.munn_related(&reps[b].0, ext.triple()) {
                report
                    .failures
                    .push(format!("theta({}) = theta({})", elements[a], elements[b]));
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftStatus {
    Lifted,
    Inconclusive,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct FulmanReport {
    pub pairs_checked: usize,
    pub condition_failures: Vec<String>,
    pub homomorphism_failures: Vec<String>,
    pub projection_failures: Vec<String>,
    pub status: LiftStatus,
    #[serde(skip)]
    pub lift: Option<Vec<PartialAutomorphism>>,
}

/// Test `j(st)^* j(s) j(t) in D` on all pairs; when it holds emit
/// `alpha(s) = (j(ss^dag), Ad j(s), j(s^dag s))` and check that it is a
/// homomorphism lying over `theta`.
pub fn fulman_lift(ext: &ExtensionModel) -> Result<FulmanReport, CrossedError> {
    let triple = ext.triple();
    let nalg = triple.n_algebra();
    let elements = ext.s().elements();
    let mut report = FulmanReport {
        pairs_checked: 0,
        condition_failures: Vec::new(),
        homomorphism_failures: Vec::new(),
        projection_failures: Vec::new(),
        status: LiftStatus::Inconclusive,
        lift: None,
    };
    for s in elements {
        for t in elements {
            report.pairs_checked += 1;
            let st = s.compose(t).unwrap();
            let x = ext.section(&st)?.adjoint() * ext.section(s)? * ext.section(t)?;
            if !triple.d().contains(&x) {
                report.condition_failures.push(format!("j({st})* j({s}) j({t}) is not in D"));
            }
        }
    }
    if !report.condition_failures.is_empty() {
        return Ok(report);
    }
    let alpha = elements
        .iter()
        .map(|s| PartialAutomorphism::from_conjugation(triple, ext.section(s)?))
        .collect::<Result<Vec<_>, _>>()?;
    for (a, s) in elements.iter().enumerate() {
        let (_, class) = theta_map(ext, s)?;
        if alpha[a].munn_class(triple) != class {
            report.projection_failures.push(format!("pi(alpha({s})) != theta({s})"));
        }
        for (b, t) in elements.iter().enumerate() {
            let st = s.compose(t).unwrap();
            let product = alpha[a].compose(&alpha[b], nalg);
            if !product.same_as(&alpha[ext.s().index_of(&st).unwrap()], nalg) {
                report.homomorphism_failures.push(format!("alpha({s})alpha({t}) != alpha({st})"));
            }
        }
    }
    report.status = if report.homomorphism_failures.is_empty() && report.projection_failures.is_empty() {
        LiftStatus::Lifted
    } else {
        LiftStatus::Failed
    };
    report.lift = Some(alpha);
    Ok(report)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RegularizerVerdict {
    pub generators: usize,
    pub span_dim: usize,
    pub m_dim: usize,
    pub failures: Vec<String>,
}

impl RegularizerVerdict {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Check a candidate regularizer `R` generated by `generators` together with
/// `U(N)` (on which `alpha` is the identity).
pub fn regularizer_check(
    triple: &CartanTripleModel,
    generators: &[Matrix],
    alphas: &[PartialAutomorphism],
) -> Result<RegularizerVerdict, CrossedError> {
    let nalg = triple.n_algebra();
    let n = triple.dim();
    let mut verdict = RegularizerVerdict {
        generators: generators.len(),
        m_dim: triple.m().dim(),
        ..Default::default()
    };
    if generators.len() != alphas.len() {
        verdict.failures.push("one automorphism per generator required".into());
        return Ok(verdict);
    }
    for (k, (u, alpha)) in generators.iter().zip(alphas).enumerate() {
        if !is_unitary(u) || triple.gn_membership(u).is_err() {
            verdict.failures.push(format!("generator {k} is not a unitary normalizer"));
            continue;
        }
        if !(approx_eq(alpha.e(), &identity(n)) && approx_eq(alpha.f(), &identity(n))) {
            verdict.failures.push(format!("alpha of generator {k} is not an automorphism of N"));
            continue;
        }
        if nalg.contains(u) && !alpha.is_idempotent(nalg) {
            verdict.failures.push(format!("generator {k} lies in U(N) but alpha is not the identity"));
        }
        // (c)(ii): alpha_u agrees with Ad u on D
        for (i, q) in triple.atoms().iter().enumerate() {
            if !approx_eq(&alpha.apply(nalg, q), &(u * q * u.adjoint())) {
                verdict.failures.push(format!("generator {k}: alpha(q_{i}) != u q_{i} u*"));
            }
        }
        // (c)(i): alpha_u is the identity on Np for the largest D-projection p fixed by u
        let fixed: Vec<usize> = (0..triple.atom_count())
            .filter(|&i| {
                let q = &triple.atoms()[i];
                approx_eq(&(u * q * u.adjoint()), q) && !is_negligible(&(q * u * q))
            })
            .collect();
        let p = triple.atom_sum(&fixed);
        if nalg.basis().iter().any(|b| {
            let x = b * &p;
            !approx_eq(&alpha.apply(nalg, &x), &x)
        }) {
            verdict.failures.push(format!("generator {k}: alpha is not the identity on its fixed part"));
        }
    }
    // density: span of the group generated by R and U(N)
    let mut gens: Vec<Matrix> = generators.to_vec();
    for b in nalg.basis() {
        for (_, w) in linalg::unitary_span_decomposition(&b, nalg)? {
            gens.push(w);
        }
    }
    let mut span = Subspace::zero(n);
    span.extend(&identity(n));
    let mut next = 0;
    while next < span.dim() {
        let b = span.basis_element(next);
        next += 1;
        for g in &gens {
            span.extend(&(&b * g));
        }
    }
    verdict.span_dim = span.dim();
    if !span.same_as(triple.m().space()) {
        verdict
            .failures
            .push(format!("span of R has dimension {} but M has dimension {}", span.dim(), triple.m().dim()));
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, unit};

    fn swap4() -> Matrix {
        let mut u = Matrix::zeros(4, 4);
        for (i, j) in [(0, 2), (1, 3), (2, 0), (3, 1)] {
            u[(i, j)] = c(1.0);
        }
        u
    }

    fn z2_on_m2m2() -> GroupAction {
        let nalg = StarAlgebra::block_diagonal(&[2, 2]);
        GroupAction::from_unitaries(Group::cyclic(2), nalg, &[identity(4), swap4()]).unwrap()
    }

    fn inner_on_m2() -> GroupAction {
        let mut u = identity(2);
        u[(1, 1)] = c(-1.0);
        GroupAction::from_unitaries(Group::cyclic(2), StarAlgebra::full(2), &[identity(2), u]).unwrap()
    }

    fn swap_on_c2() -> GroupAction {
        let nalg = StarAlgebra::from_closed_space(Subspace::spanned_by(2, [unit(2, 0, 0), unit(2, 1, 1)].iter()));
        let u = unit(2, 0, 1) + unit(2, 1, 0);
        GroupAction::from_unitaries(Group::cyclic(2), nalg, &[identity(2), u]).unwrap()
    }

    #[test]
    fn group_validation() {
        assert!(Group::new(vec![vec![0, 1], vec![1, 1]], 0).is_err());
        assert_eq!(Group::cyclic(3).inv(1), 2);
    }

    #[test]
    fn action_validation() {
        let nalg = StarAlgebra::block_diagonal(&[2, 2]);
        let err = GroupAction::from_unitaries(Group::cyclic(2), nalg, &[identity(4), unit(4, 0, 1) + unit(4, 1, 0) + unit(4, 2, 2) + unit(4, 3, 3)]);
        assert!(err.is_ok());
        let nalg = StarAlgebra::block_diagonal(&[2, 2]);
        let mut bad = identity(4);
        bad[(0, 0)] = c(0.0);
        bad[(0, 2)] = c(1.0);
        bad[(2, 2)] = c(0.0);
        bad[(2, 0)] = c(1.0);
        assert!(GroupAction::from_unitaries(Group::cyclic(2), nalg, &[identity(4), bad]).is_err());
    }

    #[test]
    fn crossed_product_dimensions() {
        assert_eq!(build_crossed_product(&swap_on_c2()).unwrap().m().dim(), 4);
        assert_eq!(build_crossed_product(&z2_on_m2m2()).unwrap().m().dim(), 16);
        let trivial = GroupAction::from_unitaries(Group::cyclic(1), StarAlgebra::full(2), &[identity(2)]).unwrap();
        let cp = build_crossed_product(&trivial).unwrap();
        assert_eq!(cp.m().dim(), 4);
        assert!(approx_eq(cp.unitary(0), &identity(2)));
    }

    #[test]
    fn fourier_resum_is_exact() {
        let cp = build_crossed_product(&z2_on_m2m2()).unwrap();
        for b in cp.m().basis() {
            let coeffs = cp.fourier_coefficients(&b);
            assert!(coeffs.iter().all(|x| cp.n_image().contains(x)));
            assert!(approx_eq(&cp.fourier_resum(&coeffs), &b));
        }
    }

    #[test]
    fn properly_outer_examples() {
        let a = z2_on_m2m2();
        assert_eq!(a.is_properly_outer(&a.n_algebra().center()).unwrap(), vec![(1, true)]);
        let b = inner_on_m2();
        assert_eq!(b.is_properly_outer(b.n_algebra()).unwrap(), vec![(1, false)]);
        let id = GroupAction::from_unitaries(Group::cyclic(2), StarAlgebra::full(2), &[identity(2), identity(2)]).unwrap();
        assert_eq!(id.is_properly_outer(id.n_algebra()).unwrap(), vec![(1, false)]);
    }

    #[test]
    fn verdicts_agree() {
        let v = crossed_cartan_verdict(&build_crossed_product(&z2_on_m2m2()).unwrap()).unwrap();
        assert!(v.direct_cartan && v.agree(), "{v:?}");
        let v = crossed_cartan_verdict(&build_crossed_product(&inner_on_m2()).unwrap()).unwrap();
        assert!(!v.direct_cartan && v.agree(), "{v:?}");
        assert!(v.relative_commutant_dim > v.n_dim);
        let v = crossed_cartan_verdict(&build_crossed_product(&swap_on_c2()).unwrap()).unwrap();
        assert!(v.direct_cartan && v.agree(), "{v:?}");
        assert_eq!(v.n_dim, 2);
    }

    #[test]
    fn paut_examples() {
        let t = CartanTripleModel::from_blocks(&[4], &[vec![0, 1], vec![2, 3]]).unwrap();
        let ext = ExtensionModel::build(&t).unwrap();
        let nalg = t.n_algebra();
        let w = ext.reference_isometry(1, 0).unwrap();
        let a = PartialAutomorphism::from_conjugation(&t, w).unwrap();
        let prod = a.compose(&a.inverse(), nalg);
        assert!(prod.is_idempotent(nalg));
        assert!(approx_eq(prod.e(), &t.atoms()[1]));
        let i1 = PartialAutomorphism::identity_on(&t, &t.atoms()[0]).unwrap();
        let i2 = PartialAutomorphism::identity_on(&t, &t.atoms()[1]).unwrap();
        let j = PartialAutomorphism::join(&[i1.clone(), i2], &t).unwrap();
        assert!(j.same_as(&PartialAutomorphism::identity_on(&t, &identity(4)).unwrap(), nalg));
        assert!(i1.leq(&j, &t));
        assert!(PartialAutomorphism::join(&[i1.clone(), a.clone()], &t).is_err());
        let m = a.meet(&a, &t);
        assert!(m.same_as(&a, nalg));
        assert!(is_negligible(a.meet(&i1, &t).f()));
        // a unitary twist inside q1 N q1 gives a Munn-related but different map
        let mut twist = identity(4);
        twist[(0, 0)] = C64::new(0.0, 1.0);
        let b = PartialAutomorphism::from_conjugation(&t, &(w * &twist)).unwrap();
        assert!(a.munn_related(&b, &t));
        assert!(!a.same_as(&b, nalg));
    }

    #[test]
    fn theta_on_m4() {
        let t = CartanTripleModel::from_blocks(&[4], &[vec![0, 1], vec![2, 3]]).unwrap();
        let ext = ExtensionModel::build(&t).unwrap();
        let report = verify_theta(&ext).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.products_checked, 49);
        let swap = Chart::from_pairs(2, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(theta_map(&ext, &swap).unwrap().1, swap);
    }

    #[test]
    fn fulman_on_crossed_and_m4() {
        let cp = build_crossed_product(&z2_on_m2m2()).unwrap();
        let ext = ExtensionModel::build(&cp.triple().unwrap()).unwrap();
        let report = fulman_lift(&ext).unwrap();
        assert!(matches!(report.status, LiftStatus::Lifted), "{report:?}");
        assert_eq!(report.pairs_checked, 49);
        let t = CartanTripleModel::from_blocks(&[4], &[vec![0, 1], vec![2, 3]]).unwrap();
        let report = fulman_lift(&ExtensionModel::build(&t).unwrap()).unwrap();
        assert!(matches!(report.status, LiftStatus::Lifted), "{report:?}");
    }

    #[test]
    fn regularizer_examples() {
        let cp = build_crossed_product(&z2_on_m2m2()).unwrap();
        let triple = cp.triple().unwrap();
        let nalg = triple.n_algebra();
        let alphas: Vec<PartialAutomorphism> = cp
            .unitaries()
            .iter()
            .map(|u| {
                let fwd = coordinate_map(nalg, |b| u * b * u.adjoint());
                let bwd = coordinate_map(nalg, |b| u.adjoint() * b * u);
                PartialAutomorphism::automorphism(&triple, fwd, bwd).unwrap()
            })
            .collect();
        let v = regularizer_check(&triple, cp.unitaries(), &alphas).unwrap();
        assert!(v.passed(), "{v:?}");
        let t = CartanTripleModel::from_blocks(&[4], &[vec![0, 1], vec![2, 3]]).unwrap();
        let v = regularizer_check(&t, &[], &[]).unwrap();
        assert_eq!((v.span_dim, v.m_dim), (8, 16));
        assert!(!v.passed());
        let t = CartanTripleModel::from_blocks(&[2, 3], &[vec![0, 1], vec![2, 3, 4]]).unwrap();
        assert!(regularizer_check(&t, &[], &[]).unwrap().passed());
    }
}
