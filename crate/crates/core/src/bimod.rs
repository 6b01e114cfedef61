//! `N`-bimodules of a full Cartan triple, their spectral sets, and the
//! correspondence between intermediate algebras and Cartan submonoids.

use rand::Rng;
use serde::Serialize;

use crate::isemigroup::{Chart, InverseMonoid, SemigroupError};
use crate::linalg::{
    generated_star_algebra, is_negligible, unitary_span_decomposition, LinalgError, Matrix, StarAlgebra,
    Subspace, C64,
};
use crate::triple::{random_element_in, ExtensionModel, TripleError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BimodError {
    #[error(transparent)]
    Triple(#[from] TripleError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error("the triple is not full")]
    NotFull,
    #[error("not a spectral set")]
    NotSpectral,
}

/// A subspace of `M` closed under left and right multiplication by `N`.
#[derive(Debug, Clone)]
pub struct Bimodule {
    space: Subspace,
}

impl Bimodule {
    /// Wrap a subspace of `M` after checking it is closed under `N` on both
    /// sides.
    pub fn from_subspace(ext: &ExtensionModel, space: Subspace) -> Option<Bimodule> {
        let triple = ext.triple();
        let nbasis = triple.n_algebra().basis();
        let basis = space.basis();
        let closed = basis.iter().all(|b| {
            triple.m().contains(b) && nbasis.iter().all(|x| space.contains(&(x * b)) && space.contains(&(b * x)))
        });
        closed.then_some(Bimodule { space })
    }

    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn contains(&self, x: &Matrix) -> bool {
        self.space.contains(x)
    }

    pub fn same_as(&self, other: &Bimodule) -> bool {
        self.space.same_as(&other.space)
    }

    pub fn is_subset_of(&self, other: &Bimodule) -> bool {
        self.space.is_subspace_of(&other.space)
    }
}

/// Smallest `N`-bimodule containing the generators.
pub fn bimodule_closure(ext: &ExtensionModel, generators: &[Matrix]) -> Result<Bimodule, BimodError> {
    let triple = ext.triple();
    let n = triple.dim();
    for g in generators {
        triple.m().check_member(g)?;
    }
    let nbasis = triple.n_algebra().basis();
    let mut space = Subspace::zero(n);
    for g in generators {
        space.extend(g);
    }
    let mut next = 0;
    while next < space.dim() {
        let b = space.basis_element(next);
        next += 1;
        for x in &nbasis {
            space.extend(&(x * &b));
            space.extend(&(&b * x));
        }
    }
    Ok(Bimodule { space })
}

fn require_full(ext: &ExtensionModel) -> Result<(), BimodError> {
    if ext.triple().is_full() {
        Ok(())
    } else {
        Err(BimodError::NotFull)
    }
}

/// Charts of the normalizers lying in `b`. Since `b` is a right `N`-module and
/// any normalizer with chart `s` is `j(s)` times an element of `P`, this is
/// `{s : j(s) in b}`.
pub fn theta(ext: &ExtensionModel, b: &Bimodule) -> Result<Vec<Chart>, BimodError> {
    require_full(ext)?;
    Ok(ext
        .s()
        .elements()
        .iter()
        .zip(ext.sections())
        .filter(|(_, js)| b.contains(js))
        .map(|(s, _)| s.clone())
        .collect())
}

/// `span {j(a) n : a in A, n in N}`.
pub fn psi(ext: &ExtensionModel, a: &[Chart]) -> Result<Bimodule, BimodError> {
    require_full(ext)?;
    if !ext.s().is_spectral_set(a) {
        return Err(BimodError::NotSpectral);
    }
    Ok(psi_unchecked(ext, a))
}

fn psi_unchecked(ext: &ExtensionModel, a: &[Chart]) -> Bimodule {
    let n = ext.triple().dim();
    let nbasis = ext.triple().n_algebra().basis();
    let mut space = Subspace::zero(n);
    for s in a {
        if let Ok(js) = ext.section(s) {
            for x in &nbasis {
                space.extend(&(js * x));
            }
        }
    }
    Bimodule { space }
}

/// A random bimodule generated by `p_L G p_R` with `G` Gaussian in `M` and
/// `p_L`, `p_R` random projections of `D`.
pub fn random_bimodule<R: Rng + ?Sized>(ext: &ExtensionModel, rng: &mut R) -> Bimodule {
    let triple = ext.triple();
    let k = triple.atom_count();
    let count = rng.random_range(1..=2);
    let mut generators = Vec::with_capacity(count);
    for _ in 0..count {
        let mut pick = || -> Vec<usize> { (0..k).filter(|_| rng.random_bool(0.5)).collect() };
        let (left, right) = (pick(), pick());
        let g = random_element_in(triple.m(), rng);
        generators.push(triple.atom_sum(&left) * g * triple.atom_sum(&right));
    }
    bimodule_closure(ext, &generators).expect("generators lie in M")
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SpectralTheoremReport {
    pub spectral_sets: usize,
    pub theta_psi_failures: Vec<String>,
    pub bimodule_samples: usize,
    pub psi_theta_failures: Vec<String>,
    pub theta_not_spectral: Vec<String>,
    pub order_checks: usize,
    pub order_failures: Vec<String>,
}

impl SpectralTheoremReport {
    pub fn passed(&self) -> bool {
        self.theta_psi_failures.is_empty()
            && self.psi_theta_failures.is_empty()
            && self.theta_not_spectral.is_empty()
            && self.order_failures.is_empty()
    }
}

fn show(set: &[Chart]) -> String {
    let items: Vec<String> = set.iter().map(|c| c.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

/// Round trips `Theta(Psi(A)) = A` over all spectral sets, `Psi(Theta(B)) = B`
/// over sampled bimodules, and order preservation over pairs of spectral sets.
pub fn verify_spectral_theorem<R: Rng + ?Sized>(
    ext: &ExtensionModel,
    samples: usize,
    cap: usize,
    rng: &mut R,
) -> Result<SpectralTheoremReport, BimodError> {
    require_full(ext)?;
    let sets = ext.s().enumerate_spectral_sets(cap)?;
    let mut report = SpectralTheoremReport {
        spectral_sets: sets.len(),
        bimodule_samples: samples,
        ..Default::default()
    };
    let images: Vec<Bimodule> = sets.iter().map(|a| psi_unchecked(ext, a)).collect();
    for (a, b) in sets.iter().zip(&images) {
        let back = theta(ext, b)?;
        if &back != a {
            report
                .theta_psi_failures
                .push(format!("Theta(Psi({})) = {}", show(a), show(&back)));
        }
    }
    // all pairs when small, otherwise a deterministic stride through them
    let total = sets.len() * sets.len();
    let stride = (total / 4096).max(1);
    for idx in (0..total).step_by(stride) {
        let (x, y) = (idx / sets.len(), idx % sets.len());
        let subset = sets[x].iter().all(|s| sets[y].contains(s));
        let included = images[x].is_subset_of(&images[y]);
        report.order_checks += 1;
        if subset != included {
            report
                .order_failures
                .push(format!("{} vs {}: subset {subset}, Psi inclusion {included}", show(&sets[x]), show(&sets[y])));
        }
    }
    for k in 0..samples {
        let b = random_bimodule(ext, rng);
        let a = theta(ext, &b)?;
        if !ext.s().is_spectral_set(&a) {
            report.theta_not_spectral.push(format!("sample {k}: Theta(B) = {}", show(&a)));
        }
        let back = psi_unchecked(ext, &a);
        if !back.same_as(&b) {
            report.psi_theta_failures.push(format!(
                "sample {k}: dim B = {}, dim Psi(Theta(B)) = {}",
                b.dim(),
                back.dim()
            ));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct GaloisPair {
    pub algebra: StarAlgebra,
    pub submonoid: InverseMonoid,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GaloisReport {
    pub submonoids: usize,
    pub intermediate_algebras: usize,
    pub algebra_dims: Vec<usize>,
    pub submonoid_sizes: Vec<usize>,
    pub failures: Vec<String>,
}

impl GaloisReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.submonoids == self.intermediate_algebras
    }
}

/// Intermediate algebras `N <= L <= M` reachable by adjoining section images
/// to `N` one at a time, deduplicated.
pub fn intermediate_algebras(ext: &ExtensionModel) -> Result<Vec<StarAlgebra>, BimodError> {
    let triple = ext.triple();
    let n = triple.dim();
    let base_gens: Vec<Matrix> = triple.n_algebra().basis();
    let mut found: Vec<(Vec<Matrix>, StarAlgebra)> =
        vec![(Vec::new(), generated_star_algebra(&base_gens, n)?)];
    let mut next = 0;
    while next < found.len() {
        let (extra, current) = found[next].clone();
        next += 1;
        for js in ext.sections() {
            if current.contains(js) {
                continue;
            }
            let mut more = extra.clone();
            more.push(js.clone());
            let gens: Vec<Matrix> = base_gens.iter().chain(&more).cloned().collect();
            let candidate = generated_star_algebra(&gens, n)?;
            if !found.iter().any(|(_, l)| l.dim() == candidate.dim() && l.same_as(&candidate)) {
                found.push((more, candidate));
            }
        }
    }
    let mut algebras: Vec<StarAlgebra> = found.into_iter().map(|(_, l)| l).collect();
    algebras.sort_by_key(|l| l.dim());
    Ok(algebras)
}

/// Pair every Cartan submonoid `T` with `Psi(T)` and cross-check against the
/// independently enumerated intermediate algebras through `Theta`.
pub fn galois_correspondence(ext: &ExtensionModel, cap: usize) -> Result<(Vec<GaloisPair>, GaloisReport), BimodError> {
    require_full(ext)?;
    let triple = ext.triple();
    let submonoids = ext.s().enumerate_cartan_submonoids(cap)?;
    let algebras = intermediate_algebras(ext)?;
    let mut report = GaloisReport {
        submonoids: submonoids.len(),
        intermediate_algebras: algebras.len(),
        ..Default::default()
    };
    let mut pairs = Vec::new();
    for t in &submonoids {
        let image = psi_unchecked(ext, t.elements());
        let algebra = StarAlgebra::from_closed_space(image.space().clone());
        if !algebra.is_closed() {
            report
                .failures
                .push(format!("Psi of submonoid of size {} is not a *-algebra", t.len()));
        }
        if !triple.n_algebra().is_subalgebra_of(&algebra) {
            report
                .failures
                .push(format!("Psi of submonoid of size {} does not contain N", t.len()));
        }
        let matched = algebras.iter().filter(|l| l.same_as(&algebra)).count();
        if matched != 1 {
            report.failures.push(format!(
                "Psi of submonoid of size {} matches {matched} enumerated algebras",
                t.len()
            ));
        }
        report.algebra_dims.push(algebra.dim());
        report.submonoid_sizes.push(t.len());
        pairs.push(GaloisPair {
            algebra,
            submonoid: t.clone(),
        });
    }
    for l in &algebras {
        let b = Bimodule { space: l.space().clone() };
        let t = theta(ext, &b)?;
        let hits = submonoids.iter().filter(|m| m.elements() == t.as_slice()).count();
        if hits != 1 {
            report
                .failures
                .push(format!("Theta of an intermediate algebra of dim {} is {}", l.dim(), show(&t)));
        }
    }
    Ok((pairs, report))
}

/// A normalizer `v = j(a)` with `v E(v^* x) != 0`, together with that element
/// written as a combination of at most four normalizers of the bimodule
/// generated by `x`.
#[derive(Debug, Clone)]
pub struct PlentyWitness {
    pub chart: Chart,
    pub compressed: Matrix,
    pub terms: Vec<(C64, Matrix)>,
}

pub fn plenty_witness(ext: &ExtensionModel, x: &Matrix) -> Result<Option<PlentyWitness>, BimodError> {
    require_full(ext)?;
    let triple = ext.triple();
    for a in ext.s().atoms() {
        let v = ext.section(&a)?;
        let coefficient = triple.expectation(&(v.adjoint() * x))?;
        let compressed = v * &coefficient;
        if is_negligible(&compressed) {
            continue;
        }
        let terms = unitary_span_decomposition(&coefficient, triple.n_algebra())?
            .into_iter()
            .map(|(z, u)| (z, v * u))
            .collect();
        return Ok(Some(PlentyWitness {
            chart: a,
            compressed,
            terms,
        }));
    }
    Ok(None)
}

/// Does `span(GN(M, D) & b) = b`? Checked through the section images in `b`.
pub fn normalizers_span(ext: &ExtensionModel, b: &Bimodule) -> Result<bool, BimodError> {
    let a = theta(ext, b)?;
    Ok(psi_unchecked(ext, &a).same_as(b))
}
