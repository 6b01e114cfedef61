//! Finite inverse monoids of charts (partial bijections on the atoms of an
//! abelian algebra), abstract multiplication tables, and the Munn quotient.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

pub const DEFAULT_CAP: usize = 24;

/// Enumeration cap, overridable through `CARTANKIT_CAP`.
pub fn cap_from_env() -> usize {
    std::env::var("CARTANKIT_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_CAP)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SemigroupError {
    #[error("atom counts differ: {left} vs {right}")]
    AtomCountMismatch { left: usize, right: usize },
    #[error("chart is not injective: atom {image} is hit twice")]
    NotInjective { image: usize },
    #[error("atom index {index} out of range for {atom_count} atoms")]
    OutOfRange { index: usize, atom_count: usize },
    #[error("charts {left} and {right} are not compatible")]
    Incompatible { left: String, right: String },
    #[error("not an inverse semigroup: {0}")]
    NotInverse(String),
    #[error("enumeration over {size} elements exceeds the cap of {cap}")]
    CapExceeded { size: usize, cap: usize },
}

/// A partial injective map on `{0, .., k-1}`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chart {
    images: Vec<Option<usize>>,
}

impl Chart {
    pub fn empty(atom_count: usize) -> Self {
        Chart {
            images: vec![None; atom_count],
        }
    }

    pub fn identity(atom_count: usize) -> Self {
        Chart {
            images: (0..atom_count).map(Some).collect(),
        }
    }

    pub fn sub_identity(atom_count: usize, domain: &[usize]) -> Self {
        let mut c = Chart::empty(atom_count);
        for &i in domain {
            c.images[i] = Some(i);
        }
        c
    }

    /// Single-point chart `i -> j`.
    pub fn point(atom_count: usize, i: usize, j: usize) -> Self {
        let mut c = Chart::empty(atom_count);
        c.images[i] = Some(j);
        c
    }

    pub fn from_pairs(atom_count: usize, pairs: &[(usize, usize)]) -> Result<Self, SemigroupError> {
        let mut c = Chart::empty(atom_count);
        let mut hit = vec![false; atom_count];
        for &(i, j) in pairs {
            for index in [i, j] {
                if index >= atom_count {
                    return Err(SemigroupError::OutOfRange { index, atom_count });
                }
            }
            if hit[j] || c.images[i].is_some_and(|old| old != j) {
                return Err(SemigroupError::NotInjective { image: j });
            }
            hit[j] = true;
            c.images[i] = Some(j);
        }
        Ok(c)
    }

    pub fn from_images(images: Vec<Option<usize>>) -> Result<Self, SemigroupError> {
        let k = images.len();
        let pairs: Vec<(usize, usize)> = images
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j)))
            .collect();
        Chart::from_pairs(k, &pairs)
    }

    pub fn atom_count(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[Option<usize>] {
        &self.images
    }

    pub fn apply(&self, i: usize) -> Option<usize> {
        self.images.get(i).copied().flatten()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.images
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j)))
    }

    pub fn domain(&self) -> Vec<usize> {
        self.pairs().map(|(i, _)| i).collect()
    }

    pub fn image(&self) -> Vec<usize> {
        let mut im: Vec<usize> = self.pairs().map(|(_, j)| j).collect();
        im.sort_unstable();
        im
    }

    pub fn size(&self) -> usize {
        self.images.iter().filter(|j| j.is_some()).count()
    }

    pub fn is_zero(&self) -> bool {
        self.size() == 0
    }

    pub fn is_idempotent(&self) -> bool {
        self.pairs().all(|(i, j)| i == j)
    }

    fn check_same(&self, other: &Chart) -> Result<(), SemigroupError> {
        if self.atom_count() != other.atom_count() {
            return Err(SemigroupError::AtomCountMismatch {
                left: self.atom_count(),
                right: other.atom_count(),
            });
        }
        Ok(())
    }

    /// `self . other`: apply `other` first.
    pub fn compose(&self, other: &Chart) -> Result<Chart, SemigroupError> {
        self.check_same(other)?;
        Ok(self.compose_unchecked(other))
    }

    fn compose_unchecked(&self, other: &Chart) -> Chart {
        Chart {
            images: other
                .images
                .iter()
                .map(|j| j.and_then(|j| self.images[j]))
                .collect(),
        }
    }

    pub fn inverse(&self) -> Chart {
        let mut inv = Chart::empty(self.atom_count());
        for (i, j) in self.pairs() {
            inv.images[j] = Some(i);
        }
        inv
    }

    /// Source idempotent `s^dag s`.
    pub fn source(&self) -> Chart {
        Chart::sub_identity(self.atom_count(), &self.domain())
    }

    /// Range idempotent `s s^dag`.
    pub fn range(&self) -> Chart {
        Chart::sub_identity(self.atom_count(), &self.image())
    }

    /// `self` is the restriction of `other` to its domain.
    pub fn natural_leq(&self, other: &Chart) -> bool {
        self.atom_count() == other.atom_count() && self.pairs().all(|(i, j)| other.images[i] == Some(j))
    }

    /// Largest common restriction.
    pub fn meet(&self, other: &Chart) -> Result<Chart, SemigroupError> {
        self.check_same(other)?;
        Ok(Chart {
            images: self
                .images
                .iter()
                .zip(&other.images)
                .map(|(a, b)| if a == b { *a } else { None })
                .collect(),
        })
    }

    /// `s^dag t` and `s t^dag` are both idempotent.
    pub fn compatible(&self, other: &Chart) -> bool {
        self.atom_count() == other.atom_count()
            && self.inverse().compose_unchecked(other).is_idempotent()
            && self.compose_unchecked(&other.inverse()).is_idempotent()
    }

    /// `s^dag t = 0` and `s t^dag = 0`: disjoint domains and disjoint images.
    pub fn orthogonal(&self, other: &Chart) -> bool {
        self.atom_count() == other.atom_count()
            && self.inverse().compose_unchecked(other).is_zero()
            && self.compose_unchecked(&other.inverse()).is_zero()
    }

    /// Join of a pairwise-compatible family (union of graphs). The empty
    /// family has the zero chart as its join.
    pub fn join(atom_count: usize, family: &[Chart]) -> Result<Chart, SemigroupError> {
        for c in family {
            if c.atom_count() != atom_count {
                return Err(SemigroupError::AtomCountMismatch {
                    left: atom_count,
                    right: c.atom_count(),
                });
            }
        }
        for (a, s) in family.iter().enumerate() {
            for t in &family[a + 1..] {
                if !s.compatible(t) {
                    return Err(SemigroupError::Incompatible {
                        left: s.to_string(),
                        right: t.to_string(),
                    });
                }
            }
        }
        let mut out = Chart::empty(atom_count);
        for c in family {
            for (i, j) in c.pairs() {
                out.images[i] = Some(j);
            }
        }
        Ok(out)
    }

    fn domain_mask_cmp(&self, other: &Chart) -> Ordering {
        // compare domains as binary numbers (atom i carries weight 2^i)
        for i in (0..self.atom_count()).rev() {
            match (self.images[i].is_some(), other.images[i].is_some()) {
                (true, false) => return Ordering::Greater,
                (false, true) => return Ordering::Less,
                _ => {}
            }
        }
        Ordering::Equal
    }
}

impl Ord for Chart {
    fn cmp(&self, other: &Self) -> Ordering {
        self.atom_count()
            .cmp(&other.atom_count())
            .then(self.size().cmp(&other.size()))
            .then_with(|| self.domain_mask_cmp(other))
            .then_with(|| {
                let a: Vec<usize> = self.pairs().map(|(_, j)| j).collect();
                let b: Vec<usize> = other.pairs().map(|(_, j)| j).collect();
                a.cmp(&b)
            })
    }
}

impl PartialOrd for Chart {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        write!(f, "(")?;
        for (k, (i, j)) in self.pairs().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{i}->{j}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Chart{self}")
    }
}

/// Fixed-size bitset over monoid element indices.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
struct BitSet(Vec<u64>);

impl BitSet {
    fn new(len: usize) -> Self {
        BitSet(vec![0; len.div_ceil(64).max(1)])
    }
    fn insert(&mut self, i: usize) -> bool {
        let (w, b) = (i / 64, i % 64);
        let fresh = self.0[w] & (1 << b) == 0;
        self.0[w] |= 1 << b;
        fresh
    }
    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            (0..64).filter(move |b| word & (1 << b) != 0).map(move |b| w * 64 + b)
        })
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// A finite inverse monoid of charts on `atom_count` atoms, containing every
/// sub-identity, kept in sorted order.
#[derive(Clone, Debug)]
pub struct InverseMonoid {
    atom_count: usize,
    elements: Vec<Chart>,
    index: HashMap<Chart, usize>,
}

impl InverseMonoid {
    fn from_sorted(atom_count: usize, mut elements: Vec<Chart>) -> Self {
        elements.sort();
        elements.dedup();
        let index = elements.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        InverseMonoid {
            atom_count,
            elements,
            index,
        }
    }

    /// Close `generators` together with all sub-identities under composition
    /// and inversion.
    pub fn generated_by(atom_count: usize, generators: &[Chart]) -> Result<Self, SemigroupError> {
        let mut seen: HashSet<Chart> = HashSet::new();
        let mut queue: VecDeque<Chart> = VecDeque::new();
        let mut gens: Vec<Chart> = Vec::new();
        for g in generators {
            if g.atom_count() != atom_count {
                return Err(SemigroupError::AtomCountMismatch {
                    left: atom_count,
                    right: g.atom_count(),
                });
            }
            gens.push(g.clone());
            gens.push(g.inverse());
        }
        for mask in 0..(1usize << atom_count) {
            let dom: Vec<usize> = (0..atom_count).filter(|i| mask & (1 << i) != 0).collect();
            gens.push(Chart::sub_identity(atom_count, &dom));
        }
        for g in &gens {
            if seen.insert(g.clone()) {
                queue.push_back(g.clone());
            }
        }
        while let Some(x) = queue.pop_front() {
            for g in &gens {
                for y in [x.compose_unchecked(g), g.compose_unchecked(&x)] {
                    if seen.insert(y.clone()) {
                        queue.push_back(y);
                    }
                }
            }
        }
        Ok(InverseMonoid::from_sorted(atom_count, seen.into_iter().collect()))
    }

    /// The symmetric inverse monoid on `k` points.
    pub fn symmetric(k: usize) -> Self {
        InverseMonoid::from_classes(&vec![0; k])
    }

    /// The Boolean algebra of sub-identities.
    pub fn semilattice(k: usize) -> Self {
        let classes: Vec<usize> = (0..k).collect();
        InverseMonoid::from_classes(&classes)
    }

    /// All charts mapping each atom into its own class.
    pub fn from_classes(classes: &[usize]) -> Self {
        let k = classes.len();
        let mut out = Vec::new();
        let mut current = Chart::empty(k);
        let mut used = vec![false; k];
        fn rec(
            i: usize,
            classes: &[usize],
            current: &mut Chart,
            used: &mut [bool],
            out: &mut Vec<Chart>,
        ) {
            let k = classes.len();
            if i == k {
                out.push(current.clone());
                return;
            }
            rec(i + 1, classes, current, used, out);
            for j in 0..k {
                if !used[j] && classes[j] == classes[i] {
                    used[j] = true;
                    current.images[i] = Some(j);
                    rec(i + 1, classes, current, used, out);
                    current.images[i] = None;
                    used[j] = false;
                }
            }
        }
        rec(0, classes, &mut current, &mut used, &mut out);
        InverseMonoid::from_sorted(k, out)
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Chart] {
        &self.elements
    }

    pub fn index_of(&self, c: &Chart) -> Option<usize> {
        self.index.get(c).copied()
    }

    pub fn contains(&self, c: &Chart) -> bool {
        self.index.contains_key(c)
    }

    pub fn idempotents(&self) -> Vec<Chart> {
        self.elements.iter().filter(|c| c.is_idempotent()).cloned().collect()
    }

    pub fn identity(&self) -> Chart {
        Chart::identity(self.atom_count)
    }

    pub fn zero(&self) -> Chart {
        Chart::empty(self.atom_count)
    }

    /// Check closure under composition and inversion.
    pub fn is_closed(&self) -> bool {
        self.elements.iter().all(|a| {
            self.contains(&a.inverse()) && self.elements.iter().all(|b| self.contains(&a.compose_unchecked(b)))
        })
    }

    pub fn mult_table(&self) -> MultTable {
        let table = self
            .elements
            .iter()
            .map(|a| {
                self.elements
                    .iter()
                    .map(|b| self.index[&a.compose_unchecked(b)])
                    .collect()
            })
            .collect();
        let inverse = self.elements.iter().map(|a| self.index[&a.inverse()]).collect();
        MultTable { table, inverse }
    }

    pub fn is_fundamental(&self) -> bool {
        self.mult_table().is_fundamental()
    }

    pub fn is_clifford(&self) -> bool {
        self.mult_table().is_clifford()
    }

    pub fn is_boolean_inverse_monoid(&self) -> bool {
        self.mult_table().is_boolean_inverse_monoid()
    }

    /// Minimal nonzero elements under the natural partial order.
    pub fn atoms(&self) -> Vec<Chart> {
        let nonzero: Vec<&Chart> = self.elements.iter().filter(|c| !c.is_zero()).collect();
        nonzero
            .iter()
            .filter(|s| !nonzero.iter().any(|t| t != *s && t.natural_leq(s)))
            .map(|s| (*s).clone())
            .collect()
    }

    fn check_cap(&self, cap: usize) -> Result<(), SemigroupError> {
        if self.len() > cap {
            return Err(SemigroupError::CapExceeded { size: self.len(), cap });
        }
        Ok(())
    }

    fn charts_of(&self, set: &BitSet) -> Vec<Chart> {
        set.iter().map(|i| self.elements[i].clone()).collect()
    }

    /// Smallest spectral set containing the given elements.
    fn spectral_closure(&self, set: &mut BitSet, below: &[Vec<usize>], orth_join: &[Vec<Option<usize>>]) {
        loop {
            let mut changed = false;
            let members: Vec<usize> = set.iter().collect();
            for &s in &members {
                for &r in &below[s] {
                    changed |= set.insert(r);
                }
            }
            let members: Vec<usize> = set.iter().collect();
            for (a, &s) in members.iter().enumerate() {
                for &t in &members[a + 1..] {
                    if let Some(j) = orth_join[s][t] {
                        changed |= set.insert(j);
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// All subsets closed downward and under joins of pairwise orthogonal
    /// families, in sorted order (by size, then by member indices).
    pub fn enumerate_spectral_sets(&self, cap: usize) -> Result<Vec<Vec<Chart>>, SemigroupError> {
        self.check_cap(cap)?;
        let n = self.len();
        let below: Vec<Vec<usize>> = (0..n)
            .map(|s| (0..n).filter(|&r| self.elements[r].natural_leq(&self.elements[s])).collect())
            .collect();
        let orth_join: Vec<Vec<Option<usize>>> = (0..n)
            .map(|s| {
                (0..n)
                    .map(|t| {
                        let (a, b) = (&self.elements[s], &self.elements[t]);
                        if a.orthogonal(b) {
                            Chart::join(self.atom_count, &[a.clone(), b.clone()])
                                .ok()
                                .and_then(|j| self.index_of(&j))
                        } else {
                            None
                        }
                    })
                    .collect()
            })
            .collect();
        let mut start = BitSet::new(n);
        start.insert(self.index[&self.zero()]);
        self.spectral_closure(&mut start, &below, &orth_join);
        let found = self.bfs_closed_sets(start, |set| self.spectral_closure(set, &below, &orth_join));
        Ok(found.iter().map(|s| self.charts_of(s)).collect())
    }

    /// Is `set` (a list of elements of this monoid) a spectral set?
    pub fn is_spectral_set(&self, set: &[Chart]) -> bool {
        let members: HashSet<&Chart> = set.iter().collect();
        if !members.iter().all(|c| self.contains(c)) || !members.contains(&self.zero()) {
            return false;
        }
        let downward = set
            .iter()
            .all(|s| self.elements.iter().filter(|r| r.natural_leq(s)).all(|r| members.contains(r)));
        let joins = set.iter().all(|s| {
            set.iter().all(|t| {
                !s.orthogonal(t)
                    || Chart::join(self.atom_count, &[s.clone(), t.clone()])
                        .map(|j| !self.contains(&j) || members.contains(&j))
                        .unwrap_or(true)
            })
        });
        downward && joins
    }

    fn submonoid_closure(&self, set: &mut BitSet, table: &MultTable, compat_join: &[Vec<Option<usize>>]) {
        loop {
            let mut changed = false;
            let members: Vec<usize> = set.iter().collect();
            for &s in &members {
                changed |= set.insert(table.inverse[s]);
                for &t in &members {
                    changed |= set.insert(table.table[s][t]);
                    if let Some(j) = compat_join[s][t] {
                        changed |= set.insert(j);
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// All submonoids containing every idempotent and closed under products,
    /// inverses and joins of compatible pairs.
    pub fn enumerate_cartan_submonoids(&self, cap: usize) -> Result<Vec<InverseMonoid>, SemigroupError> {
        self.check_cap(cap)?;
        let n = self.len();
        let table = self.mult_table();
        let compat_join: Vec<Vec<Option<usize>>> = (0..n)
            .map(|s| {
                (0..n)
                    .map(|t| {
                        let (a, b) = (&self.elements[s], &self.elements[t]);
                        if a.compatible(b) {
                            Chart::join(self.atom_count, &[a.clone(), b.clone()])
                                .ok()
                                .and_then(|j| self.index_of(&j))
                        } else {
                            None
                        }
                    })
                    .collect()
            })
            .collect();
        let mut start = BitSet::new(n);
        for (i, c) in self.elements.iter().enumerate() {
            if c.is_idempotent() {
                start.insert(i);
            }
        }
        self.submonoid_closure(&mut start, &table, &compat_join);
        let found = self.bfs_closed_sets(start, |set| self.submonoid_closure(set, &table, &compat_join));
        Ok(found
            .iter()
            .map(|s| InverseMonoid::from_sorted(self.atom_count, self.charts_of(s)))
            .collect())
    }

    fn bfs_closed_sets(&self, start: BitSet, close: impl Fn(&mut BitSet)) -> Vec<BitSet> {
        let n = self.len();
        let mut seen: HashSet<BitSet> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start.clone());
        queue.push_back(start);
        while let Some(set) = queue.pop_front() {
            for s in 0..n {
                if set.contains(s) {
                    continue;
                }
                let mut next = set.clone();
                next.insert(s);
                close(&mut next);
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        let mut out: Vec<BitSet> = seen.into_iter().collect();
        out.sort_by(|a, b| {
            a.count()
                .cmp(&b.count())
                .then_with(|| a.iter().collect::<Vec<_>>().cmp(&b.iter().collect::<Vec<_>>()))
        });
        out
    }
}

/// Multiplication table of a finite semigroup with a designated inverse map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultTable {
    pub table: Vec<Vec<usize>>,
    pub inverse: Vec<usize>,
}

impl MultTable {
    pub fn new(table: Vec<Vec<usize>>, inverse: Vec<usize>) -> Result<Self, SemigroupError> {
        let n = table.len();
        if inverse.len() != n || table.iter().any(|row| row.len() != n || row.iter().any(|&x| x >= n)) || inverse.iter().any(|&x| x >= n) {
            return Err(SemigroupError::NotInverse("table is not square over its index set".into()));
        }
        Ok(MultTable { table, inverse })
    }

    /// Build a table and find each element's generalized inverse.
    pub fn with_computed_inverse(table: Vec<Vec<usize>>) -> Result<Self, SemigroupError> {
        let n = table.len();
        let mut inverse = Vec::with_capacity(n);
        for s in 0..n {
            let candidates: Vec<usize> = (0..n)
                .filter(|&x| {
                    table[table[s][x]][s] == s && table[table[x][s]][x] == x
                })
                .collect();
            match candidates.as_slice() {
                [x] => inverse.push(*x),
                [] => return Err(SemigroupError::NotInverse(format!("element {s} has no inverse"))),
                _ => return Err(SemigroupError::NotInverse(format!("element {s} has several inverses"))),
            }
        }
        MultTable::new(table, inverse)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    /// Associativity and unique generalized inverses.
    pub fn validate(&self) -> Result<(), SemigroupError> {
        let n = self.len();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)) {
                        return Err(SemigroupError::NotInverse(format!("({a}{b}){c} != {a}({b}{c})")));
                    }
                }
            }
        }
        for s in 0..n {
            let inv = self.inverse[s];
            if self.mul(self.mul(s, inv), s) != s || self.mul(self.mul(inv, s), inv) != inv {
                return Err(SemigroupError::NotInverse(format!("{inv} is not an inverse of {s}")));
            }
            for x in 0..n {
                if x != inv && self.mul(self.mul(s, x), s) == s && self.mul(self.mul(x, s), x) == x {
                    return Err(SemigroupError::NotInverse(format!("element {s} has inverses {inv} and {x}")));
                }
            }
        }
        Ok(())
    }

    pub fn idempotents(&self) -> Vec<usize> {
        (0..self.len()).filter(|&e| self.mul(e, e) == e).collect()
    }

    /// `s <= t` iff `s = t (s^dag s)`.
    pub fn natural_leq(&self, s: usize, t: usize) -> bool {
        s == self.mul(t, self.mul(self.inverse[s], s))
    }

    /// Only idempotents commute with every idempotent.
    pub fn is_fundamental(&self) -> bool {
        let e = self.idempotents();
        (0..self.len()).all(|s| {
            e.contains(&s) || !e.iter().all(|&f| self.mul(s, f) == self.mul(f, s))
        })
    }

    pub fn is_clifford(&self) -> bool {
        let e = self.idempotents();
        (0..self.len()).all(|s| e.iter().all(|&f| self.mul(s, f) == self.mul(f, s)))
    }

    fn least_upper_bound(&self, candidates: &[usize], a: usize, b: usize) -> Option<usize> {
        let uppers: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&u| self.natural_leq(a, u) && self.natural_leq(b, u))
            .collect();
        uppers
            .iter()
            .copied()
            .find(|&u| uppers.iter().all(|&v| self.natural_leq(u, v)))
    }

    /// Idempotents form a Boolean algebra and compatible pairs have joins.
    pub fn is_boolean_inverse_monoid(&self) -> bool {
        let e = self.idempotents();
        if e.is_empty() {
            return false;
        }
        let leq = |a: usize, b: usize| self.mul(a, b) == a;
        let Some(&zero) = e.iter().find(|&&z| e.iter().all(|&f| leq(z, f))) else {
            return false;
        };
        let Some(&one) = e.iter().find(|&&u| e.iter().all(|&f| leq(f, u))) else {
            return false;
        };
        let mut join = HashMap::new();
        for &a in &e {
            for &b in &e {
                match self.least_upper_bound(&e, a, b) {
                    Some(j) => {
                        join.insert((a, b), j);
                    }
                    None => return false,
                }
            }
        }
        // distributivity and complements
        for &a in &e {
            for &b in &e {
                for &c in &e {
                    let lhs = self.mul(a, join[&(b, c)]);
                    let rhs = join[&(self.mul(a, b), self.mul(a, c))];
                    if lhs != rhs {
                        return false;
                    }
                }
            }
            if !e.iter().any(|&b| self.mul(a, b) == zero && join[&(a, b)] == one) {
                return false;
            }
        }
        let all: Vec<usize> = (0..self.len()).collect();
        for s in 0..self.len() {
            for t in 0..self.len() {
                let st = self.mul(self.inverse[s], t);
                let ts = self.mul(s, self.inverse[t]);
                let compatible = e.contains(&st) && e.contains(&ts);
                if compatible && self.least_upper_bound(&all, s, t).is_none() {
                    return false;
                }
            }
        }
        true
    }

    /// Quotient by the Munn congruence together with the quotient map.
    pub fn munn_quotient(&self) -> Result<(MultTable, Vec<usize>), SemigroupError> {
        self.validate()?;
        let e = self.idempotents();
        let n = self.len();
        let signature = |v: usize| -> Vec<usize> {
            e.iter()
                .map(|&f| self.mul(self.mul(v, f), self.inverse[v]))
                .collect()
        };
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut class_of = vec![0; n];
        let mut by_sig: HashMap<Vec<usize>, usize> = HashMap::new();
        for v in 0..n {
            let sig = signature(v);
            let id = *by_sig.entry(sig).or_insert_with(|| {
                classes.push(Vec::new());
                classes.len() - 1
            });
            classes[id].push(v);
            class_of[v] = id;
        }
        let table: Vec<Vec<usize>> = classes
            .iter()
            .map(|a| classes.iter().map(|b| class_of[self.mul(a[0], b[0])]).collect())
            .collect();
        let inverse = classes.iter().map(|a| class_of[self.inverse[a[0]]]).collect();
        Ok((MultTable { table, inverse }, class_of))
    }

    /// Are the two tables equal up to relabelling? Brute force over
    /// bijections, intended for small tables.
    pub fn isomorphic(&self, other: &MultTable) -> bool {
        let n = self.len();
        if n != other.len() || n > 9 {
            return n == other.len() && n == 0;
        }
        let mut perm: Vec<usize> = (0..n).collect();
        fn next_perm(p: &mut [usize]) -> bool {
            let n = p.len();
            if n < 2 {
                return false;
            }
            let mut i = n - 1;
            while i > 0 && p[i - 1] >= p[i] {
                i -= 1;
            }
            if i == 0 {
                return false;
            }
            let mut j = n - 1;
            while p[j] <= p[i - 1] {
                j -= 1;
            }
            p.swap(i - 1, j);
            p[i..].reverse();
            true
        }
        loop {
            let ok = (0..n).all(|a| (0..n).all(|b| perm[self.mul(a, b)] == other.mul(perm[a], perm[b])));
            if ok {
                return true;
            }
            if !next_perm(&mut perm) {
                return false;
            }
        }
    }
}
