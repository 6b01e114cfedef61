//! Instance specifications: a JSON document naming the ambient algebra, the
//! atoms of the diagonal and optionally a finite group action.

use std::fs;
use std::path::Path;

use cartankit_core::crossed::{build_crossed_product, CrossedProduct, Group, GroupAction};
use cartankit_core::isemigroup;
use cartankit_core::linalg::{Matrix, StarAlgebra, C64};
use cartankit_core::triple::{CartanTripleModel, ExtensionModel, TripleError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_TOL: f64 = 1e-9;

const BUNDLED: &[(&str, &str)] = &[
    ("m4_two_atoms", include_str!("../instances/m4_two_atoms.json")),
    ("m2_diag", include_str!("../instances/m2_diag.json")),
    ("m3_diag", include_str!("../instances/m3_diag.json")),
    ("m2m3_center", include_str!("../instances/m2m3_center.json")),
    ("m6_three_cycle", include_str!("../instances/m6_three_cycle.json")),
    ("m3_rank_mismatch", include_str!("../instances/m3_rank_mismatch.json")),
    ("z2_swap_crossed", include_str!("../instances/z2_swap_crossed.json")),
    ("m2_inner_action", include_str!("../instances/m2_inner_action.json")),
    ("c2_swap_crossed", include_str!("../instances/c2_swap_crossed.json")),
];

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("{source_name}: cannot read: {message}")]
    Io { source_name: String, message: String },
    #[error("{source_name}:{line}:{column}: field `{field}`: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("{source_name}: field `{field}`: {message}")]
    Invalid {
        source_name: String,
        field: String,
        message: String,
    },
}

/// `[re, im]` entries, row major.
pub type ComplexRows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub table: Vec<Vec<usize>>,
    pub identity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    NotRegular,
    NotFull,
    Invalid,
}

impl Rejection {
    pub fn of(err: &TripleError) -> Rejection {
        match err {
            TripleError::NotRegular { .. } => Rejection::NotRegular,
            TripleError::NotFull { .. } => Rejection::NotFull,
            _ => Rejection::Invalid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftExpectation {
    Lifted,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default = "yes")]
    pub valid: bool,
    #[serde(default)]
    pub rejection: Option<Rejection>,
    #[serde(default)]
    pub cartan: Option<bool>,
    #[serde(default)]
    pub lift: Option<LiftExpectation>,
    #[serde(default)]
    pub s_size: Option<usize>,
    #[serde(default)]
    pub spectral_sets: Option<usize>,
    #[serde(default)]
    pub intermediate_algebras: Option<usize>,
}

fn yes() -> bool {
    true
}

impl Default for Expectations {
    fn default() -> Self {
        Expectations {
            valid: true,
            rejection: None,
            cartan: None,
            lift: None,
            s_size: None,
            spectral_sets: None,
            intermediate_algebras: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    #[serde(default)]
    pub enumeration: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub name: String,
    pub blocks: Vec<usize>,
    pub atoms: Vec<Vec<usize>>,
    #[serde(default)]
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub action: Option<Vec<ComplexRows>>,
    #[serde(default)]
    pub expect: Expectations,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub caps: Option<Caps>,
}

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Resolve `arg` as a file path (with or without `.json`), falling back to a
/// bundled instance named by the file stem.
pub fn load(arg: &str) -> Result<InstanceSpec, SpecError> {
    let path = Path::new(arg);
    let with_ext = path.with_extension("json");
    for candidate in [path, with_ext.as_path()] {
        if candidate.is_file() {
            let text = fs::read_to_string(candidate).map_err(|e| SpecError::Io {
                source_name: candidate.display().to_string(),
                message: e.to_string(),
            })?;
            return parse(&text, &candidate.display().to_string());
        }
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg);
    match bundled(stem) {
        Some(text) => parse(text, stem),
        None => Err(SpecError::Io {
            source_name: arg.to_string(),
            message: format!("no such file and no bundled instance (known: {})", bundled_names().join(", ")),
        }),
    }
}

pub fn parse(text: &str, source_name: &str) -> Result<InstanceSpec, SpecError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: InstanceSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        SpecError::Parse {
            source_name: source_name.to_string(),
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })?;
    spec.validate(source_name)?;
    Ok(spec)
}

impl InstanceSpec {
    pub fn dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    /// Enumeration cap: `CARTANKIT_CAP` wins over the spec, which wins over
    /// the library default.
    pub fn cap(&self) -> usize {
        if std::env::var("CARTANKIT_CAP").is_ok() {
            return isemigroup::cap_from_env();
        }
        self.caps
            .as_ref()
            .and_then(|c| c.enumeration)
            .unwrap_or(isemigroup::DEFAULT_CAP)
    }

    pub fn is_crossed(&self) -> bool {
        self.group.is_some()
    }

    fn validate(&self, source_name: &str) -> Result<(), SpecError> {
        let invalid = |field: &str, message: String| SpecError::Invalid {
            source_name: source_name.to_string(),
            field: field.to_string(),
            message,
        };
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty".into()));
        }
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(invalid("blocks", "need at least one block, all sizes positive".into()));
        }
        let n = self.dim();
        let mut block_of = Vec::with_capacity(n);
        for (b, &size) in self.blocks.iter().enumerate() {
            block_of.extend(std::iter::repeat_n(b, size));
        }
        let mut seen = vec![false; n];
        for (a, atom) in self.atoms.iter().enumerate() {
            let field = format!("atoms[{a}]");
            if atom.is_empty() {
                return Err(invalid(&field, "atom is empty".into()));
            }
            for &x in atom {
                if x >= n {
                    return Err(invalid(&field, format!("coordinate {x} out of range 0..{n}")));
                }
                if seen[x] {
                    return Err(invalid(&field, format!("coordinate {x} listed twice")));
                }
                seen[x] = true;
                if block_of[x] != block_of[atom[0]] {
                    return Err(invalid(&field, format!("coordinates {} and {x} lie in different blocks", atom[0])));
                }
            }
        }
        if let Some(x) = seen.iter().position(|s| !s) {
            return Err(invalid("atoms", format!("coordinate {x} is not covered")));
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(invalid("tol", "must be positive and finite".into()));
            }
        }
        match (&self.group, &self.action) {
            (None, None) => Ok(()),
            (Some(_), None) => Err(invalid("action", "a group needs one action unitary per element".into())),
            (None, Some(_)) => Err(invalid("group", "an action needs a group".into())),
            (Some(g), Some(action)) => {
                let order = g.table.len();
                if g.table.iter().any(|row| row.len() != order || row.iter().any(|&x| x >= order)) {
                    return Err(invalid("group.table", format!("must be a {order}x{order} table with entries below {order}")));
                }
                if g.identity >= order {
                    return Err(invalid("group.identity", format!("out of range 0..{order}")));
                }
                if action.len() != order {
                    return Err(invalid("action", format!("expected {order} matrices, found {}", action.len())));
                }
                for (k, rows) in action.iter().enumerate() {
                    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                        return Err(invalid(&format!("action[{k}]"), format!("must be {n}x{n}")));
                    }
                }
                // the diagonal of a crossed product is the centre of N
                let mut blocks = Vec::new();
                let mut start = 0;
                for &size in &self.blocks {
                    blocks.push((start..start + size).collect::<Vec<_>>());
                    start += size;
                }
                let mut atoms: Vec<Vec<usize>> = self.atoms.iter().map(|a| {
                    let mut a = a.clone();
                    a.sort_unstable();
                    a
                }).collect();
                atoms.sort();
                if atoms != blocks {
                    return Err(invalid("atoms", "with a group action the atoms must be the blocks of N".into()));
                }
                Ok(())
            }
        }
    }

    pub fn action_matrices(&self) -> Vec<Matrix> {
        let n = self.dim();
        self.action
            .iter()
            .flatten()
            .map(|rows| Matrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
            .collect()
    }
}

/// Everything derived from a spec before any suite runs.
pub struct Prepared {
    pub spec: InstanceSpec,
    pub seed: u64,
    pub tol: f64,
    pub cap: usize,
    pub crossed: Option<CrossedProduct>,
    pub triple: Result<CartanTripleModel, TripleError>,
    pub ext: Option<ExtensionModel>,
}

#[derive(Debug, Error)]
#[error("{0}")]
pub struct PrepareError(pub String);

impl Prepared {
    /// Sets the global tolerance before building anything.
    pub fn new(spec: InstanceSpec, seed: Option<u64>, tol: Option<f64>) -> Result<Prepared, PrepareError> {
        let seed = seed.unwrap_or(spec.seed());
        let tol = tol.unwrap_or(spec.tol());
        cartankit_core::linalg::set_tolerance(tol);
        let cap = spec.cap();
        let (crossed, triple) = match &spec.group {
            Some(g) => {
                let group = Group::new(g.table.clone(), g.identity).map_err(|e| PrepareError(format!("group: {e}")))?;
                let nalg = StarAlgebra::block_diagonal(&spec.blocks);
                let action = GroupAction::from_unitaries(group, nalg, &spec.action_matrices())
                    .map_err(|e| PrepareError(format!("action: {e}")))?;
                let cp = build_crossed_product(&action).map_err(|e| PrepareError(format!("crossed product: {e}")))?;
                let triple = match cp.triple() {
                    Ok(t) => Ok(t),
                    Err(cartankit_core::crossed::CrossedError::Triple(e)) => Err(e),
                    Err(e) => return Err(PrepareError(format!("crossed product: {e}"))),
                };
                (Some(cp), triple)
            }
            None => (None, CartanTripleModel::from_blocks(&spec.blocks, &spec.atoms)),
        };
        let ext = match &triple {
            Ok(t) => Some(ExtensionModel::build(t).map_err(|e| PrepareError(format!("extension: {e}")))?),
            Err(_) => None,
        };
        Ok(Prepared {
            spec,
            seed,
            tol,
            cap,
            crossed,
            triple,
            ext,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_instances_parse() {
        for name in bundled_names() {
            let spec = load(name).unwrap();
            assert_eq!(spec.name, name);
        }
    }

    #[test]
    fn diagnostics_name_the_field() {
        let err = parse("{\"name\": \"x\", \"blocks\": [2], \"atoms\": [[0], [\"a\"]]}", "t").unwrap_err();
        match err {
            SpecError::Parse { field, line, .. } => {
                assert_eq!(field, "atoms[1][0]");
                assert_eq!(line, 1);
            }
            other => panic!("{other}"),
        }
        let err = parse("{\"name\": \"x\", \"blocks\": [2, 1], \"atoms\": [[0, 2], [1]]}", "t").unwrap_err();
        assert!(matches!(err, SpecError::Invalid { ref field, .. } if field == "atoms[0]"), "{err}");
        let err = parse("{\"name\": \"x\", \"blocks\": [2], \"atoms\": [[0]]}", "t").unwrap_err();
        assert!(err.to_string().contains("not covered"));
        let err = parse("{\"name\": \"x\", \"blocks\": [2], \"atoms\": [[0], [1]], \"colour\": 1}", "t").unwrap_err();
        assert!(matches!(err, SpecError::Parse { .. }));
    }

    #[test]
    fn crossed_atoms_must_be_blocks() {
        let text = bundled("z2_swap_crossed").unwrap().replace("[[0, 1], [2, 3]]", "[[0], [1], [2, 3]]");
        let err = parse(&text, "t").unwrap_err();
        assert!(matches!(err, SpecError::Invalid { ref field, .. } if field == "atoms"), "{err}");
    }

    #[test]
    fn missing_file_is_reported() {
        assert!(matches!(load("/nonexistent/nowhere"), Err(SpecError::Io { .. })));
    }

    #[test]
    fn prepared_outcomes() {
        let p = Prepared::new(load("m3_rank_mismatch").unwrap(), None, None).unwrap();
        assert!(matches!(p.triple, Err(TripleError::NotRegular { .. })));
        let p = Prepared::new(load("m2_inner_action").unwrap(), None, None).unwrap();
        assert!(matches!(p.triple, Err(TripleError::NotFull { .. })));
        let p = Prepared::new(load("z2_swap_crossed").unwrap(), None, None).unwrap();
        assert_eq!(p.ext.unwrap().s().len(), 7);
    }
}
