//! Batch front end for cartankit: instance specs, verification suites,
//! enumerations and exports.

pub mod instance;
pub mod report;
pub mod suites;

use std::fmt::Write as _;

use cartankit_core::bimod;
use cartankit_core::isemigroup::Chart;
use clap::ValueEnum;
use thiserror::Error;

use instance::{InstanceSpec, PrepareError, Prepared, SpecError};
use report::Report;
use suites::Suite;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Prepare(#[from] PrepareError),
    #[error("not a Cartan triple: {0}")]
    NotCartan(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    /// 2 for unusable input, 1 for everything the instance itself caused.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) | CliError::Prepare(_) | CliError::Output { .. } => 2,
            CliError::NotCartan(_) | CliError::Refused(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Listing {
    SpectralSets,
    Submonoids,
    IntermediateAlgebras,
    Atoms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    LatticeDot,
    ReportJson,
    ReportCsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Lattice {
    SpectralSets,
    Submonoids,
}

pub fn verify(spec: InstanceSpec, suite: Suite, seed: Option<u64>, tol: Option<f64>) -> Result<Report, CliError> {
    let p = Prepared::new(spec, seed, tol)?;
    let suites = suites::run(&p, suite);
    Ok(Report::new(&p.spec.name, p.seed, p.tol, p.cap, suites))
}

pub fn render(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => report.to_csv(),
    }
}

fn show_set(set: &[Chart]) -> String {
    let items: Vec<String> = set.iter().map(|c| c.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

fn full_extension(p: &Prepared) -> Result<&cartankit_core::triple::ExtensionModel, CliError> {
    match (&p.triple, &p.ext) {
        (Ok(_), Some(ext)) => Ok(ext),
        (Err(err), _) => Err(CliError::NotCartan(err.to_string())),
        (Ok(_), None) => Err(CliError::NotCartan("no extension".into())),
    }
}

/// Sorted listing with a leading count line.
pub fn enumerate(spec: InstanceSpec, what: Listing) -> Result<String, CliError> {
    let p = Prepared::new(spec, None, None)?;
    let ext = full_extension(&p)?;
    let s = ext.s();
    let lines: Vec<String> = match what {
        Listing::SpectralSets => s
            .enumerate_spectral_sets(p.cap)
            .map_err(|e| CliError::Refused(e.to_string()))?
            .iter()
            .map(|set| show_set(set))
            .collect(),
        Listing::Submonoids => s
            .enumerate_cartan_submonoids(p.cap)
            .map_err(|e| CliError::Refused(e.to_string()))?
            .iter()
            .map(|m| format!("size {}: {}", m.len(), show_set(m.elements())))
            .collect(),
        Listing::IntermediateAlgebras => {
            let (pairs, _) = bimod::galois_correspondence(ext, p.cap).map_err(|e| CliError::Refused(e.to_string()))?;
            let mut rows: Vec<(usize, usize, String)> = pairs
                .iter()
                .map(|g| (g.algebra.dim(), g.submonoid.len(), show_set(g.submonoid.elements())))
                .collect();
            rows.sort();
            rows.into_iter()
                .map(|(dim, size, set)| format!("dim {dim}: submonoid of size {size} {set}"))
                .collect()
        }
        Listing::Atoms => s
            .atoms()
            .iter()
            .map(|a| {
                let rank = cartankit_core::linalg::projection_rank(&(ext.section(a).unwrap().adjoint() * ext.section(a).unwrap()));
                format!("{a} rank {rank}")
            })
            .collect(),
    };
    let kind = what.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let mut out = format!("# {} {}\ncount {}\n", p.spec.name, kind, lines.len());
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Hasse diagram: one node per element, an edge for each covering inclusion.
pub fn lattice_dot(name: &str, nodes: &[(String, Vec<usize>)]) -> String {
    let contains = |a: &[usize], b: &[usize]| a.len() < b.len() && a.iter().all(|x| b.contains(x));
    let mut out = String::new();
    writeln!(out, "digraph \"{name}\" {{").unwrap();
    writeln!(out, "  rankdir=BT;").unwrap();
    for (k, (label, _)) in nodes.iter().enumerate() {
        writeln!(out, "  n{k} [label=\"{}\"];", label.replace('"', "\\\"")).unwrap();
    }
    for (a, (_, sa)) in nodes.iter().enumerate() {
        for (b, (_, sb)) in nodes.iter().enumerate() {
            if contains(sa, sb) && !nodes.iter().any(|(_, sc)| contains(sa, sc) && contains(sc, sb)) {
                writeln!(out, "  n{a} -> n{b};").unwrap();
            }
        }
    }
    out.push_str("}\n");
    out
}

pub fn export(
    spec: InstanceSpec,
    format: ExportFormat,
    lattice: Lattice,
    seed: Option<u64>,
    tol: Option<f64>,
) -> Result<(String, Option<Report>), CliError> {
    match format {
        ExportFormat::ReportJson | ExportFormat::ReportCsv => {
            let report = verify(spec, Suite::All, seed, tol)?;
            let text = render(
                &report,
                if format == ExportFormat::ReportJson { ReportFormat::Json } else { ReportFormat::Csv },
            );
            Ok((text, Some(report)))
        }
        ExportFormat::LatticeDot => {
            let p = Prepared::new(spec, seed, tol)?;
            let ext = full_extension(&p)?;
            let s = ext.s();
            let refuse = |e: cartankit_core::isemigroup::SemigroupError| CliError::Refused(e.to_string());
            let nodes: Vec<(String, Vec<usize>)> = match lattice {
                Lattice::SpectralSets => s
                    .enumerate_spectral_sets(p.cap)
                    .map_err(refuse)?
                    .iter()
                    .map(|set| (show_set(set), set.iter().map(|c| s.index_of(c).unwrap()).collect()))
                    .collect(),
                Lattice::Submonoids => s
                    .enumerate_cartan_submonoids(p.cap)
                    .map_err(refuse)?
                    .iter()
                    .map(|m| (show_set(m.elements()), m.elements().iter().map(|c| s.index_of(c).unwrap()).collect()))
                    .collect(),
            };
            Ok((lattice_dot(&p.spec.name, &nodes), None))
        }
    }
}
