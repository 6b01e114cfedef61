use std::fs;
use std::process::ExitCode;

use cartankit::report::Report;
use cartankit::suites::Suite;
use cartankit::{instance, CliError, ExportFormat, Lattice, Listing, ReportFormat};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cartankit", version, about = "Verify finite-dimensional Cartan triples and their extensions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and write a report.
    Verify {
        /// Spec file, or the name of a bundled instance.
        spec: String,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
    },
    /// List spectral sets, submonoids, intermediate algebras or atoms.
    Enumerate {
        spec: String,
        #[arg(long, value_enum)]
        what: Listing,
    },
    /// Export a lattice as DOT, or a full report.
    Export {
        spec: String,
        #[arg(long, value_enum)]
        format: ExportFormat,
        #[arg(long, value_enum, default_value = "spectral-sets")]
        lattice: Lattice,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Print the names of the bundled instances.
    Instances,
}

fn emit(text: &str, out: Option<&str>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Output {
            path: path.to_string(),
            message: e.to_string(),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn timings(report: &Report) {
    for suite in &report.suites {
        let failed = suite.checks.iter().filter(|c| c.status == cartankit::report::Status::Fail).count();
        eprintln!(
            "{} {}: {} ({} checks, {} failed) in {:.2?}",
            report.instance,
            suite.suite,
            if suite.passed { "pass" } else { "FAIL" },
            suite.checks.len(),
            failed,
            suite.elapsed
        );
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Verify { spec, suite, seed, tol, out, format } => {
            let report = cartankit::verify(instance::load(&spec)?, suite, seed, tol)?;
            timings(&report);
            emit(&cartankit::render(&report, format), out.as_deref())?;
            Ok(report.passed)
        }
        Command::Enumerate { spec, what } => {
            emit(&cartankit::enumerate(instance::load(&spec)?, what)?, None)?;
            Ok(true)
        }
        Command::Export { spec, format, lattice, seed, tol, out } => {
            let (text, report) = cartankit::export(instance::load(&spec)?, format, lattice, seed, tol)?;
            if let Some(r) = &report {
                timings(r);
            }
            emit(&text, out.as_deref())?;
            Ok(report.is_none_or(|r| r.passed))
        }
        Command::Instances => {
            for name in instance::bundled_names() {
                println!("{name}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
