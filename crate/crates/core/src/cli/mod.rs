//! Command-line front end: manifests, fixtures, suite runs and reports.

pub mod fixtures;
pub mod manifest;
pub mod report;
pub mod suite;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

pub use fixtures::{fixture, FIXTURE_IDS};
pub use manifest::{load_manifest, parse_manifest, Manifest, Overrides, Plan};
pub use report::{format_float, VerificationReport};
pub use suite::{run_suite, CHECKS};

use crate::error::{GeomError, Result};

#[derive(Debug, Parser)]
#[command(name = "statgeom", version, about = "Verify statistical manifold structures numerically")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the checks of a manifest file or built-in fixture.
    Verify {
        /// Path to a JSON manifest, or a fixture id.
        manifest: String,
        /// Sampling seed, overriding the manifest.
        #[arg(long)]
        seed: Option<u64>,
        /// Sample points for checks that do not set their own.
        #[arg(long)]
        points: Option<usize>,
        /// Tolerance for checks that do not set their own.
        #[arg(long)]
        tol: Option<f64>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// List built-in fixtures.
    ListFixtures,
    /// Print a fixture's manifest.
    Describe { fixture: String },
}

/// A manifest path, falling back to a fixture id when no such file exists.
pub fn resolve_manifest(arg: &str) -> Result<Manifest> {
    let path = Path::new(arg);
    if path.exists() {
        return load_manifest(path);
    }
    fixture(arg).ok_or_else(|| GeomError::Manifest(format!("`{arg}` is neither a file nor a fixture id")))
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::ListFixtures => {
            let mut out = std::io::stdout().lock();
            for id in FIXTURE_IDS {
                let m = fixture(id).expect("registered fixture");
                let _ = writeln!(out, "{id}\t{}", m.description);
            }
            0
        }
        Command::Describe { fixture: id } => match fixture(&id) {
            Some(m) => {
                print!("{}", m.to_json());
                0
            }
            None => {
                eprintln!("error: unknown fixture `{id}`");
                2
            }
        },
        Command::Verify {
            manifest,
            seed,
            points,
            tol,
            report,
        } => {
            let start = Instant::now();
            let plan = resolve_manifest(&manifest).and_then(|m| m.plan(Overrides { seed, points, tolerance: tol }));
            let plan = match plan {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            };
            let rep = run_suite(&plan);
            let text = rep.to_canonical_json();
            match &report {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return 2;
                    }
                    for line in rep.summary_lines() {
                        eprintln!("{line}");
                    }
                }
                None => print!("{text}"),
            }
            eprintln!("wall time: {:.3}s", start.elapsed().as_secs_f64());
            rep.exit_code()
        }
    }
}
