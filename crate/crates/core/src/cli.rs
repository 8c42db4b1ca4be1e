//! Command-line front end: `khessian verify` and `khessian compute`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::energy::{mixed_energy, mixed_lower_energy, EnergyValue};
use crate::error::{Error, Result};
use crate::funcspace::{FunctionSpec, Space};
use crate::quadrature::QuadratureScheme;
use crate::verify::{parse_configs, run_suite, write_csv, SuiteConfig, SuiteReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "khessian", version, about = "Hessian energy calculus on the unit ball")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run verification suites from a JSON config (one suite or a list).
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed of every suite.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Evaluate one energy functional and print it as JSON.
    Compute {
        #[arg(long, value_enum)]
        functional: Functional,
        /// Function spec files, in slot order.
        #[arg(long = "spec", required = true, num_args = 1..)]
        specs: Vec<PathBuf>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value = "radial_gauss:64")]
        quadrature: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Functional {
    #[value(name = "Ik")]
    Ik,
    #[value(name = "Fk")]
    Fk,
    #[value(name = "Jk")]
    Jk,
    #[value(name = "Gk")]
    Gk,
    #[value(name = "mixed_lower")]
    MixedLower,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub seed_override: Option<u64>,
    pub config: Vec<SuiteConfig>,
    pub reports: Vec<SuiteReport>,
    pub passed: bool,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_CONFIG,
            };
            if code == EXIT_PASS {
                let _ = write!(stdout, "{e}");
            } else {
                let _ = write!(stderr, "{e}");
            }
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Verify {
            config,
            out,
            seed,
            jobs,
        } => cmd_verify(&config, &out, seed, jobs, stderr),
        Command::Compute {
            functional,
            specs,
            n,
            k,
            m,
            quadrature,
        } => cmd_compute(functional, &specs, n, k, m, &quadrature).and_then(|v| {
            let json = serde_json::to_string(&v).expect("energy values serialize");
            writeln!(stdout, "{json}").map_err(|e| Error::InvalidInput(e.to_string()))?;
            Ok(EXIT_PASS)
        }),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Config { .. }
                | Error::InvalidInput(_)
                | Error::DimensionMismatch { .. }
                | Error::OrderOutOfRange { .. }
                | Error::Precondition(_) => EXIT_CONFIG,
                _ => EXIT_FAILURE,
            }
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::config("path", format!("{}: {e}", path.display())))
}

fn cmd_verify(config: &Path, out: &Path, seed: Option<u64>, jobs: usize, stderr: &mut dyn Write) -> Result<i32> {
    let mut configs = parse_configs(&read(config)?)?;
    if let Some(s) = seed {
        for c in &mut configs {
            c.seed = s;
        }
    }
    fs::create_dir_all(out).map_err(|e| Error::config("out", format!("{}: {e}", out.display())))?;
    let mut reports = Vec::with_capacity(configs.len());
    for (i, cfg) in configs.iter().enumerate() {
        let run = run_suite(cfg, jobs)?;
        let csv = out.join(format!("{i:02}_{}.csv", cfg.suite.name()));
        write_csv(&csv, &run.cases)?;
        let r = &run.report;
        let _ = writeln!(
            stderr,
            "{:<17} n={} k={} cases={} violations={} aborted={} equality_failures={} min_margin={:e} ({:.2}s)",
            cfg.suite.name(),
            cfg.n,
            cfg.k,
            r.cases_run,
            r.violations,
            r.aborted,
            r.equality_failures,
            r.min_margin.unwrap_or(f64::NAN),
            r.elapsed_seconds
        );
        reports.push(run.report);
    }
    let passed = reports.iter().all(SuiteReport::passed);
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed_override: seed,
        config: configs,
        reports,
        passed,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let path = out.join("manifest.json");
    fs::write(&path, json).map_err(|e| Error::config("out", format!("{}: {e}", path.display())))?;
    Ok(if passed { EXIT_PASS } else { EXIT_VIOLATION })
}

fn cmd_compute(
    functional: Functional,
    paths: &[PathBuf],
    n: usize,
    k: usize,
    m: Option<usize>,
    quadrature: &str,
) -> Result<EnergyValue> {
    let scheme: QuadratureScheme = quadrature.parse()?;
    let specs = paths
        .iter()
        .map(|p| FunctionSpec::from_json(&read(p)?))
        .collect::<Result<Vec<_>>>()?;
    for (i, s) in specs.iter().enumerate() {
        if s.n != n {
            return Err(Error::config(
                "spec",
                format!("spec {i} has n = {}, expected {n}", s.n),
            ));
        }
    }
    let require_space = |space: Space| -> Result<()> {
        match specs.iter().position(|s| s.space != space) {
            Some(i) => Err(Error::config(
                "spec",
                format!("spec {i} is a {} function, expected {space}", specs[i].space),
            )),
            None => Ok(()),
        }
    };
    let require_count = |want: usize| -> Result<()> {
        if specs.len() != want {
            return Err(Error::config(
                "spec",
                format!("expected {want} spec file(s), got {}", specs.len()),
            ));
        }
        Ok(())
    };
    match functional {
        Functional::Ik | Functional::Jk => {
            let space = if functional == Functional::Ik {
                Space::Complex
            } else {
                Space::Real
            };
            require_space(space)?;
            require_count(1)?;
            mixed_energy(&vec![&specs[0]; k + 1], space, &scheme)
        }
        Functional::Fk | Functional::Gk => {
            let space = if functional == Functional::Fk {
                Space::Complex
            } else {
                Space::Real
            };
            require_space(space)?;
            require_count(k + 1)?;
            let refs: Vec<&FunctionSpec> = specs.iter().collect();
            mixed_energy(&refs, space, &scheme)
        }
        Functional::MixedLower => {
            let m = m.unwrap_or(specs.len() - 1);
            require_count(m + 1)?;
            require_space(specs[0].space)?;
            let vs: Vec<&FunctionSpec> = specs[1..].iter().collect();
            mixed_lower_energy(&specs[0], &vs, k, &scheme)
        }
    }
}
