//! `supnorm` command-line driver.
//!
//! Exit codes: `0` success, `1` an asserted invariant failed, `2` invalid
//! input or configuration.

pub mod commands;
pub mod config;
pub mod parse;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use supnorm_core::hyperbolic::PlanePoint;
use thiserror::Error;

use crate::config::ConfigError;
use crate::report::{RunReport, Table};

pub const DEFAULT_SEED: u64 = 0x5eed;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
}

impl CliError {
    pub fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

fn point(s: &str) -> Result<PlanePoint, String> {
    parse::parse_point(s).map_err(|e| e.to_string())
}

fn finite(s: &str) -> Result<f64, String> {
    parse::parse_real_list(s).map_err(|e| e.to_string()).and_then(|v| match v[..] {
        [x] => Ok(x),
        _ => Err(format!("expected one number, got {s:?}")),
    })
}

#[derive(Debug, Parser)]
#[command(name = "supnorm", version, about = "Hecke trees, amplifiers and lattice counts for sup-norm bounds")]
pub struct Cli {
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write the command's table as CSV to this file; the JSON report then
    /// goes to stdout (or --out).
    #[arg(long, global = true)]
    pub emit_csv: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads for the parallel parts.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Config file; overrides the SUPNORM_CONFIG variable.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Include wall time in the report.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Count order elements of norm N with u(γz, z) < t.
    Count {
        #[arg(long)]
        norm: u64,
        #[arg(long)]
        t: f64,
        #[arg(long, value_parser = point, allow_hyphen_values = true)]
        z: PlanePoint,
        /// Include the elements in the report.
        #[arg(long)]
        list: bool,
    },
    /// M(p^k, t; z) for k = 0..=kmax, with the growth fit.
    ScanCount {
        #[arg(long)]
        prime: u64,
        #[arg(long)]
        kmax: u32,
        #[arg(long)]
        t: f64,
        #[arg(long, value_parser = point, allow_hyphen_values = true)]
        z: PlanePoint,
    },
    /// M(p^k, p^{-4k}; z) for k = 0..=kmax.
    DeltaScan {
        #[arg(long)]
        prime: u64,
        #[arg(long)]
        kmax: u32,
        #[arg(long, value_parser = point, allow_hyphen_values = true)]
        z: PlanePoint,
        /// Rows with a larger count are flagged.
        #[arg(long, default_value_t = 4)]
        threshold: u64,
    },
    /// Check U(a)U(b) = Σ p^i U(a+b−2i) on a truncated tree.
    TreeCheck {
        #[arg(long)]
        prime: u64,
        #[arg(long)]
        ordm: u32,
        #[arg(long)]
        ordn: u32,
        #[arg(long)]
        radius: u32,
    },
    /// Amplifier value and its expansion for tempered angles, one per prime.
    Amplifier {
        #[arg(long, value_delimiter = ',')]
        primes: Option<Vec<u64>>,
        #[arg(long = "L")]
        length: u32,
        #[arg(long, value_delimiter = ',', value_parser = finite, required = true, allow_hyphen_values = true)]
        theta: Vec<f64>,
    },
    /// min over θ of Σ_{n≤L} λ(pⁿ)² / L on a uniform grid.
    Sweep {
        #[arg(long, default_value_t = 2)]
        prime: u64,
        #[arg(long = "L")]
        length: u32,
        #[arg(long)]
        grid_step: Option<f64>,
    },
    /// Left and right sides of the divisor-weighted amplifier sum.
    TechnicalSum {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long = "L")]
        length: u32,
        #[arg(long, value_delimiter = ',')]
        primes: Option<Vec<u64>>,
        /// Tempered angles, one per prime.
        #[arg(long, value_delimiter = ',', value_parser = finite, required = true, allow_hyphen_values = true)]
        theta: Vec<f64>,
    },
    /// Compare (Σ α_m λ(p^m))² / Σ α_m² at α = λ with random perturbations.
    Efficiency {
        #[arg(long = "L")]
        length: u32,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 1000)]
        trials: u32,
        #[arg(long)]
        prime: Option<u64>,
    },
    /// Build the spectral window and check its properties.
    Window {
        #[arg(long, default_value_t = 1024)]
        nodes: usize,
    },
    /// Parameter choices and term comparison for a given log λ.
    Plan {
        #[arg(long)]
        loglambda: f64,
        #[arg(long, value_delimiter = ',')]
        primes: Option<Vec<u64>>,
        #[arg(long = "C")]
        c_const: Option<f64>,
    },
    /// Kernel envelope at distance d.
    Envelope {
        #[arg(long)]
        d: f64,
        #[arg(long)]
        loglambda: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long = "C")]
        c_const: Option<f64>,
    },
    /// Check that the configured basis spans an order.
    VerifyOrder,
    /// Reduced versions of every check.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Count { .. } => "count",
            Command::ScanCount { .. } => "scan-count",
            Command::DeltaScan { .. } => "delta-scan",
            Command::TreeCheck { .. } => "tree-check",
            Command::Amplifier { .. } => "amplifier",
            Command::Sweep { .. } => "sweep",
            Command::TechnicalSum { .. } => "technical-sum",
            Command::Efficiency { .. } => "efficiency",
            Command::Window { .. } => "window",
            Command::Plan { .. } => "plan",
            Command::Envelope { .. } => "envelope",
            Command::VerifyOrder => "verify-order",
            Command::Selftest => "selftest",
        }
    }
}

/// What a command produced.
pub struct Output {
    pub report: RunReport,
    pub table: Option<Table>,
    /// Print the table rather than the report when no `--emit-csv` is given.
    pub table_primary: bool,
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Write { path: path.to_path_buf(), message: e.to_string() })
}

fn emit(cli: &Cli, out: &Output, stdout: &mut dyn std::io::Write) -> Result<(), CliError> {
    let primary = match (&out.table, &cli.emit_csv) {
        (Some(table), Some(path)) => {
            write_file(path, &table.to_csv())?;
            out.report.to_json()
        }
        (None, Some(_)) => return Err(CliError::Input(format!("{} has no table for --emit-csv", out.report.command))),
        (Some(table), None) if out.table_primary => table.to_csv(),
        _ => out.report.to_json(),
    };
    match &cli.out {
        Some(path) => write_file(path, &primary),
        None => stdout
            .write_all(primary.as_bytes())
            .map_err(|e| CliError::Write { path: PathBuf::from("<stdout>"), message: e.to_string() }),
    }
}

/// Runs one invocation, writing to the given streams; returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let start = Instant::now();
    let result = match cli.threads {
        Some(0) => Err(CliError::Input("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| commands::execute(&cli)),
            Err(e) => Err(CliError::input(e)),
        },
        None => commands::execute(&cli),
    };
    let mut out = match result {
        Ok(out) => out,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_INVALID;
        }
    };
    if cli.timing {
        out.report.wall_time_seconds = Some(start.elapsed().as_secs_f64());
    }
    if let Err(e) = emit(&cli, &out, stdout) {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_INVALID;
    }
    match out.report.first_failure() {
        None => EXIT_OK,
        Some(v) => {
            let _ = writeln!(stderr, "invariant violated: {}: {}", v.name, v.detail);
            EXIT_VIOLATION
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
