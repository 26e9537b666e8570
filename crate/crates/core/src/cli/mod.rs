//! Command-line front end. Exit codes: 0 success, 1 usage error,
//! 2 failed numerical verification.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{
    check_chi, check_kn, output_path, parse_radial_counts, parse_reduction, parse_scan_range, resolve_theory, RunFile,
    OUT_DIR_ENV,
};

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const NAME: &str = env!("CARGO_PKG_NAME");

#[derive(Parser, Debug)]
#[command(
    name = "moment-obc",
    disable_version_flag = true,
    about = "Moment systems with Maxwell and Onsager walls"
)]
pub struct Cli {
    /// JSON file with default values; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for independent theory or accommodation runs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Print the version.
    #[arg(long)]
    pub version: bool,
    /// Machine-readable output for --version.
    #[arg(long)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TheoryArgs {
    /// Grad theory name (G10, G20, ...) or `custom`.
    #[arg(long)]
    pub theory: Option<String>,
    /// Highest tensor rank of a custom theory.
    #[arg(long)]
    pub nd: Option<usize>,
    /// Radial counts per rank of a custom theory, e.g. 2,2,1,1.
    #[arg(long)]
    pub m: Option<String>,
    /// planar or full3d.
    #[arg(long)]
    pub reduction: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Assemble a moment system and dump its matrices.
    #[command(allow_negative_numbers = true)]
    Assemble {
        #[command(flatten)]
        theory: TheoryArgs,
        /// Wall-normal axis that fixes the odd/even ordering.
        #[arg(long, default_value = "y")]
        axis: String,
        /// summary, s-matrix, a-x, a-y, a-z, bgk or all.
        #[arg(long, default_value = "summary")]
        dump: String,
        /// csv or json (matrices only).
        #[arg(long, default_value = "csv")]
        format: String,
        /// Output file; relative paths go under $MOMENT_OBC_OUT_DIR when set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify Maxwell and Onsager walls.
    #[command(allow_negative_numbers = true)]
    CheckStability {
        #[command(flatten)]
        theory: TheoryArgs,
        /// Accommodation coefficient in (0, 1].
        #[arg(long)]
        chi: Option<f64>,
        /// Report the verdict of one boundary kind (mbc or obc).
        #[arg(long)]
        bc: Option<String>,
        /// Wall-normal axis, x or y.
        #[arg(long, default_value = "y")]
        axis: String,
        /// Sweep a:b:n over the accommodation coefficient.
        #[arg(long)]
        scan_chi: Option<String>,
        /// Output file; relative paths go under $MOMENT_OBC_OUT_DIR when set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steady heat conduction between two walls.
    #[command(allow_negative_numbers = true)]
    SolveChannel {
        #[command(flatten)]
        theory: TheoryArgs,
        /// mbc or obc.
        #[arg(long)]
        bc: Option<String>,
        /// Knudsen number (> 0).
        #[arg(long)]
        kn: Option<f64>,
        /// Accommodation coefficient in (0, 1].
        #[arg(long)]
        chi: Option<f64>,
        /// Number of cells.
        #[arg(long)]
        grid: Option<usize>,
        /// Comma-separated theories whose mean is written instead.
        #[arg(long)]
        reference: Option<String>,
        /// Output file; relative paths go under $MOMENT_OBC_OUT_DIR when set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pointwise errors of a run against a reference, plus a gnuplot script.
    Compare {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value = "errors.csv")]
        out: PathBuf,
        #[arg(long, default_value = "compare.gp")]
        plot: PathBuf,
    },
    /// Time-march the channel and check the energy bound.
    #[command(allow_negative_numbers = true)]
    EnergyMarch {
        #[command(flatten)]
        theory: TheoryArgs,
        /// mbc or obc.
        #[arg(long)]
        bc: Option<String>,
        /// Knudsen number (> 0).
        #[arg(long)]
        kn: Option<f64>,
        /// Accommodation coefficient in (0, 1].
        #[arg(long)]
        chi: Option<f64>,
        /// Number of finite-volume cells.
        #[arg(long)]
        cells: Option<usize>,
        /// CFL number in (0, 0.5].
        #[arg(long)]
        cfl: Option<f64>,
        /// Length of the run in wall-to-wall crossing times.
        #[arg(long)]
        crossing_times: Option<f64>,
        /// Seed for the random initial data.
        #[arg(long)]
        seed: Option<u64>,
        /// March the heated channel to steady state and compare with the
        /// steady solver instead of checking free decay.
        #[arg(long)]
        steady: bool,
        /// Energy trace CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct VersionInfo {
    name: &'static str,
    version: &'static str,
}

/// Parses `args` (including the program name), runs and returns the exit code.
pub fn run_from_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_usage() {
                1
            } else {
                2
            }
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    if cli.version {
        if cli.json {
            writeln!(
                out,
                "{}",
                serde_json::to_string(&VersionInfo {
                    name: NAME,
                    version: VERSION
                })?
            )?;
        } else {
            writeln!(out, "{NAME} {VERSION}")?;
        }
        return Ok(());
    }
    let file = match &cli.config {
        Some(p) => RunFile::load(p)?,
        None => RunFile::default(),
    };
    let jobs = cli.jobs.or(file.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(Error::InvalidConfig("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {jobs} workers: {e}")))?;
    let Some(command) = cli.command else {
        return Err(Error::InvalidConfig("no subcommand given; see --help".into()));
    };
    // buffer so the worker pool never touches the caller's writer
    let mut buf = Vec::new();
    let res = pool.install(|| commands::dispatch(command, &file, jobs, &mut buf));
    out.write_all(&buf)?;
    res
}
