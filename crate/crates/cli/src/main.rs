use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "argwind", version, about = "Holomorphic extendibility of boundary data on circle domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Domain file (TOML).
    #[arg(long, global = true)]
    pub domain: Option<PathBuf>,

    /// Boundary function as an expression in z, e.g. "conj(z)^2 + 1/(z-2)".
    #[arg(long = "f", global = true, allow_hyphen_values = true, conflicts_with = "f_samples")]
    pub f: Option<String>,

    /// Boundary function as a CSV of (circle_index, theta, re, im) rows.
    #[arg(long, global = true)]
    pub f_samples: Option<PathBuf>,

    /// Degree of the harmonic basis per circle.
    #[arg(long, global = true, default_value_t = 24)]
    pub degree: usize,

    /// Samples per boundary circle (ignored with --f-samples).
    #[arg(long, global = true, default_value_t = 512)]
    pub samples: usize,

    /// Holomorphy-defect tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,

    /// Base-point grid, e.g. 7x7.
    #[arg(long, global = true, default_value = "7x7", value_parser = parse_grid)]
    pub grid: (usize, usize),

    /// Comma-separated smoothing cutoffs tried by `witness`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub cutoffs: Vec<usize>,

    /// Directory for structured output files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a domain file and print its circles.
    Validate,
    /// Decide whether f extends holomorphically into the domain.
    Detect,
    /// Build a certificate g with f + g winding negatively.
    Witness,
    /// Compute the change of argument of f + g.
    Verify {
        /// Holomorphic g as an expression.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "certificate")]
        g: Option<String>,
        /// Certificate file written by `witness`.
        #[arg(long, required_unless_present = "g")]
        certificate: Option<PathBuf>,
    },
    /// Compute the change of argument of f along the boundary.
    Winding,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).unwrap_or((s, s));
    let parse = |t: &str| match t.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a grid like 7x7, got {s:?}")),
    };
    Ok((parse(a)?, parse(b)?))
}

fn init_threads() -> Result<(), commands::Failure> {
    let Ok(value) = std::env::var("ARGWIND_THREADS") else {
        return Ok(());
    };
    let threads = value
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| commands::Failure::Input(format!("ARGWIND_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| commands::Failure::Input(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = init_threads().and_then(|()| match &cli.command {
        Command::Validate => commands::validate(&cli.common),
        Command::Detect => commands::detect(&cli.common),
        Command::Witness => commands::witness(&cli.common),
        Command::Verify { g, certificate } => {
            commands::verify(&cli.common, g.as_deref(), certificate.as_deref())
        }
        Command::Winding => commands::winding(&cli.common),
    });
    match result {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.exit_code()
        }
    }
}
