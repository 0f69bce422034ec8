//! `wso`: batch driver for the spectral classification of weighted shift
//! operators.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 disagreement between
//! classifiers or between a classifier and the numerical oracle, 3 numerical
//! non-convergence.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::config::Session;
pub use crate::error::CliError;
use crate::output::Format;

pub const EXIT_DISAGREEMENT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "wso", version, about = "Spectra of weighted shift operators")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `sampling.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct LambdaArgs {
    #[arg(long, allow_negative_numbers = true, conflicts_with = "modulus")]
    pub lambda_re: Option<f64>,
    #[arg(long, allow_negative_numbers = true, conflicts_with = "modulus")]
    pub lambda_im: Option<f64>,
    /// Shorthand for a positive real λ.
    #[arg(long)]
    pub modulus: Option<f64>,
}

impl LambdaArgs {
    pub fn lambda(&self) -> Result<Complex64, CliError> {
        let z = match (self.modulus, self.lambda_re, self.lambda_im) {
            (Some(m), _, _) => Complex64::new(m, 0.0),
            (None, None, None) => {
                return Err(CliError::Usage(
                    "give --lambda-re/--lambda-im or --modulus".into(),
                ))
            }
            (None, re, im) => Complex64::new(re.unwrap_or(0.0), im.unwrap_or(0.0)),
        };
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(CliError::Usage(format!("λ = {z} is not finite")));
        }
        Ok(z)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Annulus, circles and the spectral-radius estimate.
    Spectrum,
    /// One-sided invertibility of B − λ.
    Classify(LambdaArgs),
    /// Classification along the modulus grid of the `scan` section.
    Scan,
    /// Check the classification against the ℓ²(ℤ) oracle on every orbit block.
    Verify {
        #[command(flatten)]
        lambda: LambdaArgs,
        /// Comma-separated finite-section truncations.
        #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
        truncations: Vec<usize>,
    },
    /// The fixed-point graph as DOT or JSON.
    Graph {
        /// Rebuild the edge set by sampling and compare with the analytic one.
        #[arg(long)]
        discover: bool,
        /// Colour the decomposition at this modulus.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Two-sided orbit of a point with coefficient values.
    Orbit {
        /// Comma-separated coordinates, e.g. "0.3,0.7".
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        point: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
}

impl Command {
    fn default_format(&self) -> Format {
        match self {
            Command::Spectrum | Command::Classify(_) | Command::Verify { .. } => Format::Json,
            Command::Scan | Command::Orbit { .. } => Format::Csv,
            Command::Graph { .. } => Format::Dot,
        }
    }
}

/// Runs the command and returns the rendered report plus whether it recorded a
/// disagreement.
pub fn execute(cli: &Cli) -> Result<commands::Outcome, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config is required".into()))?;
    let text = std::fs::read_to_string(path)?;
    let session = Session::new(&text, cli.seed)?;
    let format = cli.format.unwrap_or_else(|| cli.command.default_format());
    match &cli.command {
        Command::Spectrum => commands::spectrum(&session, format),
        Command::Classify(l) => commands::classify(&session, l.lambda()?, format),
        Command::Scan => commands::scan(&session, format),
        Command::Verify {
            lambda,
            truncations,
        } => commands::verify(&session, lambda.lambda()?, truncations, format),
        Command::Graph { discover, lambda } => {
            commands::graph(&session, *discover, *lambda, format)
        }
        Command::Orbit { point, steps } => commands::orbit(&session, point, *steps, format),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = execute(&cli).and_then(|outcome| {
        emit(&cli, &outcome.text)?;
        Ok(outcome.disagreement)
    });
    match result {
        Ok(false) => 0,
        Ok(true) => {
            eprintln!("error: disagreement detected, see the report");
            EXIT_DISAGREEMENT
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
