//! Command-line front end for the `expfam` library: single divergence
//! reports, identity-verification suites, α sweeps and deformation sweeps.
//!
//! Exit codes: `0` success, `1` usage or input error, `2` failed check or
//! numerical failure.

use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod deform;
pub mod div;
pub mod json;
pub mod input;
pub mod output;
pub mod suites;
pub mod sweep;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        Self { code: EXIT_FAIL, message: message.into() }
    }
}

impl From<expfam::Error> for CliError {
    fn from(e: expfam::Error) -> Self {
        use expfam::Error::*;
        let code = match e {
            NoConvergence { .. } | Integration { .. } | Inconsistent(_) | NotConvex(_) | GeneratorOrder { .. } => {
                EXIT_FAIL
            }
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::failure(format!("I/O error: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "expfam", version, about = "Divergences of normalized and unnormalized exponential-family densities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form divergence between two members of a family, optionally
    /// checked against numerical integration.
    Div(DivArgs),
    /// Run a verification suite and print a JSON summary.
    Verify(VerifyArgs),
    /// Tabulate Jensen and oracle divergences over a range of α into a CSV file.
    Sweep(SweepArgs),
    /// Convexity verdicts of deformed generators over a power range or for
    /// explicit mean generators.
    Deform(DeformArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    /// Family name, inline JSON descriptor, or path of a JSON descriptor.
    #[arg(long)]
    pub family: String,
    /// Dimension for `centered-normal-nd`.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Read parameters in the conventional parameterization (rate, mean,
    /// probability, variance, (mean, variance), covariance).
    #[arg(long)]
    pub source_param: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivKind {
    Kl,
    Alpha,
    Hellinger,
    Bhattacharyya,
    Renyi,
    BregmanF,
    BregmanZ,
    MixedAlpha,
    MixedBhattacharyya,
    Duo,
}

#[derive(Debug, Clone, Args)]
pub struct DivArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// First parameter; defaults to the `theta` of the family descriptor.
    #[arg(long, allow_hyphen_values = true)]
    pub theta1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta2: String,
    #[arg(long, value_enum)]
    pub kind: DivKind,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Use the unnormalized densities.
    #[arg(long)]
    pub unnormalized: bool,
    /// Also integrate the divergence numerically and compare.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Integration scheme as inline JSON or a JSON file.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Convexity,
    Identities,
    Legendre,
    Deformation,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Restrict to one family (name or JSON descriptor).
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub theta1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta2: String,
    #[arg(long, default_value_t = 0.1)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 0.9)]
    pub alpha_max: f64,
    /// Number of α values, both ends included.
    #[arg(long, default_value_t = 9)]
    pub steps: usize,
    /// Add the α = 0 and α = 1 rows, computed on the Bregman branches.
    #[arg(long)]
    pub endpoints: bool,
    #[arg(long)]
    pub output: std::path::PathBuf,
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
pub enum GeneratorChoice {
    #[value(name = "F", alias = "f", alias = "cumulant")]
    #[serde(rename = "F")]
    Cumulant,
    #[value(name = "Z", alias = "z", alias = "partition")]
    #[serde(rename = "Z")]
    Partition,
}

#[derive(Debug, Clone, Args)]
pub struct DeformArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_enum, default_value = "Z")]
    pub generator: GeneratorChoice,
    /// Mean generator applied to the parameter, as JSON.
    #[arg(long, conflicts_with_all = ["p_min", "p_max", "p_step"])]
    pub rho: Option<String>,
    /// Mean generator applied to the value, as JSON.
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long, allow_hyphen_values = true, default_value_t = -2.0)]
    pub p_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 3.0)]
    pub p_max: f64,
    #[arg(long, default_value_t = 0.25)]
    pub p_step: f64,
    /// Parameters at which convexity is sampled, separated by `;`;
    /// defaults to the family's sample grid.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta2: Option<String>,
    /// Output file; `.csv` selects CSV, anything else JSON. Defaults to
    /// JSON on stdout.
    #[arg(long)]
    pub output: Option<std::path::PathBuf>,
}

/// Parse `args` (including the program name) and run the command, writing
/// reports to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Div(a) => div::run(a, out),
        Command::Verify(a) => suites::run(a, out),
        Command::Sweep(a) => sweep::run(a, out),
        Command::Deform(a) => deform::run(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
