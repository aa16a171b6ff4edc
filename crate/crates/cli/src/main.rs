mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Mass-action realizations of polynomial ODE systems.
#[derive(Debug, Parser)]
#[command(name = "crn-realize", version)]
pub struct Cli {
    /// Arithmetic used by the solvers.
    #[arg(long, global = true, env = "CRN_MODE", value_enum, default_value_t = Mode::Rational)]
    pub mode: Mode,
    #[arg(long, global = true, value_enum, default_value_t = Output::Text)]
    pub output: Output,
    /// Lower bound for rates that must be present (default 1/1000000).
    #[arg(long, global = true)]
    pub epsilon: Option<String>,
    /// Upper bound for rates in indicator constraints (default 1000000).
    #[arg(long = "big-m", global = true)]
    pub big_m: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Rational,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PropertyArg {
    Any,
    Rev,
    Wr,
    Db,
    Cb,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long, value_enum, default_value_t = PropertyArg::Any)]
    pub property: PropertyArg,
    /// Positive state for `db` and `cb`, comma separated.
    #[arg(long)]
    pub xstar: Option<String>,
    /// `monomials`, or `file:<path>` with one extra complex per line.
    #[arg(long, default_value = "monomials")]
    pub complexes: String,
    /// Reaction that must be absent, as `A -> B`. Repeatable.
    #[arg(long)]
    pub forbid: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test whether the system is kinetic and list negative cross-effects.
    Check { ode: PathBuf },
    /// Build the canonical realization.
    Canonical { ode: PathBuf },
    /// Find a realization with a structural property.
    Realize {
        ode: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Realization with the most reactions on the complex set.
    Dense {
        ode: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        /// Worker threads for the per-edge programs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Realization with the fewest reactions on the complex set.
    Sparse {
        ode: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Structural report of a network (text format or JSON).
    Analyze { net: PathBuf },
    /// Compartmental realization of a system with only single-species complexes.
    Compartmental { ode: PathBuf },
    /// Classify as a closed, half-open or open generalized compartmental system.
    ClassifyGc { ode: PathBuf },
    /// Rewrite a network.
    Transform {
        #[command(subcommand)]
        op: TransformCommand,
    },
    /// Greedy term pairing towards a reversible realization (always exact).
    HeuristicReversible { ode: PathBuf },
    /// Check the deficiency zero characterization on random networks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum TransformCommand {
    /// Weighted sum of networks on the same complexes.
    Combine {
        #[arg(required = true)]
        nets: Vec<PathBuf>,
        /// Comma separated weights, uniform by default.
        #[arg(long)]
        weights: Option<String>,
    },
    /// Add a complex that is a convex combination of existing ones (always exact).
    AddComplex {
        net: PathBuf,
        #[arg(long)]
        complex: String,
        /// Convex weights over the network's complexes, comma separated.
        #[arg(long)]
        weights: String,
        #[arg(long, default_value = "1")]
        scale: String,
    },
    /// Remove a complex whose monomial does not appear in the ODE.
    Eliminate {
        net: PathBuf,
        #[arg(long)]
        complex: String,
    },
    /// Rescale a weakly reversible network to be complex balanced at x*.
    RescaleCb {
        net: PathBuf,
        #[arg(long)]
        xstar: String,
    },
    /// Search for a positive mass conservation vector.
    Masscons { net: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run::execute(&cli) {
        Ok(report) => {
            let text = match cli.output {
                Output::Text => report.text,
                Output::Json => {
                    serde_json::to_string_pretty(&report.json).expect("JSON output serializes")
                        + "\n"
                }
            };
            // a closed pipe is not an error of the computation
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::from(report.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
