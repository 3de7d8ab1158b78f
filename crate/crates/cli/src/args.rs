use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Minimum expected HARQ retransmissions for a wirelessly powered receiver.
///
/// Settings are taken from command-line flags first, then from the config
/// file (the section named after the subcommand or experiment, then
/// `[defaults]`), then from built-in defaults.
#[derive(Debug, Parser)]
#[command(name = "swipt-harq", version)]
pub struct Cli {
    /// TOML config file with flat `key = value` sections.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the i.i.d. channel exactly and print the decision table as CSV.
    SolveIid {
        #[command(flatten)]
        params: ParamArgs,
        /// Write the table here instead of standard output.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Solve the correlated channel exactly and print the decision table as
    /// CSV. Missing --lambda0/--lambda1 default to --lambda.
    SolveCorr {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Estimate mean slots until decoding by Monte Carlo simulation.
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        /// Comma-separated policies: optimal, bf, if, ct, arq, bernoulli:<p>.
        #[arg(long, value_delimiter = ',')]
        policy: Vec<String>,
        #[command(flatten)]
        run: RunArgs,
        /// Write the report CSV here instead of standard output.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Re-run a published table or figure experiment and check the results.
    Reproduce {
        /// table1, table2, table3, fig3, fig4, fig5 or all.
        experiment: String,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sweep one parameter and tabulate every policy at each value.
    Sweep {
        /// Parameter to vary: Ed, e, R0, R1, lambda, lambda0 or lambda1.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values of the swept parameter.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Vec<f64>,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_delimiter = ',')]
        policy: Vec<String>,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// Energy units needed for a decoding attempt.
    #[arg(long = "Ed", value_name = "UNITS")]
    pub ed: Option<u32>,
    /// Energy units harvested in a GOOD slot.
    #[arg(long = "e", value_name = "UNITS")]
    pub e: Option<u32>,
    /// Bits per slot in the BAD state.
    #[arg(long = "R0", value_name = "BITS")]
    pub r0: Option<f64>,
    /// Bits per slot in the GOOD state (the encoding rate).
    #[arg(long = "R1", value_name = "BITS")]
    pub r1: Option<f64>,
    /// GOOD-slot probability of an i.i.d. channel.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Correlated channel: Pr[GOOD | previous BAD].
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Correlated channel: Pr[GOOD | previous GOOD].
    #[arg(long)]
    pub lambda1: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Monte Carlo episodes per estimate (0 skips simulation where possible).
    #[arg(long)]
    pub episodes: Option<u64>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Output directory [default: $SWIPT_HARQ_OUT or ./results].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// csv writes data only; svg also renders charts.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
}
