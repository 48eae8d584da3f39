//! `hmatch`: run history-matching campaigns from a manifest.

mod analyze;
mod commands;
mod manifest;
mod output;
mod points;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hmatch_core::Error;

/// History matching with Bayes linear emulators.
#[derive(Debug, Parser)]
#[command(name = "hmatch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Campaign manifest (TOML).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Master seed; overrides the manifest.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; overrides the manifest.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory; overrides the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the simulator at given points.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Point file, one point per line.
        #[arg(long, conflicts_with_all = ["design", "midpoint"])]
        points: Option<PathBuf>,
        /// Evaluate a maximin Latin hypercube of this many points.
        #[arg(long, conflicts_with = "midpoint")]
        design: Option<usize>,
        /// Evaluate the centre of the input domain.
        #[arg(long)]
        midpoint: bool,
    },
    /// Write a maximin Latin hypercube over the input domain.
    Design {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: usize,
    },
    /// Run (or resume) the wave schedule.
    Match {
        #[command(flatten)]
        common: Common,
        /// Continue from the last completed wave in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Draw uniform points from the final region of a campaign.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Campaign directory.
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        count: usize,
        /// Also run the simulator at the sampled points.
        #[arg(long)]
        evaluate: bool,
    },
    /// Tabulate emulator diagnostics and safety checks of a campaign.
    Diagnose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        from: PathBuf,
    },
    /// Post-match analyses over archived runs.
    Analyze {
        #[command(flatten)]
        common: Common,
        analysis: Analysis,
        #[arg(long)]
        from: PathBuf,
        /// Output to split on (sign-split).
        #[arg(long)]
        output: Option<String>,
        /// Inputs to pair (pairs-density, sign-split); default all.
        #[arg(long, value_delimiter = ',')]
        inputs: Option<Vec<String>>,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Implausibility cutoff for informativeness and pass-proportions.
        #[arg(long, default_value_t = 3.0)]
        cutoff: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Analysis {
    PairsDensity,
    VarianceResolution,
    JointConstraint,
    Informativeness,
    PassProportions,
    SignSplit,
}

/// Validation failures exit 2, an empty region 3, anything else 4.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Config(_) | Error::Parse { .. } | Error::Domain(_) => 2,
                Error::EmptyRegion => 3,
                _ => 4,
            };
        }
        if cause.downcast_ref::<commands::EmptyRegion>().is_some() {
            return 3;
        }
    }
    4
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            common,
            points,
            design,
            midpoint,
        } => commands::simulate(&common, points.as_deref(), design, midpoint),
        Command::Design { common, runs } => commands::design(&common, runs),
        Command::Match { common, resume } => commands::run_match(&common, resume),
        Command::Sample {
            common,
            from,
            count,
            evaluate,
        } => commands::sample(&common, &from, count, evaluate),
        Command::Diagnose { common, from } => commands::diagnose(&common, &from),
        Command::Analyze {
            common,
            analysis,
            from,
            output,
            inputs,
            bins,
            cutoff,
        } => analyze::run(
            &common,
            analysis,
            &from,
            &analyze::Options {
                output,
                inputs,
                bins,
                cutoff,
            },
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
