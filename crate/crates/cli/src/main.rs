//! `ssp`: sliding super point detection over IP-pair traces.

mod commands;
mod params;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ssp_core::Error;

use params::Params;

#[derive(Parser, Debug)]
#[command(
    name = "ssp",
    version,
    about = "Sliding super point detection over IP-pair traces"
)]
struct Cli {
    #[command(flatten)]
    params: Params,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Auto,
    Binary,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Detect super points in every sliding window of a trace
    Detect {
        /// Trace files ("-" for stdin); several files are run as separate nodes
        #[arg(long = "input", short, default_value = "-")]
        inputs: Vec<PathBuf>,
        /// Split a single input across this many simulated nodes
        #[arg(long, default_value_t = 1)]
        nodes: usize,
        /// Seed for the random node split
        #[arg(long, default_value_t = 0)]
        shard_seed: u64,
        #[arg(long, value_enum, default_value = "auto")]
        format: FormatArg,
        /// Inside network prefixes; records are read as (src, dst) and oriented
        #[arg(long)]
        cnet: Option<String>,
        /// Report table ("-" for stdout)
        #[arg(long, short, default_value = "-")]
        output: PathBuf,
        /// Report at least this many slots
        #[arg(long, default_value_t = 0)]
        slots: u64,
        /// Also write the final sketch as a snapshot
        #[arg(long)]
        export_snapshot: Option<PathBuf>,
    },
    /// Compute exact sliding-window opposite counts
    Oracle {
        #[arg(long, short, default_value = "-")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        format: FormatArg,
        #[arg(long)]
        cnet: Option<String>,
        #[arg(long, short, default_value = "-")]
        output: PathBuf,
        /// Only list hosts with at least this many opposites
        #[arg(long, default_value_t = 1)]
        min_count: u32,
        #[arg(long, default_value_t = 0)]
        slots: u64,
    },
    /// Score a report table against a truth table
    Eval {
        #[arg(long)]
        reports: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, short, default_value = "-")]
        output: PathBuf,
    },
    /// Generate a synthetic trace and its exact truth from a TOML spec
    Synth {
        #[arg(long)]
        spec: PathBuf,
        /// Trace output ("-" for stdout)
        #[arg(long, short, default_value = "-")]
        output: PathBuf,
        /// Truth table output
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "binary")]
        format: FormatArg,
    },
    /// Export, import and merge sketch snapshots
    #[command(subcommand)]
    Snapshot(SnapshotCommand),
}

#[derive(Subcommand, Debug)]
enum SnapshotCommand {
    /// Run a trace through one node and write its sketch
    Export {
        #[arg(long, short, default_value = "-")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        format: FormatArg,
        #[arg(long)]
        cnet: Option<String>,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        node: u32,
        #[arg(long, default_value_t = 0)]
        slots: u64,
        /// Also write the per-slot reports
        #[arg(long)]
        reports: Option<PathBuf>,
    },
    /// Load a snapshot and report the super points it holds
    Import {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short, default_value = "-")]
        output: PathBuf,
    },
    /// Merge node snapshots into a global sketch
    Merge {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
        /// Also write the report reconstructed from the merged sketch
        #[arg(long)]
        reports: Option<PathBuf>,
    },
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_RESOURCE: u8 = 4;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_)
        | Error::Incompatible(_)
        | Error::Infeasible(_)
        | Error::WindowOutOfRange(_) => EXIT_CONFIG,
        Error::BadMagic { .. }
        | Error::UnsupportedVersion { .. }
        | Error::Truncated { .. }
        | Error::MalformedRecord { .. }
        | Error::TimestampRegression { .. }
        | Error::BeforeStart { .. }
        | Error::SlotMisalignment(_)
        | Error::Io(_) => EXIT_INPUT,
        Error::CandidateCapExceeded { .. } => EXIT_RESOURCE,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let params = &cli.params;
    let result = match cli.command {
        Command::Detect {
            inputs,
            nodes,
            shard_seed,
            format,
            cnet,
            output,
            slots,
            export_snapshot,
        } => commands::detect(commands::DetectArgs {
            params,
            inputs: &inputs,
            nodes,
            shard_seed,
            format,
            cnet: cnet.as_deref(),
            output: &output,
            slots,
            snapshot: export_snapshot.as_deref(),
        }),
        Command::Oracle {
            input,
            format,
            cnet,
            output,
            min_count,
            slots,
        } => commands::oracle(
            params,
            &input,
            format,
            cnet.as_deref(),
            &output,
            min_count,
            slots,
        ),
        Command::Eval {
            reports,
            truth,
            output,
        } => commands::eval(params, &reports, &truth, &output),
        Command::Synth {
            spec,
            output,
            truth,
            format,
        } => commands::synth(params, &spec, &output, truth.as_deref(), format),
        Command::Snapshot(SnapshotCommand::Export {
            input,
            format,
            cnet,
            output,
            node,
            slots,
            reports,
        }) => commands::snapshot_export(
            params,
            &input,
            format,
            cnet.as_deref(),
            &output,
            node,
            slots,
            reports.as_deref(),
        ),
        Command::Snapshot(SnapshotCommand::Import { input, output }) => {
            commands::snapshot_import(params, &input, &output)
        }
        Command::Snapshot(SnapshotCommand::Merge {
            inputs,
            output,
            reports,
        }) => commands::snapshot_merge(params, &inputs, &output, reports.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("ssp: error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
