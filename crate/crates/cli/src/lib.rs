//! The `tnn` command: run, ablate, analyze and replay benchmark streams.

mod analyze;
mod error;
mod manifest;
mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::Failure;

#[derive(Parser, Debug)]
#[command(name = "tnn", version, about = "Temporal neural network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stream a benchmark through a network and score it prequentially.
    Run(RunArgs),
    /// Run paired variants over the same stream and compare them.
    Ablate {
        #[arg(long, value_enum)]
        dimension: Dimension,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compute c_conv or RBF profiles from a run's snapshot.
    Analyze(AnalyzeArgs),
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print a preset configuration as TOML.
    Preset { name: String },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Dimension {
    Neuron,
    Voters,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Neuron {
    Rif,
    If,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Network configuration file (TOML).
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration: ecvt, eccvt or ecccvt.
    #[arg(long)]
    pub preset: Option<String>,
    /// Benchmark stream: 1phase or 3phase.
    #[arg(long, default_value = "1phase")]
    pub stream: String,
    /// IDX image files, concatenated in order (repeatable).
    #[arg(long, required = true)]
    pub images: Vec<PathBuf>,
    /// IDX label files, one per --images (repeatable).
    #[arg(long, required = true)]
    pub labels: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads for column evaluation; never changes results.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Write a checkpoint every N inputs.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Snapshot window `START:END` (stream positions) or `none`.
    #[arg(long, default_value = "60000:70000")]
    pub snapshot_window: String,
    /// Inputs per error-rate interval.
    #[arg(long, default_value_t = 1000)]
    pub interval: u64,
    /// Truncate the stream to its first N inputs.
    #[arg(long)]
    pub length: Option<usize>,
    /// Explicit phase lengths, comma separated, replacing the stream's defaults.
    #[arg(long, value_delimiter = ',')]
    pub phase_lengths: Option<Vec<usize>>,
    /// Override the neuron model.
    #[arg(long, value_enum)]
    pub neuron: Option<Neuron>,
    /// Override the number of voter banks (1 = low threshold only).
    #[arg(long)]
    pub voters: Option<u8>,
    /// Resume from a checkpoint written by an earlier run of the same command.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(value_enum)]
    kind: AnalyzeKind,
    /// Run directory containing snapshot.bin.
    #[arg(long)]
    run: PathBuf,
    /// Where to write the CSV; defaults to the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Probe columns as LAYER:ROW:COL, layers counted from 1.
    #[arg(long, value_delimiter = ',', default_value = "2:5:11,2:11:11,2:17:11")]
    probes: Vec<String>,
    #[arg(long, value_enum, default_value = "sad")]
    distance: DistanceArg,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AnalyzeKind {
    Cconv,
    Rbf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DistanceArg {
    Sad,
    Euclidean,
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    let n = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err(Failure::usage("--workers must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Failure::usage(format!("cannot start {n} workers: {e}")))
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(args) => {
            let p = pool(args.workers)?;
            p.install(|| run::cmd_run(&args, "run").map(drop))
        }
        Command::Ablate { dimension, run } => {
            let p = pool(run.workers)?;
            p.install(|| match dimension {
                Dimension::Neuron => run::cmd_ablate_neuron(&run),
                Dimension::Voters => run::cmd_ablate_voters(&run),
            })
        }
        Command::Analyze(a) => {
            let p = pool(a.workers)?;
            let metric = match a.distance {
                DistanceArg::Sad => tnn_core::metrics::Distance::Sad,
                DistanceArg::Euclidean => tnn_core::metrics::Distance::Euclidean,
            };
            let out = a.out.clone().unwrap_or_else(|| a.run.clone());
            p.install(|| match a.kind {
                AnalyzeKind::Cconv => analyze::cmd_cconv(&a.run, &out, metric),
                AnalyzeKind::Rbf => analyze::cmd_rbf(&a.run, &out, &a.probes, metric),
            })
        }
        Command::Replay { manifest, out, workers } => {
            let p = pool(workers)?;
            p.install(|| run::cmd_replay(&manifest, &out))
        }
        Command::Preset { name } => {
            let cfg = tnn_core::NetworkConfig::preset(&name).map_err(Failure::config)?;
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

/// Parses `args` (program name first) and runs the command.
/// Returns the process exit status.
pub fn main_from<I, T>(args: I) -> u8
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
    match dispatch(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f:#}");
            f.code()
        }
    }
}
