mod commands;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use ca_graphlab::evi::Estimator;
use ca_graphlab::ingest::{DegreeMode, EdgeFormat, WindowMode};
use ca_graphlab::NodeId;
use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{CliError, EviArgs, EvolveArgs, IngestArgs, ReplicateArgs};

/// Clustering-attachment random graph experiments.
#[derive(Parser)]
#[command(name = "ca-graphlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one evolution and write its trajectory.
    Evolve(EvolveCmd),
    /// Run independent replicas and write per-step averages.
    Replicate(ReplicateCmd),
    /// Sweep tail-index estimators over a sample file.
    Evi(EviCmd),
    /// Turn a timestamped edge stream into window snapshots.
    Ingest(IngestCmd),
}

#[derive(Args)]
struct Common {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Also write SVG plots.
    #[arg(long)]
    plots: bool,
}

#[derive(Args)]
struct EvolveCmd {
    /// Experiment config file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Also write the final graph as an edge list.
    #[arg(long)]
    final_graph: bool,
}

#[derive(Args)]
struct ReplicateCmd {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Number of replicas.
    #[arg(long)]
    runs: usize,
    /// Cap on worker threads.
    #[arg(long, env = "CA_GRAPHLAB_THREADS")]
    threads: Option<usize>,
    /// Average over successful replicas instead of aborting on a failure.
    #[arg(long)]
    tolerate_failures: bool,
}

#[derive(Args)]
struct EviCmd {
    /// One value per line.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Comma-separated subset of hill, moment, uh, mixed_moment, or `all`.
    #[arg(long, default_value = "all", value_parser = commands::parse_estimators)]
    estimators: EstimatorList,
    /// `start:end:step` or a comma-separated list of s values in (0, 1).
    #[arg(long, default_value = "0.05:0.95:0.05", value_parser = commands::parse_s_grid)]
    s_grid: SGrid,
    /// Keep only values strictly greater than this.
    #[arg(long, default_value_t = 0.0)]
    min_exclusive: f64,
}

type EstimatorList = Vec<Estimator>;
type SGrid = Vec<f64>;

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    /// `u v t` per line.
    Whitespace,
    /// Delimited columns selected by `--columns`.
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Cumulative,
    PerWindow,
}

#[derive(Clone, Copy, ValueEnum)]
enum DegreeArg {
    Multiplicity,
    Simple,
}

#[derive(Args)]
struct IngestCmd {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Window length in timestamp units.
    #[arg(long, default_value_t = 1)]
    window: i64,
    #[arg(long, value_enum, default_value = "cumulative")]
    mode: ModeArg,
    /// Degree as incident event count or as distinct neighbors.
    #[arg(long, value_enum, default_value = "multiplicity")]
    degree: DegreeArg,
    /// Comma-separated node ids to report per window.
    #[arg(long, value_delimiter = ',')]
    tracked: Vec<u64>,
    #[arg(long, value_enum, default_value = "whitespace")]
    format: InputFormat,
    /// Zero-based u,v,t column indices for CSV input.
    #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1, 2])]
    columns: Vec<usize>,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// CSV input starts with a header row.
    #[arg(long)]
    header: bool,
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Evolve(c) => commands::evolve(&EvolveArgs {
            config: c.config,
            out: c.common.out,
            final_graph: c.final_graph,
            plots: c.common.plots,
        }),
        Command::Replicate(c) => commands::replicate_cmd(&ReplicateArgs {
            config: c.config,
            out: c.common.out,
            runs: c.runs,
            threads: c.threads,
            tolerate_failures: c.tolerate_failures,
            plots: c.common.plots,
        }),
        Command::Evi(c) => commands::evi_cmd(&EviArgs {
            input: c.input,
            out: c.common.out,
            estimators: c.estimators,
            s_grid: c.s_grid,
            min_exclusive: c.min_exclusive,
            plots: c.common.plots,
        }),
        Command::Ingest(c) => {
            if !c.delimiter.is_ascii() {
                return Err(CliError::Config("--delimiter must be an ASCII character".into()));
            }
            if c.columns.len() != 3 {
                return Err(CliError::Config("--columns takes exactly three indices: u,v,t".into()));
            }
            if c.tracked.contains(&0) {
                return Err(CliError::Config("node ids are 1-based".into()));
            }
            let format = match c.format {
                InputFormat::Whitespace => EdgeFormat::Whitespace,
                InputFormat::Csv => EdgeFormat::Csv {
                    u_col: c.columns[0],
                    v_col: c.columns[1],
                    t_col: c.columns[2],
                    delimiter: c.delimiter as u8,
                    has_header: c.header,
                },
            };
            commands::ingest_cmd(&IngestArgs {
                input: c.input,
                out: c.common.out,
                format,
                window: c.window,
                mode: match c.mode {
                    ModeArg::Cumulative => WindowMode::Cumulative,
                    ModeArg::PerWindow => WindowMode::PerWindow,
                },
                degree: match c.degree {
                    DegreeArg::Multiplicity => DegreeMode::Multiplicity,
                    DegreeArg::Simple => DegreeMode::Simple,
                },
                tracked: c.tracked.into_iter().map(NodeId).collect(),
                plots: c.common.plots,
            })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
