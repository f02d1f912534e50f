use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod inputs;

/// Exit code for invalid input.
const EXIT_USAGE: u8 = 2;
/// Exit code for budget and feasibility failures.
const EXIT_BUDGET: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Library(treelab::Error),
}

impl From<treelab::Error> for CliError {
    fn from(e: treelab::Error) -> Self {
        CliError::Library(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Library(e) if e.is_budget() => EXIT_BUDGET,
            _ => EXIT_USAGE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Library(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "treelab", version, about = "Invariant processes on regular trees and random regular graphs")]
struct Cli {
    /// Worker threads (defaults to TREELAB_THREADS, then to all cores).
    #[arg(long, global = true, env = "TREELAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by the three Glauber experiments.
#[derive(Args, Debug, Clone)]
pub struct DynamicsArgs {
    #[arg(long)]
    pub kernel: String,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub depth: usize,
    #[arg(long)]
    pub sweeps: usize,
    #[arg(long)]
    pub replicas: usize,
    #[arg(long)]
    pub seed: u64,
    /// Interior window depth (default 3*depth/8).
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Dobrushin coefficient of a kernel on the d-regular tree.
    Dobrushin {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        d: usize,
    },
    /// Second largest absolute eigenvalue of a kernel.
    Spectral {
        #[arg(long)]
        kernel: String,
    },
    /// Samples the branching Markov chain on a truncated tree.
    BmcSample {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        replicas: usize,
        /// Writes the first replica as "level vertex state" lines.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Correlation decay test, with an optional Monte Carlo estimate.
    Correlation {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        d: usize,
        /// Comma separated real value per state.
        #[arg(long)]
        encoding: String,
        #[arg(long, default_value_t = 200)]
        k_max: usize,
        #[arg(long)]
        distance: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 100_000)]
        replicas: usize,
    },
    /// Checks that the branching chain is stationary under Glauber sweeps.
    GlauberFixedPoint {
        #[command(flatten)]
        run: DynamicsArgs,
    },
    /// Hamming distance decay of two coupled Glauber chains.
    GlauberContraction {
        #[command(flatten)]
        run: DynamicsArgs,
        /// Writes the decay curve as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Coupled convergence from an i.i.d. start to the branching chain.
    GlauberConverge {
        #[command(flatten)]
        run: DynamicsArgs,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Writes the final configuration of the first replica.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vertex, edge and star entropy inequalities for a kernel.
    EntropyCheck {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        d: usize,
    },
    /// Random walk on a q-regular graph on k vertices versus the
    /// edge/vertex entropy inequality.
    Counterexample {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        q_deg: usize,
        #[arg(long)]
        d: usize,
        /// When given, also samples such a graph and checks its walk.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Samples random regular graphs from the pairing model.
    GraphSample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        /// Keep loops and multiple edges.
        #[arg(long)]
        multigraph: bool,
        #[arg(long, default_value_t = treelab::graph::DEFAULT_RETRY_BUDGET)]
        retry_budget: usize,
        /// Cycle length for the short-cycle profile.
        #[arg(long, default_value_t = 4)]
        cycle_len: usize,
        /// Also report the walk spectral radius (dense eigensolver).
        #[arg(long)]
        spectrum: bool,
        /// Writes the first sample in the graph text format.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verifies the matching/coloring counting identity by enumeration.
    EntlemCheck {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Quantizes an adjacency eigenvector and measures local failures.
    EigenQuantize {
        /// Graph file; when absent, graphs are sampled with --n and --d.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        /// Eigenvalue index in decreasing order (0 is the top).
        #[arg(long, default_value_t = 1)]
        which: usize,
        /// Number of levels, or "exact".
        #[arg(long, default_value = "4")]
        levels: String,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
    },
    /// Colored neighborhood distance between two graphs.
    LocalDistance {
        #[arg(long)]
        graph1: PathBuf,
        #[arg(long)]
        graph2: PathBuf,
        #[arg(long, default_value_t = 2)]
        r_max: usize,
        #[arg(long, default_value_t = 2)]
        k_max: usize,
        #[arg(long, default_value_t = 1 << 16)]
        coloring_budget: u64,
        #[arg(long, default_value_t = 256)]
        samples: usize,
        /// Required when some term has to be sampled.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Minimum covering error ratio of a graph.
    CoveringMin {
        #[arg(long)]
        graph: PathBuf,
        /// Matrix file, or the preset "dominating" or "bipartite".
        #[arg(long)]
        matrix: String,
        /// Use local search instead of the exact search.
        #[arg(long)]
        local_search: bool,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        /// Seeds local search; also enables it as a fallback when the
        /// exact search runs out of budget.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Threshold below which a covering cannot be approximated.
    Epsilon0 {
        /// "dominating" or "bipartite".
        #[arg(long, conflicts_with = "matrix")]
        family: Option<String>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Writes the scan grid as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Dominating-ratio thresholds for a range of degrees.
    DominatingTable {
        #[arg(long, default_value_t = 3)]
        from: usize,
        #[arg(long, default_value_t = 6)]
        to: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Print an aligned text table instead of JSON.
        #[arg(long)]
        text: bool,
    },
}

// a closed pipe (e.g. `| head`) is not an error worth a panic
fn emit(text: &str) -> ExitCode {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match commands::run(cli.command) {
        Ok(commands::Output::Json(json)) => {
            let text = serde_json::to_string_pretty(&json).expect("JSON values always serialize");
            emit(&format!("{text}\n"))
        }
        Ok(commands::Output::Text(text)) => {
            emit(&text)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
