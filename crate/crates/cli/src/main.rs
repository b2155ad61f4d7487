//! `pp`: build, compile, verify, simulate and analyze population protocols.
//!
//! Exit codes: 0 success / pass / converged, 1 property violated, 2 resource
//! limit exceeded, 3 usage or parse error.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "pp",
    version,
    about = "Population protocols under crash failures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a protocol from a known family.
    Zoo(ZooArgs),
    /// Compile a monadic formula into a predicate protocol.
    Compile(CompileArgs),
    /// Run the protocol under a random scheduler.
    Simulate(SimulateArgs),
    /// Exhaustively check correctness or robustness.
    Verify(VerifyArgs),
    /// Lower-bound analysis helpers.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Pebble,
    Tower,
    RobustMin,
    RobustMod,
    RobustMinMod,
}

#[derive(Args, Debug)]
struct ZooArgs {
    family: Family,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    /// Output file; stdout if omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompileArgs {
    #[arg(long)]
    formula: String,
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Print the saturation profile and state count instead of the protocol
    /// (the protocol is still written if `-o` is given).
    #[arg(long)]
    stats: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    protocol: PathBuf,
    /// `x=5,y=3`; ranges such as `x=1..4` run one simulation per input.
    #[arg(long, required_unless_present = "replay")]
    input: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    max_steps: u64,
    #[arg(long, default_value_t = 1_000)]
    window: u64,
    /// `step=<n>,target=<random|max-level|state:ID>`, repeatable.
    #[arg(long)]
    snipe: Vec<String>,
    /// Number of independent runs per input; more than one prints a summary.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Re-execute a trace file or a verdict holding a counterexample.
    #[arg(long, conflicts_with_all = ["input", "snipe", "trials", "jsonl"])]
    replay: Option<PathBuf>,
    /// Also write the run as JSON lines to this file.
    #[arg(long)]
    jsonl: Option<PathBuf>,
    /// Keep silent interactions in the JSON lines output.
    #[arg(long)]
    record_silent: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Computes,
    Robust,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    mode: Mode,
    #[arg(long)]
    protocol: PathBuf,
    /// Predicate as a formula, e.g. `x >= 3`.
    #[arg(
        long,
        conflicts_with = "function",
        required_unless_present = "function"
    )]
    oracle: Option<String>,
    /// Function descriptor: `min(x,3)`, `mod(x,2)`, `minmod(x,2,2)`,
    /// `pair(d1,d2)`, `ge(x,3)`, `const(n)`, `formula(...)`.
    #[arg(long)]
    function: Option<String>,
    /// `x=5,y=3` or ranges `x=1..6`, repeatable.
    #[arg(long, required_unless_present = "input_file")]
    input: Vec<String>,
    /// JSON file with one input object or an array of them.
    #[arg(long)]
    input_file: Option<PathBuf>,
    /// Snipe budget; capped at `|A| - 1` per input.
    #[arg(long, default_value_t = 0)]
    snipes: usize,
    /// Require a single output per snipe count.
    #[arg(long)]
    strict: bool,
    /// Configuration budget per input; defaults to `PP_NODE_LIMIT`.
    #[arg(long)]
    max_configs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum AnalyzeCommand {
    /// Rejecting states and the critical input of a predicate protocol.
    CriticalInput {
        #[arg(long)]
        protocol: PathBuf,
        /// Also decide whether the critical input is upward invariant.
        #[arg(long)]
        formula: Option<String>,
    },
    /// Transitions leaving a state set.
    Escape {
        #[arg(long)]
        protocol: PathBuf,
        /// Comma-separated state ids.
        #[arg(long, value_delimiter = ',', required = true)]
        states: Vec<String>,
    },
    /// Whether an input configuration is confined or confinable to a set.
    Confine {
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        input: String,
        #[arg(long, value_delimiter = ',', required = true)]
        states: Vec<String>,
        #[arg(long)]
        max_configs: Option<usize>,
    },
    /// Lower bound on the states of any robust protocol for a formula.
    LowerBound {
        #[arg(long)]
        formula: String,
        /// Largest count tried per variable; defaults to `max(t + m)`.
        #[arg(long)]
        search_bound: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Zoo(a) => commands::zoo(a),
        Command::Compile(a) => commands::compile(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Verify(a) => commands::verify(a),
        Command::Analyze(a) => commands::analyze(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
