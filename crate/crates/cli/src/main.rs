//! `eqts`: build, equalize and verify agent policies from the command line.
//!
//! Exit codes: 0 success (the policy works, no audit violations), 1 bad
//! input or usage, 2 the policy fails with a lasso, 3 a dead end or an
//! unreachable goal, 4 audit violations, 5 a resource cap or planner
//! failure.

mod commands;
mod input;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eqts::pipeline::PipelineError;
use eqts::policy::PlannerError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error("{0}")]
    Resource(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Pipeline(e) if e.is_resource() => 5,
            CliError::Planner(_) | CliError::Resource(_) => 5,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Semantics {
    Stop,
    Loop,
}

#[derive(Debug, Parser)]
#[command(name = "eqts", version, about = "Verify reactive agent policies over equalized transition systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Cap on the number of concrete states.
    #[arg(long, global = true, env = "EQTS_MAX_STATES", default_value_t = 100_000)]
    max_states: usize,

    /// Largest number of simultaneous actions in a transition label.
    #[arg(long, global = true)]
    concurrency_cap: Option<usize>,

    /// Seed for audit sampling and simulation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    /// Longest plan the planner may return.
    #[arg(long)]
    pub plan_bound: Option<usize>,

    /// `builtin`, `builtin-shortest`, `exec:<path>` or `mutant:<kind>`.
    #[arg(long, default_value = "builtin")]
    pub planner: String,

    /// Seconds an external planner may take per query.
    #[arg(long, default_value_t = 30)]
    pub planner_timeout: u64,

    /// Most plans the built-in planner returns per query.
    #[arg(long, default_value_t = 100_000)]
    pub max_plans: usize,

    #[arg(long, value_enum, default_value = "stop")]
    pub goal_semantics: Semantics,

    /// First check that the goal is reachable at all from every initial state.
    #[arg(long)]
    pub require_goal_reachable: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Instantiate a description and print its ground form.
    Ground { inputs: Vec<PathBuf> },
    /// Build the explicit transition system.
    Build { inputs: Vec<PathBuf> },
    /// Cluster the states and check properness.
    Equalize { inputs: Vec<PathBuf> },
    /// Decide whether the policy works.
    Verify {
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Check a planner for soundness and completeness.
    Audit {
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Check every item instead of sampling large systems.
        #[arg(long)]
        exhaustive: bool,
        /// Items checked when sampling.
        #[arg(long, default_value_t = 512)]
        samples: usize,
        /// Bound of the reference planner in the completeness audit.
        #[arg(long)]
        reference_bound: Option<usize>,
    },
    /// Run the policy once on the concrete system.
    Simulate {
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Most policy steps before giving up.
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Pick plans at random instead of taking the first one.
        #[arg(long)]
        random_plans: bool,
    },
    /// Write a graph of one stage.
    Export {
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long, value_enum, default_value = "policy")]
        what: Stage,
    },
    /// Generate a scenario bundle.
    Gen {
        #[command(subcommand)]
        which: GenCommand,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Ts,
    Equalized,
    Policy,
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Labeled blocksworld with the two-phase stacking policy.
    Blocks {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        stem: Option<String>,
    },
    /// Grid search from a layout file or a shipped instance.
    Grid {
        #[arg(long, conflicts_with = "figure")]
        layout: Option<PathBuf>,
        /// Shipped instance `a`, `b` or `c`.
        #[arg(long)]
        figure: Option<char>,
        /// Measure "farthest" by straight-line distance.
        #[arg(long)]
        euclidean: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        stem: Option<String>,
    },
}

pub struct Outcome {
    pub stdout: String,
    pub code: u8,
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let caps = input::Caps {
        max_states: cli.max_states,
        concurrency_cap: cli.concurrency_cap,
    };
    if caps.max_states == 0 || caps.concurrency_cap == Some(0) {
        return Err(CliError::Usage("caps must be positive".into()));
    }
    let ctx = commands::Ctx {
        format: cli.format,
        caps,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Ground { inputs } => commands::ground(&ctx, inputs),
        Command::Build { inputs } => commands::build(&ctx, inputs),
        Command::Equalize { inputs } => commands::equalize(&ctx, inputs),
        Command::Verify { inputs, policy } => commands::verify(&ctx, inputs, policy),
        Command::Audit {
            inputs,
            policy,
            exhaustive,
            samples,
            reference_bound,
        } => commands::audit(&ctx, inputs, policy, *exhaustive, *samples, *reference_bound),
        Command::Simulate {
            inputs,
            policy,
            steps,
            random_plans,
        } => commands::simulate(&ctx, inputs, policy, *steps, *random_plans),
        Command::Export {
            inputs,
            policy,
            what,
        } => commands::export(&ctx, inputs, policy, *what),
        Command::Gen { which } => commands::gen(which),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.jobs {
        Some(0) => Err(CliError::Usage("--jobs must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(CliError::Usage(e.to_string())),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.stdout.as_bytes());
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("eqts: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
