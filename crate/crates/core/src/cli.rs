//! Command-line front end, one subcommand per pipeline stage.

use std::ffi::OsString;
use std::io::Write;

use clap::builder::TypedValueParser;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::admissible::TripodMode;
use crate::flow::{FlowError, FlowSpace};
use crate::group::{parse_group_spec, GroupSpec};
use crate::lattice::LatticeOptions;
use crate::oracle::{lattice_report, verify_complete_intersection, OracleError, OracleOptions};
use crate::par::Execution;
use crate::pipeline::{generate, GenerateOptions, PipelineError, DEFAULT_FLOW_CAP};
use crate::tree::{parse_newick, Tree};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAP: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "phylotorus",
    version,
    about = "Complete-intersection phylogenetic invariants for group-based models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a generating set of invariants.
    Generate(CommonArgs),
    /// Generate, then check the set against the kernel of the monomial map.
    Verify(CommonArgs),
    /// Report the dimension of M0~ and its index in M0.
    LatticeInfo(CommonArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    DirectCyclic,
    Factored,
}

impl From<Mode> for TripodMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::DirectCyclic => TripodMode::DirectCyclic,
            Mode::Factored => TripodMode::Factored,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Json,
    AlgebraText,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Group such as `Z2xZ3`.
    #[arg(long)]
    pub group: String,
    /// Newick text, or `@path` to read it from a file.
    #[arg(long)]
    pub tree: String,
    #[arg(long, value_enum, default_value = "direct-cyclic")]
    pub mode: Mode,
    #[arg(long, value_enum, default_value = "json")]
    pub output: Output,
    /// Refuse trees with more than this many flows.
    #[arg(long, default_value_t = DEFAULT_FLOW_CAP, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub flow_cap: usize,
    /// Randomize the order in which interior edges are cut.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run without the thread pool.
    #[arg(long)]
    pub sequential: bool,
}

/// A failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: e.to_string(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Flow(FlowError::CapExceeded { .. }) => Failure {
                code: EXIT_CAP,
                message: e.to_string(),
            },
            e => Failure::input(e),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Flow(FlowError::CapExceeded { .. }) => Failure {
                code: EXIT_CAP,
                message: e.to_string(),
            },
            e => Failure::input(e),
        }
    }
}

fn read_tree(arg: &str) -> Result<Tree, Failure> {
    let text = match arg.strip_prefix('@') {
        Some(path) => {
            std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{path}: {e}")))?
        }
        None => arg.to_string(),
    };
    parse_newick(text.trim()).map_err(Failure::input)
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let (Command::Generate(args) | Command::Verify(args) | Command::LatticeInfo(args)) =
        &cli.command;
    let group: GroupSpec = parse_group_spec(&args.group).map_err(Failure::input)?;
    let tree = read_tree(&args.tree)?;
    let execution = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let gen_opts = GenerateOptions {
        mode: args.mode.into(),
        flow_cap: Some(args.flow_cap),
        seed: args.seed,
        execution,
    };
    let oracle_opts = OracleOptions {
        flow_cap: Some(args.flow_cap),
        lattice: LatticeOptions {
            cancel: None,
            execution,
        },
    };
    let write =
        |out: &mut dyn Write, text: &str| out.write_all(text.as_bytes()).map_err(Failure::input);
    match &cli.command {
        Command::Generate(_) => {
            let set = generate(&tree, &group, &gen_opts)?;
            match args.output {
                Output::Json => write(out, &to_json(&set))?,
                Output::AlgebraText => write(out, &set.to_algebra_text())?,
            }
            Ok(EXIT_OK)
        }
        Command::Verify(_) => {
            let set = generate(&tree, &group, &gen_opts)?;
            let report = verify_complete_intersection(&set, &oracle_opts)?;
            match args.output {
                Output::Json => write(out, &to_json(&report))?,
                Output::AlgebraText => {
                    let verdict = if report.pass { "pass" } else { "fail" };
                    let mut text = format!(
                        "{verdict}: {} of {} invariants\n",
                        report.actual_count, report.expected_codim
                    );
                    for f in &report.failures {
                        text.push_str(&format!("  {f}\n"));
                    }
                    write(out, &text)?
                }
            }
            Ok(if report.pass {
                EXIT_OK
            } else {
                EXIT_VERIFY_FAILED
            })
        }
        Command::LatticeInfo(_) => {
            let space = FlowSpace::new(group, &tree);
            let info = lattice_report(&space, &oracle_opts)?;
            match args.output {
                Output::Json => write(out, &to_json(&info))?,
                Output::AlgebraText => write(
                    out,
                    &format!(
                        "dim M0~ = {} (expected {}), index = {} (expected {})\n",
                        info.dim_m0_tilde, info.expected_dim, info.index, info.expected_index
                    ),
                )?,
            }
            Ok(EXIT_OK)
        }
    }
}

/// Runs the command line `argv` (program name first); returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if !e.use_stderr() {
                let _ = out.write_all(text.as_bytes());
                return EXIT_OK;
            }
            let line = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            let _ = writeln!(err, "{}", line.trim());
            return EXIT_INPUT;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(f) => {
            let line = f.message.replace('\n', " ");
            let _ = writeln!(err, "error: {line}");
            f.code
        }
    }
}
