use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hodgekit_cli::scenario::Overrides;
use hodgekit_cli::{catalog, execute, RunOptions};

#[derive(Parser)]
#[command(name = "hodgekit", version, about = "Run deformation, period and lattice scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file, or the name of a shipped scenario.
    #[arg(long)]
    scenario: String,
    /// Report destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the equation tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Overrides the truncation degree of series solves.
    #[arg(long)]
    degree: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario of any kind.
    Run(Common),
    TorusDeform(Common),
    DglaSolve(Common),
    PeriodMap(Common),
    KahlerContinue {
        #[command(flatten)]
        common: Common,
        /// Also write one CSV row per path sample.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    Lattice(Common),
    /// List the shipped scenarios.
    ListScenarios,
    /// Describe a shipped scenario.
    Describe { name: String },
}

fn options(c: Common, kind: Option<&'static str>, csv: Option<PathBuf>) -> RunOptions {
    RunOptions {
        scenario: c.scenario,
        out: c.out,
        csv,
        overrides: Overrides { seed: c.seed, tol: c.tol, degree: c.degree },
        expect_kind: kind,
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("HODGEKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("HODGEKIT_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn text(r: Result<String, hodgekit_cli::error::CliError>) -> i32 {
    match r {
        Ok(s) => {
            print!("{s}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let code = match cli.command {
        Command::Run(c) => execute(&options(c, None, None)),
        Command::TorusDeform(c) => execute(&options(c, Some("torus-deform"), None)),
        Command::DglaSolve(c) => execute(&options(c, Some("dgla-solve"), None)),
        Command::PeriodMap(c) => execute(&options(c, Some("period-map"), None)),
        Command::KahlerContinue { common, csv } => execute(&options(common, Some("kahler-continue"), csv)),
        Command::Lattice(c) => execute(&options(c, Some("lattice"), None)),
        Command::ListScenarios => text(catalog::list()),
        Command::Describe { name } => text(catalog::describe(&name)),
    };
    ExitCode::from(code as u8)
}
