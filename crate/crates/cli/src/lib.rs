//! Scenario runner behind the `hodgekit` binary.

pub mod catalog;
pub mod error;
pub mod pipelines;
pub mod report;
pub mod scenario;

use std::path::{Path, PathBuf};
use std::time::Instant;

use hodgekit::transport::PathPoint;

use crate::error::CliError;
use crate::report::Report;
use crate::scenario::{Overrides, Scenario};

/// Everything one invocation of `run` needs.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// File path, or the name of a shipped scenario.
    pub scenario: String,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub overrides: Overrides,
    /// Subcommands other than `run` insist on a kind.
    pub expect_kind: Option<&'static str>,
}

pub fn load(source: &str) -> Result<Scenario, CliError> {
    let path = Path::new(source);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{source}: {e}")))?;
        Scenario::parse(&text).map_err(|e| CliError::Input(format!("{source}: {e}")))
    } else {
        Scenario::parse(catalog::find(source)?.text)
    }
}

pub fn write_csv(path: &Path, points: &[PathPoint]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Input(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let n = points.first().map_or(0, |p| p.alpha0.len());
    let mut header = vec!["t".to_string(), "a_norm".into(), "residual".into(), "correction".into()];
    for k in 0..n {
        header.push(format!("alpha0_{k}_re"));
        header.push(format!("alpha0_{k}_im"));
    }
    w.write_record(&header).map_err(io)?;
    for p in points {
        let mut row = vec![p.t, p.a_norm, p.residual, p.correction];
        row.extend(p.alpha0.iter().flat_map(|z| [z.re, z.im]));
        w.write_record(row.iter().map(|x| format!("{x:e}"))).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn emit(report: &Report, out: Option<&Path>) -> Result<(), CliError> {
    let json = report.to_json();
    match out {
        Some(p) => std::fs::write(p, json + "\n").map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

/// Runs one scenario and returns the process exit code: 0 when every check
/// passes, 1 on a failed check or numerical failure, 2 on bad input.
pub fn execute(opts: &RunOptions) -> i32 {
    match execute_inner(opts) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute_inner(opts: &RunOptions) -> Result<i32, CliError> {
    let scenario = load(&opts.scenario)?.apply(&opts.overrides)?;
    if let Some(kind) = opts.expect_kind {
        if scenario.payload.kind() != kind {
            return Err(CliError::Input(format!(
                "scenario {:?} is of kind {}, not {kind}",
                scenario.name,
                scenario.payload.kind()
            )));
        }
    }
    if opts.csv.is_some() && scenario.payload.kind() != "kahler-continue" {
        return Err(CliError::Input("--csv is only available for kahler-continue scenarios".into()));
    }
    log::info!("running {} ({})", scenario.name, scenario.payload.kind());
    let start = Instant::now();
    let mut checks = Vec::new();
    let outcome = pipelines::run(&scenario, &mut checks);
    let wall = start.elapsed().as_secs_f64();
    let report = match outcome {
        Ok(o) => {
            if let (Some(path), Some(points)) = (&opts.csv, &o.path) {
                write_csv(path, points)?;
            }
            Report::new(scenario, o.results, checks, None, wall)
        }
        Err(e @ CliError::Input(_)) => return Err(e),
        Err(e @ CliError::Runtime(_)) => {
            eprintln!("error: {e}");
            Report::new(scenario, serde_json::Value::Null, checks, Some(e.to_string()), wall)
        }
    };
    for c in report.checks.iter().filter(|c| !c.passed) {
        log::warn!("check failed: {} (value {:e}, limit {:e})", c.name, c.value, c.limit);
    }
    emit(&report, opts.out.as_deref())?;
    Ok(if report.passed { 0 } else { 1 })
}
