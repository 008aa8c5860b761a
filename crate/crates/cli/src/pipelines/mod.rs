//! One module per scenario kind. Each pipeline returns its results as JSON and
//! appends the checks that decide the exit code.

pub mod kuranishi;
pub mod lattice;
pub mod period;
pub mod transport;

use hodgekit::transport::PathPoint;
use hodgekit::Complex64;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;
use crate::report::Check;
use crate::scenario::{Payload, Scenario, C};

pub(crate) fn complex(z: C) -> Complex64 {
    Complex64::new(z[0], z[1])
}

pub(crate) fn complex_vec(v: &[C]) -> Vec<Complex64> {
    v.iter().copied().map(complex).collect()
}

pub(crate) fn to_value<T: Serialize>(x: &T) -> Result<Value, CliError> {
    serde_json::to_value(x).map_err(|e| CliError::Runtime(format!("cannot serialize results: {e}")))
}

/// Output of a pipeline: JSON results, and the path samples of a continuation.
pub struct Outcome {
    pub results: Value,
    pub path: Option<Vec<PathPoint>>,
}

pub fn run(s: &Scenario, checks: &mut Vec<Check>) -> Result<Outcome, CliError> {
    let tol = &s.tolerances;
    let seed = s.rng_seed();
    let mut path = None;
    let results = match &s.payload {
        Payload::TorusDeform(c) => kuranishi::torus_deform(c, tol, seed, checks)?,
        Payload::DglaSolve(c) => kuranishi::dgla_solve(c, tol, seed, checks)?,
        Payload::PeriodMap(c) => period::period_map(c, tol, seed, checks)?,
        Payload::KahlerContinue(c) => {
            let (v, p) = transport::kahler_continue(c, tol, seed, checks)?;
            path = Some(p);
            v
        }
        Payload::Lattice(c) => lattice::lattice(c, tol, checks)?,
    };
    Ok(Outcome { results, path })
}
