use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::scenario::{Scenario, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Holds,
}

/// One pass/fail flag together with the numbers that decide it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), relation: Relation::AtMost, value, limit, passed: value <= limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), relation: Relation::AtLeast, value, limit, passed: value >= limit }
    }

    /// Boolean condition recorded as `value = 1` (true) or `0`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        let value = if ok { 1.0 } else { 0.0 };
        Self { name: name.into(), relation: Relation::Holds, value, limit: 1.0, passed: ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub scenario: Scenario,
    pub results: Value,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub passed: bool,
    pub wall_time_seconds: f64,
}

impl Report {
    pub fn new(scenario: Scenario, results: Value, checks: Vec<Check>, error: Option<String>, wall: f64) -> Self {
        let passed = error.is_none() && checks.iter().all(|c| c.passed);
        Self {
            schema_version: SCHEMA_VERSION,
            tool: concat!("hodgekit ", env!("CARGO_PKG_VERSION")).to_string(),
            scenario,
            results,
            checks,
            error,
            passed,
            wall_time_seconds: wall,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
