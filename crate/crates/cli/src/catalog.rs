//! Scenarios compiled into the binary.

use crate::error::CliError;
use crate::scenario::Scenario;

pub struct Shipped {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! shipped {
    ($($name:literal),* $(,)?) => {
        &[$(Shipped { name: $name, text: include_str!(concat!("../scenarios/", $name, ".json")) }),*]
    };
}

pub const SHIPPED: &[Shipped] = shipped![
    "torus_constant_theta",
    "dgla_unobstructed",
    "dgla_obstructed",
    "torus_period_map",
    "synthetic_purity",
    "scalar_loop_continuation",
    "scalar_guard_truncation",
    "torus_kahler_transport",
    "mukai_ideal_sheaf",
    "k3_period_domain",
];

pub fn find(name: &str) -> Result<&'static Shipped, CliError> {
    let stem = name.strip_suffix(".json").unwrap_or(name);
    SHIPPED.iter().find(|s| s.name == stem).ok_or_else(|| {
        let names: Vec<_> = SHIPPED.iter().map(|s| s.name).collect();
        CliError::Input(format!("unknown scenario {name:?}; shipped scenarios: {}", names.join(", ")))
    })
}

/// One line per shipped scenario: name, kind and the first line of its description.
pub fn list() -> Result<String, CliError> {
    let mut out = String::new();
    for s in SHIPPED {
        let sc = Scenario::parse(s.text)?;
        let summary = sc.description.lines().next().unwrap_or("");
        out.push_str(&format!("{:<26} {:<16} {summary}\n", s.name, sc.payload.kind()));
    }
    Ok(out)
}

pub fn describe(name: &str) -> Result<String, CliError> {
    let s = find(name)?;
    let sc = Scenario::parse(s.text)?;
    let seed = sc.seed.map_or("none".to_string(), |x| x.to_string());
    Ok(format!("{}\nkind: {}\nseed: {seed}\n\n{}\n", s.name, sc.payload.kind(), sc.description))
}
