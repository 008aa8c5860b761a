//! Lattice arithmetic for K3 and hyperkähler periods: Mukai vectors and
//! pairing, slope comparisons, orthogonal complements, period-domain
//! membership and bounded lattice searches.
//!
//! Everything integral is exact; floating point enters only through complex
//! period points. Searches over infinite lattices are cut off at an explicit
//! coordinate bound that every verdict carries.

mod integral;
mod period;

pub use integral::{hermite_rows, integer_kernel, IntegralLattice};
pub use period::{
    in_period_domain, is_generic_period, projectivity_witness, q_complex, sequence_domain_check, DomainVerdict,
    GenericityVerdict, SequenceReport, MAX_SEARCH,
};

use log::warn;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::error::{HodgeError, Result};

/// `v = (r, ξ, a)` with `ξ` in a Néron–Severi lattice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MukaiVector {
    pub r: i64,
    pub xi: Vec<i64>,
    pub a: i64,
}

impl MukaiVector {
    pub fn new(r: i64, xi: Vec<i64>, a: i64) -> Self {
        Self { r, xi, a }
    }

    /// Coordinates `(r, ξ…, a)` in the Mukai lattice.
    pub fn coordinates(&self) -> Vec<i64> {
        let mut v = vec![self.r];
        v.extend_from_slice(&self.xi);
        v.push(self.a);
        v
    }

    pub fn from_coordinates(c: &[i64]) -> Result<Self> {
        if c.len() < 2 {
            return Err(HodgeError::dim("Mukai coordinates need at least (r, a)"));
        }
        Ok(Self { r: c[0], xi: c[1..c.len() - 1].to_vec(), a: c[c.len() - 1] })
    }
}

/// `(r, c₁, ch₂ + r)`.
pub fn mukai_vector(r: i64, c1: Vec<i64>, ch2: i64) -> MukaiVector {
    MukaiVector { r, xi: c1, a: ch2 + r }
}

/// `(ξ, ξ')_S − r'·a − r·a'`.
pub fn mukai_pairing(v: &MukaiVector, w: &MukaiVector, ns: &IntegralLattice) -> Result<i64> {
    let middle = ns.pair(&v.xi, &w.xi)?;
    let s = middle as i128 - w.r as i128 * v.a as i128 - v.r as i128 * w.a as i128;
    i64::try_from(s).map_err(|_| HodgeError::invalid("Mukai pairing overflows i64"))
}

/// Gram matrix of `ℤ ⊕ NS ⊕ ℤ` under the Mukai pairing, in `(r, ξ, a)` order.
pub fn mukai_lattice(ns: &IntegralLattice) -> IntegralLattice {
    let n = ns.rank() + 2;
    let mut g = vec![vec![0; n]; n];
    for (i, row) in ns.gram().iter().enumerate() {
        g[1 + i][1..n - 1].copy_from_slice(row);
    }
    g[0][n - 1] = -1;
    g[n - 1][0] = -1;
    IntegralLattice::new(g).expect("Mukai lattice of a non-degenerate NS lattice is non-degenerate")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuliDimension {
    pub v_squared: i64,
    pub dimension: i64,
    pub warning: Option<String>,
}

/// `v² + 2`; warns when `v² < 0`, where the formula describes no
/// positive-dimensional moduli space.
pub fn moduli_dimension(v: &MukaiVector, ns: &IntegralLattice) -> Result<ModuliDimension> {
    let v2 = mukai_pairing(v, v, ns)?;
    let warning = (v2 < 0).then(|| {
        let msg = format!("v² = {v2} < 0: trivial case, dimension formula gives {}", v2 + 2);
        warn!("{msg}");
        msg
    });
    Ok(ModuliDimension { v_squared: v2, dimension: v2 + 2, warning })
}

/// `μ_ω = (c₁·ω)/r`.
pub fn slope(r: i64, c1: &[i64], omega: &[i64], ns: &IntegralLattice) -> Result<Ratio<i64>> {
    if r == 0 {
        return Err(HodgeError::invalid("slope of a rank-zero object"));
    }
    Ok(Ratio::new(ns.pair(c1, omega)?, r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlopeOrder {
    Less,
    Equal,
    Greater,
}

impl From<Ordering> for SlopeOrder {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Less => Self::Less,
            Ordering::Equal => Self::Equal,
            Ordering::Greater => Self::Greater,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlopeComparison {
    pub sub: (i64, i64),
    pub whole: (i64, i64),
    pub ordering: SlopeOrder,
    /// `μ(sub) < μ(whole)`: this sub-object datum does not destabilize.
    pub strictly_smaller: bool,
}

/// Compares `μ(sub)` with `μ(whole)` for `0 < rk(sub) < rk(whole)`; slopes
/// are reported as `(numerator, denominator)`.
pub fn stability_compare(
    sub: (i64, &[i64]),
    whole: (i64, &[i64]),
    omega: &[i64],
    ns: &IntegralLattice,
) -> Result<SlopeComparison> {
    if !(0 < sub.0 && sub.0 < whole.0) {
        return Err(HodgeError::invalid(format!("need 0 < rk(sub) = {} < rk(whole) = {}", sub.0, whole.0)));
    }
    let (ms, mw) = (slope(sub.0, sub.1, omega, ns)?, slope(whole.0, whole.1, omega, ns)?);
    let ordering = SlopeOrder::from(ms.cmp(&mw));
    Ok(SlopeComparison {
        sub: (*ms.numer(), *ms.denom()),
        whole: (*mw.numer(), *mw.denom()),
        ordering,
        strictly_smaller: ordering == SlopeOrder::Less,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Complement {
    /// Row Hermite-normal basis of `v^⊥`.
    pub basis: Vec<Vec<i64>>,
    pub gram: Vec<Vec<i64>>,
}

/// Integer basis of `v^⊥ = {x : (v, x) = 0}` and its restricted Gram matrix.
pub fn orth_complement(v: &[i64], lattice: &IntegralLattice) -> Result<Complement> {
    if v.iter().all(|&x| x == 0) {
        return Err(HodgeError::invalid("orthogonal complement of the zero vector"));
    }
    let basis = integer_kernel(&lattice.form_of(v)?);
    let gram = basis
        .iter()
        .map(|x| basis.iter().map(|y| lattice.pair(x, y)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok(Complement { basis, gram })
}
