use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::IntegralLattice;
use crate::error::{HodgeError, Result};
use crate::linalg::c64;

/// Largest box `(2s+1)^n` enumerated in a single search shell.
pub const MAX_SEARCH: u64 = 50_000_000;

/// Complex-bilinear `q(z, w)`.
pub fn q_complex(lattice: &IntegralLattice, z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
    let n = lattice.rank();
    if z.len() != n || w.len() != n {
        return Err(HodgeError::dim(format!("period vectors must have length {n}")));
    }
    let mut s = c64(0.0, 0.0);
    for (i, row) in lattice.gram().iter().enumerate() {
        for (j, &g) in row.iter().enumerate() {
            if g != 0 {
                s += z[i] * g as f64 * w[j];
            }
        }
    }
    Ok(s)
}

fn q_mixed(lattice: &IntegralLattice, z: &[Complex64], l: &[i64]) -> Complex64 {
    let mut s = c64(0.0, 0.0);
    for (i, row) in lattice.gram().iter().enumerate() {
        for (j, &g) in row.iter().enumerate() {
            if g != 0 && l[j] != 0 {
                s += z[i] * (g * l[j]) as f64;
            }
        }
    }
    s
}

fn norm(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn check_point(z: &[Complex64], lattice: &IntegralLattice) -> Result<f64> {
    if z.len() != lattice.rank() {
        return Err(HodgeError::dim(format!("period point must have length {}", lattice.rank())));
    }
    let n = norm(z);
    if n == 0.0 || !n.is_finite() {
        return Err(HodgeError::invalid("period point must be a finite nonzero vector"));
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainVerdict {
    pub in_domain: bool,
    /// `q(z,z)/|z|²` and `q(z,z̄)/|z|²`, both scale invariant.
    pub q_zz: Complex64,
    pub q_zzbar: f64,
}

/// `q(z,z) = 0` (to `eq_tol·|z|²`) and `q(z,z̄) > 0`.
pub fn in_period_domain(z: &[Complex64], lattice: &IntegralLattice, eq_tol: f64) -> Result<DomainVerdict> {
    let n2 = check_point(z, lattice)?.powi(2);
    let zbar: Vec<Complex64> = z.iter().map(|c| c.conj()).collect();
    let q_zz = q_complex(lattice, z, z)? / n2;
    let q_zzbar = q_complex(lattice, z, &zbar)?.re / n2;
    Ok(DomainVerdict { in_domain: q_zz.norm() <= eq_tol && q_zzbar > 0.0, q_zz, q_zzbar })
}

/// Coordinate order within a shell: `0, 1, −1, 2, −2, …`.
fn digit(d: u64) -> i64 {
    let d = d as i64;
    if d % 2 == 1 { (d + 1) / 2 } else { -d / 2 }
}

/// First `λ ≠ 0` with `‖λ‖∞ ≤ bound` (up to sign) satisfying `pred`, shells
/// of increasing `‖λ‖∞` in a fixed order; deterministic under parallelism.
fn search<P>(n: usize, bound: i64, pred: P) -> Result<Option<Vec<i64>>>
where
    P: Fn(&[i64]) -> bool + Sync,
{
    if bound < 1 {
        return Err(HodgeError::invalid("search bound must be ≥ 1"));
    }
    let side = 2 * bound as u64 + 1;
    let total = (0..n).try_fold(1u64, |acc, _| acc.checked_mul(side).filter(|&t| t <= MAX_SEARCH));
    if total.is_none() {
        return Err(HodgeError::SearchTooLarge(format!(
            "{side}^{n} candidates at bound {bound} exceed {MAX_SEARCH}"
        )));
    }
    for s in 1..=bound {
        let side = 2 * s as u64 + 1;
        let count = side.pow(n as u32);
        let found = (0..count).into_par_iter().find_first(|&idx| {
            let mut l = vec![0i64; n];
            let mut rest = idx;
            for c in (0..n).rev() {
                l[c] = digit(rest % side);
                rest /= side;
            }
            let on_shell = l.iter().any(|x| x.abs() == s);
            let canonical = l.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0);
            on_shell && canonical && pred(&l)
        });
        if let Some(idx) = found {
            let mut l = vec![0i64; n];
            let mut rest = idx;
            for c in (0..n).rev() {
                l[c] = digit(rest % side);
                rest /= side;
            }
            return Ok(Some(l));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericityVerdict {
    /// No integral `λ` with `‖λ‖∞ ≤ bound` is orthogonal to `z`.
    pub generic: bool,
    pub witness: Option<Vec<i64>>,
    pub bound: i64,
}

/// Bounded search for `λ` with `|q(z,λ)| ≤ eq_tol·|z|·‖λ‖`.
pub fn is_generic_period(
    z: &[Complex64],
    lattice: &IntegralLattice,
    bound: i64,
    eq_tol: f64,
) -> Result<GenericityVerdict> {
    let zn = check_point(z, lattice)?;
    let witness = search(lattice.rank(), bound, |l| {
        let ln = l.iter().map(|x| (x * x) as f64).sum::<f64>().sqrt();
        q_mixed(lattice, z, l).norm() <= eq_tol * zn * ln
    })?;
    Ok(GenericityVerdict { generic: witness.is_none(), witness, bound })
}

/// First `ℓ` with `q(ℓ,ℓ) > 0` and `|q(z,ℓ)| ≤ eq_tol·|z|·‖ℓ‖`, or none
/// within the bound.
pub fn projectivity_witness(
    z: &[Complex64],
    lattice: &IntegralLattice,
    bound: i64,
    eq_tol: f64,
) -> Result<Option<Vec<i64>>> {
    let zn = check_point(z, lattice)?;
    search(lattice.rank(), bound, |l| {
        let ln = l.iter().map(|x| (x * x) as f64).sum::<f64>().sqrt();
        lattice.pair(l, l).is_ok_and(|q| q > 0) && q_mixed(lattice, z, l).norm() <= eq_tol * zn * ln
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub min_q_zzbar: f64,
    pub max_abs_q_zz: f64,
    /// Index (into the input list) of the first point off the domain or
    /// below the margin.
    pub first_violation: Option<usize>,
    pub bounded_in_domain: bool,
    pub points: Vec<DomainVerdict>,
}

/// Compact-subset proxy: after normalizing `|z| = 1`, every point must have
/// `|q(z,z)| ≤ eq_tol` and `q(z,z̄) ≥ margin`.
pub fn sequence_domain_check(
    points: &[Vec<Complex64>],
    lattice: &IntegralLattice,
    margin: f64,
    eq_tol: f64,
) -> Result<SequenceReport> {
    if points.is_empty() {
        return Err(HodgeError::invalid("sequence must contain at least one point"));
    }
    let verdicts = points.iter().map(|z| in_period_domain(z, lattice, eq_tol)).collect::<Result<Vec<_>>>()?;
    let min_q_zzbar = verdicts.iter().map(|v| v.q_zzbar).fold(f64::INFINITY, f64::min);
    let max_abs_q_zz = verdicts.iter().map(|v| v.q_zz.norm()).fold(0.0, f64::max);
    let first_violation = verdicts.iter().position(|v| v.q_zz.norm() > eq_tol || v.q_zzbar < margin);
    Ok(SequenceReport {
        min_q_zzbar,
        max_abs_q_zz,
        bounded_in_domain: first_violation.is_none(),
        first_violation,
        points: verdicts,
    })
}
