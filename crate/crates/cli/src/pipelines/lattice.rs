use hodgekit::lattice::{
    in_period_domain, is_generic_period, moduli_dimension, mukai_lattice, mukai_vector, orth_complement,
    projectivity_witness, sequence_domain_check, stability_compare, Complement, DomainVerdict, GenericityVerdict,
    IntegralLattice, ModuliDimension, MukaiVector, SequenceReport, SlopeComparison,
};
use hodgekit::Tolerances;
use serde::Serialize;
use serde_json::Value;

use super::{complex, complex_vec, to_value};
use crate::error::CliError;
use crate::report::Check;
use crate::scenario::{LatticeChecks, LatticeSpec, PeriodCase};

fn build(spec: &LatticeSpec) -> Result<IntegralLattice, CliError> {
    Ok(match spec {
        LatticeSpec::Preset(name) => IntegralLattice::preset(name)?,
        LatticeSpec::Gram(g) => IntegralLattice::new(g.clone())?,
    })
}

#[derive(Debug, Serialize)]
struct MukaiResult {
    v: MukaiVector,
    moduli: ModuliDimension,
}

#[derive(Debug, Serialize)]
struct SignatureResult {
    rank: usize,
    determinant: i64,
    signature: (usize, usize),
}

#[derive(Debug, Serialize)]
struct PeriodResult {
    domain: DomainVerdict,
    genericity: Option<GenericityVerdict>,
    projectivity: Option<Option<Vec<i64>>>,
}

#[derive(Debug, Serialize)]
struct Results {
    mukai_gram: Option<Vec<Vec<i64>>>,
    mukai: Vec<MukaiResult>,
    complements: Vec<Complement>,
    slopes: Vec<SlopeComparison>,
    signatures: Vec<SignatureResult>,
    periods: Vec<PeriodResult>,
    sequences: Vec<SequenceReport>,
}

fn period(k: usize, case: &PeriodCase, tol: &Tolerances, checks: &mut Vec<Check>) -> Result<PeriodResult, CliError> {
    let l = build(&case.lattice)?;
    let z = complex_vec(&case.z);
    let domain = in_period_domain(&z, &l, tol.eq_tol)?;
    if let Some(want) = case.expect_in_domain {
        checks.push(Check::holds(format!("period {k}: domain membership"), domain.in_domain == want));
    }
    for &s in &case.scales {
        let scaled: Vec<_> = z.iter().map(|x| x * complex(s)).collect();
        let other = in_period_domain(&scaled, &l, tol.eq_tol)?;
        let same = other.in_domain == domain.in_domain && (other.q_zzbar - domain.q_zzbar).abs() <= tol.eq_tol;
        checks.push(Check::holds(format!("period {k}: verdict invariant under scale {s:?}"), same));
    }
    let (genericity, projectivity) = match case.search_bound {
        None => (None, None),
        Some(bound) => {
            let g = is_generic_period(&z, &l, bound, tol.eq_tol)?;
            if let Some(want) = &case.expect_generic_witness {
                checks.push(Check::holds(format!("period {k}: genericity witness"), &g.witness == want));
            }
            let p = projectivity_witness(&z, &l, bound, tol.eq_tol)?;
            if let Some(w) = &p {
                // replay both defining conditions
                let ok = l.pair(w, w)? > 0 && {
                    let zl: hodgekit::Complex64 =
                        (0..l.rank()).map(|i| z[i] * l.form_of(w).map(|f| f[i] as f64).unwrap_or(f64::NAN)).sum();
                    let zn = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                    let wn = w.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
                    zl.norm() <= tol.eq_tol * zn * wn
                };
                checks.push(Check::holds(format!("period {k}: projectivity witness replays"), ok));
            }
            if let Some(want) = &case.expect_projectivity_witness {
                checks.push(Check::holds(format!("period {k}: projectivity witness"), &p == want));
            }
            (Some(g), Some(p))
        }
    };
    Ok(PeriodResult { domain, genericity, projectivity })
}

pub fn lattice(cfg: &LatticeChecks, tol: &Tolerances, checks: &mut Vec<Check>) -> Result<Value, CliError> {
    let ns = cfg.ns.as_ref().map(build).transpose()?;
    let needs_ns = !cfg.mukai.is_empty() || !cfg.complements.is_empty() || !cfg.slopes.is_empty();
    let ns = match (ns, needs_ns) {
        (Some(ns), _) => Some(ns),
        (None, false) => None,
        (None, true) => return Err(CliError::Input("Mukai, complement and slope checks need \"ns\"".into())),
    };
    let mukai_l = ns.as_ref().map(mukai_lattice);

    let mut mukai = Vec::new();
    for (k, m) in cfg.mukai.iter().enumerate() {
        let ns = ns.as_ref().expect("checked");
        if m.c1.len() != ns.rank() {
            return Err(CliError::Input(format!("mukai[{k}]: c1 must have {} entries", ns.rank())));
        }
        let v = mukai_vector(m.r, m.c1.clone(), m.ch2);
        let moduli = moduli_dimension(&v, ns)?;
        if let Some(want) = m.expect_square {
            checks.push(Check::holds(format!("mukai[{k}]: v² = {want}"), moduli.v_squared == want));
        }
        if let Some(want) = m.expect_dimension {
            checks.push(Check::holds(format!("mukai[{k}]: dimension {want}"), moduli.dimension == want));
        }
        mukai.push(MukaiResult { v, moduli });
    }

    let mut complements = Vec::new();
    for (k, c) in cfg.complements.iter().enumerate() {
        let l = mukai_l.as_ref().expect("checked");
        let comp = orth_complement(&c.v, l)?;
        let orthogonal = comp.basis.iter().map(|w| l.pair(&c.v, w)).collect::<Result<Vec<_>, _>>()?;
        checks.push(Check::holds(format!("complement[{k}]: basis pairs to zero"), orthogonal.iter().all(|&x| x == 0)));
        checks.push(Check::holds(format!("complement[{k}]: rank n − 1"), comp.basis.len() + 1 == l.rank()));
        if let Some(want) = &c.expect_basis {
            checks.push(Check::holds(format!("complement[{k}]: basis"), &comp.basis == want));
        }
        if let Some(want) = &c.expect_gram {
            checks.push(Check::holds(format!("complement[{k}]: Gram matrix"), &comp.gram == want));
        }
        complements.push(comp);
    }

    let mut slopes = Vec::new();
    for (k, s) in cfg.slopes.iter().enumerate() {
        let ns = ns.as_ref().expect("checked");
        let cmp = stability_compare((s.sub.0, &s.sub.1), (s.whole.0, &s.whole.1), &s.omega, ns)?;
        // homogeneity in ω
        let doubled: Vec<i64> = s.omega.iter().map(|x| 2 * x).collect();
        let again = stability_compare((s.sub.0, &s.sub.1), (s.whole.0, &s.whole.1), &doubled, ns)?;
        checks.push(Check::holds(format!("slope[{k}]: invariant under ω ↦ 2ω"), again.ordering == cmp.ordering));
        if let Some(want) = s.expect_strictly_smaller {
            checks.push(Check::holds(format!("slope[{k}]: μ(sub) < μ(whole) is {want}"), cmp.strictly_smaller == want));
        }
        slopes.push(cmp);
    }

    let mut signatures = Vec::new();
    for (k, s) in cfg.signatures.iter().enumerate() {
        let l = build(&s.lattice)?;
        let signature = l.signature();
        checks.push(Check::holds(format!("signature[{k}]: {:?}", s.expect), signature == s.expect));
        signatures.push(SignatureResult { rank: l.rank(), determinant: l.determinant()?, signature });
    }

    let periods = cfg.periods.iter().enumerate().map(|(k, c)| period(k, c, tol, checks)).collect::<Result<Vec<_>, _>>()?;

    let mut sequences = Vec::new();
    for (k, s) in cfg.sequences.iter().enumerate() {
        let l = build(&s.lattice)?;
        let pts: Vec<_> = s.points.iter().map(|p| complex_vec(p)).collect();
        let rep = sequence_domain_check(&pts, &l, s.margin, tol.eq_tol)?;
        if let Some(want) = s.expect_bounded {
            checks.push(Check::holds(format!("sequence[{k}]: bounded in domain is {want}"), rep.bounded_in_domain == want));
        }
        if let Some(want) = s.expect_first_violation {
            checks.push(Check::holds(format!("sequence[{k}]: first violation {want:?}"), rep.first_violation == want));
        }
        sequences.push(rep);
    }

    to_value(&Results {
        mukai_gram: mukai_l.map(|l| l.gram().to_vec()),
        mukai,
        complements,
        slopes,
        signatures,
        periods,
        sequences,
    })
}
