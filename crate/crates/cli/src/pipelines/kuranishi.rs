use hodgekit::dolbeault::{
    harmonic_norm_ratio, operator_norm_probe, validate, DglaBackend, DolbeaultComplex, ValidationReport,
};
use hodgekit::kuranishi::{
    closedness_defect, majorant, solve_kuranishi, verify_estimates, volume_family, BeltramiSeries, EstimateReport,
};
use hodgekit::series::MultiIndex;
use hodgekit::{Complex64, Linear, Tolerances};
use serde::Serialize;
use serde_json::Value;

use super::{complex_vec, to_value};
use crate::error::CliError;
use crate::report::Check;
use crate::scenario::{DglaSolve, TorusDeform};

#[derive(Debug, Serialize)]
struct Coefficient {
    index: Vec<u32>,
    norm: f64,
}

#[derive(Debug, Serialize)]
struct ResidualSample {
    t: Vec<Complex64>,
    value: f64,
    warning: Option<String>,
}

#[derive(Debug, Serialize)]
struct Domination {
    direction: Vec<Complex64>,
    homogeneous_norms: Vec<f64>,
    majorant: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct Summary {
    validation: ValidationReport,
    harmonic_dimension: usize,
    theta_count: usize,
    degree: u32,
    operator_constant: f64,
    linear_bound: f64,
    radius: f64,
    coefficient_norms: Vec<Coefficient>,
    obstruction_norms: Vec<Coefficient>,
    recursion_defect: f64,
    residuals: Vec<ResidualSample>,
    domination: Vec<Domination>,
    estimates: EstimateReport,
    min_margins: [f64; 3],
}

struct Common {
    validation_samples: usize,
    probe_samples: usize,
    estimate_samples: usize,
    degree: u32,
}

fn unit_directions(samples: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    samples
        .iter()
        .filter_map(|t| {
            let n = t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            (n > 0.0).then(|| t.iter().map(|z| z / n).collect())
        })
        .collect()
}

fn select<B: DolbeaultComplex>(b: &B, theta: &Option<Vec<usize>>) -> Result<(usize, Vec<B::Form>), CliError> {
    let basis = b.harmonic_basis(1);
    let n = basis.len();
    let chosen = match theta {
        None => basis,
        Some(idx) => idx
            .iter()
            .map(|&i| {
                basis
                    .get(i)
                    .cloned()
                    .ok_or_else(|| CliError::Input(format!("θ index {i} out of range (harmonic dimension {n})")))
            })
            .collect::<Result<_, _>>()?,
    };
    Ok((n, chosen))
}

fn norms_of<B: DolbeaultComplex>(b: &B, it: &hodgekit::TruncatedSeries<B::Form>) -> Vec<Coefficient> {
    it.iter().map(|(i, v)| Coefficient { index: i.exponents().to_vec(), norm: b.l2_norm(v) }).collect()
}

/// Operator validation, the Kuranishi solve, residuals, majorant domination
/// and the norm estimates, shared by the torus and DGLA scenarios.
fn common<'a, B: DolbeaultComplex>(
    b: &'a B,
    theta: Vec<B::Form>,
    harmonic_dimension: usize,
    samples: &[Vec<Complex64>],
    cfg: &Common,
    tol: &Tolerances,
    seed: u64,
    checks: &mut Vec<Check>,
) -> Result<(BeltramiSeries<'a, B>, Summary), CliError> {
    let dirs = unit_directions(samples);
    if dirs.is_empty() {
        return Err(CliError::Input("at least one nonzero sample point is required".into()));
    }
    if samples.iter().any(|t| t.len() != theta.len()) {
        return Err(CliError::Input(format!("sample points must have {} coordinates", theta.len())));
    }
    let validation = validate(b, cfg.validation_samples, seed, tol.eq_tol)?;
    checks.push(Check::holds("operator identities (∂̄², adjointness, H + ΔG)", validation.passed()));

    let theta_count = theta.len();
    let probe = operator_norm_probe(b, cfg.probe_samples, seed)?;
    let phi = solve_kuranishi(b, theta, cfg.degree)?.with_operator_constant(probe.constant);

    let linear_defect = phi
        .theta()
        .iter()
        .enumerate()
        .map(|(j, th)| {
            let mut d = phi.series().coefficient(&MultiIndex::unit(theta_count, j));
            d.axpy(Complex64::new(-1.0, 0.0), th);
            b.l2_norm(&d)
        })
        .fold(0.0, f64::max);
    checks.push(Check::at_most("degree-1 part equals θ", linear_defect, 0.0));

    let recursion_defect = phi.recursion_defect()?;
    checks.push(Check::at_most("order-by-order Maurer–Cartan identity", recursion_defect, tol.eq_tol));

    let residuals = samples
        .iter()
        .map(|t| {
            let r = phi.mc_residual(t)?;
            Ok(ResidualSample { t: t.clone(), value: r.value, warning: r.warning })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let x = majorant(probe.constant, phi.linear_bound(), cfg.degree as usize)?;
    let majorant_coeffs: Vec<f64> = (1..=cfg.degree as usize).map(|k| x.coefficient(k)).collect();
    let mut domination = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for u in &dirs {
        let norms = phi.homogeneous_norms(u)?;
        for (n, m) in norms.iter().zip(&majorant_coeffs) {
            worst = worst.max(n - m * (1.0 + 1e-12));
        }
        domination.push(Domination { direction: u.clone(), homogeneous_norms: norms, majorant: majorant_coeffs.clone() });
    }
    checks.push(Check::at_most("majorant dominates ‖φ_μ‖", worst, 0.0));

    let family = volume_family(&phi, b.volume_form())?;
    let c_one = harmonic_norm_ratio(b)?;
    let scale = if phi.radius().is_finite() {
        phi.radius()
    } else {
        samples.iter().map(|t| t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).fold(0.0, f64::max)
    };
    let n = cfg.estimate_samples.max(1);
    let points: Vec<Vec<Complex64>> = (1..=n)
        .map(|k| dirs[(k - 1) % dirs.len()].iter().map(|z| z * (scale * k as f64 / (n + 1) as f64)).collect())
        .collect();
    let estimates = verify_estimates(&phi, &family, &points, c_one, tol.eq_tol)?;
    let min = |f: fn(&hodgekit::kuranishi::EstimateSample) -> f64| {
        estimates.samples.iter().map(f).fold(f64::INFINITY, f64::min)
    };
    let min_margins = [min(|s| s.phi_margin), min(|s| s.contraction_margin), min(|s| s.wp_margin)];
    checks.push(Check::holds("norm estimates at in-radius samples", estimates.passed && estimates.skipped.is_empty()));

    let summary = Summary {
        validation,
        harmonic_dimension,
        theta_count,
        degree: cfg.degree,
        operator_constant: probe.constant,
        linear_bound: phi.linear_bound(),
        radius: phi.radius(),
        coefficient_norms: norms_of(b, phi.series()),
        obstruction_norms: norms_of(b, &phi.obstruction_series()?),
        recursion_defect,
        residuals,
        domination,
        estimates,
        min_margins,
    };
    Ok((phi, summary))
}

#[derive(Debug, Serialize)]
struct TorusResults {
    #[serde(flatten)]
    summary: Summary,
    higher_order_max: f64,
    closedness: Vec<f64>,
}

pub fn torus_deform(cfg: &TorusDeform, tol: &Tolerances, seed: u64, checks: &mut Vec<Check>) -> Result<Value, CliError> {
    let b = cfg.torus.build()?;
    let (hdim, theta) = select(&b, &cfg.theta)?;
    let samples: Vec<Vec<Complex64>> = cfg.samples.iter().map(|t| complex_vec(t)).collect();
    let common_cfg = Common {
        validation_samples: cfg.validation_samples,
        probe_samples: cfg.probe_samples,
        estimate_samples: cfg.estimate_samples,
        degree: cfg.degree,
    };
    let (phi, summary) = common(&b, theta, hdim, &samples, &common_cfg, tol, seed, checks)?;

    let higher_order_max = phi
        .series()
        .iter()
        .filter(|(i, _)| i.degree() >= 2)
        .map(|(_, v)| b.l2_norm(v))
        .fold(0.0, f64::max);
    checks.push(Check::at_most("φ_μ = 0 for μ ≥ 2", higher_order_max, tol.eq_tol));
    let obstruction_max = summary.obstruction_norms.iter().map(|c| c.norm).fold(0.0, f64::max);
    checks.push(Check::at_most("obstruction series vanishes", obstruction_max, 0.0));
    let residual_max = summary.residuals.iter().map(|r| r.value).fold(0.0, f64::max);
    checks.push(Check::at_most("Maurer–Cartan residual at samples", residual_max, tol.eq_tol));

    let family = volume_family(&phi, b.volume_form())?;
    let closedness = samples.iter().map(|t| closedness_defect(&b, &family, t)).collect::<Result<Vec<_>, _>>()?;
    checks.push(Check::at_most("dΩ(t) = 0 at samples", closedness.iter().copied().fold(0.0, f64::max), 1e-9));
    to_value(&TorusResults { summary, higher_order_max, closedness })
}

#[derive(Debug, Serialize)]
struct SecondOrder {
    index: Vec<u32>,
    coefficient: Vec<Complex64>,
    single_step: Vec<Complex64>,
    obstruction: Vec<Complex64>,
}

#[derive(Debug, Serialize)]
struct Scaled {
    t: Vec<Complex64>,
    residual: f64,
    residual_half: f64,
    ratio: f64,
    expected: f64,
}

#[derive(Debug, Serialize)]
struct DglaResults {
    dims: [usize; 4],
    #[serde(flatten)]
    summary: Summary,
    second_order: Vec<SecondOrder>,
    scaling: Option<Scaled>,
}

pub fn dgla_solve(cfg: &DglaSolve, tol: &Tolerances, seed: u64, checks: &mut Vec<Check>) -> Result<Value, CliError> {
    let b = DglaBackend::new(&cfg.dgla)?;
    let (hdim, theta) = select(&b, &cfg.theta)?;
    let samples: Vec<Vec<Complex64>> = cfg.samples.iter().map(|t| complex_vec(t)).collect();
    let common_cfg = Common {
        validation_samples: cfg.validation_samples,
        probe_samples: cfg.probe_samples,
        estimate_samples: cfg.estimate_samples,
        degree: cfg.degree,
    };
    let (phi, summary) = common(&b, theta, hdim, &samples, &common_cfg, tol, seed, checks)?;

    let obstruction_max = summary.obstruction_norms.iter().map(|c| c.norm).fold(0.0, f64::max);
    if cfg.expect_unobstructed {
        checks.push(Check::at_most("obstruction series vanishes", obstruction_max, tol.eq_tol));
    } else {
        checks.push(Check::at_least("obstruction detected", obstruction_max, tol.eq_tol));
    }

    // φ_I for |I| = 2 straight from ½∂̄*G of the θ brackets
    let n = phi.nvars();
    let th = phi.theta();
    let obstruction = phi.obstruction_series()?;
    let mut second_order = Vec::new();
    let mut worst = 0.0f64;
    if cfg.degree >= 2 {
        for idx in MultiIndex::all_of_degree(n, 2) {
            let e = idx.exponents();
            let (i, j) = match e.iter().position(|&x| x == 2) {
                Some(i) => (i, i),
                None => {
                    let mut nz = e.iter().enumerate().filter(|(_, &x)| x == 1).map(|(k, _)| k);
                    (nz.next().expect("degree 2"), nz.next().expect("degree 2"))
                }
            };
            let mut s = b.bracket(&th[i], &th[j])?;
            if i != j {
                s.axpy(Complex64::new(1.0, 0.0), &b.bracket(&th[j], &th[i])?);
            }
            let direct = b.dbar_star(&b.green(&s)?)?.scaled(Complex64::new(0.5, 0.0));
            let got = phi.series().coefficient(&idx);
            worst = worst.max((&got.v - &direct.v).norm());
            second_order.push(SecondOrder {
                index: e.to_vec(),
                coefficient: got.v.iter().copied().collect(),
                single_step: direct.v.iter().copied().collect(),
                obstruction: obstruction.coefficient(&idx).v.iter().copied().collect(),
            });
        }
        checks.push(Check::at_most("second order matches single-step evaluation", worst, 1e-12));
    }

    let scaling = match &cfg.scaling {
        None => None,
        Some(sc) => {
            let t = complex_vec(&sc.t);
            let half: Vec<Complex64> = t.iter().map(|z| z * 0.5).collect();
            let residual = phi.mc_residual(&t)?.value;
            let residual_half = phi.mc_residual(&half)?.value;
            let ratio = residual / residual_half;
            let expected = 2f64.powi(cfg.degree as i32 + 1);
            checks.push(Check::at_most("residual halving ratio ≈ 2^{M+1}", (ratio / expected - 1.0).abs(), sc.rel_tol));
            Some(Scaled { t, residual, residual_half, ratio, expected })
        }
    };
    to_value(&DglaResults { dims: b.dims(), summary, second_order, scaling })
}
