use hodgekit::dolbeault::{DolbeaultComplex, FormKind};
use hodgekit::kuranishi::solve_kuranishi;
use hodgekit::linalg::{c64, CMatrix};
use hodgekit::period::{
    gauge_defect, purity_determinant, quasi_period, stability_radius, transversality_check, PolyBlockCurve, RadiusReport,
    SyntheticScalarFrame, TorusFrame,
};
use hodgekit::{BlockUpperUnipotent, Complex64, Linear, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use super::{complex, complex_vec, to_value};
use crate::error::CliError;
use crate::report::Check;
use crate::scenario::{PeriodMap, Purity, Stability, SyntheticCurve, TorusPeriod};

#[derive(Debug, Serialize)]
struct BoundSample {
    norm: f64,
    b01: f64,
    b02: f64,
    b12: f64,
    linear_bound: f64,
    quadratic_bound: f64,
}

#[derive(Debug, Serialize)]
struct TorusResults {
    frame_defect: f64,
    samples: Vec<BoundSample>,
    violations: usize,
    transversality: Vec<f64>,
    gauge_defect: f64,
}

fn torus(cfg: &TorusPeriod, seed: u64, checks: &mut Vec<Check>) -> Result<TorusResults, CliError> {
    if !(cfg.max_norm > 0.0 && cfg.max_norm < 1.0) {
        return Err(CliError::Input("max_norm must lie in (0, 1)".into()));
    }
    let b = cfg.torus.build()?;
    let frame = TorusFrame::new(&b);
    let frame_defect = frame.validate()?;
    checks.push(Check::at_most("Hodge frame orthonormal and harmonic", frame_defect, 1e-10));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(cfg.random_beltrami);
    let mut first = None;
    for _ in 0..cfg.random_beltrami {
        let phi = b.random_kind(FormKind::Vector { q: 1 }, &mut rng);
        let target: f64 = rng.random_range(0.0..=cfg.max_norm);
        let phi = phi.scaled(c64(target / b.norm(&phi), 0.0));
        let n = b.norm(&phi);
        let (b01, b02, b12) = quasi_period(&phi, &frame)?.magnitudes();
        if first.is_none() {
            first = Some(phi);
        }
        samples.push(BoundSample {
            norm: n,
            b01,
            b02,
            b12,
            linear_bound: n / (1.0 - n),
            quadratic_bound: n * n / (1.0 - n),
        });
    }
    let violations = samples
        .iter()
        .filter(|s| s.b01 > s.linear_bound || s.b12 > s.linear_bound || s.b02 > s.quadratic_bound)
        .count();
    checks.push(Check::at_most("block bounds: violations", violations as f64, 0.0));

    let phi = solve_kuranishi(&b, b.harmonic_basis(1), cfg.kuranishi_degree)?;
    let curve = |t: &[Complex64]| quasi_period(&phi.eval(t)?, &frame);
    let transversality = cfg
        .transversality_points
        .iter()
        .map(|t| Ok(transversality_check(curve, &complex_vec(t), cfg.fd_step)?.max))
        .collect::<Result<Vec<f64>, CliError>>()?;
    checks.push(Check::at_most(
        "transversality of the Kuranishi block curve",
        transversality.iter().copied().fold(0.0, f64::max),
        1e-8,
    ));

    let gauge = match first {
        Some(phi) => gauge_defect(&phi, &frame, &cfg.gauge_shift)?,
        None => 0.0,
    };
    checks.push(Check::at_most("blocks invariant under translation", gauge, 1e-12));
    Ok(TorusResults { frame_defect, samples, violations, transversality, gauge_defect: gauge })
}

#[derive(Debug, Serialize)]
struct SyntheticResults {
    residuals: Vec<f64>,
    injected: Option<Vec<f64>>,
}

fn synthetic(cfg: &SyntheticCurve, tol: &Tolerances, checks: &mut Vec<Check>) -> Result<SyntheticResults, CliError> {
    let run = |c: &PolyBlockCurve| -> Result<Vec<f64>, CliError> {
        if c.hodge_numbers().0 == 0 {
            return Err(CliError::Input("block curve needs h20 ≥ 1".into()));
        }
        let f = |t: &[Complex64]| c.at(t[0]);
        cfg.points.iter().map(|&p| Ok(transversality_check(f, &[complex(p)], cfg.fd_step)?.max)).collect()
    };
    let residuals = run(&cfg.curve)?;
    checks.push(Check::at_most("synthetic curve transversality", residuals.iter().copied().fold(0.0, f64::max), 1e-10));
    let injected = match &cfg.injected {
        None => None,
        Some(c) => {
            let r = run(c)?;
            let detected = r.iter().copied().fold(f64::INFINITY, f64::min);
            checks.push(Check::at_least("injected violation detected", detected, tol.fd_tol));
            Some(r)
        }
    };
    Ok(SyntheticResults { residuals, injected })
}

#[derive(Debug, Serialize)]
struct PurityResults {
    triples: usize,
    max_deviation: f64,
    identity_determinant: Complex64,
}

fn purity(cfg: &Purity, seed: u64, checks: &mut Vec<Check>) -> Result<PurityResults, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut draw = || c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let one = |z| CMatrix::from_element(1, 1, z);
    let mut max_deviation = 0.0f64;
    for _ in 0..cfg.triples {
        let (a, b, c) = (draw(), draw(), draw());
        let closed = 1.0 - a.conj() * c + a * b.conj() * c - b.norm_sqr();
        let blocks = BlockUpperUnipotent::new(one(a), one(b), one(c))?;
        max_deviation = max_deviation.max((purity_determinant(&blocks) - closed).norm());
    }
    checks.push(Check::at_most("purity determinant vs closed form", max_deviation, 1e-12));
    let identity_determinant = purity_determinant(&BlockUpperUnipotent::identity(1, 1));
    checks.push(Check::holds("zero blocks give determinant 1", identity_determinant == c64(1.0, 0.0)));
    Ok(PurityResults { triples: cfg.triples, max_deviation, identity_determinant })
}

fn stability(cfg: &Stability, tol: &Tolerances, seed: u64, checks: &mut Vec<Check>) -> Result<RadiusReport, CliError> {
    let [g01, g02, g12] = cfg.gains.map(complex);
    let frame = SyntheticScalarFrame::new(g01, g02, g12)?;
    let rep = stability_radius(&frame, cfg.trials, seed, tol.pd_margin)?;
    checks.push(Check::at_least("purity radius positive", rep.radius, f64::MIN_POSITIVE));
    Ok(rep)
}

#[derive(Debug, Serialize)]
struct Results {
    torus: Option<TorusResults>,
    synthetic: Option<SyntheticResults>,
    purity: Option<PurityResults>,
    stability: Option<RadiusReport>,
}

pub fn period_map(cfg: &PeriodMap, tol: &Tolerances, seed: u64, checks: &mut Vec<Check>) -> Result<Value, CliError> {
    if cfg.torus.is_none() && cfg.synthetic.is_none() && cfg.purity.is_none() && cfg.stability.is_none() {
        return Err(CliError::Input("period-map scenario has no sections".into()));
    }
    let results = Results {
        torus: cfg.torus.as_ref().map(|c| torus(c, seed, checks)).transpose()?,
        synthetic: cfg.synthetic.as_ref().map(|c| synthetic(c, tol, checks)).transpose()?,
        purity: cfg.purity.as_ref().map(|c| purity(c, seed, checks)).transpose()?,
        stability: cfg.stability.as_ref().map(|c| stability(c, tol, seed, checks)).transpose()?,
    };
    to_value(&results)
}
