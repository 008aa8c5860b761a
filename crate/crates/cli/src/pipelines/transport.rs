use hodgekit::dolbeault::{DolbeaultComplex, FormKind, TorusForm};
use hodgekit::linalg::{c64, matrix_from_rows, min_hermitian_eigenvalue, spectral_norm};
use hodgekit::period::{quasi_period, TorusFrame};
use hodgekit::transport::{
    continue_path, metric_update, positivity_check, transported_class, type_defect, ContinuationReport, KahlerSeed,
    MetricField, PathPoint, PositivityReport,
};
use hodgekit::{BlockUpperUnipotent, Complex64, Linear, Result as HkResult, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use super::{complex, complex_vec, to_value};
use crate::error::CliError;
use crate::report::Check;
use crate::scenario::{BeltramiSpec, CurveSpec, KahlerContinue, Parameter};

#[derive(Debug, Serialize)]
struct Results {
    path: ContinuationReport,
    expected_truncation: Option<usize>,
    closure: Option<f64>,
    refinement_change: Option<f64>,
    type_defects: Option<Vec<f64>>,
    metric: Option<PositivityReport>,
}

/// Nominal index of the first sample with `‖A‖₂ ≥ 1`, by direct evaluation.
fn first_violation<F: Fn(f64) -> HkResult<BlockUpperUnipotent>>(curve: &F, cfg: &KahlerContinue) -> HkResult<Option<usize>> {
    let h = (cfg.t1 - cfg.t0) / cfg.steps as f64;
    for k in 0..=cfg.steps {
        if spectral_norm(&curve(cfg.t0 + h * k as f64)?.a_matrix()) >= 1.0 {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn follow<F>(curve: F, seed: &KahlerSeed, cfg: &KahlerContinue, tol: &Tolerances, checks: &mut Vec<Check>) -> Result<Results, CliError>
where
    F: Fn(f64) -> HkResult<BlockUpperUnipotent>,
{
    let path = continue_path(&curve, seed, cfg.t0, cfg.t1, cfg.steps)?;
    let expected_truncation = first_violation(&curve, cfg)?;
    checks.push(Check::holds("guard stops at the first ‖A‖ ≥ 1 sample", path.truncated_at == expected_truncation));
    let residual = path.points.iter().map(|p| p.residual).fold(0.0, f64::max);
    checks.push(Check::at_most("transport equation residual", residual, tol.eq_tol));
    checks.push(Check::holds("a-priori bound certificate", path.certificate));

    let complete = path.truncated_at.is_none();
    let closure = (cfg.closed && complete).then(|| {
        let (a, b) = (&path.points[0].alpha0, path.endpoint().expect("nonempty path"));
        distance(a, b)
    });
    if cfg.closed {
        checks.push(Check::at_most("loop closure", closure.unwrap_or(f64::INFINITY), 1e-10));
    }
    let refinement_change = if complete {
        let fine = continue_path(&curve, seed, cfg.t0, cfg.t1, 2 * cfg.steps)?;
        let change = match (fine.endpoint(), path.endpoint()) {
            (Some(a), Some(b)) if fine.truncated_at.is_none() => distance(a, b),
            _ => f64::INFINITY,
        };
        checks.push(Check::at_most("endpoint stable under 2× refinement", change, 1e-8));
        Some(change)
    } else {
        None
    };
    Ok(Results { path, expected_truncation, closure, refinement_change, type_defects: None, metric: None })
}

/// The constant part, and the constant part plus the random perturbation.
fn beltrami(
    b: &hodgekit::dolbeault::TorusBackend,
    spec: &BeltramiSpec,
    seed: u64,
) -> Result<(TorusForm, TorusForm), CliError> {
    let d = b.dimension();
    let mut entries = Vec::new();
    for t in &spec.constant {
        if t.vector >= d || t.antiholomorphic >= d {
            return Err(CliError::Input(format!("Beltrami term indices must be < {d}")));
        }
        entries.push((t.vector, 1u32 << (d + t.antiholomorphic), complex(t.value)));
    }
    let phi = TorusForm::constant(d, FormKind::Vector { q: 1 }, &entries)?.resized(b.cutoff());
    let mut perturbed = phi.clone();
    if let Some(r) = &spec.random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = b.random_kind(FormKind::Vector { q: 1 }, &mut rng);
        perturbed.axpy(c64(r.sup_norm / b.norm(&x), 0.0), &x);
    }
    Ok((phi, perturbed))
}

pub fn kahler_continue(
    cfg: &KahlerContinue,
    tol: &Tolerances,
    seed: u64,
    checks: &mut Vec<Check>,
) -> Result<(Value, Vec<PathPoint>), CliError> {
    if cfg.steps == 0 || !(cfg.t1 > cfg.t0) {
        return Err(CliError::Input("need steps ≥ 1 and t1 > t0".into()));
    }
    let results = match &cfg.curve {
        CurveSpec::Polynomial(p) => {
            let ks = KahlerSeed::new(complex_vec(&p.seed_class));
            let curve = |t: f64| match p.parameter {
                Parameter::Real => p.curve.at(c64(t, 0.0)),
                Parameter::Circle => p.curve.at(Complex64::from_polar(1.0, t)),
            };
            follow(curve, &ks, cfg, tol, checks)?
        }
        CurveSpec::Torus(tp) => {
            let b = tp.torus.build()?;
            let frame = TorusFrame::new(&b);
            let algebra = frame.algebra();
            let h = matrix_from_rows(&tp.hermitian, b.dimension(), b.dimension(), "hermitian")?;
            let ks = KahlerSeed::from_hermitian(&b, &h)?;
            let (phi, perturbed) = beltrami(&b, &tp.beltrami, seed)?;
            let curve = |t: f64| quasi_period(&phi.scaled(c64(t, 0.0)), &frame);
            let mut r = follow(curve, &ks, cfg, tol, checks)?;
            let defects = r
                .path
                .points
                .iter()
                .map(|p| type_defect(&transported_class(&p.alpha0, &ks), &curve(p.t)?, &algebra))
                .collect::<HkResult<Vec<f64>>>()?;
            checks.push(Check::at_most("transported class has type (1,1)", defects.iter().copied().fold(0.0, f64::max), 1e-9));
            r.type_defects = Some(defects);

            let t_end = r.path.points.last().map_or(cfg.t0, |p| p.t);
            let field = MetricField::on_torus(&b, &h, &perturbed.scaled(c64(t_end, 0.0)), tp.metric_grid)?;
            let field = field.updated()?;
            let rep = positivity_check(&field);
            let floor = min_hermitian_eigenvalue(&h);
            checks.push(Check::at_least("deformed metric stays positive", rep.min_eigenvalue, floor - 1e-12));
            // spot check of the pointwise series at the first grid point
            if let (Some(g), Some(m)) = (field.metrics.first(), field.beltrami.first()) {
                let again = metric_update(&h, m)?;
                checks.push(Check::at_most("metric update reproducible", (g - again).norm(), 0.0));
            }
            r.metric = Some(rep);
            r
        }
    };
    let points = results.path.points.clone();
    Ok((to_value(&results)?, points))
}
