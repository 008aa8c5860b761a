use hodgekit::dolbeault::{DglaData, TorusConfig};
use hodgekit::linalg::MatrixRows;
use hodgekit::period::PolyBlockCurve;
use hodgekit::Tolerances;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// A complex number as `[re, im]`.
pub type C = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(flatten)]
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "config", rename_all = "kebab-case")]
pub enum Payload {
    TorusDeform(TorusDeform),
    DglaSolve(DglaSolve),
    PeriodMap(PeriodMap),
    KahlerContinue(KahlerContinue),
    Lattice(LatticeChecks),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::TorusDeform(_) => "torus-deform",
            Payload::DglaSolve(_) => "dgla-solve",
            Payload::PeriodMap(_) => "period-map",
            Payload::KahlerContinue(_) => "kahler-continue",
            Payload::Lattice(_) => "lattice",
        }
    }

    fn randomized(&self) -> bool {
        match self {
            Payload::TorusDeform(_) | Payload::DglaSolve(_) => true,
            Payload::PeriodMap(p) => p.torus.is_some() || p.purity.is_some() || p.stability.is_some(),
            Payload::KahlerContinue(k) => matches!(&k.curve, CurveSpec::Torus(t) if t.beltrami.random.is_some()),
            Payload::Lattice(_) => false,
        }
    }

    fn degree_mut(&mut self) -> Option<&mut u32> {
        match self {
            Payload::TorusDeform(t) => Some(&mut t.degree),
            Payload::DglaSolve(d) => Some(&mut d.degree),
            _ => None,
        }
    }
}

fn d100() -> usize {
    100
}

fn d200() -> usize {
    200
}

fn d10() -> usize {
    10
}

/// Kuranishi solve on a flat torus with harmonic `θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusDeform {
    pub torus: TorusConfig,
    pub degree: u32,
    /// Indices into the harmonic degree-1 basis; all of it when absent.
    #[serde(default)]
    pub theta: Option<Vec<usize>>,
    pub samples: Vec<Vec<C>>,
    #[serde(default = "d100")]
    pub validation_samples: usize,
    #[serde(default = "d200")]
    pub probe_samples: usize,
    #[serde(default = "d10")]
    pub estimate_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scaling {
    /// Point `t`; the residual there is compared with the one at `t/2`.
    pub t: Vec<C>,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DglaSolve {
    pub dgla: DglaData,
    pub degree: u32,
    #[serde(default)]
    pub theta: Option<Vec<usize>>,
    pub samples: Vec<Vec<C>>,
    pub expect_unobstructed: bool,
    #[serde(default)]
    pub scaling: Option<Scaling>,
    #[serde(default = "d100")]
    pub validation_samples: usize,
    #[serde(default = "d200")]
    pub probe_samples: usize,
    #[serde(default = "d10")]
    pub estimate_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusPeriod {
    pub torus: TorusConfig,
    pub random_beltrami: usize,
    pub max_norm: f64,
    pub kuranishi_degree: u32,
    pub transversality_points: Vec<Vec<C>>,
    pub fd_step: f64,
    pub gauge_shift: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCurve {
    pub curve: PolyBlockCurve,
    pub points: Vec<C>,
    pub fd_step: f64,
    /// A curve violating transversality; the check must flag it.
    #[serde(default)]
    pub injected: Option<PolyBlockCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Purity {
    pub triples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stability {
    /// Gains of `Φ^{0,1}`, `Φ^{0,2}`, `Φ^{1,2}` in the scalar frame.
    pub gains: [C; 3],
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodMap {
    #[serde(default)]
    pub torus: Option<TorusPeriod>,
    #[serde(default)]
    pub synthetic: Option<SyntheticCurve>,
    #[serde(default)]
    pub purity: Option<Purity>,
    #[serde(default)]
    pub stability: Option<Stability>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parameter {
    /// Blocks are the polynomial evaluated at real `t`.
    Real,
    /// Blocks are the polynomial evaluated at `e^{it}`.
    Circle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyPath {
    pub curve: PolyBlockCurve,
    pub parameter: Parameter,
    pub seed_class: Vec<C>,
}

/// `c · ∂_vector ⊗ dz̄_antiholomorphic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeltramiTerm {
    pub vector: usize,
    pub antiholomorphic: usize,
    pub value: C,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBeltrami {
    /// Supremum operator norm of the random part.
    pub sup_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeltramiSpec {
    #[serde(default)]
    pub constant: Vec<BeltramiTerm>,
    /// Non-constant perturbation, used only by the metric check: `t·φ` is
    /// integrable only for constant `φ`, so the transport curve ignores it.
    #[serde(default)]
    pub random: Option<RandomBeltrami>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusPath {
    pub torus: TorusConfig,
    /// `φ(t) = t · beltrami.constant`.
    pub beltrami: BeltramiSpec,
    /// Hermitian `H` of the Kähler seed `i Σ H_jk dz_j ∧ dz̄_k`.
    pub hermitian: MatrixRows,
    pub metric_grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveSpec {
    Polynomial(PolyPath),
    Torus(TorusPath),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KahlerContinue {
    pub curve: CurveSpec,
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    /// The path is a closed loop; require `α₀(t1) = α₀(t0)`.
    #[serde(default)]
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LatticeSpec {
    Preset(String),
    Gram(Vec<Vec<i64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MukaiCase {
    pub r: i64,
    pub c1: Vec<i64>,
    pub ch2: i64,
    #[serde(default)]
    pub expect_square: Option<i64>,
    #[serde(default)]
    pub expect_dimension: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplementCase {
    pub v: Vec<i64>,
    #[serde(default)]
    pub expect_basis: Option<Vec<Vec<i64>>>,
    #[serde(default)]
    pub expect_gram: Option<Vec<Vec<i64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeCase {
    pub sub: (i64, Vec<i64>),
    pub whole: (i64, Vec<i64>),
    pub omega: Vec<i64>,
    #[serde(default)]
    pub expect_strictly_smaller: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodCase {
    pub lattice: LatticeSpec,
    pub z: Vec<C>,
    #[serde(default)]
    pub expect_in_domain: Option<bool>,
    #[serde(default)]
    pub search_bound: Option<i64>,
    /// Expected genericity witness; `null` means generic within the bound.
    #[serde(default, with = "double_option")]
    pub expect_generic_witness: Option<Option<Vec<i64>>>,
    #[serde(default, with = "double_option")]
    pub expect_projectivity_witness: Option<Option<Vec<i64>>>,
    /// Rescale `z` by these factors and require identical verdicts.
    #[serde(default)]
    pub scales: Vec<C>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceCase {
    pub lattice: LatticeSpec,
    pub points: Vec<Vec<C>>,
    pub margin: f64,
    #[serde(default)]
    pub expect_bounded: Option<bool>,
    #[serde(default, with = "double_option")]
    pub expect_first_violation: Option<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureCase {
    pub lattice: LatticeSpec,
    pub expect: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeChecks {
    /// Néron–Severi lattice of the Mukai computations.
    #[serde(default)]
    pub ns: Option<LatticeSpec>,
    #[serde(default)]
    pub mukai: Vec<MukaiCase>,
    #[serde(default)]
    pub complements: Vec<ComplementCase>,
    #[serde(default)]
    pub slopes: Vec<SlopeCase>,
    #[serde(default)]
    pub signatures: Vec<SignatureCase>,
    #[serde(default)]
    pub periods: Vec<PeriodCase>,
    #[serde(default)]
    pub sequences: Vec<SequenceCase>,
}

/// Distinguishes an absent field from an explicit `null`.
mod double_option {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<T: Serialize, S: Serializer>(v: &Option<Option<T>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(inner) => inner.serialize(s),
        }
    }

    pub fn deserialize<'de, T: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<Option<Option<T>>, D::Error> {
        Option::<T>::deserialize(d).map(Some)
    }
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub degree: Option<u32>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| {
            CliError::Input(format!("malformed scenario at line {}, column {}: {e}", e.line(), e.column()))
        })?;
        Ok(s)
    }

    pub fn apply(mut self, o: &Overrides) -> Result<Self, CliError> {
        if let Some(seed) = o.seed {
            self.seed = Some(seed);
        }
        if let Some(tol) = o.tol {
            self.tolerances = self.tolerances.with_eq_tol(tol);
        }
        if let Some(m) = o.degree {
            let kind = self.payload.kind();
            *self
                .payload
                .degree_mut()
                .ok_or_else(|| CliError::Input(format!("--degree does not apply to {kind} scenarios")))? = m;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Input(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.tolerances.validate()?;
        if self.payload.randomized() && self.seed.is_none() {
            return Err(CliError::Input(format!(
                "scenario {:?} uses random sampling and must set \"seed\" (or pass --seed)",
                self.name
            )));
        }
        Ok(())
    }

    /// Seed of a randomized scenario; validated to exist.
    pub fn rng_seed(&self) -> u64 {
        self.seed.unwrap_or_default()
    }
}
