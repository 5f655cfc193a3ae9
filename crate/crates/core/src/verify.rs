//! Verification suites shared by the command-line driver and the
//! acceptance tests. Each suite returns one row per check.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::capacity::{self, CapacityStatus};
use crate::constructions::{self, LengthsRule, CantorWeightParams};
use crate::error::Result;
use crate::geometry::{Arc, CirclePoint};
use crate::holomorphic::{self, BoundaryFunction};
use crate::measures::{Atom, BaseSet, Density, Measure};
use crate::quad::Tolerance;
use crate::uniqueness::{self, CapSource, Classification, KmOptions};

/// One check: `passed` iff `deviation <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub label: String,
    pub value: f64,
    pub reference: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CaseResult {
    pub fn compare(label: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        let deviation = (value - reference).abs();
        CaseResult {
            label: label.into(),
            value,
            reference,
            deviation,
            tolerance,
            passed: deviation <= tolerance,
            detail: None,
        }
    }

    /// `value <= bound`.
    pub fn at_most(label: impl Into<String>, value: f64, bound: f64) -> Self {
        CaseResult {
            label: label.into(),
            value,
            reference: bound,
            deviation: value,
            tolerance: bound,
            passed: value <= bound,
            detail: None,
        }
    }

    pub fn flag(label: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        let v = if passed { 1.0 } else { 0.0 };
        CaseResult {
            label: label.into(),
            value: v,
            reference: 1.0,
            deviation: 1.0 - v,
            tolerance: 0.0,
            passed,
            detail: Some(detail.into()),
        }
    }

    fn with_value(mut self, value: f64) -> Self {
        self.value = value;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    #[serde(skip)]
    pub seconds: f64,
    pub cases: Vec<CaseResult>,
}

impl SuiteReport {
    fn finish(suite: &str, start: Instant, cases: Vec<CaseResult>) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            passed: !cases.is_empty() && cases.iter().all(|c| c.passed),
            seconds: start.elapsed().as_secs_f64(),
            cases,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| !c.passed)
    }
}

fn distance_power(alpha: f64, points: Vec<f64>, cantor: Vec<constructions::CantorSpec>, scale: f64) -> Result<Measure> {
    Measure::new(vec![], Density::DistancePower { alpha, base: BaseSet { points, cantor }, scale }, 0.0)
}

/// Twenty measures covering every density kind and every construction.
pub fn measure_corpus() -> Result<Vec<(String, Measure)>> {
    let cantor = |q: f64, levels: u32, start: f64| constructions::CantorSpec {
        lengths: LengthsRule::Geometric { q },
        levels,
        base_arc: Arc::new(start, 1.0).expect("unit arc"),
    };
    let spaced: Vec<Atom> = (0..10).map(|k| Atom::new(0.1 + 0.6 * k as f64, 0.05 + 0.01 * k as f64)).collect();
    let three = vec![Atom::new(0.0, 1.0), Atom::new(2.0, 0.5), Atom::new(4.5, 0.25)];
    let gaps = vec![Arc::new(0.2, 0.3)?, Arc::new(1.5, 0.1)?, Arc::new(4.0, 1.2)?];
    let corpus = vec![
        ("lebesgue".to_string(), Measure::lebesgue()),
        ("constant 0.3".into(), Measure::constant(0.3)),
        ("dirac at 0".into(), Measure::dirac(0.0, 1.0)?),
        ("dirac at 2".into(), Measure::dirac(2.0, 0.7)?),
        ("three atoms".into(), Measure::new(three.clone(), Density::Zero, 0.0)?),
        ("ten atoms".into(), Measure::new(spaced, Density::Zero, 0.0)?),
        ("atoms plus constant".into(), Measure::new(three, Density::Constant { value: 0.5 }, 0.0)?),
        ("um0 eps 0.01".into(), constructions::um0_measure(0.01, 200, 60)?.measure),
        ("um0 eps 0.005".into(), constructions::um0_measure(0.005, 100, 40)?.measure),
        ("lemcap a 1/8".into(), constructions::lemcap_measure(0.3, 0.125, 60)?),
        ("lemcap a 1/4".into(), constructions::lemcap_measure(2.0, 0.25, 60)?),
        ("lemcap a 2^-10".into(), constructions::lemcap_measure(5.0, 2f64.powi(-10), 60)?),
        ("distance power point".into(), distance_power(0.5, vec![1.0], vec![], 1.0)?),
        ("distance power two points".into(), distance_power(0.25, vec![0.5, 3.5], vec![], 2.0)?),
        ("distance power cantor q 4".into(), distance_power(0.5, vec![], vec![cantor(4.0, 8, PI)], 1.0)?),
        ("distance power cantor q 3".into(), distance_power(0.3, vec![], vec![cantor(3.0, 6, 0.5)], 1.0)?),
        ("noncarleson loglog".into(), constructions::noncarleson_loglog_measure(1000)?),
        ("noncarleson three gaps".into(), constructions::noncarleson_arc_measure(&gaps)?),
        ("lebesgue plus lemcap".into(), Measure::lebesgue().plus(&constructions::lemcap_measure(1.0, 0.125, 60)?)?),
        ("distance power scaled".into(), distance_power(0.5, vec![1.0], vec![], 3.0)?),
    ];
    Ok(corpus)
}

/// Ten corpus measures used for the energy cross-check.
pub fn energy_corpus() -> Result<Vec<(String, Measure)>> {
    let pick = [
        "lebesgue",
        "constant 0.3",
        "dirac at 0",
        "three atoms",
        "atoms plus constant",
        "um0 eps 0.01",
        "lemcap a 1/8",
        "distance power point",
        "distance power cantor q 4",
        "noncarleson three gaps",
    ];
    let all = measure_corpus()?;
    Ok(pick
        .iter()
        .map(|name| all.iter().find(|(n, _)| n == name).expect("corpus name").clone())
        .collect())
}

/// `P_μ(0)` against the total mass.
pub fn poisson_normalization(tol: &Tolerance) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut cases = Vec::new();
    for (name, mu) in measure_corpus()? {
        let p = mu.poisson(Complex64::new(0.0, 0.0), tol)?;
        cases.push(CaseResult::compare(name, p.value, mu.total_mass().value, 1e-10));
    }
    Ok(SuiteReport::finish("poisson-normalization", start, cases))
}

/// Boundary and area energies of `zⁿ` agree with each other and with
/// `n·μ(𝕋)`.
pub fn douglas(n_lo: usize, n_hi: usize, tol: &Tolerance) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut cases = Vec::new();
    for (name, mu) in energy_corpus()? {
        let mass = mu.total_mass().value;
        for n in n_lo..=n_hi {
            let f = BoundaryFunction::monomial(n);
            let b = holomorphic::dirichlet_energy_boundary(&f, &mu, tol)?.value;
            let a = holomorphic::dirichlet_energy_area(&f, &mu, tol)?.value;
            let exact = n as f64 * mass;
            cases.push(CaseResult::compare(format!("{name}, n={n}: boundary vs area"), b, a, 1e-6 * (1.0 + b.abs())));
            cases.push(CaseResult::compare(format!("{name}, n={n}: boundary vs n·mass"), b, exact, 1e-6));
            cases.push(CaseResult::compare(format!("{name}, n={n}: area vs n·mass"), a, exact, 1e-6));
        }
    }
    Ok(SuiteReport::finish("douglas", start, cases))
}

/// `w(a)·√a` for the atom cluster at `a = 2⁻ᵏ`.
pub fn lemcap_scaling(k_lo: i32, k_hi: i32, tol: &Tolerance) -> Result<SuiteReport> {
    let start = Instant::now();
    let zeta = 0.3;
    let mut cases = Vec::new();
    let mut scaled = Vec::new();
    for k in k_lo..=k_hi {
        let a = 2f64.powi(-k);
        let nu = constructions::lemcap_measure(zeta, a, 60)?;
        let c = capacity::point_capacity(&nu, CirclePoint::new(zeta), &capacity::default_schedule(), tol)?;
        let v = c.w_value * a.sqrt();
        scaled.push(v);
        cases.push(
            CaseResult::flag(format!("a=2^-{k}: finite"), c.status == CapacityStatus::Finite && v.is_finite(), format!("{:?}", c.status))
                .with_value(v),
        );
    }
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    cases.push(CaseResult::at_most("max/min of w·sqrt(a)", max / min, 10.0));
    let tail = &scaled[scaled.len().saturating_sub(5)..];
    let (tmax, tmin) = tail.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), &v| (hi.max(v), lo.min(v)));
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    cases.push(CaseResult::at_most("spread of last 5 points / mean", (tmax - tmin) / mean, 0.05));
    Ok(SuiteReport::finish("lemcap-scaling", start, cases))
}

pub const CRITERION_CHECKPOINTS: [u64; 4] = [1_000, 10_000, 100_000, 1_000_000];

/// The Cantor-weight criterion series diverges to `-∞` and keeps its verdict
/// when every capacity is multiplied by `λ`.
pub fn km_cantor_weight(checkpoints: &[u64], multipliers: &[f64], tol: &Tolerance) -> Result<SuiteReport> {
    let start = Instant::now();
    let ex = constructions::cantor_weight_example(&CantorWeightParams::new(0.5, LengthsRule::Geometric { q: 4.0 }))?;
    let mut cases = vec![CaseResult::flag(
        "capacity-zero precondition",
        ex.capacity_test.verdict == constructions::CapacityZeroVerdict::CapacityZero,
        format!("{:?}", ex.capacity_test.verdict),
    )];
    for &lambda in multipliers {
        let opts = KmOptions { multiplier: lambda, tol: *tol };
        let r = uniqueness::km_criterion(&ex.measure, &ex.family, &ex.rule, checkpoints, &opts)?;
        let last = r.checkpoints.last().map_or(f64::NAN, |c| c.value);
        cases.push(
            CaseResult::flag(
                format!("lambda={lambda}: diverges to -inf"),
                r.classification == Classification::DivergesToMinusInfinity,
                format!("{:?}", r.classification),
            )
            .with_value(last),
        );
    }
    Ok(SuiteReport::finish("km-cantor-weight", start, cases))
}

pub const PROBE_SEED: u64 = 20_240_601;
pub const PROBE_COUNT: usize = 50;

/// Empirical Poincaré constants over the probe corpus: finite, positive,
/// invariant under `f ↦ 5f` and under a common rotation.
pub fn poincare(gamma: f64, tol: &Tolerance) -> Result<SuiteReport> {
    let start = Instant::now();
    let phi = 0.7;
    let mut cases = Vec::new();
    for (i, case) in uniqueness::probe_corpus(PROBE_COUNT, PROBE_SEED).into_iter().enumerate() {
        let probe = |c: &uniqueness::ProbeCase, f: &BoundaryFunction| {
            uniqueness::poincare_probe(f, &c.e0, &c.arc, gamma, &c.mu, CapSource::MassLowerBound, tol)
        };
        let base = probe(&case, &case.f)?.kappa;
        cases.push(
            CaseResult::flag(format!("case {i}: finite and positive"), base.is_finite() && base > 0.0, "kappa")
                .with_value(base),
        );
        let scaled = probe(&case, &case.f.scaled(Complex64::new(5.0, 0.0)))?.kappa;
        cases.push(CaseResult::compare(format!("case {i}: f -> 5f"), scaled, base, 1e-12 * base.abs()));
        let rot = case.rotated(phi)?;
        let turned = probe(&rot, &rot.f)?.kappa;
        cases.push(CaseResult::compare(format!("case {i}: rotation"), turned, base, 1e-9 * base.abs()));
    }
    Ok(SuiteReport::finish("poincare", start, cases))
}
