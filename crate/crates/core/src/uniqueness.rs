//! The arc-family series criterion for uniqueness sets and the capacitary
//! Poincaré probe.
//!
//! For pairwise disjoint arcs `γIₙ` the criterion series is
//! `S_N = Σ_{n≤N} |Iₙ| log(|Iₙ| / c_μ(E∩Iₙ))`; divergence to `-∞` is the
//! sufficient condition for `E` to be a uniqueness set. The set `E` never
//! appears directly: it enters through a [`CapacityRule`].

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{self, CapacityStatus};
use crate::error::{Error, Result};
use crate::geometry::{first_overlap, Arc, CirclePoint};
use crate::holomorphic::{self, BoundaryFunction};
use crate::measures::Measure;
use crate::quad::{Estimate, Tolerance};
use crate::summation::Neumaier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Classification {
    DivergesToMinusInfinity,
    DivergesToPlusInfinity,
    Converges,
    #[default]
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub value: f64,
}

/// Least-squares fit `S_N ≈ intercept + slope · log log N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub intercept: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub checkpoints: Vec<Checkpoint>,
    pub classification: Classification,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_model: Option<FittedModel>,
    /// Index of the first term with zero capacity, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offending_index: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Change per checkpoint decade that counts as a divergent trend.
pub const DECADE_TREND: f64 = 0.01;
/// Relative change between the last two checkpoints that counts as converged.
pub const FLAT_RTOL: f64 = 1e-6;

/// Verdict on partial sums at geometrically spaced checkpoints.
///
/// Converges if the last two checkpoints differ by less than
/// `1e-6·(1 + |S|)`, or if the series was summed to its last term. Diverges
/// to `∓∞` if every consecutive pair moves by more than 0.01 per decade of
/// `N` in the same direction. Otherwise inconclusive.
pub fn classify_series(checkpoints: &[Checkpoint], exhausted: bool) -> Classification {
    if exhausted {
        return Classification::Converges;
    }
    if checkpoints.len() < 2 {
        return Classification::Inconclusive;
    }
    let k = checkpoints.len();
    let (prev, last) = (checkpoints[k - 2], checkpoints[k - 1]);
    if (last.value - prev.value).abs() < FLAT_RTOL * (1.0 + last.value.abs()) {
        return Classification::Converges;
    }
    let rates: Vec<f64> = checkpoints
        .windows(2)
        .map(|w| (w[1].value - w[0].value) / (w[1].n as f64 / w[0].n as f64).log10())
        .collect();
    if rates.iter().all(|&r| r < -DECADE_TREND) {
        Classification::DivergesToMinusInfinity
    } else if rates.iter().all(|&r| r > DECADE_TREND) {
        Classification::DivergesToPlusInfinity
    } else {
        Classification::Inconclusive
    }
}

/// Fit of the partial sums against `log log N` over checkpoints with `N ≥ 3`.
pub fn fit_loglog(checkpoints: &[Checkpoint]) -> Option<FittedModel> {
    let pts: Vec<(f64, f64)> =
        checkpoints.iter().filter(|c| c.n >= 3).map(|c| ((c.n as f64).ln().ln(), c.value)).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(FittedModel { intercept: my - slope * mx, slope })
}

/// Parametric families of arcs `Iₙ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArcGenerator {
    /// `Iₙ` concentric inside `(1/log(n+1), 1/log n)`, `n ≥ 2`, with `shrink`
    /// times its length. Consecutive unshrunk arcs touch, so dilation needs
    /// `shrink < 1`.
    LogLogArcs {
        #[serde(default = "default_shrink")]
        shrink: f64,
    },
    /// Arcs listed explicitly, indexed from 1.
    ExplicitList { arcs: Vec<Arc> },
    /// Consecutive arcs of length `first_length·ratioⁿ` (`n ≥ 0`) separated by
    /// gaps equal to their own length, starting at `start`.
    GeometricArcs { start: f64, first_length: f64, ratio: f64 },
}

fn default_shrink() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcFamilySpec {
    pub generator: ArcGenerator,
    pub gamma: f64,
}

impl ArcFamilySpec {
    /// Index of the first arc.
    pub fn first_index(&self) -> u64 {
        match self.generator {
            ArcGenerator::LogLogArcs { .. } => 2,
            ArcGenerator::ExplicitList { .. } => 1,
            ArcGenerator::GeometricArcs { .. } => 0,
        }
    }

    /// Index of the last arc, for finite families.
    pub fn last_index(&self) -> Option<u64> {
        match &self.generator {
            ArcGenerator::ExplicitList { arcs } => Some(arcs.len() as u64),
            _ => None,
        }
    }

    /// `ln |Iₙ|`, computed without cancellation.
    pub fn ln_length(&self, n: u64) -> f64 {
        match &self.generator {
            ArcGenerator::LogLogArcs { shrink } => {
                let x = n as f64;
                // 1/log n - 1/log(n+1) = log(1 + 1/n) / (log n · log(n+1))
                shrink.ln() + (1.0 / x).ln_1p().ln() - x.ln().ln() - (x + 1.0).ln().ln()
            }
            ArcGenerator::ExplicitList { arcs } => arcs[(n - 1) as usize].length().ln(),
            ArcGenerator::GeometricArcs { first_length, ratio, .. } => first_length.ln() + n as f64 * ratio.ln(),
        }
    }

    pub fn arc(&self, n: u64) -> Result<Arc> {
        match &self.generator {
            ArcGenerator::LogLogArcs { .. } => {
                let x = n as f64;
                let mid = 0.5 * (1.0 / x.ln() + 1.0 / (x + 1.0).ln());
                Arc::centered(mid, self.ln_length(n).exp())
            }
            ArcGenerator::ExplicitList { arcs } => Ok(arcs[(n - 1) as usize]),
            ArcGenerator::GeometricArcs { start, first_length, ratio } => {
                // start of arc n: start + 2·first_length·(1 - rⁿ)/(1 - r)
                let offset = 2.0 * first_length * (1.0 - ratio.powi(n as i32)) / (1.0 - ratio);
                Arc::new(start + offset, first_length * ratio.powi(n as i32))
            }
        }
    }

    /// Checks the parameters and that `γIₙ` are pairwise disjoint for all
    /// indices up to `n_max`.
    pub fn validate(&self, n_max: u64) -> Result<()> {
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidGamma(self.gamma));
        }
        match &self.generator {
            ArcGenerator::LogLogArcs { shrink } => {
                if !(*shrink > 0.0 && *shrink <= 1.0) {
                    return Err(Error::invalid(format!("shrink must lie in (0, 1], got {shrink}")));
                }
            }
            ArcGenerator::ExplicitList { arcs } => {
                if arcs.is_empty() {
                    return Err(Error::invalid("explicit arc list is empty"));
                }
            }
            ArcGenerator::GeometricArcs { first_length, ratio, .. } => {
                if !(*ratio > 0.0 && *ratio < 1.0) || !(*first_length > 0.0) {
                    return Err(Error::invalid("geometric arcs need ratio in (0, 1) and positive first length"));
                }
                if 2.0 * first_length / (1.0 - ratio) >= std::f64::consts::TAU {
                    return Err(Error::invalid("geometric arcs do not fit on the circle"));
                }
            }
        }
        let last = self.last_index().map_or(n_max, |l| l.min(n_max));
        let dilated: Vec<Arc> = (self.first_index()..=last)
            .map(|n| self.arc(n).and_then(|a| a.dilate(self.gamma)))
            .collect::<Result<_>>()?;
        if let Some((i, j)) = first_overlap(&dilated) {
            let first = self.first_index();
            return Err(Error::FamilyInvalid(format!(
                "gamma-dilated arcs {} and {} overlap",
                i as u64 + first,
                j as u64 + first
            )));
        }
        Ok(())
    }
}

/// Source of `c_μ(E ∩ Iₙ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CapacityRule {
    /// `scale · |Iₙ|^exponent`.
    Power {
        #[serde(default = "one")]
        scale: f64,
        exponent: f64,
    },
    /// Arc capacity estimate of the whole arc (`E ⊇ Iₙ`).
    ArcCapacity,
    /// Point capacity estimate at the arc midpoint (`E ∩ Iₙ` a single point).
    PointCapacity,
    /// Values listed per index, starting at the family's first index.
    Explicit { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

/// Running state of a criterion series, enough to resume it bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesState {
    pub next_index: u64,
    pub accumulator: Neumaier,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmOptions {
    /// Multiplies every capacity, to probe constant-factor slack.
    pub multiplier: f64,
    pub tol: Tolerance,
}

impl Default for KmOptions {
    fn default() -> Self {
        KmOptions { multiplier: 1.0, tol: Tolerance::default() }
    }
}

const CHUNK: u64 = 1 << 16;

/// `|Iₙ| log(|Iₙ| / c)` or `None` when the capacity vanishes.
fn criterion_term(
    mu: &Measure,
    family: &ArcFamilySpec,
    rule: &CapacityRule,
    n: u64,
    opts: &KmOptions,
) -> Result<Option<f64>> {
    let ln_len = family.ln_length(n);
    let len = ln_len.exp();
    let ln_cap = match rule {
        CapacityRule::Power { scale, exponent } => scale.ln() + exponent * ln_len,
        CapacityRule::ArcCapacity => capacity::arc_capacity(mu, &family.arc(n)?, &opts.tol)?.cap_scale.ln(),
        CapacityRule::PointCapacity => {
            let c = capacity::point_capacity(mu, family.arc(n)?.midpoint(), &capacity::default_schedule(), &opts.tol)?;
            if c.zero_flag {
                return Ok(None);
            }
            c.cap_scale.ln()
        }
        CapacityRule::Explicit { values } => {
            let idx = (n - family.first_index()) as usize;
            let v = *values
                .get(idx)
                .ok_or_else(|| Error::invalid(format!("no capacity value listed for index {n}")))?;
            if v == 0.0 {
                return Ok(None);
            }
            if !(v > 0.0) {
                return Err(Error::invalid(format!("capacity must be nonnegative, got {v} at index {n}")));
            }
            v.ln()
        }
    };
    let ln_cap = ln_cap + opts.multiplier.ln();
    if ln_cap == f64::NEG_INFINITY {
        return Ok(None);
    }
    Ok(Some(len * (ln_len - ln_cap)))
}

fn validate_checkpoints(checkpoints: &[u64], first: u64) -> Result<()> {
    if checkpoints.is_empty() || checkpoints[0] < first || checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!("checkpoints must be strictly increasing and at least {first}")));
    }
    Ok(())
}

fn check_rule(rule: &CapacityRule, opts: &KmOptions) -> Result<()> {
    if !(opts.multiplier > 0.0 && opts.multiplier.is_finite()) {
        return Err(Error::invalid("capacity multiplier must be positive"));
    }
    if let CapacityRule::Power { scale, exponent } = rule {
        if !(*scale > 0.0 && scale.is_finite() && exponent.is_finite()) {
            return Err(Error::invalid("power capacity rule needs positive scale and finite exponent"));
        }
    }
    Ok(())
}

/// Partial sums of the criterion series at the given checkpoints.
pub fn km_criterion(
    mu: &Measure,
    family: &ArcFamilySpec,
    rule: &CapacityRule,
    checkpoints: &[u64],
    opts: &KmOptions,
) -> Result<DivergenceReport> {
    let start = SeriesState { next_index: family.first_index(), accumulator: Neumaier::new() };
    km_criterion_resume(mu, family, rule, checkpoints, opts, start).map(|(r, _)| r)
}

/// Continues a criterion series from `state`. Checkpoints below
/// `state.next_index` are skipped. Returns the report over the remaining
/// checkpoints and the state after the last one.
pub fn km_criterion_resume(
    mu: &Measure,
    family: &ArcFamilySpec,
    rule: &CapacityRule,
    checkpoints: &[u64],
    opts: &KmOptions,
    state: SeriesState,
) -> Result<(DivergenceReport, SeriesState)> {
    let first = family.first_index();
    validate_checkpoints(checkpoints, first)?;
    check_rule(rule, opts)?;
    let last_index = family.last_index();
    let n_top = last_index.map_or(checkpoints[checkpoints.len() - 1], |l| l.min(checkpoints[checkpoints.len() - 1]));
    family.validate(n_top)?;

    let mut acc = state.accumulator;
    let mut next = state.next_index.max(first);
    let mut report = DivergenceReport::default();
    for &cp in checkpoints {
        let target = last_index.map_or(cp, |l| l.min(cp));
        if cp < next && target < next {
            continue;
        }
        while next <= target {
            let hi = target.min(next + CHUNK - 1);
            let terms: Vec<Result<Option<f64>>> =
                (next..=hi).into_par_iter().map(|n| criterion_term(mu, family, rule, n, opts)).collect();
            for (n, t) in (next..=hi).zip(terms) {
                match t? {
                    Some(v) => acc.add(v),
                    None => {
                        report.classification = Classification::DivergesToMinusInfinity;
                        report.offending_index = Some(n);
                        report.note = Some(format!("capacity of E ∩ I_{n} is zero"));
                        return Ok((report, SeriesState { next_index: n, accumulator: acc }));
                    }
                }
            }
            next = hi + 1;
        }
        report.checkpoints.push(Checkpoint { n: cp, value: acc.total() });
    }
    let exhausted = last_index.is_some_and(|l| next > l);
    report.classification = classify_series(&report.checkpoints, exhausted);
    report.fitted_model = fit_loglog(&report.checkpoints);
    if report.classification == Classification::Converges {
        report.limit = report.checkpoints.last().map(|c| c.value);
    }
    Ok((report, SeriesState { next_index: next, accumulator: acc }))
}

/// Where the capacity in the probe's numerator comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CapSource {
    Fixed { value: f64 },
    /// Largest point-capacity estimate over the points of `E₀`, a lower
    /// bound for the capacity of `E₀` up to constants.
    PointCapacityMax,
    /// `μ(E₀)/(1 + μ(𝕋)^{1/2})²`.
    MassLowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareProbe {
    pub kappa: f64,
    pub average: f64,
    pub capacity: f64,
    pub energy: Estimate,
    pub l2: Estimate,
}

/// Empirical constant
/// `κ = ⟨f⟩²_I · c_μ(E₀) / (D_{γI,𝕋,μ}(f) + (1/2π)∫_{γI}|f|²)`
/// for `f` vanishing on `E₀ ⊂ I`.
pub fn poincare_probe(
    f: &BoundaryFunction,
    e0: &[f64],
    arc: &Arc,
    gamma: f64,
    mu: &Measure,
    source: CapSource,
    tol: &Tolerance,
) -> Result<PoincareProbe> {
    let big = arc.dilate(gamma)?;
    if f.is_zero() {
        return Err(Error::DegenerateDenominator);
    }
    if e0.is_empty() {
        return Err(Error::invalid("E0 must contain at least one point"));
    }
    for &t in e0 {
        if !arc.contains(t) {
            return Err(Error::invalid(format!("E0 point {t} is not inside the arc")));
        }
        let v = f.eval(CirclePoint::new(t).to_complex()).norm();
        if v > 1e-12 {
            return Err(Error::invalid(format!("f does not vanish at {t} (|f| = {v:e})")));
        }
    }
    let capacity = match source {
        CapSource::Fixed { value } => {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::invalid("fixed capacity must be finite and >= 0"));
            }
            value
        }
        CapSource::PointCapacityMax => {
            let mut best = 0.0f64;
            for &t in e0 {
                let c = capacity::point_capacity(mu, CirclePoint::new(t), &capacity::default_schedule(), tol)?;
                if c.status == CapacityStatus::Finite {
                    best = best.max(c.cap_scale);
                }
            }
            best
        }
        CapSource::MassLowerBound => capacity::mass_lower_bound(mu, mu.atom_mass_at(e0))?,
    };
    let average = holomorphic::arc_average(f, arc, tol)?.value;
    let energy = holomorphic::localized_energy(f, Some(&big), None, mu, tol)?;
    let l2 = holomorphic::l2_norm_sq(f, Some(&big), tol)?;
    let denom = energy.value + l2.value;
    if !(denom > f64::MIN_POSITIVE) {
        return Err(Error::DegenerateDenominator);
    }
    Ok(PoincareProbe { kappa: average * average * capacity / denom, average, capacity, energy, l2 })
}

/// One case of the probe corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeCase {
    pub f: BoundaryFunction,
    pub e0: Vec<f64>,
    pub arc: Arc,
    pub mu: Measure,
}

impl ProbeCase {
    pub fn rotated(&self, phi: f64) -> Result<ProbeCase> {
        Ok(ProbeCase {
            f: self.f.rotated(phi),
            e0: self.e0.iter().map(|t| t + phi).collect(),
            arc: self.arc.rotated(phi),
            mu: self.mu.rotated(phi)?,
        })
    }
}

/// Deterministic corpus of probe cases: random arcs, one to three points of
/// `E₀` inside each, `f = Π(z - e^{iθⱼ})·p(z)` with random `p` of degree at
/// most 3, and a measure with an atom at the first point of `E₀` (so its
/// point capacity is positive) plus optional extra atoms and a constant
/// density.
pub fn probe_corpus(count: usize, seed: u64) -> Vec<ProbeCase> {
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.gen_range(0.1..1.0);
            let arc = Arc::new(rng.gen_range(0.0..2.0 * PI), len).expect("valid arc");
            let k = rng.gen_range(1..=3);
            let e0: Vec<f64> = (0..k).map(|_| arc.start() + len * rng.gen_range(0.1..0.9)).collect();
            let deg = rng.gen_range(0..=3);
            let coeffs: Vec<Complex64> =
                (0..=deg).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let f = BoundaryFunction::polynomial(coeffs).vanishing_on(&e0);
            let mut atoms = vec![crate::measures::Atom::new(e0[0], rng.gen_range(0.1..1.0))];
            for _ in 0..rng.gen_range(0..3) {
                atoms.push(crate::measures::Atom::new(rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.05..0.5)));
            }
            let density = if rng.gen_bool(0.5) {
                crate::measures::Density::Constant { value: rng.gen_range(0.1..1.0) }
            } else {
                crate::measures::Density::Zero
            };
            let mu = Measure::new(atoms, density, 0.0).expect("valid measure");
            ProbeCase { f, e0, arc, mu }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn cps(v: &[(u64, f64)]) -> Vec<Checkpoint> {
        v.iter().map(|&(n, value)| Checkpoint { n, value }).collect()
    }

    fn explicit(lengths: &[f64]) -> ArcFamilySpec {
        let mut start = 0.0;
        let arcs = lengths
            .iter()
            .map(|&l| {
                let a = Arc::new(start, l).unwrap();
                start += 3.0 * l;
                a
            })
            .collect();
        ArcFamilySpec { generator: ArcGenerator::ExplicitList { arcs }, gamma: 1.5 }
    }

    #[test]
    fn classification_rules() {
        assert_eq!(classify_series(&cps(&[(10, 1.0), (100, 1.0 + 1e-9)]), false), Classification::Converges);
        assert_eq!(
            classify_series(&cps(&[(10, 0.0), (100, -0.05), (1000, -0.08)]), false),
            Classification::DivergesToMinusInfinity
        );
        assert_eq!(classify_series(&cps(&[(10, 0.0), (100, -0.05), (1000, -0.055)]), false), Classification::Inconclusive);
        assert_eq!(classify_series(&cps(&[(10, 0.0), (100, 0.5)]), false), Classification::DivergesToPlusInfinity);
        assert_eq!(classify_series(&cps(&[(10, 0.0)]), true), Classification::Converges);
    }

    #[test]
    fn capacity_equal_to_length_gives_zero_series() {
        let fam = explicit(&[0.1, 0.05, 0.02, 0.01]);
        let rule = CapacityRule::Power { scale: 1.0, exponent: 1.0 };
        let r = km_criterion(&Measure::lebesgue(), &fam, &rule, &[2, 4], &KmOptions::default()).unwrap();
        assert_eq!(r.classification, Classification::Converges);
        assert!(r.checkpoints.iter().all(|c| c.value == 0.0));
    }

    #[test]
    fn zero_capacity_short_circuits() {
        let fam = explicit(&[0.1, 0.05, 0.02]);
        let rule = CapacityRule::Explicit { values: vec![0.5, 0.0, 0.1] };
        let r = km_criterion(&Measure::lebesgue(), &fam, &rule, &[1, 3], &KmOptions::default()).unwrap();
        assert_eq!(r.classification, Classification::DivergesToMinusInfinity);
        assert_eq!(r.offending_index, Some(2));
    }

    #[test]
    fn overlapping_family_rejected() {
        let arcs = vec![Arc::new(0.0, 0.1).unwrap(), Arc::new(0.12, 0.1).unwrap()];
        let fam = ArcFamilySpec { generator: ArcGenerator::ExplicitList { arcs }, gamma: 1.5 };
        let rule = CapacityRule::Power { scale: 1.0, exponent: 1.0 };
        assert!(matches!(
            km_criterion(&Measure::lebesgue(), &fam, &rule, &[2], &KmOptions::default()),
            Err(Error::FamilyInvalid(_))
        ));
        let touching = ArcFamilySpec { generator: ArcGenerator::LogLogArcs { shrink: 1.0 }, gamma: 1.1 };
        assert!(matches!(touching.validate(100), Err(Error::FamilyInvalid(_))));
        let shrunk = ArcFamilySpec { generator: ArcGenerator::LogLogArcs { shrink: 0.5 }, gamma: 1.5 };
        shrunk.validate(100_000).unwrap();
    }

    #[test]
    fn loglog_lengths_are_accurate() {
        let fam = ArcFamilySpec { generator: ArcGenerator::LogLogArcs { shrink: 1.0 }, gamma: 1.0 + 1e-9 };
        // 40-digit reference values of 1/log n - 1/log(n+1)
        let cases = [
            (2u64, 0.532_455_814_262_126),
            (10, 0.017_262_090_479_005_497),
            (1000, 2.094_335_343_026_245_5e-5),
            (1_000_000, 5.239_210_807_046_474e-9),
        ];
        for (n, exact) in cases {
            let len = fam.ln_length(n).exp();
            assert!((len - exact).abs() <= 1e-14 * exact, "{n}: {len} vs {exact}");
            let arc = fam.arc(n).unwrap();
            assert!((arc.length() - len).abs() <= 1e-14 * exact);
        }
    }

    #[test]
    fn loglog_series_diverges_with_quadratic_rule() {
        let fam = ArcFamilySpec { generator: ArcGenerator::LogLogArcs { shrink: 0.5 }, gamma: 1.5 };
        // c = |I|² makes every term |I| log(1/|I|) > 0
        let rule = CapacityRule::Power { scale: 1.0, exponent: 2.0 };
        let r = km_criterion(&Measure::lebesgue(), &fam, &rule, &[1_000, 10_000, 100_000, 1_000_000], &KmOptions::default())
            .unwrap();
        assert_eq!(r.classification, Classification::DivergesToPlusInfinity);
        assert!(r.fitted_model.unwrap().slope > 0.0);
    }

    #[test]
    fn resume_is_bit_identical() {
        let fam = ArcFamilySpec { generator: ArcGenerator::LogLogArcs { shrink: 0.5 }, gamma: 1.5 };
        let rule = CapacityRule::Power { scale: 1.0, exponent: 0.5 };
        let opts = KmOptions::default();
        let mu = Measure::lebesgue();
        let full = km_criterion(&mu, &fam, &rule, &[1_000, 200_000], &opts).unwrap();
        let start = SeriesState { next_index: 2, accumulator: Neumaier::new() };
        let (head, state) = km_criterion_resume(&mu, &fam, &rule, &[1_000], &opts, start).unwrap();
        let json = serde_json::to_string(&state).unwrap();
        let state: SeriesState = serde_json::from_str(&json).unwrap();
        let (tail, _) = km_criterion_resume(&mu, &fam, &rule, &[1_000, 200_000], &opts, state).unwrap();
        assert_eq!(head.checkpoints[0].value.to_bits(), full.checkpoints[0].value.to_bits());
        assert_eq!(tail.checkpoints.len(), 1);
        assert_eq!(tail.checkpoints[0].value.to_bits(), full.checkpoints[1].value.to_bits());
    }

    #[test]
    fn probe_examples() {
        let theta0 = 1.0;
        let arc = Arc::centered(theta0, 0.4).unwrap();
        let mu = Measure::dirac(theta0, 1.0).unwrap();
        let f = BoundaryFunction::constant(Complex64::new(1.0, 0.0)).vanishing_on(&[theta0]);
        let tol = Tolerance::relative(1e-12);
        let p = poincare_probe(&f, &[theta0], &arc, 2.0, &mu, CapSource::PointCapacityMax, &tol).unwrap();
        assert!(p.kappa.is_finite() && p.kappa > 0.0);
        // the arc average of |e^{it} - e^{iθ₀}| over |t-θ₀| < 0.2 is 20(1 - cos 0.1)
        assert!((p.average - 20.0 * (1.0 - 0.1f64.cos())).abs() < 1e-10, "{}", p.average);
        let p5 = poincare_probe(&f.scaled(Complex64::new(5.0, 0.0)), &[theta0], &arc, 2.0, &mu, CapSource::PointCapacityMax, &tol)
            .unwrap();
        assert!((p5.kappa - p.kappa).abs() <= 1e-12 * p.kappa);

        let zero = BoundaryFunction::polynomial(vec![]);
        assert_eq!(
            poincare_probe(&zero, &[theta0], &arc, 2.0, &mu, CapSource::MassLowerBound, &tol),
            Err(Error::DegenerateDenominator)
        );
        let nonvanishing = BoundaryFunction::monomial(1);
        assert!(poincare_probe(&nonvanishing, &[theta0], &arc, 2.0, &mu, CapSource::MassLowerBound, &tol).is_err());
    }

    #[test]
    fn corpus_is_deterministic() {
        assert_eq!(probe_corpus(5, 7), probe_corpus(5, 7));
        for case in probe_corpus(50, 7) {
            assert!(case.e0.iter().all(|&t| case.arc.contains(t)));
            assert!(case.arc.dilate(2.0).is_ok());
        }
    }
}
