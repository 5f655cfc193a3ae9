//! Explicit measures and sets: generalized Cantor sets, Carleson and
//! capacity-zero series tests, and the atom clusters used to build
//! uniqueness sets.

use std::f64::consts::{LN_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pairwise_disjoint, Arc};
use crate::measures::{Atom, BaseSet, Density, Measure};
use crate::summation::Neumaier;
use crate::uniqueness::{classify_series, ArcFamilySpec, ArcGenerator, CapacityRule, Checkpoint, Classification, DivergenceReport};

/// Cantor lengths `ℓₙ` relative to the base arc, with `ℓ₀ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LengthsRule {
    /// `ℓₙ = q⁻ⁿ`.
    Geometric { q: f64 },
    /// `ℓ₁, ℓ₂, ...` listed.
    Explicit { values: Vec<f64> },
}

impl LengthsRule {
    /// `ln ℓₙ`, or `None` past the end of an explicit list.
    pub fn ln_length(&self, n: u64) -> Option<f64> {
        if n == 0 {
            return Some(0.0);
        }
        match self {
            LengthsRule::Geometric { q } => Some(-(n as f64) * q.ln()),
            LengthsRule::Explicit { values } => values.get((n - 1) as usize).map(|v| v.ln()),
        }
    }

    /// Number of lengths available (`None` if unbounded).
    pub fn count(&self) -> Option<u64> {
        match self {
            LengthsRule::Geometric { .. } => None,
            LengthsRule::Explicit { values } => Some(values.len() as u64),
        }
    }

    /// Checks `ℓₙ > 0` and `2ℓ_{n+1} < ℓₙ` for `n < levels`.
    pub fn validate(&self, levels: u64) -> Result<()> {
        match self {
            LengthsRule::Geometric { q } => {
                if !(*q > 2.0 && q.is_finite()) {
                    return Err(Error::InvalidLengths(format!("geometric ratio must exceed 2, got {q}")));
                }
            }
            LengthsRule::Explicit { values } => {
                if (values.len() as u64) < levels {
                    return Err(Error::InvalidLengths(format!("{} lengths listed, {levels} levels requested", values.len())));
                }
                let mut prev = 1.0;
                for (i, &v) in values.iter().take(levels as usize).enumerate() {
                    if !(v > 0.0 && 2.0 * v < prev) {
                        return Err(Error::InvalidLengths(format!(
                            "need 0 < 2·l_{} < l_{}, got l_{} = {v} after {prev}",
                            i + 1,
                            i,
                            i + 1
                        )));
                    }
                    prev = v;
                }
            }
        }
        Ok(())
    }
}

/// Generalized Cantor set: at level `n` every arc of relative length
/// `ℓ_{n-1}` keeps its two end pieces of relative length `ℓₙ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantorSpec {
    pub lengths: LengthsRule,
    pub levels: u32,
    pub base_arc: Arc,
}

/// Cap on construction depth (2^24 arcs).
pub const MAX_CANTOR_LEVELS: u32 = 24;

impl CantorSpec {
    pub fn middle_thirds(levels: u32, base_arc: Arc) -> Self {
        CantorSpec { lengths: LengthsRule::Geometric { q: 3.0 }, levels, base_arc }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 || self.levels > MAX_CANTOR_LEVELS {
            return Err(Error::InvalidLengths(format!("levels must lie in 1..={MAX_CANTOR_LEVELS}, got {}", self.levels)));
        }
        self.lengths.validate(self.levels as u64)
    }

    /// The `2^levels` closed arcs of the last level, in order.
    pub fn arcs(&self) -> Result<Vec<Arc>> {
        self.validate()?;
        let base = self.base_arc.length();
        let mut starts = vec![self.base_arc.start()];
        let mut parent = base;
        for n in 1..=self.levels as u64 {
            let child = base * self.lengths.ln_length(n).expect("validated").exp();
            let shift = parent - child;
            starts = starts.iter().flat_map(|&s| [s, s + shift]).collect();
            parent = child;
        }
        starts.into_iter().map(|s| Arc::new(s, parent)).collect()
    }

    pub fn total_length(&self) -> Result<f64> {
        self.validate()?;
        let ln = self.levels as f64 * LN_2 + self.lengths.ln_length(self.levels as u64).expect("validated");
        Ok(self.base_arc.length() * ln.exp())
    }

    pub fn rotated(&self, phi: f64) -> Self {
        CantorSpec { base_arc: self.base_arc.rotated(phi), ..self.clone() }
    }
}

pub fn cantor_set(spec: &CantorSpec) -> Result<Vec<Arc>> {
    spec.arcs()
}

/// Lengths of the arcs complementary to a closed set, grouped by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GapSequence {
    /// One gap per entry.
    Explicit {
        lengths: Vec<f64>,
        #[serde(default = "tau")]
        circumference: f64,
    },
    /// Gaps of a generalized Cantor set filling the whole circle: group `n`
    /// has `2^{n-1}` gaps of length `(ℓ_{n-1} - 2ℓₙ)·circumference`.
    Cantor {
        lengths: LengthsRule,
        #[serde(default = "unit")]
        circumference: f64,
    },
    /// Complement of `{1} ∪ {e^{i/log n}}`: group 1 is the arc
    /// `(1/log 2, 2π)`, group `n ≥ 2` the arc `(1/log(n+1), 1/log n)`.
    LogLog,
}

fn tau() -> f64 {
    TAU
}

fn unit() -> f64 {
    1.0
}

impl GapSequence {
    pub fn circumference(&self) -> f64 {
        match self {
            GapSequence::Explicit { circumference, .. } | GapSequence::Cantor { circumference, .. } => *circumference,
            GapSequence::LogLog => TAU,
        }
    }

    fn groups(&self) -> Option<u64> {
        match self {
            GapSequence::Explicit { lengths, .. } => Some(lengths.len() as u64),
            GapSequence::Cantor { lengths, .. } => lengths.count(),
            GapSequence::LogLog => None,
        }
    }

    /// `(Σ ℓ log ℓ, Σ ℓ)` over group `n ≥ 1`.
    fn group_terms(&self, n: u64) -> (f64, f64) {
        match self {
            GapSequence::Explicit { lengths, .. } => {
                let l = lengths[(n - 1) as usize];
                (l * l.ln(), l)
            }
            GapSequence::Cantor { lengths, circumference } => {
                let a = lengths.ln_length(n - 1).expect("in range");
                let b = lengths.ln_length(n).expect("in range");
                // ℓ_{n-1} - 2ℓₙ = ℓ_{n-1}(1 - 2e^{b-a})
                let ln_gap = a + (-2.0 * (b - a).exp()).ln_1p() + circumference.ln();
                let ln_count = (n - 1) as f64 * LN_2;
                let total = (ln_count + ln_gap).exp();
                (total * ln_gap, total)
            }
            GapSequence::LogLog => {
                let l = if n == 1 {
                    TAU - 1.0 / LN_2
                } else {
                    let x = n as f64;
                    ((1.0 / x).ln_1p().ln() - x.ln().ln() - (x + 1.0).ln().ln()).exp()
                };
                (l * l.ln(), l)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            GapSequence::Explicit { lengths, circumference } => {
                if lengths.iter().any(|&l| !(l > 0.0)) || !(*circumference > 0.0) {
                    return Err(Error::invalid("gap lengths and circumference must be positive"));
                }
                let total: f64 = lengths.iter().sum();
                if total > circumference * (1.0 + 1e-12) {
                    return Err(Error::invalid(format!("gap lengths sum to {total}, more than the circumference")));
                }
                Ok(())
            }
            GapSequence::Cantor { lengths, circumference } => {
                if !(*circumference > 0.0) {
                    return Err(Error::invalid("circumference must be positive"));
                }
                lengths.validate(lengths.count().unwrap_or(1))
            }
            GapSequence::LogLog => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CarlesonVerdict {
    Carleson,
    NotCarleson,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlesonReport {
    pub verdict: CarlesonVerdict,
    /// Partial sums of `ℓ log ℓ`.
    pub sum: DivergenceReport,
    /// Circumference minus the partial sums of `ℓ`, at the same checkpoints.
    pub remaining_length: Vec<Checkpoint>,
}

/// Remaining length below this fraction of the circumference counts as
/// measure zero.
pub const NULL_LENGTH: f64 = 1e-6;

/// Partial sums over gap groups `n ≤ N` of `ℓ log ℓ` and `ℓ`.
pub fn carleson_test(gaps: &GapSequence, checkpoints: &[u64]) -> Result<CarlesonReport> {
    gaps.validate()?;
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("checkpoints must be positive and strictly increasing"));
    }
    let circ = gaps.circumference();
    let last = gaps.groups();
    let mut s = Neumaier::new();
    let mut len = Neumaier::new();
    let mut sums = Vec::new();
    let mut remaining = Vec::new();
    let mut n = 1u64;
    let mut exhausted = false;
    for &cp in checkpoints {
        let target = last.map_or(cp, |l| l.min(cp));
        while n <= target {
            let (a, b) = gaps.group_terms(n);
            s.add(a);
            len.add(b);
            n += 1;
        }
        if last.is_some_and(|l| n > l) {
            exhausted = true;
        }
        sums.push(Checkpoint { n: cp, value: s.total() });
        remaining.push(Checkpoint { n: cp, value: circ - len.total() });
    }
    let classification = classify_series(&sums, exhausted);
    let rem = remaining.last().map_or(circ, |c| c.value);
    let rem_settled = exhausted || classify_series(&remaining, false) == Classification::Converges;
    let verdict = match classification {
        Classification::DivergesToMinusInfinity => CarlesonVerdict::NotCarleson,
        Classification::Converges if rem < NULL_LENGTH * circ => CarlesonVerdict::Carleson,
        // finite sum but the set keeps positive length
        Classification::Converges if rem_settled => CarlesonVerdict::NotCarleson,
        _ => CarlesonVerdict::Inconclusive,
    };
    let sum = DivergenceReport {
        limit: (classification == Classification::Converges).then(|| s.total()),
        checkpoints: sums,
        classification,
        ..Default::default()
    };
    Ok(CarlesonReport { verdict, sum, remaining_length: remaining })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CapacityZeroVerdict {
    CapacityZero,
    CapacityPositive,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityZeroReport {
    pub verdict: CapacityZeroVerdict,
    pub series: DivergenceReport,
}

/// Partial sums of `Σ_{n≥1} 2⁻ⁿ ℓₙ^{-α}`, which diverges exactly when the
/// Cantor set has zero capacity for the weight `dist(ζ, K)^α dm`.
pub fn cantor_capacity_zero_test(lengths: &LengthsRule, alpha: f64, checkpoints: &[u64]) -> Result<CapacityZeroReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("checkpoints must be positive and strictly increasing"));
    }
    if let Some(l) = lengths.count() {
        lengths.validate(l)?;
    } else {
        lengths.validate(1)?;
    }
    let mut acc = Neumaier::new();
    let mut out = Vec::new();
    let mut n = 1u64;
    let mut short = false;
    for &cp in checkpoints {
        while n <= cp {
            match lengths.ln_length(n) {
                Some(ln_l) => acc.add((-(n as f64) * LN_2 - alpha * ln_l).exp()),
                None => {
                    short = true;
                    break;
                }
            }
            n += 1;
        }
        if short {
            break;
        }
        out.push(Checkpoint { n: cp, value: acc.total() });
    }
    let classification = classify_series(&out, false);
    let verdict = if short {
        CapacityZeroVerdict::Inconclusive
    } else {
        match classification {
            Classification::DivergesToPlusInfinity => CapacityZeroVerdict::CapacityZero,
            Classification::Converges => CapacityZeroVerdict::CapacityPositive,
            _ => CapacityZeroVerdict::Inconclusive,
        }
    };
    let series = DivergenceReport {
        limit: (classification == Classification::Converges).then(|| acc.total()),
        checkpoints: out,
        classification,
        note: short.then(|| "explicit length list ended before the last checkpoint".to_string()),
        ..Default::default()
    };
    Ok(CapacityZeroReport { verdict, series })
}

/// `Σ_{k>K} k⁻²`, bounded from above by the alternating asymptotic series
/// truncated after a positive term.
pub fn zeta2_tail(k: u64) -> f64 {
    let x = k as f64;
    1.0 / x - 0.5 / (x * x) + 1.0 / (6.0 * x * x * x)
}

/// Atoms `(a/k²) δ` at distance `aᵏ` from `anchor`, `k = 2..=k_max`, dropping
/// those whose offset underflows. Returns the atoms and the mass left out.
fn atom_cluster(anchor: f64, a: f64, k_max: u64) -> (Vec<Atom>, f64) {
    let mut atoms = Vec::with_capacity(k_max as usize);
    let mut last = 1;
    let ln_a = a.ln();
    for k in 2..=k_max {
        let off = (k as f64 * ln_a).exp();
        if off == 0.0 {
            break;
        }
        atoms.push(Atom::with_offset(anchor, off, a / (k * k) as f64));
        last = k;
    }
    (atoms, a * zeta2_tail(last))
}

/// The measure `ν = Σ_{k≥2} (a/k²) δ_{ζ e^{iaᵏ}}` truncated at `k_max`.
pub fn lemcap_measure(zeta: f64, a: f64, k_max: u64) -> Result<Measure> {
    if !(a > 0.0 && a < 0.5) {
        return Err(Error::invalid(format!("a must lie in (0, 1/2), got {a}")));
    }
    if k_max < 10 {
        return Err(Error::invalid(format!("k_max must be at least 10, got {k_max}")));
    }
    let (atoms, tail) = atom_cluster(zeta, a, k_max);
    Measure::new(atoms, Density::Zero, tail)
}

/// Output of [`um0_measure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Um0 {
    pub measure: Measure,
    /// `θₙ` for `n = 3..=n_max`, then `0`.
    pub points: Vec<f64>,
    /// `Iₙ = (θₙ - aₙ, θₙ + aₙ)`.
    pub arcs: Vec<Arc>,
    /// `aₙ`.
    pub radii: Vec<f64>,
}

pub const UM0_FIRST: u64 = 3;

/// `θₙ - θ_{n+1}` for `θₙ = 1/log n`.
fn loglog_step(n: u64) -> f64 {
    let x = n as f64;
    ((1.0 / x).ln_1p().ln() - x.ln().ln() - (x + 1.0).ln().ln()).exp()
}

/// Atom clusters of mass `aₙ/k²` at `θₙ + aₙᵏ`, `θₙ = 1/log n`,
/// `aₙ = ε(θₙ - θ_{n+1})`, for `3 ≤ n ≤ n_max` and `2 ≤ k ≤ k_max`.
pub fn um0_measure(epsilon: f64, n_max: u64, k_max: u64) -> Result<Um0> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if n_max < UM0_FIRST || k_max < 2 {
        return Err(Error::invalid("need n_max >= 3 and k_max >= 2"));
    }
    if epsilon >= 1.0 {
        return Err(Error::EpsilonTooLarge(epsilon));
    }
    let mut atoms = Vec::new();
    let mut arcs = Vec::new();
    let mut points = Vec::new();
    let mut radii = Vec::new();
    let mut tail = Neumaier::new();
    // generations beyond n_max: Σ_{n>n_max} aₙ = ε/log(n_max+1), each times ζ(2) - 1
    tail.add(epsilon / ((n_max + 1) as f64).ln() * (PI * PI / 6.0 - 1.0));
    for n in UM0_FIRST..=n_max {
        let theta = 1.0 / (n as f64).ln();
        let a = epsilon * loglog_step(n);
        let (cluster, t) = atom_cluster(theta, a, k_max);
        atoms.extend(cluster);
        tail.add(t);
        arcs.push(Arc::centered(theta, 2.0 * a)?);
        points.push(theta);
        radii.push(a);
    }
    points.push(0.0);
    // the arcs must be pairwise disjoint and keep clear of the point 1
    if !pairwise_disjoint(&arcs) || arcs.iter().any(|a| a.contains(0.0)) {
        return Err(Error::EpsilonTooLarge(epsilon));
    }
    let measure = Measure::new(atoms, Density::Zero, tail.total())?;
    Ok(Um0 { measure, points, arcs, radii })
}

/// `(π²/6 - 1)/log 3`, the total mass of the untruncated measure per unit ε.
pub fn um0_mass_per_epsilon() -> f64 {
    (PI * PI / 6.0 - 1.0) / 3f64.ln()
}

/// `Σ (bₙ - aₙ)(δ_{aₙ} + δ_{bₙ})` over the gaps `(aₙ, bₙ)`.
pub fn noncarleson_arc_measure(gaps: &[Arc]) -> Result<Measure> {
    if !pairwise_disjoint(gaps) {
        return Err(Error::invalid("gaps must be pairwise disjoint"));
    }
    let atoms = gaps.iter().flat_map(|g| [Atom::new(g.start(), g.length()), Atom::new(g.end(), g.length())]).collect();
    Measure::new(atoms, Density::Zero, 0.0)
}

/// The gaps `(1/log(n+1), 1/log n)` for `2 ≤ n ≤ n_max`.
pub fn loglog_gaps(n_max: u64) -> Result<Vec<Arc>> {
    (2..=n_max)
        .map(|n| {
            let start = 1.0 / ((n + 1) as f64).ln();
            Arc::new(start, loglog_step(n))
        })
        .collect()
}

/// [`noncarleson_arc_measure`] over [`loglog_gaps`], with the omitted gaps'
/// mass `2·Σ_{n>n_max} ℓₙ = 2/log(n_max+1)` as the tail bound.
pub fn noncarleson_loglog_measure(n_max: u64) -> Result<Measure> {
    if n_max < 2 {
        return Err(Error::invalid("n_max must be at least 2"));
    }
    noncarleson_arc_measure(&loglog_gaps(n_max)?)?.with_tail_bound(2.0 / ((n_max + 1) as f64).ln())
}

/// Inputs for the criterion series with Cantor copies in the arcs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorWeight {
    pub measure: Measure,
    pub family: ArcFamilySpec,
    pub rule: CapacityRule,
    pub capacity_test: CapacityZeroReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantorWeightParams {
    pub alpha: f64,
    pub lengths: LengthsRule,
    /// Cantor level used for the weight's base set.
    #[serde(default = "default_levels")]
    pub levels: u32,
    /// Proportionality constant standing in for `c_μ(K)` in
    /// `c_μ(Kₙ ∩ Iₙ) ≍ c_μ(K)|Iₙ|^α`.
    #[serde(default = "unit")]
    pub cap_scale: f64,
    #[serde(default = "default_shrink")]
    pub shrink: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

fn default_levels() -> u32 {
    8
}

fn default_shrink() -> f64 {
    0.5
}

fn default_gamma() -> f64 {
    1.5
}

impl CantorWeightParams {
    pub fn new(alpha: f64, lengths: LengthsRule) -> Self {
        CantorWeightParams {
            alpha,
            lengths,
            levels: default_levels(),
            cap_scale: 1.0,
            shrink: default_shrink(),
            gamma: default_gamma(),
        }
    }
}

/// Checkpoints used to certify the Cantor capacity-zero precondition.
pub const CAPACITY_TEST_CHECKPOINTS: [u64; 4] = [10, 100, 1_000, 10_000];

/// Weight `dist(ζ, K)^α dm` with `K` on the arc `[π, π + 1]`, the log-log arc
/// family, and the capacity rule `c(Iₙ) = cap_scale·|Iₙ|^α`.
pub fn cantor_weight_example(params: &CantorWeightParams) -> Result<CantorWeight> {
    let capacity_test = cantor_capacity_zero_test(&params.lengths, params.alpha, &CAPACITY_TEST_CHECKPOINTS)?;
    match capacity_test.verdict {
        CapacityZeroVerdict::CapacityZero => {}
        CapacityZeroVerdict::CapacityPositive => return Err(Error::PreconditionSeriesConverges),
        CapacityZeroVerdict::Inconclusive => {
            return Err(Error::invalid("capacity-zero series is inconclusive for these lengths"));
        }
    }
    let base = CantorSpec { lengths: params.lengths.clone(), levels: params.levels, base_arc: Arc::new(PI, 1.0)? };
    let measure = Measure::new(
        vec![],
        Density::DistancePower { alpha: params.alpha, base: BaseSet { points: vec![], cantor: vec![base] }, scale: 1.0 },
        0.0,
    )?;
    let family = ArcFamilySpec { generator: ArcGenerator::LogLogArcs { shrink: params.shrink }, gamma: params.gamma };
    let rule = CapacityRule::Power { scale: params.cap_scale, exponent: params.alpha };
    Ok(CantorWeight { measure, family, rule, capacity_test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uniqueness::{km_criterion, KmOptions};

    #[test]
    fn middle_thirds_levels() {
        let base = Arc::new(0.0, 1.0).unwrap();
        let one = cantor_set(&CantorSpec::middle_thirds(1, base)).unwrap();
        assert_eq!(one.len(), 2);
        assert!((one[0].start() - 0.0).abs() < 1e-15 && (one[0].length() - 1.0 / 3.0).abs() < 1e-15);
        assert!((one[1].start() - 2.0 / 3.0).abs() < 1e-15);
        let two = cantor_set(&CantorSpec::middle_thirds(2, base)).unwrap();
        assert_eq!(two.len(), 4);
        assert!(two.iter().all(|a| (a.length() - 1.0 / 9.0).abs() < 1e-15));
        for n in 1..=10 {
            let spec = CantorSpec::middle_thirds(n, base);
            let summed: f64 = cantor_set(&spec).unwrap().iter().map(|a| a.length()).sum();
            let expect = (2.0f64 / 3.0).powi(n as i32);
            assert!((summed - expect).abs() < 1e-13);
            assert!((spec.total_length().unwrap() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn cantor_levels_nest() {
        let base = Arc::new(1.0, 2.0).unwrap();
        let spec = |n| CantorSpec { lengths: LengthsRule::Geometric { q: 4.0 }, levels: n, base_arc: base };
        let coarse = cantor_set(&spec(3)).unwrap();
        let fine = cantor_set(&spec(4)).unwrap();
        for (i, child) in fine.iter().enumerate() {
            let parent = coarse[i / 2];
            assert!(child.start() >= parent.start() - 1e-15 && child.end() <= parent.end() + 1e-15);
        }
        assert!(pairwise_disjoint(&fine));
    }

    #[test]
    fn invalid_lengths_rejected() {
        let base = Arc::new(0.0, 1.0).unwrap();
        let bad = CantorSpec { lengths: LengthsRule::Explicit { values: vec![0.4, 0.25] }, levels: 2, base_arc: base };
        assert!(matches!(cantor_set(&bad), Err(Error::InvalidLengths(_))));
        let bad = CantorSpec { lengths: LengthsRule::Geometric { q: 2.0 }, levels: 2, base_arc: base };
        assert!(matches!(cantor_set(&bad), Err(Error::InvalidLengths(_))));
    }

    #[test]
    fn middle_thirds_is_carleson() {
        let gaps = GapSequence::Cantor { lengths: LengthsRule::Geometric { q: 3.0 }, circumference: 1.0 };
        let r = carleson_test(&gaps, &[10, 100, 1_000]).unwrap();
        assert_eq!(r.verdict, CarlesonVerdict::Carleson);
        let s = r.sum.limit.unwrap();
        assert!((s + 3.0 * 3f64.ln()).abs() < 1e-9, "{s}");
    }

    #[test]
    fn single_point_is_carleson() {
        let r = carleson_test(&GapSequence::Explicit { lengths: vec![TAU], circumference: TAU }, &[1, 10]).unwrap();
        assert_eq!(r.verdict, CarlesonVerdict::Carleson);
        assert!((r.sum.limit.unwrap() - TAU * TAU.ln()).abs() < 1e-12);
    }

    #[test]
    fn loglog_points_not_carleson() {
        let r = carleson_test(&GapSequence::LogLog, &[1_000, 10_000, 100_000, 1_000_000]).unwrap();
        assert_eq!(r.verdict, CarlesonVerdict::NotCarleson);
        let fine = carleson_test(&GapSequence::LogLog, &[10_000, 100_000, 1_000_000, 10_000_000]).unwrap();
        assert_eq!(fine.verdict, CarlesonVerdict::NotCarleson);
    }

    #[test]
    fn capacity_zero_examples() {
        let four = LengthsRule::Geometric { q: 4.0 };
        let r = cantor_capacity_zero_test(&four, 0.5, &[10, 100, 1000]).unwrap();
        assert_eq!(r.verdict, CapacityZeroVerdict::CapacityZero);
        assert!((r.series.checkpoints[2].value - 1000.0).abs() < 1e-9);
        let r = cantor_capacity_zero_test(&four, 0.25, &[10, 100, 1000]).unwrap();
        assert_eq!(r.verdict, CapacityZeroVerdict::CapacityPositive);
        let expect = 1.0 / (2f64.sqrt() - 1.0);
        assert!((r.series.limit.unwrap() - expect).abs() < 1e-12);
        let r = cantor_capacity_zero_test(&four, 1e-9, &[10, 100, 1000]).unwrap();
        assert_eq!(r.verdict, CapacityZeroVerdict::CapacityPositive);
        // verdicts agree at ten times the depth
        let r = cantor_capacity_zero_test(&four, 0.5, &[100, 1000, 10000]).unwrap();
        assert_eq!(r.verdict, CapacityZeroVerdict::CapacityZero);
    }

    #[test]
    fn um0_mass_and_inclusion() {
        let u = um0_measure(0.01, 200, 60).unwrap();
        let m = u.measure.total_mass();
        let exact = 0.01 * um0_mass_per_epsilon();
        assert!((exact - 0.587045 * 0.01).abs() < 1e-8);
        assert!((m.value - exact).abs() <= m.error, "{} ± {} vs {exact}", m.value, m.error);
        for (n, (arc, &a)) in u.arcs.iter().zip(&u.radii).enumerate() {
            let theta = u.points[n];
            for atom in u.measure.atoms().iter().filter(|at| (at.theta - theta).abs() < 1e-15) {
                assert!(atom.offset > 0.0 && atom.offset < a);
                assert!(arc.contains(atom.theta + atom.offset) || atom.offset < 1e-12);
            }
        }
        // truncation consistency
        let bigger = um0_measure(0.01, 400, 80).unwrap().measure.total_mass();
        assert!((bigger.value - m.value).abs() <= m.error);
        assert!(matches!(um0_measure(0.6, 50, 20), Err(Error::EpsilonTooLarge(_))));
    }

    #[test]
    fn um0_arcs_survive_small_dilation() {
        let u = um0_measure(0.01, 200, 60).unwrap();
        let dilated: Vec<Arc> = u.arcs.iter().map(|a| a.dilate(1.01).unwrap()).collect();
        assert!(pairwise_disjoint(&dilated));
    }

    #[test]
    fn lemcap_mass_and_support() {
        let a = 0.125;
        let nu = lemcap_measure(0.3, a, 60).unwrap();
        let m = nu.total_mass();
        let exact = a * (PI * PI / 6.0 - 1.0);
        assert!((m.value - exact).abs() <= m.error && m.error < 0.02 * a);
        assert!(nu.atoms().iter().all(|at| at.offset > 0.0 && at.offset <= a * a * (1.0 + 1e-12)));
        assert!(lemcap_measure(0.0, 0.5, 60).is_err());
        assert!(lemcap_measure(0.0, 0.1, 5).is_err());
    }

    #[test]
    fn noncarleson_examples() {
        let g = Arc::new(1.0, 0.3).unwrap();
        let m = noncarleson_arc_measure(&[g]).unwrap();
        assert_eq!(m.atoms().len(), 2);
        assert!((m.total_mass().value - 0.6).abs() < 1e-15);
        let r = noncarleson_arc_measure(&[g.rotated(2.0)]).unwrap();
        assert!((r.atoms()[0].theta - 3.0).abs() < 1e-15 || (r.atoms()[1].theta - 3.0).abs() < 1e-15);
        // adjacent gaps share endpoints
        let m = noncarleson_loglog_measure(50).unwrap();
        assert_eq!(m.atoms().len(), 50);
    }

    #[test]
    fn cantor_weight_pipeline() {
        let s = cantor_weight_example(&CantorWeightParams::new(0.5, LengthsRule::Geometric { q: 4.0 })).unwrap();
        let r = km_criterion(&s.measure, &s.family, &s.rule, &[1_000, 10_000, 100_000, 1_000_000], &KmOptions::default()).unwrap();
        assert_eq!(r.classification, Classification::DivergesToMinusInfinity);
        assert_eq!(
            cantor_weight_example(&CantorWeightParams::new(0.25, LengthsRule::Geometric { q: 4.0 })),
            Err(Error::PreconditionSeriesConverges)
        );
    }
}
