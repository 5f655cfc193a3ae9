//! Finite positive Borel measures on the circle and their potentials.
//!
//! A [`Measure`] is a finite list of atoms plus a density against the
//! normalized arc measure `dm = dθ/2π`, plus a bound on the mass of atoms that
//! were truncated away. All integrals are reported against `dm`.
//!
//! Atom positions are stored as an anchor angle plus a small offset. Atoms
//! that cluster at distance `a^k` from a point (with `a^k` far below the
//! spacing of doubles near the anchor) keep their exact separation from that
//! point, which the capacity estimators depend on.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constructions::CantorSpec;
use crate::error::{Error, Result};
use crate::geometry::{chord_squared, normalize_angle, wrap_difference, ANGLE_TOL};
use crate::quad::{self, Estimate, Tolerance};
use crate::summation::{self, Neumaier};
use crate::uniqueness::{Classification, Checkpoint, DivergenceReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    /// Anchor angle in `[0, 2π)`.
    pub theta: f64,
    /// Offset from the anchor; the atom sits at `theta + offset`.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub offset: f64,
    pub mass: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl Atom {
    pub fn new(theta: f64, mass: f64) -> Self {
        Atom { theta: normalize_angle(theta), offset: 0.0, mass }
    }

    pub fn with_offset(theta: f64, offset: f64, mass: f64) -> Self {
        Atom { theta: normalize_angle(theta), offset, mass }
    }

    /// Position reduced to `[0, 2π)`.
    pub fn angle(&self) -> f64 {
        normalize_angle(self.theta + self.offset)
    }

    /// Signed angular displacement of the atom from `theta`, in `(-π, π]`
    /// up to the offset.
    #[inline]
    pub fn displacement_from(&self, theta: f64) -> f64 {
        wrap_difference(self.theta - theta) + self.offset
    }
}

/// Closed or finite base set for a distance-power weight.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseSet {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cantor: Vec<CantorSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Linear,
    PiecewiseConstant,
}

/// Weight against `dm`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Density {
    #[default]
    Zero,
    Constant { value: f64 },
    /// `scale · dist(ζ, base)^alpha`, with `dist` the angular distance.
    DistancePower {
        alpha: f64,
        base: BaseSet,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Samples at `2πk/n`, periodic.
    Tabulated {
        values: Vec<f64>,
        #[serde(default)]
        interpolation: Interpolation,
    },
}

fn one() -> f64 {
    1.0
}

/// Precomputed geometry for evaluating and integrating a density.
#[derive(Debug, Clone, Default)]
struct DensityCache {
    /// Sorted, disjoint closed intervals `(lo, hi)` with `lo ∈ [0, 2π)`.
    intervals: Vec<(f64, f64)>,
    /// Complementary gaps `(u, v)`, `v > u`, possibly extending past 2π.
    gaps: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureSpec {
    #[serde(default)]
    atoms: Vec<Atom>,
    #[serde(default)]
    density: Density,
    #[serde(default)]
    tail_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MeasureSpec", into = "MeasureSpec")]
pub struct Measure {
    atoms: Vec<Atom>,
    density: Density,
    tail_bound: f64,
    cache: DensityCache,
}

impl PartialEq for Measure {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms && self.density == other.density && self.tail_bound == other.tail_bound
    }
}

impl TryFrom<MeasureSpec> for Measure {
    type Error = Error;
    fn try_from(s: MeasureSpec) -> Result<Measure> {
        Measure::new(s.atoms, s.density, s.tail_bound)
    }
}

impl From<Measure> for MeasureSpec {
    fn from(m: Measure) -> MeasureSpec {
        MeasureSpec { atoms: m.atoms, density: m.density, tail_bound: m.tail_bound }
    }
}

/// Value of the squared-distance potential, which is often infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Potential {
    Finite(Estimate),
    Infinite,
}

impl Potential {
    pub fn value(&self) -> f64 {
        match self {
            Potential::Finite(e) => e.value,
            Potential::Infinite => f64::INFINITY,
        }
    }
}

impl Measure {
    pub fn new(atoms: Vec<Atom>, density: Density, tail_bound: f64) -> Result<Self> {
        if !(tail_bound >= 0.0 && tail_bound.is_finite()) {
            return Err(Error::invalid(format!("tail_bound must be finite and >= 0, got {tail_bound}")));
        }
        for a in &atoms {
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(Error::invalid(format!("atom masses must be positive, got {}", a.mass)));
            }
            if !a.theta.is_finite() || !a.offset.is_finite() || a.offset.abs() > 1.0 {
                return Err(Error::invalid("atom angle must be finite with |offset| <= 1"));
            }
        }
        let atoms = merge_atoms(atoms);
        let cache = build_cache(&density)?;
        Ok(Measure { atoms, density, tail_bound, cache })
    }

    /// Normalized arc measure `dm`.
    pub fn lebesgue() -> Self {
        Measure::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Measure::new(vec![], Density::Constant { value: c }, 0.0).expect("valid constant density")
    }

    pub fn dirac(theta: f64, mass: f64) -> Result<Self> {
        Measure::new(vec![Atom::new(theta, mass)], Density::Zero, 0.0)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn has_density(&self) -> bool {
        !matches!(self.density, Density::Zero)
            && !matches!(self.density, Density::Constant { value } if value == 0.0)
            && !matches!(&self.density, Density::Tabulated { values, .. } if values.iter().all(|&v| v == 0.0))
    }

    pub fn with_tail_bound(mut self, tail: f64) -> Result<Self> {
        if !(tail >= 0.0 && tail.is_finite()) {
            return Err(Error::invalid("tail_bound must be finite and >= 0"));
        }
        self.tail_bound = tail;
        Ok(self)
    }

    /// Adds a constant density to whatever density is present, when that is
    /// representable.
    pub fn with_density(self, density: Density) -> Result<Self> {
        Measure::new(self.atoms, density, self.tail_bound)
    }

    /// Sum of two measures. The densities must combine within the closed
    /// family (at most one non-constant density).
    pub fn plus(&self, other: &Measure) -> Result<Measure> {
        let density = match (&self.density, &other.density) {
            (Density::Zero, d) | (d, Density::Zero) => d.clone(),
            (Density::Constant { value: a }, Density::Constant { value: b }) => Density::Constant { value: a + b },
            _ => return Err(Error::invalid("sum of two non-constant densities is not representable")),
        };
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        Measure::new(atoms, density, self.tail_bound + other.tail_bound)
    }

    /// `t · μ` for `t > 0`.
    pub fn scaled(&self, t: f64) -> Result<Measure> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("scale must be positive, got {t}")));
        }
        let atoms = self.atoms.iter().map(|a| Atom { mass: a.mass * t, ..*a }).collect();
        let density = match &self.density {
            Density::Zero => Density::Zero,
            Density::Constant { value } => Density::Constant { value: value * t },
            Density::DistancePower { alpha, base, scale } => {
                Density::DistancePower { alpha: *alpha, base: base.clone(), scale: scale * t }
            }
            Density::Tabulated { values, interpolation } => Density::Tabulated {
                values: values.iter().map(|v| v * t).collect(),
                interpolation: *interpolation,
            },
        };
        Measure::new(atoms, density, self.tail_bound * t)
    }

    /// Pushforward under rotation by `phi`.
    pub fn rotated(&self, phi: f64) -> Result<Measure> {
        let atoms = self.atoms.iter().map(|a| Atom::with_offset(a.theta + phi, a.offset, a.mass)).collect();
        let density = match &self.density {
            Density::DistancePower { alpha, base, scale } => Density::DistancePower {
                alpha: *alpha,
                base: BaseSet {
                    points: base.points.iter().map(|p| normalize_angle(p + phi)).collect(),
                    cantor: base.cantor.iter().map(|c| c.rotated(phi)).collect(),
                },
                scale: *scale,
            },
            Density::Tabulated { .. } => {
                return Err(Error::invalid("rotation of tabulated densities is not supported"));
            }
            d => d.clone(),
        };
        Measure::new(atoms, density, self.tail_bound)
    }

    /// Density value `w(θ)` (against `dm`).
    pub fn density_at(&self, theta: f64) -> f64 {
        match &self.density {
            Density::Zero => 0.0,
            Density::Constant { value } => *value,
            Density::DistancePower { alpha, scale, .. } => scale * self.distance_to_base(theta).powf(*alpha),
            Density::Tabulated { values, interpolation } => tabulated_value(values, *interpolation, theta),
        }
    }

    fn distance_to_base(&self, theta: f64) -> f64 {
        let iv = &self.cache.intervals;
        if iv.is_empty() {
            return PI;
        }
        let t = normalize_angle(theta);
        let idx = iv.partition_point(|&(lo, _)| lo <= t);
        let (plo, phi) = if idx == 0 {
            let (lo, hi) = iv[iv.len() - 1];
            (lo - TAU, hi - TAU)
        } else {
            iv[idx - 1]
        };
        if t >= plo && t <= phi {
            return 0.0;
        }
        let next_lo = if idx == iv.len() { iv[0].0 + TAU } else { iv[idx].0 };
        // the previous interval may also wrap past 2π and cover t from below
        let wrap_cover = {
            let (lo, hi) = iv[iv.len() - 1];
            hi > TAU && t + TAU >= lo && t + TAU <= hi
        };
        if wrap_cover {
            return 0.0;
        }
        (t - phi).min(next_lo - t)
    }

    /// Total mass as an interval: `value` is the represented mass and
    /// `error` is the truncation bound.
    pub fn total_mass(&self) -> Estimate {
        let atoms = summation::sum(self.atoms.iter().map(|a| a.mass));
        Estimate { value: atoms + self.density_mass(), error: self.tail_bound }
    }

    fn density_mass(&self) -> f64 {
        match &self.density {
            Density::Zero => 0.0,
            Density::Constant { value } => *value,
            Density::DistancePower { alpha, scale, .. } => {
                // each gap of length g contributes 2∫₀^{g/2} t^α dt
                let p = alpha + 1.0;
                let s = summation::sum(self.cache.gaps.iter().map(|&(u, v)| 2.0 * (0.5 * (v - u)).powf(p) / p));
                scale * s / TAU
            }
            Density::Tabulated { values, .. } => summation::sum(values.iter().copied()) / values.len() as f64,
        }
    }

    /// Mass carried by atoms lying within `ANGLE_TOL` of the given points.
    pub fn atom_mass_at(&self, points: &[f64]) -> f64 {
        summation::sum(
            self.atoms
                .iter()
                .filter(|a| points.iter().any(|&p| a.displacement_from(p).abs() <= ANGLE_TOL))
                .map(|a| a.mass),
        )
    }

    /// Atom part of `P_μ` at the point `(1-x)e^{iθ}`.
    pub fn atoms_poisson(&self, theta: f64, x: f64) -> f64 {
        let num = x * (2.0 - x);
        let radial = 1.0 - x;
        let mut acc = Neumaier::new();
        for a in &self.atoms {
            let d = a.displacement_from(theta);
            acc.add(a.mass * num / (x * x + radial * chord_squared(d)));
        }
        acc.total()
    }

    /// `P_μ((1-x)e^{iθ})` for `x ∈ (0, 1]`, with `x = 1 - |z|` passed directly
    /// to avoid cancellation near the boundary.
    pub fn poisson_polar(&self, theta: f64, x: f64, tol: &Tolerance) -> Result<Estimate> {
        if !(x > 0.0) {
            return Err(Error::OutsideDisc(1.0 - x));
        }
        if x > 1.0 {
            return Err(Error::invalid(format!("1 - |z| must lie in (0, 1], got {x}")));
        }
        let atoms = self.atoms_poisson(theta, x);
        let dens = self.density_poisson(theta, x, tol)?;
        let tail = if self.tail_bound > 0.0 { self.tail_bound * (2.0 - x) / x } else { 0.0 };
        Ok(Estimate { value: atoms + dens.value, error: dens.error + tail })
    }

    /// `P_μ(z)` for `|z| < 1`.
    pub fn poisson(&self, z: Complex64, tol: &Tolerance) -> Result<Estimate> {
        let r = z.norm();
        if !(r < 1.0) {
            return Err(Error::OutsideDisc(r));
        }
        let theta = if r == 0.0 { 0.0 } else { normalize_angle(z.arg()) };
        self.poisson_polar(theta, 1.0 - r, tol)
    }

    /// Density part of `P_μ((1-x)e^{iθ})`.
    pub fn density_poisson(&self, theta: f64, x: f64, tol: &Tolerance) -> Result<Estimate> {
        match &self.density {
            Density::Zero => Ok(Estimate::ZERO),
            // mean value property
            Density::Constant { value } => Ok(Estimate::exact(*value)),
            _ => {
                let num = x * (2.0 - x);
                let radial = 1.0 - x;
                let kernel = |t: f64| num / (x * x + radial * chord_squared(t - theta));
                let breaks = quad::geometric_breaks(theta, x, theta - PI, theta + PI);
                self.integrate_density(kernel, None, &breaks, tol)
            }
        }
    }

    /// `(1/2π)∫ w(t) g(t) dt` over `domain` (default the whole circle).
    ///
    /// `breaks` are angles where `g` needs resolving; they are lifted into
    /// the domain modulo 2π.
    pub fn integrate_density<G: FnMut(f64) -> f64>(
        &self,
        mut g: G,
        domain: Option<(f64, f64)>,
        breaks: &[f64],
        tol: &Tolerance,
    ) -> Result<Estimate> {
        let (lo, hi) = domain.unwrap_or((0.0, TAU));
        if !(hi > lo) || hi - lo > TAU + ANGLE_TOL {
            return Err(Error::invalid("density integration domain must have length in (0, 2π]"));
        }
        let est = match &self.density {
            Density::Zero => Estimate::ZERO,
            Density::Constant { value } => {
                let mut pts = lift_all(breaks, lo, hi);
                pts.extend([lo, hi]);
                let e = quad::integrate(&mut g, &pts, tol)?;
                e.scale(*value)
            }
            Density::Tabulated { values, interpolation } => {
                let n = values.len();
                let mut pts = lift_all(breaks, lo, hi);
                pts.extend([lo, hi]);
                let nodes: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
                pts.extend(lift_all(&nodes, lo, hi));
                let interp = *interpolation;
                quad::integrate(|t| tabulated_value(values, interp, t) * g(t), &pts, tol)?
            }
            Density::DistancePower { alpha, scale, .. } => {
                let alpha = *alpha;
                let mut total = Estimate::ZERO;
                for &(u, v) in &self.cache.gaps {
                    for shift in [-TAU, 0.0, TAU] {
                        let (gu, gv) = (u + shift, v + shift);
                        let (a, b) = (gu.max(lo), gv.min(hi));
                        if b <= a {
                            continue;
                        }
                        let m = 0.5 * (gu + gv);
                        let w = |t: f64| (t - gu).min(gv - t).max(0.0).powf(alpha);
                        // left half: cusp at gu
                        if a < m {
                            let e = m.min(b);
                            total += cusp_piece(&mut g, &w, gu, a, e, breaks, tol)?;
                        }
                        if b > m {
                            let s = m.max(a);
                            total += cusp_piece(&mut g, &w, gv, s, b, breaks, tol)?;
                        }
                    }
                }
                total.scale(*scale)
            }
        };
        Ok(est.scale(1.0 / TAU))
    }

    /// Discontinuity and kink locations of the density.
    pub fn density_breaks(&self) -> Vec<f64> {
        match &self.density {
            Density::Zero | Density::Constant { .. } => vec![],
            Density::Tabulated { values, .. } => (0..values.len()).map(|k| TAU * k as f64 / values.len() as f64).collect(),
            Density::DistancePower { .. } => {
                let mut v = Vec::with_capacity(self.cache.gaps.len() * 3);
                for &(u, w) in &self.cache.gaps {
                    v.extend([normalize_angle(u), normalize_angle(0.5 * (u + w)), normalize_angle(w)]);
                }
                v
            }
        }
    }

    /// `V₂(μ)(ζ) = ∫ dμ(e^{it}) / |e^{it} - ζ|²`.
    pub fn newtonian_potential(&self, theta: f64, tol: &Tolerance) -> Result<Potential> {
        let mut acc = Neumaier::new();
        for a in &self.atoms {
            let d = a.displacement_from(theta);
            if d.abs() <= ANGLE_TOL {
                return Ok(Potential::Infinite);
            }
            acc.add(a.mass / chord_squared(d));
        }
        let dens = match &self.density {
            Density::Zero => Estimate::ZERO,
            Density::Constant { value } if *value == 0.0 => Estimate::ZERO,
            // kernel is not integrable against a weight that is positive
            // near θ or vanishes only like dist^α with α < 1
            Density::Constant { .. } | Density::DistancePower { .. } => return Ok(Potential::Infinite),
            Density::Tabulated { values, interpolation } => match zero_run(values, *interpolation, theta) {
                None => return Ok(Potential::Infinite),
                Some((zlo, zhi)) => {
                    let t0 = theta;
                    let g = |t: f64| 1.0 / chord_squared(t - t0);
                    if zhi - zlo >= TAU {
                        Estimate::ZERO
                    } else {
                        self.integrate_density(g, Some((zhi, zlo + TAU)), &[], tol)?
                    }
                }
            },
        };
        Ok(Potential::Finite(Estimate { value: acc.total() + dens.value, error: dens.error }))
    }

    /// `∫ log V₂(μ) dm` over the circle with `2^{-j}`-neighborhoods of the
    /// atoms removed, reported as a sequence over `j` with a verdict on the
    /// limit.
    pub fn guillot_integral(&self, n_panels: usize, tol: &Tolerance) -> Result<DivergenceReport> {
        if n_panels < 16 {
            return Err(Error::invalid("guillot integral needs at least 16 panels"));
        }
        if self.has_density() {
            return Ok(DivergenceReport {
                classification: Classification::DivergesToPlusInfinity,
                note: Some("density part makes V2 infinite on a set of positive measure".into()),
                ..Default::default()
            });
        }
        if self.atoms.is_empty() {
            return Ok(DivergenceReport {
                classification: Classification::DivergesToMinusInfinity,
                note: Some("zero measure: log V2 is -inf everywhere".into()),
                ..Default::default()
            });
        }

        let mut angles: Vec<f64> = self.atoms.iter().map(|a| a.angle()).collect();
        angles.sort_by(f64::total_cmp);
        angles.dedup_by(|a, b| (*a - *b).abs() <= ANGLE_TOL);

        let mut gaps: Vec<(f64, f64)> = angles.windows(2).map(|w| (w[0], w[1])).collect();
        gaps.push((angles[angles.len() - 1], angles[0] + TAU));

        const J_MIN: i32 = 3;
        let j_max = if self.tail_bound > 0.0 && angles.len() > 1 {
            let min_gap = gaps.iter().map(|&(u, v)| v - u).fold(f64::INFINITY, f64::min);
            ((2.0 / min_gap).log2().floor() as i32).clamp(J_MIN + 5, 40)
        } else {
            40
        };
        let radii: Vec<f64> = (J_MIN..=j_max).map(|j| 2f64.powi(-j)).collect();
        let grid: Vec<f64> = (0..=n_panels).map(|k| TAU * k as f64 / n_panels as f64).collect();

        let atoms = &self.atoms;
        let log_v2 = |t: f64| {
            let mut acc = Neumaier::new();
            for a in atoms {
                acc.add(a.mass / chord_squared(a.displacement_from(t)));
            }
            acc.total().ln()
        };

        let mut accs = vec![Neumaier::new(); radii.len()];
        let mut err = 0.0;
        for &(u, v) in &gaps {
            let half = 0.5 * (v - u);
            let m = u + half;
            for (cusp, dir) in [(u, 1.0), (v, -1.0)] {
                // radii below half the gap, largest first
                let live: Vec<usize> = (0..radii.len()).filter(|&k| radii[k] < half).collect();
                let Some(&first) = live.first() else { continue };
                let core_lo = cusp + dir * radii[first];
                let (a, b) = if dir > 0.0 { (core_lo, m) } else { (m, core_lo) };
                let mut pts = lift_all(&grid, a, b);
                pts.extend([a, b]);
                let core = quad::integrate(&log_v2, &pts, tol)?;
                err += core.error;
                let mut running = core.value;
                for (pos, &k) in live.iter().enumerate() {
                    if pos > 0 {
                        let outer = cusp + dir * radii[live[pos - 1]];
                        let inner = cusp + dir * radii[k];
                        let (a, b) = if dir > 0.0 { (inner, outer) } else { (outer, inner) };
                        let piece = quad::integrate(&log_v2, &[a, b], tol)?;
                        err += piece.error;
                        running += piece.value;
                    }
                    accs[k].add(running);
                }
            }
        }

        let checkpoints: Vec<Checkpoint> = accs
            .iter()
            .zip(J_MIN..)
            .map(|(acc, j)| Checkpoint { n: j as u64, value: acc.total() / TAU })
            .collect();
        let (classification, limit) = classify_refinement(&checkpoints);
        Ok(DivergenceReport {
            checkpoints,
            classification,
            limit,
            note: Some(format!("checkpoint n = j, neighbourhood radius 2^-j; quadrature error {:.3e}", err / TAU)),
            ..Default::default()
        })
    }
}

/// Verdict on a sequence `I_j` of values under geometric refinement: a finite
/// limit when increments decay at least geometrically (ratio ≤ 0.7 over the
/// last three steps), divergence to +∞ when the last three increments are
/// positive and decay no faster than ratio 0.8.
pub fn classify_refinement(values: &[Checkpoint]) -> (Classification, Option<f64>) {
    if values.len() < 4 {
        return (Classification::Inconclusive, None);
    }
    let n = values.len();
    let d: Vec<f64> = values.windows(2).map(|w| w[1].value - w[0].value).collect();
    let m = d.len();
    let (d1, d2, d3) = (d[m - 3], d[m - 2], d[m - 1]);
    let last = values[n - 1].value;
    let tiny = 1e-14 * (1.0 + last.abs());
    if d3.abs() <= tiny && d2.abs() <= tiny {
        return (Classification::Converges, Some(last));
    }
    let r1 = d2 / d1;
    let r2 = d3 / d2;
    if r1.abs() <= 0.7 && r2.abs() <= 0.7 && r1.is_finite() && r2.is_finite() {
        let q = r2;
        let limit = last + d3 * q / (1.0 - q);
        return (Classification::Converges, Some(limit));
    }
    if d1 > 0.0 && d2 > 0.0 && d3 > 0.0 && r1 >= 0.8 && r2 >= 0.8 {
        return (Classification::DivergesToPlusInfinity, None);
    }
    if d1 < 0.0 && d2 < 0.0 && d3 < 0.0 && r1 >= 0.8 && r2 >= 0.8 {
        return (Classification::DivergesToMinusInfinity, None);
    }
    (Classification::Inconclusive, None)
}

/// Integrates `w·g` over `[a, b]` where `w` has an algebraic cusp at `cusp`
/// (one of the endpoints), using `t = cusp ± h·y⁴` so the integrand is smooth
/// in `y`.
fn cusp_piece<G: FnMut(f64) -> f64, W: Fn(f64) -> f64>(
    g: &mut G,
    w: &W,
    cusp: f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: &Tolerance,
) -> Result<Estimate> {
    let at_left = (a - cusp).abs() <= 1e-15 * (1.0 + cusp.abs());
    let at_right = (b - cusp).abs() <= 1e-15 * (1.0 + cusp.abs());
    let lifted = lift_all(breaks, a, b);
    if !(at_left || at_right) {
        let mut pts = lifted;
        pts.extend([a, b]);
        return Ok(quad::integrate(|t| w(t) * g(t), &pts, tol)?);
    }
    let (c, h) = if at_left { (a, b - a) } else { (b, a - b) };
    let mut ys: Vec<f64> = lifted.iter().map(|&t| ((t - c) / h).max(0.0).powf(0.25)).filter(|y| *y > 0.0 && *y < 1.0).collect();
    ys.extend([0.0, 1.0]);
    let e = quad::integrate(
        |y| {
            let y3 = y * y * y;
            let t = c + h * y3 * y;
            w(t) * g(t) * 4.0 * h.abs() * y3
        },
        &ys,
        tol,
    )?;
    Ok(e)
}

/// Copies of the given angles (mod 2π) lying strictly inside `(lo, hi)`.
fn lift_all(angles: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for &t in angles {
        let base = lo + normalize_angle(t - lo);
        let mut s = base;
        while s < hi {
            if s > lo {
                out.push(s);
            }
            s += TAU;
        }
    }
    out
}

fn tabulated_value(values: &[f64], interp: Interpolation, theta: f64) -> f64 {
    let n = values.len();
    let pos = normalize_angle(theta) / TAU * n as f64;
    let k = (pos.floor() as usize).min(n - 1);
    match interp {
        Interpolation::PiecewiseConstant => values[k],
        Interpolation::Linear => {
            let frac = pos - k as f64;
            values[k] * (1.0 - frac) + values[(k + 1) % n] * frac
        }
    }
}

/// The maximal open interval around `theta` on which the tabulated density
/// vanishes, if `theta` lies strictly inside one.
fn zero_run(values: &[f64], interp: Interpolation, theta: f64) -> Option<(f64, f64)> {
    let n = values.len();
    if values.iter().all(|&v| v == 0.0) {
        return Some((0.0, TAU));
    }
    let h = TAU / n as f64;
    let t = normalize_angle(theta);
    let k = ((t / h).floor() as usize).min(n - 1);
    // for linear interpolation the cell [k, k+1] vanishes iff both ends do;
    // for piecewise constant iff values[k] does
    let cell_zero = |c: usize| match interp {
        Interpolation::Linear => values[c % n] == 0.0 && values[(c + 1) % n] == 0.0,
        Interpolation::PiecewiseConstant => values[c % n] == 0.0,
    };
    if !cell_zero(k) {
        return None;
    }
    let mut lo_cell = k as i64;
    while cell_zero(((lo_cell - 1).rem_euclid(n as i64)) as usize) {
        lo_cell -= 1;
    }
    let mut hi_cell = k as i64;
    while cell_zero(((hi_cell + 1).rem_euclid(n as i64)) as usize) {
        hi_cell += 1;
    }
    let lo = lo_cell as f64 * h;
    let hi = (hi_cell + 1) as f64 * h;
    let (lo, hi) = if t < lo { (lo - TAU, hi - TAU) } else { (lo, hi) };
    if t > lo + ANGLE_TOL && t < hi - ANGLE_TOL {
        Some((lo, hi))
    } else {
        None
    }
}

fn merge_atoms(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.sort_by(|a, b| a.theta.total_cmp(&b.theta).then(a.offset.total_cmp(&b.offset)));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        if let Some(last) = out.last_mut() {
            let same_anchor = wrap_difference(last.theta - a.theta).abs() <= ANGLE_TOL;
            let same_offset = (last.offset - a.offset).abs() <= ANGLE_TOL * last.offset.abs().max(a.offset.abs())
                || (last.offset == 0.0 && a.offset == 0.0);
            if same_anchor && same_offset {
                last.mass += a.mass;
                continue;
            }
        }
        out.push(a);
    }
    // anchors just below 2π and just above 0 denote the same point
    if out.len() > 1 {
        let (f, l) = (out[0], out[out.len() - 1]);
        if wrap_difference(l.theta - f.theta).abs() <= ANGLE_TOL && f.offset == 0.0 && l.offset == 0.0 {
            out[0].mass += l.mass;
            out.pop();
        }
    }
    out
}

fn build_cache(density: &Density) -> Result<DensityCache> {
    match density {
        Density::Zero => Ok(DensityCache::default()),
        Density::Constant { value } => {
            if !(*value >= 0.0 && value.is_finite()) {
                return Err(Error::invalid(format!("constant density must be finite and >= 0, got {value}")));
            }
            Ok(DensityCache::default())
        }
        Density::Tabulated { values, .. } => {
            if values.is_empty() || values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::invalid("tabulated density needs a non-empty list of finite values >= 0"));
            }
            Ok(DensityCache::default())
        }
        Density::DistancePower { alpha, base, scale } => {
            if !(*alpha > 0.0 && *alpha < 1.0) {
                return Err(Error::invalid(format!("distance power alpha must lie in (0, 1), got {alpha}")));
            }
            if !(*scale > 0.0 && scale.is_finite()) {
                return Err(Error::invalid("distance power scale must be positive"));
            }
            let mut raw: Vec<(f64, f64)> = Vec::new();
            for &p in &base.points {
                if !p.is_finite() {
                    return Err(Error::invalid("base points must be finite"));
                }
                let p = normalize_angle(p);
                raw.push((p, p));
            }
            for spec in &base.cantor {
                for arc in spec.arcs()? {
                    raw.push((arc.start(), arc.end()));
                }
            }
            if raw.is_empty() {
                return Err(Error::invalid("distance power needs a non-empty base set"));
            }
            raw.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut intervals: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
            for (lo, hi) in raw {
                match intervals.last_mut() {
                    Some(last) if lo <= last.1 + ANGLE_TOL => last.1 = last.1.max(hi),
                    _ => intervals.push((lo, hi)),
                }
            }
            // the last interval may wrap into the first ones
            while intervals.len() > 1 {
                let last_hi = intervals[intervals.len() - 1].1;
                if last_hi - TAU + ANGLE_TOL >= intervals[0].0 {
                    let first = intervals.remove(0);
                    let l = intervals.len() - 1;
                    intervals[l].1 = intervals[l].1.max(first.1 + TAU);
                } else {
                    break;
                }
            }
            let n = intervals.len();
            let mut gaps = Vec::with_capacity(n);
            for i in 0..n {
                let u = intervals[i].1;
                let v = if i + 1 < n { intervals[i + 1].0 } else { intervals[0].0 + TAU };
                if v - u > ANGLE_TOL {
                    gaps.push((u, v));
                }
            }
            Ok(DensityCache { intervals, gaps })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{lemcap_measure, LengthsRule};
    use crate::geometry::Arc;
    use proptest::prelude::*;

    fn tol() -> Tolerance {
        Tolerance::relative(1e-12)
    }

    fn sample_measures() -> Vec<Measure> {
        vec![
            Measure::lebesgue(),
            Measure::dirac(0.0, 1.0).unwrap(),
            Measure::new(vec![Atom::new(1.0, 0.3), Atom::new(4.0, 0.2)], Density::Constant { value: 0.5 }, 0.0).unwrap(),
            Measure::new(
                vec![],
                Density::DistancePower { alpha: 0.5, base: BaseSet { points: vec![0.0, 2.0], cantor: vec![] }, scale: 1.0 },
                0.0,
            )
            .unwrap(),
        ]
    }

    #[test]
    fn total_mass_examples() {
        assert_eq!(Measure::lebesgue().total_mass().value, 1.0);
        let m = Measure::new(vec![Atom::new(0.4, 0.3)], Density::Constant { value: 0.5 }, 0.0).unwrap();
        assert!((m.total_mass().value - 0.8).abs() < 1e-15);
    }

    #[test]
    fn distance_power_mass_matches_quadrature() {
        let m = &sample_measures()[3];
        let closed = m.total_mass().value;
        let quad = m.integrate_density(|_| 1.0, None, &[], &tol()).unwrap().value;
        assert!((closed - quad).abs() < 1e-12, "{closed} vs {quad}");
        // brute-force midpoint oracle
        let n = 2_000_000;
        let h = TAU / n as f64;
        let brute: f64 = (0..n).map(|k| m.density_at((k as f64 + 0.5) * h)).sum::<f64>() * h / TAU;
        assert!((closed - brute).abs() < 1e-7);
    }

    #[test]
    fn duplicate_atoms_merge() {
        let m = Measure::new(vec![Atom::new(1.0, 0.25), Atom::new(1.0 + 1e-14, 0.5), Atom::new(TAU + 1.0, 0.25)], Density::Zero, 0.0).unwrap();
        assert_eq!(m.atoms().len(), 1);
        assert!((m.atoms()[0].mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_measures_rejected() {
        assert!(Measure::new(vec![Atom::new(0.0, -1.0)], Density::Zero, 0.0).is_err());
        assert!(Measure::new(vec![], Density::Zero, -1.0).is_err());
        assert!(Measure::new(vec![], Density::Constant { value: -0.1 }, 0.0).is_err());
    }

    #[test]
    fn poisson_examples() {
        let leb = Measure::lebesgue();
        for z in [Complex64::new(0.3, 0.4), Complex64::new(-0.999, 0.0), Complex64::new(0.0, 0.0)] {
            assert!((leb.poisson(z, &tol()).unwrap().value - 1.0).abs() < 1e-10);
        }
        let delta = Measure::dirac(0.0, 1.0).unwrap();
        let p = delta.poisson(Complex64::new(0.5, 0.0), &tol()).unwrap().value;
        assert!((p - 3.0).abs() < 1e-14);
        assert_eq!(leb.poisson(Complex64::new(1.0, 0.0), &tol()), Err(Error::OutsideDisc(1.0)));
    }

    #[test]
    fn poisson_of_lemcap_matches_brute_force_sum() {
        let a = 0.125;
        let mu = lemcap_measure(0.0, a, 60).unwrap();
        let x = a; // z = (1 - a)·1
        let p = mu.poisson(Complex64::new(1.0 - a, 0.0), &tol()).unwrap();
        // oracle: sum the kernel directly over atoms k = 2..60 in complex form
        let z = Complex64::new(1.0 - x, 0.0);
        let mut brute = 0.0;
        for k in (2..=60).rev() {
            let ang = a.powi(k);
            let zeta = Complex64::from_polar(1.0, ang);
            brute += a / (k * k) as f64 * (1.0 - z.norm_sqr()) / (zeta - z).norm_sqr();
        }
        assert!((p.value - brute).abs() < 1e-13 * brute, "{} vs {brute}", p.value);
        // truncated mass a·Σ_{k>60} k⁻² ≈ a/60 sits at distance ~0, weighted by (2-x)/x
        let tail = a * crate::constructions::zeta2_tail(60) * (2.0 - x) / x;
        assert!((p.error - tail).abs() < 1e-15 && tail < 0.04);
    }

    #[test]
    fn poisson_density_quadrature_mean_value() {
        // ∫P_μ(re^{iφ}) dφ/2π = total mass for every r
        let m = &sample_measures()[3];
        let x = 1e-3;
        let mean = quad::integrate(
            |phi| m.poisson_polar(phi, x, &Tolerance::relative(1e-12)).unwrap().value,
            &(0..=64).map(|k| TAU * k as f64 / 64.0).chain(m.density_breaks()).collect::<Vec<_>>(),
            &Tolerance::relative(1e-10),
        )
        .unwrap()
        .value
            / TAU;
        assert!((mean - m.total_mass().value).abs() < 1e-8, "{mean}");
    }

    #[test]
    fn newtonian_examples() {
        let delta = Measure::dirac(0.0, 1.0).unwrap();
        match delta.newtonian_potential(PI, &tol()).unwrap() {
            Potential::Finite(e) => assert!((e.value - 0.25).abs() < 1e-15),
            Potential::Infinite => panic!(),
        }
        assert_eq!(delta.newtonian_potential(0.0, &tol()).unwrap(), Potential::Infinite);
        assert_eq!(Measure::lebesgue().newtonian_potential(1.0, &tol()).unwrap(), Potential::Infinite);
    }

    #[test]
    fn lebesgue_newtonian_partial_integrals_grow() {
        // oracle for the infinite sentinel: ∫_{|t|>ε} dt/|e^{it}-1|² /2π grows like 1/(πε)
        let mut prev = 0.0;
        for j in 1..8 {
            let eps = 10f64.powi(-j);
            let v = quad::integrate(|t| 1.0 / chord_squared(t), &[eps, PI], &tol()).unwrap().value / PI;
            assert!(v > 5.0 * prev);
            prev = v;
        }
    }

    #[test]
    fn tabulated_density_with_zero_run() {
        let mut values = vec![1.0; 64];
        for v in values.iter_mut().take(20).skip(8) {
            *v = 0.0;
        }
        let m = Measure::new(vec![], Density::Tabulated { values, interpolation: Interpolation::Linear }, 0.0).unwrap();
        let inside = TAU * 13.0 / 64.0;
        assert!(matches!(m.newtonian_potential(inside, &tol()).unwrap(), Potential::Finite(_)));
        assert_eq!(m.newtonian_potential(1e-3, &tol()).unwrap(), Potential::Infinite);
        let q = m.integrate_density(|_| 1.0, None, &[], &tol()).unwrap().value;
        assert!((q - m.total_mass().value).abs() < 1e-12);
    }

    #[test]
    fn guillot_single_atom_limit_is_zero() {
        let r = Measure::dirac(0.0, 1.0).unwrap().guillot_integral(64, &tol()).unwrap();
        assert_eq!(r.classification, Classification::Converges);
        assert!(r.limit.unwrap().abs() < 1e-4, "{:?}", r.limit);
    }

    #[test]
    fn guillot_mass_shift_is_log_mass() {
        let r = Measure::dirac(0.0, 2.0).unwrap().guillot_integral(64, &tol()).unwrap();
        assert_eq!(r.classification, Classification::Converges);
        assert!((r.limit.unwrap() - 2f64.ln()).abs() < 1e-4);
    }

    #[test]
    fn guillot_with_density_diverges() {
        let r = Measure::lebesgue().guillot_integral(64, &tol()).unwrap();
        assert_eq!(r.classification, Classification::DivergesToPlusInfinity);
    }

    #[test]
    fn cantor_base_distance() {
        let spec = CantorSpec { lengths: LengthsRule::Geometric { q: 3.0 }, levels: 2, base_arc: Arc::new(0.0, 3.0).unwrap() };
        let m = Measure::new(vec![], Density::DistancePower { alpha: 0.5, base: BaseSet { points: vec![], cantor: vec![spec] }, scale: 1.0 }, 0.0).unwrap();
        // level-2 arcs: [0,1/3],[2/3,1],[2,7/3],[8/3,3]; the middle gap (1, 2)
        assert_eq!(m.density_at(0.2), 0.0);
        assert!((m.density_at(1.5) - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((m.density_at(0.5) - (1.0f64 / 6.0).sqrt()).abs() < 1e-14);
        // big gap (3, 2π) has half-width (2π-3)/2
        assert!((m.density_at(3.0 + 0.5 * (TAU - 3.0)) - (0.5 * (TAU - 3.0)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn measure_json_roundtrip() {
        let src = r#"{"atoms":[{"theta":1.0,"mass":0.5},{"theta":2.0,"offset":1e-9,"mass":0.25}],
                      "density":{"kind":"distance_power","alpha":0.5,"base":{"points":[3.0]}},"tail_bound":1e-6}"#;
        let m: Measure = serde_json::from_str(src).unwrap();
        assert_eq!(m.atoms().len(), 2);
        let back: Measure = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(m, back);
        assert!(serde_json::from_str::<Measure>(r#"{"atoms":[],"bogus":1}"#).is_err());
        assert!(serde_json::from_str::<Measure>(r#"{"density":{"kind":"constant","value":1,"extra":2}}"#).is_err());
    }

    fn arb_measure() -> impl Strategy<Value = Measure> {
        (
            proptest::collection::vec((0.0f64..TAU, 0.01f64..2.0), 0..5),
            prop_oneof![Just(0usize), Just(1), Just(2)],
            0.0f64..2.0,
        )
            .prop_map(|(atoms, kind, c)| {
                let atoms = atoms.into_iter().map(|(t, m)| Atom::new(t, m)).collect();
                let density = match kind {
                    0 => Density::Zero,
                    1 => Density::Constant { value: c },
                    _ => Density::DistancePower { alpha: 0.5, base: BaseSet { points: vec![c, c + 2.0], cantor: vec![] }, scale: 0.5 },
                };
                Measure::new(atoms, density, 0.0).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn poisson_at_origin_is_total_mass(m in arb_measure()) {
            let p = m.poisson(Complex64::new(0.0, 0.0), &tol()).unwrap();
            prop_assert!((p.value - m.total_mass().value).abs() <= 1e-10 * (1.0 + p.value));
        }

        #[test]
        fn poisson_is_rotation_equivariant(m in arb_measure(), phi in -3.0f64..3.0, r in 0.0f64..0.95, t in 0.0f64..TAU) {
            let z = Complex64::from_polar(r, t);
            let zr = Complex64::from_polar(r, t + phi);
            let a = m.poisson(z, &tol()).unwrap().value;
            let b = m.rotated(phi).unwrap().poisson(zr, &tol()).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a) * 10.0, "{} vs {}", a, b);
        }

        #[test]
        fn potentials_are_additive(m1 in arb_measure(), atoms in proptest::collection::vec((0.0f64..TAU, 0.01f64..1.0), 1..4), r in 0.0f64..0.9, t in 0.0f64..TAU) {
            let m2 = Measure::new(atoms.into_iter().map(|(t, m)| Atom::new(t, m)).collect(), Density::Zero, 0.0).unwrap();
            let sum = m1.plus(&m2).unwrap();
            let z = Complex64::from_polar(r, t);
            let lhs = sum.poisson(z, &tol()).unwrap();
            let rhs = m1.poisson(z, &tol()).unwrap() + m2.poisson(z, &tol()).unwrap();
            prop_assert!((lhs.value - rhs.value).abs() <= lhs.error + rhs.error + 1e-12 * (1.0 + lhs.value));
            prop_assert!(lhs.value >= 0.0);
            if !m1.has_density() {
                let (a, b, c) = (sum.newtonian_potential(t, &tol()).unwrap(), m1.newtonian_potential(t, &tol()).unwrap(), m2.newtonian_potential(t, &tol()).unwrap());
                if let (Potential::Finite(a), Potential::Finite(b), Potential::Finite(c)) = (a, b, c) {
                    prop_assert!((a.value - b.value - c.value).abs() <= 1e-10 * (1.0 + a.value));
                    prop_assert!(a.value >= 0.0);
                }
            }
        }
    }
}
