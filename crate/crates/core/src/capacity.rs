//! Two-sided capacity estimator for arcs and points.
//!
//! For an arc `I` with midpoint `ζ` the estimator is
//! `W = 1 + ∫_{|I|}^{1} dx / (x P_μ((1-x)ζ) + x²)`, comparable to `1/c_μ(I)`
//! up to absolute constants. The integral is evaluated in `s = ln x`, where it
//! becomes `∫ ds / (P_μ + x)`. For a point the lower limit goes to zero and
//! the question is whether the integral converges.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Arc, CirclePoint};
use crate::holomorphic::{self, BoundaryFunction};
use crate::measures::Measure;
use crate::quad::{self, Estimate, Tolerance};
use crate::summation::Neumaier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityStatus {
    Finite,
    Zero,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub w_value: f64,
    pub cap_scale: f64,
    pub quad_error: f64,
    pub zero_flag: bool,
    pub status: CapacityStatus,
}

impl CapacityEstimate {
    fn finite(w: Estimate, status: CapacityStatus) -> Self {
        CapacityEstimate { w_value: w.value, cap_scale: 1.0 / w.value, quad_error: w.error, zero_flag: false, status }
    }
}

/// Schedule `2^{-j}`, `j = 1..=64`.
pub fn default_schedule() -> Vec<f64> {
    (1..=64).map(|j| 0.5f64.powi(j)).collect()
}

/// `∫_{x_lo}^{x_hi} dx / (x P_μ((1-x)ζ) + x²)` in the log variable.
fn capacity_integral(mu: &Measure, theta: f64, x_lo: f64, x_hi: f64, tol: &Tolerance) -> Result<Estimate> {
    if !(x_lo < x_hi) {
        return Ok(Estimate::ZERO);
    }
    let (s_lo, s_hi) = (x_lo.ln(), x_hi.ln());
    // half-octave panels plus the scales at which nearby atoms switch from
    // "far" to "close"
    let step = 0.5 * std::f64::consts::LN_2;
    let mut pts = vec![s_lo, s_hi];
    let mut s = s_hi - step;
    while s > s_lo {
        pts.push(s);
        s -= step;
    }
    let mut scales: Vec<f64> = mu
        .atoms()
        .iter()
        .map(|a| a.displacement_from(theta).abs())
        .filter(|&d| d > x_lo && d < x_hi)
        .map(f64::ln)
        .collect();
    scales.sort_by(f64::total_cmp);
    scales.dedup_by(|a, b| (*a - *b).abs() < 0.05);
    pts.extend(scales);

    let inner = Tolerance { rtol: tol.rtol * 0.1, ..*tol };
    let mut failed: Option<Error> = None;
    let mut perr_acc = 0.0f64;
    let g = |s: f64| {
        let x = s.exp();
        match mu.poisson_polar(theta, x, &inner) {
            Ok(p) => {
                let v = 1.0 / (p.value + x);
                // first-order propagation of the potential's error bracket
                let lo = 1.0 / ((p.value - p.error).max(0.0) + x);
                perr_acc = perr_acc.max(lo - v);
                v
            }
            Err(e) => {
                failed.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let est = quad::integrate(g, &pts, tol);
    if let Some(e) = failed {
        return Err(e);
    }
    let mut est = est?;
    // worst pointwise perturbation times the length in s
    est.error += perr_acc * (s_hi - s_lo);
    Ok(est)
}

/// Capacity scale of the arc `I`.
pub fn arc_capacity(mu: &Measure, arc: &Arc, tol: &Tolerance) -> Result<CapacityEstimate> {
    let len = arc.length();
    if len >= 1.0 {
        return Ok(CapacityEstimate::finite(Estimate::exact(1.0), CapacityStatus::Finite));
    }
    let w = capacity_integral(mu, arc.midpoint().theta(), len, 1.0, tol)?;
    Ok(CapacityEstimate::finite(Estimate { value: 1.0 + w.value, error: w.error }, CapacityStatus::Finite))
}

/// Partial integrals of the point-capacity integral along a schedule and the
/// convergence verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCapacityReport {
    pub estimate: CapacityEstimate,
    /// `(x_min, W(x_min))` pairs.
    pub partials: Vec<(f64, f64)>,
    /// Increment per unit of `log10 x` for each complete decade.
    pub decade_rates: Vec<f64>,
}

/// `∫_0^{upper}` of the capacity integrand at `ζ`, as partial integrals down
/// to each schedule entry (which must lie below `upper`).
fn schedule_increments(mu: &Measure, theta: f64, upper: f64, schedule: &[f64], tol: &Tolerance) -> Result<Vec<Estimate>> {
    let mut edges = Vec::with_capacity(schedule.len() + 1);
    edges.push(upper);
    edges.extend_from_slice(schedule);
    let out: Vec<Result<Estimate>> =
        edges.par_windows(2).map(|w| capacity_integral(mu, theta, w[1], w[0], tol)).collect();
    out.into_iter().collect()
}

fn validate_schedule(schedule: &[f64], upper: f64) -> Result<()> {
    if schedule.len() < 4 {
        return Err(Error::invalid("x_min schedule needs at least 4 entries"));
    }
    if schedule[0] > upper || schedule.iter().any(|&x| !(x > 0.0)) || schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid(format!("x_min schedule must be positive, strictly decreasing and start at or below {upper}")));
    }
    Ok(())
}

/// Classifies the tail of the integral from increments per decade: finite
/// when the last two decade ratios are at most 0.5 and the last two decade
/// increments are below 5% of `W`; divergent when the last two ratios are at
/// least 0.8.
fn classify_decades(upper: f64, schedule: &[f64], incs: &[Estimate], w: f64) -> (CapacityStatus, Vec<f64>) {
    // bin panels by the decade of their lower end, relative to `upper`
    let mut bins: Vec<(i64, f64, f64)> = Vec::new(); // (decade, sum, log10 span)
    let mut hi = upper;
    for (inc, &lo) in incs.iter().zip(schedule) {
        let d = (-(lo / upper).log10() - 1e-9).floor() as i64;
        let span = (hi / lo).log10();
        match bins.last_mut() {
            Some(b) if b.0 == d => {
                b.1 += inc.value;
                b.2 += span;
            }
            _ => bins.push((d, inc.value, span)),
        }
        hi = lo;
    }
    if bins.last().is_some_and(|b| b.2 < 0.9) {
        bins.pop();
    }
    let rates: Vec<f64> = bins.iter().map(|b| b.1 / b.2).collect();
    if rates.len() < 3 {
        return (CapacityStatus::Inconclusive, rates);
    }
    let n = rates.len();
    let (r0, r1, r2) = (rates[n - 3], rates[n - 2], rates[n - 1]);
    let rho1 = r1 / r0;
    let rho2 = r2 / r1;
    let status = if rho1 <= 0.5 && rho2 <= 0.5 && r1 < 0.05 * w && r2 < 0.05 * w {
        CapacityStatus::Finite
    } else if rho1 >= 0.8 && rho2 >= 0.8 {
        CapacityStatus::Zero
    } else if r1 == 0.0 && r2 == 0.0 {
        CapacityStatus::Finite
    } else {
        CapacityStatus::Inconclusive
    };
    (status, rates)
}

/// Limit of the partial integrals, extrapolating geometrically from the last
/// two increments when they decay.
fn extrapolate(total: f64, incs: &[Estimate]) -> f64 {
    let n = incs.len();
    let (a, b) = (incs[n - 2].value, incs[n - 1].value);
    if a > 0.0 && b > 0.0 && b < a {
        let q = (b / a).min(0.9);
        total + b * q / (1.0 - q)
    } else {
        total
    }
}

/// Point capacity estimate at `ζ`, following the given decreasing schedule of
/// lower limits `x_min`.
pub fn point_capacity_report(mu: &Measure, zeta: CirclePoint, schedule: &[f64], tol: &Tolerance) -> Result<PointCapacityReport> {
    validate_schedule(schedule, 1.0)?;
    let theta = zeta.theta();
    let incs = schedule_increments(mu, theta, 1.0, schedule, tol)?;
    let mut acc = Neumaier::new();
    acc.add(1.0);
    let mut err = 0.0;
    let mut partials = Vec::with_capacity(schedule.len());
    for (inc, &x) in incs.iter().zip(schedule) {
        acc.add(inc.value);
        err += inc.error;
        partials.push((x, acc.total()));
    }
    let w_last = acc.total();
    let (status, decade_rates) = classify_decades(1.0, schedule, &incs, w_last);
    let estimate = match status {
        CapacityStatus::Zero => CapacityEstimate {
            w_value: f64::INFINITY,
            cap_scale: 0.0,
            quad_error: err,
            zero_flag: true,
            status,
        },
        CapacityStatus::Finite => {
            let w = extrapolate(w_last, &incs);
            CapacityEstimate::finite(Estimate { value: w, error: err + (w - w_last) }, status)
        }
        CapacityStatus::Inconclusive => CapacityEstimate::finite(Estimate { value: w_last, error: err }, status),
    };
    Ok(PointCapacityReport { estimate, partials, decade_rates })
}

pub fn point_capacity(mu: &Measure, zeta: CirclePoint, schedule: &[f64], tol: &Tolerance) -> Result<CapacityEstimate> {
    Ok(point_capacity_report(mu, zeta, schedule, tol)?.estimate)
}

/// `μ(E) / (1 + μ(𝕋)^{1/2})²`.
pub fn mass_lower_bound(mu: &Measure, mass_e: f64) -> Result<f64> {
    let total = mu.total_mass();
    if !(mass_e >= 0.0) {
        return Err(Error::invalid(format!("mass must be nonnegative, got {mass_e}")));
    }
    if mass_e > total.value + total.error + 1e-15 * total.value {
        return Err(Error::MassExceedsTotal { mass: mass_e, total: total.value, tail: total.error });
    }
    let s = 1.0 + total.value.sqrt();
    Ok(mass_e / (s * s))
}

/// The two factors of the pointwise bound on `|f(z) - f(ζ)|²` over the
/// approach region, with the unspecified absolute constant set to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StolzBound {
    /// `∫_S |f'|² P_μ dA/π`.
    pub factor1: Estimate,
    /// `∫_0^β dx / (x P_μ((1-x)ζ) + x²)`.
    pub factor2: Estimate,
    pub product: f64,
}

pub fn stolz_bound(mu: &Measure, zeta: CirclePoint, beta: f64, f: &BoundaryFunction, tol: &Tolerance) -> Result<StolzBound> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::invalid(format!("beta must lie in (0, 1/2), got {beta}")));
    }
    let cap = point_capacity(mu, zeta, &default_schedule(), tol)?;
    if cap.zero_flag {
        return Err(Error::HypothesisViolated(zeta.theta()));
    }
    let schedule: Vec<f64> = default_schedule().into_iter().map(|x| x * beta).collect();
    let incs = schedule_increments(mu, zeta.theta(), beta, &schedule, tol)?;
    let mut acc = Neumaier::new();
    let mut err = 0.0;
    for inc in &incs {
        acc.add(inc.value);
        err += inc.error;
    }
    let f2 = extrapolate(acc.total(), &incs);
    let factor2 = Estimate { value: f2, error: err + (f2 - acc.total()) };
    let factor1 = holomorphic::stolz_energy(f, mu, zeta.theta(), beta, tol)?;
    Ok(StolzBound { factor1, factor2, product: factor1.value * factor2.value })
}
