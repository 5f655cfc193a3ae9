//! Analytic functions on a neighbourhood of the closed disc and their
//! Dirichlet-type energies.
//!
//! A [`BoundaryFunction`] is `Π(z - e^{iθⱼ}) · g(z)` where `g` is a
//! polynomial, a rational function with poles outside the closed disc, or a
//! finite Blaschke product times a polynomial. The circle-zero factor is kept
//! apart so the function vanishes exactly at the prescribed points.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{chord_squared, normalize_angle, Arc, ANGLE_TOL};
use crate::measures::Measure;
use crate::quad::{self, Estimate, Tolerance};
use crate::summation::Neumaier;

type C = Complex64;

/// Difference quotients closer than this to the diagonal use the derivative
/// at the chord midpoint instead.
const DIAGONAL_FALLBACK: f64 = 1e-6;

/// Poles must lie outside `|z| ≤ 1 + POLE_MARGIN`.
const POLE_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Polynomial(Vec<C>),
    Rational { numerator: Vec<C>, denominator: Vec<C> },
    BlaschkePoly { zeros: Vec<C>, coeffs: Vec<C> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionSpec", into = "FunctionSpec")]
pub struct BoundaryFunction {
    repr: Representation,
    circle_zeros: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FunctionSpec {
    Poly {
        coeffs: Vec<C>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        circle_zeros: Vec<f64>,
    },
    Rational {
        numerator: Vec<C>,
        denominator: Vec<C>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        circle_zeros: Vec<f64>,
    },
    BlaschkePoly {
        zeros: Vec<C>,
        coeffs: Vec<C>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        circle_zeros: Vec<f64>,
    },
}

impl TryFrom<FunctionSpec> for BoundaryFunction {
    type Error = Error;
    fn try_from(s: FunctionSpec) -> Result<Self> {
        let (f, zeros) = match s {
            FunctionSpec::Poly { coeffs, circle_zeros } => (BoundaryFunction::polynomial(coeffs), circle_zeros),
            FunctionSpec::Rational { numerator, denominator, circle_zeros } => {
                (BoundaryFunction::rational(numerator, denominator)?, circle_zeros)
            }
            FunctionSpec::BlaschkePoly { zeros, coeffs, circle_zeros } => {
                (BoundaryFunction::blaschke_poly(zeros, coeffs)?, circle_zeros)
            }
        };
        if zeros.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("circle zeros must be finite angles"));
        }
        Ok(f.vanishing_on(&zeros))
    }
}

impl From<BoundaryFunction> for FunctionSpec {
    fn from(f: BoundaryFunction) -> Self {
        let circle_zeros = f.circle_zeros;
        match f.repr {
            Representation::Polynomial(coeffs) => FunctionSpec::Poly { coeffs, circle_zeros },
            Representation::Rational { numerator, denominator } => {
                FunctionSpec::Rational { numerator, denominator, circle_zeros }
            }
            Representation::BlaschkePoly { zeros, coeffs } => FunctionSpec::BlaschkePoly { zeros, coeffs, circle_zeros },
        }
    }
}

/// Value and derivative of `Σ cₖ zᵏ` by Horner's rule.
fn horner(c: &[C], z: C) -> (C, C) {
    let mut p = C::new(0.0, 0.0);
    let mut dp = C::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

fn poly_mul(a: &[C], b: &[C]) -> Vec<C> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![C::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn trim(mut c: Vec<C>) -> Vec<C> {
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    c
}

/// All complex roots of a polynomial (Durand-Kerner iteration).
pub fn polynomial_roots(coeffs: &[C]) -> Vec<C> {
    let c = trim(coeffs.to_vec());
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return vec![];
    }
    let lead = c[n];
    let monic: Vec<C> = c.iter().map(|&x| x / lead).collect();
    // Cauchy bound on the root moduli
    let bound = 1.0 + monic[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let seed = C::new(0.4, 0.9);
    let mut roots: Vec<C> = (0..n).map(|k| seed.powu(k as u32) * (bound / seed.norm().powi(k as i32)).min(bound)).collect();
    for _ in 0..1000 {
        let mut shift = 0.0f64;
        for i in 0..n {
            let (p, _) = horner(&monic, roots[i]);
            let mut den = C::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    den *= roots[i] - roots[j];
                }
            }
            if den.norm() == 0.0 {
                den = C::new(1e-300, 0.0);
            }
            let step = p / den;
            roots[i] -= step;
            shift = shift.max(step.norm() / (1.0 + roots[i].norm()));
        }
        if shift < 1e-15 {
            break;
        }
    }
    // polish each root with Newton steps on the original polynomial
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(&monic, *r);
            if dp.norm() > 0.0 {
                *r -= p / dp;
            }
        }
    }
    roots
}

impl BoundaryFunction {
    pub fn polynomial(coeffs: Vec<C>) -> Self {
        BoundaryFunction { repr: Representation::Polynomial(trim(coeffs)), circle_zeros: vec![] }
    }

    pub fn real_polynomial(coeffs: &[f64]) -> Self {
        BoundaryFunction::polynomial(coeffs.iter().map(|&x| C::new(x, 0.0)).collect())
    }

    pub fn constant(c: C) -> Self {
        BoundaryFunction::polynomial(vec![c])
    }

    /// `zⁿ`.
    pub fn monomial(n: usize) -> Self {
        let mut c = vec![C::new(0.0, 0.0); n + 1];
        c[n] = C::new(1.0, 0.0);
        BoundaryFunction::polynomial(c)
    }

    pub fn rational(numerator: Vec<C>, denominator: Vec<C>) -> Result<Self> {
        let denominator = trim(denominator);
        if denominator.is_empty() {
            return Err(Error::invalid("rational function denominator is zero"));
        }
        if let Some(r) = polynomial_roots(&denominator).into_iter().find(|r| r.norm() <= 1.0 + POLE_MARGIN) {
            return Err(Error::invalid(format!("denominator root {r} lies in the closed disc")));
        }
        Ok(BoundaryFunction { repr: Representation::Rational { numerator: trim(numerator), denominator }, circle_zeros: vec![] })
    }

    pub fn blaschke_poly(zeros: Vec<C>, coeffs: Vec<C>) -> Result<Self> {
        if let Some(a) = zeros.iter().find(|a| !(a.norm() < 1.0)) {
            return Err(Error::invalid(format!("Blaschke zero {a} is not inside the open disc")));
        }
        Ok(BoundaryFunction { repr: Representation::BlaschkePoly { zeros, coeffs: trim(coeffs) }, circle_zeros: vec![] })
    }

    /// `Π(z - e^{iθⱼ}) · self`, which vanishes exactly at the given angles.
    pub fn vanishing_on(mut self, thetas: &[f64]) -> Self {
        self.circle_zeros.extend(thetas.iter().map(|&t| normalize_angle(t)));
        self
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn circle_zeros(&self) -> &[f64] {
        &self.circle_zeros
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Representation::Polynomial(c) | Representation::BlaschkePoly { coeffs: c, .. } => c.is_empty(),
            Representation::Rational { numerator, .. } => numerator.is_empty(),
        }
    }

    /// Coefficients of the fully expanded polynomial, if the function is one.
    pub fn expanded_polynomial(&self) -> Option<Vec<C>> {
        let Representation::Polynomial(c) = &self.repr else { return None };
        let mut out = c.clone();
        for &t in &self.circle_zeros {
            out = poly_mul(&out, &[-C::from_polar(1.0, t), C::new(1.0, 0.0)]);
        }
        Some(out)
    }

    fn core(&self, z: C) -> (C, C) {
        match &self.repr {
            Representation::Polynomial(c) => horner(c, z),
            Representation::Rational { numerator, denominator } => {
                let (p, dp) = horner(numerator, z);
                let (q, dq) = horner(denominator, z);
                (p / q, (dp * q - p * dq) / (q * q))
            }
            Representation::BlaschkePoly { zeros, coeffs } => {
                let (p, dp) = horner(coeffs, z);
                let one = C::new(1.0, 0.0);
                let factors: Vec<(C, C)> = zeros
                    .iter()
                    .map(|&a| {
                        let den = one - a.conj() * z;
                        ((z - a) / den, C::new(1.0 - a.norm_sqr(), 0.0) / (den * den))
                    })
                    .collect();
                let (b, db) = product_rule(&factors);
                (b * p, db * p + b * dp)
            }
        }
    }

    /// `(f(z), f'(z))`.
    pub fn eval_with_derivative(&self, z: C) -> (C, C) {
        let (g, dg) = self.core(z);
        if self.circle_zeros.is_empty() {
            return (g, dg);
        }
        let factors: Vec<(C, C)> =
            self.circle_zeros.iter().map(|&t| (z - C::from_polar(1.0, t), C::new(1.0, 0.0))).collect();
        let (w, dw) = product_rule(&factors);
        (w * g, dw * g + w * dg)
    }

    pub fn eval(&self, z: C) -> C {
        self.eval_with_derivative(z).0
    }

    pub fn derivative(&self, z: C) -> C {
        self.eval_with_derivative(z).1
    }

    /// `c · f`.
    pub fn scaled(&self, c: C) -> Self {
        let mut out = self.clone();
        match &mut out.repr {
            Representation::Polynomial(p) | Representation::BlaschkePoly { coeffs: p, .. } => {
                p.iter_mut().for_each(|x| *x *= c)
            }
            Representation::Rational { numerator, .. } => numerator.iter_mut().for_each(|x| *x *= c),
        }
        if c.norm() == 0.0 {
            return BoundaryFunction::polynomial(vec![]);
        }
        out
    }

    /// `z ↦ f(e^{-iφ} z)`.
    pub fn rotated(&self, phi: f64) -> Self {
        let rot = |c: &[C]| -> Vec<C> { c.iter().enumerate().map(|(k, &x)| x * C::from_polar(1.0, -(k as f64) * phi)).collect() };
        // each circle-zero factor picks up e^{-iφ}, each Blaschke factor too
        let m = self.circle_zeros.len();
        let phase = C::from_polar(1.0, -(m as f64) * phi);
        let repr = match &self.repr {
            Representation::Polynomial(c) => Representation::Polynomial(rot(c).into_iter().map(|x| x * phase).collect()),
            Representation::Rational { numerator, denominator } => Representation::Rational {
                numerator: rot(numerator).into_iter().map(|x| x * phase).collect(),
                denominator: rot(denominator),
            },
            Representation::BlaschkePoly { zeros, coeffs } => {
                let bphase = C::from_polar(1.0, -(zeros.len() as f64) * phi);
                Representation::BlaschkePoly {
                    zeros: zeros.iter().map(|&a| a * C::from_polar(1.0, phi)).collect(),
                    coeffs: rot(coeffs).into_iter().map(|x| x * phase * bphase).collect(),
                }
            }
        };
        BoundaryFunction { repr, circle_zeros: self.circle_zeros.iter().map(|&t| normalize_angle(t + phi)).collect() }
    }

    /// Crude upper estimate of `sup_{|z|≤1} |f'(z)|²`, from samples on the
    /// circle (maximum principle) with a 10% margin.
    fn derivative_sup_sq(&self) -> f64 {
        let n = 512;
        let m = (0..n)
            .map(|k| self.derivative(C::from_polar(1.0, TAU * k as f64 / n as f64)).norm_sqr())
            .fold(0.0, f64::max);
        1.1 * m
    }

    /// `|f(ζ) - f(ξ)|² / |ζ - ξ|²` at boundary angles `t` (ζ) and `s` (ξ),
    /// with `fxi = f(e^{is})`.
    fn quotient_sq(&self, t: f64, s: f64, fxi: C) -> f64 {
        let d2 = chord_squared(t - s);
        if d2 < DIAGONAL_FALLBACK * DIAGONAL_FALLBACK {
            let mid = 0.5 * (C::from_polar(1.0, t) + C::from_polar(1.0, s));
            return self.derivative(mid).norm_sqr();
        }
        (self.eval(C::from_polar(1.0, t)) - fxi).norm_sqr() / d2
    }
}

/// Value and derivative of a product of `(value, derivative)` factors.
fn product_rule(factors: &[(C, C)]) -> (C, C) {
    let mut v = C::new(1.0, 0.0);
    let mut d = C::new(0.0, 0.0);
    for &(g, dg) in factors {
        d = d * g + v * dg;
        v *= g;
    }
    (v, d)
}

/// `Σ|qⱼ|²` for the quotient polynomial `q = (f - f(ξ))/(z - ξ)`.
fn polynomial_local_dirichlet(c: &[C], xi: C) -> f64 {
    let n = c.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = Neumaier::new();
    let mut q = c[n - 1];
    acc.add(q.norm_sqr());
    for j in (1..n - 1).rev() {
        q = c[j] + xi * q;
        acc.add(q.norm_sqr());
    }
    acc.total()
}

/// Local Dirichlet integral `D_ξ(f) = ∫ |f(ζ)-f(ξ)|²/|ζ-ξ|² dm(ζ)`.
pub fn local_dirichlet(f: &BoundaryFunction, xi: f64, tol: &Tolerance) -> Result<Estimate> {
    if let Some(c) = f.expanded_polynomial() {
        return Ok(Estimate::exact(polynomial_local_dirichlet(&c, C::from_polar(1.0, xi))));
    }
    let fxi = f.eval(C::from_polar(1.0, xi));
    Ok(quad::periodic_mean(|t| f.quotient_sq(t, xi, fxi), xi, tol)?)
}

/// `D_μ(f) = ∫ D_ξ(f) dμ(ξ)` from the boundary side.
pub fn dirichlet_energy_boundary(f: &BoundaryFunction, mu: &Measure, tol: &Tolerance) -> Result<Estimate> {
    if f.is_zero() {
        return Ok(Estimate::ZERO);
    }
    let inner = Tolerance { rtol: tol.rtol * 0.1, ..*tol };
    let mut value = Neumaier::new();
    let mut error = Neumaier::new();
    for a in mu.atoms() {
        let d = local_dirichlet(f, a.theta + a.offset, &inner)?;
        value.add(a.mass * d.value);
        error.add(a.mass * d.error);
    }
    let mut total = Estimate { value: value.total(), error: error.total() };
    if mu.has_density() {
        let dens = match (mu.density(), f.expanded_polynomial()) {
            // mean of D_ξ over the circle is Σ k|cₖ|²
            (crate::measures::Density::Constant { value }, Some(c)) => Estimate::exact(
                value * crate::summation::sum(c.iter().enumerate().map(|(k, x)| k as f64 * x.norm_sqr())),
            ),
            _ => {
                let mut failed = None;
                let e = mu.integrate_density(
                    |s| match local_dirichlet(f, s, &inner) {
                        Ok(v) => v.value,
                        Err(err) => {
                            failed.get_or_insert(err);
                            f64::NAN
                        }
                    },
                    None,
                    &f.circle_zeros,
                    tol,
                );
                if let Some(err) = failed {
                    return Err(err);
                }
                e?
            }
        };
        total += dens;
    }
    if mu.tail_bound() > 0.0 {
        total.error += mu.tail_bound() * f.derivative_sup_sq();
    }
    Ok(total)
}

/// Fourier-side data for `θ ↦ |f'(re^{iθ})|²`: coefficients `G_m(r)` for
/// `m ≥ 0`.
fn derivative_energy_coefficients(f: &BoundaryFunction, poly: Option<&[C]>, r: f64) -> Vec<C> {
    if let Some(c) = poly {
        // f' = Σ bₖ zᵏ with bₖ = (k+1)c_{k+1}
        let b: Vec<C> = c.iter().enumerate().skip(1).map(|(k, &x)| x * k as f64).collect();
        let n = b.len();
        let pow: Vec<f64> = (0..2 * n + 1).map(|k| r.powi(k as i32)).collect();
        return (0..n)
            .map(|m| {
                let mut acc = C::new(0.0, 0.0);
                for l in 0..n - m {
                    acc += b[l + m] * b[l].conj() * pow[2 * l + m];
                }
                acc
            })
            .collect();
    }
    // sampled coefficients; double the node count until the top half is negligible
    let mut n = 64usize;
    loop {
        let samples: Vec<f64> =
            (0..n).map(|k| f.derivative(C::from_polar(r, TAU * k as f64 / n as f64)).norm_sqr()).collect();
        let coeffs: Vec<C> = (0..n / 2)
            .map(|m| {
                let mut acc = C::new(0.0, 0.0);
                for (k, &s) in samples.iter().enumerate() {
                    acc += s * C::from_polar(1.0, -TAU * (m * k % n) as f64 / n as f64);
                }
                acc / n as f64
            })
            .collect();
        let g0 = coeffs[0].norm();
        let tail = coeffs[n / 4..].iter().map(|c| c.norm()).fold(0.0, f64::max);
        if tail <= 1e-15 * g0.max(f64::MIN_POSITIVE) || n >= 1 << 14 {
            return coeffs;
        }
        n *= 2;
    }
}

/// `mean_θ |f'(re^{iθ})|² P_ξ(re^{iθ})`, from the coefficients.
fn harmonic_extension(coeffs: &[C], r: f64, xi: f64) -> f64 {
    let mut acc = Neumaier::new();
    acc.add(coeffs[0].re);
    let step = C::from_polar(r, xi);
    let mut w = step;
    for g in &coeffs[1..] {
        acc.add(2.0 * (g * w).re);
        w *= step;
    }
    acc.total()
}

/// `D_μ(f) = ∫_𝔻 |f'|² P_μ dA/π` from the area side.
pub fn dirichlet_energy_area(f: &BoundaryFunction, mu: &Measure, tol: &Tolerance) -> Result<Estimate> {
    if f.is_zero() {
        return Ok(Estimate::ZERO);
    }
    let poly = f.expanded_polynomial();
    let inner = Tolerance { rtol: tol.rtol * 0.1, ..*tol };
    let mut failed: Option<Error> = None;
    let radial = |r: f64| -> f64 {
        let coeffs = derivative_energy_coefficients(f, poly.as_deref(), r);
        if coeffs.is_empty() {
            return 0.0;
        }
        let mut acc = Neumaier::new();
        for a in mu.atoms() {
            acc.add(a.mass * harmonic_extension(&coeffs, r, a.theta + a.offset));
        }
        if mu.has_density() {
            match mu.density() {
                crate::measures::Density::Constant { value } => acc.add(value * coeffs[0].re),
                _ => match mu.integrate_density(|s| harmonic_extension(&coeffs, r, s), None, &[], &inner) {
                    Ok(e) => acc.add(e.value),
                    Err(e) => {
                        failed.get_or_insert(e);
                    }
                },
            }
        }
        2.0 * r * acc.total()
    };
    let mut breaks: Vec<f64> = (1..=12).map(|k| 1.0 - 0.5f64.powi(k)).collect();
    breaks.extend([0.0, 1.0]);
    let mut est = quad::integrate(radial, &breaks, tol)?;
    if let Some(e) = failed {
        return Err(e);
    }
    if mu.tail_bound() > 0.0 {
        est.error += mu.tail_bound() * f.derivative_sup_sq();
    }
    Ok(est)
}

/// `D_{J,L,μ}(f) = ∫_{ξ∈L} ∫_{ζ∈J} |f(ζ)-f(ξ)|²/|ζ-ξ|² dm(ζ) dμ(ξ)`;
/// `None` stands for the whole circle.
pub fn localized_energy(
    f: &BoundaryFunction,
    j: Option<&Arc>,
    l: Option<&Arc>,
    mu: &Measure,
    tol: &Tolerance,
) -> Result<Estimate> {
    if j.is_none() && l.is_none() {
        return dirichlet_energy_boundary(f, mu, tol);
    }
    if f.is_zero() {
        return Ok(Estimate::ZERO);
    }
    let inner_tol = Tolerance { rtol: tol.rtol * 0.1, ..*tol };
    let inner = |s: f64| -> Result<Estimate> {
        match j {
            None => local_dirichlet(f, s, &inner_tol),
            Some(arc) => {
                let fxi = f.eval(C::from_polar(1.0, s));
                let (a, b) = (arc.start(), arc.end());
                let mut pts = vec![a, b];
                // resolve the near-diagonal region when ξ sits in or near J
                for shift in [-TAU, 0.0, TAU] {
                    let p = s + shift;
                    if p > a && p < b {
                        pts.push(p);
                    }
                }
                let e = quad::integrate(|t| f.quotient_sq(t, s, fxi), &pts, &inner_tol)?;
                Ok(e.scale(1.0 / TAU))
            }
        }
    };
    let in_l = |theta: f64| l.is_none_or(|arc| arc.contains(theta) || (theta - arc.start()).abs() <= ANGLE_TOL);
    let mut value = Neumaier::new();
    let mut error = Neumaier::new();
    for a in mu.atoms() {
        let s = a.theta + a.offset;
        if in_l(normalize_angle(s)) {
            let d = inner(s)?;
            value.add(a.mass * d.value);
            error.add(a.mass * d.error);
        }
    }
    let mut total = Estimate { value: value.total(), error: error.total() };
    if mu.has_density() {
        let domain = l.map(|arc| (arc.start(), arc.end()));
        let mut failed = None;
        let mut breaks = f.circle_zeros.clone();
        if let Some(arc) = j {
            breaks.extend([arc.start(), arc.end()]);
        }
        let e = mu.integrate_density(
            |s| match inner(s) {
                Ok(v) => v.value,
                Err(err) => {
                    failed.get_or_insert(err);
                    f64::NAN
                }
            },
            domain,
            &breaks,
            tol,
        );
        if let Some(err) = failed {
            return Err(err);
        }
        total += e?;
    }
    if mu.tail_bound() > 0.0 {
        total.error += mu.tail_bound() * f.derivative_sup_sq();
    }
    Ok(total)
}

/// `⟨f⟩_J = (1/|J|)∫_J |f(ξ)||dξ|`.
pub fn arc_average(f: &BoundaryFunction, j: &Arc, tol: &Tolerance) -> Result<Estimate> {
    let (a, b) = (j.start(), j.end());
    let mut pts = vec![a, b];
    for &t in &f.circle_zeros {
        for shift in [0.0, TAU] {
            let p = t + shift;
            if p > a && p < b {
                pts.push(p);
            }
        }
    }
    let e = quad::integrate(|t| f.eval(C::from_polar(1.0, t)).norm(), &pts, tol)?;
    Ok(e.scale(1.0 / j.length()))
}

/// `(1/2π)∫_J |f|² |dξ|`, or the full `L²(dm)` norm squared for `None`.
pub fn l2_norm_sq(f: &BoundaryFunction, j: Option<&Arc>, tol: &Tolerance) -> Result<Estimate> {
    match j {
        None => {
            if let Some(c) = f.expanded_polynomial() {
                return Ok(Estimate::exact(crate::summation::sum(c.iter().map(|x| x.norm_sqr()))));
            }
            Ok(quad::periodic_mean(|t| f.eval(C::from_polar(1.0, t)).norm_sqr(), 0.0, tol)?)
        }
        Some(arc) => {
            let pts = [arc.start(), arc.end()];
            let e = quad::integrate(|t| f.eval(C::from_polar(1.0, t)).norm_sqr(), &pts, tol)?;
            Ok(e.scale(1.0 / TAU))
        }
    }
}

/// `‖f‖²_μ = ‖f‖²_{L²(dm)} + D_μ(f)`.
pub fn norm_mu(f: &BoundaryFunction, mu: &Measure, tol: &Tolerance) -> Result<Estimate> {
    Ok(l2_norm_sq(f, None, tol)? + dirichlet_energy_boundary(f, mu, tol)?)
}

/// `∫_S |f'|² P_μ dA/π` over the polar box
/// `S = {1-|w| < β, |arg(w ζ̄)| < β}`.
pub fn stolz_energy(f: &BoundaryFunction, mu: &Measure, zeta: f64, beta: f64, tol: &Tolerance) -> Result<Estimate> {
    if f.is_zero() {
        return Ok(Estimate::ZERO);
    }
    let (lo, hi) = (zeta - beta, zeta + beta);
    // atoms inside the angular window steer the inner panels
    let centers: Vec<f64> = mu
        .atoms()
        .iter()
        .filter_map(|a| {
            let d = a.displacement_from(zeta);
            (d.abs() < beta + 0.1).then_some(zeta + d)
        })
        .take(64)
        .collect();
    let inner_tol = Tolerance { rtol: tol.rtol * 0.1, ..*tol };
    let mut failed: Option<Error> = None;
    let outer = |x: f64| -> f64 {
        let r = 1.0 - x;
        let mut pts = vec![lo, hi];
        for &c in &centers {
            pts.extend(quad::geometric_breaks(c, x, lo, hi));
        }
        let integrand = |t: f64| -> f64 {
            let p = match mu.poisson_polar(t, x, &inner_tol) {
                Ok(p) => p.value,
                Err(e) => {
                    failed.get_or_insert(e);
                    return f64::NAN;
                }
            };
            f.derivative(C::from_polar(r, t)).norm_sqr() * p
        };
        match quad::integrate(integrand, &pts, &inner_tol) {
            Ok(e) => r * e.value / PI,
            Err(e) => {
                failed.get_or_insert(e.into());
                f64::NAN
            }
        }
    };
    // the outer integrand stays bounded as x -> 0, so the innermost panel need not be tiny
    let breaks = quad::geometric_breaks(0.0, beta * 1e-6, 0.0, beta);
    let est = quad::integrate(outer, &breaks, tol);
    if let Some(e) = failed {
        return Err(e);
    }
    Ok(est?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{Atom, BaseSet, Density};
    use proptest::prelude::*;

    fn tol() -> Tolerance {
        Tolerance::relative(1e-10)
    }

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn numeric_local_dirichlet(f: &BoundaryFunction, xi: f64) -> f64 {
        let fxi = f.eval(C::from_polar(1.0, xi));
        quad::periodic_mean(|t| f.quotient_sq(t, xi, fxi), xi, &tol()).unwrap().value
    }

    #[test]
    fn local_dirichlet_examples() {
        assert_eq!(local_dirichlet(&BoundaryFunction::constant(c(3.0, 1.0)), 0.7, &tol()).unwrap().value, 0.0);
        assert!((local_dirichlet(&BoundaryFunction::monomial(1), 2.0, &tol()).unwrap().value - 1.0).abs() < 1e-15);
        for n in 2..=8 {
            let f = BoundaryFunction::monomial(n);
            let closed = local_dirichlet(&f, 1.3, &tol()).unwrap().value;
            let numeric = numeric_local_dirichlet(&f, 1.3);
            assert!((closed - n as f64).abs() < 1e-12, "n = {n}: {closed}");
            assert!((numeric - n as f64).abs() < 1e-9, "n = {n}: {numeric}");
        }
    }

    #[test]
    fn rational_and_blaschke_evaluate() {
        // 1/(z - 2)
        let r = BoundaryFunction::rational(vec![c(1.0, 0.0)], vec![c(-2.0, 0.0), c(1.0, 0.0)]).unwrap();
        let z = c(0.3, -0.2);
        assert!((r.eval(z) - 1.0 / (z - 2.0)).norm() < 1e-15);
        assert!((r.derivative(z) + 1.0 / ((z - 2.0) * (z - 2.0))).norm() < 1e-14);
        assert!(BoundaryFunction::rational(vec![c(1.0, 0.0)], vec![c(-0.5, 0.0), c(1.0, 0.0)]).is_err());

        let a = c(0.5, 0.1);
        let b = BoundaryFunction::blaschke_poly(vec![a], vec![c(1.0, 0.0), c(0.0, 2.0)]).unwrap();
        let expect = (z - a) / (1.0 - a.conj() * z) * (1.0 + c(0.0, 2.0) * z);
        assert!((b.eval(z) - expect).norm() < 1e-15);
        // derivative against a centred difference
        let h = 1e-6;
        let fd = (b.eval(z + h) - b.eval(z - h)) / (2.0 * h);
        assert!((b.derivative(z) - fd).norm() < 1e-8);
        assert!(BoundaryFunction::blaschke_poly(vec![c(1.0, 0.0)], vec![]).is_err());
    }

    #[test]
    fn roots_of_known_polynomial() {
        // (z - 2)(z + 3i)(z - 1.5)
        let p = poly_mul(&poly_mul(&[c(-2.0, 0.0), c(1.0, 0.0)], &[c(0.0, 3.0), c(1.0, 0.0)]), &[c(-1.5, 0.0), c(1.0, 0.0)]);
        let mut roots = polynomial_roots(&p);
        roots.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        assert!((roots[0] - c(1.5, 0.0)).norm() < 1e-12);
        assert!((roots[1] - c(2.0, 0.0)).norm() < 1e-12);
        assert!((roots[2] - c(0.0, -3.0)).norm() < 1e-12);
    }

    #[test]
    fn vanishing_builder_is_exact() {
        let f = BoundaryFunction::real_polynomial(&[1.0, 0.5]).vanishing_on(&[0.3, 2.0]);
        assert_eq!(f.eval(C::from_polar(1.0, 0.3)), c(0.0, 0.0));
        assert_eq!(f.eval(C::from_polar(1.0, 2.0)), c(0.0, 0.0));
        let expanded = BoundaryFunction::polynomial(f.expanded_polynomial().unwrap());
        let z = c(0.2, 0.7);
        assert!((expanded.eval(z) - f.eval(z)).norm() < 1e-14);
        assert!((expanded.derivative(z) - f.derivative(z)).norm() < 1e-14);
    }

    #[test]
    fn energies_of_monomials() {
        let leb = Measure::lebesgue();
        let delta2 = Measure::dirac(0.4, 2.0).unwrap();
        let f = BoundaryFunction::monomial(1);
        assert!((dirichlet_energy_area(&f, &leb, &tol()).unwrap().value - 1.0).abs() < 1e-12);
        assert!((dirichlet_energy_boundary(&f, &delta2, &tol()).unwrap().value - 2.0).abs() < 1e-14);
        assert!((norm_mu(&f, &delta2, &tol()).unwrap().value - 3.0).abs() < 1e-14);
        for n in 1..=8 {
            let f = BoundaryFunction::monomial(n);
            let area = dirichlet_energy_area(&f, &leb, &tol()).unwrap().value;
            assert!((area - n as f64).abs() < 1e-10, "{n}: {area}");
            assert!((norm_mu(&f, &leb, &tol()).unwrap().value - 1.0 - n as f64).abs() < 1e-12);
        }
        let zero = BoundaryFunction::polynomial(vec![]);
        assert_eq!(norm_mu(&zero, &leb, &tol()).unwrap().value, 0.0);
        assert_eq!(dirichlet_energy_area(&BoundaryFunction::constant(c(2.0, 0.0)), &leb, &tol()).unwrap().value, 0.0);
    }

    fn rational_sample() -> BoundaryFunction {
        // (1 + z²)/(z - 1.6i)
        BoundaryFunction::rational(vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, -1.6), c(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn douglas_agreement_for_rational_and_blaschke() {
        let measures = [
            Measure::lebesgue(),
            Measure::new(vec![Atom::new(0.5, 0.7), Atom::new(3.0, 0.2)], Density::Zero, 0.0).unwrap(),
            Measure::new(
                vec![Atom::new(1.0, 0.3)],
                Density::DistancePower { alpha: 0.5, base: BaseSet { points: vec![2.0], cantor: vec![] }, scale: 1.0 },
                0.0,
            )
            .unwrap(),
        ];
        let fs = [rational_sample(), BoundaryFunction::blaschke_poly(vec![c(0.3, -0.4)], vec![c(1.0, 0.0), c(0.5, 0.0)]).unwrap()];
        let t = Tolerance::relative(1e-9);
        for f in &fs {
            for mu in &measures {
                let b = dirichlet_energy_boundary(f, mu, &t).unwrap().value;
                let a = dirichlet_energy_area(f, mu, &t).unwrap().value;
                assert!((a - b).abs() <= 1e-6 * (1.0 + b), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn localized_energy_examples() {
        let f = BoundaryFunction::monomial(1);
        let leb = Measure::lebesgue();
        let full = localized_energy(&f, None, None, &leb, &tol()).unwrap().value;
        assert!((full - 1.0).abs() < 1e-12);
        // J = whole circle written as two arcs: halves add up
        let j1 = Arc::new(0.0, PI).unwrap();
        let j2 = Arc::new(PI, PI).unwrap();
        let g = rational_sample();
        let mu = Measure::new(vec![Atom::new(0.5, 0.7)], Density::Constant { value: 0.5 }, 0.0).unwrap();
        let halves = localized_energy(&g, Some(&j1), None, &mu, &tol()).unwrap().value
            + localized_energy(&g, Some(&j2), None, &mu, &tol()).unwrap().value;
        let whole = dirichlet_energy_boundary(&g, &mu, &tol()).unwrap().value;
        assert!((halves - whole).abs() < 1e-8 * whole, "{halves} vs {whole}");
        assert_eq!(localized_energy(&BoundaryFunction::constant(c(1.0, 0.0)), Some(&j1), Some(&j2), &mu, &tol()).unwrap().value, 0.0);
    }

    #[test]
    fn arc_average_examples() {
        let j = Arc::new(-0.1, 0.2).unwrap();
        assert!((arc_average(&BoundaryFunction::constant(c(-3.0, 4.0)), &j, &tol()).unwrap().value - 5.0).abs() < 1e-12);
        assert!((arc_average(&BoundaryFunction::monomial(1), &j, &tol()).unwrap().value - 1.0).abs() < 1e-12);
        let f = BoundaryFunction::real_polynomial(&[1.0, 1.0]);
        let expect = 2.0 * 0.05f64.sin() / 0.05;
        assert!((arc_average(&f, &j, &tol()).unwrap().value - expect).abs() < 1e-10);
        assert!((expect - 1.99917).abs() < 1e-5);
    }

    #[test]
    fn stolz_energy_vanishes_for_constants() {
        let mu = Measure::dirac(0.0, 1.0).unwrap();
        let e = stolz_energy(&BoundaryFunction::constant(c(1.0, 0.0)), &mu, 0.0, 0.25, &tol()).unwrap();
        assert_eq!(e.value, 0.0);
        // f = z, μ = Lebesgue: box area (β-ish) times |f'|² = 1
        let leb = Measure::lebesgue();
        let beta = 0.25;
        let e = stolz_energy(&BoundaryFunction::monomial(1), &leb, 0.0, beta, &Tolerance::relative(1e-8)).unwrap();
        let area = (1.0 - (1.0 - beta) * (1.0 - beta)) * beta / PI;
        assert!((e.value - area).abs() < 1e-8, "{} vs {area}", e.value);
    }

    #[test]
    fn function_json_roundtrip() {
        let src = r#"{"kind":"rational","numerator":[[1.0,0.0]],"denominator":[[0.0,-1.6],[1.0,0.0]],"circle_zeros":[0.5]}"#;
        let f: BoundaryFunction = serde_json::from_str(src).unwrap();
        let back: BoundaryFunction = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(f, back);
        assert!(serde_json::from_str::<BoundaryFunction>(r#"{"kind":"poly","coeffs":[[1,0]],"other":1}"#).is_err());
        assert!(serde_json::from_str::<BoundaryFunction>(r#"{"kind":"rational","numerator":[[1,0]],"denominator":[[0.5,0],[1,0]]}"#).is_err());
    }

    fn arb_function() -> impl Strategy<Value = BoundaryFunction> {
        (proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..6), 0usize..3, -1.0f64..1.0).prop_map(|(cs, kind, p)| {
            let coeffs: Vec<C> = cs.into_iter().map(|(a, b)| c(a, b)).collect();
            match kind {
                0 => BoundaryFunction::polynomial(coeffs),
                1 => BoundaryFunction::rational(coeffs, vec![c(2.0, p), c(1.0, 0.0)]).unwrap(),
                _ => BoundaryFunction::blaschke_poly(vec![c(0.5 * p, 0.3)], coeffs).unwrap(),
            }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn local_dirichlet_scaling_and_shift(f in arb_function(), xi in 0.0f64..TAU, re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let base = local_dirichlet(&f, xi, &tol()).unwrap().value;
            let k = c(re, im);
            let scaled = local_dirichlet(&f.scaled(k), xi, &tol()).unwrap().value;
            prop_assert!((scaled - k.norm_sqr() * base).abs() <= 1e-9 * (1.0 + scaled));
            if let Some(mut cs) = f.expanded_polynomial() {
                if cs.is_empty() { cs.push(c(0.0, 0.0)); }
                cs[0] += c(5.0, -1.0);
                let shifted = local_dirichlet(&BoundaryFunction::polynomial(cs), xi, &tol()).unwrap().value;
                prop_assert!((shifted - base).abs() <= 1e-9 * (1.0 + base));
            }
        }

        #[test]
        fn local_dirichlet_rotation(f in arb_function(), xi in 0.0f64..TAU, phi in -3.0f64..3.0) {
            let a = local_dirichlet(&f, xi, &tol()).unwrap().value;
            let b = local_dirichlet(&f.rotated(phi), xi + phi, &tol()).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a), "{} vs {}", a, b);
            let z = C::from_polar(0.7, 1.1);
            prop_assert!((f.rotated(phi).eval(z * C::from_polar(1.0, phi)) - f.eval(z)).norm() < 1e-12);
        }

        #[test]
        fn localized_energy_monotone(f in arb_function(), s in 0.0f64..TAU, l1 in 0.1f64..1.0, l2 in 0.1f64..1.0) {
            let mu = Measure::new(vec![Atom::new(s + 0.2, 0.5)], Density::Constant { value: 0.3 }, 0.0).unwrap();
            let small = Arc::new(s, l1).unwrap();
            let big = Arc::new(s, l1 + l2).unwrap();
            let t = Tolerance::relative(1e-10);
            let a = localized_energy(&f, Some(&small), Some(&small), &mu, &t).unwrap().value;
            let b = localized_energy(&f, Some(&big), Some(&small), &mu, &t).unwrap().value;
            let c2 = localized_energy(&f, Some(&big), Some(&big), &mu, &t).unwrap().value;
            prop_assert!(a <= b * (1.0 + 1e-9) + 1e-14);
            prop_assert!(b <= c2 * (1.0 + 1e-9) + 1e-14);
        }
    }
}
