//! Points and arcs on the unit circle.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for comparing angles, in radians.
pub const ANGLE_TOL: f64 = 1e-12;

/// Reduces an angle to `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Reduces an angle difference to `(-π, π]`.
pub fn wrap_difference(delta: f64) -> f64 {
    // in-range values pass through untouched so tiny negatives keep their digits
    if delta > -PI && delta <= PI {
        return delta;
    }
    let mut d = delta.rem_euclid(TAU);
    if d > PI {
        d -= TAU;
    }
    d
}

/// `|e^{ia} - e^{ib}|²` for an angular difference `a - b`.
#[inline]
pub fn chord_squared(delta: f64) -> f64 {
    let s = (0.5 * delta).sin();
    4.0 * s * s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CirclePoint {
    theta: f64,
}

impl CirclePoint {
    pub fn new(theta: f64) -> Self {
        CirclePoint { theta: normalize_angle(theta) }
    }

    pub fn theta(self) -> f64 {
        self.theta
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta)
    }

    pub fn rotated(self, phi: f64) -> Self {
        CirclePoint::new(self.theta + phi)
    }

    /// Shortest angular distance to another point.
    pub fn distance(self, other: CirclePoint) -> f64 {
        wrap_difference(self.theta - other.theta).abs()
    }
}

impl TryFrom<f64> for CirclePoint {
    type Error = String;
    fn try_from(theta: f64) -> std::result::Result<Self, String> {
        if theta.is_finite() {
            Ok(CirclePoint::new(theta))
        } else {
            Err(format!("angle must be finite, got {theta}"))
        }
    }
}

impl From<CirclePoint> for f64 {
    fn from(p: CirclePoint) -> f64 {
        p.theta
    }
}

/// An open arc `(start, start + length)` traversed counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArcRepr", into = "ArcRepr")]
pub struct Arc {
    start: f64,
    length: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcRepr {
    start: f64,
    length: f64,
}

impl TryFrom<ArcRepr> for Arc {
    type Error = Error;
    fn try_from(r: ArcRepr) -> Result<Arc> {
        Arc::new(r.start, r.length)
    }
}

impl From<Arc> for ArcRepr {
    fn from(a: Arc) -> ArcRepr {
        ArcRepr { start: a.start, length: a.length }
    }
}

impl Arc {
    pub fn new(start: f64, length: f64) -> Result<Self> {
        if !start.is_finite() || !(length > 0.0 && length < TAU) {
            return Err(Error::invalid(format!(
                "arc needs finite start and length in (0, 2π), got ({start}, {length})"
            )));
        }
        Ok(Arc { start: normalize_angle(start), length })
    }

    pub fn centered(midpoint: f64, length: f64) -> Result<Self> {
        Arc::new(midpoint - 0.5 * length, length)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// End angle, not reduced mod 2π (so `end() > start()`).
    pub fn end(&self) -> f64 {
        self.start + self.length
    }

    pub fn midpoint(&self) -> CirclePoint {
        CirclePoint::new(self.start + 0.5 * self.length)
    }

    pub fn rotated(&self, phi: f64) -> Arc {
        Arc { start: normalize_angle(self.start + phi), length: self.length }
    }

    /// Whether `theta` lies in the open arc, shrunk by [`ANGLE_TOL`] at both ends.
    pub fn contains(&self, theta: f64) -> bool {
        let d = normalize_angle(theta - self.start);
        d > ANGLE_TOL && d < self.length - ANGLE_TOL
    }

    /// Same midpoint, `gamma` times the length.
    pub fn dilate(&self, gamma: f64) -> Result<Arc> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::InvalidGamma(gamma));
        }
        let length = gamma * self.length;
        if length >= TAU {
            return Err(Error::DilationOverflow(length));
        }
        Ok(Arc {
            start: normalize_angle(self.start - 0.5 * (gamma - 1.0) * self.length),
            length,
        })
    }
}

/// True iff no two arcs intersect as open subsets of the circle. Arcs that
/// touch at an endpoint (within [`ANGLE_TOL`]) are disjoint.
pub fn pairwise_disjoint(arcs: &[Arc]) -> bool {
    first_overlap(arcs).is_none()
}

/// Indices (into `arcs`) of some overlapping pair, if any.
pub fn first_overlap(arcs: &[Arc]) -> Option<(usize, usize)> {
    if arcs.len() < 2 {
        return None;
    }
    let mut order: Vec<usize> = (0..arcs.len()).collect();
    order.sort_by(|&i, &j| arcs[i].start.total_cmp(&arcs[j].start));
    for w in order.windows(2) {
        let (p, q) = (&arcs[w[0]], &arcs[w[1]]);
        if p.end() > q.start + ANGLE_TOL {
            return Some((w[0], w[1]));
        }
    }
    let (first, last) = (order[0], order[order.len() - 1]);
    if arcs[last].end() - TAU > arcs[first].start + ANGLE_TOL {
        return Some((last, first));
    }
    None
}
