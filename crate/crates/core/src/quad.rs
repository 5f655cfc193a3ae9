//! Adaptive quadrature: globally adaptive Gauss-Kronrod (7/15) on a set of
//! initial panels, and a doubling trapezoid rule for periodic integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::summation::Neumaier;

/// A value together with an absolute error estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate { value: 0.0, error: 0.0 };

    pub fn exact(value: f64) -> Self {
        Estimate { value, error: 0.0 }
    }

    pub fn scale(self, s: f64) -> Self {
        Estimate { value: self.value * s, error: self.error * s.abs() }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate { value: self.value + rhs.value, error: self.error + rhs.error }
    }
}

impl std::ops::AddAssign for Estimate {
    fn add_assign(&mut self, rhs: Estimate) {
        self.value += rhs.value;
        self.error += rhs.error;
    }
}

/// Stopping rule shared by the integrators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rtol: 1e-9, atol: 0.0, max_panels: 1 << 20 }
    }
}

impl Tolerance {
    pub fn relative(rtol: f64) -> Self {
        Tolerance { rtol, ..Default::default() }
    }

    pub fn with_atol(mut self, atol: f64) -> Self {
        self.atol = atol;
        self
    }

    fn satisfied(&self, value: f64, scale: f64, error: f64) -> bool {
        // the Kronrod error estimate cannot drop below roundoff in the panel sums
        let floor = 64.0 * f64::EPSILON * scale;
        error <= self.atol.max(self.rtol * value.abs().max(scale)).max(floor)
    }
}

/// Failed to meet the tolerance; carries the best estimate reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unconverged(pub Estimate);

impl From<Unconverged> for Error {
    fn from(u: Unconverged) -> Self {
        Error::PrecisionLoss { value: u.0.value, achieved: u.0.error }
    }
}

// 15-point Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights for the odd-indexed abscissae.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let h = half.abs();
    let value = res_k * half;
    let error = rescale_error((res_k - res_g) * half, res_abs * h, res_asc * h);
    Panel { a, b, value, error, abs: res_abs * h }
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from one panel
/// per consecutive pair of break points and bisecting the panel with the
/// largest error until the tolerance is met.
///
/// The final sum runs over panels in left-to-right order, so results are
/// deterministic.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    tol: &Tolerance,
) -> Result<Estimate, Unconverged> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.len() < 2 {
        return Ok(Estimate::ZERO);
    }

    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Panel> = Vec::new();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut abs = 0.0;
    for w in pts.windows(2) {
        let p = kronrod(&mut f, w[0], w[1]);
        value += p.value;
        error += p.error;
        abs += p.abs;
        heap.push(p);
    }

    let mut count = heap.len();
    let mut since_resync = 0usize;
    loop {
        // refinement cannot repair a non-finite integrand
        if !value.is_finite() || !error.is_finite() {
            return Err(Unconverged(finish(heap, frozen)));
        }
        if tol.satisfied(value, abs, error) {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || worst.error == 0.0 {
            frozen.push(worst);
            continue;
        }
        if count >= tol.max_panels {
            heap.push(worst);
            let est = finish(heap, frozen);
            return Err(Unconverged(est));
        }
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        abs += left.abs + right.abs - worst.abs;
        heap.push(left);
        heap.push(right);
        count += 1;

        since_resync += 1;
        if since_resync == 256 {
            since_resync = 0;
            value = 0.0;
            error = 0.0;
            abs = 0.0;
            for p in heap.iter().chain(frozen.iter()) {
                value += p.value;
                error += p.error;
                abs += p.abs;
            }
        }
    }

    let est = finish(heap, frozen);
    if tol.satisfied(est.value, abs, est.error) {
        Ok(est)
    } else {
        Err(Unconverged(est))
    }
}

fn finish(heap: BinaryHeap<Panel>, frozen: Vec<Panel>) -> Estimate {
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(frozen);
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut v = Neumaier::new();
    let mut e = Neumaier::new();
    for p in &panels {
        v.add(p.value);
        e.add(p.error);
    }
    Estimate { value: v.total(), error: e.total() }
}

/// Break points `center ± width·2^k` (k = 0, 1, ...) clipped to `[lo, hi]`.
///
/// Used to resolve kernels that peak at `center` with the given width.
pub fn geometric_breaks(center: f64, width: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = vec![lo, hi];
    if center > lo && center < hi {
        out.push(center);
    }
    if width > 0.0 {
        let mut w = width;
        while w < hi - lo {
            for p in [center - w, center + w] {
                if p > lo && p < hi {
                    out.push(p);
                }
            }
            w *= 2.0;
        }
    }
    out
}

/// Mean value `(1/2π)∫₀^{2π} f(t) dt` of a smooth periodic function by the
/// trapezoid rule with node `phase` always included, doubling the node count
/// until two consecutive refinements agree.
pub fn periodic_mean<F: FnMut(f64) -> f64>(
    mut f: F,
    phase: f64,
    tol: &Tolerance,
) -> Result<Estimate, Unconverged> {
    const MIN_NODES: usize = 32;
    let max_nodes = tol.max_panels.max(MIN_NODES * 4);

    let mut n = MIN_NODES;
    let mut sum = Neumaier::new();
    let mut abs_sum = Neumaier::new();
    for k in 0..n {
        let v = f(phase + 2.0 * PI * k as f64 / n as f64);
        sum.add(v);
        abs_sum.add(v.abs());
    }
    let mut mean = sum.total() / n as f64;
    let mut hits = 0;
    loop {
        let mut fresh = Neumaier::new();
        let mut fresh_abs = Neumaier::new();
        for k in 0..n {
            let v = f(phase + 2.0 * PI * (k as f64 + 0.5) / n as f64);
            fresh.add(v);
            fresh_abs.add(v.abs());
        }
        sum.add(fresh.total());
        abs_sum.add(fresh_abs.total());
        n *= 2;
        let next = sum.total() / n as f64;
        let diff = (next - mean).abs();
        mean = next;
        let scale = abs_sum.total() / n as f64;
        let floor = 16.0 * f64::EPSILON * scale;
        if tol.satisfied(mean, scale, diff) || diff <= floor {
            hits += 1;
            if hits == 2 {
                return Ok(Estimate { value: mean, error: diff.max(floor) });
            }
        } else {
            hits = 0;
        }
        if n >= max_nodes {
            return Err(Unconverged(Estimate { value: mean, error: diff }));
        }
    }
}
