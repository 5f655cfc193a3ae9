//! Compensated summation with a fixed evaluation order.
//!
//! Every reduction in the crate goes through [`Neumaier`] in index order, so
//! results do not depend on how terms were produced (sequentially or by a
//! thread pool).

use serde::{Deserialize, Serialize};

/// Neumaier's variant of Kahan summation.
///
/// The running state is serializable so a partially summed series can be
/// resumed and produce bit-identical results.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Neumaier {
    sum: f64,
    compensation: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for Neumaier {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = Neumaier::new();
    acc.extend(iter);
    acc.total()
}
