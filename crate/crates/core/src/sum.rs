//! Compensated summation.
//!
//! Every reduction in this crate that feeds a reported number goes through
//! [`KahanSum`] in a fixed traversal order, so results do not depend on
//! worker count or chunking.

/// Kahan–Neumaier compensated accumulator.
///
/// Tracks a running compensation term so that adding many small terms to a
/// large partial sum does not lose their contribution. The Neumaier variant
/// also stays accurate when an added term is larger than the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        KahanSum::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Current compensated total.
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = KahanSum::new();
        for x in iter {
            k.add(x);
        }
        k
    }
}
