//! Compensated running sums for order-stable means.

use serde::Serialize;

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Weighted mean and variance accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    weight: CompensatedSum,
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
    count: u64,
}

impl MeanAccumulator {
    pub fn add(&mut self, x: f64) {
        self.add_weighted(x, 1.0);
    }

    pub fn add_weighted(&mut self, x: f64, w: f64) {
        self.weight.add(w);
        self.sum.add(w * x);
        self.sum_sq.add(w * x * x);
        self.count += 1;
    }

    pub fn merge(&mut self, other: &MeanAccumulator) {
        self.weight.merge(&other.weight);
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        let w = self.weight.value();
        if w == 0.0 {
            f64::NAN
        } else {
            self.sum.value() / w
        }
    }

    /// Standard error of the mean for unit weights.
    pub fn std_error(&self) -> f64 {
        let n = self.count as f64;
        if self.count < 2 {
            return f64::NAN;
        }
        let mean = self.mean();
        let var = ((self.sum_sq.value() / n) - mean * mean).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Integer-binned histogram; bin `i` counts values in `[i, i + 1)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Histogram(pub Vec<u64>);

impl Histogram {
    pub fn add_bin(&mut self, bin: usize, weight: u64) {
        if self.0.len() <= bin {
            self.0.resize(bin + 1, 0);
        }
        self.0[bin] += weight;
    }

    pub fn add_value(&mut self, x: f64, weight: u64) {
        if x.is_finite() && x >= 0.0 {
            self.add_bin(x.floor() as usize, weight);
        }
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}
