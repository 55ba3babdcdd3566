//! Log-space helpers shared by inference, abduction and execution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `ln(exp(a) + exp(b))` without overflow.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// `ln(Σ exp(x_i))`; empty input and all `-inf` inputs give `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln(exp(a) - exp(b))` for `a >= b`; returns `-inf` when the difference vanishes.
#[inline]
pub fn log_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp_m1()).ln()
}

/// Streaming log-sum-exp accumulator: one `exp` per term.
#[derive(Debug, Clone, Copy)]
pub struct LogAccumulator {
    max: f64,
    scaled: f64,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl LogAccumulator {
    pub fn new() -> Self {
        LogAccumulator {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.scaled += (x - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// A normalized categorical distribution stored as log-probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogDist(Vec<f64>);

impl LogDist {
    /// Normalizes unnormalized log-weights. Fails when every weight is `-inf`.
    pub fn from_log_weights(mut weights: Vec<f64>) -> Result<Self> {
        let z = log_sum_exp(&weights);
        if !z.is_finite() {
            return Err(Error::DegenerateBelief(
                "distribution has no positive mass".into(),
            ));
        }
        for w in &mut weights {
            *w -= z;
        }
        Ok(LogDist(weights))
    }

    /// Normalizes non-negative linear weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::contract("weights must be finite and non-negative"));
        }
        Self::from_log_weights(weights.iter().map(|w| w.ln()).collect())
    }

    pub fn point_mass(len: usize, index: usize) -> Self {
        let mut v = vec![f64::NEG_INFINITY; len];
        v[index] = 0.0;
        LogDist(v)
    }

    pub fn uniform(len: usize) -> Self {
        LogDist(vec![-(len as f64).ln(); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.0
    }

    pub fn probs(&self) -> Vec<f64> {
        self.0.iter().map(|l| l.exp()).collect()
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.0[index].exp()
    }

    /// Index of the most probable outcome; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate() {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Sum of linear probabilities; 1 up to rounding for every constructed value.
    pub fn total(&self) -> f64 {
        self.0.iter().map(|l| l.exp()).sum()
    }
}

/// Rounds to 12 significant digits for JSON dumps.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_matches_direct() {
        let (a, b) = (0.5f64, 2.0f64);
        assert!((log_add(a, b) - (a.exp() + b.exp()).ln()).abs() < 1e-15);
        assert_eq!(log_add(f64::NEG_INFINITY, 3.0), 3.0);
    }

    #[test]
    fn log_add_large() {
        let expected = 1232.0 + (2f64.exp() + 1.0).ln();
        assert!((log_add(1234.0, 1232.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn accumulator_agrees_with_slice() {
        let xs = [-3.0, 10.0, f64::NEG_INFINITY, -700.0, 9.5];
        let mut acc = LogAccumulator::new();
        xs.iter().for_each(|&x| acc.add(x));
        assert!((acc.value() - log_sum_exp(&xs)).abs() < 1e-12);
        assert_eq!(LogAccumulator::new().value(), f64::NEG_INFINITY);
    }

    #[test]
    fn log_sub_basic() {
        let v = log_sub(2f64.ln(), 0.5f64.ln());
        assert!((v - 1.5f64.ln()).abs() < 1e-15);
        assert_eq!(log_sub(1.0, 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn all_zero_weights_are_degenerate() {
        assert!(LogDist::from_weights(&[0.0, 0.0]).is_err());
        let d = LogDist::from_weights(&[1.0, 3.0]).unwrap();
        assert!((d.prob(1) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig12(0.1234567890123456), 0.123456789012);
    }
}
