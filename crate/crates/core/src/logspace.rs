//! Log-domain arithmetic helpers.

use crate::error::{invalid, Result};

/// `ln(2 cosh x)`, stable for large `|x|`.
#[inline]
pub fn ln_2cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// Logistic function `1 / (1 + e^{-x})`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Streaming log-sum-exp accumulator.
///
/// Keeps a running maximum and a sum of `exp(x - max)`; rescales the sum
/// whenever a new maximum arrives so no term ever overflows.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max > self.max {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        } else {
            self.sum += other.sum * (other.max - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// `ln Σ exp(values)` via max-shift. Empty input gives `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `ln((1/N) Σ exp(values))`.
///
/// Exact for constant vectors: every shifted term is `exp(0) = 1`, so the
/// result is the constant itself.
pub fn logmeanexp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return invalid("logmeanexp of an empty vector");
    }
    if values.iter().any(|v| v.is_nan()) {
        return invalid("logmeanexp input contains NaN");
    }
    if values.iter().any(|v| v.is_infinite()) {
        return invalid("logmeanexp input contains a non-finite value");
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    Ok(max + (sum / values.len() as f64).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_2cosh_matches_naive_in_safe_range() {
        for &x in &[-5.0, -1.0, -0.3, 0.0, 0.2, 1.7, 6.0] {
            let naive = (2.0 * f64::cosh(x)).ln();
            assert!((ln_2cosh(x) - naive).abs() < 1e-14, "x = {x}");
        }
        assert_eq!(ln_2cosh(0.0), std::f64::consts::LN_2);
        // naive overflows here
        assert!((ln_2cosh(1000.0) - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_symmetric() {
        for &x in &[-40.0, -2.0, 0.0, 0.5, 30.0] {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
        }
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn logmeanexp_small_cases() {
        assert_eq!(logmeanexp(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        let v = logmeanexp(&[2f64.ln(), 4f64.ln()]).unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-15);
        assert_eq!(logmeanexp(&[-1234.5; 7]).unwrap(), -1234.5);
    }

    #[test]
    fn logmeanexp_rejects_bad_input() {
        assert!(logmeanexp(&[]).is_err());
        assert!(logmeanexp(&[0.0, f64::NAN]).is_err());
    }

    #[test]
    fn streaming_matches_batch() {
        let xs: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 * 0.7 - 30.0).collect();
        let mut acc = LogSumExp::new();
        for &x in &xs {
            acc.add(x);
        }
        assert!((acc.value() - log_sum_exp(&xs)).abs() < 1e-12);

        let (a, b) = xs.split_at(77);
        let mut l = LogSumExp::new();
        a.iter().for_each(|&x| l.add(x));
        let mut r = LogSumExp::new();
        b.iter().for_each(|&x| r.add(x));
        l.merge(&r);
        assert!((l.value() - log_sum_exp(&xs)).abs() < 1e-12);
    }
}
