//! Small summary statistics used by the sweep tables.

use statrs::distribution::{Binomial, DiscreteCDF};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Linearly interpolated quantile of unsorted data, `q` in `[0, 1]`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// One-sided sign-test p-value: `P(X >= wins)` for `X ~ Bin(wins + losses, 1/2)`.
/// Ties are dropped before calling.
pub fn sign_test_p(wins: u64, losses: u64) -> f64 {
    let n = wins + losses;
    if n == 0 || wins == 0 {
        return 1.0;
    }
    let dist = Binomial::new(0.5, n).expect("valid binomial");
    dist.sf(wins - 1)
}

/// Centered 3-point moving average over interior points.
pub fn smooth3(xs: &[f64]) -> Vec<f64> {
    xs.windows(3).map(|w| (w[0] + w[1] + w[2]) / 3.0).collect()
}

pub fn is_non_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0])
}
