use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Gaussian kernel density estimate evaluated on `grid`.
pub fn kde_gaussian(samples: &[f64], bandwidth: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return invalid("kernel density estimate needs at least one sample");
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return invalid(format!("bandwidth must be positive, got {bandwidth}"));
    }
    let norm = 1.0 / (samples.len() as f64 * bandwidth * (2.0 * PI).sqrt());
    let inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    Ok(grid
        .iter()
        .map(|&g| {
            norm * samples
                .iter()
                .map(|&s| (-(g - s) * (g - s) * inv_two_h2).exp())
                .sum::<f64>()
        })
        .collect())
}

/// `points` evenly spaced values from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let step = (max - min) / (points - 1) as f64;
            (0..points).map(|i| min + step * i as f64).collect()
        }
    }
}

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}
