#![allow(dead_code)]

use annealfe::{BipartiteModel, Layer, RngStream, SpinState};
use rand::Rng;

pub fn random_model(nv: usize, nh: usize, scale: f64, temperature: f64, seed: u64) -> BipartiteModel {
    let mut rng = RngStream::new(seed, 99);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-scale..scale)).collect() };
    let vb = draw(nv);
    let hb = draw(nh);
    let w = draw(nv * nh);
    BipartiteModel::from_flat(vb, hb, w, temperature).unwrap()
}

pub fn spins(index: usize, len: usize) -> Vec<i8> {
    (0..len).map(|i| if index >> i & 1 == 1 { 1 } else { -1 }).collect()
}

pub fn state(index: usize, len: usize, layer: Layer) -> SpinState {
    SpinState::new(spins(index, len), layer).unwrap()
}

/// Energy by a plain double loop over the parameters.
pub fn naive_energy(m: &BipartiteModel, v: &[i8], h: &[i8]) -> f64 {
    let mut s = 0.0;
    for (i, &vi) in v.iter().enumerate() {
        s += m.visible_bias()[i] * vi as f64;
    }
    for (j, &hj) in h.iter().enumerate() {
        s += m.hidden_bias()[j] * hj as f64;
    }
    for (i, &vi) in v.iter().enumerate() {
        for (j, &hj) in h.iter().enumerate() {
            s += vi as f64 * m.coupling(i, j) * hj as f64;
        }
    }
    -s / m.temperature()
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln Σ_{v,h} exp(-β E)` by full joint enumeration.
pub fn brute_log_z(m: &BipartiteModel, beta: f64) -> f64 {
    let (nv, nh) = (m.num_visible(), m.num_hidden());
    let mut terms = Vec::new();
    for vi in 0..1usize << nv {
        for hi in 0..1usize << nh {
            terms.push(-beta * naive_energy(m, &spins(vi, nv), &spins(hi, nh)));
        }
    }
    log_sum_exp(&terms)
}

/// Visible marginal `P_β(v)` by enumeration, indexed like `spins`.
pub fn visible_marginal(m: &BipartiteModel, beta: f64) -> Vec<f64> {
    let (nv, nh) = (m.num_visible(), m.num_hidden());
    let log_z = brute_log_z(m, beta);
    (0..1usize << nv)
        .map(|vi| {
            let terms: Vec<f64> = (0..1usize << nh)
                .map(|hi| -beta * naive_energy(m, &spins(vi, nv), &spins(hi, nh)))
                .collect();
            (log_sum_exp(&terms) - log_z).exp()
        })
        .collect()
}

/// Joint `P_β(v, h)` indexed by `v * 2^nh + h`.
pub fn joint_distribution(m: &BipartiteModel, beta: f64) -> Vec<f64> {
    let (nv, nh) = (m.num_visible(), m.num_hidden());
    let log_z = brute_log_z(m, beta);
    let mut p = Vec::new();
    for vi in 0..1usize << nv {
        for hi in 0..1usize << nh {
            p.push((-beta * naive_energy(m, &spins(vi, nv), &spins(hi, nh)) - log_z).exp());
        }
    }
    p
}

/// Pearson chi-square statistic and degrees of freedom.
pub fn chi_square(counts: &[u64], probs: &[f64]) -> (f64, usize) {
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&c, &p) in counts.iter().zip(probs) {
        let expected = p * total as f64;
        if expected > 0.0 {
            stat += (c as f64 - expected).powi(2) / expected;
            cells += 1;
        }
    }
    (stat, cells - 1)
}

/// Upper 0.1% critical value of chi-square, Wilson–Hilferty approximation.
pub fn chi_square_critical(df: usize) -> f64 {
    let k = df as f64;
    let z = 3.09;
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}
