//! Random instance families.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{invalid, Result};
use crate::mrf::{grid_ising_as_bipartite, BipartiteModel, GridCouplings};

/// Half-width of the uniform bias distribution.
pub const BIAS_HALF_WIDTH: f64 = 0.001;

fn temperature_from(inv_temp: f64) -> Result<f64> {
    if !(inv_temp > 0.0 && inv_temp.is_finite()) {
        return invalid(format!("inverse temperature must be positive, got {inv_temp}"));
    }
    Ok(1.0 / inv_temp)
}

fn small_biases<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let dist = Uniform::new_inclusive(-BIAS_HALF_WIDTH, BIAS_HALF_WIDTH).expect("valid range");
    (0..len).map(|_| dist.sample(rng)).collect()
}

/// RBM with `w_ij ~ N(0, 1/(|V| + |H|))` and biases uniform on `[-0.001, 0.001]`.
pub fn gen_gaussian_rbm<R: Rng + ?Sized>(
    nv: usize,
    nh: usize,
    inv_temp: f64,
    rng: &mut R,
) -> Result<BipartiteModel> {
    let temperature = temperature_from(inv_temp)?;
    let visible_bias = small_biases(nv, rng);
    let hidden_bias = small_biases(nh, rng);
    let normal = Normal::new(0.0, (1.0 / (nv + nh) as f64).sqrt()).expect("positive std");
    let coupling = (0..nv * nh).map(|_| normal.sample(rng)).collect();
    BipartiteModel::from_flat(visible_bias, hidden_bias, coupling, temperature)
}

/// RBM with `w_ij = ξ_i^(j) / √|V|`, `ξ` uniform on `{-1, +1}`.
pub fn gen_hopfield_rbm<R: Rng + ?Sized>(
    nv: usize,
    nh: usize,
    inv_temp: f64,
    rng: &mut R,
) -> Result<BipartiteModel> {
    let temperature = temperature_from(inv_temp)?;
    let visible_bias = small_biases(nv, rng);
    let hidden_bias = small_biases(nh, rng);
    let magnitude = 1.0 / (nv as f64).sqrt();
    let coupling = (0..nv * nh)
        .map(|_| if rng.random::<bool>() { magnitude } else { -magnitude })
        .collect();
    BipartiteModel::from_flat(visible_bias, hidden_bias, coupling, temperature)
}

/// Grid Ising spin glass: bonds `N(0, 1)`, fields uniform on `[-0.001, 0.001]`.
pub fn gen_grid_ising<R: Rng + ?Sized>(
    height: usize,
    width: usize,
    inv_temp: f64,
    rng: &mut R,
) -> Result<BipartiteModel> {
    let temperature = temperature_from(inv_temp)?;
    if height * width < 2 {
        return invalid("grid needs at least two sites");
    }
    let normal = Normal::new(0.0, 1.0).expect("positive std");
    let horizontal = (0..height * (width - 1)).map(|_| normal.sample(rng)).collect();
    let vertical = (0..(height - 1) * width).map(|_| normal.sample(rng)).collect();
    let fields = small_biases(height * width, rng);
    grid_ising_as_bipartite(
        height,
        width,
        &GridCouplings {
            horizontal,
            vertical,
        },
        &fields,
        temperature,
    )
}
