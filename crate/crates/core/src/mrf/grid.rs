//! Square-grid Ising models viewed as bipartite models.
//!
//! Sites are split by checkerboard parity: `(r + c)` even goes to the visible
//! layer, odd to the hidden layer, each in row-major order. Nearest-neighbour
//! bonds always join opposite parities, so every bond becomes one coupling.

use serde::{Deserialize, Serialize};

use super::model::BipartiteModel;
use super::spin::Layer;
use crate::error::{invalid, Result};

/// Bond strengths of a `height x width` grid with open boundaries.
///
/// `horizontal[r * (width - 1) + c]` joins `(r, c)` and `(r, c + 1)`;
/// `vertical[r * width + c]` joins `(r, c)` and `(r + 1, c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCouplings {
    pub horizontal: Vec<f64>,
    pub vertical: Vec<f64>,
}

impl GridCouplings {
    pub fn uniform(height: usize, width: usize, j: f64) -> Self {
        Self {
            horizontal: vec![j; height * width.saturating_sub(1)],
            vertical: vec![j; height.saturating_sub(1) * width],
        }
    }

    pub fn num_edges(&self) -> usize {
        self.horizontal.len() + self.vertical.len()
    }
}

/// Layer and in-layer index of every grid site, row-major.
pub fn grid_site_map(height: usize, width: usize) -> Vec<(Layer, usize)> {
    let mut next_visible = 0;
    let mut next_hidden = 0;
    let mut out = Vec::with_capacity(height * width);
    for r in 0..height {
        for c in 0..width {
            if (r + c) % 2 == 0 {
                out.push((Layer::Visible, next_visible));
                next_visible += 1;
            } else {
                out.push((Layer::Hidden, next_hidden));
                next_hidden += 1;
            }
        }
    }
    out
}

/// Splits a row-major grid configuration into its (visible, hidden) parts.
pub fn split_grid_state(height: usize, width: usize, spins: &[i8]) -> (Vec<i8>, Vec<i8>) {
    let mut v = Vec::new();
    let mut h = Vec::new();
    for (&(layer, _), &s) in grid_site_map(height, width).iter().zip(spins) {
        match layer {
            Layer::Visible => v.push(s),
            _ => h.push(s),
        }
    }
    (v, h)
}

pub fn grid_ising_as_bipartite(
    height: usize,
    width: usize,
    couplings: &GridCouplings,
    fields: &[f64],
    temperature: f64,
) -> Result<BipartiteModel> {
    if height * width < 2 {
        return invalid("grid needs at least two sites");
    }
    if couplings.horizontal.len() != height * (width - 1)
        || couplings.vertical.len() != (height - 1) * width
    {
        return invalid("grid coupling counts do not match the grid shape");
    }
    if fields.len() != height * width {
        return invalid(format!(
            "expected {} site fields, got {}",
            height * width,
            fields.len()
        ));
    }
    let sites = grid_site_map(height, width);
    let nv = sites.iter().filter(|(l, _)| *l == Layer::Visible).count();
    let nh = sites.len() - nv;

    let mut visible_bias = vec![0.0; nv];
    let mut hidden_bias = vec![0.0; nh];
    for (&(layer, idx), &f) in sites.iter().zip(fields) {
        match layer {
            Layer::Visible => visible_bias[idx] = f,
            _ => hidden_bias[idx] = f,
        }
    }

    let mut coupling = vec![0.0; nv * nh];
    let mut mask = vec![vec![false; nh]; nv];
    let mut bond = |a: usize, b: usize, j: f64| {
        let (vi, hj) = match (sites[a], sites[b]) {
            ((Layer::Visible, vi), (_, hj)) => (vi, hj),
            ((_, hj), (_, vi)) => (vi, hj),
        };
        coupling[vi * nh + hj] = j;
        mask[vi][hj] = true;
    };
    for r in 0..height {
        for c in 0..width - 1 {
            bond(r * width + c, r * width + c + 1, couplings.horizontal[r * (width - 1) + c]);
        }
    }
    for r in 0..height - 1 {
        for c in 0..width {
            bond(r * width + c, (r + 1) * width + c, couplings.vertical[r * width + c]);
        }
    }
    BipartiteModel::from_flat(visible_bias, hidden_bias, coupling, temperature)?
        .with_sparsity_mask(mask)
}
