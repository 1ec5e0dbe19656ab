//! Exact log partition functions by enumerating the smaller layer.
//!
//! The enumerated layer is walked in Gray-code order so every step flips a
//! single spin and the fields of the summed-out layer update in `O(|other|)`.
//! When the fields are bounded well below the `exp` overflow range the
//! `2cosh` factors are tracked multiplicatively, which leaves a handful of
//! logarithms per state instead of one per summed-out unit.

use super::model::{check_beta, BipartiteModel};
use super::spin::Layer;
use crate::error::{Error, Result};
use crate::logspace::{ln_2cosh, LogSumExp};

/// Default cap on the number of spins in the enumerated layer.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Largest `|β θ / T|` for which the multiplicative path is used.
const LINEAR_FIELD_BOUND: f64 = 300.0;
/// Log-magnitude budget for one chunk of `2cosh` products.
const CHUNK_LOG_BUDGET: f64 = 600.0;
/// Fields are recomputed from scratch every this many Gray steps.
const REFRESH_INTERVAL: usize = 256;

/// `ln Z_β` for the `β`-scaled model, with the default enumeration cap.
pub fn exact_log_z(model: &BipartiteModel, beta: f64) -> Result<f64> {
    exact_log_z_with_cap(model, beta, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_log_z_with_cap(model: &BipartiteModel, beta: f64, cap: usize) -> Result<f64> {
    let layer = if model.num_visible() <= model.num_hidden() {
        Layer::Visible
    } else {
        Layer::Hidden
    };
    exact_log_z_enumerating(model, beta, layer, cap)
}

/// `ln Z_β` enumerating a chosen layer and summing the other in closed form.
pub fn exact_log_z_enumerating(
    model: &BipartiteModel,
    beta: f64,
    layer: Layer,
    cap: usize,
) -> Result<f64> {
    check_beta(beta)?;
    let problem = match layer {
        Layer::Visible => EnumProblem::new(model, beta),
        Layer::Hidden => EnumProblem::new(&model.transposed(), beta),
        Layer::Joint => {
            return Err(Error::InvalidArgument(
                "cannot enumerate the joint layer here".into(),
            ))
        }
    };
    if problem.num_enum > cap || problem.num_enum >= usize::BITS as usize - 1 {
        return Err(Error::Capacity {
            what: format!("exact enumeration of the {layer:?} layer"),
            required: problem.num_enum,
            cap,
        });
    }
    Ok(problem.run())
}

/// Enumerated layer `e` (biases `a`), summed layer `o` (biases `c`),
/// couplings `w[e][o]` row-major, all pre-multiplied by `β/T`.
struct EnumProblem {
    num_enum: usize,
    num_other: usize,
    enum_bias: Vec<f64>,
    other_bias: Vec<f64>,
    coupling: Vec<f64>,
}

impl EnumProblem {
    fn new(model: &BipartiteModel, beta: f64) -> Self {
        let scale = beta / model.temperature();
        Self {
            num_enum: model.num_visible(),
            num_other: model.num_hidden(),
            enum_bias: model.visible_bias().iter().map(|b| b * scale).collect(),
            other_bias: model.hidden_bias().iter().map(|c| c * scale).collect(),
            coupling: model.coupling_flat().iter().map(|w| w * scale).collect(),
        }
    }

    fn row(&self, e: usize) -> &[f64] {
        &self.coupling[e * self.num_other..(e + 1) * self.num_other]
    }

    /// Fields of the summed layer and the enumerated bias term for `spins`.
    fn fields(&self, spins: &[i8]) -> (Vec<f64>, f64) {
        let mut fields = self.other_bias.clone();
        let mut bias_term = 0.0;
        for (e, &s) in spins.iter().enumerate() {
            let sf = s as f64;
            bias_term += sf * self.enum_bias[e];
            fields
                .iter_mut()
                .zip(self.row(e))
                .for_each(|(f, w)| *f += sf * w);
        }
        (fields, bias_term)
    }

    fn field_bounds(&self) -> Vec<f64> {
        (0..self.num_other)
            .map(|o| {
                self.other_bias[o].abs()
                    + (0..self.num_enum)
                        .map(|e| self.coupling[e * self.num_other + o].abs())
                        .sum::<f64>()
            })
            .collect()
    }

    fn run(&self) -> f64 {
        let bounds = self.field_bounds();
        if bounds.iter().all(|&b| b < LINEAR_FIELD_BOUND) {
            self.run_multiplicative(&bounds)
        } else {
            self.run_log_domain()
        }
    }

    fn run_log_domain(&self) -> f64 {
        let mut spins = vec![-1i8; self.num_enum];
        let (mut fields, mut bias_term) = self.fields(&spins);
        let mut acc = LogSumExp::new();
        let total = 1usize << self.num_enum;
        for step in 0..total {
            if step > 0 {
                let e = step.trailing_zeros() as usize;
                spins[e] = -spins[e];
                if step % REFRESH_INTERVAL == 0 {
                    (fields, bias_term) = self.fields(&spins);
                } else {
                    let delta = 2.0 * spins[e] as f64;
                    bias_term += delta * self.enum_bias[e];
                    fields
                        .iter_mut()
                        .zip(self.row(e))
                        .for_each(|(f, w)| *f += delta * w);
                }
            }
            let log_weight = bias_term + fields.iter().map(|&f| ln_2cosh(f)).sum::<f64>();
            acc.add(log_weight);
        }
        acc.value()
    }

    fn run_multiplicative(&self, bounds: &[f64]) -> f64 {
        let no = self.num_other;
        // chunk boundaries so each product of 2cosh factors stays finite
        let mut chunks = Vec::new();
        let mut start = 0;
        let mut budget = 0.0;
        for (o, &b) in bounds.iter().enumerate() {
            let cost = b + std::f64::consts::LN_2;
            if o > start && budget + cost > CHUNK_LOG_BUDGET {
                chunks.push(start..o);
                start = o;
                budget = 0.0;
            }
            budget += cost;
        }
        chunks.push(start..no);

        let up: Vec<f64> = self.coupling.iter().map(|w| (2.0 * w).exp()).collect();
        let down: Vec<f64> = self.coupling.iter().map(|w| (-2.0 * w).exp()).collect();

        let mut spins = vec![-1i8; self.num_enum];
        let mut pos = vec![0.0; no];
        let mut neg = vec![0.0; no];
        let mut bias_term = 0.0;
        let reset = |spins: &[i8], pos: &mut [f64], neg: &mut [f64], bias_term: &mut f64| {
            let (fields, b) = self.fields(spins);
            for o in 0..no {
                pos[o] = fields[o].exp();
                neg[o] = (-fields[o]).exp();
            }
            *bias_term = b;
        };
        reset(&spins, &mut pos, &mut neg, &mut bias_term);

        let mut acc = LogSumExp::new();
        let total = 1usize << self.num_enum;
        for step in 0..total {
            if step > 0 {
                let e = step.trailing_zeros() as usize;
                spins[e] = -spins[e];
                if step % REFRESH_INTERVAL == 0 {
                    reset(&spins, &mut pos, &mut neg, &mut bias_term);
                } else {
                    let row = e * no..(e + 1) * no;
                    let (mul_pos, mul_neg) = if spins[e] > 0 {
                        (&up[row.clone()], &down[row])
                    } else {
                        (&down[row.clone()], &up[row])
                    };
                    bias_term += 2.0 * spins[e] as f64 * self.enum_bias[e];
                    for o in 0..no {
                        pos[o] *= mul_pos[o];
                        neg[o] *= mul_neg[o];
                    }
                }
            }
            let mut log_weight = bias_term;
            for chunk in &chunks {
                let prod: f64 = chunk.clone().map(|o| pos[o] + neg[o]).product();
                log_weight += prod.ln();
            }
            acc.add(log_weight);
        }
        acc.value()
    }
}
