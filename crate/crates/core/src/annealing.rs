//! Annealing schedules and the per-level energies and log importance weights.
//!
//! Level `k` targets `P_k(x) ∝ exp(-β_k E(x))`; the uniform initial
//! distribution contributes only a constant, which is carried separately as
//! `ln Z_0 = n ln 2`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mrf::{BipartiteModel, SpinState};

/// Strictly increasing inverse-annealing parameters with `β_0 = 0`, `β_K = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Schedule {
    betas: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Schedule {
    type Error = crate::Error;

    fn try_from(betas: Vec<f64>) -> Result<Self> {
        Schedule::new(betas)
    }
}

impl From<Schedule> for Vec<f64> {
    fn from(s: Schedule) -> Self {
        s.betas
    }
}

impl Schedule {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.len() < 2 {
            return invalid("a schedule needs at least two betas");
        }
        if betas[0] != 0.0 || *betas.last().unwrap() != 1.0 {
            return invalid("a schedule must start at 0 and end at 1");
        }
        if betas.windows(2).any(|w| w[1].is_nan() || w[1] <= w[0]) {
            return invalid("schedule betas must be strictly increasing");
        }
        Ok(Self { betas })
    }

    /// `β_k = k / K`.
    pub fn linear(num_steps: usize) -> Result<Self> {
        if num_steps == 0 {
            return invalid("K must be at least 1");
        }
        let k_total = num_steps as f64;
        Ok(Self {
            betas: (0..=num_steps).map(|k| k as f64 / k_total).collect(),
        })
    }

    /// `K`, the index of the final level.
    pub fn num_steps(&self) -> usize {
        self.betas.len() - 1
    }

    pub fn beta(&self, k: usize) -> f64 {
        self.betas[k]
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub(crate) fn check_level(&self, k: usize) -> Result<()> {
        if k > self.num_steps() {
            return invalid(format!("level {k} outside 0..={}", self.num_steps()));
        }
        Ok(())
    }

    pub(crate) fn check_weight_level(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.num_steps() {
            return invalid(format!(
                "weight level {k} outside 1..={}",
                self.num_steps()
            ));
        }
        Ok(())
    }

    /// `β_k - β_{k-1}`.
    pub(crate) fn increment(&self, k: usize) -> f64 {
        self.betas[k] - self.betas[k - 1]
    }
}

/// `E_k(x) = β_k E(x)`.
pub fn step_energy(
    model: &BipartiteModel,
    schedule: &Schedule,
    k: usize,
    v: &SpinState,
    h: &SpinState,
) -> Result<f64> {
    schedule.check_level(k)?;
    Ok(schedule.beta(k) * model.energy(v, h)?)
}

/// `ln w_k(x) = -E_k(x) + E_{k-1}(x) = -(β_k - β_{k-1}) E(x)`.
pub fn log_w_k(
    model: &BipartiteModel,
    schedule: &Schedule,
    k: usize,
    v: &SpinState,
    h: &SpinState,
) -> Result<f64> {
    schedule.check_weight_level(k)?;
    Ok(-schedule.increment(k) * model.energy(v, h)?)
}

/// `ln λ_k(v) = -E_V(v, k) + E_V(v, k-1)`.
pub fn log_lambda_k(
    model: &BipartiteModel,
    schedule: &Schedule,
    k: usize,
    v: &SpinState,
) -> Result<f64> {
    schedule.check_weight_level(k)?;
    model.check_visible(v)?;
    let fields = model.hidden_fields(v.values());
    Ok(log_lambda_from_fields(model, schedule, k, v.values(), &fields))
}

/// Hidden-layer counterpart of [`log_lambda_k`], built on `E_H`.
pub fn log_lambda_k_hidden(
    model: &BipartiteModel,
    schedule: &Schedule,
    k: usize,
    h: &SpinState,
) -> Result<f64> {
    schedule.check_weight_level(k)?;
    model.check_hidden(h)?;
    let hv = h.values();
    let fields = model.visible_fields(hv);
    Ok(-model.marginal_energy_h_from_fields(schedule.beta(k), hv, &fields)
        + model.marginal_energy_h_from_fields(schedule.beta(k - 1), hv, &fields))
}

pub(crate) fn log_lambda_from_fields(
    model: &BipartiteModel,
    schedule: &Schedule,
    k: usize,
    v: &[i8],
    fields: &[f64],
) -> f64 {
    -model.marginal_energy_v_from_fields(schedule.beta(k), v, fields)
        + model.marginal_energy_v_from_fields(schedule.beta(k - 1), v, fields)
}
