//! Transition kernels for the annealing chains.
//!
//! All kernels are stateless; randomness comes from the caller's RNG. Gibbs
//! updates resample a whole layer at once from its conditionally independent
//! site distributions. The marginal (visible-space) kernel draws
//! `h ~ P_k(h|v)` and then `v' ~ P_k(v|h)`; the joint kernel additionally
//! refreshes `h' ~ P_k(h|v')`, so its visible part is exactly the marginal
//! kernel and the incoming hidden state is never read.

mod exact;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::annealing::Schedule;
use crate::error::{invalid, Result};
use crate::logspace::ln_2cosh;
use crate::mrf::{BipartiteModel, Layer, SpinState};

pub use exact::{exact_kernel_matrix, KernelMatrix, StateSpace, KERNEL_STATE_CAP};
pub(crate) use exact::{hidden_given_visible as hidden_given_visible_matrix, JointStages, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// Layer-wise blocked Gibbs sampling.
    BlockedGibbs,
    /// Blocked Gibbs with Metropolis-Hastings sweeps over the hidden layer
    /// between the two layer updates.
    MhAugmented,
}

impl KernelFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelFamily::BlockedGibbs => "blocked_gibbs",
            KernelFamily::MhAugmented => "mh_augmented",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    #[serde(default)]
    pub mh_sweeps: u32,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::blocked_gibbs()
    }
}

impl KernelSpec {
    pub fn blocked_gibbs() -> Self {
        Self {
            family: KernelFamily::BlockedGibbs,
            mh_sweeps: 0,
        }
    }

    pub fn mh_augmented(mh_sweeps: u32) -> Self {
        Self {
            family: KernelFamily::MhAugmented,
            mh_sweeps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == KernelFamily::MhAugmented && self.mh_sweeps == 0 {
            return invalid("mh_augmented kernel needs mh_sweeps >= 1");
        }
        Ok(())
    }

    /// Number of MH sweeps actually applied (0 for plain Gibbs).
    pub(crate) fn sweeps(&self) -> u32 {
        match self.family {
            KernelFamily::BlockedGibbs => 0,
            KernelFamily::MhAugmented => self.mh_sweeps,
        }
    }

    /// Short label used in tables, e.g. `blocked_gibbs` or `mh_augmented:2`.
    pub fn label(&self) -> String {
        match self.family {
            KernelFamily::BlockedGibbs => self.family.as_str().to_string(),
            KernelFamily::MhAugmented => format!("{}:{}", self.family.as_str(), self.mh_sweeps),
        }
    }
}

#[inline]
fn draw_spins<R: Rng + ?Sized>(scale: f64, fields: &[f64], rng: &mut R) -> Vec<i8> {
    fields
        .iter()
        .map(|&f| {
            let p = crate::logspace::sigmoid(scale * f);
            if rng.random::<f64>() < p {
                1
            } else {
                -1
            }
        })
        .collect()
}

pub(crate) fn uniform_spins<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<i8> {
    (0..len)
        .map(|_| if rng.random::<f64>() < 0.5 { 1 } else { -1 })
        .collect()
}

/// `h ~ P_β(h | v)` given the hidden fields of `v`.
pub(crate) fn sample_hidden_from_fields<R: Rng + ?Sized>(
    model: &BipartiteModel,
    beta: f64,
    hidden_fields: &[f64],
    rng: &mut R,
) -> Vec<i8> {
    draw_spins(2.0 * beta / model.temperature(), hidden_fields, rng)
}

/// `v ~ P_β(v | h)`.
pub(crate) fn sample_visible<R: Rng + ?Sized>(
    model: &BipartiteModel,
    beta: f64,
    h: &[i8],
    rng: &mut R,
) -> Vec<i8> {
    draw_spins(2.0 * beta / model.temperature(), &model.visible_fields(h), rng)
}

/// Single-site MH sweeps over `h` targeting `P_β(h) ∝ exp(-E_H(h))`.
/// Sites are visited in ascending order.
pub(crate) fn mh_sweeps_raw<R: Rng + ?Sized>(
    model: &BipartiteModel,
    beta: f64,
    h: &mut [i8],
    n_sweeps: u32,
    rng: &mut R,
) {
    if n_sweeps == 0 {
        return;
    }
    let scale = beta / model.temperature();
    let nv = model.num_visible();
    let nh = model.num_hidden();
    let coupling = model.coupling_flat();
    let mut fields = model.visible_fields(h);
    let mut lc: Vec<f64> = fields.iter().map(|&f| ln_2cosh(scale * f)).collect();
    let mut new_fields = vec![0.0; nv];
    let mut new_lc = vec![0.0; nv];
    for _ in 0..n_sweeps {
        for j in 0..nh {
            let dh = -2.0 * h[j] as f64;
            let mut delta = -scale * model.hidden_bias()[j] * dh;
            for i in 0..nv {
                new_fields[i] = fields[i] + coupling[i * nh + j] * dh;
                new_lc[i] = ln_2cosh(scale * new_fields[i]);
                delta -= new_lc[i] - lc[i];
            }
            let accept = delta <= 0.0 || rng.random::<f64>() < (-delta).exp();
            if accept {
                h[j] = -h[j];
                std::mem::swap(&mut fields, &mut new_fields);
                std::mem::swap(&mut lc, &mut new_lc);
            }
        }
    }
}

/// One marginal-kernel transition on the visible layer at inverse temperature `beta`.
pub(crate) fn marginal_transition_raw<R: Rng + ?Sized>(
    model: &BipartiteModel,
    beta: f64,
    spec: &KernelSpec,
    hidden_fields_of_v: &[f64],
    rng: &mut R,
) -> Vec<i8> {
    let mut h = sample_hidden_from_fields(model, beta, hidden_fields_of_v, rng);
    mh_sweeps_raw(model, beta, &mut h, spec.sweeps(), rng);
    sample_visible(model, beta, &h, rng)
}

fn check_transition_level(schedule: &Schedule, k: usize) -> Result<f64> {
    schedule.check_level(k)?;
    Ok(schedule.beta(k))
}

/// Collapsed Gibbs step on level `k`: `h ~ P_k(h|v)`, then `v' ~ P_k(v|h)`.
pub fn mais_step<R: Rng + ?Sized>(
    model: &BipartiteModel,
    schedule: &Schedule,
    k: usize,
    v: &SpinState,
    rng: &mut R,
) -> Result<SpinState> {
    mais_step_with(model, schedule, k, &KernelSpec::blocked_gibbs(), v, rng)
}

/// Marginal step with the hidden layer additionally moved by MH sweeps.
pub fn mais_step_mh<R: Rng + ?Sized>(
    model: &BipartiteModel,
    schedule: &Schedule,
    k: usize,
    v: &SpinState,
    spec: &KernelSpec,
    rng: &mut R,
) -> Result<SpinState> {
    if spec.family != KernelFamily::MhAugmented {
        return invalid("mais_step_mh requires an mh_augmented kernel spec");
    }
    mais_step_with(model, schedule, k, spec, v, rng)
}

/// Marginal step for any kernel family.
pub fn mais_step_with<R: Rng + ?Sized>(
    model: &BipartiteModel,
    schedule: &Schedule,
    k: usize,
    spec: &KernelSpec,
    v: &SpinState,
    rng: &mut R,
) -> Result<SpinState> {
    spec.validate()?;
    let beta = check_transition_level(schedule, k)?;
    model.check_visible(v)?;
    let fields = model.hidden_fields(v.values());
    let next = marginal_transition_raw(model, beta, spec, &fields, rng);
    Ok(SpinState::from_raw(next, Layer::Visible))
}

/// Joint blocked-Gibbs step on level `k`:
/// `h_tmp ~ P_k(h|v)`, `v' ~ P_k(v|h_tmp)`, `h' ~ P_k(h|v')`.
pub fn ais_step<R: Rng + ?Sized>(
    model: &BipartiteModel,
    schedule: &Schedule,
    k: usize,
    v: &SpinState,
    h: &SpinState,
    rng: &mut R,
) -> Result<(SpinState, SpinState)> {
    ais_step_with(model, schedule, k, &KernelSpec::blocked_gibbs(), v, h, rng)
}

/// Joint step for any kernel family; the visible move is the marginal kernel
/// and the hidden layer is then redrawn from `P_k(h|v')`.
pub fn ais_step_with<R: Rng + ?Sized>(
    model: &BipartiteModel,
    schedule: &Schedule,
    k: usize,
    spec: &KernelSpec,
    v: &SpinState,
    h: &SpinState,
    rng: &mut R,
) -> Result<(SpinState, SpinState)> {
    spec.validate()?;
    let beta = check_transition_level(schedule, k)?;
    model.check_visible(v)?;
    model.check_hidden(h)?;
    let fields = model.hidden_fields(v.values());
    let v_next = marginal_transition_raw(model, beta, spec, &fields, rng);
    let fields_next = model.hidden_fields(&v_next);
    let h_next = sample_hidden_from_fields(model, beta, &fields_next, rng);
    Ok((
        SpinState::from_raw(v_next, Layer::Visible),
        SpinState::from_raw(h_next, Layer::Hidden),
    ))
}

/// `n_sweeps` single-site MH passes over the hidden layer on level `k`.
pub fn mh_hidden_sweep<R: Rng + ?Sized>(
    model: &BipartiteModel,
    schedule: &Schedule,
    k: usize,
    h: &SpinState,
    n_sweeps: u32,
    rng: &mut R,
) -> Result<SpinState> {
    if n_sweeps == 0 {
        return invalid("n_sweeps must be at least 1");
    }
    let beta = check_transition_level(schedule, k)?;
    model.check_hidden(h)?;
    let mut values = h.values().to_vec();
    mh_sweeps_raw(model, beta, &mut values, n_sweeps, rng);
    Ok(SpinState::from_raw(values, Layer::Hidden))
}
