//! Exact, sampling-free certification on small instances.
//!
//! Estimator moments come from forward transfer recursions over the exact
//! kernel matrices: `a_1(s) = P_0(s) w_1(s)^p` and
//! `a_{k+1}(s') = w_{k+1}(s')^p Σ_s κ_k(s'|s) a_k(s)`, so `Σ_s a_K(s)` is
//! `E[W^p]`. Cost is `O(K |S|^2)` rather than `O(|S|^K)`.

use serde::{Deserialize, Serialize};

use crate::annealing::Schedule;
use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::kernels::{exact_kernel_matrix, JointStages, KernelMatrix, KernelSpec, Stage, StateSpace, KERNEL_STATE_CAP};
use crate::mrf::{exact_log_z, index_to_spins, BipartiteModel};

/// Default absolute tolerance for log-space quantities.
pub const LOG_ABS_TOL: f64 = 1e-10;
/// Default relative tolerance for linear-space quantities.
pub const LIN_REL_TOL: f64 = 1e-8;
/// Largest number of spins times levels for trajectory enumeration.
pub const TRAJECTORY_BITS_CAP: usize = 18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub mean_z: f64,
    /// Variance of the single-sequence estimator `Z_0 W`.
    pub variance_z: f64,
    pub method: Method,
    pub exact_z: f64,
}

impl MomentReport {
    /// Variance of the `N`-sequence average.
    pub fn variance_for(&self, n_sequences: usize) -> f64 {
        self.variance_z / n_sequences as f64
    }

    pub fn relative_bias(&self) -> f64 {
        (self.mean_z - self.exact_z).abs() / self.exact_z
    }
}

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub max_deviation: f64,
    pub pass: bool,
    pub instance_descriptor: String,
}

impl CheckReport {
    pub fn new(check: &str, max_deviation: f64, tolerance: f64, descriptor: String) -> Self {
        Self {
            check: check.to_string(),
            max_deviation,
            pass: max_deviation <= tolerance,
            instance_descriptor: descriptor,
        }
    }
}

pub fn describe(model: &BipartiteModel, schedule: &Schedule) -> String {
    format!(
        "nv={},nh={},K={},T={}",
        model.num_visible(),
        model.num_hidden(),
        schedule.num_steps(),
        model.temperature()
    )
}

/// Per-level log weights and kernels of one estimator on its state space.
struct Chain {
    size: usize,
    log_z0: f64,
    /// `log_weights[k - 1][s] = ln w_k(s)` (or `ln λ_k(s)`).
    log_weights: Vec<Vec<f64>>,
    /// `kernels[k - 1]` moves level `k` states to level `k + 1`.
    kernels: Vec<KernelMatrix>,
}

fn capacity_error(what: &str, required: usize, cap: usize) -> Error {
    Error::Capacity {
        what: what.to_string(),
        required,
        cap,
    }
}

impl Chain {
    fn build(model: &BipartiteModel, schedule: &Schedule, spec: &KernelSpec, method: Method) -> Result<Self> {
        spec.validate()?;
        let k_total = schedule.num_steps();
        let log_z0 = model.num_spins() as f64 * std::f64::consts::LN_2;
        match method.resolve(model) {
            Method::Ais => {
                let bits = model.num_spins();
                if bits > 12 {
                    return Err(capacity_error("joint state space", 1 << bits.min(40), KERNEL_STATE_CAP));
                }
                let (nv, nh) = (model.num_visible(), model.num_hidden());
                let size = 1usize << bits;
                let energies: Vec<f64> = (0..size)
                    .map(|x| {
                        let v = index_to_spins(x >> nh, nv);
                        let h = index_to_spins(x & ((1 << nh) - 1), nh);
                        model.energy_raw(&v, &h)
                    })
                    .collect();
                let log_weights = (1..=k_total)
                    .map(|k| {
                        let inc = schedule.beta(k) - schedule.beta(k - 1);
                        energies.iter().map(|e| -inc * e).collect()
                    })
                    .collect();
                let kernels = (1..k_total)
                    .map(|k| exact_kernel_matrix(model, schedule, k, spec, StateSpace::Joint))
                    .collect::<Result<_>>()?;
                Ok(Self { size, log_z0, log_weights, kernels })
            }
            Method::MaisV => Self::build_marginal(model, schedule, spec, log_z0),
            Method::MaisH => Self::build_marginal(&model.transposed(), schedule, spec, log_z0),
            Method::Auto => unreachable!("resolved above"),
        }
    }

    fn build_marginal(model: &BipartiteModel, schedule: &Schedule, spec: &KernelSpec, log_z0: f64) -> Result<Self> {
        let nv = model.num_visible();
        if nv > 12 || model.num_hidden() > 12 {
            return Err(capacity_error("marginal state space", 1 << nv.max(model.num_hidden()).min(40), KERNEL_STATE_CAP));
        }
        let size = 1usize << nv;
        let fields: Vec<(Vec<i8>, Vec<f64>)> = (0..size)
            .map(|vi| {
                let v = index_to_spins(vi, nv);
                let f = model.hidden_fields(&v);
                (v, f)
            })
            .collect();
        let log_weights = (1..=schedule.num_steps())
            .map(|k| {
                fields
                    .iter()
                    .map(|(v, f)| crate::annealing::log_lambda_from_fields(model, schedule, k, v, f))
                    .collect()
            })
            .collect();
        let kernels = (1..schedule.num_steps())
            .map(|k| exact_kernel_matrix(model, schedule, k, spec, StateSpace::Visible))
            .collect::<Result<_>>()?;
        Ok(Self { size, log_z0, log_weights, kernels })
    }

    /// `E[W^p]` by forward recursion.
    fn moment(&self, power: f64) -> f64 {
        let p0 = 1.0 / self.size as f64;
        let mut a: Vec<f64> = self.log_weights[0].iter().map(|lw| p0 * (power * lw).exp()).collect();
        for (kernel, lw) in self.kernels.iter().zip(&self.log_weights[1..]) {
            a = kernel.left_apply(&a);
            a.iter_mut().zip(lw).for_each(|(x, l)| *x *= (power * l).exp());
        }
        a.iter().sum()
    }

    /// `E[ln W] = Σ_k Σ_s ln w_k(s) p_k(s)` with `p_k` the level-`k` state law.
    fn expected_log_weight(&self) -> f64 {
        let mut p = vec![1.0 / self.size as f64; self.size];
        let mut total = 0.0;
        for (k, lw) in self.log_weights.iter().enumerate() {
            if k > 0 {
                p = self.kernels[k - 1].left_apply(&p);
            }
            total += lw.iter().zip(&p).map(|(l, q)| l * q).sum::<f64>();
        }
        total
    }
}

/// Exact mean and variance of the single-sequence partition-function estimator.
pub fn exact_estimator_moments(
    model: &BipartiteModel,
    schedule: &Schedule,
    spec: &KernelSpec,
    method: Method,
) -> Result<MomentReport> {
    let chain = Chain::build(model, schedule, spec, method)?;
    let z0 = chain.log_z0.exp();
    let first = chain.moment(1.0);
    let second = chain.moment(2.0);
    Ok(MomentReport {
        mean_z: z0 * first,
        variance_z: (z0 * z0 * (second - first * first)).max(0.0),
        method: method.resolve(model),
        exact_z: exact_log_z(model, 1.0)?.exp(),
    })
}

/// `E[-ln Z_0 - ln W]` for a single sequence (`N = 1`).
pub fn exact_f_expectation_n1(
    model: &BipartiteModel,
    schedule: &Schedule,
    spec: &KernelSpec,
    method: Method,
) -> Result<f64> {
    let chain = Chain::build(model, schedule, spec, method)?;
    Ok(-chain.log_z0 - chain.expected_log_weight())
}

/// Which joint kernel the factorization check inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKernelVariant {
    /// The annealing kernel: refresh `h`, move `v`, refresh `h`.
    Standard,
    /// Gibbs that resamples `v` from the incoming `h` and only then refreshes
    /// `h`. Its visible move depends on the old `h`; used as a negative control.
    StaleHidden,
}

/// Checks per level that the joint kernel equals `P_k(h'|v') τ_k(v'|v)` and
/// that summing it over `h'` reproduces `τ_k`.
pub fn verify_marginal_factorization(
    model: &BipartiteModel,
    schedule: &Schedule,
    spec: &KernelSpec,
) -> Result<CheckReport> {
    verify_marginal_factorization_of(model, schedule, spec, JointKernelVariant::Standard)
}

pub fn verify_marginal_factorization_of(
    model: &BipartiteModel,
    schedule: &Schedule,
    spec: &KernelSpec,
    variant: JointKernelVariant,
) -> Result<CheckReport> {
    spec.validate()?;
    if model.num_spins() > 12 {
        return Err(capacity_error("joint state space", 1 << model.num_spins().min(40), KERNEL_STATE_CAP));
    }
    let (nv, nh) = (model.num_visible(), model.num_hidden());
    let (sv, sh) = (1usize << nv, 1usize << nh);
    let mut max_dev: f64 = 0.0;
    for k in 0..=schedule.num_steps() {
        let joint = match variant {
            JointKernelVariant::Standard => {
                exact_kernel_matrix(model, schedule, k, spec, StateSpace::Joint)?
            }
            JointKernelVariant::StaleHidden => JointStages::new(model, schedule.beta(k), spec)
                .matrix(&[Stage::MhHidden, Stage::ResampleVisible, Stage::RefreshHidden]),
        };
        let tau = exact_kernel_matrix(model, schedule, k, spec, StateSpace::Visible)?;
        let cond = crate::kernels::hidden_given_visible_matrix(model, schedule.beta(k));
        for v in 0..sv {
            for h in 0..sh {
                let x = v * sh + h;
                for v2 in 0..sv {
                    let mut marginal = 0.0;
                    for h2 in 0..sh {
                        let entry = joint.get(x, v2 * sh + h2);
                        marginal += entry;
                        let factored = cond.get(v2, h2) * tau.get(v, v2);
                        max_dev = max_dev.max((entry - factored).abs());
                    }
                    max_dev = max_dev.max((marginal - tau.get(v, v2)).abs());
                }
            }
        }
    }
    Ok(CheckReport::new(
        "marginal_factorization",
        max_dev,
        LOG_ABS_TOL,
        describe(model, schedule),
    ))
}

fn check_trajectory_capacity(bits: usize) -> Result<()> {
    if bits > TRAJECTORY_BITS_CAP {
        return Err(capacity_error("trajectory enumeration (spins x levels)", bits, TRAJECTORY_BITS_CAP));
    }
    Ok(())
}

/// Enumerates every visible and hidden trajectory and checks
/// `Λ(V) = Σ_H W(X) Π_k P_{k-1}(h^(k) | v^(k))`, reporting the largest
/// deviation in log space.
pub fn verify_rao_blackwell_identity(model: &BipartiteModel, schedule: &Schedule) -> Result<CheckReport> {
    let k_total = schedule.num_steps();
    let (nv, nh) = (model.num_visible(), model.num_hidden());
    check_trajectory_capacity(model.num_spins() * k_total)?;
    let (sv, sh) = (1usize << nv, 1usize << nh);

    // per level: ln λ_k(v), ln w_k(v, h), ln P_{k-1}(h | v)
    let mut log_lambda = vec![vec![0.0; sv]; k_total];
    let mut log_w = vec![vec![0.0; sv * sh]; k_total];
    let mut log_cond = vec![vec![0.0; sv * sh]; k_total];
    for vi in 0..sv {
        let v = index_to_spins(vi, nv);
        let fields = model.hidden_fields(&v);
        for k in 1..=k_total {
            log_lambda[k - 1][vi] = crate::annealing::log_lambda_from_fields(model, schedule, k, &v, &fields);
            let up = model.up_probs(schedule.beta(k - 1), &fields);
            for hi in 0..sh {
                let h = index_to_spins(hi, nh);
                let e = model.energy_from_hidden_fields(&v, &h, &fields);
                log_w[k - 1][vi * sh + hi] = -(schedule.beta(k) - schedule.beta(k - 1)) * e;
                log_cond[k - 1][vi * sh + hi] = h
                    .iter()
                    .zip(&up)
                    .map(|(&s, &p)| if s > 0 { p.ln() } else { (1.0 - p).ln() })
                    .sum();
            }
        }
    }

    let digit = |traj: usize, k: usize, base_bits: usize| (traj >> (k * base_bits)) & ((1 << base_bits) - 1);
    let mut max_dev: f64 = 0.0;
    for vt in 0..sv.pow(k_total as u32) {
        let lhs: f64 = (0..k_total).map(|k| log_lambda[k][digit(vt, k, nv)]).sum();
        let mut rhs = 0.0;
        for ht in 0..sh.pow(k_total as u32) {
            let log_term: f64 = (0..k_total)
                .map(|k| {
                    let x = digit(vt, k, nv) * sh + digit(ht, k, nh);
                    log_w[k][x] + log_cond[k][x]
                })
                .sum();
            rhs += log_term.exp();
        }
        max_dev = max_dev.max((lhs - rhs.ln()).abs());
    }
    Ok(CheckReport::new(
        "rao_blackwell_identity",
        max_dev,
        LOG_ABS_TOL,
        describe(model, schedule),
    ))
}

/// The two sides of the variance-gap identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceGap {
    /// `Var[Z_AIS] - Var[Z_mAIS]` from the transfer-recursion moments.
    pub from_moments: f64,
    /// `Z_0^2 E_T[(W - Λ)^2]` by trajectory enumeration.
    pub from_trajectories: f64,
}

/// Computes the single-sequence variance gap two ways.
pub fn variance_gap(model: &BipartiteModel, schedule: &Schedule, spec: &KernelSpec) -> Result<VarianceGap> {
    let k_total = schedule.num_steps();
    let n = model.num_spins();
    check_trajectory_capacity(n * k_total)?;
    let ais = exact_estimator_moments(model, schedule, spec, Method::Ais)?;
    let mais = exact_estimator_moments(model, schedule, spec, Method::MaisV)?;

    let ais_chain = Chain::build(model, schedule, spec, Method::Ais)?;
    let mais_chain = Chain::build(model, schedule, spec, Method::MaisV)?;
    let nh = model.num_hidden();
    let size = 1usize << n;
    let mut total = 0.0;
    for traj in 0..size.pow(k_total as u32) {
        let state = |k: usize| (traj >> (k * n)) & (size - 1);
        let mut prob = 1.0 / size as f64;
        for k in 1..k_total {
            prob *= ais_chain.kernels[k - 1].get(state(k - 1), state(k));
        }
        if prob == 0.0 {
            continue;
        }
        let log_w: f64 = (0..k_total).map(|k| ais_chain.log_weights[k][state(k)]).sum();
        let log_lambda: f64 = (0..k_total)
            .map(|k| mais_chain.log_weights[k][state(k) >> nh])
            .sum();
        total += prob * (log_w.exp() - log_lambda.exp()).powi(2);
    }
    let z0 = ais_chain.log_z0.exp();
    Ok(VarianceGap {
        from_moments: ais.variance_z - mais.variance_z,
        from_trajectories: z0 * z0 * total,
    })
}
