//! Annealed importance sampling runs and the derived estimates.
//!
//! Sequence `μ` draws its initial state from the uniform distribution and
//! moves with the level-`k-1` kernel to reach the level-`k` state. The log
//! weight of level `k` is evaluated at the state current when level `k` is
//! reached, before the level-`k` kernel is applied.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annealing::{log_lambda_from_fields, Schedule};
use crate::error::{invalid, Result};
use crate::kernels::{marginal_transition_raw, sample_hidden_from_fields, uniform_spins, KernelSpec};
use crate::logspace::log_sum_exp;
use crate::mrf::BipartiteModel;
use crate::rng::RngStream;

pub use crate::logspace::logmeanexp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ais,
    MaisV,
    MaisH,
    /// Marginalize the larger layer.
    Auto,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ais => "ais",
            Method::MaisV => "mais_v",
            Method::MaisH => "mais_h",
            Method::Auto => "auto",
        }
    }

    /// Resolves `Auto` against a model: `MaisV` when `|H| >= |V|`.
    pub fn resolve(self, model: &BipartiteModel) -> Method {
        match self {
            Method::Auto if model.num_hidden() >= model.num_visible() => Method::MaisV,
            Method::Auto => Method::MaisH,
            m => m,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ais" => Ok(Method::Ais),
            "mais" | "mais_v" => Ok(Method::MaisV),
            "mais_h" => Ok(Method::MaisH),
            "auto" => Ok(Method::Auto),
            other => invalid(format!("unknown method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_sequences: usize,
    pub method: Method,
    #[serde(default)]
    pub kernel: KernelSpec,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(n_sequences: usize, method: Method, kernel: KernelSpec, seed: u64) -> Self {
        Self {
            n_sequences,
            method,
            kernel,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sequences == 0 {
            return invalid("n_sequences must be at least 1");
        }
        self.kernel.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// `ln W(X_μ)` (AIS) or `ln Λ(V_μ)` (mAIS), one per sequence.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub log_weights: Vec<f64>,
    /// `ln Z_0 = n ln 2`.
    pub log_z0: f64,
    pub log_z_estimate: f64,
    pub free_energy_estimate: f64,
    pub per_variable_free_energy: f64,
    /// Effective sample size of the normalized weights.
    pub effective_sample_size: f64,
    pub n_sequences: usize,
    pub method: Method,
    pub kernel: KernelSpec,
    pub elapsed: Duration,
}

impl RunResult {
    fn from_log_weights(
        log_weights: Vec<f64>,
        num_spins: usize,
        method: Method,
        kernel: KernelSpec,
        elapsed: Duration,
    ) -> Result<Self> {
        let log_z0 = num_spins as f64 * std::f64::consts::LN_2;
        let lme = logmeanexp(&log_weights)?;
        let log_z_estimate = log_z0 + lme;
        let free_energy_estimate = -log_z0 - lme;
        let twice: Vec<f64> = log_weights.iter().map(|w| 2.0 * w).collect();
        let effective_sample_size = (2.0 * log_sum_exp(&log_weights) - log_sum_exp(&twice)).exp();
        Ok(Self {
            n_sequences: log_weights.len(),
            log_weights,
            log_z0,
            log_z_estimate,
            free_energy_estimate,
            per_variable_free_energy: -std::f64::consts::LN_2 - lme / num_spins as f64,
            effective_sample_size,
            method,
            kernel,
            elapsed,
        })
    }

    /// JSON rendering; per-sequence weights are included only on request.
    pub fn to_json(&self, include_weights: bool) -> Result<String> {
        if include_weights {
            Ok(serde_json::to_string_pretty(self)?)
        } else {
            let mut slim = self.clone();
            slim.log_weights = Vec::new();
            Ok(serde_json::to_string_pretty(&slim)?)
        }
    }
}

fn ais_sequence(
    model: &BipartiteModel,
    schedule: &Schedule,
    kernel: &KernelSpec,
    seed: u64,
    mu: u64,
) -> f64 {
    let mut rng = RngStream::new(seed, mu);
    let mut v = uniform_spins(model.num_visible(), &mut rng);
    let mut h = uniform_spins(model.num_hidden(), &mut rng);
    let mut fields = model.hidden_fields(&v);
    let k_total = schedule.num_steps();
    let mut log_w = -schedule.beta(1) * model.energy_from_hidden_fields(&v, &h, &fields);
    for k in 2..=k_total {
        let beta = schedule.beta(k - 1);
        v = marginal_transition_raw(model, beta, kernel, &fields, &mut rng);
        fields = model.hidden_fields(&v);
        h = sample_hidden_from_fields(model, beta, &fields, &mut rng);
        let increment = schedule.beta(k) - schedule.beta(k - 1);
        log_w -= increment * model.energy_from_hidden_fields(&v, &h, &fields);
    }
    log_w
}

fn mais_sequence(
    model: &BipartiteModel,
    schedule: &Schedule,
    kernel: &KernelSpec,
    seed: u64,
    mu: u64,
) -> f64 {
    let mut rng = RngStream::new(seed, mu);
    let mut v = uniform_spins(model.num_visible(), &mut rng);
    let mut fields = model.hidden_fields(&v);
    let mut log_lambda = log_lambda_from_fields(model, schedule, 1, &v, &fields);
    for k in 2..=schedule.num_steps() {
        let beta = schedule.beta(k - 1);
        v = marginal_transition_raw(model, beta, kernel, &fields, &mut rng);
        fields = model.hidden_fields(&v);
        log_lambda += log_lambda_from_fields(model, schedule, k, &v, &fields);
    }
    log_lambda
}

/// Joint-space AIS with `config.n_sequences` independent sequences.
pub fn run_ais(model: &BipartiteModel, schedule: &Schedule, config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    if config.method != Method::Ais {
        return invalid(format!(
            "run_ais called with method {}",
            config.method.as_str()
        ));
    }
    let start = Instant::now();
    let log_weights: Vec<f64> = (0..config.n_sequences as u64)
        .into_par_iter()
        .map(|mu| ais_sequence(model, schedule, &config.kernel, config.seed, mu))
        .collect();
    RunResult::from_log_weights(
        log_weights,
        model.num_spins(),
        Method::Ais,
        config.kernel,
        start.elapsed(),
    )
}

/// Marginalized AIS on the retained layer (`mais_v`, `mais_h` or `auto`).
///
/// `mais_h` runs the visible-layer sampler on the layer-transposed model, so
/// it is bit-identical to `mais_v` on the transposed model with the same seed.
pub fn run_mais(model: &BipartiteModel, schedule: &Schedule, config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let method = config.method.resolve(model);
    let transposed;
    let target = match method {
        Method::MaisV => model,
        Method::MaisH => {
            transposed = model.transposed();
            &transposed
        }
        Method::Ais | Method::Auto => {
            return invalid(format!(
                "run_mais called with method {}",
                config.method.as_str()
            ))
        }
    };
    let start = Instant::now();
    let log_weights: Vec<f64> = (0..config.n_sequences as u64)
        .into_par_iter()
        .map(|mu| mais_sequence(target, schedule, &config.kernel, config.seed, mu))
        .collect();
    RunResult::from_log_weights(
        log_weights,
        model.num_spins(),
        method,
        config.kernel,
        start.elapsed(),
    )
}

/// Dispatches on `config.method`.
pub fn estimate(model: &BipartiteModel, schedule: &Schedule, config: &RunConfig) -> Result<RunResult> {
    match config.method {
        Method::Ais => run_ais(model, schedule, config),
        _ => run_mais(model, schedule, config),
    }
}

/// Absolute percentage error `100 |f_true - f_app| / |f_true|`.
pub fn ape(f_true: f64, f_app: f64) -> Result<f64> {
    if f_true == 0.0 {
        return invalid("APE is undefined for a zero true value");
    }
    Ok(100.0 * (f_true - f_app).abs() / f_true.abs())
}

/// Ratio of the AIS error to the mAIS error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyRatio {
    Finite(f64),
    /// The mAIS estimate matched the truth exactly.
    Unbounded,
}

impl AccuracyRatio {
    /// `ln r`, or `None` for the unbounded sentinel.
    pub fn ln(&self) -> Option<f64> {
        match self {
            AccuracyRatio::Finite(r) => Some(r.ln()),
            AccuracyRatio::Unbounded => None,
        }
    }
}

/// `r = |f_true - f_ais| / |f_true - f_mais|`.
pub fn accuracy_ratio(f_true: f64, f_ais: f64, f_mais: f64) -> Result<AccuracyRatio> {
    if f_true == 0.0 {
        return invalid("accuracy ratio is undefined for a zero true value");
    }
    let denominator = (f_true - f_mais).abs();
    if denominator == 0.0 {
        return Ok(AccuracyRatio::Unbounded);
    }
    Ok(AccuracyRatio::Finite((f_true - f_ais).abs() / denominator))
}
