//! Exact certification suite over a batch of small random instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::sweeps::generate_model;
use crate::annealing::Schedule;
use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::kernels::KERNEL_STATE_CAP;
use crate::mrf::exact_log_z;
use crate::oracle::{
    describe, exact_estimator_moments, exact_f_expectation_n1, variance_gap,
    verify_marginal_factorization, verify_rao_blackwell_identity, CheckReport, LIN_REL_TOL,
    LOG_ABS_TOL, TRAJECTORY_BITS_CAP,
};
use crate::rng::derive_seed;

/// Relative slack allowed on the variance ordering.
pub const VARIANCE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub checks: Vec<CheckReport>,
    /// Checks not run because the instance exceeded an enumeration cap.
    pub skipped: Vec<String>,
}

impl CertifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckReport> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Checks whose name starts with `prefix`.
    pub fn named<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a CheckReport> + 'a {
        self.checks.iter().filter(move |c| c.check.starts_with(prefix))
    }
}

/// Which groups of checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckSelection {
    pub moments: bool,
    pub identities: bool,
}

impl Default for CheckSelection {
    fn default() -> Self {
        Self {
            moments: true,
            identities: true,
        }
    }
}

fn moment_checks(
    model: &crate::mrf::BipartiteModel,
    schedule: &Schedule,
    cfg: &ExperimentConfig,
    descriptor: &str,
) -> Result<Vec<CheckReport>> {
    let ais = exact_estimator_moments(model, schedule, &cfg.kernel, Method::Ais)?;
    let mais = exact_estimator_moments(model, schedule, &cfg.kernel, Method::MaisV)?;
    let slack = VARIANCE_SLACK * ais.variance_z.max(1.0);
    let f_exact = -exact_log_z(model, 1.0)?;
    let f_ais = exact_f_expectation_n1(model, schedule, &cfg.kernel, Method::Ais)?;
    let f_mais = exact_f_expectation_n1(model, schedule, &cfg.kernel, Method::MaisV)?;
    let ordering_gap = (f_mais - f_ais).max(f_exact - f_mais).max(0.0);
    Ok(vec![
        CheckReport::new("unbiasedness_ais", ais.relative_bias(), LIN_REL_TOL, descriptor.into()),
        CheckReport::new("unbiasedness_mais", mais.relative_bias(), LIN_REL_TOL, descriptor.into()),
        CheckReport::new(
            "variance_dominance",
            (mais.variance_z - ais.variance_z).max(0.0),
            slack,
            descriptor.into(),
        ),
        CheckReport::new("bias_ordering", ordering_gap, LOG_ABS_TOL, descriptor.into()),
    ])
}

fn identity_checks(
    model: &crate::mrf::BipartiteModel,
    schedule: &Schedule,
    cfg: &ExperimentConfig,
    descriptor: &str,
    skipped: &mut Vec<String>,
) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    if (1usize << model.num_spins()) <= KERNEL_STATE_CAP {
        out.push(verify_marginal_factorization(model, schedule, &cfg.kernel)?);
    } else {
        skipped.push(format!("marginal_factorization {descriptor}"));
    }
    if model.num_spins() * schedule.num_steps() <= TRAJECTORY_BITS_CAP {
        out.push(verify_rao_blackwell_identity(model, schedule)?);
        let gap = variance_gap(model, schedule, &cfg.kernel)?;
        let scale = gap.from_trajectories.abs().max(1.0);
        out.push(CheckReport::new(
            "variance_gap",
            (gap.from_moments - gap.from_trajectories).abs() / scale,
            LIN_REL_TOL,
            descriptor.into(),
        ));
    } else {
        skipped.push(format!("rao_blackwell_identity {descriptor}"));
        skipped.push(format!("variance_gap {descriptor}"));
    }
    Ok(out)
}

/// Runs the selected checks on `n_instances` models for every inverse
/// temperature and K in the config.
pub fn run_certify_with(cfg: &ExperimentConfig, selection: CheckSelection) -> Result<CertifyReport> {
    if cfg.experiment != ExperimentKind::TheoremCertify {
        return Err(Error::Config(format!(
            "certify needs a theorem_certify config, got {}",
            cfg.experiment.as_str()
        )));
    }
    let mut cells = Vec::new();
    for (t_index, &inv_temp) in cfg.inv_temperatures.iter().enumerate() {
        for index in 0..cfg.n_instances {
            for &k in &cfg.k_values {
                cells.push((t_index, inv_temp, index, k));
            }
        }
    }
    let results: Vec<(Vec<CheckReport>, Vec<String>)> = cells
        .par_iter()
        .map(|&(t_index, inv_temp, index, k)| {
            let seed = derive_seed(cfg.seed, &[4, t_index as u64, index as u64]);
            let model = generate_model(cfg.model_family, cfg.sizes, inv_temp, seed)?;
            let schedule = Schedule::linear(k)?;
            let descriptor = format!("instance={index},seed={seed},{}", describe(&model, &schedule));
            let mut checks = Vec::new();
            let mut skipped = Vec::new();
            if selection.moments {
                checks.extend(moment_checks(&model, &schedule, cfg, &descriptor)?);
            }
            if selection.identities {
                checks.extend(identity_checks(&model, &schedule, cfg, &descriptor, &mut skipped)?);
            }
            Ok((checks, skipped))
        })
        .collect::<Result<_>>()?;
    let mut report = CertifyReport {
        checks: Vec::new(),
        skipped: Vec::new(),
    };
    for (c, s) in results {
        report.checks.extend(c);
        report.skipped.extend(s);
    }
    Ok(report)
}

pub fn run_certify(cfg: &ExperimentConfig) -> Result<CertifyReport> {
    run_certify_with(cfg, CheckSelection::default())
}
