//! Instance sweeps behind the APE, free-energy and ln r tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind, KdeGrid, ModelFamily};
use super::generators::{gen_gaussian_rbm, gen_grid_ising, gen_hopfield_rbm};
use super::kde::{kde_gaussian, linspace};
use super::stats;
use crate::annealing::Schedule;
use crate::error::{Error, Result};
use crate::estimators::{accuracy_ratio, ape, estimate, Method, RunConfig};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::mrf::{exact_log_z, BipartiteModel};
use crate::rng::{derive_seed, RngStream};

/// One estimator run on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub experiment: String,
    pub seed: u64,
    pub instance_index: usize,
    pub method: String,
    pub kernel: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub inv_temp: f64,
    pub alpha: Option<f64>,
    pub nv: usize,
    pub nh: usize,
    pub trial: usize,
    /// Seed of the instance generator.
    pub instance_seed: u64,
    /// Seed handed to the estimator.
    pub run_seed: u64,
    pub f_true: f64,
    pub f_app: f64,
    pub ape: f64,
}

/// Averages over every row sharing `(method, kernel, K, inv_temp, alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: String,
    pub kernel: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub inv_temp: f64,
    pub alpha: Option<f64>,
    pub n_instances: usize,
    pub n_rows: usize,
    pub mean_f_true: f64,
    pub mean_f_app: f64,
    pub mean_ape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub experiment: ExperimentKind,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<CellSummary>,
}

impl SweepTable {
    pub fn from_rows(experiment: ExperimentKind, rows: Vec<SweepRow>) -> Self {
        let summary = summarize(&rows);
        Self {
            experiment,
            rows,
            summary,
        }
    }

    /// Summary cell for a method label, kernel label, K and inverse temperature.
    pub fn cell(&self, method: &str, kernel: &str, k: usize, inv_temp: f64) -> Option<&CellSummary> {
        self.summary
            .iter()
            .find(|c| c.method == method && c.kernel == kernel && c.k == k && c.inv_temp == inv_temp)
    }
}

fn summarize(rows: &[SweepRow]) -> Vec<CellSummary> {
    type Key = (String, String, usize, u64, Option<u64>);
    let key = |r: &SweepRow| -> Key {
        (
            r.method.clone(),
            r.kernel.clone(),
            r.k,
            r.inv_temp.to_bits(),
            r.alpha.map(f64::to_bits),
        )
    };
    let mut keys: Vec<Key> = Vec::new();
    let mut groups: Vec<Vec<&SweepRow>> = Vec::new();
    for r in rows {
        let kr = key(r);
        match keys.iter().position(|k| *k == kr) {
            Some(i) => groups[i].push(r),
            None => {
                keys.push(kr);
                groups.push(vec![r]);
            }
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let n = g.len() as f64;
            let mut instances: Vec<usize> = g.iter().map(|r| r.instance_index).collect();
            instances.sort_unstable();
            instances.dedup();
            CellSummary {
                method: g[0].method.clone(),
                kernel: g[0].kernel.clone(),
                k: g[0].k,
                inv_temp: g[0].inv_temp,
                alpha: g[0].alpha,
                n_instances: instances.len(),
                n_rows: g.len(),
                mean_f_true: g.iter().map(|r| r.f_true).sum::<f64>() / n,
                mean_f_app: g.iter().map(|r| r.f_app).sum::<f64>() / n,
                mean_ape: g.iter().map(|r| r.ape).sum::<f64>() / n,
            }
        })
        .collect()
}

fn kind_tag(kind: ExperimentKind) -> u64 {
    match kind {
        ExperimentKind::ApeVsTemperature => 0,
        ExperimentKind::FreeEnergyTable => 1,
        ExperimentKind::LnrDistribution => 2,
        ExperimentKind::ApeVsK => 3,
        ExperimentKind::TheoremCertify => 4,
    }
}

fn method_tag(method: Method) -> u64 {
    match method {
        Method::Ais => 0,
        Method::MaisV => 1,
        Method::MaisH => 2,
        Method::Auto => 3,
    }
}

fn kernel_tag(spec: &KernelSpec) -> u64 {
    match spec.family {
        KernelFamily::BlockedGibbs => 0,
        KernelFamily::MhAugmented => 1 + u64::from(spec.mh_sweeps),
    }
}

/// Draws one instance of `family` from a fresh stream keyed by `seed`.
pub fn generate_model(
    family: ModelFamily,
    sizes: (usize, usize),
    inv_temp: f64,
    seed: u64,
) -> Result<BipartiteModel> {
    let mut rng = RngStream::new(seed, 0);
    match family {
        ModelFamily::Gaussian => gen_gaussian_rbm(sizes.0, sizes.1, inv_temp, &mut rng),
        ModelFamily::Hopfield => gen_hopfield_rbm(sizes.0, sizes.1, inv_temp, &mut rng),
        ModelFamily::Grid => gen_grid_ising(sizes.0, sizes.1, inv_temp, &mut rng),
    }
}

/// Exact per-variable free energy `-ln Z / n`.
pub fn true_per_variable_free_energy(model: &BipartiteModel) -> Result<f64> {
    Ok(-exact_log_z(model, 1.0)? / model.num_spins() as f64)
}

struct Instance {
    index: usize,
    seed: u64,
    model: BipartiteModel,
    f_true: f64,
}

fn make_instances(
    cfg: &ExperimentConfig,
    sizes: (usize, usize),
    inv_temp: f64,
    cell: u64,
) -> Result<Vec<Instance>> {
    let tag = kind_tag(cfg.experiment);
    (0..cfg.n_instances)
        .into_par_iter()
        .map(|index| {
            let seed = derive_seed(cfg.seed, &[tag, cell, index as u64]);
            let model = generate_model(cfg.model_family, sizes, inv_temp, seed)?;
            let f_true = true_per_variable_free_energy(&model)?;
            Ok(Instance {
                index,
                seed,
                model,
                f_true,
            })
        })
        .collect()
}

struct Job {
    k_index: usize,
    k: usize,
    method: Method,
    kernel: KernelSpec,
    trial: usize,
}

fn run_jobs(
    cfg: &ExperimentConfig,
    inst: &Instance,
    inv_temp: f64,
    alpha: Option<f64>,
    jobs: &[Job],
) -> Result<Vec<SweepRow>> {
    jobs.iter()
        .map(|job| {
            let run_seed = derive_seed(
                inst.seed,
                &[
                    job.k_index as u64,
                    method_tag(job.method),
                    kernel_tag(&job.kernel),
                    job.trial as u64,
                ],
            );
            let schedule = Schedule::linear(job.k)?;
            let run_cfg = RunConfig::new(cfg.n_sequences, job.method, job.kernel, run_seed);
            let result = estimate(&inst.model, &schedule, &run_cfg)?;
            let f_app = result.per_variable_free_energy;
            Ok(SweepRow {
                experiment: cfg.experiment.as_str().to_string(),
                seed: cfg.seed,
                instance_index: inst.index,
                method: job.method.resolve(&inst.model).as_str().to_string(),
                kernel: job.kernel.label(),
                k: job.k,
                inv_temp,
                alpha,
                nv: inst.model.num_visible(),
                nh: inst.model.num_hidden(),
                trial: job.trial,
                instance_seed: inst.seed,
                run_seed,
                f_true: inst.f_true,
                f_app,
                ape: ape(inst.f_true, f_app)?,
            })
        })
        .collect()
}

/// Instances are drawn once per inverse temperature and shared by every K,
/// method and kernel in that row, so per-instance comparisons are paired.
fn sweep_temperatures(
    cfg: &ExperimentConfig,
    kernels: &[KernelSpec],
    methods: &[Method],
    n_trials: usize,
) -> Result<Vec<SweepRow>> {
    let mut jobs = Vec::new();
    for (k_index, &k) in cfg.k_values.iter().enumerate() {
        for kernel in kernels {
            for &method in methods {
                for trial in 0..n_trials {
                    jobs.push(Job {
                        k_index,
                        k,
                        method,
                        kernel: *kernel,
                        trial,
                    });
                }
            }
        }
    }
    let mut rows = Vec::new();
    for (t_index, &inv_temp) in cfg.inv_temperatures.iter().enumerate() {
        let instances = make_instances(cfg, cfg.sizes, inv_temp, t_index as u64)?;
        let per_instance: Vec<Vec<SweepRow>> = instances
            .par_iter()
            .map(|inst| run_jobs(cfg, inst, inv_temp, None, &jobs))
            .collect::<Result<_>>()?;
        rows.extend(per_instance.into_iter().flatten());
    }
    Ok(rows)
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.experiment != kind {
        return Err(Error::Config(format!(
            "expected a {} config, got {}",
            kind.as_str(),
            cfg.experiment.as_str()
        )));
    }
    Ok(())
}

/// Mean APE of AIS and mAIS for every `(1/T, K)` cell.
pub fn run_ape_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    expect_kind(cfg, ExperimentKind::ApeVsTemperature)?;
    let rows = sweep_temperatures(cfg, &[cfg.kernel], &[Method::Ais, Method::Auto], 1)?;
    Ok(SweepTable::from_rows(cfg.experiment, rows))
}

/// True `f` and trial-averaged estimates for every `(1/T, K)` cell.
pub fn run_free_energy_table(cfg: &ExperimentConfig) -> Result<SweepTable> {
    expect_kind(cfg, ExperimentKind::FreeEnergyTable)?;
    let rows = sweep_temperatures(cfg, &[cfg.kernel], &[Method::Ais, Method::Auto], cfg.n_trials)?;
    Ok(SweepTable::from_rows(cfg.experiment, rows))
}

/// Mean APE versus K for both kernel families and both estimators.
pub fn run_ape_vs_k(cfg: &ExperimentConfig) -> Result<SweepTable> {
    expect_kind(cfg, ExperimentKind::ApeVsK)?;
    let mh = match cfg.kernel.family {
        KernelFamily::MhAugmented => cfg.kernel,
        KernelFamily::BlockedGibbs => KernelSpec::mh_augmented(1),
    };
    let rows = sweep_temperatures(
        cfg,
        &[KernelSpec::blocked_gibbs(), mh],
        &[Method::Ais, Method::Auto],
        1,
    )?;
    Ok(SweepTable::from_rows(cfg.experiment, rows))
}

/// `ln r` for one instance; `None` when the ratio is 0 or unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LnrRecord {
    pub alpha: f64,
    pub inv_temp: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub instance_index: usize,
    pub ln_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeRow {
    pub alpha: f64,
    pub inv_temp: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub grid_point: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LnrSummary {
    pub alpha: f64,
    pub inv_temp: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub n_instances: usize,
    /// Instances whose ratio was 0 or infinite; left out of the KDE.
    pub n_sentinels: usize,
    pub mean: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub bandwidth: f64,
    pub grid: KdeGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LnrReport {
    pub table: SweepTable,
    pub records: Vec<LnrRecord>,
    pub kde: Vec<KdeRow>,
    pub summary: Vec<LnrSummary>,
}

impl LnrReport {
    pub fn summary_for(&self, alpha: f64) -> Option<&LnrSummary> {
        self.summary.iter().find(|s| s.alpha == alpha)
    }
}

fn hidden_size(nv: usize, alpha: f64) -> Result<usize> {
    let nh = alpha * nv as f64;
    if (nh - nh.round()).abs() > 1e-9 || nh.round() < 1.0 {
        return Err(Error::Config(format!(
            "alpha {alpha} with |V| = {nv} does not give a positive integer |H|"
        )));
    }
    Ok(nh.round() as usize)
}

/// Widens the default grid, keeping its spacing, to reach every sample
/// plus four bandwidths.
fn auto_grid(samples: &[f64], bandwidth: f64) -> KdeGrid {
    let base = KdeGrid::default();
    let step = (base.max - base.min) / (base.points - 1) as f64;
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - 4.0 * bandwidth;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 4.0 * bandwidth;
    let below = if lo < base.min { ((base.min - lo) / step).ceil() } else { 0.0 };
    let above = if hi > base.max { ((hi - base.max) / step).ceil() } else { 0.0 };
    KdeGrid {
        min: base.min - below * step,
        max: base.max + above * step,
        points: base.points + below as usize + above as usize,
    }
}

/// `ln r` distribution for every `α`, using mAIS-V throughout.
pub fn run_lnr_distribution(cfg: &ExperimentConfig) -> Result<LnrReport> {
    expect_kind(cfg, ExperimentKind::LnrDistribution)?;
    if cfg.model_family == ModelFamily::Grid {
        return Err(Error::Config(
            "the ln r experiment needs an RBM family; grid layer sizes are fixed".into(),
        ));
    }
    if cfg.alpha_values.is_empty() {
        return Err(Error::Config("alpha_values must not be empty".into()));
    }
    let nv = cfg.sizes.0;
    let mut jobs = Vec::new();
    for (k_index, &k) in cfg.k_values.iter().enumerate() {
        for method in [Method::Ais, Method::MaisV] {
            jobs.push(Job {
                k_index,
                k,
                method,
                kernel: cfg.kernel,
                trial: 0,
            });
        }
    }

    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (a_index, &alpha) in cfg.alpha_values.iter().enumerate() {
        let nh = hidden_size(nv, alpha)?;
        for (t_index, &inv_temp) in cfg.inv_temperatures.iter().enumerate() {
            let cell = (a_index * cfg.inv_temperatures.len() + t_index) as u64;
            let instances = make_instances(cfg, (nv, nh), inv_temp, cell)?;
            let per_instance: Vec<Vec<SweepRow>> = instances
                .par_iter()
                .map(|inst| run_jobs(cfg, inst, inv_temp, Some(alpha), &jobs))
                .collect::<Result<_>>()?;
            for inst_rows in per_instance {
                for pair in inst_rows.chunks(2) {
                    let ratio = accuracy_ratio(pair[0].f_true, pair[0].f_app, pair[1].f_app)?;
                    records.push(LnrRecord {
                        alpha,
                        inv_temp,
                        k: pair[0].k,
                        instance_index: pair[0].instance_index,
                        ln_r: ratio.ln().filter(|x| x.is_finite()),
                    });
                }
                rows.extend(inst_rows);
            }
        }
    }

    let finite: Vec<f64> = records.iter().filter_map(|r| r.ln_r).collect();
    let grid_spec = match cfg.kde_grid {
        Some(g) => g,
        None if finite.is_empty() => KdeGrid::default(),
        None => auto_grid(&finite, cfg.kde_bandwidth),
    };
    let grid = linspace(grid_spec.min, grid_spec.max, grid_spec.points);

    let mut kde = Vec::new();
    let mut summary = Vec::new();
    for &alpha in &cfg.alpha_values {
        for &inv_temp in &cfg.inv_temperatures {
            for &k in &cfg.k_values {
                let group: Vec<&LnrRecord> = records
                    .iter()
                    .filter(|r| r.alpha == alpha && r.inv_temp == inv_temp && r.k == k)
                    .collect();
                let samples: Vec<f64> = group.iter().filter_map(|r| r.ln_r).collect();
                let n_sentinels = group.len() - samples.len();
                let (mean, q25, median, q75) = if samples.is_empty() {
                    (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
                } else {
                    let density = kde_gaussian(&samples, cfg.kde_bandwidth, &grid)?;
                    kde.extend(grid.iter().zip(density).map(|(&g, d)| KdeRow {
                        alpha,
                        inv_temp,
                        k,
                        grid_point: g,
                        density: d,
                    }));
                    (
                        stats::mean(&samples),
                        stats::quantile(&samples, 0.25),
                        stats::median(&samples),
                        stats::quantile(&samples, 0.75),
                    )
                };
                summary.push(LnrSummary {
                    alpha,
                    inv_temp,
                    k,
                    n_instances: group.len(),
                    n_sentinels,
                    mean,
                    q25,
                    median,
                    q75,
                    bandwidth: cfg.kde_bandwidth,
                    grid: grid_spec,
                });
            }
        }
    }

    Ok(LnrReport {
        table: SweepTable::from_rows(cfg.experiment, rows),
        records,
        kde,
        summary,
    })
}
