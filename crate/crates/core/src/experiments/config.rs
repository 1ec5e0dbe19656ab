use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ApeVsTemperature,
    FreeEnergyTable,
    LnrDistribution,
    ApeVsK,
    TheoremCertify,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::ApeVsTemperature => "ape_vs_temperature",
            ExperimentKind::FreeEnergyTable => "free_energy_table",
            ExperimentKind::LnrDistribution => "lnr_distribution",
            ExperimentKind::ApeVsK => "ape_vs_k",
            ExperimentKind::TheoremCertify => "theorem_certify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Gaussian,
    Hopfield,
    Grid,
}

/// Evaluation grid for the ln r density estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KdeGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for KdeGrid {
    fn default() -> Self {
        Self {
            min: -3.0,
            max: 3.0,
            points: 241,
        }
    }
}

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model_family: ModelFamily,
    /// `(|V|, |H|)`, or `(height, width)` for the grid family.
    pub sizes: (usize, usize),
    pub inv_temperatures: Vec<f64>,
    pub k_values: Vec<usize>,
    pub n_sequences: usize,
    pub n_instances: usize,
    pub n_trials: usize,
    pub alpha_values: Vec<f64>,
    pub kernel: KernelSpec,
    pub seed: u64,
    pub output_path: PathBuf,
    pub kde_bandwidth: f64,
    /// When set, the grid is used as given; otherwise the default
    /// `[-3, 3]` grid is widened to cover every sample.
    pub kde_grid: Option<KdeGrid>,
}

/// Config file layout; every field but `experiment` is optional and falls
/// back to a per-experiment default.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: ExperimentKind,
    model_family: Option<ModelFamily>,
    sizes: Option<(usize, usize)>,
    inv_temperatures: Option<Vec<f64>>,
    k_values: Option<Vec<usize>>,
    n_sequences: Option<usize>,
    n_instances: Option<usize>,
    n_trials: Option<usize>,
    alpha_values: Option<Vec<f64>>,
    kernel: Option<KernelSpec>,
    seed: Option<u64>,
    output_path: Option<PathBuf>,
    kde_bandwidth: Option<f64>,
    kde_grid: Option<KdeGrid>,
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment.
    pub fn defaults_for(experiment: ExperimentKind) -> Self {
        let base = Self {
            experiment,
            model_family: ModelFamily::Gaussian,
            sizes: (20, 40),
            inv_temperatures: vec![0.2, 0.4, 0.8, 1.0, 2.0, 4.0, 8.0],
            k_values: vec![10, 30, 60],
            n_sequences: 1000,
            n_instances: 200,
            n_trials: 10,
            alpha_values: vec![0.5, 1.0, 2.0, 4.0],
            kernel: KernelSpec::blocked_gibbs(),
            seed: 0,
            output_path: PathBuf::from("out"),
            kde_bandwidth: 0.25,
            kde_grid: None,
        };
        match experiment {
            ExperimentKind::ApeVsTemperature | ExperimentKind::FreeEnergyTable => base,
            ExperimentKind::LnrDistribution => Self {
                inv_temperatures: vec![1.0],
                k_values: vec![30],
                n_instances: 500,
                ..base
            },
            ExperimentKind::ApeVsK => Self {
                model_family: ModelFamily::Hopfield,
                inv_temperatures: vec![2.0, 20.0],
                k_values: vec![8, 16, 32, 64, 128],
                n_sequences: 10_000,
                n_instances: 20,
                kernel: KernelSpec::mh_augmented(1),
                ..base
            },
            ExperimentKind::TheoremCertify => Self {
                sizes: (3, 3),
                inv_temperatures: vec![1.0],
                k_values: vec![1, 2, 3],
                n_instances: 50,
                ..base
            },
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ConfigFile =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let d = Self::defaults_for(file.experiment);
        let cfg = Self {
            experiment: file.experiment,
            model_family: file.model_family.unwrap_or(d.model_family),
            sizes: file.sizes.unwrap_or(d.sizes),
            inv_temperatures: file.inv_temperatures.unwrap_or(d.inv_temperatures),
            k_values: file.k_values.unwrap_or(d.k_values),
            n_sequences: file.n_sequences.unwrap_or(d.n_sequences),
            n_instances: file.n_instances.unwrap_or(d.n_instances),
            n_trials: file.n_trials.unwrap_or(d.n_trials),
            alpha_values: file.alpha_values.unwrap_or(d.alpha_values),
            kernel: file.kernel.unwrap_or(d.kernel),
            seed: file.seed.unwrap_or(d.seed),
            output_path: file.output_path.unwrap_or(d.output_path),
            kde_bandwidth: file.kde_bandwidth.unwrap_or(d.kde_bandwidth),
            kde_grid: file.kde_grid.or(d.kde_grid),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.sizes.0 == 0 || self.sizes.1 == 0 {
            return fail(format!("sizes must be positive, got {:?}", self.sizes));
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return fail("k_values must be non-empty and every K >= 1".into());
        }
        if self.inv_temperatures.is_empty()
            || self.inv_temperatures.iter().any(|&b| !(b > 0.0 && b.is_finite()))
        {
            return fail("inv_temperatures must be non-empty and positive".into());
        }
        if self.n_sequences == 0 || self.n_instances == 0 || self.n_trials == 0 {
            return fail("n_sequences, n_instances and n_trials must be >= 1".into());
        }
        if self.alpha_values.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return fail("alpha_values must be positive".into());
        }
        if self.kde_bandwidth.is_nan() || self.kde_bandwidth <= 0.0 {
            return fail("kde_bandwidth must be positive".into());
        }
        if let Some(g) = self.kde_grid {
            if g.max.is_nan() || g.min.is_nan() || g.max <= g.min || g.points < 2 {
                return fail("kde_grid needs max > min and at least two points".into());
            }
        }
        if self.model_family == ModelFamily::Grid && self.sizes.0 * self.sizes.1 < 2 {
            return fail("grid family needs at least two sites".into());
        }
        self.kernel
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}
