//! Experiment harness: instance families, sweeps, density estimates and the
//! exact certification batch.

pub mod certify;
pub mod config;
pub mod generators;
pub mod kde;
pub mod stats;
pub mod sweeps;

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use certify::{run_certify, CertifyReport};
pub use config::{ExperimentConfig, ExperimentKind, KdeGrid, ModelFamily};
pub use generators::{gen_gaussian_rbm, gen_grid_ising, gen_hopfield_rbm};
pub use kde::kde_gaussian;
pub use sweeps::{
    run_ape_sweep, run_ape_vs_k, run_free_energy_table, run_lnr_distribution, LnrReport, SweepRow,
    SweepTable,
};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentOutput {
    Sweep(SweepTable),
    Lnr(LnrReport),
    Certify(CertifyReport),
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    Ok(match cfg.experiment {
        ExperimentKind::ApeVsTemperature => ExperimentOutput::Sweep(run_ape_sweep(cfg)?),
        ExperimentKind::FreeEnergyTable => ExperimentOutput::Sweep(run_free_energy_table(cfg)?),
        ExperimentKind::ApeVsK => ExperimentOutput::Sweep(run_ape_vs_k(cfg)?),
        ExperimentKind::LnrDistribution => ExperimentOutput::Lnr(run_lnr_distribution(cfg)?),
        ExperimentKind::TheoremCertify => ExperimentOutput::Certify(run_certify(cfg)?),
    })
}

pub fn to_csv<T: Serialize>(records: &[T]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for r in records {
        writer.serialize(r)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    File::create(&path)?.write_all(contents.as_bytes())?;
    Ok(path)
}

impl ExperimentOutput {
    /// Writes the output files into `dir` and returns their paths.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        match self {
            ExperimentOutput::Sweep(table) => {
                paths.push(write_file(dir, "rows.csv", &to_csv(&table.rows)?)?);
                paths.push(write_file(dir, "summary.csv", &to_csv(&table.summary)?)?);
            }
            ExperimentOutput::Lnr(report) => {
                paths.push(write_file(dir, "rows.csv", &to_csv(&report.table.rows)?)?);
                paths.push(write_file(dir, "summary.csv", &to_csv(&report.table.summary)?)?);
                paths.push(write_file(dir, "ln_r.csv", &to_csv(&report.records)?)?);
                paths.push(write_file(dir, "kde.csv", &to_csv(&report.kde)?)?);
                paths.push(write_file(
                    dir,
                    "lnr_summary.json",
                    &serde_json::to_string_pretty(&report.summary)?,
                )?);
            }
            ExperimentOutput::Certify(report) => {
                paths.push(write_file(
                    dir,
                    "certify.json",
                    &serde_json::to_string_pretty(report)?,
                )?);
            }
        }
        Ok(paths)
    }
}
