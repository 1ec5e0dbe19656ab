use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spin::{Layer, SpinState};
use crate::error::{invalid, Error, Result};
use crate::logspace::{ln_2cosh, sigmoid};

/// A bipartite ±1 spin model with energy
/// `E(v, h) = -(1/T) (Σ b_i v_i + Σ c_j h_j + Σ w_ij v_i h_j)`.
///
/// The coupling matrix is stored densely, row-major with one row per visible
/// unit. Grid-derived instances carry a sparsity mask; masked-out entries
/// are guaranteed to be zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct BipartiteModel {
    visible_bias: Vec<f64>,
    hidden_bias: Vec<f64>,
    coupling: Vec<f64>,
    temperature: f64,
    sparsity_mask: Option<Vec<bool>>,
}

/// On-disk JSON layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    visible_bias: Vec<f64>,
    hidden_bias: Vec<f64>,
    coupling: Vec<Vec<f64>>,
    temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sparsity_mask: Option<Vec<Vec<bool>>>,
}

impl TryFrom<ModelFile> for BipartiteModel {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        let model = BipartiteModel::new(
            file.visible_bias,
            file.hidden_bias,
            file.coupling,
            file.temperature,
        )?;
        match file.sparsity_mask {
            Some(mask) => model.with_sparsity_mask(mask),
            None => Ok(model),
        }
    }
}

impl From<BipartiteModel> for ModelFile {
    fn from(model: BipartiteModel) -> Self {
        let nh = model.num_hidden();
        let rows = |flat: &[f64]| -> Vec<Vec<f64>> {
            if nh == 0 {
                vec![Vec::new(); model.num_visible()]
            } else {
                flat.chunks(nh).map(<[f64]>::to_vec).collect()
            }
        };
        let coupling = rows(&model.coupling);
        let sparsity_mask = model.sparsity_mask.as_ref().map(|mask| {
            (0..model.num_visible())
                .map(|i| mask[i * nh..(i + 1) * nh].to_vec())
                .collect()
        });
        ModelFile {
            visible_bias: model.visible_bias,
            hidden_bias: model.hidden_bias,
            coupling,
            temperature: model.temperature,
            sparsity_mask,
        }
    }
}

fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return invalid(format!("{name} contains a non-finite value"));
    }
    Ok(())
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return invalid(format!("beta = {beta} outside [0, 1]"));
    }
    Ok(())
}

impl BipartiteModel {
    /// Builds a model from biases and coupling rows (one row per visible unit).
    pub fn new(
        visible_bias: Vec<f64>,
        hidden_bias: Vec<f64>,
        coupling: Vec<Vec<f64>>,
        temperature: f64,
    ) -> Result<Self> {
        let nv = visible_bias.len();
        let nh = hidden_bias.len();
        if coupling.len() != nv {
            return invalid(format!(
                "coupling has {} rows, expected {nv} (one per visible unit)",
                coupling.len()
            ));
        }
        if let Some((i, row)) = coupling.iter().enumerate().find(|(_, r)| r.len() != nh) {
            return invalid(format!(
                "coupling row {i} has {} entries, expected {nh}",
                row.len()
            ));
        }
        let flat = coupling.into_iter().flatten().collect();
        Self::from_flat(visible_bias, hidden_bias, flat, temperature)
    }

    /// Builds a model from a row-major `|V| x |H|` coupling buffer.
    pub fn from_flat(
        visible_bias: Vec<f64>,
        hidden_bias: Vec<f64>,
        coupling: Vec<f64>,
        temperature: f64,
    ) -> Result<Self> {
        let nv = visible_bias.len();
        let nh = hidden_bias.len();
        if nv == 0 || nh == 0 {
            return invalid("both layers must contain at least one unit");
        }
        if coupling.len() != nv * nh {
            return invalid(format!(
                "coupling has {} entries, expected {nv} x {nh}",
                coupling.len()
            ));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return invalid(format!("temperature must be positive, got {temperature}"));
        }
        check_finite("visible_bias", &visible_bias)?;
        check_finite("hidden_bias", &hidden_bias)?;
        check_finite("coupling", &coupling)?;
        Ok(Self {
            visible_bias,
            hidden_bias,
            coupling,
            temperature,
            sparsity_mask: None,
        })
    }

    pub fn zeros(num_visible: usize, num_hidden: usize, temperature: f64) -> Result<Self> {
        Self::from_flat(
            vec![0.0; num_visible],
            vec![0.0; num_hidden],
            vec![0.0; num_visible * num_hidden],
            temperature,
        )
    }

    /// Attaches a sparsity mask; every coupling outside the mask must be zero.
    pub fn with_sparsity_mask(mut self, mask: Vec<Vec<bool>>) -> Result<Self> {
        let nh = self.num_hidden();
        if mask.len() != self.num_visible() || mask.iter().any(|r| r.len() != nh) {
            return invalid("sparsity mask dimensions do not match coupling");
        }
        let flat: Vec<bool> = mask.into_iter().flatten().collect();
        if let Some(idx) = flat
            .iter()
            .zip(&self.coupling)
            .position(|(&m, &w)| !m && w != 0.0)
        {
            return invalid(format!(
                "coupling ({}, {}) is nonzero outside the sparsity mask",
                idx / nh,
                idx % nh
            ));
        }
        self.sparsity_mask = Some(flat);
        Ok(self)
    }

    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return invalid(format!("temperature must be positive, got {temperature}"));
        }
        let mut out = self.clone();
        out.temperature = temperature;
        Ok(out)
    }

    /// Swaps the roles of the two layers.
    pub fn transposed(&self) -> Self {
        let (nv, nh) = (self.num_visible(), self.num_hidden());
        let mut coupling = vec![0.0; nv * nh];
        for i in 0..nv {
            for j in 0..nh {
                coupling[j * nv + i] = self.coupling[i * nh + j];
            }
        }
        let sparsity_mask = self.sparsity_mask.as_ref().map(|mask| {
            let mut t = vec![false; nv * nh];
            for i in 0..nv {
                for j in 0..nh {
                    t[j * nv + i] = mask[i * nh + j];
                }
            }
            t
        });
        Self {
            visible_bias: self.hidden_bias.clone(),
            hidden_bias: self.visible_bias.clone(),
            coupling,
            temperature: self.temperature,
            sparsity_mask,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn num_visible(&self) -> usize {
        self.visible_bias.len()
    }

    pub fn num_hidden(&self) -> usize {
        self.hidden_bias.len()
    }

    /// Total number of spins `n = |V| + |H|`.
    pub fn num_spins(&self) -> usize {
        self.num_visible() + self.num_hidden()
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn visible_bias(&self) -> &[f64] {
        &self.visible_bias
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.hidden_bias
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.num_hidden() + j]
    }

    /// Row `i` of the coupling matrix (couplings of visible unit `i`).
    pub fn coupling_row(&self, i: usize) -> &[f64] {
        let nh = self.num_hidden();
        &self.coupling[i * nh..(i + 1) * nh]
    }

    pub fn coupling_flat(&self) -> &[f64] {
        &self.coupling
    }

    pub fn sparsity_mask(&self) -> Option<&[bool]> {
        self.sparsity_mask.as_deref()
    }

    pub(crate) fn check_visible(&self, v: &SpinState) -> Result<()> {
        if v.layer() != Layer::Visible || v.len() != self.num_visible() {
            return invalid(format!(
                "expected a visible state of length {}, got {:?} of length {}",
                self.num_visible(),
                v.layer(),
                v.len()
            ));
        }
        Ok(())
    }

    pub(crate) fn check_hidden(&self, h: &SpinState) -> Result<()> {
        if h.layer() != Layer::Hidden || h.len() != self.num_hidden() {
            return invalid(format!(
                "expected a hidden state of length {}, got {:?} of length {}",
                self.num_hidden(),
                h.layer(),
                h.len()
            ));
        }
        Ok(())
    }

    /// `θ_j = c_j + Σ_i w_ij v_i` for every hidden unit.
    pub(crate) fn hidden_fields(&self, v: &[i8]) -> Vec<f64> {
        let mut fields = self.hidden_bias.clone();
        for (i, &s) in v.iter().enumerate() {
            let row = self.coupling_row(i);
            if s > 0 {
                fields.iter_mut().zip(row).for_each(|(f, w)| *f += w);
            } else {
                fields.iter_mut().zip(row).for_each(|(f, w)| *f -= w);
            }
        }
        fields
    }

    /// `φ_i = b_i + Σ_j w_ij h_j` for every visible unit.
    pub(crate) fn visible_fields(&self, h: &[i8]) -> Vec<f64> {
        self.visible_bias
            .iter()
            .enumerate()
            .map(|(i, &b)| b + dot_spins(self.coupling_row(i), h))
            .collect()
    }

    pub(crate) fn energy_raw(&self, v: &[i8], h: &[i8]) -> f64 {
        let fields = self.hidden_fields(v);
        self.energy_from_hidden_fields(v, h, &fields)
    }

    /// Energy given precomputed hidden fields of `v`.
    pub(crate) fn energy_from_hidden_fields(&self, v: &[i8], h: &[i8], fields: &[f64]) -> f64 {
        -(dot_spins(&self.visible_bias, v) + dot_spins(fields, h)) / self.temperature
    }

    pub(crate) fn marginal_energy_v_from_fields(&self, beta: f64, v: &[i8], fields: &[f64]) -> f64 {
        let scale = beta / self.temperature;
        -scale * dot_spins(&self.visible_bias, v)
            - fields.iter().map(|&f| ln_2cosh(scale * f)).sum::<f64>()
    }

    pub(crate) fn marginal_energy_v_raw(&self, beta: f64, v: &[i8]) -> f64 {
        self.marginal_energy_v_from_fields(beta, v, &self.hidden_fields(v))
    }

    pub(crate) fn marginal_energy_h_from_fields(&self, beta: f64, h: &[i8], fields: &[f64]) -> f64 {
        let scale = beta / self.temperature;
        -scale * dot_spins(&self.hidden_bias, h)
            - fields.iter().map(|&f| ln_2cosh(scale * f)).sum::<f64>()
    }

    pub(crate) fn marginal_energy_h_raw(&self, beta: f64, h: &[i8]) -> f64 {
        self.marginal_energy_h_from_fields(beta, h, &self.visible_fields(h))
    }

    /// `P(s = +1)` for each unit given its field: `σ(2βθ/T)`.
    pub(crate) fn up_probs(&self, beta: f64, fields: &[f64]) -> Vec<f64> {
        let scale = 2.0 * beta / self.temperature;
        fields.iter().map(|&f| sigmoid(scale * f)).collect()
    }

    /// Energy of a joint configuration.
    pub fn energy(&self, v: &SpinState, h: &SpinState) -> Result<f64> {
        self.check_visible(v)?;
        self.check_hidden(h)?;
        Ok(self.energy_raw(v.values(), h.values()))
    }

    /// Energy of the visible marginal of the `β`-scaled model:
    /// `E_V(v) = -(β/T) Σ b_i v_i - Σ_j ln 2cosh((β/T) θ_j(v))`.
    pub fn marginal_energy_v(&self, beta: f64, v: &SpinState) -> Result<f64> {
        check_beta(beta)?;
        self.check_visible(v)?;
        Ok(self.marginal_energy_v_raw(beta, v.values()))
    }

    /// Energy of the hidden marginal; mirror of [`Self::marginal_energy_v`].
    pub fn marginal_energy_h(&self, beta: f64, h: &SpinState) -> Result<f64> {
        check_beta(beta)?;
        self.check_hidden(h)?;
        Ok(self.marginal_energy_h_raw(beta, h.values()))
    }

    /// `P_β(h_j = +1 | v)` for every hidden unit.
    pub fn conditional_hidden_probs(&self, beta: f64, v: &SpinState) -> Result<Vec<f64>> {
        check_beta(beta)?;
        self.check_visible(v)?;
        Ok(self.up_probs(beta, &self.hidden_fields(v.values())))
    }

    /// `P_β(v_i = +1 | h)` for every visible unit.
    pub fn conditional_visible_probs(&self, beta: f64, h: &SpinState) -> Result<Vec<f64>> {
        check_beta(beta)?;
        self.check_hidden(h)?;
        Ok(self.up_probs(beta, &self.visible_fields(h.values())))
    }
}

#[inline]
pub(crate) fn dot_spins(weights: &[f64], spins: &[i8]) -> f64 {
    weights
        .iter()
        .zip(spins)
        .map(|(&w, &s)| if s > 0 { w } else { -w })
        .sum()
}
