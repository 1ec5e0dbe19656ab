//! Exact transition matrices of the kernels, built by analytic summation.
//!
//! Visible states are indexed by their bit pattern (bit `i` set means
//! `v_i = +1`); joint states by `v_index * 2^|H| + h_index`.

use serde::{Deserialize, Serialize};

use super::{KernelFamily, KernelSpec};
use crate::annealing::Schedule;
use crate::error::{Error, Result};
use crate::logspace::ln_2cosh;
use crate::mrf::{index_to_spins, BipartiteModel};

/// Largest state space an exact kernel matrix may span.
pub const KERNEL_STATE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSpace {
    Visible,
    Joint,
}

/// Dense row-stochastic matrix, `data[r * cols + c] = P(c | r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub(crate) fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub(crate) fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub(crate) fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matmul(&self, other: &KernelMatrix) -> KernelMatrix {
        assert_eq!(self.cols, other.rows, "matrix shapes do not chain");
        let mut out = KernelMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                out_row
                    .iter_mut()
                    .zip(other.row(k))
                    .for_each(|(o, &b)| *o += a * b);
            }
        }
        out
    }

    /// Row vector times matrix: `Σ_r d(r) M(r, ·)`.
    pub fn left_apply(&self, d: &[f64]) -> Vec<f64> {
        assert_eq!(d.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &x) in d.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            out.iter_mut()
                .zip(self.row(r))
                .for_each(|(o, &m)| *o += x * m);
        }
        out
    }

    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.rows)
            .map(|r| (self.row(r).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &KernelMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `max |d^T M - d^T|` for a distribution `d` over the rows.
    pub fn stationarity_error(&self, d: &[f64]) -> f64 {
        self.left_apply(d)
            .iter()
            .zip(d)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn capacity(what: &str, bits: usize) -> Result<usize> {
    let size = 1usize.checked_shl(bits as u32).unwrap_or(usize::MAX);
    if bits >= 31 || size > KERNEL_STATE_CAP {
        return Err(Error::Capacity {
            what: what.to_string(),
            required: size,
            cap: KERNEL_STATE_CAP,
        });
    }
    Ok(size)
}

/// Product of independent site probabilities for a configuration index.
fn factorized_prob(up: &[f64], index: usize) -> f64 {
    up.iter()
        .enumerate()
        .map(|(i, &p)| if (index >> i) & 1 == 1 { p } else { 1.0 - p })
        .product()
}

/// `P_β(h | v)` as a `2^|V| x 2^|H|` matrix.
pub(crate) fn hidden_given_visible(model: &BipartiteModel, beta: f64) -> KernelMatrix {
    let (nv, nh) = (model.num_visible(), model.num_hidden());
    let (sv, sh) = (1usize << nv, 1usize << nh);
    let mut m = KernelMatrix::zeros(sv, sh);
    for vi in 0..sv {
        let v = index_to_spins(vi, nv);
        let up = model.up_probs(beta, &model.hidden_fields(&v));
        for hi in 0..sh {
            m.set(vi, hi, factorized_prob(&up, hi));
        }
    }
    m
}

/// `P_β(v | h)` as a `2^|H| x 2^|V|` matrix.
pub(crate) fn visible_given_hidden(model: &BipartiteModel, beta: f64) -> KernelMatrix {
    let (nv, nh) = (model.num_visible(), model.num_hidden());
    let (sv, sh) = (1usize << nv, 1usize << nh);
    let mut m = KernelMatrix::zeros(sh, sv);
    for hi in 0..sh {
        let h = index_to_spins(hi, nh);
        let up = model.up_probs(beta, &model.visible_fields(&h));
        for vi in 0..sv {
            m.set(hi, vi, factorized_prob(&up, vi));
        }
    }
    m
}

/// Exact matrix of one ascending single-site MH sweep over the hidden layer.
pub(crate) fn mh_sweep_matrix(model: &BipartiteModel, beta: f64) -> KernelMatrix {
    let nh = model.num_hidden();
    let sh = 1usize << nh;
    let scale = beta / model.temperature();
    let energy: Vec<f64> = (0..sh)
        .map(|hi| {
            let h = index_to_spins(hi, nh);
            let fields = model.visible_fields(&h);
            -scale * crate::mrf::dot_spins(model.hidden_bias(), &h)
                - fields.iter().map(|&f| ln_2cosh(scale * f)).sum::<f64>()
        })
        .collect();
    let mut sweep = KernelMatrix::identity(sh);
    for j in 0..nh {
        let mut site = KernelMatrix::zeros(sh, sh);
        for hi in 0..sh {
            let flipped = hi ^ (1 << j);
            let delta = energy[flipped] - energy[hi];
            let accept = if delta <= 0.0 { 1.0 } else { (-delta).exp() };
            site.set(hi, flipped, accept);
            site.set(hi, hi, 1.0 - accept);
        }
        sweep = sweep.matmul(&site);
    }
    sweep
}

fn matrix_power(m: &KernelMatrix, n: u32) -> KernelMatrix {
    (0..n).fold(KernelMatrix::identity(m.rows()), |acc, _| acc.matmul(m))
}

/// Visible-space kernel `τ(v'|v) = Σ P(h|v) S^n(h, h') P(v'|h')`.
pub(crate) fn marginal_matrix(model: &BipartiteModel, beta: f64, spec: &KernelSpec) -> KernelMatrix {
    let a = hidden_given_visible(model, beta);
    let b = visible_given_hidden(model, beta);
    match spec.family {
        KernelFamily::BlockedGibbs => a.matmul(&b),
        KernelFamily::MhAugmented => {
            let s = matrix_power(&mh_sweep_matrix(model, beta), spec.mh_sweeps);
            a.matmul(&s).matmul(&b)
        }
    }
}

/// One elementary move on the joint space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stage {
    /// `h ← P(h | v)`
    RefreshHidden,
    /// `h ← S^n(h, ·)`
    MhHidden,
    /// `v ← P(v | h)`
    ResampleVisible,
}

/// Joint-space propagation of a distribution through a sequence of stages.
pub(crate) struct JointStages {
    nv: usize,
    nh: usize,
    hidden_given_visible: KernelMatrix,
    visible_given_hidden: KernelMatrix,
    mh: Option<KernelMatrix>,
}

impl JointStages {
    pub(crate) fn new(model: &BipartiteModel, beta: f64, spec: &KernelSpec) -> Self {
        let mh = match spec.family {
            KernelFamily::BlockedGibbs => None,
            KernelFamily::MhAugmented => Some(matrix_power(
                &mh_sweep_matrix(model, beta),
                spec.mh_sweeps,
            )),
        };
        Self {
            nv: model.num_visible(),
            nh: model.num_hidden(),
            hidden_given_visible: hidden_given_visible(model, beta),
            visible_given_hidden: visible_given_hidden(model, beta),
            mh,
        }
    }

    fn apply(&self, stage: Stage, d: &[f64]) -> Vec<f64> {
        let (sv, sh) = (1usize << self.nv, 1usize << self.nh);
        let mut out = vec![0.0; sv * sh];
        match stage {
            Stage::RefreshHidden => {
                for v in 0..sv {
                    let mass: f64 = d[v * sh..(v + 1) * sh].iter().sum();
                    if mass == 0.0 {
                        continue;
                    }
                    for (h, &p) in self.hidden_given_visible.row(v).iter().enumerate() {
                        out[v * sh + h] = mass * p;
                    }
                }
            }
            Stage::MhHidden => {
                let Some(mh) = &self.mh else {
                    return d.to_vec();
                };
                for v in 0..sv {
                    let moved = mh.left_apply(&d[v * sh..(v + 1) * sh]);
                    out[v * sh..(v + 1) * sh].copy_from_slice(&moved);
                }
            }
            Stage::ResampleVisible => {
                for h in 0..sh {
                    let mass: f64 = (0..sv).map(|v| d[v * sh + h]).sum();
                    if mass == 0.0 {
                        continue;
                    }
                    for (v, &p) in self.visible_given_hidden.row(h).iter().enumerate() {
                        out[v * sh + h] = mass * p;
                    }
                }
            }
        }
        out
    }

    pub(crate) fn matrix(&self, stages: &[Stage]) -> KernelMatrix {
        let size = 1usize << (self.nv + self.nh);
        let mut m = KernelMatrix::zeros(size, size);
        for x in 0..size {
            let mut d = vec![0.0; size];
            d[x] = 1.0;
            for &stage in stages {
                d = self.apply(stage, &d);
            }
            m.data[x * size..(x + 1) * size].copy_from_slice(&d);
        }
        m
    }
}

/// The joint kernel's stage order: refresh `h`, MH on `h`, resample `v`,
/// refresh `h` again.
pub(crate) const JOINT_KERNEL_STAGES: [Stage; 4] = [
    Stage::RefreshHidden,
    Stage::MhHidden,
    Stage::ResampleVisible,
    Stage::RefreshHidden,
];

/// Exact transition matrix of the level-`k` kernel on the chosen space.
pub fn exact_kernel_matrix(
    model: &BipartiteModel,
    schedule: &Schedule,
    k: usize,
    spec: &KernelSpec,
    space: StateSpace,
) -> Result<KernelMatrix> {
    spec.validate()?;
    schedule.check_level(k)?;
    let beta = schedule.beta(k);
    match space {
        StateSpace::Visible => {
            capacity("visible state space", model.num_visible())?;
            capacity("hidden state space", model.num_hidden())?;
            Ok(marginal_matrix(model, beta, spec))
        }
        StateSpace::Joint => {
            capacity("joint state space", model.num_spins())?;
            Ok(JointStages::new(model, beta, spec).matrix(&JOINT_KERNEL_STAGES))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_visible_rows_are_uniform() {
        let m = BipartiteModel::zeros(3, 2, 1.0).unwrap();
        let s = Schedule::linear(3).unwrap();
        for spec in [KernelSpec::blocked_gibbs(), KernelSpec::mh_augmented(2)] {
            let t = exact_kernel_matrix(&m, &s, 1, &spec, StateSpace::Visible).unwrap();
            for r in 0..8 {
                for c in 0..8 {
                    assert!((t.get(r, c) - 0.125).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn capacity_is_enforced() {
        let m = BipartiteModel::zeros(7, 6, 1.0).unwrap();
        let s = Schedule::linear(2).unwrap();
        let err = exact_kernel_matrix(&m, &s, 1, &KernelSpec::blocked_gibbs(), StateSpace::Joint);
        assert!(matches!(err, Err(Error::Capacity { required: 8192, .. })));
        assert!(exact_kernel_matrix(&m, &s, 1, &KernelSpec::blocked_gibbs(), StateSpace::Visible).is_ok());
    }
}
