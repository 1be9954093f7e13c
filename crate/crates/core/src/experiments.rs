//! Experiment drivers: qubit, depth and PDE variance sweeps, the
//! entanglement sweep, gradient-descent training and scaling fits.
//!
//! All drivers take an explicit seed. Every configuration in a sweep draws
//! its parameters from the same `(seed, n, L)` stream, so comparisons
//! between configurations are paired.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{run_circuit, CircuitSpec, Topology};
use crate::error::{Error, Result};
use crate::gradients::{gradient_variance, loss_gradient, sample_parameters, GradientVector};
use crate::losses::{total_loss, Discretization, LossConfig, PdeKind, PhysicsTerm};
use crate::sim::StateVector;

pub const DEFAULT_VARIANCE_SAMPLES: usize = 25;
pub const DEFAULT_ENTROPY_SAMPLES: usize = 20;
pub const DEFAULT_QUBITS: [usize; 3] = [4, 6, 8];
pub const DEFAULT_LAYERS: [usize; 5] = [1, 2, 3, 4, 5];
pub const DEFAULT_ENTROPY_LAYERS: [usize; 3] = [1, 3, 5];
pub const SWEEP_LAYERS: usize = 3;
pub const DEPTH_QUBITS: usize = 6;
pub const PER_PARAM_QUBITS: usize = 8;
pub const TRAIN_QUBITS: usize = 4;
pub const TRAIN_EPOCHS: usize = 50;
pub const TRAIN_LEARNING_RATE: f64 = 0.01;

/// One `(n, L, configuration)` cell of a variance sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub layers: usize,
    pub config: String,
    pub pde: Option<String>,
    pub mean_variance: f64,
    pub stderr_of_mean: f64,
    pub per_param_variance: Vec<f64>,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub experiment: String,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn find(&self, n: usize, layers: usize, config: &str) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.layers == layers && r.config == config)
    }

    pub fn find_pde(&self, pde: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.pde.as_deref() == Some(pde))
    }
}

fn variance_cell(config: &LossConfig, n: usize, layers: usize, k: usize, seed: u64) -> Result<SweepRow> {
    let spec = config.circuit(n, layers)?;
    let disc = Discretization::new(n)?;
    let report = gradient_variance(config, &spec, &disc, k, seed)?;
    Ok(SweepRow {
        n,
        layers,
        config: config.name().to_string(),
        pde: config.pde_name().map(str::to_string),
        mean_variance: report.mean_variance,
        stderr_of_mean: report.stderr_of_mean(),
        per_param_variance: report.per_param_variance,
        k,
        seed,
    })
}

fn check_unique(configs: &[LossConfig]) -> Result<()> {
    for (i, a) in configs.iter().enumerate() {
        if configs[..i]
            .iter()
            .any(|b| b.name() == a.name() && b.pde_name() == a.pde_name())
        {
            return Err(Error::Config(format!("configuration {} listed twice", a.name())));
        }
    }
    Ok(())
}

fn grid(
    experiment: &str,
    cells: &[(usize, usize)],
    configs: &[LossConfig],
    k: usize,
    seed: u64,
) -> Result<SweepResult> {
    if k < 2 {
        return Err(Error::Argument(format!("variance needs at least 2 samples, got {k}")));
    }
    check_unique(configs)?;
    let mut rows = Vec::with_capacity(cells.len() * configs.len());
    for &(n, layers) in cells {
        for cfg in configs {
            rows.push(variance_cell(cfg, n, layers, k, seed)?);
        }
    }
    Ok(SweepResult {
        experiment: experiment.to_string(),
        rows,
    })
}

fn dedup_sorted(values: &[usize]) -> Vec<usize> {
    let mut v = values.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Variance against qubit count at fixed depth.
pub fn sweep_qubits(
    ns: &[usize],
    layers: usize,
    configs: &[LossConfig],
    k: usize,
    seed: u64,
) -> Result<SweepResult> {
    let cells: Vec<_> = dedup_sorted(ns).into_iter().map(|n| (n, layers)).collect();
    grid("sweep_qubits", &cells, configs, k, seed)
}

/// Variance against depth at fixed qubit count.
pub fn sweep_depth(
    layers: &[usize],
    n: usize,
    configs: &[LossConfig],
    k: usize,
    seed: u64,
) -> Result<SweepResult> {
    let cells: Vec<_> = dedup_sorted(layers).into_iter().map(|l| (n, l)).collect();
    grid("sweep_depth", &cells, configs, k, seed)
}

/// PDE-constrained variance with each PDE residual as the physics term.
pub fn sweep_pde(
    pdes: &[PdeKind],
    n: usize,
    layers: usize,
    physics_weight: f64,
    k: usize,
    seed: u64,
) -> Result<SweepResult> {
    let configs: Vec<_> = pdes
        .iter()
        .map(|&p| {
            LossConfig::pde_constrained()
                .with_physics(PhysicsTerm::Residual(p))
                .with_weight(physics_weight)
        })
        .collect();
    grid("sweep_pde", &[(n, layers)], &configs, k, seed)
}

/// Full per-parameter variance vectors at one `(n, L)`.
pub fn per_param_distribution(
    n: usize,
    layers: usize,
    configs: &[LossConfig],
    k: usize,
    seed: u64,
) -> Result<SweepResult> {
    grid("per_param", &[(n, layers)], configs, k, seed)
}

/// Mean half-cut entanglement for one `(n, L, topology)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub n: usize,
    pub layers: usize,
    pub topology: Topology,
    pub mean_entropy_bits: f64,
    pub ratio_to_max: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyResult {
    pub experiment: String,
    pub rows: Vec<EntropyRow>,
}

impl EntropyResult {
    pub fn find(&self, n: usize, layers: usize, topology: Topology) -> Option<&EntropyRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.layers == layers && r.topology == topology)
    }
}

/// Entropy in bits of the first `⌊n/2⌋` qubits.
pub fn half_cut_entropy(state: &StateVector) -> Result<f64> {
    let keep: Vec<usize> = (0..state.n_qubits() / 2).collect();
    state.reduced_density_matrix(&keep)?.von_neumann_entropy()
}

pub fn entanglement_sweep(
    ns: &[usize],
    layers: &[usize],
    topologies: &[Topology],
    k: usize,
    seed: u64,
) -> Result<EntropyResult> {
    if k < 1 {
        return Err(Error::Argument("entanglement sweep needs at least 1 sample".into()));
    }
    let mut topos = topologies.to_vec();
    topos.sort();
    topos.dedup();
    let mut rows = Vec::new();
    for n in dedup_sorted(ns) {
        for l in dedup_sorted(layers) {
            for &topology in &topos {
                let spec = CircuitSpec::new(n, l, topology)?;
                let entropies = (0..k as u64)
                    .into_par_iter()
                    .map(|i| {
                        let p = sample_parameters(&spec, seed, i);
                        half_cut_entropy(&run_circuit(&spec, p.as_slice())?)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let mean = entropies.iter().sum::<f64>() / k as f64;
                rows.push(EntropyRow {
                    n,
                    layers: l,
                    topology,
                    mean_entropy_bits: mean,
                    ratio_to_max: mean / (n as f64 / 2.0),
                    k,
                    seed,
                });
            }
        }
    }
    Ok(EntropyResult {
        experiment: "entanglement".into(),
        rows,
    })
}

/// Loss and gradient at one point of the descent trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub grad_norm: f64,
    #[serde(skip)]
    pub gradient: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub config: String,
    pub n: usize,
    pub layers: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub final_loss: f64,
    pub final_grad_norm: f64,
}

/// Plain gradient descent `φ ← φ - lr ∇L` from a seeded uniform draw.
///
/// The trace holds `epochs + 1` records: the starting point and the point
/// after each update.
pub fn train(
    config: &LossConfig,
    n: usize,
    layers: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<TrainTrace> {
    if epochs < 1 {
        return Err(Error::Argument("training needs at least one epoch".into()));
    }
    if !learning_rate.is_finite() {
        return Err(Error::Argument(format!("learning rate {learning_rate} is not finite")));
    }
    let spec = config.circuit(n, layers)?;
    let disc = Discretization::new(n)?;
    let mut params = sample_parameters(&spec, seed, 0).0;
    let mut records = Vec::with_capacity(epochs + 1);
    for epoch in 0..=epochs {
        let loss = total_loss(config, &spec, &params, &disc)?;
        let GradientVector(grad) = loss_gradient(config, &spec, &params, &disc)?;
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !loss.is_finite() || !grad_norm.is_finite() {
            return Err(Error::Numeric(format!("training diverged at epoch {epoch}")));
        }
        if epoch < epochs {
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= learning_rate * g;
            }
        }
        records.push(EpochRecord {
            epoch,
            loss,
            grad_norm,
            gradient: grad,
        });
    }
    let last = records.last().expect("at least one epoch recorded");
    Ok(TrainTrace {
        config: config.name().to_string(),
        n,
        layers,
        learning_rate,
        seed,
        final_loss: last.loss,
        final_grad_norm: last.grad_norm,
        epochs: records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingModel {
    /// `var ∝ 2^{-b n}`.
    ExpInQubits,
    /// `var ∝ n^{-a}`.
    PowerInQubits,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: ScalingModel,
    /// Decay exponent (`b` or `a`), positive for decaying variance.
    pub exponent: f64,
    /// Prefactor in the same log base as the fit.
    pub intercept: f64,
    /// Euclidean norm of the log-space residuals.
    pub residual_norm: f64,
}

/// Least-squares fit of `log₂ var` against `n` or `ln var` against `ln n`.
pub fn fit_scaling(points: &[(usize, f64)], model: ScalingModel) -> Result<ScalingFit> {
    if points.len() < 2 {
        return Err(Error::Argument(format!(
            "scaling fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, var) in points {
        if !(var > 0.0) || !var.is_finite() {
            return Err(Error::Numeric(format!("cannot fit non-positive variance {var}")));
        }
        let (x, y) = match model {
            ScalingModel::ExpInQubits => (n as f64, var.log2()),
            ScalingModel::PowerInQubits => ((n as f64).ln(), var.ln()),
        };
        xs.push(x);
        ys.push(y);
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Numeric("scaling fit needs at least two distinct n".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_norm = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(ScalingFit {
        model,
        exponent: -slope,
        intercept,
        residual_norm,
    })
}
