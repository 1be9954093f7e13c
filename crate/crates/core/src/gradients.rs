//! Parameter-shift gradients and the gradient-variance estimator.
//!
//! Expectation-valued losses (global and local cost) are differentiated by
//! shifting each angle by `±π/2`. The physics losses are nonlinear in the
//! outputs, so their gradient is `Jᵀ ∇_f L` with `J` the parameter-shift
//! Jacobian of the single-qubit outputs and `∇_f L` the analytic derivative
//! of the loss with respect to those outputs.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{run_circuit, CircuitSpec, ParamVector};
use crate::error::{Error, Result};
use crate::losses::{loss_of_state, output_vector, Discretization, LossConfig, LossKind};
use crate::sim::StateVector;

/// Shift for Pauli/2-generated rotations.
pub const SHIFT: f64 = FRAC_PI_2;

/// `∂L/∂φ_j` for every parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GradientVector(pub Vec<f64>);

impl GradientVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Applies the two-term shift rule to an arbitrary state functional.
pub fn parameter_shift<F>(spec: &CircuitSpec, params: &[f64], observable: F) -> Result<GradientVector>
where
    F: Fn(&StateVector) -> Result<f64>,
{
    let mut shifted = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for j in 0..params.len() {
        shifted[j] = params[j] + SHIFT;
        let plus = observable(&run_circuit(spec, &shifted)?)?;
        shifted[j] = params[j] - SHIFT;
        let minus = observable(&run_circuit(spec, &shifted)?)?;
        shifted[j] = params[j];
        grad.push(0.5 * (plus - minus));
    }
    Ok(GradientVector(grad))
}

/// `n × 2nL` matrix of `∂<σ_Z^(k)>/∂φ_j`.
pub fn jacobian_outputs(spec: &CircuitSpec, params: &[f64]) -> Result<DMatrix<f64>> {
    if params.len() != spec.param_count() {
        return Err(Error::Argument(format!(
            "circuit expects {} parameters, got {}",
            spec.param_count(),
            params.len()
        )));
    }
    let n = spec.n_qubits();
    let mut jac = DMatrix::zeros(n, params.len());
    let mut shifted = params.to_vec();
    for j in 0..params.len() {
        shifted[j] = params[j] + SHIFT;
        let plus = output_vector(&run_circuit(spec, &shifted)?);
        shifted[j] = params[j] - SHIFT;
        let minus = output_vector(&run_circuit(spec, &shifted)?);
        shifted[j] = params[j];
        for k in 0..n {
            jac[(k, j)] = 0.5 * (plus[k] - minus[k]);
        }
    }
    Ok(jac)
}

/// Exact gradient of `config`'s loss.
pub fn loss_gradient(
    config: &LossConfig,
    spec: &CircuitSpec,
    params: &[f64],
    disc: &Discretization,
) -> Result<GradientVector> {
    config.validate(spec, disc)?;
    match config.kind {
        LossKind::GlobalCost | LossKind::LocalCost => {
            parameter_shift(spec, params, |s| loss_of_state(config, s, disc))
        }
        LossKind::PdeConstrained | LossKind::PdeStructured => {
            let f = output_vector(&run_circuit(spec, params)?);
            let outer = config.output_gradient(&f, disc)?;
            let jac = jacobian_outputs(spec, params)?;
            let grad = jac.transpose() * nalgebra::DVector::from_vec(outer);
            Ok(GradientVector(grad.iter().copied().collect()))
        }
    }
}

/// Central differences `[L(φ + h e_j) - L(φ - h e_j)] / 2h`.
pub fn finite_difference_gradient<F>(mut loss: F, params: &[f64], h: f64) -> Result<GradientVector>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::Argument(format!("step {h} must be positive")));
    }
    let mut shifted = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for j in 0..params.len() {
        shifted[j] = params[j] + h;
        let plus = loss(&shifted)?;
        shifted[j] = params[j] - h;
        let minus = loss(&shifted)?;
        shifted[j] = params[j];
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(GradientVector(grad))
}

/// Draw `index` of the uniform `[0, 2π)` parameter stream for `(seed, n, L)`.
///
/// Each draw has its own ChaCha stream, so draws can be generated in any
/// order or in parallel. The stream does not depend on the loss
/// configuration or topology: every configuration at the same `(n, L)`
/// sees the same parameter vectors.
pub fn sample_parameters(spec: &CircuitSpec, seed: u64, index: u64) -> ParamVector {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(spec.n_qubits() as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(spec.layers() as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    ParamVector(
        (0..spec.param_count())
            .map(|_| rng.random_range(0.0..TAU))
            .collect(),
    )
}

/// Per-parameter and mean gradient variance over `n_samples` draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub per_param_variance: Vec<f64>,
    pub mean_variance: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl VarianceReport {
    /// Unbiased (divisor `K-1`) variance of each gradient component.
    pub fn from_gradients(grads: &[GradientVector], seed: u64) -> Result<Self> {
        let k = grads.len();
        if k < 2 {
            return Err(Error::Argument(format!(
                "variance needs at least 2 samples, got {k}"
            )));
        }
        let p = grads[0].len();
        if grads.iter().any(|g| g.len() != p) {
            return Err(Error::Argument("gradient lengths differ".into()));
        }
        let per_param_variance: Vec<f64> = (0..p)
            .map(|j| {
                // shifted by the first sample so identical draws give exactly 0
                let x0 = grads[0].0[j];
                let mean = grads.iter().map(|g| g.0[j] - x0).sum::<f64>() / k as f64;
                grads
                    .iter()
                    .map(|g| (g.0[j] - x0 - mean).powi(2))
                    .sum::<f64>()
                    / (k - 1) as f64
            })
            .collect();
        let mean_variance = per_param_variance.iter().sum::<f64>() / p.max(1) as f64;
        Ok(Self {
            per_param_variance,
            mean_variance,
            n_samples: k,
            seed,
        })
    }

    /// Sample standard deviation of the per-parameter variances over `√p`.
    pub fn stderr_of_mean(&self) -> f64 {
        let p = self.per_param_variance.len();
        if p < 2 {
            return 0.0;
        }
        let ss: f64 = self
            .per_param_variance
            .iter()
            .map(|v| (v - self.mean_variance).powi(2))
            .sum();
        (ss / (p - 1) as f64).sqrt() / (p as f64).sqrt()
    }
}

/// Gradient variance of `config` over `k` uniform parameter draws.
///
/// Draws are evaluated in parallel; the result depends only on
/// `(config, spec, k, seed)`.
pub fn gradient_variance(
    config: &LossConfig,
    spec: &CircuitSpec,
    disc: &Discretization,
    k: usize,
    seed: u64,
) -> Result<VarianceReport> {
    if k < 2 {
        return Err(Error::Argument(format!(
            "variance needs at least 2 samples, got {k}"
        )));
    }
    config.validate(spec, disc)?;
    let grads = (0..k as u64)
        .into_par_iter()
        .map(|i| {
            let params = sample_parameters(spec, seed, i);
            loss_gradient(config, spec, params.as_slice(), disc)
        })
        .collect::<Result<Vec<_>>>()?;
    VarianceReport::from_gradients(&grads, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::Topology;
    use crate::losses::total_loss;

    #[test]
    fn shift_derivative_of_single_ry() {
        let spec = CircuitSpec::new(2, 1, Topology::AllToAll).unwrap();
        let mut params = vec![0.0; 4];
        let jac = jacobian_outputs(&spec, &params).unwrap();
        assert!(jac[(0, 0)].abs() < 1e-15);
        params[0] = FRAC_PI_2;
        let jac = jacobian_outputs(&spec, &params).unwrap();
        assert!((jac[(0, 0)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobian_entries_bounded() {
        let spec = CircuitSpec::new(4, 2, Topology::AllToAll).unwrap();
        for i in 0..5 {
            let p = sample_parameters(&spec, 3, i);
            let jac = jacobian_outputs(&spec, p.as_slice()).unwrap();
            assert!(jac.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn local_cost_shift_equals_jacobian_row() {
        let cfg = LossConfig::local();
        let spec = cfg.circuit(4, 2).unwrap();
        let disc = Discretization::new(4).unwrap();
        let p = sample_parameters(&spec, 11, 0);
        let direct = loss_gradient(&cfg, &spec, p.as_slice(), &disc).unwrap();
        let jac = jacobian_outputs(&spec, p.as_slice()).unwrap();
        for j in 0..spec.param_count() {
            assert!((direct.0[j] - jac[(0, j)]).abs() < 1e-14);
        }
    }

    #[test]
    fn stationary_point_has_zero_gradient() {
        // f ≡ target ≡ 1 at φ = 0: data and physics terms are both stationary.
        let cfg = LossConfig::pde_constrained().with_target(vec![1.0; 4]);
        let spec = cfg.circuit(4, 2).unwrap();
        let disc = Discretization::new(4).unwrap();
        let g = loss_gradient(&cfg, &spec, &vec![0.0; 16], &disc).unwrap();
        assert!(g.0.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn finite_difference_of_quadratic() {
        let p = [0.3, -1.2, 2.5];
        let g = finite_difference_gradient(|x| Ok(x.iter().map(|v| v * v).sum()), &p, 1e-4).unwrap();
        for j in 0..3 {
            assert!((g.0[j] - 2.0 * p[j]).abs() < 1e-8);
        }
        assert!(finite_difference_gradient(|_| Ok(0.0), &p, 0.0).is_err());
    }

    #[test]
    fn finite_difference_error_is_second_order() {
        let cfg = LossConfig::global();
        let spec = cfg.circuit(3, 1).unwrap();
        let disc = Discretization::new(3).unwrap();
        let p = sample_parameters(&spec, 5, 0);
        let exact = loss_gradient(&cfg, &spec, p.as_slice(), &disc).unwrap();
        let err = |h: f64| {
            let fd = finite_difference_gradient(
                |x| total_loss(&cfg, &spec, x, &disc),
                p.as_slice(),
                h,
            )
            .unwrap();
            fd.0.iter()
                .zip(&exact.0)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn identical_draws_give_zero_variance() {
        let g = GradientVector(vec![0.1, -0.4, 2.0]);
        let r = VarianceReport::from_gradients(&vec![g; 25], 0).unwrap();
        assert!(r.per_param_variance.iter().all(|&v| v == 0.0));
        assert_eq!(r.mean_variance, 0.0);
    }

    #[test]
    fn variance_uses_unbiased_divisor() {
        let grads = [GradientVector(vec![1.0, 0.0]), GradientVector(vec![3.0, 0.0])];
        let r = VarianceReport::from_gradients(&grads, 0).unwrap();
        assert_eq!(r.per_param_variance, vec![2.0, 0.0]);
        assert_eq!(r.mean_variance, 1.0);
    }

    #[test]
    fn variance_requires_two_samples() {
        let cfg = LossConfig::global();
        let spec = cfg.circuit(4, 1).unwrap();
        let disc = Discretization::new(4).unwrap();
        assert!(matches!(
            gradient_variance(&cfg, &spec, &disc, 1, 0),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn parameter_stream_is_order_independent() {
        let spec = CircuitSpec::new(4, 3, Topology::AllToAll).unwrap();
        let a = sample_parameters(&spec, 42, 7);
        let _ = sample_parameters(&spec, 42, 3);
        assert_eq!(a, sample_parameters(&spec, 42, 7));
        assert_ne!(a, sample_parameters(&spec, 42, 8));
        assert_ne!(a, sample_parameters(&spec, 43, 7));
        assert!(a.0.iter().all(|&x| (0.0..TAU).contains(&x)));
    }
}
