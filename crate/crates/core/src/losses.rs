//! Loss functions on the vector of single-qubit `<σ_Z>` outputs.
//!
//! The physics terms use centered finite differences on a unit periodic grid
//! with one collocation point per qubit (`dx = 1/n`). The circuit produces a
//! single spatial profile, so residuals are steady-state: time derivatives
//! are zero and only the spatial operator is tested.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ansatz::{run_circuit, CircuitSpec, Topology};
use crate::error::{Error, Result};
use crate::sim::StateVector;

pub const DEFAULT_KAPPA: f64 = 0.01;
pub const DEFAULT_NU: f64 = 0.01;
pub const DEFAULT_MANNING_N: f64 = 0.035;
pub const DEFAULT_FRICTION_SLOPE: f64 = 0.001;
pub const DEFAULT_EPSILON_FLOOR: f64 = 0.05;
pub const DEFAULT_PHYSICS_WEIGHT: f64 = 0.1;

/// Governing equation whose residual is penalised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pde", rename_all = "snake_case")]
pub enum PdeKind {
    /// `κ u_xx = 0`.
    Heat { kappa: f64 },
    /// `u u_x - ν u_xx = 0`.
    Burgers { nu: f64 },
    /// Continuity `Q_x = 0` with Manning discharge on a wide channel
    /// (`R_h = A`), where `A = (f + 1)/2 + ε`.
    SaintVenant {
        manning_n: f64,
        friction_slope: f64,
        epsilon_floor: f64,
    },
}

impl PdeKind {
    pub fn heat() -> Self {
        PdeKind::Heat {
            kappa: DEFAULT_KAPPA,
        }
    }

    pub fn burgers() -> Self {
        PdeKind::Burgers { nu: DEFAULT_NU }
    }

    pub fn saint_venant() -> Self {
        PdeKind::SaintVenant {
            manning_n: DEFAULT_MANNING_N,
            friction_slope: DEFAULT_FRICTION_SLOPE,
            epsilon_floor: DEFAULT_EPSILON_FLOOR,
        }
    }

    /// Heat, Burgers, Saint-Venant with default coefficients.
    pub fn all() -> [PdeKind; 3] {
        [Self::heat(), Self::burgers(), Self::saint_venant()]
    }

    pub fn name(&self) -> &'static str {
        match self {
            PdeKind::Heat { .. } => "heat",
            PdeKind::Burgers { .. } => "burgers",
            PdeKind::SaintVenant { .. } => "saint_venant",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "heat" => Some(Self::heat()),
            "burgers" => Some(Self::burgers()),
            "saint_venant" | "saint-venant" => Some(Self::saint_venant()),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            PdeKind::Heat { kappa } if !kappa.is_finite() => {
                Err(Error::Config(format!("diffusivity {kappa} is not finite")))
            }
            PdeKind::Burgers { nu } if !nu.is_finite() => {
                Err(Error::Config(format!("viscosity {nu} is not finite")))
            }
            PdeKind::SaintVenant {
                manning_n,
                friction_slope,
                epsilon_floor,
            } => {
                if !(manning_n > 0.0) || !(friction_slope >= 0.0) || !(epsilon_floor > 0.0) {
                    return Err(Error::Config(format!(
                        "invalid Saint-Venant closure (n_M={manning_n}, S_f={friction_slope}, eps={epsilon_floor})"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Unit periodic grid with one point per qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    n_points: usize,
    dx: f64,
}

impl Discretization {
    /// Grids need at least two points; on two points the centered first
    /// difference vanishes identically.
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::Config(format!(
                "periodic grid needs at least 2 points, got {n_points}"
            )));
        }
        Ok(Self {
            n_points,
            dx: 1.0 / n_points as f64,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.n_points {
            return Err(Error::Argument(format!(
                "profile has {} values, grid has {} points",
                f.len(),
                self.n_points
            )));
        }
        Ok(())
    }
}

/// Component `k` is `<σ_Z^(k)>`.
pub fn output_vector(state: &StateVector) -> Vec<f64> {
    state.expect_z_all()
}

/// `(f_{k+1} - f_{k-1}) / 2dx`, periodic.
pub fn centered_d1(f: &[f64], disc: &Discretization) -> Result<Vec<f64>> {
    disc.check(f)?;
    Ok(d1(f, disc.dx))
}

/// `(f_{k+1} - 2 f_k + f_{k-1}) / dx²`, periodic.
pub fn centered_d2(f: &[f64], disc: &Discretization) -> Result<Vec<f64>> {
    disc.check(f)?;
    Ok(d2(f, disc.dx))
}

fn d1(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|k| (f[(k + 1) % n] - f[(k + n - 1) % n]) / (2.0 * dx))
        .collect()
}

/// Adjoint of [`d1`]: the periodic centered stencil is antisymmetric.
fn d1_adjoint(v: &[f64], dx: f64) -> Vec<f64> {
    d1(v, dx).into_iter().map(|x| -x).collect()
}

// d2 is symmetric and is its own adjoint.
fn d2(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|k| (f[(k + 1) % n] - 2.0 * f[k] + f[(k + n - 1) % n]) / (dx * dx))
        .collect()
}

fn mean_square(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64
}

/// Mean squared centered first difference.
pub fn physics_loss_gradient_penalty(f: &[f64], disc: &Discretization) -> Result<f64> {
    Ok(mean_square(&centered_d1(f, disc)?))
}

/// Saint-Venant wetted area and Manning discharge for the profile `f`.
fn manning_discharge(
    f: &[f64],
    manning_n: f64,
    friction_slope: f64,
    epsilon_floor: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let coeff = friction_slope.sqrt() / manning_n;
    let area: Vec<f64> = f.iter().map(|&v| (v + 1.0) / 2.0 + epsilon_floor).collect();
    let mut q = Vec::with_capacity(area.len());
    for &a in &area {
        if !(a > 0.0) {
            return Err(Error::Numeric(format!(
                "non-positive wetted area {a} in Manning closure"
            )));
        }
        let v = coeff * a.powf(5.0 / 3.0);
        if !v.is_finite() {
            return Err(Error::Numeric(format!("non-finite discharge for area {a}")));
        }
        q.push(v);
    }
    Ok((area, q))
}

/// Steady-profile residual at every collocation point.
pub fn pde_residual(f: &[f64], pde: &PdeKind, disc: &Discretization) -> Result<Vec<f64>> {
    disc.check(f)?;
    pde.validate()?;
    let dx = disc.dx;
    let r = match *pde {
        PdeKind::Heat { kappa } => d2(f, dx).into_iter().map(|v| kappa * v).collect(),
        PdeKind::Burgers { nu } => {
            let (g, h) = (d1(f, dx), d2(f, dx));
            (0..f.len()).map(|k| f[k] * g[k] - nu * h[k]).collect()
        }
        PdeKind::SaintVenant {
            manning_n,
            friction_slope,
            epsilon_floor,
        } => {
            let (_, q) = manning_discharge(f, manning_n, friction_slope, epsilon_floor)?;
            d1(&q, dx)
        }
    };
    Ok(r)
}

/// Mean squared residual.
pub fn pde_loss(f: &[f64], pde: &PdeKind, disc: &Discretization) -> Result<f64> {
    Ok(mean_square(&pde_residual(f, pde, disc)?))
}

/// Mean squared error against `target`.
pub fn data_loss(f: &[f64], target: &[f64]) -> Result<f64> {
    if f.len() != target.len() || f.is_empty() {
        return Err(Error::Argument(format!(
            "data loss needs equal nonempty lengths, got {} and {}",
            f.len(),
            target.len()
        )));
    }
    Ok(f.iter()
        .zip(target)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / f.len() as f64)
}

/// `sin(2πk/n)`, the default data target.
pub fn sine_target(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (2.0 * PI * k as f64 / n as f64).sin())
        .collect()
}

/// Which loss family a configuration evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `<Z ⊗ ... ⊗ Z>` over all qubits, all-to-all entangler.
    GlobalCost,
    /// `<Z>` on qubit 0, all-to-all entangler.
    LocalCost,
    /// Data + physics loss, all-to-all entangler.
    PdeConstrained,
    /// Data + physics loss, nearest-neighbour entangler.
    PdeStructured,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::GlobalCost,
        LossKind::LocalCost,
        LossKind::PdeConstrained,
        LossKind::PdeStructured,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::GlobalCost => "global",
            LossKind::LocalCost => "local",
            LossKind::PdeConstrained => "pde",
            LossKind::PdeStructured => "pde_structured",
        }
    }

    pub fn topology(self) -> Topology {
        match self {
            LossKind::PdeStructured => Topology::NearestNeighbor,
            _ => Topology::AllToAll,
        }
    }

    pub fn is_physics(self) -> bool {
        matches!(self, LossKind::PdeConstrained | LossKind::PdeStructured)
    }
}

/// Physics term added to the data loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum PhysicsTerm {
    /// Mean squared centered first difference.
    GradientPenalty,
    /// Mean squared residual of a PDE.
    Residual(PdeKind),
}

/// A complete loss configuration.
///
/// `physics` and `physics_weight` only matter for the two physics kinds;
/// `target_profile` of `None` means [`sine_target`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub kind: LossKind,
    pub physics: PhysicsTerm,
    pub physics_weight: f64,
    pub target_profile: Option<Vec<f64>>,
}

impl LossConfig {
    pub fn new(kind: LossKind) -> Self {
        Self {
            kind,
            physics: PhysicsTerm::GradientPenalty,
            physics_weight: DEFAULT_PHYSICS_WEIGHT,
            target_profile: None,
        }
    }

    pub fn global() -> Self {
        Self::new(LossKind::GlobalCost)
    }

    pub fn local() -> Self {
        Self::new(LossKind::LocalCost)
    }

    pub fn pde_constrained() -> Self {
        Self::new(LossKind::PdeConstrained)
    }

    pub fn pde_structured() -> Self {
        Self::new(LossKind::PdeStructured)
    }

    /// The four standard configurations, gradient-penalty physics term.
    pub fn standard() -> Vec<Self> {
        LossKind::ALL.into_iter().map(Self::new).collect()
    }

    pub fn with_physics(mut self, physics: PhysicsTerm) -> Self {
        self.physics = physics;
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.physics_weight = weight;
        self
    }

    pub fn with_target(mut self, target: Vec<f64>) -> Self {
        self.target_profile = Some(target);
        self
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// PDE name when the physics term is a residual.
    pub fn pde_name(&self) -> Option<&'static str> {
        match (self.kind.is_physics(), self.physics) {
            (true, PhysicsTerm::Residual(p)) => Some(p.name()),
            _ => None,
        }
    }

    pub fn topology(&self) -> Topology {
        self.kind.topology()
    }

    /// Circuit shape this configuration runs on.
    pub fn circuit(&self, n_qubits: usize, layers: usize) -> Result<CircuitSpec> {
        CircuitSpec::new(n_qubits, layers, self.topology())
    }

    pub fn target(&self, n: usize) -> Result<Vec<f64>> {
        match &self.target_profile {
            None => Ok(sine_target(n)),
            Some(t) if t.len() == n => Ok(t.clone()),
            Some(t) => Err(Error::Config(format!(
                "target profile has {} values for {n} qubits",
                t.len()
            ))),
        }
    }

    /// Checks topology pairing and grid size against `spec`.
    pub fn validate(&self, spec: &CircuitSpec, disc: &Discretization) -> Result<()> {
        if spec.topology() != self.topology() {
            return Err(Error::Config(format!(
                "{} loss runs on {} entanglers, circuit uses {}",
                self.name(),
                self.topology().name(),
                spec.topology().name()
            )));
        }
        if disc.n_points() != spec.n_qubits() {
            return Err(Error::Config(format!(
                "grid has {} points for {} qubits",
                disc.n_points(),
                spec.n_qubits()
            )));
        }
        if !(self.physics_weight >= 0.0) || !self.physics_weight.is_finite() {
            return Err(Error::Config(format!(
                "physics weight {} must be a finite nonnegative number",
                self.physics_weight
            )));
        }
        Ok(())
    }

    /// Loss of a physics configuration as a function of the output vector.
    pub fn loss_from_outputs(&self, f: &[f64], disc: &Discretization) -> Result<f64> {
        if !self.kind.is_physics() {
            return Err(Error::Config(format!(
                "{} loss is not a function of single-qubit outputs",
                self.name()
            )));
        }
        let data = data_loss(f, &self.target(f.len())?)?;
        let phys = match &self.physics {
            PhysicsTerm::GradientPenalty => physics_loss_gradient_penalty(f, disc)?,
            PhysicsTerm::Residual(pde) => pde_loss(f, pde, disc)?,
        };
        Ok(data + self.physics_weight * phys)
    }

    /// Analytic `∂L/∂f` for a physics configuration.
    pub fn output_gradient(&self, f: &[f64], disc: &Discretization) -> Result<Vec<f64>> {
        if !self.kind.is_physics() {
            return Err(Error::Config(format!(
                "{} loss is not a function of single-qubit outputs",
                self.name()
            )));
        }
        disc.check(f)?;
        let n = f.len();
        let scale = 2.0 / n as f64;
        let dx = disc.dx;
        let target = self.target(n)?;

        // Every physics term is mean(R²), so its gradient is (2/n) Jᵀ R.
        let phys: Vec<f64> = match &self.physics {
            PhysicsTerm::GradientPenalty => d1_adjoint(&d1(f, dx), dx),
            PhysicsTerm::Residual(pde) => {
                let r = pde_residual(f, pde, disc)?;
                match *pde {
                    PdeKind::Heat { kappa } => d2(&r, dx).into_iter().map(|v| kappa * v).collect(),
                    PdeKind::Burgers { nu } => {
                        // ∂R_k/∂f_m = δ_km d1_k + f_k D1_km - ν D2_km
                        let g = d1(f, dx);
                        let fr: Vec<f64> = f.iter().zip(&r).map(|(a, b)| a * b).collect();
                        let a = d1_adjoint(&fr, dx);
                        let b = d2(&r, dx);
                        (0..n).map(|m| r[m] * g[m] + a[m] - nu * b[m]).collect()
                    }
                    PdeKind::SaintVenant {
                        manning_n,
                        friction_slope,
                        epsilon_floor,
                    } => {
                        let (area, _) =
                            manning_discharge(f, manning_n, friction_slope, epsilon_floor)?;
                        let coeff = friction_slope.sqrt() / manning_n;
                        let back = d1_adjoint(&r, dx);
                        // dQ/df = coeff * (5/3) A^{2/3} * dA/df, dA/df = 1/2
                        (0..n)
                            .map(|m| back[m] * coeff * (5.0 / 6.0) * area[m].powf(2.0 / 3.0))
                            .collect()
                    }
                }
            }
        };
        Ok((0..n)
            .map(|m| scale * ((f[m] - target[m]) + self.physics_weight * phys[m]))
            .collect())
    }
}

/// Loss of `config` at `params`.
pub fn total_loss(
    config: &LossConfig,
    spec: &CircuitSpec,
    params: &[f64],
    disc: &Discretization,
) -> Result<f64> {
    config.validate(spec, disc)?;
    let state = run_circuit(spec, params)?;
    loss_of_state(config, &state, disc)
}

pub(crate) fn loss_of_state(
    config: &LossConfig,
    state: &StateVector,
    disc: &Discretization,
) -> Result<f64> {
    match config.kind {
        LossKind::GlobalCost => {
            let all: Vec<usize> = (0..state.n_qubits()).collect();
            state.expect_z_string(&all)
        }
        LossKind::LocalCost => state.expect_z(0),
        LossKind::PdeConstrained | LossKind::PdeStructured => {
            config.loss_from_outputs(&output_vector(state), disc)
        }
    }
}
