//! Independent oracles for the simulator, stencils and gradients.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use plateau_core::ansatz::{run_circuit, run_circuit_observed, CircuitSpec, Gate, Topology};
use plateau_core::gradients::{
    finite_difference_gradient, jacobian_outputs, loss_gradient, sample_parameters,
};
use plateau_core::losses::{
    centered_d1, centered_d2, data_loss, pde_loss, pde_residual, physics_loss_gradient_penalty,
    total_loss, Discretization, LossConfig, PdeKind, PhysicsTerm,
};
use plateau_core::sim::StateVector;
use proptest::prelude::*;

/// Random state from a random RY/RZ/CNOT circuit.
fn random_state(n: usize, seed: u64) -> StateVector {
    let spec = CircuitSpec::new(n, 3, Topology::AllToAll).unwrap();
    run_circuit(&spec, sample_parameters(&spec, seed, 0).as_slice()).unwrap()
}

fn brute_partial_trace(state: &StateVector, keep: &[usize]) -> Vec<Vec<Complex64>> {
    let n = state.n_qubits();
    let amps = state.amplitudes();
    let rest: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let dk = 1 << keep.len();
    let dr = 1 << rest.len();
    let compose = |a: usize, c: usize| {
        let mut idx = 0usize;
        for (i, &q) in keep.iter().enumerate() {
            if a & (1 << i) != 0 {
                idx |= 1 << q;
            }
        }
        for (i, &q) in rest.iter().enumerate() {
            if c & (1 << i) != 0 {
                idx |= 1 << q;
            }
        }
        idx
    };
    let mut rho = vec![vec![Complex64::new(0.0, 0.0); dk]; dk];
    for a in 0..dk {
        for b in 0..dk {
            for c in 0..dr {
                rho[a][b] += amps[compose(a, c)] * amps[compose(b, c)].conj();
            }
        }
    }
    rho
}

fn kron_gate(n: usize, qubit: usize, m: [[Complex64; 2]; 2]) -> DMatrix<Complex64> {
    let d = 1 << n;
    DMatrix::from_fn(d, d, |r, c| {
        if (r ^ c) & !(1 << qubit) != 0 {
            Complex64::new(0.0, 0.0)
        } else {
            m[(r >> qubit) & 1][(c >> qubit) & 1]
        }
    })
}

fn cnot_matrix(n: usize, control: usize, target: usize) -> DMatrix<Complex64> {
    let d = 1 << n;
    DMatrix::from_fn(d, d, |r, c| {
        let image = if c & (1 << control) != 0 { c ^ (1 << target) } else { c };
        if r == image {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Dense-unitary simulation of the ansatz.
fn dense_circuit(spec: &CircuitSpec, params: &[f64]) -> Vec<Complex64> {
    let n = spec.n_qubits();
    let z = Complex64::new(0.0, 0.0);
    let mut u = DMatrix::<Complex64>::identity(1 << n, 1 << n);
    for gate in spec.gates() {
        let g = match gate {
            Gate::Ry { qubit, param } => {
                let (s, c) = (params[param] / 2.0).sin_cos();
                kron_gate(
                    n,
                    qubit,
                    [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]],
                )
            }
            Gate::Rz { qubit, param } => {
                let ph = Complex64::from_polar(1.0, params[param] / 2.0);
                kron_gate(n, qubit, [[ph.conj(), z], [z, ph]])
            }
            Gate::Cnot { control, target } => cnot_matrix(n, control, target),
        };
        u = g * u;
    }
    u.column(0).iter().copied().collect()
}

#[test]
fn run_circuit_matches_dense_unitary() {
    for (n, l, topo) in [
        (2, 1, Topology::NearestNeighbor),
        (3, 2, Topology::AllToAll),
        (4, 2, Topology::NearestNeighbor),
        (4, 1, Topology::AllToAll),
    ] {
        let spec = CircuitSpec::new(n, l, topo).unwrap();
        for i in 0..5 {
            let p = sample_parameters(&spec, 77, i);
            let fast = run_circuit(&spec, p.as_slice()).unwrap();
            let dense = dense_circuit(&spec, p.as_slice());
            for (a, b) in fast.amplitudes().iter().zip(&dense) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }
    // The hand-traced three-gate example.
    let spec = CircuitSpec::new(2, 1, Topology::NearestNeighbor).unwrap();
    let dense = dense_circuit(&spec, &[PI, 0.0, 0.0, 0.0]);
    assert!((dense[0b11].norm() - 1.0).abs() < 1e-12);
}

#[test]
fn partial_trace_matches_brute_force() {
    for n in 2..=6 {
        for seed in 0..4 {
            let s = random_state(n, seed);
            let keeps: Vec<Vec<usize>> = vec![
                vec![0],
                (0..n / 2).collect(),
                vec![n - 1],
                (0..n).filter(|q| q % 2 == 1).collect(),
            ];
            for keep in keeps {
                let rho = s.reduced_density_matrix(&keep).unwrap();
                let oracle = brute_partial_trace(&s, &keep);
                for (a, row) in oracle.iter().enumerate() {
                    for (b, v) in row.iter().enumerate() {
                        assert!((rho.entries()[(a, b)] - v).norm() < 1e-12);
                    }
                }
                assert!((rho.trace().re - 1.0).abs() < 1e-10);
                assert!(rho.hermitian_defect() < 1e-10);
                assert!(rho.eigenvalues().unwrap().iter().all(|&l| l > -1e-9));
            }
        }
    }
}

#[test]
fn ry_expectation_is_cosine() {
    for i in 0..100 {
        let theta = TAU * i as f64 / 100.0;
        let mut s = StateVector::zero(3).unwrap();
        s.apply_ry(1, theta).unwrap();
        assert!((s.expect_z(1).unwrap() - theta.cos()).abs() < 1e-12);
    }
}

#[test]
fn gate_tally_matches_closed_form() {
    for n in [4, 6, 8] {
        for l in 1..=5 {
            for topo in [Topology::NearestNeighbor, Topology::AllToAll] {
                let spec = CircuitSpec::new(n, l, topo).unwrap();
                let mut tally = 0;
                run_circuit_observed(&spec, &vec![0.1; spec.param_count()], |_| tally += 1).unwrap();
                assert_eq!(tally, spec.gate_count());
            }
        }
    }
}

#[test]
fn perturbation_reaches_only_its_layer_onward() {
    let (n, layers) = (3, 3);
    let full = CircuitSpec::new(n, layers, Topology::NearestNeighbor).unwrap();
    let base = sample_parameters(&full, 4, 0).0;
    for j in 0..full.param_count() {
        let owner = j / (2 * n);
        let mut bumped = base.clone();
        bumped[j] += 0.3;
        for prefix in 1..=layers {
            let spec = CircuitSpec::new(n, prefix, Topology::NearestNeighbor).unwrap();
            let m = spec.param_count();
            let a = run_circuit(&spec, &base[..m]).unwrap();
            let b = run_circuit(&spec, &bumped[..m]).unwrap();
            let moved = a
                .amplitudes()
                .iter()
                .zip(b.amplitudes())
                .any(|(x, y)| (x - y).norm() > 1e-12);
            assert_eq!(moved, prefix > owner, "param {j}, prefix {prefix}");
        }
    }
}

#[test]
fn run_circuit_is_bitwise_deterministic() {
    let spec = CircuitSpec::new(6, 4, Topology::AllToAll).unwrap();
    let p = sample_parameters(&spec, 123, 9);
    assert_eq!(
        run_circuit(&spec, p.as_slice()).unwrap(),
        run_circuit(&spec, p.as_slice()).unwrap()
    );
}

fn brute_d1(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = Vec::new();
    for k in 0..n {
        let right = if k == n - 1 { f[0] } else { f[k + 1] };
        let left = if k == 0 { f[n - 1] } else { f[k - 1] };
        out.push((right - left) / (2.0 * dx));
    }
    out
}

fn brute_d2(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = Vec::new();
    for k in 0..n {
        let right = if k == n - 1 { f[0] } else { f[k + 1] };
        let left = if k == 0 { f[n - 1] } else { f[k - 1] };
        out.push((right - 2.0 * f[k] + left) / (dx * dx));
    }
    out
}

#[test]
fn d1_of_sine_profile() {
    let n = 8;
    let d = Discretization::new(n).unwrap();
    let f: Vec<f64> = (0..n).map(|k| (TAU * k as f64 / n as f64).sin()).collect();
    let got = centered_d1(&f, &d).unwrap();
    let brute = brute_d1(&f, d.dx());
    for k in 0..n {
        // exact for the stencil: n sin(2π/n) cos(2πk/n) = 2π cos(2πk/n) sinc(2π/n)
        let analytic = n as f64 * (TAU / n as f64).sin() * (TAU * k as f64 / n as f64).cos();
        assert!((got[k] - brute[k]).abs() < 1e-12);
        assert!((got[k] - analytic).abs() < 1e-12);
    }
}

#[test]
fn d2_of_linear_index_profile() {
    let n = 7;
    let d = Discretization::new(n).unwrap();
    let f: Vec<f64> = (0..n).map(|k| k as f64).collect();
    let got = centered_d2(&f, &d).unwrap();
    let brute = brute_d2(&f, d.dx());
    for k in 0..n {
        assert!((got[k] - brute[k]).abs() < 1e-9);
    }
    // the wraparound jump is the only curvature
    let jump = n as f64 / (d.dx() * d.dx());
    assert!((got[0] - jump).abs() < 1e-9);
    assert!((got[n - 1] + jump).abs() < 1e-9);
    assert!(got[1..n - 1].iter().all(|v| v.abs() < 1e-9));
}

proptest! {
    #[test]
    fn norm_preserved_by_any_gate_sequence(
        n in 2usize..=6,
        ops in prop::collection::vec((0u8..3, 0usize..6, 0usize..6, -10.0f64..10.0), 1..60),
    ) {
        let mut s = StateVector::zero(n).unwrap();
        for (kind, a, b, angle) in ops {
            let (a, b) = (a % n, b % n);
            match kind {
                0 => s.apply_ry(a, angle).unwrap(),
                1 => s.apply_rz(a, angle).unwrap(),
                _ if a != b => s.apply_cnot(a, b).unwrap(),
                _ => {}
            }
        }
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn singleton_string_equals_expect_z(n in 2usize..=6, seed in 0u64..1000, q in 0usize..6) {
        let s = random_state(n, seed);
        let q = q % n;
        prop_assert!((s.expect_z_string(&[q]).unwrap() - s.expect_z(q).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn entropy_symmetric_and_bounded(n in 2usize..=7, seed in 0u64..1000, cut in 1usize..7) {
        let s = random_state(n, seed);
        let cut = 1 + cut % (n - 1);
        let keep: Vec<usize> = (0..cut).collect();
        let rest: Vec<usize> = (cut..n).collect();
        let sa = s.reduced_density_matrix(&keep).unwrap().von_neumann_entropy().unwrap();
        let sb = s.reduced_density_matrix(&rest).unwrap().von_neumann_entropy().unwrap();
        prop_assert!((sa - sb).abs() < 1e-9);
        prop_assert!(sa >= 0.0);
        prop_assert!(sa <= cut.min(n - cut) as f64 + 1e-9);
    }

    #[test]
    fn losses_match_brute_summation(f in prop::collection::vec(-1.0f64..1.0, 3..10), seed in 0u64..100) {
        let n = f.len();
        let d = Discretization::new(n).unwrap();
        let target: Vec<f64> = (0..n).map(|k| ((seed + k as u64) as f64 * 0.37).sin()).collect();

        let mut mse = 0.0;
        for k in 0..n {
            mse += (f[k] - target[k]) * (f[k] - target[k]);
        }
        mse /= n as f64;
        prop_assert!((data_loss(&f, &target).unwrap() - mse).abs() < 1e-12);

        let g = brute_d1(&f, d.dx());
        let pen = g.iter().map(|v| v * v).sum::<f64>() / n as f64;
        prop_assert!((physics_loss_gradient_penalty(&f, &d).unwrap() - pen).abs() < 1e-12 * pen.max(1.0));

        let h = brute_d2(&f, d.dx());
        let heat = 0.01f64.powi(2) * h.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let got = pde_loss(&f, &PdeKind::heat(), &d).unwrap();
        prop_assert!((got - heat).abs() < 1e-12 * heat.max(1.0));

        for pde in PdeKind::all() {
            prop_assert!(pde_loss(&f, &pde, &d).unwrap() >= 0.0);
        }
    }

    #[test]
    fn residual_stencil_is_local(
        f in prop::collection::vec(-1.0f64..1.0, 5..10),
        m in 0usize..10,
        bump in 0.05f64..0.5,
    ) {
        let n = f.len();
        let m = m % n;
        let d = Discretization::new(n).unwrap();
        let mut g = f.clone();
        g[m] += bump;
        for pde in PdeKind::all() {
            let r0 = pde_residual(&f, &pde, &d).unwrap();
            let r1 = pde_residual(&g, &pde, &d).unwrap();
            for k in 0..n {
                let near = k == m || k == (m + 1) % n || k == (m + n - 1) % n;
                if !near {
                    prop_assert_eq!(r0[k], r1[k]);
                }
            }
        }
    }

    #[test]
    fn linearity_of_d1(
        f in prop::collection::vec(-1.0f64..1.0, 6),
        g in prop::collection::vec(-1.0f64..1.0, 6),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let d = Discretization::new(6).unwrap();
        let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let lhs = centered_d1(&mix, &d).unwrap();
        let (df, dg) = (centered_d1(&f, &d).unwrap(), centered_d1(&g, &d).unwrap());
        for k in 0..6 {
            prop_assert!((lhs[k] - (a * df[k] + b * dg[k])).abs() < 1e-10);
        }
    }
}

fn all_configs() -> Vec<LossConfig> {
    let mut v = LossConfig::standard();
    for pde in PdeKind::all() {
        v.push(LossConfig::pde_constrained().with_physics(PhysicsTerm::Residual(pde)));
        v.push(LossConfig::pde_structured().with_physics(PhysicsTerm::Residual(pde)));
    }
    v
}

#[test]
fn jacobian_matches_finite_differences() {
    let spec = CircuitSpec::new(3, 2, Topology::AllToAll).unwrap();
    for i in 0..3 {
        let p = sample_parameters(&spec, 8, i);
        let jac = jacobian_outputs(&spec, p.as_slice()).unwrap();
        for k in 0..3 {
            let fd = finite_difference_gradient(
                |x| run_circuit(&spec, x)?.expect_z(k),
                p.as_slice(),
                1e-5,
            )
            .unwrap();
            for j in 0..spec.param_count() {
                assert!((jac[(k, j)] - fd.0[j]).abs() < 1e-8);
            }
        }
        // Layer-1 RZ columns carry signal under RY-then-RZ ordering.
        let rz0 = (3..6).map(|j| (0..3).map(|k| jac[(k, j)].abs()).sum::<f64>()).sum::<f64>();
        assert!(rz0 > 1e-6);
    }
}

#[test]
fn chain_rule_gradient_matches_finite_differences_n3() {
    // Odd grid size exercises the stencil adjoints without the n = 2/4
    // symmetries used in the acceptance sweep.
    let d = Discretization::new(3).unwrap();
    for cfg in all_configs() {
        let spec = cfg.circuit(3, 2).unwrap();
        for i in 0..3 {
            let p = sample_parameters(&spec, 21, i);
            let exact = loss_gradient(&cfg, &spec, p.as_slice(), &d).unwrap();
            let fd = finite_difference_gradient(|x| total_loss(&cfg, &spec, x, &d), p.as_slice(), 1e-5)
                .unwrap();
            for j in 0..spec.param_count() {
                assert!(
                    (exact.0[j] - fd.0[j]).abs() < 1e-6,
                    "{} {:?} param {j}: {} vs {}",
                    cfg.name(),
                    cfg.pde_name(),
                    exact.0[j],
                    fd.0[j]
                );
            }
        }
    }
}

#[test]
fn variance_estimate_is_self_consistent() {
    // K = 400 estimate within 3 standard errors of the K = 25 estimate, where
    // the standard error of a per-parameter variance is σ²·sqrt(2/(K-1)).
    let cfg = LossConfig::global();
    let spec = cfg.circuit(4, 2).unwrap();
    let d = Discretization::new(4).unwrap();
    let small = plateau_core::gradients::gradient_variance(&cfg, &spec, &d, 25, 5).unwrap();
    let large = plateau_core::gradients::gradient_variance(&cfg, &spec, &d, 400, 5).unwrap();
    let se = large.mean_variance * (2.0 / 24.0f64).sqrt();
    assert!(
        (small.mean_variance - large.mean_variance).abs() < 3.0 * se,
        "{} vs {}",
        small.mean_variance,
        large.mean_variance
    );
}
