//! Exact statevector simulation with Pauli-Z measurements.
//!
//! Gates act in place on the full amplitude array; no gate matrices are
//! tensored up. Qubit `k` is bit `k` of the basis index.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MIN_QUBITS: usize = 2;
pub const MAX_QUBITS: usize = 12;

/// Tolerance used when validating Hermiticity of a density matrix.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues below this are treated as exactly zero in the entropy sum.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Normalised amplitudes of an `n`-qubit pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

fn check_qubit_count(n_qubits: usize) -> Result<()> {
    if !(MIN_QUBITS..=MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::Config(format!(
            "qubit count {n_qubits} outside {MIN_QUBITS}..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes. The caller is responsible for normalisation;
    /// only the length is checked.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        if amps.len() != 1 << n_qubits {
            return Err(Error::Argument(format!(
                "expected {} amplitudes, got {}",
                1usize << n_qubits,
                amps.len()
            )));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::Index {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Applies a 2x2 matrix `[[m00, m01], [m10, m11]]` to `qubit`.
    fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let mask = 1usize << qubit;
        for i in 0..self.amps.len() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let (a0, a1) = (self.amps[i], self.amps[j]);
            self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    /// `RY(θ) = [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]`.
    pub fn apply_ry(&mut self, qubit: usize, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let (s, c) = (angle / 2.0).sin_cos();
        let mask = 1usize << qubit;
        // Real matrix, so skip the complex multiply.
        for i in 0..self.amps.len() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let (a0, a1) = (self.amps[i], self.amps[j]);
            self.amps[i] = a0 * c - a1 * s;
            self.amps[j] = a0 * s + a1 * c;
        }
        Ok(())
    }

    /// `RZ(θ) = diag(e^{-iθ/2}, e^{iθ/2})`.
    pub fn apply_rz(&mut self, qubit: usize, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let zero = Complex64::new(0.0, 0.0);
        let phase = Complex64::from_polar(1.0, angle / 2.0);
        self.apply_single(qubit, [[phase.conj(), zero], [zero, phase]]);
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Argument(format!(
                "CNOT control and target are both qubit {control}"
            )));
        }
        let cmask = 1usize << control;
        let tmask = 1usize << target;
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    /// `<σ_Z>` on one qubit.
    pub fn expect_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = 1usize << qubit;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(b, a)| if b & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    /// `<σ_Z ⊗ ... ⊗ σ_Z>` over `qubits` (parity expectation).
    pub fn expect_z_string(&self, qubits: &[usize]) -> Result<f64> {
        if qubits.is_empty() {
            return Err(Error::Argument("empty Pauli-Z string".into()));
        }
        let mut mask = 0usize;
        for &q in qubits {
            self.check_qubit(q)?;
            mask |= 1 << q;
        }
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(b, a)| {
                if (b & mask).count_ones() % 2 == 0 {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum())
    }

    /// All single-qubit `<σ_Z>` values in one pass over the amplitudes.
    pub fn expect_z_all(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_qubits];
        for (b, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (k, o) in out.iter_mut().enumerate() {
                if b >> k & 1 == 0 {
                    *o += p;
                } else {
                    *o -= p;
                }
            }
        }
        out
    }

    /// Partial trace over every qubit not in `keep`.
    ///
    /// Bit `i` of the reduced basis index corresponds to qubit `keep[i]`.
    pub fn reduced_density_matrix(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() || keep.len() >= self.n_qubits {
            return Err(Error::Argument(format!(
                "kept subsystem must be a proper nonempty subset of {} qubits, got {} qubits",
                self.n_qubits,
                keep.len()
            )));
        }
        let mut keep_mask = 0usize;
        for &q in keep {
            self.check_qubit(q)?;
            if keep_mask & (1 << q) != 0 {
                return Err(Error::Argument(format!("qubit {q} listed twice")));
            }
            keep_mask |= 1 << q;
        }
        let traced: Vec<usize> = (0..self.n_qubits)
            .filter(|q| keep_mask & (1 << q) == 0)
            .collect();

        let dk = 1usize << keep.len();
        let dt = 1usize << traced.len();
        // psi reshaped as (kept index) x (traced index)
        let mut psi = DMatrix::<Complex64>::zeros(dk, dt);
        for (b, &amp) in self.amps.iter().enumerate() {
            let row = gather_bits(b, keep);
            let col = gather_bits(b, &traced);
            psi[(row, col)] = amp;
        }
        let rho = &psi * psi.adjoint();
        Ok(DensityMatrix { entries: rho })
    }
}

/// Packs the bits of `index` at positions `qubits` into a compact integer.
fn gather_bits(index: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &q)| acc | ((index >> q & 1) << i))
}

/// A square complex matrix expected to be a valid density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::Argument(format!(
                "density matrix must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { entries })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let v: Vec<Complex64> = diag.iter().map(|&d| Complex64::new(d, 0.0)).collect();
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(v)))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.entries[(i, j)] - self.entries[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Real eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let defect = self.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::Numeric(format!(
                "matrix is not Hermitian (defect {defect:e})"
            )));
        }
        let mut ev: Vec<f64> = self
            .entries
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// Von Neumann entropy `-Σ λ log2 λ` in bits.
    pub fn von_neumann_entropy(&self) -> Result<f64> {
        let s: f64 = self
            .eigenvalues()?
            .into_iter()
            .map(|l| l.clamp(0.0, 1.0))
            .filter(|&l| l >= EIGEN_FLOOR)
            .map(|l| -l * l.log2())
            .sum();
        // -0.0 for pure states
        Ok(s.max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell() -> StateVector {
        let mut s = StateVector::zero(2).unwrap();
        s.apply_ry(0, PI / 2.0).unwrap();
        s.apply_cnot(0, 1).unwrap();
        s
    }

    #[test]
    fn init_zero_shapes() {
        let s = StateVector::zero(2).unwrap();
        assert_eq!(s.amplitudes(), &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        let s = StateVector::zero(4).unwrap();
        assert_eq!(s.amplitudes().len(), 16);
        assert_eq!(s.amplitudes()[0], c(1.0, 0.0));
        for n in 2..=12 {
            assert_eq!(StateVector::zero(n).unwrap().norm_sqr(), 1.0);
        }
    }

    #[test]
    fn init_zero_rejects_out_of_range() {
        assert!(matches!(StateVector::zero(1), Err(Error::Config(_))));
        assert!(matches!(StateVector::zero(13), Err(Error::Config(_))));
    }

    #[test]
    fn ry_examples() {
        let mut s = StateVector::zero(2).unwrap();
        s.apply_ry(0, PI).unwrap();
        assert!((s.amplitudes()[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(s.amplitudes()[0].norm() < 1e-15);

        let mut s = StateVector::zero(2).unwrap();
        s.apply_ry(0, 0.0).unwrap();
        assert_eq!(s, StateVector::zero(2).unwrap());

        let mut s = StateVector::zero(2).unwrap();
        s.apply_ry(0, PI / 2.0).unwrap();
        assert!((s.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn rz_examples() {
        let mut s = StateVector::zero(2).unwrap();
        s.apply_rz(0, 0.7).unwrap();
        assert!((s.expect_z(0).unwrap() - 1.0).abs() < 1e-15);

        let mut s = StateVector::zero(3).unwrap();
        s.apply_rz(2, 0.0).unwrap();
        assert_eq!(s, StateVector::zero(3).unwrap());

        // (|0> + |1>)/√2 -> (|0> - |1>)/√2 up to the global phase -i.
        let mut s = StateVector::zero(2).unwrap();
        s.apply_ry(0, PI / 2.0).unwrap();
        s.apply_rz(0, PI).unwrap();
        let a = s.amplitudes();
        let ratio = a[1] / a[0];
        assert!((ratio - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn cnot_examples() {
        // |10> in the "qubit 0 is the left label" reading: qubit 0 set.
        let mut s = StateVector::zero(2).unwrap();
        s.apply_ry(0, PI).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert!((s.amplitudes()[0b11] - c(1.0, 0.0)).norm() < 1e-15);

        let mut s = StateVector::zero(2).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s, StateVector::zero(2).unwrap());

        let mut s = StateVector::zero(3).unwrap();
        s.apply_ry(0, 1.1).unwrap();
        s.apply_ry(2, 0.4).unwrap();
        let before = s.clone();
        s.apply_cnot(0, 2).unwrap();
        s.apply_cnot(0, 2).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn gate_errors() {
        let mut s = StateVector::zero(3).unwrap();
        assert!(matches!(s.apply_ry(3, 0.1), Err(Error::Index { index: 3, n_qubits: 3 })));
        assert!(matches!(s.apply_rz(5, 0.1), Err(Error::Index { .. })));
        assert!(matches!(s.apply_cnot(1, 1), Err(Error::Argument(_))));
        assert!(matches!(s.apply_cnot(0, 3), Err(Error::Index { .. })));
        assert!(matches!(s.expect_z(3), Err(Error::Index { .. })));
        assert!(matches!(s.expect_z_string(&[]), Err(Error::Argument(_))));
    }

    #[test]
    fn expectation_examples() {
        let s = StateVector::zero(3).unwrap();
        assert_eq!(s.expect_z(1).unwrap(), 1.0);
        assert_eq!(s.expect_z_string(&[0, 1, 2]).unwrap(), 1.0);

        let mut s = StateVector::zero(2).unwrap();
        s.apply_ry(0, PI / 2.0).unwrap();
        assert!(s.expect_z(0).unwrap().abs() < 1e-15);

        let mut s = StateVector::zero(2).unwrap();
        s.apply_ry(0, PI).unwrap();
        assert!((s.expect_z_string(&[0, 1]).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn expect_z_all_matches_single() {
        let mut s = StateVector::zero(4).unwrap();
        for q in 0..4 {
            s.apply_ry(q, 0.3 + q as f64).unwrap();
        }
        s.apply_cnot(0, 3).unwrap();
        let all = s.expect_z_all();
        for q in 0..4 {
            assert!((all[q] - s.expect_z(q).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn reduced_density_examples() {
        let rho = StateVector::zero(2).unwrap().reduced_density_matrix(&[0]).unwrap();
        assert_eq!(rho.dim(), 2);
        assert!((rho.entries()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(rho.entries()[(1, 1)].norm() < 1e-15);

        let rho = bell().reduced_density_matrix(&[0]).unwrap();
        assert!((rho.entries()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((rho.entries()[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!(rho.entries()[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn reduced_density_errors() {
        let s = StateVector::zero(3).unwrap();
        assert!(matches!(s.reduced_density_matrix(&[]), Err(Error::Argument(_))));
        assert!(matches!(s.reduced_density_matrix(&[0, 1, 2]), Err(Error::Argument(_))));
        assert!(matches!(s.reduced_density_matrix(&[1, 1]), Err(Error::Argument(_))));
        assert!(matches!(s.reduced_density_matrix(&[4]), Err(Error::Index { .. })));
    }

    #[test]
    fn entropy_examples() {
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert_eq!(pure.von_neumann_entropy().unwrap(), 0.0);
        let mixed = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
        assert!((mixed.von_neumann_entropy().unwrap() - 1.0).abs() < 1e-12);
        let mixed4 = DensityMatrix::from_diagonal(&[0.25; 4]).unwrap();
        assert!((mixed4.von_neumann_entropy().unwrap() - 2.0).abs() < 1e-12);

        let s = bell().reduced_density_matrix(&[1]).unwrap();
        assert!((s.von_neumann_entropy().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn entropy_rejects_non_hermitian() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 0)] = c(0.5, 0.0);
        m[(1, 1)] = c(0.5, 0.0);
        m[(0, 1)] = c(0.1, 0.0);
        let rho = DensityMatrix::new(m).unwrap();
        assert!(matches!(rho.von_neumann_entropy(), Err(Error::Numeric(_))));
    }
}
