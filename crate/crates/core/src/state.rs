//! Dense density matrices and their on-disk representation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermiticity_error, max_abs, trace, trace_product_re};
use crate::{CMatrix, CVector, C64};

/// Hermiticity and trace tolerance for accepted states.
pub const STATE_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted as rounding noise.
pub const PSD_TOL: f64 = 1e-10;
/// Distance of `Tr ρ²` from one below which a state counts as pure.
pub const PURITY_TOL: f64 = 1e-10;

/// A validated density matrix on `n_qubits` qubits.
///
/// Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
/// computational basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    matrix: CMatrix,
    pure: bool,
}

impl QuantumState {
    /// Validates Hermiticity, unit trace and positivity before accepting `matrix`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: matrix.ncols() });
        }
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidState(format!("dimension {dim} is not a power of two")));
        }
        let herm = hermiticity_error(&matrix);
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = trace(&matrix);
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        // Drop the sub-tolerance anti-Hermitian part so downstream spectra are exact.
        let matrix = (&matrix + matrix.adjoint()).scale(0.5);
        let min_eig = hermitian_eigenvalues(&matrix)[0];
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        let purity = trace_product_re(&matrix, &matrix);
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            matrix,
            pure: (purity - 1.0).abs() < PURITY_TOL,
        })
    }

    /// Projector onto a normalised state vector.
    pub fn from_ket(ket: &CVector) -> Result<Self> {
        let norm = ket.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("state vector has norm {norm}")));
        }
        Self::new(ket * ket.adjoint())
    }

    /// Convex combination `Σ w_k ρ_k`; weights must be nonnegative and sum to one.
    pub fn mixture(terms: &[(f64, &QuantumState)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let dim = first.1.dim();
        let mut acc = CMatrix::zeros(dim, dim);
        for &(w, rho) in terms {
            if w < 0.0 || !w.is_finite() {
                return Err(Error::InvalidParameter(format!("mixture weight {w}")));
            }
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: rho.dim() });
            }
            acc += rho.matrix.scale(w);
        }
        Self::new(acc)
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let matrix = CMatrix::identity(dim, dim).scale(1.0 / dim as f64);
        Self { n_qubits, matrix, pure: n_qubits == 0 }
    }

    /// Computational basis projector `|index⟩⟨index|`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut matrix = CMatrix::zeros(dim, dim);
        matrix[(index, index)] = C64::new(1.0, 0.0);
        Self { n_qubits, matrix, pure: true }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_pure(&self) -> bool {
        self.pure
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        trace_product_re(&self.matrix, &self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Re Tr(ρ O).
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        trace_product_re(&self.matrix, op)
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &QuantumState) -> f64 {
        let diff = &self.matrix - &other.matrix;
        0.5 * hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum::<f64>()
    }

    /// Largest elementwise deviation between two states.
    pub fn max_abs_diff(&self, other: &QuantumState) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }

    /// Unitary conjugation `U ρ U†`.
    pub fn conjugate(&self, unitary: &CMatrix) -> Result<Self> {
        Self::new(unitary * &self.matrix * unitary.adjoint())
    }

    /// `ρ ⊗ σ` with `self` on the leading qubits.
    pub fn tensor(&self, other: &QuantumState) -> Result<Self> {
        Self::new(self.matrix.kronecker(&other.matrix))
    }

    /// Qubit partial trace keeping `keep` (ascending qubit indices).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let n = self.n_qubits;
        if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&q| q >= n) || keep.is_empty() {
            return Err(Error::InvalidParameter(format!("invalid qubit subset {keep:?} of {n}")));
        }
        let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let bit = |q: usize| 1usize << (n - 1 - q);
        let spread = |sub: usize, qubits: &[usize]| {
            qubits
                .iter()
                .enumerate()
                .filter(|&(k, _)| sub >> (qubits.len() - 1 - k) & 1 == 1)
                .fold(0usize, |acc, (_, &q)| acc | bit(q))
        };
        let kd = 1usize << keep.len();
        let td = 1usize << traced.len();
        let mut out = CMatrix::zeros(kd, kd);
        for r in 0..kd {
            let rf = spread(r, keep);
            for c in 0..kd {
                let cf = spread(c, keep);
                let mut acc = C64::new(0.0, 0.0);
                for e in 0..td {
                    let ef = spread(e, &traced);
                    acc += self.matrix[(rf | ef, cf | ef)];
                }
                out[(r, c)] = acc;
            }
        }
        Self::new(out)
    }

    pub fn to_file_format(&self) -> StateFile {
        let matrix = self.matrix.transpose().iter().map(|z| [z.re, z.im]).collect();
        StateFile { n_qubits: self.n_qubits, matrix }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file_format())?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: StateFile = serde_json::from_str(&text)?;
        file.into_state()
    }
}

/// On-disk state: `n_qubits` plus a row-major list of `[re, im]` entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub n_qubits: usize,
    pub matrix: Vec<[f64; 2]>,
}

impl StateFile {
    pub fn into_state(self) -> Result<QuantumState> {
        if self.n_qubits == 0 || self.n_qubits > 8 {
            return Err(Error::InvalidState(format!("n_qubits = {}", self.n_qubits)));
        }
        let dim = 1usize << self.n_qubits;
        if self.matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: self.matrix.len() });
        }
        let m = CMatrix::from_row_iterator(dim, dim, self.matrix.iter().map(|&[re, im]| C64::new(re, im)));
        QuantumState::new(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn rejects_non_hermitian_and_bad_trace() {
        let mut m = CMatrix::identity(2, 2).scale(0.5);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(QuantumState::new(m), Err(Error::InvalidState(_))));
        let m = CMatrix::identity(2, 2);
        assert!(QuantumState::new(m).is_err());
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.5, 0.0), c(-0.5, 0.0)]));
        assert!(QuantumState::new(m).is_err());
    }

    #[test]
    fn purity_flag() {
        assert!(QuantumState::basis(2, 3).is_pure());
        assert!(!QuantumState::maximally_mixed(2).is_pure());
        assert!((QuantumState::maximally_mixed(2).purity() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a = QuantumState::basis(1, 1);
        let b = QuantumState::maximally_mixed(1);
        let ab = a.tensor(&b).unwrap();
        assert!(ab.partial_trace(&[0]).unwrap().max_abs_diff(&a) < 1e-15);
        assert!(ab.partial_trace(&[1]).unwrap().max_abs_diff(&b) < 1e-15);
        assert!(ab.partial_trace(&[0, 2]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.json");
        let mut m = CMatrix::identity(2, 2).scale(0.5);
        m[(0, 1)] = c(0.25, -0.125);
        m[(1, 0)] = c(0.25, 0.125);
        let rho = QuantumState::new(m).unwrap();
        rho.save(&path).unwrap();
        let back = QuantumState::load(&path).unwrap();
        assert_eq!(back, rho);
        let text = std::fs::read_to_string(&path).unwrap();
        let file: StateFile = serde_json::from_str(&text).unwrap();
        // row-major: entry (0,1) is second
        assert_eq!(file.matrix[1], [0.25, -0.125]);
    }

    #[test]
    fn loader_validates() {
        let file = StateFile { n_qubits: 1, matrix: vec![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]] };
        assert!(file.into_state().is_err());
        let file = StateFile { n_qubits: 1, matrix: vec![[1.0, 0.0]] };
        assert!(matches!(file.into_state(), Err(Error::DimensionMismatch { .. })));
    }
}
