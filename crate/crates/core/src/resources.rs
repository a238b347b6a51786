//! Fermionic non-Gaussianity and superselected entanglement of the dimer, in bits.

use crate::dimer::{local_rdm, N_MODES};
use crate::error::{Error, Result};
use crate::linalg::{entropy_bits, hermitian_eigenvalues};
use crate::pauli::annihilation_operator;
use crate::state::{QuantumState, PSD_TOL};
use crate::CMatrix;

/// Slack allowed outside `[0, 1]` for one-body eigenvalues.
pub const OCCUPATION_TOL: f64 = 1e-12;

/// One-body density matrix `γ_ij = ⟨c_j† c_i⟩` over a subset of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct OneBodyDm {
    pub modes: Vec<usize>,
    pub gamma: CMatrix,
}

impl OneBodyDm {
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.gamma)
    }

    pub fn occupations(&self) -> Vec<f64> {
        (0..self.modes.len()).map(|k| self.gamma[(k, k)].re).collect()
    }
}

fn check_modes(modes: &[usize], n: usize) -> Result<()> {
    if modes.is_empty() {
        return Err(Error::InvalidParameter("empty mode list".into()));
    }
    if let Some(&bad) = modes.iter().find(|&&m| m >= n) {
        return Err(Error::IndexOutOfRange { index: bad, max: n - 1 });
    }
    if modes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!("modes {modes:?} must be strictly ascending")));
    }
    Ok(())
}

pub fn one_body_dm(rho: &QuantumState, modes: &[usize]) -> Result<OneBodyDm> {
    let n = rho.n_qubits();
    check_modes(modes, n)?;
    let ops: Vec<CMatrix> = modes.iter().map(|&m| annihilation_operator(m, n)).collect::<Result<_>>()?;
    let k = modes.len();
    let mut gamma = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let op = ops[j].adjoint() * &ops[i];
            gamma[(i, j)] = (rho.matrix() * op).trace();
        }
    }
    let gamma = (&gamma + gamma.adjoint()).scale(0.5);
    let eig = hermitian_eigenvalues(&gamma);
    if eig[0] < -OCCUPATION_TOL || eig[k - 1] > 1.0 + OCCUPATION_TOL {
        return Err(Error::Numerical(format!("one-body spectrum {eig:?} leaves [0, 1]")));
    }
    Ok(OneBodyDm { modes: modes.to_vec(), gamma })
}

/// `−Σ λ log₂ λ` of a Hermitian matrix with nonnegative spectrum.
pub fn von_neumann_entropy(m: &CMatrix) -> Result<f64> {
    let eig = hermitian_eigenvalues(m);
    if let Some(&min) = eig.first() {
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
    }
    Ok(entropy_bits(&eig))
}

pub fn state_entropy(rho: &QuantumState) -> f64 {
    entropy_bits(&rho.eigenvalues())
}

/// `s(γ) + s(1 − γ) − s(ρ)` for `ρ` reduced to `modes`.
///
/// The reduction is the qubit partial trace, which equals the fermionic one for
/// parity-symmetric states or when `modes` is a Jordan–Wigner prefix.
pub fn non_gaussianity(rho: &QuantumState, modes: &[usize]) -> Result<f64> {
    check_modes(modes, rho.n_qubits())?;
    let reduced = if modes.len() == rho.n_qubits() { rho.clone() } else { rho.partial_trace(modes)? };
    let all: Vec<usize> = (0..modes.len()).collect();
    let gamma = one_body_dm(&reduced, &all)?;
    let holes = CMatrix::identity(all.len(), all.len()) - &gamma.gamma;
    Ok(von_neumann_entropy(&gamma.gamma)? + von_neumann_entropy(&holes)? - state_entropy(&reduced))
}

/// Full-dimer non-Gaussianity divided by the two sites.
pub fn non_gaussianity_per_site(rho: &QuantumState) -> Result<f64> {
    let modes: Vec<usize> = (0..N_MODES).collect();
    Ok(non_gaussianity(rho, &modes)? / 2.0)
}

/// Non-Gaussianity of the site-1 reduced state.
pub fn local_non_gaussianity(rho: &QuantumState) -> Result<f64> {
    let rdm = local_rdm(rho)?;
    non_gaussianity(&rdm, &[0, 1])
}

/// Particle-number superselected entanglement `1 − 2⟨d⟩` of the pure ground state.
pub fn nssr_entanglement(double_occupancy: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&double_occupancy) {
        return Err(Error::InvalidParameter(format!("double occupancy {double_occupancy} outside [0, 1/2]")));
    }
    Ok(1.0 - 2.0 * double_occupancy)
}

/// Parity superselected entanglement of the pure ground state.
pub fn pssr_entanglement() -> f64 {
    1.0
}

/// Entropy of the site-1 reduced state of a pure dimer state.
pub fn intersite_entanglement(psi: &QuantumState) -> Result<f64> {
    if !psi.is_pure() {
        return Err(Error::MixedStateEntanglement { purity: psi.purity() });
    }
    Ok(state_entropy(&local_rdm(psi)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimer::{analytic_eigensystem, double_occupancy, ground_state, thermal_state, DimerParams, SECTOR};
    use crate::linalg::{c, real};
    use crate::CVector;
    use proptest::prelude::*;

    fn gs(u: f64) -> QuantumState {
        ground_state(&DimerParams::new(1.0, u).unwrap())
    }

    #[test]
    fn one_body_examples() {
        let g = one_body_dm(&gs(2.5), &[0, 1, 2, 3]).unwrap();
        for occ in g.occupations() {
            assert!((occ - 0.5).abs() < 1e-14);
        }
        let free = one_body_dm(&gs(0.0), &[0, 1, 2, 3]).unwrap().eigenvalues();
        for (got, want) in free.iter().zip([0.0, 0.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let site = one_body_dm(&gs(2.5), &[0, 1]).unwrap();
        assert_eq!(site.gamma.shape(), (2, 2));
        assert!(site.gamma[(0, 1)].norm() < 1e-14);
        assert!(one_body_dm(&gs(1.0), &[4]).is_err());
        assert!(one_body_dm(&gs(1.0), &[1, 0]).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert!(von_neumann_entropy(gs(3.0).matrix()).unwrap().abs() < 1e-10);
        assert!((von_neumann_entropy(QuantumState::maximally_mixed(2).matrix()).unwrap() - 2.0).abs() < 1e-14);
        let half = CMatrix::from_diagonal(&CVector::from_vec(vec![real(0.5), real(0.5)]));
        assert!((von_neumann_entropy(&half).unwrap() - 1.0).abs() < 1e-14);
        let bad = CMatrix::from_diagonal(&CVector::from_vec(vec![real(1.5), real(-0.5)]));
        assert!(von_neumann_entropy(&bad).is_err());
    }

    #[test]
    fn non_gaussianity_limits() {
        assert!(non_gaussianity_per_site(&gs(0.0)).unwrap().abs() < 1e-10);
        assert!(local_non_gaussianity(&gs(0.0)).unwrap().abs() < 1e-10);
        assert!((local_non_gaussianity(&gs(1e3)).unwrap() - 1.0).abs() < 0.01);
        assert!((non_gaussianity_per_site(&gs(1e3)).unwrap() - 2.0).abs() < 0.01);
    }

    #[test]
    fn non_gaussianity_grows_with_u() {
        let us: Vec<f64> = (0..=100).map(|k| 0.5 * k as f64).collect();
        let full: Vec<f64> = us.iter().map(|&u| non_gaussianity_per_site(&gs(u)).unwrap()).collect();
        let local: Vec<f64> = us.iter().map(|&u| local_non_gaussianity(&gs(u)).unwrap()).collect();
        assert!(full.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(local.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn local_non_gaussianity_closed_form() {
        for u in [0.3, 2.0, 8.0, 40.0] {
            let psi = gs(u);
            let rdm = local_rdm(&psi).unwrap();
            let want = 2.0 - state_entropy(&rdm);
            assert!((local_non_gaussianity(&psi).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ssr_examples() {
        assert_eq!(nssr_entanglement(0.25).unwrap(), 0.5);
        assert_eq!(nssr_entanglement(0.0).unwrap(), 1.0);
        assert_eq!(nssr_entanglement(0.5).unwrap(), 0.0);
        assert!(nssr_entanglement(0.6).is_err());
        assert_eq!(pssr_entanglement(), 1.0);
    }

    #[test]
    fn intersite_examples() {
        assert!((intersite_entanglement(&gs(0.0)).unwrap() - 2.0).abs() < 1e-12);
        assert!((intersite_entanglement(&gs(1e6)).unwrap() - 1.0).abs() < 1e-6);
        let eig = analytic_eigensystem(&DimerParams::new(1.0, 1.0).unwrap());
        let d = QuantumState::from_ket(&eig.doublon).unwrap();
        assert!((intersite_entanglement(&d).unwrap() - 1.0).abs() < 1e-12);
        let hot = thermal_state(&DimerParams::new(1.0, 1.0).unwrap().with_temperature(1.0).unwrap()).unwrap();
        assert!(matches!(intersite_entanglement(&hot), Err(Error::MixedStateEntanglement { .. })));
    }

    #[test]
    fn nssr_never_exceeds_entanglement() {
        for k in 0..80 {
            let u = 0.25 * k as f64;
            let psi = gs(u);
            let d = double_occupancy(&psi).unwrap();
            assert!(nssr_entanglement(d).unwrap() <= intersite_entanglement(&psi).unwrap() + 1e-12);
        }
    }

    fn sector_state(amps: &[(f64, f64)]) -> QuantumState {
        let mut v = CVector::zeros(16);
        for (idx, &(re, im)) in SECTOR.iter().zip(amps) {
            v[*idx] = c(re, im);
        }
        let norm = v.norm();
        QuantumState::from_ket(&(v / real(norm))).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn non_gaussianity_is_nonnegative_on_sector_states(
            amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
            w in 0.0f64..1.0,
        ) {
            prop_assume!(amps.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3);
            let pure = sector_state(&amps);
            prop_assert!(non_gaussianity(&pure, &[0, 1, 2, 3]).unwrap() >= -1e-10);
            let mixed = QuantumState::mixture(&[(w, &pure), (1.0 - w, &gs(1.0))]).unwrap();
            prop_assert!(non_gaussianity(&mixed, &[0, 1, 2, 3]).unwrap() >= -1e-10);
            prop_assert!(non_gaussianity(&mixed, &[0, 1]).unwrap() >= -1e-10);
        }
    }
}
