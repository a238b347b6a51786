//! Robustness of magic, its log-free form, stabilizer Rényi entropies and the
//! mixed-state 2-SRE. All entropic quantities are in bits.

use crate::error::{Error, Result};
use crate::l1::{L1Solution, L1Solver, SolverOptions, DEFAULT_TOLERANCE};
use crate::pauli::pauli_decompose;
use crate::stabilizer::AMatrix;
use crate::state::{QuantumState, PURITY_TOL};

/// Robustness plus the solver diagnostics behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessResult {
    pub robustness: f64,
    /// `log₂ R`, clamped to exactly 0 below the certificate tolerance.
    pub log_free: f64,
    pub iterations: usize,
    pub gap: f64,
}

/// Per-worker robustness evaluator: shares the catalog, owns a warm-startable LP.
#[derive(Debug, Clone)]
pub struct MagicContext<'a> {
    catalog: &'a AMatrix,
    solver: L1Solver<'a>,
}

impl<'a> MagicContext<'a> {
    pub fn new(catalog: &'a AMatrix) -> Self {
        Self::with_tolerance(catalog, DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(catalog: &'a AMatrix, tolerance: f64) -> Self {
        let options = SolverOptions { tolerance, ..SolverOptions::default() };
        Self { catalog, solver: L1Solver::with_options(catalog.matrix(), options) }
    }

    pub fn catalog(&self) -> &'a AMatrix {
        self.catalog
    }

    pub fn tolerance(&self) -> f64 {
        self.solver.options().tolerance
    }

    pub fn decomposition(&mut self, rho: &QuantumState) -> Result<L1Solution> {
        if rho.n_qubits() != self.catalog.n_qubits() {
            return Err(Error::DimensionMismatch { expected: self.catalog.n_qubits(), got: rho.n_qubits() });
        }
        let b = pauli_decompose(rho).into_coefficients();
        self.solver.solve(&b)
    }

    pub fn evaluate(&mut self, rho: &QuantumState) -> Result<RobustnessResult> {
        let sol = self.decomposition(rho)?;
        let tol = self.tolerance();
        Ok(RobustnessResult {
            robustness: sol.l1_norm,
            log_free: clamp_log_free(sol.l1_norm, tol),
            iterations: sol.iterations,
            gap: sol.gap,
        })
    }

    pub fn robustness(&mut self, rho: &QuantumState) -> Result<f64> {
        Ok(self.evaluate(rho)?.robustness)
    }

    pub fn log_free_robustness(&mut self, rho: &QuantumState) -> Result<f64> {
        Ok(self.evaluate(rho)?.log_free)
    }
}

/// `log₂ R`, reported as exactly 0 when `R − 1` is within the LP gap tolerance.
pub fn clamp_log_free(robustness: f64, tolerance: f64) -> f64 {
    let lr = robustness.log2();
    if lr < tolerance / std::f64::consts::LN_2 {
        0.0
    } else {
        lr
    }
}

/// `R(ρ)`: minimal L1 norm of an affine decomposition over the catalog.
pub fn robustness(rho: &QuantumState, catalog: &AMatrix) -> Result<f64> {
    MagicContext::new(catalog).robustness(rho)
}

pub fn log_free_robustness(rho: &QuantumState, catalog: &AMatrix) -> Result<f64> {
    MagicContext::new(catalog).log_free_robustness(rho)
}

/// Stabilizer Rényi entropy from the `4^N` string expectations `Tr(ρ M)` of a pure state.
///
/// Works in either the Pauli or the Majorana frame.
pub fn sre_from_expectations(expectations: &[f64], n_qubits: usize, alpha: f64) -> f64 {
    let d = (1usize << n_qubits) as f64;
    let probs = expectations.iter().map(|e| e * e / d);
    let n = n_qubits as f64;
    if (alpha - 1.0).abs() < 1e-12 {
        let shannon: f64 = probs.filter(|&p| p >= 1e-300).map(|p| -p * p.log2()).sum();
        shannon - n
    } else if alpha == 0.0 {
        let support = expectations.iter().filter(|e| e.abs() > 1e-12).count() as f64;
        support.log2() - n
    } else {
        let moment: f64 = probs.filter(|&p| p >= 1e-300).map(|p| p.powf(alpha)).sum();
        moment.log2() / (1.0 - alpha) - n
    }
}

/// `M_α(ψ)` for a pure state; refuses mixed input.
pub fn sre(rho: &QuantumState, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("Rényi order {alpha}")));
    }
    let purity = rho.purity();
    if (purity - 1.0).abs() > PURITY_TOL {
        return Err(Error::MixedStateSre { purity });
    }
    let b = pauli_decompose(rho);
    Ok(sre_from_expectations(b.coefficients(), rho.n_qubits(), alpha))
}

/// `M̃₂(ρ) = −log₂[Σ Tr⁴(ρP) / Σ Tr²(ρP)]`, defined for pure and mixed states.
pub fn mixed_sre_2(rho: &QuantumState) -> f64 {
    let b = pauli_decompose(rho);
    let (quartic, quadratic) = b
        .coefficients()
        .iter()
        .fold((0.0, 0.0), |(q4, q2), x| (q4 + x.powi(4), q2 + x * x));
    -(quartic / quadratic).log2()
}

/// Closed form of `M̃₂` for `(1 − δP̂)/4` on two qubits.
pub fn mixed_sre_2_parity_closed_form(delta: f64) -> f64 {
    -((1.0 + delta.powi(4)) / (1.0 + delta * delta)).log2()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagicReport {
    pub robustness: f64,
    pub log_free_robustness: f64,
    /// `(α, M_α)` pairs; empty for mixed states.
    pub sre: Vec<(f64, f64)>,
    pub mixed_sre_2: f64,
}

impl MagicReport {
    pub fn sre_at(&self, alpha: f64) -> Option<f64> {
        self.sre.iter().find(|(a, _)| (a - alpha).abs() < 1e-12).map(|&(_, v)| v)
    }
}

/// All measures at once; SREs are only filled for pure states.
pub fn magic_report(rho: &QuantumState, ctx: &mut MagicContext<'_>, orders: &[f64]) -> Result<MagicReport> {
    let r = ctx.evaluate(rho)?;
    let sre_values = if rho.is_pure() {
        orders.iter().map(|&a| sre(rho, a).map(|v| (a, v))).collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(MagicReport {
        robustness: r.robustness,
        log_free_robustness: r.log_free,
        sre: sre_values,
        mixed_sre_2: mixed_sre_2(rho),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real;
    use crate::stabilizer::{build_a_matrix, enumerate_stabilizer_states, render_stabilizer_projector};
    use crate::{CMatrix, CVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bloch_state(r: [f64; 3]) -> QuantumState {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[real(1.0 + r[2]), crate::linalg::c(r[0], -r[1]), crate::linalg::c(r[0], r[1]), real(1.0 - r[2])],
        ) * real(0.5);
        QuantumState::new(m).unwrap()
    }

    /// Six-vertex octahedron: R = max(1, ‖r‖₁).
    fn octahedron_oracle(r: [f64; 3]) -> f64 {
        (r[0].abs() + r[1].abs() + r[2].abs()).max(1.0)
    }

    #[test]
    fn single_qubit_examples() {
        let a1 = build_a_matrix(1).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let r = robustness(&bloch_state([s, 0.0, s]), &a1).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!((robustness(&QuantumState::maximally_mixed(1), &a1).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(log_free_robustness(&QuantumState::maximally_mixed(1), &a1).unwrap(), 0.0);
    }

    #[test]
    fn single_qubit_oracle_agreement() {
        let a1 = build_a_matrix(1).unwrap();
        let mut ctx = MagicContext::new(&a1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let v: [f64; 3] = [rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5];
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            let radius = rng.gen::<f64>().cbrt();
            let r = [v[0] / norm * radius, v[1] / norm * radius, v[2] / norm * radius];
            let got = ctx.robustness(&bloch_state(r)).unwrap();
            assert!((got - octahedron_oracle(r)).abs() < 1e-9);
        }
    }

    #[test]
    fn stabilizer_vertices_have_unit_robustness() {
        let a2 = build_a_matrix(2).unwrap();
        let mut ctx = MagicContext::new(&a2);
        for s in enumerate_stabilizer_states(2).unwrap() {
            let rho = render_stabilizer_projector(&s);
            assert!((ctx.robustness(&rho).unwrap() - 1.0).abs() < 1e-10);
            assert_eq!(ctx.log_free_robustness(&rho).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_wrong_catalog() {
        let a1 = build_a_matrix(1).unwrap();
        assert!(matches!(
            robustness(&QuantumState::maximally_mixed(2), &a1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sre_examples() {
        assert_eq!(sre(&QuantumState::basis(1, 0), 2.0).unwrap(), 0.0);
        let th = std::f64::consts::PI / 8.0;
        let psi = QuantumState::from_ket(&CVector::from_vec(vec![real(th.cos()), real(th.sin())])).unwrap();
        // expectations (1, 1/√2, 0, 1/√2) → Σπ² = 3/8
        let expected = 2.0 - 3f64.log2();
        assert!((sre(&psi, 2.0).unwrap() - expected).abs() < 1e-12);
        assert!((mixed_sre_2(&psi) - expected).abs() < 1e-12);
        assert!(matches!(sre(&QuantumState::maximally_mixed(1), 2.0), Err(Error::MixedStateSre { .. })));
        assert!(sre(&psi, -1.0).is_err());
    }

    #[test]
    fn sre_vanishes_on_stabilizers_for_all_orders() {
        for s in enumerate_stabilizer_states(2).unwrap() {
            let rho = render_stabilizer_projector(&s);
            for alpha in [0.0, 0.5, 1.0, 2.0, 3.0] {
                assert!(sre(&rho, alpha).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mixed_sre_of_maximally_mixed_is_zero() {
        assert_eq!(mixed_sre_2(&QuantumState::maximally_mixed(2)), 0.0);
    }

    #[test]
    fn parity_closed_form_matches_direct_sum() {
        for delta in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
                real((1.0 - delta) / 4.0),
                real((1.0 + delta) / 4.0),
                real((1.0 + delta) / 4.0),
                real((1.0 - delta) / 4.0),
            ]));
            let rho = QuantumState::new(m).unwrap();
            assert!((mixed_sre_2(&rho) - mixed_sre_2_parity_closed_form(delta)).abs() < 1e-14);
        }
    }

    #[test]
    fn clamp_reports_exact_zero() {
        assert_eq!(clamp_log_free(1.0 + 5e-9, 1e-8), 0.0);
        assert_eq!(clamp_log_free(1.0 - 1e-12, 1e-8), 0.0);
        assert!(clamp_log_free(1.0 + 1e-6, 1e-8) > 0.0);
    }
}
