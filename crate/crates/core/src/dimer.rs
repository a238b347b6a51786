//! The half-filled two-site Hubbard model on four Jordan–Wigner qubits.
//!
//! Spin-orbitals map to qubits in the order `(1↑, 1↓, 2↑, 2↓)`, so the
//! computational basis state `|n_{1↑} n_{1↓} n_{2↑} n_{2↓}⟩` is the occupation
//! basis. The four states of the `(N↑, N↓) = (1, 1)` sector are
//! `|1100⟩ = |↑↓,∘⟩`, `|1001⟩ = |↑,↓⟩`, `|0110⟩ = |↓,↑⟩` and `|0011⟩ = |∘,↑↓⟩`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::real;
use crate::pauli::annihilation_operator;
use crate::state::QuantumState;
use crate::{CMatrix, CVector};

pub const N_MODES: usize = 4;
pub const DIM: usize = 16;

/// Qubit index of each spin-orbital.
pub const UP1: usize = 0;
pub const DN1: usize = 1;
pub const UP2: usize = 2;
pub const DN2: usize = 3;

/// Basis indices of `|↑↓,∘⟩, |↑,↓⟩, |↓,↑⟩, |∘,↑↓⟩`.
pub const SECTOR: [usize; 4] = [0b1100, 0b1001, 0b0110, 0b0011];

/// Physical parameters in units of the hopping; `ħ = k_B = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimerParams {
    pub t: f64,
    pub u: f64,
    pub temperature: f64,
    pub gamma: f64,
}

impl DimerParams {
    pub fn new(t: f64, u: f64) -> Result<Self> {
        Self { t, u, temperature: 0.0, gamma: 0.0 }.validated()
    }

    pub fn with_temperature(mut self, temperature: f64) -> Result<Self> {
        self.temperature = temperature;
        self.validated()
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = gamma;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(Error::InvalidParameter(format!("hopping t = {} must be positive", self.t)));
        }
        for (name, v) in [("U", self.u), ("T", self.temperature), ("gamma", self.gamma)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and nonnegative")));
            }
        }
        Ok(self)
    }

    /// `U/4t`.
    fn ratio(&self) -> f64 {
        self.u / (4.0 * self.t)
    }

    /// `Δ₊, Δ₋ = U/4t ± √(1 + (U/4t)²)`.
    pub fn deltas(&self) -> (f64, f64) {
        let r = self.ratio();
        let root = r.hypot(1.0);
        // Δ₋ via Δ₊Δ₋ = −1 avoids cancellation at large U.
        let plus = r + root;
        (plus, -1.0 / plus)
    }

    /// `E₋, E₊ = U/2 ∓ 2t√(1 + (U/4t)²)`.
    pub fn band_energies(&self) -> (f64, f64) {
        let spread = 2.0 * self.t * self.ratio().hypot(1.0);
        (self.u / 2.0 - spread, self.u / 2.0 + spread)
    }
}

fn fermion_ops() -> Vec<CMatrix> {
    (0..N_MODES)
        .map(|k| annihilation_operator(k, N_MODES).expect("mode in range"))
        .collect()
}

/// Number operator `n_k` on the dimer space.
pub fn number_operator(mode: usize) -> CMatrix {
    let c = annihilation_operator(mode, N_MODES).expect("mode in range");
    c.adjoint() * c
}

/// `H = −t Σ_σ (c†_{1σ}c_{2σ} + h.c.) + U Σ_i n_{i↑}n_{i↓}`, from Jordan–Wigner operators.
pub fn build_hamiltonian(p: &DimerParams) -> CMatrix {
    let c = fermion_ops();
    let cd: Vec<CMatrix> = c.iter().map(|m| m.adjoint()).collect();
    let n: Vec<CMatrix> = (0..N_MODES).map(|k| &cd[k] * &c[k]).collect();
    let mut h = CMatrix::zeros(DIM, DIM);
    for (a, b) in [(UP1, UP2), (DN1, DN2)] {
        h -= (&cd[a] * &c[b] + &cd[b] * &c[a]) * real(p.t);
    }
    h += (&n[UP1] * &n[DN1] + &n[UP2] * &n[DN2]) * real(p.u);
    h
}

fn sector_vector(amps: [f64; 4]) -> CVector {
    let mut v = CVector::zeros(DIM);
    for (idx, a) in SECTOR.iter().zip(amps) {
        v[*idx] = real(a);
    }
    v
}

/// The four half-filled, `S_z = 0` eigenstates `ψ₋, ψ₊, D, t₀` with energies `E₋, E₊, U, 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DimerEigensystem {
    pub psi_minus: CVector,
    pub psi_plus: CVector,
    pub doublon: CVector,
    pub triplet: CVector,
    /// `[E₋, E₊, U, 0]`.
    pub energies: [f64; 4],
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub norm_plus: f64,
    pub norm_minus: f64,
}

impl DimerEigensystem {
    pub fn e_minus(&self) -> f64 {
        self.energies[0]
    }

    pub fn e_plus(&self) -> f64 {
        self.energies[1]
    }

    /// Vectors in the order of `energies`.
    pub fn states(&self) -> [&CVector; 4] {
        [&self.psi_minus, &self.psi_plus, &self.doublon, &self.triplet]
    }

    pub fn ground_state(&self) -> QuantumState {
        QuantumState::from_ket(&self.psi_minus).expect("normalised eigenvector")
    }

    pub fn projector(&self, k: usize) -> QuantumState {
        QuantumState::from_ket(self.states()[k]).expect("normalised eigenvector")
    }
}

fn doublon_and_triplet() -> (CVector, CVector) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (sector_vector([s, 0.0, 0.0, -s]), sector_vector([0.0, s, s, 0.0]))
}

/// Closed-form eigensystem; `ψ± ∝ |↑↓,∘⟩ + Δ∓|↑,↓⟩ − Δ∓|↓,↑⟩ + |∘,↑↓⟩`.
pub fn analytic_eigensystem(p: &DimerParams) -> DimerEigensystem {
    let (dp, dm) = p.deltas();
    let np = (2.0 * (1.0 + dp * dp)).sqrt();
    let nm = (2.0 * (1.0 + dm * dm)).sqrt();
    let (e_minus, e_plus) = p.band_energies();
    let (doublon, triplet) = doublon_and_triplet();
    DimerEigensystem {
        psi_minus: sector_vector([1.0 / np, dp / np, -dp / np, 1.0 / np]),
        psi_plus: sector_vector([1.0 / nm, dm / nm, -dm / nm, 1.0 / nm]),
        doublon,
        triplet,
        energies: [e_minus, e_plus, p.u, 0.0],
        delta_plus: dp,
        delta_minus: dm,
        norm_plus: np,
        norm_minus: nm,
    }
}

/// Eigensystem with `ψ±` and `E±` from diagonalising the `(1,1)` sector block of
/// [`build_hamiltonian`]. `D` and `t₀` are fixed exact vectors (they are
/// `U`-independent and degenerate with each other at `U = 0`).
///
/// Gauge: the `|↑↓,∘⟩` amplitude of `ψ±` is positive.
pub fn eigensystem(p: &DimerParams) -> DimerEigensystem {
    let h = build_hamiltonian(p);
    let block = DMatrix::<f64>::from_fn(4, 4, |i, j| h[(SECTOR[i], SECTOR[j])].re);
    let eig = SymmetricEigen::new(block);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let pick = |k: usize| {
        let col = eig.eigenvectors.column(k);
        let sign = if col[0] < 0.0 { -1.0 } else { 1.0 };
        sector_vector([sign * col[0], sign * col[1], sign * col[2], sign * col[3]])
    };
    let lo = order[0];
    let hi = order[3];
    let analytic = analytic_eigensystem(p);
    let (doublon, triplet) = doublon_and_triplet();
    DimerEigensystem {
        psi_minus: pick(lo),
        psi_plus: pick(hi),
        doublon,
        triplet,
        energies: [eig.eigenvalues[lo], eig.eigenvalues[hi], p.u, 0.0],
        ..analytic
    }
}

/// Dense eigenvalues of the full 16-dimensional Hamiltonian, ascending.
pub fn full_spectrum(p: &DimerParams) -> Vec<f64> {
    crate::linalg::hermitian_eigenvalues(&build_hamiltonian(p))
}

pub fn ground_state(p: &DimerParams) -> QuantumState {
    eigensystem(p).ground_state()
}

fn check_dimer(rho: &QuantumState) -> Result<()> {
    if rho.n_qubits() != N_MODES {
        return Err(Error::DimensionMismatch { expected: N_MODES, got: rho.n_qubits() });
    }
    Ok(())
}

/// `⟨d⟩ = ½ Tr[ρ(n_{1↑}n_{1↓} + n_{2↑}n_{2↓})]`.
pub fn double_occupancy(rho: &QuantumState) -> Result<f64> {
    check_dimer(rho)?;
    let m = rho.matrix();
    let mut acc = 0.0;
    for idx in 0..DIM {
        let bit = |q: usize| (idx >> (N_MODES - 1 - q)) & 1;
        let doubles = bit(UP1) * bit(DN1) + bit(UP2) * bit(DN2);
        acc += doubles as f64 * m[(idx, idx)].re;
    }
    Ok(0.5 * acc)
}

/// Boltzmann weights of `(ψ₋, ψ₊, D, t₀)` relative to the ground state.
pub fn thermal_weights(eig: &DimerEigensystem, temperature: f64) -> [f64; 4] {
    let e0 = eig.e_minus();
    if temperature == 0.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let mut w = [0.0; 4];
    for (wk, e) in w.iter_mut().zip(eig.energies) {
        *wk = (-(e - e0) / temperature).exp();
    }
    let z: f64 = w.iter().sum();
    w.map(|x| x / z)
}

/// Thermal ensemble over the four half-filled eigenstates; `T = 0` is the ground-state projector.
pub fn thermal_state(p: &DimerParams) -> Result<QuantumState> {
    let p = p.validated()?;
    let eig = eigensystem(&p);
    if p.temperature == 0.0 {
        return Ok(eig.ground_state());
    }
    let w = thermal_weights(&eig, p.temperature);
    let mut m = CMatrix::zeros(DIM, DIM);
    for (wk, v) in w.iter().zip(eig.states()) {
        m += v * v.adjoint() * real(*wk);
    }
    QuantumState::new(m)
}

/// Fermion parity `(−1)^N` as a diagonal check: `[ρ, P] = 0` iff `ρ` has no
/// entries between even and odd occupation states.
pub fn parity_violation(rho: &QuantumState) -> f64 {
    let m = rho.matrix();
    let d = rho.dim();
    let mut worst = 0.0f64;
    for r in 0..d {
        for c in 0..d {
            if (r.count_ones() + c.count_ones()) % 2 == 1 {
                worst = worst.max(m[(r, c)].norm());
            }
        }
    }
    worst
}

/// Site-1 reduced state (qubits 0, 1); requires a parity-symmetric input.
pub fn local_rdm(rho: &QuantumState) -> Result<QuantumState> {
    check_dimer(rho)?;
    let violation = parity_violation(rho);
    if violation > 1e-12 {
        return Err(Error::InvalidState(format!(
            "state breaks fermion parity ({violation:.3e}); the qubit partial trace is not a fermionic reduction"
        )));
    }
    rho.partial_trace(&[UP1, DN1])
}

/// `δ = 1 − 4⟨d⟩`.
pub fn parity_delta(double_occupancy: f64) -> f64 {
    1.0 - 4.0 * double_occupancy
}
