//! Interaction quenches `U_i → U_f` with optional dephasing, and the two
//! linear mixing families between dimer eigenstates.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dimer::{analytic_eigensystem, DimerEigensystem, DimerParams};
use crate::error::{Error, Result};
use crate::linalg::{c, real};
use crate::state::QuantumState;
use crate::{CMatrix, CVector};

/// A quench from the ground state at `u_i` to the Hamiltonian at `u_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchSpec {
    pub u_i: f64,
    pub u_f: f64,
    pub t_hop: f64,
    pub gamma: f64,
    /// `⟨ψ₋(U_f)|ψ₀⟩`.
    pub alpha: f64,
    /// `⟨ψ₊(U_f)|ψ₀⟩`.
    pub beta: f64,
    post: DimerEigensystem,
}

impl QuenchSpec {
    pub fn new(u_i: f64, u_f: f64, t_hop: f64, gamma: f64) -> Result<Self> {
        let initial = DimerParams::new(t_hop, u_i)?;
        let fin = DimerParams::new(t_hop, u_f)?.with_gamma(gamma)?;
        let (alpha, beta) = overlaps(&initial, &fin);
        Ok(Self { u_i, u_f, t_hop, gamma, alpha, beta, post: analytic_eigensystem(&fin) })
    }

    /// Post-quench eigensystem.
    pub fn eigensystem(&self) -> &DimerEigensystem {
        &self.post
    }

    /// `2π/(E₊ − E₋)`.
    pub fn period(&self) -> f64 {
        2.0 * PI / (self.post.e_plus() - self.post.e_minus())
    }

    pub fn initial_state(&self) -> QuantumState {
        evolve_pure(self, 0.0)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.u_i, self.u_f, self.t_hop, gamma)
    }
}

fn overlaps(initial: &DimerParams, fin: &DimerParams) -> (f64, f64) {
    let (d0, _) = initial.deltas();
    let n0 = (2.0 * (1.0 + d0 * d0)).sqrt();
    let (dp, dm) = fin.deltas();
    let np = (2.0 * (1.0 + dp * dp)).sqrt();
    let nm = (2.0 * (1.0 + dm * dm)).sqrt();
    (2.0 * (1.0 + d0 * dp) / (n0 * np), 2.0 * (1.0 + d0 * dm) / (n0 * nm))
}

/// Closed-form `(α, β)`.
pub fn overlap_coefficients(u_i: f64, u_f: f64, t_hop: f64) -> Result<(f64, f64)> {
    Ok(overlaps(&DimerParams::new(t_hop, u_i)?, &DimerParams::new(t_hop, u_f)?))
}

/// `α e^{−iE₋t}|ψ₋⟩ + β e^{−iE₊t}|ψ₊⟩` with `ħ = 1`.
pub fn evolve_ket(spec: &QuenchSpec, time: f64) -> CVector {
    let e = &spec.post;
    let phase = |energy: f64| {
        let (s, co) = (-energy * time).sin_cos();
        c(co, s)
    };
    &e.psi_minus * (phase(e.e_minus()) * spec.alpha) + &e.psi_plus * (phase(e.e_plus()) * spec.beta)
}

pub fn evolve_pure(spec: &QuenchSpec, time: f64) -> QuantumState {
    QuantumState::from_ket(&evolve_ket(spec, time)).expect("unitary evolution of a normalised ket")
}

/// The dephased state: populations `α², β²` in the post-quench eigenbasis and
/// coherences damped by `e^{−Γt}`.
pub fn evolve_dephased(spec: &QuenchSpec, time: f64) -> Result<QuantumState> {
    if spec.gamma < 0.0 {
        return Err(Error::InvalidParameter(format!("dephasing rate {} is negative", spec.gamma)));
    }
    if time < 0.0 {
        return Err(Error::InvalidParameter(format!("time {time} is negative")));
    }
    let e = &spec.post;
    let pm = &e.psi_minus * e.psi_minus.adjoint();
    let pp = &e.psi_plus * e.psi_plus.adjoint();
    let (s, co) = (-(e.e_minus() - e.e_plus()) * time).sin_cos();
    let coherence = c(co, s) * (spec.alpha * spec.beta * (-spec.gamma * time).exp());
    let off: CMatrix = &e.psi_minus * e.psi_plus.adjoint() * coherence;
    let m = pm * real(spec.alpha * spec.alpha) + pp * real(spec.beta * spec.beta) + &off + off.adjoint();
    QuantumState::new(m)
}

/// `α²|ψ₋⟩⟨ψ₋| + β²|ψ₊⟩⟨ψ₊|`, reached only under dephasing.
pub fn long_time_state(spec: &QuenchSpec) -> Result<QuantumState> {
    if !(spec.gamma > 0.0) {
        return Err(Error::InvalidParameter(
            "the long-time limit needs a positive dephasing rate; without it the state oscillates forever".into(),
        ));
    }
    let e = &spec.post;
    let m = &e.psi_minus * e.psi_minus.adjoint() * real(spec.alpha * spec.alpha)
        + &e.psi_plus * e.psi_plus.adjoint() * real(spec.beta * spec.beta);
    QuantumState::new(m)
}

/// Endpoints of a linear mixing family; `λ = 0` is always the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixingPair {
    /// `λ|ψ₊⟩⟨ψ₊| + (1 − λ)|ψ₋⟩⟨ψ₋|`
    PlusMinus,
    /// `λ|D⟩⟨D| + (1 − λ)|ψ₋⟩⟨ψ₋|`
    DoublonMinus,
}

impl MixingPair {
    pub fn name(self) -> &'static str {
        match self {
            MixingPair::PlusMinus => "plus-minus",
            MixingPair::DoublonMinus => "doublon-minus",
        }
    }
}

impl FromStr for MixingPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus-minus" | "pm" => Ok(MixingPair::PlusMinus),
            "doublon-minus" | "dm" => Ok(MixingPair::DoublonMinus),
            _ => Err(Error::InvalidParameter(format!("unknown mixing pair {s:?} (plus-minus | doublon-minus)"))),
        }
    }
}

pub fn mixing_state(pair: MixingPair, lambda: f64, params: &DimerParams) -> Result<QuantumState> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("mixing weight {lambda} outside [0, 1]")));
    }
    let e = analytic_eigensystem(params);
    let other = match pair {
        MixingPair::PlusMinus => &e.psi_plus,
        MixingPair::DoublonMinus => &e.doublon,
    };
    let m = other * other.adjoint() * real(lambda) + &e.psi_minus * e.psi_minus.adjoint() * real(1.0 - lambda);
    QuantumState::new(m)
}
