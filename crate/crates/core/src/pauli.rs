//! Pauli strings, Majorana strings and the Jordan–Wigner dictionary between them.
//!
//! Bit conventions: qubit 0 is the leftmost tensor factor and is stored in the
//! most significant bit of every mask, matching computational basis indices.
//! A Pauli string with both the X and Z bit set on a qubit renders as `Y`
//! there, so phase exponent 0 always denotes a Hermitian string.
//!
//! Pauli indices are base-4 numbers with digits `I=0, X=1, Y=2, Z=3` and
//! qubit 0 as the most significant digit; the identity is index 0.

use crate::error::{Error, Result};
use crate::linalg::{c, kron_all, real};
use crate::state::QuantumState;
use crate::{CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_qubits: usize,
    x_bits: u32,
    z_bits: u32,
    /// Power of `i` multiplying the Hermitian string.
    phase: u8,
}

/// Local Pauli code in index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Local {
    I,
    X,
    Y,
    Z,
}

impl Local {
    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Local::I,
            (true, false) => Local::X,
            (true, true) => Local::Y,
            (false, true) => Local::Z,
        }
    }

    fn digit(self) -> usize {
        self as usize
    }

    fn from_digit(d: usize) -> Self {
        [Local::I, Local::X, Local::Y, Local::Z][d]
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Local::I => (false, false),
            Local::X => (true, false),
            Local::Y => (true, true),
            Local::Z => (false, true),
        }
    }

    /// Power of `i` in `a·b = i^k (a⊕b)`.
    fn product_phase(a: Local, b: Local) -> u8 {
        use Local::*;
        match (a, b) {
            (X, Y) | (Y, Z) | (Z, X) => 1,
            (Y, X) | (Z, Y) | (X, Z) => 3,
            _ => 0,
        }
    }

    fn matrix(self) -> CMatrix {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        let i = c(0.0, 1.0);
        match self {
            Local::I => CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
            Local::X => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            Local::Y => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            Local::Z => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    }
}

fn i_power(k: u8) -> C64 {
    match k % 4 {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        Self { n_qubits, x_bits: 0, z_bits: 0, phase: 0 }
    }

    pub fn from_bits(n_qubits: usize, x_bits: u32, z_bits: u32) -> Self {
        let mask = (1u32 << n_qubits) - 1;
        Self { n_qubits, x_bits: x_bits & mask, z_bits: z_bits & mask, phase: 0 }
    }

    /// Parses strings such as `"XIZ"` or `"-iYY"`.
    pub fn parse(s: &str) -> Result<Self> {
        let (phase, body) = if let Some(rest) = s.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = s.strip_prefix('i') {
            (1, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (2, rest)
        } else {
            (0, s.strip_prefix('+').unwrap_or(s))
        };
        let n = body.len();
        if n == 0 || n > 16 {
            return Err(Error::InvalidParameter(format!("bad Pauli string {s:?}")));
        }
        let mut p = Self::identity(n);
        for (q, ch) in body.chars().enumerate() {
            let local = match ch {
                'I' => Local::I,
                'X' => Local::X,
                'Y' => Local::Y,
                'Z' => Local::Z,
                _ => return Err(Error::InvalidParameter(format!("bad Pauli string {s:?}"))),
            };
            p.set_local(q, local);
        }
        p.phase = phase;
        Ok(p)
    }

    /// Inverse of [`PauliString::index`], at phase 0.
    pub fn from_index(index: usize, n_qubits: usize) -> Result<Self> {
        let count = 1usize << (2 * n_qubits);
        if index >= count {
            return Err(Error::IndexOutOfRange { index, max: count - 1 });
        }
        let mut p = Self::identity(n_qubits);
        for q in 0..n_qubits {
            let digit = (index >> (2 * (n_qubits - 1 - q))) & 3;
            p.set_local(q, Local::from_digit(digit));
        }
        Ok(p)
    }

    fn bit(&self, q: usize) -> u32 {
        1 << (self.n_qubits - 1 - q)
    }

    fn local(&self, q: usize) -> Local {
        let b = self.bit(q);
        Local::from_bits(self.x_bits & b != 0, self.z_bits & b != 0)
    }

    fn set_local(&mut self, q: usize, local: Local) {
        let b = self.bit(q);
        let (x, z) = local.bits();
        self.x_bits = if x { self.x_bits | b } else { self.x_bits & !b };
        self.z_bits = if z { self.z_bits | b } else { self.z_bits & !b };
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_bits(&self) -> u32 {
        self.x_bits
    }

    pub fn z_bits(&self) -> u32 {
        self.z_bits
    }

    pub fn phase_exponent(&self) -> u8 {
        self.phase
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase % 4;
        self
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_multiple_of(2)
    }

    pub fn weight(&self) -> u32 {
        (self.x_bits | self.z_bits).count_ones()
    }

    /// Position in the base-4 `(I, X, Y, Z)` ordering; identity is 0.
    pub fn index(&self) -> usize {
        (0..self.n_qubits).fold(0, |acc, q| acc * 4 + self.local(q).digit())
    }

    /// Symplectic commutation test.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x_bits & other.z_bits).count_ones() + (self.z_bits & other.x_bits).count_ones()).is_multiple_of(2)
    }

    /// Operator product `self · other` with exact phase tracking.
    pub fn multiply(&self, other: &PauliString) -> PauliString {
        assert_eq!(self.n_qubits, other.n_qubits, "qubit count mismatch");
        let mut phase = self.phase + other.phase;
        for q in 0..self.n_qubits {
            phase += Local::product_phase(self.local(q), other.local(q));
        }
        PauliString {
            n_qubits: self.n_qubits,
            x_bits: self.x_bits ^ other.x_bits,
            z_bits: self.z_bits ^ other.z_bits,
            phase: phase % 4,
        }
    }

    pub fn matrix(&self) -> CMatrix {
        let factors: Vec<CMatrix> = (0..self.n_qubits).map(|q| self.local(q).matrix()).collect();
        kron_all(&factors) * i_power(self.phase)
    }

    /// Re Tr(ρ P), using the one-nonzero-per-row structure of `P`.
    pub fn expectation(&self, rho: &QuantumState) -> f64 {
        let m = rho.matrix();
        let y_count = (self.x_bits & self.z_bits).count_ones() as u8;
        let global = i_power(self.phase + y_count);
        let dim = rho.dim();
        let mut acc = C64::new(0.0, 0.0);
        for col in 0..dim {
            // P|col⟩ = global · (−1)^{z·col} |col ⊕ x⟩
            let sign = if (self.z_bits as usize & col).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            acc += m[(col, col ^ self.x_bits as usize)] * sign;
        }
        (acc * global).re
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let prefix = ["", "i", "-", "-i"][self.phase as usize];
        write!(f, "{prefix}")?;
        for q in 0..self.n_qubits {
            let ch = ['I', 'X', 'Y', 'Z'][self.local(q).digit()];
            write!(f, "{ch}")?;
        }
        Ok(())
    }
}

/// Majorana string `M_v = i^{vᵀω_L v} γ_1^{v_1} ⋯ γ_{2N}^{v_{2N}}`.
///
/// Bit `k` (counting from the least significant end) of `bits` is the
/// occupation `v_{k+1}` of Majorana mode `γ_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MajoranaString {
    n_qubits: usize,
    bits: u32,
}

impl MajoranaString {
    pub fn new(n_qubits: usize, bits: u32) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 15 || (bits >> (2 * n_qubits)) != 0 {
            return Err(Error::InvalidParameter(format!(
                "Majorana vector {bits:#b} does not fit {n_qubits} qubits"
            )));
        }
        Ok(Self { n_qubits, bits })
    }

    /// From an explicit occupation vector `(v_1, …, v_2N)`.
    pub fn from_occupations(v: &[u8]) -> Result<Self> {
        if v.is_empty() || !v.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("Majorana vector length {}", v.len())));
        }
        let bits = v.iter().enumerate().fold(0u32, |acc, (k, &b)| acc | (u32::from(b & 1) << k));
        Self::new(v.len() / 2, bits)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn occupations(&self) -> Vec<u8> {
        (0..2 * self.n_qubits).map(|k| ((self.bits >> k) & 1) as u8).collect()
    }

    /// `vᵀ ω_L v`: the number of ordered pairs of occupied modes.
    pub fn hermiticity_exponent(&self) -> u32 {
        let k = self.bits.count_ones();
        k * k.saturating_sub(1) / 2
    }

    /// All `4^N` strings of an `N`-qubit system in increasing bit order.
    pub fn all(n_qubits: usize) -> impl Iterator<Item = MajoranaString> {
        (0..1u32 << (2 * n_qubits)).map(move |bits| MajoranaString { n_qubits, bits })
    }
}

/// Jordan–Wigner Majorana `γ_i` (1-based) as a Pauli string.
fn majorana_pauli(i: usize, n_qubits: usize) -> PauliString {
    let k = (i - 1) / 2;
    let mut p = PauliString::identity(n_qubits);
    for q in 0..k {
        p.set_local(q, Local::Z);
    }
    p.set_local(k, if i % 2 == 1 { Local::X } else { Local::Y });
    p
}

/// Dense `γ_i`, `1 ≤ i ≤ 2N`: a `Z` string on the preceding qubits then `X` (odd `i`) or `Y` (even `i`).
pub fn jordan_wigner_majorana(i: usize, n_qubits: usize) -> Result<CMatrix> {
    if i == 0 || i > 2 * n_qubits {
        return Err(Error::IndexOutOfRange { index: i, max: 2 * n_qubits });
    }
    Ok(majorana_pauli(i, n_qubits).matrix())
}

/// Dense fermionic annihilation operator of mode `mode` (0-based), `c = (γ_{2k−1} + iγ_{2k})/2`.
///
/// Occupied corresponds to the qubit state `|1⟩`.
pub fn annihilation_operator(mode: usize, n_qubits: usize) -> Result<CMatrix> {
    let odd = jordan_wigner_majorana(2 * mode + 1, n_qubits)?;
    let even = jordan_wigner_majorana(2 * mode + 2, n_qubits)?;
    Ok((odd + even * c(0.0, 1.0)) * real(0.5))
}

/// Dense `M_v` built by multiplying the Jordan–Wigner matrices in mode order.
pub fn majorana_string_matrix(v: &MajoranaString) -> CMatrix {
    let n = v.n_qubits;
    let dim = 1usize << n;
    let mut m = CMatrix::identity(dim, dim);
    for i in 1..=2 * n {
        if v.bits >> (i - 1) & 1 == 1 {
            m *= majorana_pauli(i, n).matrix();
        }
    }
    m * i_power((v.hermiticity_exponent() % 4) as u8)
}

/// The Pauli string and sign with `M_v = sign · P`.
pub fn majorana_to_pauli(v: &MajoranaString) -> (PauliString, f64) {
    let n = v.n_qubits;
    let mut p = PauliString::identity(n);
    for i in 1..=2 * n {
        if v.bits >> (i - 1) & 1 == 1 {
            p = p.multiply(&majorana_pauli(i, n));
        }
    }
    let phase = (u32::from(p.phase) + v.hermiticity_exponent()) % 4;
    debug_assert!(phase.is_multiple_of(2), "Majorana string must be Hermitian");
    let sign = if phase == 0 { 1.0 } else { -1.0 };
    (p.with_phase(0), sign)
}

/// `b_j = Tr(ρ P_j)` in Pauli index order.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliDecomposition {
    n_qubits: usize,
    b: Vec<f64>,
}

impl PauliDecomposition {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.b
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.b
    }

    /// `(1/d) Σ_j b_j²`, which equals `Tr ρ²`.
    pub fn parseval_purity(&self) -> f64 {
        self.b.iter().map(|x| x * x).sum::<f64>() / (1usize << self.n_qubits) as f64
    }

    /// `(1/d) Σ_j b_j P_j`.
    pub fn reconstruct(&self) -> CMatrix {
        let dim = 1usize << self.n_qubits;
        let mut m = CMatrix::zeros(dim, dim);
        for (j, &bj) in self.b.iter().enumerate() {
            if bj != 0.0 {
                let p = PauliString::from_index(j, self.n_qubits).expect("index in range");
                m += p.matrix() * real(bj);
            }
        }
        m * real(1.0 / dim as f64)
    }
}

pub fn pauli_decompose(rho: &QuantumState) -> PauliDecomposition {
    let n = rho.n_qubits();
    let b = (0..1usize << (2 * n))
        .map(|j| PauliString::from_index(j, n).expect("index in range").expectation(rho))
        .collect();
    PauliDecomposition { n_qubits: n, b }
}

/// `Tr(ρ M_v)` for every Majorana string, evaluated with dense matrices.
///
/// Deliberately independent of [`pauli_decompose`]; the two frames must agree
/// as multisets of squared expectations.
pub fn majorana_expectations(rho: &QuantumState) -> Vec<f64> {
    MajoranaString::all(rho.n_qubits())
        .map(|v| rho.expectation(&majorana_string_matrix(&v)))
        .collect()
}
