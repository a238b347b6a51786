//! Exact magic, non-Gaussianity and superselected entanglement for the
//! half-filled two-site Hubbard model.
//!
//! Everything is dense and exact at desk scale (at most four qubits). The
//! robustness of magic is computed by an L1-minimisation linear program over
//! the full catalog of pure stabilizer states; the remaining measures have
//! closed forms over Pauli/Majorana expectations or one-body density
//! matrices.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dimer;
pub mod error;
pub mod l1;
pub mod linalg;
pub mod magic;
pub mod pauli;
pub mod quench;
pub mod resources;
pub mod scan;
pub mod stabilizer;
pub mod state;

pub use dimer::{DimerEigensystem, DimerParams};
pub use error::{Error, Result};
pub use l1::{solve_l1, verify_certificate, L1Problem, L1Solution, L1Solver, SparseMatrix};
pub use magic::{MagicContext, MagicReport};
pub use pauli::{MajoranaString, PauliDecomposition, PauliString};
pub use quench::{MixingPair, QuenchSpec};
pub use stabilizer::{AMatrix, StabilizerGroup, StabilizerTableau};
pub use state::QuantumState;

/// Complex scalar used for every dense operator.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex operator on a 2^N-dimensional space.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex state vector.
pub type CVector = nalgebra::DVector<C64>;
