//! Catalog of pure stabilizer states for up to four qubits and the sparse
//! matrix `A_ij = Tr(σ_i P_j)` of their Pauli expectations.
//!
//! Stabilizer groups (modulo signs) are the maximal isotropic subspaces of
//! the binary symplectic space `F_2^{2N}`. They are enumerated directly in
//! reduced row echelon form, which is a canonical representative, so the
//! catalog needs no deduplication and comes out in a fixed order: groups
//! sorted by their echelon rows, then the `2^N` sign patterns of each group in
//! increasing order.
//!
//! A symplectic vector is packed as `(x_bits << N) | z_bits`, with qubit 0 in
//! the most significant bit of each half.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::l1::SparseMatrix;
use crate::linalg::real;
use crate::pauli::PauliString;
use crate::state::QuantumState;
use crate::CMatrix;

pub const MAX_QUBITS: usize = 4;

/// Bumped whenever the catalog ordering or encoding changes.
pub const CATALOG_VERSION: u32 = 1;

/// Environment variable naming the catalog cache directory.
pub const CACHE_DIR_ENV: &str = "HUBMAGIC_CACHE_DIR";

/// `|S_N| = 2^N Π_{k=1..N} (2^k + 1)`.
pub fn stabilizer_state_count(n_qubits: usize) -> usize {
    (1..=n_qubits).fold(1usize << n_qubits, |acc, k| acc * ((1usize << k) + 1))
}

fn check_qubits(n_qubits: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n_qubits) {
        Ok(())
    } else {
        Err(Error::UnsupportedQubitCount(n_qubits))
    }
}

fn symplectic_product(n: usize, a: u32, b: u32) -> u32 {
    let mask = (1u32 << n) - 1;
    let (ax, az) = (a >> n, a & mask);
    let (bx, bz) = (b >> n, b & mask);
    ((ax & bz).count_ones() + (az & bx).count_ones()) & 1
}

fn pauli_of(n: usize, v: u32) -> PauliString {
    PauliString::from_bits(n, v >> n, v & ((1u32 << n) - 1))
}

/// Row-reduces packed binary vectors; returns the nonzero echelon rows,
/// leading bit descending, each leading bit cleared from every other row.
fn rref(n: usize, rows: &[u32]) -> Vec<u32> {
    let mut rows: Vec<u32> = rows.to_vec();
    let mut out: Vec<u32> = Vec::new();
    for bit in (0..2 * n).rev() {
        let mask = 1u32 << bit;
        if let Some(pos) = rows.iter().position(|r| r & mask != 0) {
            let pivot = rows.swap_remove(pos);
            for r in rows.iter_mut().chain(out.iter_mut()) {
                if *r & mask != 0 {
                    *r ^= pivot;
                }
            }
            out.push(pivot);
        }
    }
    out
}

/// An unsigned stabilizer group given by its canonical echelon generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StabilizerGroup {
    n_qubits: usize,
    rows: Vec<u32>,
}

impl StabilizerGroup {
    /// Canonicalises arbitrary generators; they must commute and be independent.
    pub fn from_generators(generators: &[PauliString]) -> Result<Self> {
        let n = generators.first().map(PauliString::n_qubits).unwrap_or(0);
        check_qubits(n)?;
        if generators.len() != n {
            return Err(Error::InvalidParameter(format!("{} generators for {n} qubits", generators.len())));
        }
        let packed: Vec<u32> = generators.iter().map(|g| (g.x_bits() << n) | g.z_bits()).collect();
        for (i, &a) in packed.iter().enumerate() {
            for &b in &packed[i + 1..] {
                if symplectic_product(n, a, b) != 0 {
                    return Err(Error::InvalidParameter("generators do not commute".into()));
                }
            }
        }
        let rows = rref(n, &packed);
        if rows.len() != n {
            return Err(Error::InvalidParameter("generators are not independent".into()));
        }
        Ok(Self { n_qubits: n, rows })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn generators(&self) -> Vec<PauliString> {
        self.rows.iter().map(|&v| pauli_of(self.n_qubits, v)).collect()
    }

    /// Canonical encoding: the echelon rows, leading bit descending.
    pub fn encoding(&self) -> &[u32] {
        &self.rows
    }

    pub fn canonicalize(&self) -> Self {
        Self { n_qubits: self.n_qubits, rows: rref(self.n_qubits, &self.rows) }
    }

    pub fn with_signs(&self, signs: u32) -> StabilizerTableau {
        StabilizerTableau { group: self.clone(), signs }
    }
}

/// Enumerates every maximal isotropic subspace of `F_2^{2N}` in canonical order.
pub fn enumerate_stabilizer_groups(n_qubits: usize) -> Result<Vec<StabilizerGroup>> {
    check_qubits(n_qubits)?;
    let n = n_qubits;
    let width = 2 * n;
    let mut groups = Vec::new();
    // Pivot positions counted from the most significant bit.
    let mut pivots: Vec<usize> = (0..n).collect();
    loop {
        let frees: Vec<Vec<usize>> = pivots
            .iter()
            .map(|&p| (p + 1..width).filter(|c| !pivots.contains(c)).collect())
            .collect();
        let total: usize = frees.iter().map(Vec::len).sum();
        let mut rows = vec![0u32; n];
        'fill: for mask in 0u64..(1u64 << total) {
            let mut k = 0;
            for (r, free) in frees.iter().enumerate() {
                let mut v = 1u32 << (width - 1 - pivots[r]);
                for &c in free {
                    if mask >> k & 1 == 1 {
                        v |= 1 << (width - 1 - c);
                    }
                    k += 1;
                }
                rows[r] = v;
            }
            for i in 0..n {
                for j in i + 1..n {
                    if symplectic_product(n, rows[i], rows[j]) != 0 {
                        continue 'fill;
                    }
                }
            }
            groups.push(StabilizerGroup { n_qubits: n, rows: rows.clone() });
        }
        // next combination of pivot positions
        let mut i = n;
        loop {
            if i == 0 {
                groups.sort();
                return Ok(groups);
            }
            i -= 1;
            if pivots[i] < width - n + i {
                break;
            }
        }
        pivots[i] += 1;
        for j in i + 1..n {
            pivots[j] = pivots[j - 1] + 1;
        }
    }
}

/// A signed stabilizer group, i.e. one pure stabilizer state.
///
/// Bit `r` of `signs` (least significant = first generator) marks
/// generator `r` as carrying a minus sign.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StabilizerTableau {
    group: StabilizerGroup,
    signs: u32,
}

impl StabilizerTableau {
    pub fn new(generators: &[PauliString], signs: &[bool]) -> Result<Self> {
        if signs.len() != generators.len() {
            return Err(Error::InvalidParameter("one sign per generator required".into()));
        }
        // Canonicalising the rows changes which products carry which sign, so
        // fix the signs by matching group elements instead.
        let group = StabilizerGroup::from_generators(generators)?;
        let n = group.n_qubits;
        let elements = signed_elements(n, generators, signs);
        let mut canonical_signs = 0u32;
        for (r, row) in group.generators().iter().enumerate() {
            let (_, s) = elements
                .iter()
                .find(|(p, _)| p.x_bits() == row.x_bits() && p.z_bits() == row.z_bits())
                .expect("canonical row lies in the group");
            if *s < 0.0 {
                canonical_signs |= 1 << r;
            }
        }
        Ok(Self { group, signs: canonical_signs })
    }

    pub fn group(&self) -> &StabilizerGroup {
        &self.group
    }

    pub fn n_qubits(&self) -> usize {
        self.group.n_qubits
    }

    pub fn signs(&self) -> u32 {
        self.signs
    }

    pub fn generators(&self) -> Vec<PauliString> {
        self.group.generators()
    }

    /// All `2^N` signed group elements `(P, ±1)`, with `P` at phase 0.
    pub fn elements(&self) -> Vec<(PauliString, f64)> {
        let gens = self.generators();
        let signs: Vec<bool> = (0..gens.len()).map(|r| self.signs >> r & 1 == 1).collect();
        signed_elements(self.n_qubits(), &gens, &signs)
    }

    /// `(pauli index, ±1)` pairs sorted by index: the column of `A` for this state.
    pub fn expectation_column(&self) -> Vec<(usize, f64)> {
        let mut col: Vec<(usize, f64)> = self.elements().iter().map(|(p, s)| (p.index(), *s)).collect();
        col.sort_by_key(|e| e.0);
        col
    }
}

/// Products of every generator subset with sign tracking. Generators must
/// commute, so each product is `±` a Hermitian string.
fn signed_elements(n: usize, generators: &[PauliString], signs: &[bool]) -> Vec<(PauliString, f64)> {
    let k = generators.len();
    (0..1u32 << k)
        .map(|subset| {
            let mut p = PauliString::identity(n);
            let mut sign = 1.0;
            for r in 0..k {
                if subset >> r & 1 == 1 {
                    p = p.multiply(&generators[r]);
                    if signs[r] {
                        sign = -sign;
                    }
                }
            }
            let phase = p.phase_exponent();
            debug_assert!(phase.is_multiple_of(2), "commuting Hermitian product must be Hermitian");
            if phase == 2 {
                sign = -sign;
            }
            (p.with_phase(0), sign)
        })
        .collect()
}

/// Every pure stabilizer state, groups in canonical order and signs ascending within a group.
pub fn enumerate_stabilizer_states(n_qubits: usize) -> Result<Vec<StabilizerTableau>> {
    let groups = enumerate_stabilizer_groups(n_qubits)?;
    Ok(groups
        .iter()
        .flat_map(|g| (0..1u32 << n_qubits).map(move |s| g.with_signs(s)))
        .collect())
}

/// `σ = (1/d) Σ_{g ∈ G} φ_g g`.
pub fn render_stabilizer_projector(tab: &StabilizerTableau) -> QuantumState {
    let n = tab.n_qubits();
    let d = 1usize << n;
    let mut m = CMatrix::zeros(d, d);
    for (p, s) in tab.elements() {
        m += p.matrix() * real(s);
    }
    QuantumState::new(m * real(1.0 / d as f64)).expect("stabilizer projector is a valid state")
}

/// Sparse `4^N × |S_N|` matrix of stabilizer Pauli expectations.
#[derive(Debug, Clone, PartialEq)]
pub struct AMatrix {
    n_qubits: usize,
    matrix: SparseMatrix,
}

impl AMatrix {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_states(&self) -> usize {
        self.matrix.n_cols()
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.matrix.column(j)
    }

    fn from_tableaux(n_qubits: usize, states: &[StabilizerTableau]) -> Self {
        let matrix = SparseMatrix::from_columns(1 << (2 * n_qubits), states.iter().map(|s| s.expectation_column()))
            .with_character_blocks(1 << n_qubits);
        Self { n_qubits, matrix }
    }

    /// Structural invariants: column count, per-column support, identity row.
    pub fn validate(&self) -> Result<()> {
        let expected = stabilizer_state_count(self.n_qubits);
        if self.n_states() != expected {
            return Err(Error::Cache(format!("{} states, expected {expected}", self.n_states())));
        }
        let d = 1usize << self.n_qubits;
        for j in 0..self.n_states() {
            let col: Vec<(usize, f64)> = self.column(j).collect();
            if col.len() != d || col[0] != (0, 1.0) || col.iter().any(|&(_, v)| v.abs() != 1.0) {
                return Err(Error::Cache(format!("column {j} is not a stabilizer expectation column")));
            }
        }
        Ok(())
    }

    fn body_bytes(&self) -> Vec<u8> {
        let mut body = Vec::with_capacity(self.matrix.nnz() * 3);
        for j in 0..self.n_states() {
            for (r, v) in self.column(j) {
                body.extend_from_slice(&(r as u16).to_le_bytes());
                body.push(if v > 0.0 { 1 } else { 0xff });
            }
        }
        body
    }

    /// Content checksum (SHA-256 of the column body).
    pub fn checksum(&self) -> [u8; 32] {
        Sha256::digest(self.body_bytes()).into()
    }

    /// Binary cache: magic, version, N, state count, checksum, then columns of
    /// `(u16 row, i8 sign)` entries.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let body = self.body_bytes();
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CATALOG_VERSION.to_le_bytes())?;
        w.write_all(&(self.n_qubits as u32).to_le_bytes())?;
        w.write_all(&(self.n_states() as u64).to_le_bytes())?;
        w.write_all(&Sha256::digest(&body))?;
        w.write_all(&body)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != CATALOG_VERSION {
            return Err(Error::Cache(format!("catalog version {version}, expected {CATALOG_VERSION}")));
        }
        r.read_exact(&mut u32buf)?;
        let n_qubits = u32::from_le_bytes(u32buf) as usize;
        check_qubits(n_qubits)?;
        let mut u64buf = [0u8; 8];
        r.read_exact(&mut u64buf)?;
        let n_states = u64::from_le_bytes(u64buf) as usize;
        if n_states != stabilizer_state_count(n_qubits) {
            return Err(Error::Cache(format!("header claims {n_states} states for N = {n_qubits}")));
        }
        let mut checksum = [0u8; 32];
        r.read_exact(&mut checksum)?;
        let d = 1usize << n_qubits;
        let mut body = vec![0u8; n_states * d * 3];
        r.read_exact(&mut body)?;
        if Sha256::digest(&body).as_slice() != checksum {
            return Err(Error::Cache("checksum mismatch".into()));
        }
        let n_rows = 1usize << (2 * n_qubits);
        let columns = body.chunks_exact(3 * d).map(|col| {
            col.chunks_exact(3).map(|e| {
                let row = u16::from_le_bytes([e[0], e[1]]) as usize;
                (row.min(n_rows - 1), if e[2] == 1 { 1.0 } else { -1.0 })
            })
        });
        let matrix = SparseMatrix::from_columns(n_rows, columns).with_character_blocks(1 << n_qubits);
        let a = Self { n_qubits, matrix };
        a.validate()?;
        Ok(a)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("tmp");
        {
            let file = std::fs::File::create(&tmp)?;
            self.write_to(std::io::BufWriter::new(file))?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

const CACHE_MAGIC: &[u8; 8] = b"HMSTABCT";

/// Builds the A-matrix from a fresh enumeration.
pub fn build_a_matrix(n_qubits: usize) -> Result<AMatrix> {
    let states = enumerate_stabilizer_states(n_qubits)?;
    Ok(AMatrix::from_tableaux(n_qubits, &states))
}

pub fn cache_file_name(n_qubits: usize) -> String {
    format!("stabilizer_catalog_n{n_qubits}_v{CATALOG_VERSION}.bin")
}

/// Directory named by `HUBMAGIC_CACHE_DIR`, if set.
pub fn default_cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from)
}

/// Loads the cached A-matrix from `cache_dir`, rebuilding and rewriting it
/// when missing or invalid. Without a cache directory it is always built.
pub fn load_or_build_a_matrix(n_qubits: usize, cache_dir: Option<&Path>) -> Result<AMatrix> {
    check_qubits(n_qubits)?;
    let Some(dir) = cache_dir else {
        return build_a_matrix(n_qubits);
    };
    let path = dir.join(cache_file_name(n_qubits));
    match AMatrix::load(&path) {
        Ok(a) if a.n_qubits() == n_qubits => return Ok(a),
        Ok(_) => log::warn!("cache {} holds the wrong qubit count; rebuilding", path.display()),
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => log::warn!("ignoring unusable cache {}: {e}", path.display()),
    }
    let a = build_a_matrix(n_qubits)?;
    if let Err(e) = a.save(&path) {
        log::warn!("could not write catalog cache {}: {e}", path.display());
    }
    Ok(a)
}
