//! Equality-constrained L1 minimisation, `min ‖x‖₁ s.t. Ax = b`.
//!
//! Solved by a revised primal simplex on the split formulation
//! `x = u − v, u, v ≥ 0`, minimising `Σ(u + v)`. Any nonsingular set of
//! columns of `A` gives a feasible basis of the split problem (each basic
//! column enters with the sign of its coordinate), so full-rank systems need
//! no phase one and a basis from a previous solve warm-starts the next one
//! regardless of the new right-hand side. Rank-deficient systems fall back to
//! artificial columns and a phase-one solve.
//!
//! At optimality the simplex multipliers `y` satisfy `‖Aᵀy‖_∞ ≤ 1` and
//! `bᵀy = ‖x‖₁`, which is returned as the optimality certificate.
//!
//! Targets such as stabilizer states sit on highly degenerate vertices where
//! Dantzig pricing stalls. The simplex therefore runs on a right-hand side
//! shifted by a tiny fixed pseudo-random vector; the final basis is then
//! re-evaluated on the true `b`, with a cleanup phase only if that leaves a
//! basic value clearly negative.

use log::debug;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Column-compressed sparse real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    values: Vec<f64>,
    blocks: Option<CharacterBlocks>,
}

/// Columns grouped in runs of `size = 2^p` sharing one row set, where column
/// `s` of a run has entry `base_k · (−1)^{popcount(k & s)}` on row `rows_k`.
/// Then `Aᵀy` over a run is a Walsh–Hadamard transform of `base_k · y[rows_k]`.
#[derive(Debug, Clone, PartialEq)]
struct CharacterBlocks {
    size: usize,
    rows: Vec<u32>,
    base: Vec<f64>,
}

/// Fixed-size transform of one block, fully unrolled by the compiler.
fn blocks_fixed<const S: usize>(b: &CharacterBlocks, y: &[f64], out: &mut [f64]) {
    for ((o, rows), base) in out.chunks_exact_mut(S).zip(b.rows.chunks_exact(S)).zip(b.base.chunks_exact(S)) {
        let mut v = [0.0; S];
        for k in 0..S {
            v[k] = base[k] * y[rows[k] as usize];
        }
        let mut h = 1;
        while h < S {
            let mut i = 0;
            while i < S {
                for j in i..i + h {
                    let (x, z) = (v[j], v[j + h]);
                    v[j] = x + z;
                    v[j + h] = x - z;
                }
                i += 2 * h;
            }
            h *= 2;
        }
        o.copy_from_slice(&v);
    }
}

fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for chunk in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

impl SparseMatrix {
    /// Builds from per-column `(row, value)` lists; zeros are dropped.
    pub fn from_columns<I, C>(n_rows: usize, columns: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = (usize, f64)>,
    {
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for col in columns {
            for (r, v) in col {
                assert!(r < n_rows, "row {r} out of range");
                if v != 0.0 {
                    row_idx.push(r as u32);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self { n_rows, col_ptr, row_idx, values, blocks: None }
    }

    /// Enables the fast transposed product when the columns form character
    /// runs of length `size`; otherwise returns the matrix unchanged.
    pub fn with_character_blocks(mut self, size: usize) -> Self {
        self.blocks = self.detect_blocks(size);
        if self.blocks.is_none() {
            debug!("no character-block structure of size {size}");
        }
        self
    }

    pub fn has_character_blocks(&self) -> bool {
        self.blocks.is_some()
    }

    fn detect_blocks(&self, size: usize) -> Option<CharacterBlocks> {
        if size < 2 || !size.is_power_of_two() || !self.n_cols().is_multiple_of(size) {
            return None;
        }
        let bits = size.trailing_zeros() as usize;
        let mut rows = Vec::with_capacity(self.n_cols());
        let mut base = Vec::with_capacity(self.n_cols());
        for start in (0..self.n_cols()).step_by(size) {
            let entries = |s: usize| {
                let j = start + s;
                let span = self.col_ptr[j]..self.col_ptr[j + 1];
                (&self.row_idx[span.clone()], &self.values[span])
            };
            let (r0, v0) = entries(0);
            if r0.len() != size {
                return None;
            }
            // Subset label of each row from the single-bit columns.
            let mut label = vec![0usize; size];
            for i in 0..bits {
                let (ri, vi) = entries(1 << i);
                if ri != r0 {
                    return None;
                }
                for (pos, (a, b)) in v0.iter().zip(vi).enumerate() {
                    if *b == -*a {
                        label[pos] |= 1 << i;
                    } else if *b != *a {
                        return None;
                    }
                }
            }
            let mut block_rows = vec![u32::MAX; size];
            let mut block_base = vec![0.0; size];
            for (pos, &k) in label.iter().enumerate() {
                if block_rows[k] != u32::MAX {
                    return None;
                }
                block_rows[k] = r0[pos];
                block_base[k] = v0[pos];
            }
            for s in 0..size {
                let (rs, vs) = entries(s);
                if rs != r0 {
                    return None;
                }
                for (pos, v) in vs.iter().enumerate() {
                    let k = label[pos];
                    let sign = if (k & s).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
                    if *v != sign * v0[pos] {
                        return None;
                    }
                }
            }
            rows.extend(block_rows);
            base.extend(block_base);
        }
        Some(CharacterBlocks { size, rows, base })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        Self::from_columns(n_rows, (0..n_cols).map(|j| (0..n_rows).map(move |i| (i, rows[i][j]))))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_columns(n, (0..n).map(|j| [(j, 1.0)]))
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()].iter().map(|&r| r as usize).zip(self.values[range].iter().copied())
    }

    /// `A_jᵀ y`.
    #[inline]
    pub fn column_dot(&self, j: usize, y: &[f64]) -> f64 {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()]
            .iter()
            .zip(&self.values[range])
            .map(|(&r, &v)| v * y[r as usize])
            .sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (r, v) in self.column(j) {
                    out[r] += v * xj;
                }
            }
        }
        out
    }

    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols()];
        self.tr_mul_into(y, &mut out);
        out
    }

    /// `out = Aᵀy`.
    pub fn tr_mul_into(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(out.len(), self.n_cols());
        match &self.blocks {
            Some(b) if b.size == 16 => blocks_fixed::<16>(b, y, out),
            Some(b) if b.size == 4 => blocks_fixed::<4>(b, y, out),
            Some(b) => {
                for ((o, rows), base) in out
                    .chunks_exact_mut(b.size)
                    .zip(b.rows.chunks_exact(b.size))
                    .zip(b.base.chunks_exact(b.size))
                {
                    for ((ok, &r), &w) in o.iter_mut().zip(rows).zip(base) {
                        *ok = w * y[r as usize];
                    }
                    walsh_hadamard(o);
                }
            }
            None => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = self.column_dot(j, y);
                }
            }
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.n_cols()]; self.n_rows];
        for j in 0..self.n_cols() {
            for (r, v) in self.column(j) {
                rows[r][j] = v;
            }
        }
        rows
    }

}

/// `min ‖x‖₁` subject to `a x = b`.
#[derive(Debug, Clone)]
pub struct L1Problem<'a> {
    pub a: &'a SparseMatrix,
    pub b: Vec<f64>,
    pub tolerance: f64,
}

impl<'a> L1Problem<'a> {
    pub fn new(a: &'a SparseMatrix, b: Vec<f64>) -> Self {
        Self { a, b, tolerance: DEFAULT_TOLERANCE }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct L1Solution {
    pub x: Vec<f64>,
    pub l1_norm: f64,
    pub dual_certificate: Vec<f64>,
    /// `‖Ax − b‖_∞`.
    pub residual: f64,
    /// `|bᵀy − ‖x‖₁|`.
    pub gap: f64,
    pub iterations: usize,
    pub degenerate_pivots: usize,
}

/// Primal/dual feasibility and duality-gap tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Certificate tolerance: feasibility, dual feasibility and gap.
    pub tolerance: f64,
    /// Reduced-cost threshold for pricing; tighter than `tolerance`.
    pub pricing_tol: f64,
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_streak: usize,
    /// Pivots between basis refactorisations.
    pub refactor_every: usize,
    /// Relative size of the anti-degeneracy shift of `b`; 0 disables it.
    pub perturbation: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            pricing_tol: 1e-11,
            pivot_tol: 1e-9,
            degenerate_streak: 50,
            refactor_every: 256,
            perturbation: 1e-5,
        }
    }
}

/// A basic variable: a signed structural column or a signed artificial unit column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    Column { j: usize, negative: bool },
    Artificial { row: usize, negative: bool },
}

impl Var {
    fn sign(self) -> f64 {
        match self {
            Var::Column { negative, .. } | Var::Artificial { negative, .. } => {
                if negative {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }

    fn flipped(self) -> Var {
        match self {
            Var::Column { j, negative } => Var::Column { j, negative: !negative },
            Var::Artificial { row, negative } => Var::Artificial { row, negative: !negative },
        }
    }

    /// Ordering key for tie-breaking: structural columns by index, artificials last.
    fn key(self, n_cols: usize) -> usize {
        match self {
            Var::Column { j, .. } => j,
            Var::Artificial { row, .. } => n_cols + row,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

/// Reusable solver for one matrix; keeps the last optimal basis as a warm start.
///
/// A solver is single-threaded; share the matrix, not the solver.
#[derive(Debug, Clone)]
pub struct L1Solver<'a> {
    a: &'a SparseMatrix,
    options: SolverOptions,
    warm: Option<Vec<usize>>,
}

/// Dense working state of one simplex run.
struct Tableau<'a> {
    a: &'a SparseMatrix,
    opts: SolverOptions,
    m: usize,
    basis: Vec<Var>,
    /// Row-major explicit inverse of the basis matrix.
    binv: Vec<f64>,
    x_b: Vec<f64>,
    in_basis: Vec<bool>,
    iterations: usize,
    degenerate: usize,
    limit: usize,
}

impl<'a> L1Solver<'a> {
    pub fn new(a: &'a SparseMatrix) -> Self {
        Self::with_options(a, SolverOptions::default())
    }

    pub fn with_options(a: &'a SparseMatrix, options: SolverOptions) -> Self {
        Self { a, options, warm: None }
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn matrix(&self) -> &'a SparseMatrix {
        self.a
    }

    /// Drops the warm-start basis.
    pub fn reset(&mut self) {
        self.warm = None;
    }

    pub fn solve(&mut self, b: &[f64]) -> Result<L1Solution> {
        let a = self.a;
        if a.n_rows() == 0 || a.n_cols() == 0 {
            return Err(Error::InvalidParameter("empty constraint matrix".into()));
        }
        if b.len() != a.n_rows() {
            return Err(Error::DimensionMismatch { expected: a.n_rows(), got: b.len() });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite right-hand side".into()));
        }

        let warm = self.warm.take();
        let warm_tab = warm.as_deref().and_then(|cols| Tableau::from_columns(a, self.options, cols, b));
        let attempt = match warm_tab {
            Some(tab) => match self.finish(tab, b) {
                Err(Error::Numerical(e)) => {
                    debug!("l1 solve: warm start failed ({e}); retrying from a crash basis");
                    self.finish(Tableau::crash(a, self.options, b)?, b)
                }
                other => other,
            },
            None => self.finish(Tableau::crash(a, self.options, b)?, b),
        };
        let (solution, basis) = attempt?;
        self.warm = basis;
        Ok(solution)
    }

    /// Runs both phases from `tab`; returns the solution and the final basis
    /// when it is fully structural.
    fn finish(&self, mut tab: Tableau<'a>, b: &[f64]) -> Result<(L1Solution, Option<Vec<usize>>)> {
        // A shifted rhs may leave the range of a rank-deficient A, so only
        // full structural bases get the perturbation.
        let perturb = self.options.perturbation > 0.0 && tab.basis.iter().all(|v| matches!(v, Var::Column { .. }));
        let shifted = if perturb { perturbed(b, self.options.perturbation) } else { b.to_vec() };
        if perturb {
            tab.refactor(&shifted)?;
        }

        if tab.basis.iter().any(|v| matches!(v, Var::Artificial { .. })) {
            tab.run(Phase::One, &shifted)?;
            let infeasibility: f64 = tab
                .basis
                .iter()
                .zip(&tab.x_b)
                .filter(|(v, _)| matches!(v, Var::Artificial { .. }))
                .map(|(_, x)| x.abs())
                .sum();
            let scale = 1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if infeasibility > self.options.tolerance * scale {
                return Err(Error::Infeasible { residual: infeasibility });
            }
        }
        tab.run(Phase::Two, &shifted)?;
        if perturb && !tab.restore(b) {
            debug!("l1 solve: shifted basis infeasible for the true rhs, cleaning up");
            tab.refactor(b)?;
            tab.run(Phase::Two, b)?;
        }
        let solution = tab.solution(b);
        debug!(
            "l1 solve: {} pivots ({} degenerate), norm {:.12}, gap {:.2e}, residual {:.2e}",
            solution.iterations, solution.degenerate_pivots, solution.l1_norm, solution.gap, solution.residual
        );
        let basis = tab
            .basis
            .iter()
            .map(|v| match v {
                Var::Column { j, .. } => Some(*j),
                Var::Artificial { .. } => None,
            })
            .collect::<Option<Vec<usize>>>();
        Ok((solution, basis))
    }
}

/// Cold solve of a single problem.
pub fn solve_l1(problem: &L1Problem<'_>) -> Result<L1Solution> {
    let options = SolverOptions { tolerance: problem.tolerance, ..SolverOptions::default() };
    L1Solver::with_options(problem.a, options).solve(&problem.b)
}

/// Primal feasibility, dual feasibility and zero duality gap, all within the problem tolerance.
pub fn verify_certificate(problem: &L1Problem<'_>, solution: &L1Solution) -> bool {
    let a = problem.a;
    let tol = problem.tolerance;
    if solution.x.len() != a.n_cols() || solution.dual_certificate.len() != a.n_rows() {
        return false;
    }
    let ax = a.mul_vec(&solution.x);
    let residual = ax.iter().zip(&problem.b).fold(0.0f64, |acc, (l, r)| acc.max((l - r).abs()));
    let norm: f64 = solution.x.iter().map(|v| v.abs()).sum();
    let y = &solution.dual_certificate;
    let dual_inf = (0..a.n_cols()).fold(0.0f64, |acc, j| acc.max(a.column_dot(j, y).abs()));
    let dual_obj: f64 = problem.b.iter().zip(y).map(|(b, y)| b * y).sum();
    residual <= tol && dual_inf <= 1.0 + tol && (dual_obj - norm).abs() <= tol
}

/// `b` plus a fixed positive pseudo-random shift of relative size `scale`.
fn perturbed(b: &[f64], scale: f64) -> Vec<f64> {
    if scale == 0.0 {
        return b.to_vec();
    }
    let size = scale * (1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    b.iter().map(|v| v + size * rng.gen_range(0.5..1.0)).collect()
}

impl<'a> Tableau<'a> {
    fn empty(a: &'a SparseMatrix, opts: SolverOptions, basis: Vec<Var>) -> Self {
        let m = a.n_rows();
        let mut in_basis = vec![false; a.n_cols()];
        for v in &basis {
            if let Var::Column { j, .. } = v {
                in_basis[*j] = true;
            }
        }
        Self {
            a,
            opts,
            m,
            basis,
            binv: vec![0.0; m * m],
            x_b: vec![0.0; m],
            in_basis,
            iterations: 0,
            degenerate: 0,
            limit: 50 * (m + m),
        }
    }

    /// Basis from a previous solve; `None` if it no longer factorises.
    fn from_columns(a: &'a SparseMatrix, opts: SolverOptions, cols: &[usize], b: &[f64]) -> Option<Self> {
        if cols.len() != a.n_rows() || cols.iter().any(|&j| j >= a.n_cols()) {
            return None;
        }
        let basis = cols.iter().map(|&j| Var::Column { j, negative: false }).collect();
        let mut tab = Self::empty(a, opts, basis);
        tab.refactor(b).ok()?;
        Some(tab)
    }

    /// Greedy independent columns in decreasing order of `a_jᵀb`, completed with artificials.
    fn crash(a: &'a SparseMatrix, opts: SolverOptions, b: &[f64]) -> Result<Self> {
        let m = a.n_rows();
        let mut order: Vec<usize> = (0..a.n_cols()).collect();
        let overlap: Vec<f64> = (0..a.n_cols()).map(|j| a.column_dot(j, b)).collect();
        order.sort_by(|&p, &q| overlap[q].total_cmp(&overlap[p]).then(p.cmp(&q)));
        // Gauss–Jordan reduced copies of accepted columns: each has a pivot row
        // where it is 1 and every other accepted vector is 0.
        let mut reduced: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut pivot_rows: Vec<usize> = Vec::with_capacity(m);
        let mut pivot_of_row: Vec<Option<usize>> = vec![None; m];
        let mut chosen = Vec::with_capacity(m);
        let mut work = vec![0.0; m];
        for j in order {
            if chosen.len() == m {
                break;
            }
            work.iter_mut().for_each(|w| *w = 0.0);
            let mut coeffs = Vec::new();
            for (r, v) in a.column(j) {
                work[r] = v;
                if let Some(k) = pivot_of_row[r] {
                    coeffs.push((k, v));
                }
            }
            for (k, coef) in coeffs {
                for (w, rv) in work.iter_mut().zip(&reduced[k]) {
                    *w -= coef * rv;
                }
            }
            let (best_row, best) = work
                .iter()
                .enumerate()
                .filter(|(r, _)| pivot_of_row[*r].is_none())
                .fold((usize::MAX, 0.0f64), |acc, (r, &v)| if v.abs() > acc.1.abs() { (r, v) } else { acc });
            if best.abs() <= 1e-9 {
                continue;
            }
            let scale = 1.0 / best;
            let new_vec: Vec<f64> = work.iter().map(|w| w * scale).collect();
            for (k, vec) in reduced.iter_mut().enumerate() {
                let f = vec[best_row];
                if f != 0.0 {
                    for (vk, nv) in vec.iter_mut().zip(&new_vec) {
                        *vk -= f * nv;
                    }
                    vec[best_row] = 0.0;
                }
                debug_assert!(pivot_rows[k] != best_row);
            }
            pivot_of_row[best_row] = Some(reduced.len());
            pivot_rows.push(best_row);
            reduced.push(new_vec);
            chosen.push(j);
        }
        let mut basis: Vec<Var> = chosen.iter().map(|&j| Var::Column { j, negative: false }).collect();
        for (row, p) in pivot_of_row.iter().enumerate() {
            if p.is_none() {
                basis.push(Var::Artificial { row, negative: false });
            }
        }
        let mut tab = Self::empty(a, opts, basis);
        tab.refactor(b)?;
        Ok(tab)
    }

    fn column_entries(&self, var: Var) -> Vec<(usize, f64)> {
        match var {
            Var::Column { j, .. } => self.a.column(j).map(|(r, v)| (r, v * var.sign())).collect(),
            Var::Artificial { row, .. } => vec![(row, var.sign())],
        }
    }

    /// Recomputes the explicit inverse and basic values, flipping basic
    /// variables that came out negative.
    fn refactor(&mut self, b: &[f64]) -> Result<()> {
        let m = self.m;
        let mut dense = DMatrix::<f64>::zeros(m, m);
        for (k, &var) in self.basis.iter().enumerate() {
            for (r, v) in self.column_entries(var) {
                dense[(r, k)] = v;
            }
        }
        let inv = dense
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular basis matrix".into()))?;
        for i in 0..m {
            for k in 0..m {
                self.binv[i * m + k] = inv[(i, k)];
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.x_b[i] = row.iter().zip(b).map(|(p, q)| p * q).sum();
        }
        for i in 0..m {
            if self.x_b[i] < 0.0 {
                self.flip(i);
            }
        }
        Ok(())
    }

    /// Basic values for the true right-hand side on the current basis, keeping
    /// signs. Returns whether the basis stays primal feasible.
    fn restore(&mut self, b: &[f64]) -> bool {
        let m = self.m;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.x_b[i] = row.iter().zip(b).map(|(p, q)| p * q).sum();
        }
        let slack = self.opts.pivot_tol * (1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
        self.x_b.iter().all(|&v| v >= -slack)
    }

    fn flip(&mut self, i: usize) {
        let m = self.m;
        self.basis[i] = self.basis[i].flipped();
        self.x_b[i] = -self.x_b[i];
        self.binv[i * m..(i + 1) * m].iter_mut().for_each(|v| *v = -*v);
    }

    fn cost(phase: Phase, var: Var) -> f64 {
        match (phase, var) {
            (Phase::One, Var::Artificial { .. }) => 1.0,
            (Phase::One, Var::Column { .. }) => 0.0,
            (Phase::Two, Var::Artificial { .. }) => 0.0,
            (Phase::Two, Var::Column { .. }) => 1.0,
        }
    }

    /// Simplex multipliers `y = B⁻ᵀ c_B`.
    fn duals(&self, phase: Phase) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &var) in self.basis.iter().enumerate() {
            let ci = Self::cost(phase, var);
            if ci != 0.0 {
                for (yk, bk) in y.iter_mut().zip(&self.binv[i * m..(i + 1) * m]) {
                    *yk += ci * bk;
                }
            }
        }
        y
    }

    /// Entering column and sign from maintained `z = Aᵀy`, or `None` when no
    /// reduced cost is negative. Devex scoring `violation²/w_j`, or the first
    /// violating column in Bland mode.
    fn price(&self, phase: Phase, z: &[f64], weights: &[f64], bland: bool) -> Option<(usize, bool)> {
        let structural_cost = if phase == Phase::One { 0.0 } else { 1.0 };
        let tol = self.opts.pricing_tol;
        // Reduced cost of sign s is cost − s·z_j; best sign is s = sign(z_j).
        if bland {
            return z
                .iter()
                .enumerate()
                .find(|&(j, zj)| zj.abs() - structural_cost > tol && !self.in_basis[j])
                .map(|(j, zj)| (j, *zj < 0.0));
        }
        let mut best: Option<(usize, bool)> = None;
        let mut best_score = 0.0;
        for (j, (&zj, &wj)) in z.iter().zip(weights).enumerate() {
            let violation = zj.abs() - structural_cost;
            if violation > tol && violation * violation > best_score * wj && !self.in_basis[j] {
                best = Some((j, zj < 0.0));
                best_score = violation * violation / wj;
            }
        }
        best
    }

    fn run(&mut self, phase: Phase, b: &[f64]) -> Result<()> {
        let m = self.m;
        let n = self.a.n_cols();
        let mut streak = 0usize;
        let mut since_refactor = 0usize;
        let mut d = vec![0.0; m];
        let mut pivot_row = vec![0.0; m];
        let mut weights = vec![1.0; n];
        let mut row_products = vec![0.0; n];
        // Entering candidate found while updating z; invalidated by refactors.
        let mut fused: Option<(usize, bool)> = None;
        let mut z = self.a.tr_mul_vec(&self.duals(phase));
        loop {
            if since_refactor >= self.opts.refactor_every {
                self.refactor(b)?;
                z = self.a.tr_mul_vec(&self.duals(phase));
                fused = None;
                since_refactor = 0;
            }
            let bland = streak >= self.opts.degenerate_streak;
            let priced = match fused.take() {
                Some(c) if !bland => Some(c),
                _ => self.price(phase, &z, &weights, bland),
            };
            let candidate = match priced {
                Some(c) => Some(c),
                None => {
                    // Confirm optimality against freshly computed multipliers.
                    z = self.a.tr_mul_vec(&self.duals(phase));
                    self.price(phase, &z, &weights, bland)
                }
            };
            let Some((q, negative)) = candidate else {
                return Ok(());
            };
            if self.iterations >= self.limit {
                return Err(Error::IterationLimit { limit: self.limit, incumbent: Box::new(self.solution(b)) });
            }
            let entering = Var::Column { j: q, negative };
            let sign = entering.sign();

            // d = B⁻¹ a_q
            d.iter_mut().for_each(|v| *v = 0.0);
            for (r, v) in self.a.column(q) {
                let coef = sign * v;
                for (i, di) in d.iter_mut().enumerate() {
                    *di += coef * self.binv[i * m + r];
                }
            }

            // Ratio test; artificials still basic in phase two are pinned at zero.
            let leave = self.ratio_test(phase, &d, bland);
            let Some((r, theta)) = leave else {
                return Err(Error::Numerical(format!("unbounded direction at column {q}")));
            };

            // z_j += (d_q/α_rq)·(ρ_rᵀ a_j) with ρ_r the old pivot row of B⁻¹,
            // and the Devex weights from the same products.
            let alpha = d[r];
            let reduced = Self::cost(phase, entering) - sign * z[q];
            let step = reduced / alpha;
            let w_q = weights[q];
            pivot_row.copy_from_slice(&self.binv[r * m..(r + 1) * m]);
            self.a.tr_mul_into(&pivot_row, &mut row_products);
            // Weights of basic columns are unused until reset on leaving. The
            // same sweep prices the next iteration.
            let scale = w_q / (alpha * alpha);
            let leaving = match self.basis[r] {
                Var::Column { j, .. } => Some(j),
                Var::Artificial { .. } => None,
            };
            for ((zj, wj), &arj) in z.iter_mut().zip(weights.iter_mut()).zip(&row_products) {
                *zj += step * arj;
                *wj = wj.max(arj * arj * scale);
            }
            if let Some(j) = leaving {
                weights[j] = scale.max(1.0);
            }
            // The leaving column is nonbasic from here on; q is about to enter.
            if let Some(j) = leaving {
                self.in_basis[j] = false;
            }
            self.in_basis[q] = true;
            fused = self.price(phase, &z, &weights, false);
            // Pivot: basic values, then the explicit inverse.
            for (i, xi) in self.x_b.iter_mut().enumerate() {
                if i != r {
                    *xi -= theta * d[i];
                    if *xi < 0.0 {
                        *xi = 0.0;
                    }
                }
            }
            self.x_b[r] = theta;
            let pivot = d[r];
            let (head, rest) = self.binv.split_at_mut(r * m);
            let (prow, tail) = rest.split_at_mut(m);
            prow.iter_mut().for_each(|v| *v /= pivot);
            for (i, chunk) in head.chunks_exact_mut(m).enumerate() {
                let f = d[i];
                if f != 0.0 {
                    chunk.iter_mut().zip(prow.iter()).for_each(|(c, p)| *c -= f * p);
                }
            }
            for (i, chunk) in tail.chunks_exact_mut(m).enumerate() {
                let f = d[r + 1 + i];
                if f != 0.0 {
                    chunk.iter_mut().zip(prow.iter()).for_each(|(c, p)| *c -= f * p);
                }
            }

            self.basis[r] = entering;

            self.iterations += 1;
            since_refactor += 1;
            if theta <= 1e-12 {
                self.degenerate += 1;
                streak += 1;
            } else {
                streak = 0;
            }
        }
    }

    /// Leaving row and step length. Bland mode takes the smallest ratio with
    /// ties broken by variable key; otherwise a Harris pass picks the largest
    /// pivot among rows whose ratio is within the feasibility slack of the minimum.
    fn ratio_test(&self, phase: Phase, d: &[f64], bland: bool) -> Option<(usize, f64)> {
        let tol = self.opts.pivot_tol;
        let eligible = |i: usize| -> Option<f64> {
            let pinned = phase == Phase::Two && matches!(self.basis[i], Var::Artificial { .. });
            if pinned && d[i].abs() > tol {
                Some(0.0)
            } else if d[i] > tol {
                Some(self.x_b[i].max(0.0) / d[i])
            } else {
                None
            }
        };
        if bland {
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let Some(ratio) = eligible(i) else { continue };
                let better = match leave {
                    None => true,
                    Some((l, best)) => {
                        ratio < best - 1e-12
                            || (ratio <= best + 1e-12
                                && self.basis[i].key(self.a.n_cols()) < self.basis[l].key(self.a.n_cols()))
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            return leave;
        }
        let slack = tol;
        let mut bound = f64::INFINITY;
        for i in 0..self.m {
            if let Some(ratio) = eligible(i) {
                bound = bound.min(ratio + slack / d[i].abs());
            }
        }
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let Some(ratio) = eligible(i) else { continue };
            if ratio <= bound && leave.is_none_or(|(l, _)| d[i].abs() > d[l].abs()) {
                leave = Some((i, ratio));
            }
        }
        leave
    }

    fn solution(&self, b: &[f64]) -> L1Solution {
        let mut x = vec![0.0; self.a.n_cols()];
        for (var, &val) in self.basis.iter().zip(&self.x_b) {
            if let Var::Column { j, .. } = var {
                x[*j] = var.sign() * val;
            }
        }
        let y = self.duals(Phase::Two);
        let ax = self.a.mul_vec(&x);
        let residual = ax.iter().zip(b).fold(0.0f64, |acc, (l, r)| acc.max((l - r).abs()));
        let l1_norm: f64 = x.iter().map(|v| v.abs()).sum();
        let dual_obj: f64 = b.iter().zip(&y).map(|(p, q)| p * q).sum();
        L1Solution {
            x,
            l1_norm,
            gap: (dual_obj - l1_norm).abs(),
            dual_certificate: y,
            residual,
            iterations: self.iterations,
            degenerate_pivots: self.degenerate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute force over all basic solutions: the L1 optimum of an
    /// underdetermined system is attained at a vertex of the split polytope,
    /// i.e. at a solution supported on an independent column subset.
    fn brute_force_l1(rows: &[Vec<f64>], b: &[f64]) -> f64 {
        let m = rows.len();
        let n = rows[0].len();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != m {
                continue;
            }
            let cols: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
            let sub = DMatrix::from_fn(m, m, |i, k| rows[i][cols[k]]);
            if let Some(inv) = sub.clone().try_inverse() {
                if sub.determinant().abs() < 1e-9 {
                    continue;
                }
                let x = inv * nalgebra::DVector::from_column_slice(b);
                best = best.min(x.iter().map(|v| v.abs()).sum());
            }
        }
        best
    }

    #[test]
    fn identity_returns_b() {
        let a = SparseMatrix::identity(4);
        let b = vec![0.5, -1.25, 0.0, 2.0];
        let p = L1Problem::new(&a, b.clone());
        let s = solve_l1(&p).unwrap();
        assert_eq!(s.x, b);
        assert!((s.l1_norm - 3.75).abs() < 1e-15);
        assert!(verify_certificate(&p, &s));
    }

    #[test]
    fn matches_vertex_enumeration_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..60 {
            let m = rng.gen_range(2..=4);
            let n = rng.gen_range(m + 1..=9);
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| f64::from(rng.gen_range(-2i32..=2))).collect())
                .collect();
            let a = SparseMatrix::from_dense(&rows);
            // b in the column span
            let x0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            let b = a.mul_vec(&x0);
            let p = L1Problem::new(&a, b.clone());
            match solve_l1(&p) {
                Ok(s) => {
                    let oracle = brute_force_l1(&rows, &b);
                    if oracle.is_finite() {
                        assert!((s.l1_norm - oracle).abs() < 1e-9, "{} vs {}", s.l1_norm, oracle);
                    }
                    assert!(verify_certificate(&p, &s));
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn rank_deficient_consistent_system_is_solved() {
        // second row duplicates the first
        let rows = vec![vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]];
        let a = SparseMatrix::from_dense(&rows);
        let p = L1Problem::new(&a, vec![1.0, 1.0, 1.0]);
        let s = solve_l1(&p).unwrap();
        assert!((s.l1_norm - 1.0).abs() < 1e-12);
        assert!(verify_certificate(&p, &s));
    }

    #[test]
    fn inconsistent_system_is_infeasible() {
        let rows = vec![vec![1.0, 2.0], vec![1.0, 2.0]];
        let a = SparseMatrix::from_dense(&rows);
        let p = L1Problem::new(&a, vec![1.0, 2.0]);
        assert!(matches!(solve_l1(&p), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn rejects_bad_input() {
        let a = SparseMatrix::identity(2);
        assert!(matches!(solve_l1(&L1Problem::new(&a, vec![1.0])), Err(Error::DimensionMismatch { .. })));
        assert!(solve_l1(&L1Problem::new(&a, vec![1.0, f64::NAN])).is_err());
    }

    #[test]
    fn certificate_rejects_perturbations() {
        let rows = vec![vec![1.0, 1.0, 1.0, 0.0], vec![0.0, 1.0, -1.0, 1.0]];
        let a = SparseMatrix::from_dense(&rows);
        let p = L1Problem::new(&a, vec![1.0, 0.5]);
        let s = solve_l1(&p).unwrap();
        assert!(verify_certificate(&p, &s));
        let mut bad = s.clone();
        let j = bad.x.iter().position(|v| *v != 0.0).unwrap();
        bad.x[j] += 1e-3;
        assert!(!verify_certificate(&p, &bad));
        let mut bad = s.clone();
        bad.dual_certificate.iter_mut().for_each(|y| *y *= 2.0);
        assert!(!verify_certificate(&p, &bad));
    }

    #[test]
    fn character_blocks_match_generic_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=4 {
            let a = crate::stabilizer::build_a_matrix(n).unwrap();
            let m = a.matrix();
            assert!(m.has_character_blocks(), "N={n}");
            let y: Vec<f64> = (0..m.n_rows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = m.tr_mul_vec(&y);
            for (j, f) in fast.iter().enumerate() {
                assert!((f - m.column_dot(j, &y)).abs() < 1e-12, "N={n} column {j}");
            }
        }
    }

    #[test]
    fn unstructured_matrices_have_no_blocks() {
        let dense = SparseMatrix::from_dense(&[vec![1.0, 2.0, 0.5, 1.0], vec![1.0, -1.0, 3.0, 0.0]]);
        assert!(!dense.clone().with_character_blocks(2).has_character_blocks());
        assert!(!dense.clone().with_character_blocks(3).has_character_blocks());
        // right signs but the wrong row multiset in the second column
        let shifted = SparseMatrix::from_columns(3, [vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0), (2, -1.0)]]);
        assert!(!shifted.with_character_blocks(2).has_character_blocks());
        let good = SparseMatrix::from_columns(2, [vec![(0, 0.5), (1, 2.0)], vec![(0, 0.5), (1, -2.0)]]);
        let good = good.with_character_blocks(2);
        assert!(good.has_character_blocks());
        assert_eq!(good.tr_mul_vec(&[1.0, 1.0]), vec![2.5, -1.5]);
    }

    #[test]
    fn warm_start_agrees_with_cold_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> =
            (0..5).map(|_| (0..30).map(|_| f64::from(rng.gen_range(-1i32..=1))).collect()).collect();
        let a = SparseMatrix::from_dense(&rows);
        let mut solver = L1Solver::new(&a);
        for _ in 0..20 {
            let x0: Vec<f64> = (0..30).map(|_| rng.gen::<f64>() - 0.5).collect();
            let b = a.mul_vec(&x0);
            let warm = solver.solve(&b).unwrap();
            let cold = solve_l1(&L1Problem::new(&a, b)).unwrap();
            assert!((warm.l1_norm - cold.l1_norm).abs() < 1e-10);
        }
    }
}
