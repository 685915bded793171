//! Symmetric LDLᵀ (Doolittle) factorization of banded SPD matrices, the
//! full banded solve, and the incremental step that extends a factorization
//! by one time point while carrying only a fixed-size trailing state.
//!
//! The batch kernel and the online kernel share the same update expressions
//! and the same summation order, so the online path reproduces the trailing
//! entries of a from-scratch factorization bit for bit.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-bandwidth of the interleaved online system (total bandwidth 9).
pub const ONLINE_HALF_BANDWIDTH: usize = 4;

/// Rows in the working window of one online step (2β + 2).
pub const WORK_ROWS: usize = 2 * ONLINE_HALF_BANDWIDTH + 2;
/// Committed columns carried between steps (β).
pub const CARRY_COLS: usize = ONLINE_HALF_BANDWIDTH;
/// Rows of `L` carried between steps.
pub const CARRY_ROWS: usize = WORK_ROWS - 2;
/// Size of the growth block `A*` (three time points, two unknowns each).
pub const GROW: usize = WORK_ROWS - CARRY_COLS;

#[inline(always)]
fn pivot_sub(acc: f64, d_i: f64, l_ki: f64) -> f64 {
    acc - d_i * l_ki * l_ki
}

#[inline(always)]
fn cross_sub(acc: f64, l_ji: f64, d_i: f64, l_ki: f64) -> f64 {
    acc - l_ji * d_i * l_ki
}

#[inline(always)]
fn pivot_floor(a_kk: f64) -> f64 {
    1e-12 * a_kk.abs().max(1.0)
}

/// Symmetric banded matrix storing the lower band row by row
/// (`β + 1` slots per row, diagonal last).
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSymMatrix {
    dim: usize,
    half_bw: usize,
    data: Vec<f64>,
}

impl BandedSymMatrix {
    pub fn zeros(dim: usize, half_bw: usize) -> Self {
        Self {
            dim,
            half_bw,
            data: vec![0.0; dim * (half_bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bw
    }

    #[inline(always)]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.half_bw);
        i * (self.half_bw + 1) + self.half_bw - (i - j)
    }

    /// Entry `A[i][j]`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.half_bw {
            0.0
        } else {
            self.data[self.slot(hi, lo)]
        }
    }

    /// Sets `A[i][j]` (and by symmetry `A[j][i]`).
    ///
    /// Panics when `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        assert!(
            hi - lo <= self.half_bw,
            "entry ({i}, {j}) outside half-bandwidth {}",
            self.half_bw
        );
        let s = self.slot(hi, lo);
        self.data[s] = value;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        for i in 0..self.dim {
            let lo = i.saturating_sub(self.half_bw);
            for j in lo..i {
                let a = self.data[self.slot(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.slot(i, i)] * x[i];
        }
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Largest `|i - j|` with a non-zero stored entry.
    pub fn occupied_half_bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.dim {
            for j in i.saturating_sub(self.half_bw)..i {
                if self.data[self.slot(i, j)] != 0.0 {
                    bw = bw.max(i - j);
                }
            }
        }
        bw
    }

    /// Infinity norm (max absolute row sum).
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                let lo = i.saturating_sub(self.half_bw);
                let hi = (i + self.half_bw).min(self.dim.saturating_sub(1));
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// `A = L·D·Lᵀ` with unit lower-triangular banded `L` and diagonal `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdlFactors {
    dim: usize,
    half_bw: usize,
    /// Lower band of `L`, same layout as [`BandedSymMatrix`]; diagonal slots hold 1.
    l: Vec<f64>,
    d: Vec<f64>,
    ops: u64,
}

impl LdlFactors {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bw
    }

    #[inline(always)]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * (self.half_bw + 1) + self.half_bw - (i - j)
    }

    /// Entry `L[i][j]`.
    pub fn l(&self, i: usize, j: usize) -> f64 {
        if j > i || i - j > self.half_bw {
            0.0
        } else {
            self.l[self.slot(i, j)]
        }
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// Multiply-subtract and divide operations spent in the factorization.
    pub fn ops(&self) -> u64 {
        self.ops
    }

    /// Dense `L·D·Lᵀ`.
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let n = self.dim;
        let mut out = vec![vec![0.0; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let lo = i.max(j).saturating_sub(self.half_bw);
                *cell = (lo..=i.min(j))
                    .map(|k| self.l(i, k) * self.d[k] * self.l(j, k))
                    .sum();
            }
        }
        out
    }

    /// Solves `L·z = b`.
    pub fn forward_substitute(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: b.len(),
            });
        }
        let mut z = b.to_vec();
        for j in 0..self.dim {
            let mut acc = z[j];
            for i in j.saturating_sub(self.half_bw)..j {
                acc -= self.l[self.slot(j, i)] * z[i];
            }
            z[j] = acc;
        }
        Ok(z)
    }

    /// Solves `D·Lᵀ·x = z` given the forward-substituted right-hand side.
    pub fn back_substitute(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        let n = self.dim;
        let mut x: Vec<f64> = z.iter().zip(&self.d).map(|(z, d)| z / d).collect();
        for j in (0..n).rev() {
            let mut acc = x[j];
            for i in (j + 1)..(j + self.half_bw + 1).min(n) {
                acc -= self.l[self.slot(i, j)] * x[i];
            }
            x[j] = acc;
        }
        Ok(x)
    }
}

/// Symmetric Doolittle factorization restricted to the band.
///
/// Fails with [`Error::NonPositivePivot`] when a pivot drops to
/// `1e-12 · max(1, |A[k][k]|)` or below.
pub fn sdf_factorize(a: &BandedSymMatrix) -> Result<LdlFactors> {
    let n = a.dim;
    let bw = a.half_bw;
    let mut f = LdlFactors {
        dim: n,
        half_bw: bw,
        l: vec![0.0; a.data.len()],
        d: vec![0.0; n],
        ops: 0,
    };
    let mut ops = 0u64;
    for k in 0..n {
        let a_kk = a.data[a.slot(k, k)];
        let mut acc = a_kk;
        for i in k.saturating_sub(bw)..k {
            acc = pivot_sub(acc, f.d[i], f.l[f.slot(k, i)]);
            ops += 1;
        }
        // Negated so that a NaN pivot is rejected too.
        if !(acc > pivot_floor(a_kk)) {
            return Err(Error::NonPositivePivot {
                index: k,
                pivot: acc,
            });
        }
        f.d[k] = acc;
        let kk = f.slot(k, k);
        f.l[kk] = 1.0;
        for j in (k + 1)..(k + bw + 1).min(n) {
            let mut acc = a.data[a.slot(j, k)];
            for i in j.saturating_sub(bw)..k {
                acc = cross_sub(acc, f.l[f.slot(j, i)], f.d[i], f.l[f.slot(k, i)]);
                ops += 1;
            }
            let jk = f.slot(j, k);
            f.l[jk] = acc / f.d[k];
            ops += 1;
        }
    }
    f.ops = ops;
    Ok(f)
}

/// Solves `A·x = b` from its LDLᵀ factors.
pub fn banded_solve(f: &LdlFactors, b: &[f64]) -> Result<Vec<f64>> {
    let z = f.forward_substitute(b)?;
    f.back_substitute(&z)
}

/// Trailing blocks of an LDLᵀ factorization carried across stream updates.
///
/// `l` holds the last [`CARRY_ROWS`] rows of `L` restricted to the last
/// [`CARRY_COLS`] committed columns, `d` the matching pivots and `z` the
/// forward-substituted right-hand side on those committed rows. Committed
/// columns never change when the system grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnlineFactorState {
    l: [[f64; CARRY_COLS]; CARRY_ROWS],
    d: [f64; CARRY_COLS],
    z: [f64; CARRY_COLS],
    rows_emitted: u64,
}

impl Default for OnlineFactorState {
    fn default() -> Self {
        Self::empty()
    }
}

/// Factorization of the growth block on top of a carried state; depends on
/// `A*` only, so it can be shared by several right-hand sides.
#[derive(Debug, Clone, Copy)]
pub struct FactorExtension {
    l: [[f64; WORK_ROWS]; WORK_ROWS],
    d: [f64; WORK_ROWS],
    ops: u32,
}

impl FactorExtension {
    pub fn ops(&self) -> u32 {
        self.ops
    }
}

/// Result of one online step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub trend: f64,
    pub seasonal: f64,
    /// Multiply-subtract and divide operations spent in the step.
    pub ops: u32,
}

impl OnlineFactorState {
    /// State preceding the first time point: the committed rows are
    /// decoupled identity rows with a zero right-hand side, which leaves the
    /// factorization of the real rows untouched.
    pub fn empty() -> Self {
        let mut l = [[0.0; CARRY_COLS]; CARRY_ROWS];
        for (i, row) in l.iter_mut().enumerate().take(CARRY_COLS) {
            row[i] = 1.0;
        }
        Self {
            l,
            d: [1.0; CARRY_COLS],
            z: [0.0; CARRY_COLS],
            rows_emitted: 0,
        }
    }

    /// Seeds the state from a batch factorization of an interleaved online
    /// system with `M` points (`dim = 2M`) and its forward-substituted
    /// right-hand side `z`. The next [`Self::step`] must carry the growth
    /// block for point `M + 1`.
    pub fn from_factorization(f: &LdlFactors, z: &[f64]) -> Result<Self> {
        if f.half_bw != ONLINE_HALF_BANDWIDTH {
            return Err(Error::InvalidInput(format!(
                "online state needs half-bandwidth {}, got {}",
                ONLINE_HALF_BANDWIDTH, f.half_bw
            )));
        }
        if z.len() != f.dim {
            return Err(Error::DimensionMismatch {
                expected: f.dim,
                got: z.len(),
            });
        }
        if !f.dim.is_multiple_of(2) {
            return Err(Error::InvalidInput("system dimension must be even".into()));
        }
        let mut state = Self::empty();
        let base = f.dim as isize - CARRY_ROWS as isize;
        for c in 0..CARRY_COLS {
            let gc = base + c as isize;
            if gc < 0 {
                continue;
            }
            let gc = gc as usize;
            state.d[c] = f.d[gc];
            state.z[c] = z[gc];
            for r in 0..CARRY_ROWS {
                let gr = base + r as isize;
                state.l[r][c] = if gr < 0 { 0.0 } else { f.l(gr as usize, gc) };
            }
        }
        state.rows_emitted = f.dim as u64;
        Ok(state)
    }

    /// Rows of the (real) system factorized so far.
    pub fn rows_emitted(&self) -> u64 {
        self.rows_emitted
    }

    /// Factorizes the rows of the growth block `A*` (the bottom-right 6×6 of
    /// the grown system) on top of the carried columns.
    pub fn extend(&self, a_star: &[[f64; GROW]; GROW]) -> Result<FactorExtension> {
        const B: usize = ONLINE_HALF_BANDWIDTH;
        let mut l = [[0.0; WORK_ROWS]; WORK_ROWS];
        let mut d = [0.0; WORK_ROWS];
        for (dst, src) in l.iter_mut().zip(self.l.iter()) {
            dst[..CARRY_COLS].copy_from_slice(src);
        }
        d[..CARRY_COLS].copy_from_slice(&self.d);
        let mut ops = 0u32;
        for k in CARRY_COLS..WORK_ROWS {
            let a_kk = a_star[k - CARRY_COLS][k - CARRY_COLS];
            let mut acc = a_kk;
            for i in (k - B)..k {
                acc = pivot_sub(acc, d[i], l[k][i]);
                ops += 1;
            }
            if !(acc > pivot_floor(a_kk)) {
                return Err(Error::NonPositivePivot {
                    index: self.rows_emitted as usize + k - CARRY_COLS,
                    pivot: acc,
                });
            }
            d[k] = acc;
            l[k][k] = 1.0;
            for j in (k + 1)..(k + B + 1).min(WORK_ROWS) {
                let mut acc = a_star[j - CARRY_COLS][k - CARRY_COLS];
                for i in (j - B)..k {
                    acc = cross_sub(acc, l[j][i], d[i], l[k][i]);
                    ops += 1;
                }
                l[j][k] = acc / d[k];
                ops += 1;
            }
        }
        Ok(FactorExtension { l, d, ops })
    }

    /// Forward-substitutes `b*` through the extension, back-substitutes the
    /// last two unknowns, and advances the carried state by one time point.
    pub fn substitute(&mut self, ext: &FactorExtension, b_star: &[f64; GROW]) -> StepOutput {
        const B: usize = ONLINE_HALF_BANDWIDTH;
        let l = &ext.l;
        let d = &ext.d;
        let mut z = [0.0; WORK_ROWS];
        z[..CARRY_COLS].copy_from_slice(&self.z);
        let mut ops = ext.ops;
        for j in CARRY_COLS..WORK_ROWS {
            let mut acc = b_star[j - CARRY_COLS];
            for i in (j - B)..j {
                acc -= l[j][i] * z[i];
                ops += 1;
            }
            z[j] = acc;
        }
        let n = WORK_ROWS;
        let seasonal = z[n - 1] / d[n - 1];
        let trend = z[n - 2] / d[n - 2] - l[n - 1][n - 2] * seasonal;
        ops += 3;

        for (r, row) in self.l.iter_mut().enumerate() {
            row.copy_from_slice(&l[r + 2][2..2 + CARRY_COLS]);
        }
        self.d.copy_from_slice(&d[2..2 + CARRY_COLS]);
        self.z.copy_from_slice(&z[2..2 + CARRY_COLS]);
        self.rows_emitted += 2;
        StepOutput {
            trend,
            seasonal,
            ops,
        }
    }

    /// [`Self::extend`] followed by [`Self::substitute`].
    pub fn step(
        &mut self,
        a_star: &[[f64; GROW]; GROW],
        b_star: &[f64; GROW],
    ) -> Result<StepOutput> {
        let ext = self.extend(a_star)?;
        Ok(self.substitute(&ext, b_star))
    }
}

/// Functional form of [`OnlineFactorState::step`]: returns the newest trend
/// and seasonal values and the advanced state, leaving `state` untouched.
pub fn online_doolittle_step(
    state: &OnlineFactorState,
    a_star: &[[f64; GROW]; GROW],
    b_star: &[f64; GROW],
) -> Result<(f64, f64, OnlineFactorState)> {
    let mut next = *state;
    let out = next.step(a_star, b_star)?;
    Ok((out.trend, out.seasonal, next))
}

/// Independent copy of a carried state.
pub fn clone_factor_state(state: &OnlineFactorState) -> OnlineFactorState {
    *state
}
