//! Batch solvers: joint seasonal-trend IRLS over a whole series, the growing
//! interleaved system solved from scratch at every stream point (the
//! reference the online engine must reproduce), and the builders for both
//! linear systems.

use crate::banded::{banded_solve, sdf_factorize, BandedSymMatrix, GROW, ONLINE_HALF_BANDWIDTH};
use crate::config::{exact_residual, Config, DecompPoint, ValidatedConfig};
use crate::error::{Error, Result};

/// Stream points of the init window replayed through the online recursion
/// to seed its factorization state.
pub const WARM_POINTS: usize = 8;

/// First-difference IRLS weight `1 / (2·max(|τ − τ_prev|, floor))`.
#[inline]
pub fn irls_weight_p(tau: f64, tau_prev: f64, floor: f64) -> f64 {
    1.0 / (2.0 * (tau - tau_prev).abs().max(floor))
}

/// Second-difference IRLS weight `1 / (2·max(|τ − 2τ_prev + τ_prev2|, floor))`.
#[inline]
pub fn irls_weight_q(tau: f64, tau_prev: f64, tau_prev2: f64, floor: f64) -> f64 {
    1.0 / (2.0 * (tau - 2.0 * tau_prev + tau_prev2).abs().max(floor))
}

/// Trend-block entries for point `j`: the diagonal, the coupling to `j-1`
/// and the coupling to `j-2`.
///
/// `p = [p_j, p_{j+1}]` and `q = [q_j, q_{j+1}, q_{j+2}]`, where `p_k`
/// weights the difference ending at `k` and `q_k` the second difference
/// ending at `k`; rows that do not exist carry weight 0. Every builder goes
/// through this one expression so that equal inputs give bit-equal entries.
#[inline(always)]
fn trend_entries(lambda1: f64, lambda2: f64, p: [f64; 2], q: [f64; 3]) -> (f64, f64, f64) {
    let diag = 1.0 + lambda1 * (p[0] + p[1]) + lambda2 * (q[0] + 4.0 * q[1] + q[2]);
    let off1 = -(lambda1 * p[0] + 2.0 * lambda2 * (q[0] + q[1]));
    let off2 = lambda2 * q[0];
    (diag, off1, off2)
}

/// IRLS weights of the batch problem. `p[k]` weights `τ_{k+1} − τ_k`,
/// `q[k]` weights `τ_{k+2} − 2τ_{k+1} + τ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrlsWeights {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl IrlsWeights {
    /// All-ones weights for a series of length `n`.
    pub fn ones(n: usize) -> Self {
        Self {
            p: vec![1.0; n.saturating_sub(1)],
            q: vec![1.0; n.saturating_sub(2)],
        }
    }

    /// Weights refreshed from a trend estimate.
    pub fn from_trend(trend: &[f64], floor: f64) -> Self {
        let p = trend
            .windows(2)
            .map(|w| irls_weight_p(w[1], w[0], floor))
            .collect();
        let q = trend
            .windows(3)
            .map(|w| irls_weight_q(w[2], w[1], w[0], floor))
            .collect();
        Self { p, q }
    }

    #[inline]
    fn p_at(&self, j: usize) -> f64 {
        if j >= 1 && j <= self.p.len() {
            self.p[j - 1]
        } else {
            0.0
        }
    }

    #[inline]
    fn q_at(&self, j: usize) -> f64 {
        if j >= 2 && j - 2 < self.q.len() {
            self.q[j - 2]
        } else {
            0.0
        }
    }
}

/// Normal equations of the batch problem in the natural ordering
/// `x = [τ_0 … τ_{N-1}, s_0 … s_{N-1}]`, stored by structure: a pentadiagonal
/// trend block, an identity coupling between `τ_t` and `s_t`, and a seasonal
/// block linking `s_t` with `s_{t−T}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSystem {
    n: usize,
    period: usize,
    tt_diag: Vec<f64>,
    /// `(τ_j, τ_{j−1})`, index `j ≥ 1`.
    tt_off1: Vec<f64>,
    /// `(τ_j, τ_{j−2})`, index `j ≥ 2`.
    tt_off2: Vec<f64>,
    ss_diag: Vec<f64>,
    pub b: Vec<f64>,
}

impl BatchSystem {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Dimension of the system (`2N`).
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Calls `f(i, j, value)` for every structurally non-zero entry with `i ≥ j`.
    pub fn for_each_lower(&self, mut f: impl FnMut(usize, usize, f64)) {
        let n = self.n;
        for j in 0..n {
            f(j, j, self.tt_diag[j]);
            if j >= 1 {
                f(j, j - 1, self.tt_off1[j]);
            }
            if j >= 2 {
                f(j, j - 2, self.tt_off2[j]);
            }
            f(n + j, j, 1.0);
            f(n + j, n + j, self.ss_diag[j]);
            if j >= self.period {
                f(n + j, n + j - self.period, -1.0);
            }
        }
    }

    /// Entry `A[i][j]`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let n = self.n;
        match (hi < n, lo < n) {
            (true, true) => match hi - lo {
                0 => self.tt_diag[hi],
                1 => self.tt_off1[hi],
                2 => self.tt_off2[hi],
                _ => 0.0,
            },
            (false, true) => f64::from(hi - n == lo),
            (false, false) => {
                let (a, c) = (hi - n, lo - n);
                if a == c {
                    self.ss_diag[a]
                } else if a - c == self.period {
                    -1.0
                } else {
                    0.0
                }
            }
            (true, false) => unreachable!(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim());
        let mut y = vec![0.0; self.dim()];
        self.for_each_lower(|i, j, a| {
            y[i] += a * x[j];
            if i != j {
                y[j] += a * x[i];
            }
        });
        y
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        let mut rows = vec![0.0f64; self.dim()];
        self.for_each_lower(|i, j, a| {
            rows[i] += a.abs();
            if i != j {
                rows[j] += a.abs();
            }
        });
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let m = self.dim();
        let mut a = vec![vec![0.0; m]; m];
        self.for_each_lower(|i, j, v| {
            a[i][j] = v;
            a[j][i] = v;
        });
        a
    }
}

/// Assembles the batch normal equations with weights `w` and ridge `ridge`
/// on the seasonal block (the ridge pins the otherwise free level exchange
/// between trend and seasonal).
pub fn build_batch_system(
    y: &[f64],
    period: usize,
    w: &IrlsWeights,
    lambda1: f64,
    lambda2: f64,
    ridge: f64,
) -> Result<BatchSystem> {
    let n = y.len();
    if period < 2 || n <= period {
        return Err(Error::InvalidInput(format!(
            "batch system needs N > T ≥ 2 (N = {n}, T = {period})"
        )));
    }
    if w.p.len() != n - 1 || w.q.len() != n - 2 {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: w.p.len(),
        });
    }
    let mut tt_diag = vec![0.0; n];
    let mut tt_off1 = vec![0.0; n];
    let mut tt_off2 = vec![0.0; n];
    for j in 0..n {
        let (d, o1, o2) = trend_entries(
            lambda1,
            lambda2,
            [w.p_at(j), w.p_at(j + 1)],
            [w.q_at(j), w.q_at(j + 1), w.q_at(j + 2)],
        );
        tt_diag[j] = d;
        tt_off1[j] = o1;
        tt_off2[j] = o2;
    }
    let ss_diag = (0..n)
        .map(|t| {
            let back = f64::from(t >= period);
            let fwd = f64::from(t + period < n);
            1.0 + back + fwd + ridge
        })
        .collect();
    let mut b = Vec::with_capacity(2 * n);
    b.extend_from_slice(y);
    b.extend_from_slice(y);
    Ok(BatchSystem {
        n,
        period,
        tt_diag,
        tt_off1,
        tt_off2,
        ss_diag,
        b,
    })
}

/// Variable ordering for the banded solve of a batch system.
///
/// Time-interleaved order has half-bandwidth about `2T`; folding the phase
/// axis (pairing phases `φ` and `T−1−φ`, cycles innermost) keeps every
/// coupling within two phase levels, giving a half-bandwidth of about
/// `12·N/T`. The cheaper of the two is used.
fn batch_ordering(sys: &BatchSystem) -> (Vec<usize>, usize) {
    let n = sys.n;
    let t = sys.period;
    let interleaved: Vec<usize> = (0..2 * n)
        .map(|v| if v < n { 2 * v } else { 2 * (v - n) + 1 })
        .collect();

    let mut keys: Vec<(usize, usize, usize, usize, usize)> = (0..2 * n)
        .map(|v| {
            let (kind, time) = if v < n { (0, v) } else { (1, v - n) };
            let phase = time % t;
            let cycle = time / t;
            let mirror = t - 1 - phase;
            let level = phase.min(mirror);
            let side = usize::from(phase > mirror);
            (level, cycle, side, kind, v)
        })
        .collect();
    keys.sort_unstable();
    let mut folded = vec![0; 2 * n];
    for (pos, key) in keys.iter().enumerate() {
        folded[key.4] = pos;
    }

    let bandwidth = |perm: &[usize]| {
        let mut bw = 0usize;
        sys.for_each_lower(|i, j, _| bw = bw.max(perm[i].abs_diff(perm[j])));
        bw
    };
    let bw_i = bandwidth(&interleaved);
    let bw_f = bandwidth(&folded);
    if bw_f < bw_i {
        (folded, bw_f)
    } else {
        (interleaved, bw_i)
    }
}

/// Banded LDLᵀ factorization of a batch system on a bandwidth-reducing
/// permutation.
struct PermutedFactor {
    perm: Vec<usize>,
    factors: crate::banded::LdlFactors,
}

impl PermutedFactor {
    fn new(sys: &BatchSystem) -> Result<Self> {
        let (perm, bw) = batch_ordering(sys);
        let mut a = BandedSymMatrix::zeros(sys.dim(), bw);
        sys.for_each_lower(|i, j, v| a.set(perm[i], perm[j], v));
        let factors = sdf_factorize(&a)?;
        Ok(Self { perm, factors })
    }

    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut permuted = vec![0.0; rhs.len()];
        for (v, &pos) in self.perm.iter().enumerate() {
            permuted[pos] = rhs[v];
        }
        let xp = banded_solve(&self.factors, &permuted)?;
        Ok(self.perm.iter().map(|&pos| xp[pos]).collect())
    }
}

/// Solves a batch system through a banded LDLᵀ on a bandwidth-reducing
/// permutation. Returns `x` in the natural ordering.
pub fn solve_batch_system(sys: &BatchSystem) -> Result<Vec<f64>> {
    PermutedFactor::new(sys)?.solve(&sys.b)
}

/// Moves the seasonal mean into the trend. Along the level-exchange
/// direction the ridged optimum is exactly the zero-mean seasonal.
fn recenter(x: &mut [f64]) {
    let n = x.len() / 2;
    let mean = x[n..].iter().sum::<f64>() / n as f64;
    x[..n].iter_mut().for_each(|t| *t += mean);
    x[n..].iter_mut().for_each(|s| *s -= mean);
}

/// Relative round-off budget that sets the stabilizing ridge.
const STABILIZE_ULPS: f64 = 1024.0 * f64::EPSILON;
const REFINE_STEPS: usize = 12;

/// Solves the ridged batch system robustly.
///
/// Floored IRLS weights make the entries many orders of magnitude larger
/// than the ridge, so round-off in the factorization can exceed the only
/// eigenvalue that the ridge supplies. The factorization is then taken with
/// a larger stabilizing ridge and the solution is refined against the true
/// system, re-centering the seasonal after every step.
fn solve_ridged(y: &[f64], params: &BatchParams, weights: &IrlsWeights) -> Result<Vec<f64>> {
    let build = |ridge| {
        build_batch_system(
            y,
            params.period,
            weights,
            params.lambda1,
            params.lambda2,
            ridge,
        )
    };
    let sys = build(params.ridge)?;
    let scale = sys.inf_norm();
    let mut ridge = params.ridge.max(STABILIZE_ULPS * scale);
    if ridge == params.ridge {
        match PermutedFactor::new(&sys) {
            Ok(f) => return f.solve(&sys.b),
            Err(Error::NonPositivePivot { .. }) => ridge *= 100.0,
            Err(e) => return Err(e),
        }
    }
    let mut attempts = 0;
    let factor = loop {
        match PermutedFactor::new(&build(ridge)?) {
            Ok(f) => break f,
            Err(Error::NonPositivePivot { index, pivot }) if attempts < 4 => {
                log::debug!(
                    "pivot {pivot:e} at {index}; raising stabilizing ridge to {:e}",
                    ridge * 100.0
                );
                ridge *= 100.0;
                attempts += 1;
            }
            Err(e) => return Err(to_solver_failure(e)),
        }
    };
    log::trace!(
        "batch solve stabilized with ridge {ridge:e} (requested {:e})",
        params.ridge
    );
    let mut x = factor.solve(&sys.b)?;
    recenter(&mut x);
    let b_norm = sys
        .b
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut last = f64::INFINITY;
    for _ in 0..REFINE_STEPS {
        let r = operator_residual(y, &x, params, weights);
        let r_norm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if r_norm <= 1e-14 * b_norm || r_norm >= last {
            break;
        }
        last = r_norm;
        let dx = factor.solve(&r)?;
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        recenter(&mut x);
    }
    Ok(x)
}

/// `b − A·x` evaluated through the difference operators rather than the
/// assembled entries. Each weighted difference `p·Δτ` is bounded by 1/2, so
/// this stays accurate when floored weights make `A` huge and the entry-wise
/// product cancels catastrophically.
fn operator_residual(y: &[f64], x: &[f64], params: &BatchParams, w: &IrlsWeights) -> Vec<f64> {
    let n = y.len();
    let (tau, s) = x.split_at(n);
    let mut r = Vec::with_capacity(2 * n);
    r.extend((0..n).map(|t| y[t] - tau[t] - s[t]));
    r.extend_from_within(..n);
    for (k, pk) in w.p.iter().enumerate() {
        let g = params.lambda1 * pk * (tau[k + 1] - tau[k]);
        r[k + 1] -= g;
        r[k] += g;
    }
    for (k, qk) in w.q.iter().enumerate() {
        let g = params.lambda2 * qk * (tau[k + 2] - 2.0 * tau[k + 1] + tau[k]);
        r[k + 2] -= g;
        r[k + 1] += 2.0 * g;
        r[k] -= g;
    }
    let t = params.period;
    for k in t..n {
        let g = s[k] - s[k - t];
        r[n + k] -= g;
        r[n + k - t] += g;
    }
    for k in 0..n {
        r[n + k] -= params.ridge * s[k];
    }
    r
}

/// Hyper-parameters of the batch IRLS solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchParams {
    pub period: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub iterations: usize,
    pub ridge: f64,
    pub weight_floor: f64,
    pub early_exit: Option<f64>,
}

impl BatchParams {
    /// Parameters for a series of length `n` under `cfg`.
    pub fn from_config(cfg: &Config, n: usize) -> Self {
        Self {
            period: cfg.period,
            lambda1: cfg.lambda1,
            lambda2: cfg.lambda2,
            iterations: cfg.max_iters,
            ridge: cfg.ridge_for(n),
            weight_floor: cfg.weight_floor,
            early_exit: cfg.early_exit,
        }
    }
}

/// Trend, seasonal and residual series of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<f64>,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.trend.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trend.is_empty()
    }

    fn from_solution(y: &[f64], x: &[f64]) -> Self {
        let n = y.len();
        let trend = x[..n].to_vec();
        let seasonal = x[n..].to_vec();
        let residual = y
            .iter()
            .zip(trend.iter().zip(&seasonal))
            .map(|(&v, (&t, &s))| exact_residual(v, t + s))
            .collect();
        Self {
            trend,
            seasonal,
            residual,
        }
    }
}

/// Smoothed absolute value majorized by the IRLS quadratic with floor `eps`.
#[inline]
fn smoothed_abs(d: f64, eps: f64) -> f64 {
    let a = d.abs();
    if a >= eps {
        a
    } else {
        d * d / (2.0 * eps) + eps / 2.0
    }
}

fn fit_terms(y: &[f64], trend: &[f64], seasonal: &[f64], period: usize, ridge: f64) -> f64 {
    let fit: f64 = y
        .iter()
        .zip(trend.iter().zip(seasonal))
        .map(|(&v, (&t, &s))| (t + s - v).powi(2))
        .sum();
    let season: f64 = (period..y.len())
        .map(|t| (seasonal[t] - seasonal[t - period]).powi(2))
        .sum();
    let anchor: f64 = seasonal.iter().map(|s| s * s).sum();
    fit + season + ridge * anchor
}

/// Batch objective with floor-smoothed absolute values plus the seasonal
/// ridge. IRLS never increases this quantity.
pub fn batch_objective(y: &[f64], trend: &[f64], seasonal: &[f64], params: &BatchParams) -> f64 {
    let eps = params.weight_floor;
    let l1: f64 = trend
        .windows(2)
        .map(|w| smoothed_abs(w[1] - w[0], eps))
        .sum();
    let l2: f64 = trend
        .windows(3)
        .map(|w| smoothed_abs(w[2] - 2.0 * w[1] + w[0], eps))
        .sum();
    fit_terms(y, trend, seasonal, params.period, params.ridge)
        + params.lambda1 * l1
        + params.lambda2 * l2
}

/// Reweighted objective with explicit weights:
/// `Σ p·d² + 1/(4p)` in place of each absolute difference.
pub fn auxiliary_objective(
    y: &[f64],
    trend: &[f64],
    seasonal: &[f64],
    w: &IrlsWeights,
    params: &BatchParams,
) -> f64 {
    let l1: f64 = trend
        .windows(2)
        .zip(&w.p)
        .map(|(t, &p)| p * (t[1] - t[0]).powi(2) + 0.25 / p)
        .sum();
    let l2: f64 = trend
        .windows(3)
        .zip(&w.q)
        .map(|(t, &q)| q * (t[2] - 2.0 * t[1] + t[0]).powi(2) + 0.25 / q)
        .sum();
    fit_terms(y, trend, seasonal, params.period, params.ridge)
        + params.lambda1 * l1
        + params.lambda2 * l2
}

fn to_solver_failure(e: Error) -> Error {
    match e {
        Error::NonPositivePivot { index, pivot } => {
            Error::SolverFailure(format!("non-positive pivot {pivot:e} at row {index}"))
        }
        other => other,
    }
}

/// Batch joint seasonal-trend decomposition by IRLS, starting from unit
/// weights and running `params.iterations` solves.
pub fn joint_stl(y: &[f64], params: &BatchParams) -> Result<Decomposition> {
    joint_stl_traced(y, params).map(|(d, _)| d)
}

/// [`joint_stl`] that also returns [`batch_objective`] after every iteration.
pub fn joint_stl_traced(y: &[f64], params: &BatchParams) -> Result<(Decomposition, Vec<f64>)> {
    let n = y.len();
    if params.period < 2 || n < 2 * params.period {
        return Err(Error::InvalidInput(format!(
            "joint_stl needs at least 2T points (N = {n}, T = {})",
            params.period
        )));
    }
    if params.iterations == 0 {
        return Err(Error::InvalidInput("at least one iteration".into()));
    }
    if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    let mut weights = IrlsWeights::ones(n);
    let mut trace = Vec::with_capacity(params.iterations);
    let mut x: Vec<f64> = Vec::new();
    for _ in 0..params.iterations {
        let next = solve_ridged(y, params, &weights).map_err(to_solver_failure)?;
        let (trend, seasonal) = next.split_at(n);
        trace.push(batch_objective(y, trend, seasonal, params));
        weights = IrlsWeights::from_trend(trend, params.weight_floor);
        let converged = match params.early_exit {
            Some(tol) if !x.is_empty() => {
                let delta: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).powi(2)).sum();
                let norm: f64 = next.iter().map(|v| v * v).sum();
                delta.sqrt() <= tol * norm.sqrt().max(1.0)
            }
            _ => false,
        };
        x = next;
        if converged {
            break;
        }
    }
    Ok((Decomposition::from_solution(y, &x), trace))
}

/// Interleaved online system `x = {τ_0, s_0, …, τ_{M−1}, s_{M−1}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineSystem {
    pub a: BandedSymMatrix,
    pub b: Vec<f64>,
}

#[inline]
fn window_p(p: &[f64], j: usize, m: usize) -> f64 {
    if j >= 1 && j < m {
        p[j]
    } else {
        0.0
    }
}

#[inline]
fn window_q(q: &[f64], j: usize, m: usize) -> f64 {
    if j >= 2 && j < m {
        q[j]
    } else {
        0.0
    }
}

/// Builds the online normal equations for a window of `M` points.
///
/// `u[j]` is the seasonal-buffer value read when point `j` arrived. `p[j]`
/// weights the difference ending at `j` and `q[j]` the second difference
/// ending at `j`; `p[0]`, `q[0]` and `q[1]` belong to no row and are ignored.
pub fn build_online_system(
    y: &[f64],
    u: &[f64],
    p: &[f64],
    q: &[f64],
    lambda1: f64,
    lambda2: f64,
) -> Result<OnlineSystem> {
    let m = y.len();
    if m == 0 {
        return Err(Error::InvalidInput("empty window".into()));
    }
    for len in [u.len(), p.len(), q.len()] {
        if len != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: len,
            });
        }
    }
    let mut a = BandedSymMatrix::zeros(2 * m, ONLINE_HALF_BANDWIDTH);
    let mut b = vec![0.0; 2 * m];
    for j in 0..m {
        let (d, o1, o2) = trend_entries(
            lambda1,
            lambda2,
            [window_p(p, j, m), window_p(p, j + 1, m)],
            [
                window_q(q, j, m),
                window_q(q, j + 1, m),
                window_q(q, j + 2, m),
            ],
        );
        a.set(2 * j, 2 * j, d);
        a.set(2 * j + 1, 2 * j, 1.0);
        a.set(2 * j + 1, 2 * j + 1, 2.0);
        if j >= 1 {
            a.set(2 * j, 2 * j - 2, o1);
        }
        if j >= 2 {
            a.set(2 * j, 2 * j - 4, o2);
        }
        b[2 * j] = y[j];
        b[2 * j + 1] = y[j] + u[j];
    }
    Ok(OnlineSystem { a, b })
}

/// Inputs of the growth block for the newest window point.
///
/// Arrays hold the values for window points `newest−2`, `newest−1` and
/// `newest`; entries for points before the window start are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailContext {
    /// Window index of the newest point.
    pub newest: u64,
    pub y: [f64; 3],
    pub u: [f64; 3],
    pub p: [f64; 3],
    pub q: [f64; 3],
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Bottom-right 6×6 block of the grown online system and the matching raw
/// right-hand side entries.
///
/// Points before the window start appear as decoupled identity rows with a
/// zero right-hand side. `A*` depends on the weights only; the seasonal
/// buffer enters through `b*`.
pub fn tail_block(ctx: &TailContext) -> ([[f64; GROW]; GROW], [f64; GROW]) {
    let mut a = [[0.0; GROW]; GROW];
    let mut b = [0.0; GROW];
    let newest = ctx.newest as i64;
    let m = newest + 1;
    let slot = |j: i64| (j - (newest - 2)) as usize;
    let pw = |j: i64| {
        if j >= 1 && j < m {
            ctx.p[slot(j)]
        } else {
            0.0
        }
    };
    let qw = |j: i64| {
        if j >= 2 && j < m {
            ctx.q[slot(j)]
        } else {
            0.0
        }
    };
    for k in 0..3usize {
        let j = newest - 2 + k as i64;
        let (r_t, r_s) = (2 * k, 2 * k + 1);
        if j < 0 {
            a[r_t][r_t] = 1.0;
            a[r_s][r_s] = 1.0;
            continue;
        }
        let (d, o1, o2) = trend_entries(
            ctx.lambda1,
            ctx.lambda2,
            [pw(j), pw(j + 1)],
            [qw(j), qw(j + 1), qw(j + 2)],
        );
        a[r_t][r_t] = d;
        a[r_s][r_t] = 1.0;
        a[r_t][r_s] = 1.0;
        a[r_s][r_s] = 2.0;
        if k >= 1 && j >= 1 {
            a[r_t][r_t - 2] = o1;
            a[r_t - 2][r_t] = o1;
        }
        if k >= 2 && j >= 2 {
            a[r_t][r_t - 4] = o2;
            a[r_t - 4][r_t] = o2;
        }
        b[r_t] = ctx.y[k];
        b[r_s] = ctx.y[k] + ctx.u[k];
    }
    (a, b)
}

/// Output of the batch initialization shared by the online engine and the
/// reference recursion.
#[derive(Debug, Clone)]
pub(crate) struct InitSeed {
    pub decomposition: Decomposition,
    /// One period of seasonal values indexed by `t mod T`.
    pub buffer: Vec<f64>,
    /// First global index of the replayed warm window.
    pub warm_start: usize,
    /// Trend values preceding the warm window: `[τ_{w−1}, τ_{w−2}]`.
    pub tau_seed: [f64; 2],
}

pub(crate) fn init_seed(y_init: &[f64], cfg: &ValidatedConfig) -> Result<InitSeed> {
    let t0 = cfg.init_len;
    if y_init.len() != t0 {
        return Err(Error::InvalidInput(format!(
            "expected {t0} initialization points, got {}",
            y_init.len()
        )));
    }
    let decomposition = joint_stl(y_init, &BatchParams::from_config(cfg, t0))?;
    let period = cfg.period;
    let mut buffer = vec![0.0; period];
    for g in (t0 - period)..t0 {
        buffer[g % period] = decomposition.seasonal[g];
    }
    let warm_start = t0 - WARM_POINTS.min(t0);
    let at = |k: usize| decomposition.trend[k];
    let tau_seed = [
        at(warm_start.saturating_sub(1)),
        at(warm_start.saturating_sub(2)),
    ];
    Ok(InitSeed {
        decomposition,
        buffer,
        warm_start,
        tau_seed,
    })
}

/// Reference recursion for the streaming problem: at every point and every
/// IRLS iteration the whole window system is rebuilt and solved from
/// scratch. Work per point grows linearly with the window.
#[derive(Debug, Clone)]
pub struct ModifiedJointStl {
    cfg: ValidatedConfig,
    buffer: Vec<f64>,
    y: Vec<f64>,
    u: Vec<f64>,
    /// Per-iteration weight histories over the window.
    p: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    /// Per-iteration `[τ_{t−1}, τ_{t−2}]` as emitted by that iteration.
    last_tau: Vec<[f64; 2]>,
    next_index: usize,
    last_ops: u64,
}

impl ModifiedJointStl {
    pub fn new(y_init: &[f64], cfg: &Config) -> Result<Self> {
        let cfg = cfg.validate()?;
        let seed = init_seed(y_init, &cfg)?;
        let iters = cfg.max_iters;
        let mut this = Self {
            cfg,
            buffer: seed.buffer,
            y: Vec::new(),
            u: Vec::new(),
            p: vec![Vec::new(); iters],
            q: vec![Vec::new(); iters],
            last_tau: vec![seed.tau_seed; iters],
            next_index: seed.warm_start,
            last_ops: 0,
        };
        for &v in &y_init[seed.warm_start..] {
            this.advance(v, false)?;
        }
        Ok(this)
    }

    /// Window length (replayed warm points included).
    pub fn window_len(&self) -> usize {
        self.y.len()
    }

    /// Factorization operations spent on the last point.
    pub fn last_ops(&self) -> u64 {
        self.last_ops
    }

    pub fn seasonal_buffer(&self) -> &[f64] {
        &self.buffer
    }

    pub fn push(&mut self, value: f64) -> Result<DecompPoint> {
        if !value.is_finite() {
            return Err(Error::NonFinite {
                index: self.next_index,
                value,
            });
        }
        self.advance(value, true)
    }

    fn advance(&mut self, value: f64, online: bool) -> Result<DecompPoint> {
        let period = self.cfg.period;
        let slot = self.next_index % period;
        self.y.push(value);
        self.u.push(self.buffer[slot]);
        let m = self.y.len();
        let floor = self.cfg.weight_floor;
        let (mut pending_p, mut pending_q) = (1.0, 1.0);
        let (mut trend, mut seasonal) = (0.0, 0.0);
        let mut ops = 0;
        for i in 0..self.cfg.max_iters {
            self.p[i].push(pending_p);
            self.q[i].push(pending_q);
            let sys = build_online_system(
                &self.y,
                &self.u,
                &self.p[i],
                &self.q[i],
                self.cfg.lambda1,
                self.cfg.lambda2,
            )?;
            let f = sdf_factorize(&sys.a).map_err(to_solver_failure)?;
            let x = banded_solve(&f, &sys.b)?;
            ops += f.ops();
            trend = x[2 * m - 2];
            seasonal = x[2 * m - 1];
            let [prev, prev2] = self.last_tau[i];
            pending_p = irls_weight_p(trend, prev, floor);
            pending_q = irls_weight_q(trend, prev, prev2, floor);
            self.last_tau[i] = [trend, prev];
        }
        if online {
            self.buffer[slot] = seasonal;
        }
        self.next_index += 1;
        self.last_ops = ops;
        Ok(DecompPoint::from_components(value, trend, seasonal, 0))
    }
}

/// Runs [`ModifiedJointStl`] over `stream` after initializing on `y_init`.
pub fn modified_joint_stl(
    y_init: &[f64],
    stream: &[f64],
    cfg: &Config,
) -> Result<Vec<DecompPoint>> {
    let mut engine = ModifiedJointStl::new(y_init, cfg)?;
    stream.iter().map(|&v| engine.push(v)).collect()
}
