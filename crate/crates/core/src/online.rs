//! The streaming decomposer: batch initialization, constant-work updates
//! chained across IRLS iterations, the seasonal buffer and the phase-shift
//! search.

use serde::{Deserialize, Serialize};

use crate::anomaly::NSigmaStats;
use crate::banded::{FactorExtension, OnlineFactorState};
use crate::batch::{
    init_seed, irls_weight_p, irls_weight_q, tail_block, Decomposition, TailContext,
};
use crate::config::{Config, DecompPoint, ValidatedConfig};
use crate::error::{Error, Result};

/// Snapshot format version written by [`DecomposerState::snapshot`].
pub const SNAPSHOT_VERSION: u32 = 1;

/// One period of seasonal values plus the accumulated phase offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalBuffer {
    v: Vec<f64>,
    /// Kept in `[0, T)`.
    phase_offset: usize,
}

impl SeasonalBuffer {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidInput("empty seasonal buffer".into()));
        }
        Ok(Self { v, phase_offset: 0 })
    }

    pub fn period(&self) -> usize {
        self.v.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn phase_offset(&self) -> usize {
        self.phase_offset
    }

    /// Slot of global index `t` displaced by `delta`.
    pub fn index(&self, t: u64, delta: i64) -> usize {
        let period = self.v.len() as i64;
        let t = (t % period as u64) as i64;
        (t + self.phase_offset as i64 + delta).rem_euclid(period) as usize
    }

    pub fn get(&self, t: u64, delta: i64) -> f64 {
        self.v[self.index(t, delta)]
    }

    pub fn set(&mut self, t: u64, value: f64) {
        let i = self.index(t, 0);
        self.v[i] = value;
    }

    /// Folds a selected phase shift into the offset.
    pub fn shift(&mut self, delta: i64) {
        let period = self.v.len() as i64;
        self.phase_offset = (self.phase_offset as i64 + delta).rem_euclid(period) as usize;
    }
}

/// Per-iteration recursion state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationState {
    pub factor: OnlineFactorState,
    /// Last two trend estimates of this iteration, relative to the
    /// state's reference level.
    pub last_tau: f64,
    pub last_tau2: f64,
    /// `(p, q)` for the three newest window points, oldest first.
    pub recent_pq: [(f64, f64); 3],
}

impl IterationState {
    fn seeded(tau: [f64; 2]) -> Self {
        Self {
            factor: OnlineFactorState::empty(),
            last_tau: tau[0],
            last_tau2: tau[1],
            recent_pq: [(1.0, 1.0); 3],
        }
    }
}

/// Result of one streaming update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Update {
    pub point: DecompPoint,
    /// Score of the emitted residual against the statistics before this
    /// point; `None` only when no residual has been seen yet.
    pub score: Option<f64>,
    pub is_anomaly: bool,
    /// Whether the phase-shift search ran.
    pub searched: bool,
    /// Factorization and substitution operations spent.
    pub ops: u64,
}

/// Newest three observations and seasonal reads, oldest first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Recent {
    y: [f64; 3],
    u: [f64; 3],
}

impl Recent {
    fn pushed(&self, y: f64, u: f64) -> Self {
        Self {
            y: [self.y[1], self.y[2], y],
            u: [self.u[1], self.u[2], u],
        }
    }
}

/// Largest ratio of the winning to the unshifted residual for a committed
/// phase displacement.
const SHIFT_GAIN: f64 = 0.25;

/// Complete streaming state of one series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecomposerState {
    cfg: ValidatedConfig,
    iterations: Vec<IterationState>,
    seasonal: SeasonalBuffer,
    /// Points processed, initialization included.
    t_counter: u64,
    nsigma: NSigmaStats,
    recent: Recent,
    last_trend: f64,
    /// Reference level subtracted from observations before they enter the
    /// recursion. The problem is translation-equivariant in the trend, and
    /// working near zero keeps round-off from scaling with the data level.
    level: f64,
    #[serde(skip)]
    scratch: Vec<IterationState>,
}

// The scratch buffer is reusable storage, not state.
impl PartialEq for DecomposerState {
    fn eq(&self, other: &Self) -> bool {
        self.cfg == other.cfg
            && self.iterations == other.iterations
            && self.seasonal == other.seasonal
            && self.t_counter == other.t_counter
            && self.nsigma == other.nsigma
            && self.recent == other.recent
            && self.last_trend == other.last_trend
            && self.level == other.level
    }
}

struct Candidate {
    point: DecompPoint,
    states: Vec<IterationState>,
    ops: u64,
}

struct PointRun {
    trend: f64,
    seasonal: f64,
    ops: u64,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    state: DecomposerState,
}

impl DecomposerState {
    /// Batch-decomposes `y_init` and seeds the streaming state.
    pub fn initialize(y_init: &[f64], cfg: &Config) -> Result<Self> {
        Self::initialize_with_init(y_init, cfg).map(|(s, _)| s)
    }

    /// [`DecomposerState::initialize`] that also returns the batch
    /// decomposition of the init window.
    pub fn initialize_with_init(y_init: &[f64], cfg: &Config) -> Result<(Self, Decomposition)> {
        let cfg = cfg.validate()?;
        if let Some((index, &value)) = y_init.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        let seed = init_seed(y_init, &cfg)?;
        let level = seed.tau_seed[0];
        let mut state = Self {
            cfg,
            iterations: vec![
                IterationState::seeded(seed.tau_seed.map(|v| v - level));
                cfg.max_iters
            ],
            seasonal: SeasonalBuffer::new(seed.buffer)?,
            t_counter: seed.warm_start as u64,
            nsigma: NSigmaStats::from_history(&seed.decomposition.residual),
            recent: Recent {
                y: [0.0; 3],
                u: [0.0; 3],
            },
            last_trend: seed.tau_seed[0],
            level,
            scratch: Vec::new(),
        };
        for &y in &y_init[seed.warm_start..] {
            let recent = state.pushed(y, 0);
            let mut work = state.iterations.clone();
            let run = state.run_point(&mut work, &recent, None)?;
            state.iterations = work;
            state.recent = recent;
            state.last_trend = run.trend;
            state.t_counter += 1;
        }
        Ok((state, seed.decomposition))
    }

    pub fn config(&self) -> &ValidatedConfig {
        &self.cfg
    }

    pub fn seasonal(&self) -> &SeasonalBuffer {
        &self.seasonal
    }

    pub fn iterations(&self) -> &[IterationState] {
        &self.iterations
    }

    pub fn nsigma(&self) -> &NSigmaStats {
        &self.nsigma
    }

    /// Points processed so far, initialization included.
    pub fn t_counter(&self) -> u64 {
        self.t_counter
    }

    /// Trend emitted for the most recent point.
    pub fn last_trend(&self) -> f64 {
        self.last_trend
    }

    /// Decomposes the next observation.
    pub fn update(&mut self, y: f64) -> Result<DecompPoint> {
        self.update_detailed(y).map(|u| u.point)
    }

    /// [`DecomposerState::update`] with the anomaly score and work counters.
    pub fn update_detailed(&mut self, y: f64) -> Result<Update> {
        if !y.is_finite() {
            return Err(Error::NonFinite {
                index: self.t_counter as usize,
                value: y,
            });
        }
        let t = self.t_counter;
        let recent = self.pushed(y, 0);
        let mut work = std::mem::take(&mut self.scratch);
        work.clone_from(&self.iterations);
        let mut ext0 = None;
        let run = match self.run_point(&mut work, &recent, Some(&mut ext0)) {
            Ok(run) => run,
            Err(e) => {
                self.scratch = work;
                return Err(e);
            }
        };
        let mut point = DecompPoint::from_components(y, run.trend, run.seasonal, 0);
        let mut ops = run.ops;
        let mut searched = false;
        let flagged = self
            .nsigma
            .score(point.residual)
            .is_some_and(|s| s > self.cfg.nsigma);
        if flagged && self.cfg.shift_window > 0 {
            let ext0 = ext0.expect("plain pass computed the first extension");
            let best = self.search(y, &ext0, (&work, point))?;
            searched = true;
            ops += best.ops;
            // A displacement is committed only when it explains the
            // anomaly: the residual drops below the threshold and to at most
            // a quarter of the unshifted one. Otherwise trend breaks sitting
            // just above the threshold get "fixed" by a marginal Δ that then
            // misaligns the buffer.
            let explained = self
                .nsigma
                .score(best.point.residual)
                .is_some_and(|s| s <= self.cfg.nsigma)
                && best.point.residual.abs() <= SHIFT_GAIN * point.residual.abs();
            if best.point.shift != 0 && explained {
                work.copy_from_slice(&best.states);
                point = best.point;
            }
        }
        // Commit.
        let delta = point.shift;
        let recent = if delta == 0 {
            recent
        } else {
            self.pushed(y, delta)
        };
        self.seasonal.shift(delta);
        self.seasonal.set(t, point.seasonal);
        let score = self.nsigma.score(point.residual);
        self.nsigma.push(point.residual);
        self.scratch = std::mem::replace(&mut self.iterations, work);
        self.recent = recent;
        self.last_trend = point.trend;
        self.t_counter += 1;
        Ok(Update {
            point,
            score,
            is_anomaly: score.is_some_and(|s| s > self.cfg.nsigma),
            searched,
            ops,
        })
    }

    /// Tries every phase displacement in `[−H, H]` for observation `y` and
    /// returns `(Δ, iteration states of the winner, ops)`.
    ///
    /// `plain` holds the Δ = 0 outcome already computed. The first
    /// iteration's factorization extension does not depend on Δ and is
    /// shared by all candidates.
    pub fn evaluate_shift_candidates(
        &self,
        y: f64,
    ) -> Result<(i64, DecompPoint, Vec<IterationState>)> {
        let recent = self.pushed(y, 0);
        let mut work = self.iterations.clone();
        let mut ext0 = None;
        let run = self.run_point(&mut work, &recent, Some(&mut ext0))?;
        let plain = DecompPoint::from_components(y, run.trend, run.seasonal, 0);
        let ext0 = ext0.expect("plain pass computed the first extension");
        let best = self.search(y, &ext0, (&work, plain))?;
        Ok((best.point.shift, best.point, best.states))
    }

    fn search(
        &self,
        y: f64,
        ext0: &FactorExtension,
        plain: (&[IterationState], DecompPoint),
    ) -> Result<Candidate> {
        let t = self.t_counter;
        let h = self.cfg.shift_window as i64;
        let mut best = Candidate {
            point: plain.1,
            states: plain.0.to_vec(),
            ops: 0,
        };
        let mut cand = self.iterations.clone();
        for k in 1..=h {
            for delta in [-k, k] {
                cand.copy_from_slice(&self.iterations);
                let recent = self.pushed(y, delta);
                let run = self.run_point_shared(&mut cand, &recent, ext0)?;
                best.ops += run.ops;
                let p = DecompPoint::from_components(y, run.trend, run.seasonal, delta);
                if p.residual.abs() < best.point.residual.abs() {
                    best.point = p;
                    best.states.copy_from_slice(&cand);
                }
            }
        }
        if best.point.shift != 0 {
            log::debug!(
                "t = {t}: phase shift {} selected (|r| = {:e})",
                best.point.shift,
                best.point.residual.abs()
            );
        }
        Ok(best)
    }

    /// Recent window with `y` appended at buffer displacement `delta`.
    fn pushed(&self, y: f64, delta: i64) -> Recent {
        self.recent
            .pushed(y - self.level, self.seasonal.get(self.t_counter, delta))
    }

    fn tail_context(&self, it: &IterationState, recent: &Recent, pq: (f64, f64)) -> TailContext {
        let [_, a, b] = it.recent_pq;
        TailContext {
            newest: it.factor.rows_emitted() / 2,
            y: recent.y,
            u: recent.u,
            p: [a.0, b.0, pq.0],
            q: [a.1, b.1, pq.1],
            lambda1: self.cfg.lambda1,
            lambda2: self.cfg.lambda2,
        }
    }

    /// Runs all iterations for one point on `work`. When `ext0_out` is given
    /// the first iteration's extension is stored there.
    fn run_point(
        &self,
        work: &mut [IterationState],
        recent: &Recent,
        ext0_out: Option<&mut Option<FactorExtension>>,
    ) -> Result<PointRun> {
        let ctx = self.tail_context(&work[0], recent, (1.0, 1.0));
        let (a_star, _) = tail_block(&ctx);
        let ext0 = work[0].factor.extend(&a_star).map_err(solver_failure)?;
        let run = self.run_point_shared(work, recent, &ext0)?;
        if let Some(out) = ext0_out {
            *out = Some(ext0);
        }
        Ok(run)
    }

    fn run_point_shared(
        &self,
        work: &mut [IterationState],
        recent: &Recent,
        ext0: &FactorExtension,
    ) -> Result<PointRun> {
        let floor = self.cfg.weight_floor;
        let mut pq = (1.0, 1.0);
        let mut out = PointRun {
            trend: 0.0,
            seasonal: 0.0,
            ops: 0,
        };
        for (i, it) in work.iter_mut().enumerate() {
            let ctx = self.tail_context(it, recent, pq);
            let (a_star, b_star) = tail_block(&ctx);
            let step = if i == 0 {
                it.factor.substitute(ext0, &b_star)
            } else {
                let ext = it.factor.extend(&a_star).map_err(solver_failure)?;
                it.factor.substitute(&ext, &b_star)
            };
            out.ops += u64::from(step.ops);
            it.recent_pq = [it.recent_pq[1], it.recent_pq[2], pq];
            pq = (
                irls_weight_p(step.trend, it.last_tau, floor),
                irls_weight_q(step.trend, it.last_tau, it.last_tau2, floor),
            );
            it.last_tau2 = it.last_tau;
            it.last_tau = step.trend;
            out.trend = step.trend + self.level;
            out.seasonal = step.seasonal;
        }
        Ok(out)
    }

    /// Versioned JSON snapshot of the full state.
    pub fn snapshot(&self) -> Result<String> {
        serde_json::to_string(&SnapshotRef {
            version: SNAPSHOT_VERSION,
            state: self,
        })
        .map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn restore(json: &str) -> Result<Self> {
        let snap: Snapshot =
            serde_json::from_str(json).map_err(|e| Error::Snapshot(e.to_string()))?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported snapshot version {} (expected {SNAPSHOT_VERSION})",
                snap.version
            )));
        }
        let s = snap.state;
        if s.iterations.len() != s.cfg.max_iters || s.seasonal.period() != s.cfg.period {
            return Err(Error::Snapshot("state does not match its config".into()));
        }
        Ok(s)
    }
}

#[derive(Serialize)]
struct SnapshotRef<'a> {
    version: u32,
    state: &'a DecomposerState,
}

fn solver_failure(e: Error) -> Error {
    match e {
        Error::NonPositivePivot { index, pivot } => Error::SolverFailure(format!(
            "non-positive pivot {pivot:e} at window row {index}"
        )),
        other => other,
    }
}

/// Streaming front end: buffers the first `t₀` observations, initializes,
/// then decomposes every further point.
#[derive(Debug, Clone)]
pub struct OneShotStl {
    cfg: ValidatedConfig,
    pending: Vec<f64>,
    state: Option<DecomposerState>,
    init: Option<Decomposition>,
}

impl OneShotStl {
    pub fn new(cfg: &Config) -> Result<Self> {
        let cfg = cfg.validate()?;
        Ok(Self {
            cfg,
            pending: Vec::with_capacity(cfg.init_len),
            state: None,
            init: None,
        })
    }

    /// Resumes from an existing state.
    pub fn from_state(state: DecomposerState) -> Self {
        Self {
            cfg: *state.config(),
            pending: Vec::new(),
            state: Some(state),
            init: None,
        }
    }

    pub fn state(&self) -> Option<&DecomposerState> {
        self.state.as_ref()
    }

    pub fn into_state(self) -> Option<DecomposerState> {
        self.state
    }

    /// Batch decomposition of the init window, available right after the
    /// push that completed it.
    pub fn take_init(&mut self) -> Option<Decomposition> {
        self.init.take()
    }

    /// Decomposes `y` once initialized; returns `Err(NotInitialized)` before.
    pub fn update(&mut self, y: f64) -> Result<Update> {
        self.state
            .as_mut()
            .ok_or(Error::NotInitialized)?
            .update_detailed(y)
    }

    /// Feeds `y`, buffering it while the init window fills.
    pub fn push(&mut self, y: f64) -> Result<Option<Update>> {
        if self.state.is_some() {
            return self.update(y).map(Some);
        }
        if !y.is_finite() {
            return Err(Error::NonFinite {
                index: self.pending.len(),
                value: y,
            });
        }
        self.pending.push(y);
        if self.pending.len() == self.cfg.init_len {
            let (state, init) = DecomposerState::initialize_with_init(&self.pending, &self.cfg)?;
            self.state = Some(state);
            self.init = Some(init);
            self.pending = Vec::new();
        }
        Ok(None)
    }
}
