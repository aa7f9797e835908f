//! Exhaustive and incomplete searches over `(type, k, j)` triplets.
//!
//! Every mode evaluates a cheap tier for all renumberings of a configuration
//! at once and, where the mode has one, enters the full tier only for
//! triplets whose cheap value can still beat the current top-K threshold.
//! The cheap values are lower bounds of the full values when all weights are
//! at least one, so the complete modes return exactly what an unpruned scan
//! returns.

mod bound;
mod eval;
mod manifest;
mod stats;
mod topk;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::distances::DEFAULT_GAMMA;
use crate::error::{Error, Result};
use crate::goal::GoalPolygon;
use crate::templates::{enumerate_configurations, Configuration, IsohedralType};

pub use bound::{lower_bound, BoundKind, BoundProvider};
pub use manifest::{Manifest, ManifestCandidate, ManifestParams};
pub use stats::{SearchStats, TypeStats};
pub use topk::{Candidate, TopK, DEFAULT_CAPACITY};

use eval::{naive_config, process_config, Context, Sink};

/// Incomplete-search gate factor.
pub const DEFAULT_ALPHA: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Euclidean,
    We,
    Ad,
    Wad,
    Gad1,
    Gad2,
}

impl Mode {
    pub const ALL: [Mode; 6] = [Mode::Euclidean, Mode::We, Mode::Ad, Mode::Wad, Mode::Gad1, Mode::Gad2];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Euclidean => "euclidean",
            Mode::We => "we",
            Mode::Ad => "ad",
            Mode::Wad => "wad",
            Mode::Gad1 => "gad1",
            Mode::Gad2 => "gad2",
        }
    }

    pub fn is_gad(self) -> bool {
        matches!(self, Mode::Gad1 | Mode::Gad2)
    }

    /// Whether the mode has a separate full tier behind the cheap tier.
    pub fn is_two_tier(self) -> bool {
        matches!(self, Mode::We | Mode::Wad | Mode::Gad1 | Mode::Gad2)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown mode {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct SearchParams {
    /// Chord length factor for the GAD edge set.
    pub gamma: f64,
    /// Incomplete-search gate factor.
    pub alpha: f64,
    pub topk: usize,
    pub types: Vec<IsohedralType>,
    /// `false` switches the GAD modes to the incomplete gate; other modes
    /// are always complete.
    pub complete: bool,
    /// `0` uses the ambient rayon pool, `1` the sequential path.
    pub workers: usize,
    pub bound: BoundProvider,
    /// GAD2 admits boundary-crossing chords.
    pub gad2_crossing: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            alpha: DEFAULT_ALPHA,
            topk: DEFAULT_CAPACITY,
            types: IsohedralType::ALL.to_vec(),
            complete: true,
            workers: 0,
            bound: BoundProvider::none(),
            gad2_crossing: false,
        }
    }
}

impl SearchParams {
    pub fn validate(&self, mode: Mode) -> Result<()> {
        if mode.is_gad() && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.topk == 0 {
            return Err(Error::InvalidParameter("topk must be at least 1".into()));
        }
        if self.types.is_empty() {
            return Err(Error::InvalidParameter("no isohedral types selected".into()));
        }
        Ok(())
    }
}

fn configurations(ty: IsohedralType, n: usize) -> Result<Vec<Configuration>> {
    match enumerate_configurations(ty, n) {
        Ok(it) => Ok(it.collect()),
        Err(Error::EmptyConfigurationSet { .. }) => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

fn unique_types(types: &[IsohedralType]) -> Vec<IsohedralType> {
    let mut out: Vec<IsohedralType> = Vec::new();
    for &t in types {
        if !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

fn scan_sequential(ctx: &Context, configs: &[Configuration], top: TopK, stats: &mut SearchStats) -> Result<TopK> {
    let unbounded = || f64::INFINITY;
    let mut sink = Sink::new(top, &unbounded);
    for c in configs {
        process_config(ctx, c, &mut sink)?;
    }
    stats.rejected_nonsimple += sink.rejected;
    stats.record(configs[0].ty().name(), &sink.stats);
    Ok(sink.local)
}

#[cfg(feature = "parallel")]
fn scan_parallel(ctx: &Context, configs: &[Configuration], top: TopK, stats: &mut SearchStats) -> Result<TopK> {
    use std::sync::atomic::{AtomicU64, Ordering};
    use std::sync::Mutex;

    use rayon::prelude::*;

    let capacity = top.capacity();
    let threads = rayon::current_num_threads().max(1);
    let chunk = (configs.len() / (threads * 16)).clamp(1, 256);
    let bits = AtomicU64::new(top.threshold().to_bits());
    let shared = Mutex::new((top, SearchStats::default()));
    let name = configs[0].ty().name();

    configs.par_chunks(chunk).try_for_each(|part| -> Result<()> {
        let snapshot = || f64::from_bits(bits.load(Ordering::Acquire));
        let mut sink = Sink::new(TopK::new(capacity), &snapshot);
        for c in part {
            process_config(ctx, c, &mut sink)?;
        }
        let mut guard = shared.lock().expect("search state poisoned");
        guard.0.merge(sink.local);
        guard.1.rejected_nonsimple += sink.rejected;
        guard.1.record(name, &sink.stats);
        bits.store(guard.0.threshold().to_bits(), Ordering::Release);
        Ok(())
    })?;

    let (top, part_stats) = shared.into_inner().expect("search state poisoned");
    stats.absorb(part_stats);
    Ok(top)
}

fn scan(ctx: &Context, configs: &[Configuration], top: TopK, stats: &mut SearchStats, workers: usize) -> Result<TopK> {
    #[cfg(feature = "parallel")]
    if workers != 1 {
        return scan_parallel(ctx, configs, top, stats);
    }
    let _ = workers;
    scan_sequential(ctx, configs, top, stats)
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    #[cfg(feature = "parallel")]
    if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot start {workers} workers: {e}")))?;
        return pool.install(f);
    }
    let _ = workers;
    f()
}

/// Pruned exhaustive search (incomplete for GAD modes when
/// `params.complete` is false).
pub fn run_search(goal: &GoalPolygon, mode: Mode, params: &SearchParams) -> Result<(TopK, SearchStats)> {
    params.validate(mode)?;
    let start = Instant::now();
    let ctx = Context::new(goal, mode, params)?;
    let n = goal.n();
    with_pool(params.workers, || {
        let mut top = TopK::new(params.topk);
        let mut stats = SearchStats::default();
        let mut any = false;
        for ty in unique_types(&params.types) {
            let configs = configurations(ty, n)?;
            if configs.is_empty() {
                continue;
            }
            any = true;
            top = scan(&ctx, &configs, top, &mut stats, params.workers)?;
        }
        if !any {
            return Err(Error::EmptySearch);
        }
        stats.wall_time = start.elapsed();
        Ok((top, stats))
    })
}

/// Reference scan: the full-tier value of every triplet, no pruning.
pub fn naive_search(goal: &GoalPolygon, mode: Mode, params: &SearchParams) -> Result<(TopK, SearchStats)> {
    params.validate(mode)?;
    let start = Instant::now();
    let ctx = Context::new(goal, mode, params)?;
    let unbounded = || f64::INFINITY;
    let mut sink = Sink::new(TopK::new(params.topk), &unbounded);
    let mut stats = SearchStats::default();
    let mut any = false;
    for ty in unique_types(&params.types) {
        let configs = configurations(ty, goal.n())?;
        if configs.is_empty() {
            continue;
        }
        any = true;
        for c in &configs {
            naive_config(&ctx, goal, c, &mut sink)?;
        }
        stats.record(ty.name(), &std::mem::take(&mut sink.stats));
    }
    if !any {
        return Err(Error::EmptySearch);
    }
    stats.rejected_nonsimple = sink.rejected;
    stats.wall_time = start.elapsed();
    Ok((sink.local, stats))
}

/// Checks that two rankings agree: equal length, rank-wise evals within
/// `tol`, and the same triplets except among entries tied (within `tol`)
/// with the last retained eval, where either tie may have made the cut.
pub fn compare_rankings(a: &TopK, b: &TopK, tol: f64) -> std::result::Result<(), String> {
    let (ea, eb) = (a.entries(), b.entries());
    if ea.len() != eb.len() {
        return Err(format!("ranking lengths differ: {} vs {}", ea.len(), eb.len()));
    }
    for (r, (x, y)) in ea.iter().zip(eb).enumerate() {
        if (x.eval - y.eval).abs() > tol {
            return Err(format!("rank {}: eval {} vs {}", r + 1, x.eval, y.eval));
        }
    }
    let cut = match (ea.last(), eb.last()) {
        (Some(x), Some(y)) => x.eval.min(y.eval) - tol,
        _ => return Ok(()),
    };
    let full = a.is_full() && b.is_full();
    for (p, q) in [(ea, eb), (eb, ea)] {
        for x in p {
            if full && x.eval >= cut {
                continue;
            }
            let found = q.iter().any(|y| y.triplet() == x.triplet() && (y.eval - x.eval).abs() <= tol);
            if !found {
                return Err(format!("{} k={:?} j={} (eval {}) missing from the other ranking", x.ty, x.k, x.j, x.eval));
            }
        }
    }
    Ok(())
}

/// The incomplete-search gate multiplier `α · |E_c| / |E_0|` (1 for
/// complete searches and non-GAD modes).
pub fn gate_ratio(goal: &GoalPolygon, mode: Mode, params: &SearchParams) -> Result<f64> {
    Ok(Context::new(goal, mode, params)?.ratio())
}

/// Cheap-tier values of all renumberings of one configuration, in `j` order.
/// Euclidean modes give the Euclidean value; the others give the
/// adjacent-difference value.
pub fn cheap_tier_values(goal: &GoalPolygon, mode: Mode, c: &Configuration) -> Result<Vec<f64>> {
    let params = SearchParams::default();
    let ctx = Context::new(goal, mode, &params)?;
    eval::cheap_values(&ctx, c)
}
