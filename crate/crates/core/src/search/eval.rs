//! Per-goal precomputation and per-configuration batched kernels that
//! evaluate all `n` renumberings at once.

use crate::distances::{build_ec, gram_ad, gram_gad, gram_wad, gram_we, EcVariant, GramMatrix};
use crate::error::{Error, Result};
use crate::geometry::{is_simple_polygon, unstack_coords, CoordVec};
use crate::goal::{reindex_coords, GoalPolygon, Renumbering};
use crate::linalg::{sym2_max_eig, EnvelopeCholesky};
use crate::solvers::{
    reduced_gram, solve_euclidean, solve_procrustes, solve_procrustes_general, solve_quadratic, SolveResult,
    DEGENERATE_LAMBDA,
};
use crate::templates::{build_basis, build_difference_basis, BasisMatrix, Configuration, IsohedralType};

use super::bound::{lower_bound, BoundProvider};
use super::stats::TypeStats;
use super::topk::{Candidate, TopK};
use super::{Mode, SearchParams};

/// Relative slack on every threshold comparison, absorbing rounding in
/// lower-bound evaluations that are equal to the bounded value in exact
/// arithmetic.
pub(crate) fn slack(threshold: f64) -> f64 {
    1e-9 * threshold.abs().max(1.0)
}

pub(crate) fn below(value: f64, threshold: f64) -> bool {
    value < threshold + slack(threshold)
}

struct AdTerms {
    gram: GramMatrix,
    /// `G w_j` stacked as a `2n x n` row-major matrix.
    gw: Vec<f64>,
    gwc: Vec<f64>,
    /// `w_j^T G w_j`.
    wgw: Vec<f64>,
}

pub(crate) struct Context {
    pub mode: Mode,
    pub n: usize,
    w_norm_sq: f64,
    wj: Vec<CoordVec>,
    wall: Vec<f64>,
    wcall: Vec<f64>,
    ad: Option<AdTerms>,
    full_grams: Vec<GramMatrix>,
    /// Multiplier on the cheap tier in the gate test.
    ratio: f64,
    bound: BoundProvider,
}

/// Stacks `columns` (each of length `2n`) as a `2n x n` row-major matrix.
fn stack_columns(columns: &[Vec<f64>]) -> Vec<f64> {
    let ncols = columns.len();
    let len = columns[0].len();
    let mut out = vec![0.0; len * ncols];
    for (j, col) in columns.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            out[r * ncols + j] = *v;
        }
    }
    out
}

impl Context {
    pub fn new(goal: &GoalPolygon, mode: Mode, params: &SearchParams) -> Result<Self> {
        let n = goal.n();
        let js: Vec<Renumbering> = (1..=n).map(|j| Renumbering::new(j, n).unwrap()).collect();
        let wj: Vec<CoordVec> = js.iter().map(|&j| goal.reindex(j)).collect();
        let wcj: Vec<Vec<f64>> = wj.iter().map(|w| w.quarter_turn().into_vec()).collect();
        let wall = stack_columns(&wj.iter().map(|w| w.as_slice().to_vec()).collect::<Vec<_>>());
        let wcall = stack_columns(&wcj);

        let ad = matches!(mode, Mode::Ad | Mode::Wad | Mode::Gad1 | Mode::Gad2).then(|| {
            // The unit cycle Laplacian commutes with renumbering and the
            // regularizer sits at the renumbered first point, so one matrix
            // serves every j.
            let gram = gram_ad(n, true);
            let gws: Vec<Vec<f64>> = wj.iter().map(|w| gram.apply(w.as_slice())).collect();
            let gwcs: Vec<Vec<f64>> = wcj.iter().map(|w| gram.apply(w)).collect();
            let wgw = wj
                .iter()
                .zip(&gws)
                .map(|(w, g)| w.as_slice().iter().zip(g).map(|(a, b)| a * b).sum())
                .collect();
            AdTerms {
                gw: stack_columns(&gws),
                gwc: stack_columns(&gwcs),
                wgw,
                gram,
            }
        });

        let mut ratio = 1.0;
        let full_grams = match mode {
            Mode::Euclidean | Mode::Ad => Vec::new(),
            Mode::We => js.iter().map(|&j| gram_we(goal, j)).collect(),
            Mode::Wad => js.iter().map(|&j| gram_wad(goal, j, true)).collect(),
            Mode::Gad1 | Mode::Gad2 => {
                let variant = match mode {
                    Mode::Gad1 => EcVariant::Gad1,
                    _ if params.gad2_crossing => EcVariant::Gad2Crossing,
                    _ => EcVariant::Gad2,
                };
                let ec = build_ec(goal, params.gamma, variant)?;
                if !params.complete {
                    ratio = params.alpha * ec.total_length() / ec.polygon_length();
                }
                js.iter().map(|&j| gram_gad(goal, &ec, j, true)).collect()
            }
        };

        Ok(Self {
            mode,
            n,
            w_norm_sq: goal.w().norm_sq(),
            wj,
            wall,
            wcall,
            ad,
            full_grams,
            ratio,
            bound: params.bound.clone(),
        })
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }
}

/// `B^T X` for `X` stored `2n x n` row-major; result `m x n` row-major.
fn project_all(basis: &BasisMatrix, x: &[f64], n: usize) -> Vec<f64> {
    let m = basis.m();
    let mut out = vec![0.0; m * n];
    for (c, col) in basis.columns().iter().enumerate() {
        let target = &mut out[c * n..(c + 1) * n];
        for &(r, v) in col {
            let src = &x[r * n..(r + 1) * n];
            for (t, s) in target.iter_mut().zip(src) {
                *t += v * s;
            }
        }
    }
    out
}

fn column(mat: &[f64], m: usize, n: usize, j: usize) -> Vec<f64> {
    (0..m).map(|i| mat[i * n + j]).collect()
}

fn column_sums(a: &[f64], b: &[f64], m: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for i in 0..m {
        for (o, (x, y)) in out.iter_mut().zip(a[i * n..(i + 1) * n].iter().zip(&b[i * n..(i + 1) * n])) {
            *o += x * y;
        }
    }
    out
}

enum Recovery {
    /// `xi = γ0 a_j + γ1 b_j`.
    Direct,
    /// `L^T xi = γ0 a_j + γ1 b_j`.
    Cholesky(EnvelopeCholesky),
}

/// All-`j` evaluations for one basis.
struct Batch {
    basis: BasisMatrix,
    m: usize,
    n: usize,
    a: Vec<f64>,
    b: Option<Vec<f64>>,
    gammas: Vec<[f64; 2]>,
    evals: Vec<f64>,
    recovery: Recovery,
}

impl Batch {
    fn finish(
        basis: BasisMatrix,
        n: usize,
        a: Vec<f64>,
        b: Option<Vec<f64>>,
        totals: &dyn Fn(usize) -> f64,
        recovery: Recovery,
    ) -> Result<Self> {
        let m = basis.m();
        let aa = column_sums(&a, &a, m, n);
        let mut gammas = vec![[1.0, 0.0]; n];
        let evals = match &b {
            None => (0..n).map(|j| totals(j) - aa[j]).collect(),
            Some(b) => {
                let bb = column_sums(b, b, m, n);
                let ab = column_sums(&a, b, m, n);
                let mut ev = Vec::with_capacity(n);
                for j in 0..n {
                    let (lambda, g) = sym2_max_eig(aa[j], ab[j], bb[j]);
                    if lambda <= DEGENERATE_LAMBDA {
                        return Err(Error::DegenerateGoal);
                    }
                    gammas[j] = g;
                    ev.push(totals(j) - lambda);
                }
                ev
            }
        };
        Ok(Self {
            basis,
            m,
            n,
            a,
            b,
            gammas,
            evals,
            recovery,
        })
    }

    fn solution(&self, j: usize) -> (Vec<f64>, CoordVec) {
        let g = self.gammas[j];
        let mut y = column(&self.a, self.m, self.n, j);
        if let Some(b) = &self.b {
            let bj = column(b, self.m, self.n, j);
            for (yi, bi) in y.iter_mut().zip(bj) {
                *yi = g[0] * *yi + g[1] * bi;
            }
        }
        if let Recovery::Cholesky(chol) = &self.recovery {
            chol.backward(&mut y);
        }
        let u = self.basis.mul(&y);
        (y, u)
    }
}

fn euclidean_batch(ctx: &Context, c: &Configuration) -> Result<Batch> {
    let n = ctx.n;
    let basis = build_basis(c, true);
    let a = project_all(&basis, &ctx.wall, n);
    let b = c.ty().requires_procrustes().then(|| project_all(&basis, &ctx.wcall, n));
    let total = ctx.w_norm_sq;
    Batch::finish(basis, n, a, b, &|_| total, Recovery::Direct)
}

/// Adjacent-difference evaluation through the regularized cycle Laplacian.
fn ad_batch(ctx: &Context, c: &Configuration) -> Result<Batch> {
    let n = ctx.n;
    let ad = ctx.ad.as_ref().expect("AD terms prepared for this mode");
    let basis = build_basis(c, false);
    let m = basis.m();
    let (h, _) = reduced_gram(&basis, &ad.gram);
    // Symmetric, so column-major storage reads as row-major.
    let chol = EnvelopeCholesky::factor(m, h.as_slice().to_vec())?;
    let mut a = project_all(&basis, &ad.gw, n);
    chol.forward_multi(&mut a, n);
    let b = c.ty().requires_procrustes().then(|| {
        let mut b = project_all(&basis, &ad.gwc, n);
        chol.forward_multi(&mut b, n);
        b
    });
    let wgw = &ad.wgw;
    Batch::finish(basis, n, a, b, &|j| wgw[j], Recovery::Cholesky(chol))
}

fn full_solve(ctx: &Context, raw: &BasisMatrix, ty: IsohedralType, j: usize) -> Result<SolveResult> {
    let g = &ctx.full_grams[j];
    let w = &ctx.wj[j];
    if ty.requires_procrustes() {
        solve_procrustes_general(raw, g, w)
    } else {
        solve_quadratic(raw, g, w)
    }
}

fn with_context<T>(r: Result<T>, c: &Configuration, j: Option<usize>) -> Result<T> {
    r.map_err(|e| match e {
        Error::NumericalError(msg) => Error::NumericalError(match j {
            Some(j) => format!("{} k={:?} j={}: {msg}", c.ty(), c.k(), j + 1),
            None => format!("{} k={:?}: {msg}", c.ty(), c.k()),
        }),
        other => other,
    })
}

/// Receives candidates for one scan partition.
pub(crate) struct Sink<'a> {
    pub local: TopK,
    pub stats: TypeStats,
    pub rejected: u64,
    global: &'a (dyn Fn() -> f64 + Sync),
}

impl<'a> Sink<'a> {
    pub fn new(local: TopK, global: &'a (dyn Fn() -> f64 + Sync)) -> Self {
        Self {
            local,
            stats: TypeStats::default(),
            rejected: 0,
            global,
        }
    }

    fn threshold(&self) -> f64 {
        self.local.threshold().min((self.global)())
    }

    fn offer(&mut self, c: &Configuration, j: usize, eval: f64, make: impl FnOnce() -> (Vec<f64>, CoordVec)) {
        let global = (self.global)();
        if !(eval <= global + slack(global)) || !self.local.admits(eval, c.ty(), c.k(), j + 1) {
            return;
        }
        let (xi_star, u_star) = make();
        if !is_simple_polygon(&unstack_coords(&u_star)).unwrap_or(false) {
            self.rejected += 1;
            return;
        }
        self.local.insert(Candidate {
            ty: c.ty(),
            k: c.k().to_vec(),
            j: j + 1,
            eval,
            xi_star,
            u_star,
            simple: true,
        });
    }
}

fn uses_bound(ctx: &Context, ty: IsohedralType) -> bool {
    !ctx.bound.is_none() && matches!(ty, IsohedralType::IH4 | IsohedralType::IH5 | IsohedralType::IH6)
}

fn euclidean_with_bound(ctx: &Context, c: &Configuration, sink: &mut Sink) -> Result<()> {
    let basis = build_basis(c, true);
    for j in 0..ctx.n {
        if !below(lower_bound(&ctx.bound, c, j + 1), sink.threshold()) {
            sink.stats.pruned += 1;
            continue;
        }
        let r = if c.ty().requires_procrustes() {
            solve_procrustes(&basis, &ctx.wj[j])?
        } else {
            solve_euclidean(&basis, &ctx.wj[j])?
        };
        sink.stats.full_evals += 1;
        sink.offer(c, j, r.eval, || (r.xi_star, r.u_star));
    }
    Ok(())
}

/// Pruned evaluation of every renumbering of one configuration.
pub(crate) fn process_config(ctx: &Context, c: &Configuration, sink: &mut Sink) -> Result<()> {
    sink.stats.configurations += 1;
    let n = ctx.n;
    match ctx.mode {
        Mode::Euclidean if uses_bound(ctx, c.ty()) => euclidean_with_bound(ctx, c, sink)?,
        Mode::Euclidean | Mode::Ad => {
            let batch = if ctx.mode == Mode::Ad {
                with_context(ad_batch(ctx, c), c, None)?
            } else {
                euclidean_batch(ctx, c)?
            };
            sink.stats.full_evals += n as u64;
            for j in 0..n {
                sink.offer(c, j, batch.evals[j], || batch.solution(j));
            }
        }
        Mode::We | Mode::Wad | Mode::Gad1 | Mode::Gad2 => {
            let cheap = if ctx.mode == Mode::We {
                euclidean_batch(ctx, c)?
            } else {
                with_context(ad_batch(ctx, c), c, None)?
            };
            sink.stats.cheap_evals += n as u64;
            let mut raw: Option<BasisMatrix> = None;
            for j in 0..n {
                if !below(ctx.ratio * cheap.evals[j], sink.threshold()) {
                    sink.stats.pruned += 1;
                    continue;
                }
                let raw = raw.get_or_insert_with(|| build_basis(c, false));
                let r = with_context(full_solve(ctx, raw, c.ty(), j), c, Some(j))?;
                sink.stats.full_evals += 1;
                sink.offer(c, j, r.eval, || (r.xi_star, r.u_star));
            }
        }
    }
    Ok(())
}

/// Unpruned evaluation of every renumbering through the per-triplet kernels.
pub(crate) fn naive_config(ctx: &Context, goal: &GoalPolygon, c: &Configuration, sink: &mut Sink) -> Result<()> {
    sink.stats.configurations += 1;
    let n = ctx.n;
    let procrustes = c.ty().requires_procrustes();
    match ctx.mode {
        Mode::Euclidean => {
            let basis = build_basis(c, true);
            for j in 0..n {
                let r = if procrustes {
                    solve_procrustes(&basis, &ctx.wj[j])?
                } else {
                    solve_euclidean(&basis, &ctx.wj[j])?
                };
                sink.stats.full_evals += 1;
                sink.offer(c, j, r.eval, || (r.xi_star, r.u_star));
            }
        }
        Mode::Ad => {
            let diff = build_difference_basis(c);
            for j in 0..n {
                let wbar = reindex_coords(goal.w(), j).cyclic_differences();
                let r = if procrustes {
                    solve_procrustes(diff.basis(), &wbar)?
                } else {
                    solve_euclidean(diff.basis(), &wbar)?
                };
                sink.stats.full_evals += 1;
                sink.offer(c, j, r.eval, || {
                    let u = diff.lift(&r.xi_star);
                    (r.xi_star, u)
                });
            }
        }
        Mode::We | Mode::Wad | Mode::Gad1 | Mode::Gad2 => {
            let raw = build_basis(c, false);
            for j in 0..n {
                let r = with_context(full_solve(ctx, &raw, c.ty(), j), c, Some(j))?;
                sink.stats.full_evals += 1;
                sink.offer(c, j, r.eval, || (r.xi_star, r.u_star));
            }
        }
    }
    Ok(())
}

/// All `n` cheap-tier values of one configuration: Euclidean (or rotation-free
/// Euclidean) for `Mode::Euclidean | Mode::We`, adjacent-difference otherwise.
pub(crate) fn cheap_values(ctx: &Context, c: &Configuration) -> Result<Vec<f64>> {
    let batch = match ctx.mode {
        Mode::Euclidean | Mode::We => euclidean_batch(ctx, c)?,
        _ => ad_batch(ctx, c)?,
    };
    Ok(batch.evals)
}
