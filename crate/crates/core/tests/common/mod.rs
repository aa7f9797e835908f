#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use escherize::distances::{build_ec, gram_ad, gram_gad, gram_wad, gram_we, EcVariant, EdgeSet, GramMatrix};
use escherize::geometry::{stack_coords, unstack_coords, CoordVec, Point2};
use escherize::goal::{random_star_polygon, GoalPolygon, Renumbering};
use escherize::render::TilingLayout;
use escherize::solvers::{solve_euclidean, solve_procrustes, solve_procrustes_general, solve_quadratic};
use escherize::templates::{build_basis, enumerate_configurations, Configuration, IsohedralType};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random star polygon with point and edge weights drawn from `[1, 4]`.
pub fn weighted_goal(n: usize, seed: u64) -> GoalPolygon {
    let g = random_star_polygon(n, seed).unwrap();
    let mut r = rng(seed ^ 0x5eed);
    let pw = (0..n).map(|_| if r.random_bool(0.3) { r.random_range(1.0..4.0) } else { 1.0 }).collect();
    let ew = (0..n).map(|_| if r.random_bool(0.3) { r.random_range(1.0..4.0) } else { 1.0 }).collect();
    g.with_weights(pw, ew).unwrap()
}

pub fn all_configurations(ty: IsohedralType, n: usize) -> Vec<Configuration> {
    enumerate_configurations(ty, n).map(|it| it.collect()).unwrap_or_default()
}

/// Uniform type (among those with configurations), then uniform
/// configuration, then uniform one-based `j`.
pub fn random_triplet(r: &mut ChaCha8Rng, n: usize) -> (Configuration, usize) {
    let types: Vec<IsohedralType> = IsohedralType::ALL
        .into_iter()
        .filter(|&t| !all_configurations(t, n).is_empty())
        .collect();
    let ty = types[r.random_range(0..types.len())];
    let configs = all_configurations(ty, n);
    let c = configs[r.random_range(0..configs.len())].clone();
    (c, r.random_range(1..=n))
}

pub fn rn(j: usize, n: usize) -> Renumbering {
    Renumbering::new(j, n).unwrap()
}

pub fn points(u: &CoordVec) -> Vec<Point2> {
    unstack_coords(u)
}

pub fn coords(p: &[Point2]) -> CoordVec {
    stack_coords(p).unwrap()
}

/// Sum over points of `weight_t |u_t - w_t|²`.
pub fn weighted_euclid_direct(u: &CoordVec, w: &CoordVec, weights: &[f64]) -> f64 {
    points(u)
        .iter()
        .zip(points(w))
        .zip(weights)
        .map(|((a, b), k)| k * (*a - b).norm_sq())
        .sum()
}

pub fn euclid_direct(u: &CoordVec, w: &CoordVec) -> f64 {
    weighted_euclid_direct(u, w, &vec![1.0; u.n()])
}

/// Sum over the listed point pairs of `weight |(u_s - u_t) - (w_s - w_t)|²`.
pub fn pair_differences_direct(u: &CoordVec, w: &CoordVec, pairs: &[(usize, usize, f64)]) -> f64 {
    let (pu, pw) = (points(u), points(w));
    pairs
        .iter()
        .map(|&(s, t, k)| k * ((pu[s] - pu[t]) - (pw[s] - pw[t])).norm_sq())
        .sum()
}

/// Consecutive-point pairs `(t, t+1)` with the given edge weights.
pub fn cycle_pairs(weights: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = weights.len();
    (0..n).map(|t| (t, (t + 1) % n, weights[t])).collect()
}

pub fn ec_pairs(ec: &EdgeSet, shift: usize) -> Vec<(usize, usize, f64)> {
    let n = ec.n();
    ec.edges()
        .iter()
        .map(|&(s, t)| ((s + n - shift) % n, (t + n - shift) % n, 1.0))
        .collect()
}

/// Dense `Gram = diag(K, K)` checks against the block layout.
pub fn dense(g: &GramMatrix) -> DMatrix<f64> {
    g.to_dense()
}

pub fn rotate_points(p: &[Point2], theta: f64) -> Vec<Point2> {
    let (s, c) = theta.sin_cos();
    p.iter().map(|q| Point2::new(c * q.x - s * q.y, s * q.x + c * q.y)).collect()
}

/// Pseudo-inverse of a symmetric PSD matrix from its eigendecomposition.
pub fn sym_pinv(h: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let inv = eig.eigenvalues.map(|l| if l > 1e-12 * lmax { 1.0 / l } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

/// `min_xi (B xi - v)^T G (B xi - v)` through a dense pseudo-inverse.
pub fn pinv_min(b: &DMatrix<f64>, g: &DMatrix<f64>, v: &DVector<f64>) -> (f64, DVector<f64>) {
    let h = b.transpose() * g * b;
    let rhs = b.transpose() * g * v;
    let xi = sym_pinv(&h) * rhs;
    let r = b * &xi - v;
    ((r.transpose() * g * &r)[(0, 0)], xi)
}

/// Rotation-grid oracle: `min_θ min_xi (B xi - R(θ) w)^T G (B xi - R(θ) w)`
/// over `samples` angles refined by golden-section search.
pub fn rotation_grid_min(b: &DMatrix<f64>, g: &DMatrix<f64>, w: &CoordVec, samples: usize) -> f64 {
    let h = b.transpose() * g * b;
    let hinv = sym_pinv(&h);
    let wp = points(w);
    let f = |theta: f64| {
        let v = DVector::from_vec(coords(&rotate_points(&wp, theta)).into_vec());
        let xi = &hinv * (b.transpose() * g * &v);
        let r = b * xi - &v;
        (r.transpose() * g * &r)[(0, 0)]
    };
    let step = std::f64::consts::TAU / samples as f64;
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for i in 0..samples {
        let v = f(i as f64 * step);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let (mut lo, mut hi) = ((best_i as f64 - 1.0) * step, (best_i as f64 + 1.0) * step);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let a = hi - ratio * (hi - lo);
        let c = lo + ratio * (hi - lo);
        if f(a) < f(c) {
            hi = c;
        } else {
            lo = a;
        }
    }
    best.min(f(0.5 * (lo + hi)))
}

/// Distances of one triplet under every family, as the search defines them.
pub struct TripletEvals {
    pub euclid: f64,
    pub we: f64,
    pub ad: f64,
    pub wad: f64,
    pub gad1: f64,
    pub gad2: f64,
}

pub fn triplet_evals(goal: &GoalPolygon, c: &Configuration, j: usize, ec1: &EdgeSet, ec2: &EdgeSet) -> TripletEvals {
    let n = goal.n();
    let jr = rn(j, n);
    let w = goal.reindex(jr);
    let ortho = build_basis(c, true);
    let raw = build_basis(c, false);
    let quad = |g: &GramMatrix| {
        if c.ty().requires_procrustes() {
            solve_procrustes_general(&raw, g, &w).unwrap().eval
        } else {
            solve_quadratic(&raw, g, &w).unwrap().eval
        }
    };
    TripletEvals {
        euclid: if c.ty().requires_procrustes() {
            solve_procrustes(&ortho, &w).unwrap().eval
        } else {
            solve_euclidean(&ortho, &w).unwrap().eval
        },
        we: quad(&gram_we(goal, jr)),
        ad: quad(&gram_ad(n, true)),
        wad: quad(&gram_wad(goal, jr, true)),
        gad1: quad(&gram_gad(goal, ec1, jr, true)),
        gad2: quad(&gram_gad(goal, ec2, jr, true)),
    }
}

pub fn edge_sets(goal: &GoalPolygon, gamma: f64) -> (EdgeSet, EdgeSet) {
    (
        build_ec(goal, gamma, EcVariant::Gad1).unwrap(),
        build_ec(goal, gamma, EcVariant::Gad2).unwrap(),
    )
}

/// Shared-edge oracle on placed geometry alone: every tiling edge whose
/// endpoints coincide with a tiling edge of another placed tile must agree
/// with it point by point. Returns `(max deviation, matched edge pairs)`.
pub fn geometric_edge_check(layout: &TilingLayout) -> (f64, usize) {
    let c = layout.base.configuration();
    let h = c.tiling_vertex_indices();
    let n = c.n();
    let tiles = layout.placed_tiles();
    let mut edges: Vec<(usize, Vec<Point2>)> = Vec::new();
    for (ti, tile) in tiles.iter().enumerate() {
        for e in 0..h.len() - 1 {
            edges.push((ti, (h[e]..=h[e + 1]).map(|t| tile[t % n]).collect()));
        }
    }
    let scale = tiles[0].iter().map(|p| p.norm()).fold(1.0, f64::max);
    let near = |a: Point2, b: Point2| a.distance(b) < 1e-6 * scale;
    let (mut worst, mut pairs) = (0.0f64, 0);
    for i in 0..edges.len() {
        for k in i + 1..edges.len() {
            let (ta, ea) = &edges[i];
            let (tb, eb) = &edges[k];
            if ta == tb || ea.len() != eb.len() || ea.len() < 2 {
                continue;
            }
            let (a0, a1) = (ea[0], ea[ea.len() - 1]);
            let (b0, b1) = (eb[0], eb[eb.len() - 1]);
            if near(a0, a1) {
                continue;
            }
            let dev = if near(a0, b1) && near(a1, b0) {
                ea.iter().zip(eb.iter().rev()).map(|(p, q)| p.distance(*q)).fold(0.0, f64::max)
            } else if near(a0, b0) && near(a1, b1) {
                ea.iter().zip(eb).map(|(p, q)| p.distance(*q)).fold(0.0, f64::max)
            } else {
                continue;
            };
            worst = worst.max(dev);
            pairs += 1;
        }
    }
    (worst, pairs)
}
