//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use common::*;
use escherize::distances::{distance_value, gram_ad, gram_gad, gram_wad, gram_we, GramMatrix};
use escherize::geometry::CoordVec;
use escherize::goal::{random_star_polygon, GoalPolygon};
use escherize::linalg::rank2_max_eig;
use escherize::render::{layout_tiling, EDGE_MATCH_TOL};
use escherize::search::{compare_rankings, naive_search, run_search, Candidate, Mode, SearchParams, TopK};
use escherize::solvers::{solve_procrustes, solve_procrustes_general, solve_quadratic};
use escherize::templates::{build_basis, validate_tile, IsohedralType};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel_slack(v: f64) -> f64 {
    1e-9 * v.abs().max(1.0)
}

fn params() -> SearchParams {
    SearchParams::default()
}

/// Pruned search equals the unpruned scan for every mode.
fn oracle_equivalence() -> Outcome {
    let sizes = [8, 12, 16];
    let (mut agree, mut total) = (0, 0);
    let mut failures = Vec::new();
    for i in 0..21u64 {
        let n = sizes[i as usize % 3];
        let goal = if i % 2 == 0 {
            random_star_polygon(n, 100 + i).unwrap()
        } else {
            weighted_goal(n, 100 + i)
        };
        for mode in Mode::ALL {
            let p = params();
            let (fast, _) = run_search(&goal, mode, &p).unwrap();
            let (slow, _) = naive_search(&goal, mode, &p).unwrap();
            total += 1;
            match compare_rankings(&fast, &slow, 1e-9) {
                Ok(()) => agree += 1,
                Err(e) => failures.push(format!("goal {i} n={n} {mode}: {e}")),
            }
        }
    }
    let mut detail = format!("21 goals (n in 8/12/16) x 6 modes: {agree}/{total} rankings agree");
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; first failure: {f}"));
    }
    outcome(agree == total, detail)
}

/// Cheap tiers never exceed the full tiers they gate.
fn pruning_soundness() -> Outcome {
    let mut r = rng(2);
    let mut worst = [f64::NEG_INFINITY; 3];
    let mut violations = [0usize; 3];
    for t in 0..500u64 {
        let n = [8, 10, 12][t as usize % 3];
        let goal = weighted_goal(n, 2000 + t);
        let (ec1, ec2) = edge_sets(&goal, 1.4);
        let (c, j) = random_triplet(&mut r, n);
        let e = triplet_evals(&goal, &c, j, &ec1, &ec2);
        let gaps = [
            e.euclid - e.we,
            e.ad - e.wad,
            (e.ad - e.gad1).max(e.ad - e.gad2),
        ];
        let refs = [e.we, e.wad, e.gad1.min(e.gad2)];
        for k in 0..3 {
            worst[k] = worst[k].max(gaps[k]);
            if gaps[k] > rel_slack(refs[k]) {
                violations[k] += 1;
            }
        }
    }
    outcome(
        violations.iter().all(|&v| v == 0),
        format!(
            "500 weighted triplets per inequality: violations E<=WE {}, AD<=WAD {}, AD<=GAD {}; largest excess {:.2e}, {:.2e}, {:.2e}",
            violations[0], violations[1], violations[2], worst[0], worst[1], worst[2]
        ),
    )
}

/// Quadratic form `v^T M v` whose minimum over `θ` is the Procrustes value,
/// with `M = (I - B H⁺ B^T G)^T G (I - B H⁺ B^T G)`.
fn residual_form(b: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    let h = b.transpose() * g * b;
    let p = b * sym_pinv(&h) * b.transpose() * g;
    let i = DMatrix::<f64>::identity(g.nrows(), g.ncols());
    let q = &i - p;
    q.transpose() * g * q
}

fn grid_min(m: &DMatrix<f64>, w: &CoordVec, samples: usize) -> f64 {
    let wp = points(w);
    let f = |theta: f64| {
        let v = DVector::from_vec(coords(&rotate_points(&wp, theta)).into_vec());
        (v.transpose() * m * &v)[(0, 0)]
    };
    let step = std::f64::consts::TAU / samples as f64;
    let best_i = (0..samples)
        .min_by(|&a, &b| f(a as f64 * step).total_cmp(&f(b as f64 * step)))
        .unwrap();
    let (mut lo, mut hi) = ((best_i as f64 - 1.0) * step, (best_i as f64 + 1.0) * step);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..120 {
        let a = hi - ratio * (hi - lo);
        let c = lo + ratio * (hi - lo);
        if f(a) < f(c) {
            hi = c;
        } else {
            lo = a;
        }
    }
    f(best_i as f64 * step).min(f(0.5 * (lo + hi)))
}

/// Closed-form rotation-free solvers against a rotation grid, and the rank-2
/// eigen reduction against a dense eigensolver.
fn procrustes_correctness() -> Outcome {
    let mut r = rng(3);
    let (mut worst_simple, mut worst_general) = (0.0f64, 0.0f64);
    for t in 0..100u64 {
        let n = r.random_range(8..=14);
        let goal = weighted_goal(n, 3000 + t);
        let (c, j) = random_triplet(&mut r, n);
        let w = goal.reindex(rn(j, n));
        let ortho = build_basis(&c, true);
        let ident = DMatrix::<f64>::identity(2 * n, 2 * n);
        let simple = solve_procrustes(&ortho, &w).unwrap().eval;
        let oracle = grid_min(&residual_form(&ortho.to_dense(), &ident), &w, 10_000);
        worst_simple = worst_simple.max((simple - oracle).abs());

        let raw = build_basis(&c, false);
        let (ec1, _) = edge_sets(&goal, 1.4);
        let gram = match t % 3 {
            0 => gram_we(&goal, rn(j, n)),
            1 => gram_wad(&goal, rn(j, n), true),
            _ => gram_gad(&goal, &ec1, rn(j, n), true),
        };
        let general = solve_procrustes_general(&raw, &gram, &w).unwrap().eval;
        let oracle = grid_min(&residual_form(&raw.to_dense(), &gram.to_dense()), &w, 10_000);
        worst_general = worst_general.max((general - oracle).abs());
    }
    let mut worst_eig = 0.0f64;
    for _ in 0..100 {
        let m = r.random_range(1..=40);
        let a: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..1.0)).collect();
        let (lambda, _) = rank2_max_eig(&a, &b);
        let (va, vb) = (DVector::from_vec(a), DVector::from_vec(b));
        let v = &va * va.transpose() + &vb * vb.transpose();
        let dense = SymmetricEigen::new(v).eigenvalues.max();
        worst_eig = worst_eig.max((lambda - dense).abs() / dense.abs().max(f64::MIN_POSITIVE));
    }
    outcome(
        worst_simple <= 1e-6 && worst_general <= 1e-6 && worst_eig <= 1e-9,
        format!(
            "100 instances: max |closed form - grid| simple {worst_simple:.2e}, general {worst_general:.2e}; rank-2 vs dense eigen max rel {worst_eig:.2e}"
        ),
    )
}

/// Every Gram family against its summation formula, plus invariances.
fn distance_semantics() -> Outcome {
    let mut r = rng(4);
    let mut worst = 0.0f64;
    let mut worst_translate = 0.0f64;
    let mut worst_rotate = 0.0f64;
    for t in 0..100u64 {
        let n = r.random_range(6..=16);
        let goal = weighted_goal(n, 4000 + t);
        let j = r.random_range(1..=n);
        let shift = j - 1;
        let w = goal.reindex(rn(j, n));
        let u = CoordVec::from_vec((0..2 * n).map(|_| r.random_range(-1.5..1.5)).collect()).unwrap();
        let (ec1, ec2) = edge_sets(&goal, [1.2, 1.4, 1.6][t as usize % 3]);
        let pw: Vec<f64> = (0..n).map(|s| goal.point_weights()[(s + shift) % n]).collect();
        let ew: Vec<f64> = (0..n).map(|s| goal.edge_weights()[(s + shift) % n]).collect();
        let checks: Vec<(GramMatrix, f64)> = vec![
            (GramMatrix::identity(n), euclid_direct(&u, &w)),
            (gram_we(&goal, rn(j, n)), weighted_euclid_direct(&u, &w, &pw)),
            (gram_ad(n, false), pair_differences_direct(&u, &w, &cycle_pairs(&vec![1.0; n]))),
            (gram_wad(&goal, rn(j, n), false), pair_differences_direct(&u, &w, &cycle_pairs(&ew))),
            (gram_gad(&goal, &ec1, rn(j, n), false), pair_differences_direct(&u, &w, &ec_pairs(&ec1, shift))),
            (gram_gad(&goal, &ec2, rn(j, n), false), pair_differences_direct(&u, &w, &ec_pairs(&ec2, shift))),
        ];
        for (g, direct) in &checks {
            worst = worst.max((distance_value(g, u.as_slice(), w.as_slice()).unwrap() - direct).abs());
        }
        let offset = (r.random_range(-3.0..3.0), r.random_range(-3.0..3.0));
        let moved = CoordVec::from_vec(
            (0..2 * n)
                .map(|i| u[i] + if i < n { offset.0 } else { offset.1 })
                .collect(),
        )
        .unwrap();
        for (g, _) in &checks[2..] {
            let a = distance_value(g, u.as_slice(), w.as_slice()).unwrap();
            let b = distance_value(g, moved.as_slice(), w.as_slice()).unwrap();
            worst_translate = worst_translate.max((a - b).abs());
        }
        let (c, _) = random_triplet(&mut r, n);
        let basis = build_basis(&c, true);
        let theta = r.random_range(0.0..std::f64::consts::TAU);
        let turned = GoalPolygon::from_points(rotate_points(goal.points(), theta)).unwrap();
        let a = solve_procrustes(&basis, &goal.reindex(rn(j, n))).unwrap().eval;
        let b = solve_procrustes(&basis, &turned.reindex(rn(j, n))).unwrap().eval;
        worst_rotate = worst_rotate.max((a - b).abs());
    }
    outcome(
        worst <= 1e-10 && worst_translate <= 1e-10 && worst_rotate <= 1e-8,
        format!(
            "100 inputs x 6 Gram families: max |quadratic form - summation| {worst:.2e}; translation drift {worst_translate:.2e}; rotation drift {worst_rotate:.2e}"
        ),
    )
}

/// The regularized problem keeps the optimal value of the singular one.
fn regularization_neutrality() -> Outcome {
    let mut r = rng(5);
    let (mut worst_eval, mut worst_shape) = (0.0f64, 0.0f64);
    for t in 0..100u64 {
        let n = r.random_range(8..=16);
        let goal = weighted_goal(n, 5000 + t);
        let (c, j) = random_triplet(&mut r, n);
        let jr = rn(j, n);
        let w = goal.reindex(jr);
        let (ec1, ec2) = edge_sets(&goal, 1.4);
        let (reg, unreg) = match t % 4 {
            0 => (gram_ad(n, true), gram_ad(n, false)),
            1 => (gram_wad(&goal, jr, true), gram_wad(&goal, jr, false)),
            2 => (gram_gad(&goal, &ec1, jr, true), gram_gad(&goal, &ec1, jr, false)),
            _ => (gram_gad(&goal, &ec2, jr, true), gram_gad(&goal, &ec2, jr, false)),
        };
        let raw = build_basis(&c, false);
        let sol = solve_quadratic(&raw, &reg, &w).unwrap();
        let (oracle, _) = pinv_min(&raw.to_dense(), &unreg.to_dense(), &DVector::from_vec(w.as_slice().to_vec()));
        let at_unreg = distance_value(&unreg, sol.u_star.as_slice(), w.as_slice()).unwrap();
        worst_eval = worst_eval.max((sol.eval - oracle).abs() / oracle.abs().max(1.0));
        worst_shape = worst_shape.max((at_unreg - oracle).abs() / oracle.abs().max(1.0));
    }
    outcome(
        worst_eval <= 1e-8 && worst_shape <= 1e-8,
        format!(
            "100 (B, G, w) instances: regularized optimum vs pseudo-inverse {worst_eval:.2e}; regularized minimizer under singular G {worst_shape:.2e}"
        ),
    )
}

fn full_eval(goal: &GoalPolygon, mode: Mode, cand: &Candidate, gamma: f64) -> f64 {
    let (ec1, ec2) = edge_sets(goal, gamma);
    let e = triplet_evals(goal, &cand.configuration(), cand.j, &ec1, &ec2);
    match mode {
        Mode::Gad1 => e.gad1,
        Mode::Gad2 => e.gad2,
        _ => unreachable!(),
    }
}

/// Incomplete search: exact at α = 0, contained in the full ranking at 0.9.
fn incomplete_search() -> Outcome {
    let mut exact = true;
    for (i, n) in [12usize, 16].into_iter().enumerate() {
        let goal = weighted_goal(n, 6000 + i as u64);
        for mode in [Mode::Gad1, Mode::Gad2] {
            let complete = run_search(&goal, mode, &params()).unwrap().0;
            let p = SearchParams {
                complete: false,
                alpha: 0.0,
                ..params()
            };
            let zero = run_search(&goal, mode, &p).unwrap().0;
            let key = |t: &TopK| t.entries().iter().map(|c| (c.triplet(), c.eval)).collect::<Vec<_>>();
            exact &= key(&complete) == key(&zero);
        }
    }
    let mut contained = true;
    let mut overlooked = Vec::new();
    for s in 0..3u64 {
        let goal = random_star_polygon(40, 6100 + s).unwrap();
        for mode in [Mode::Gad1, Mode::Gad2] {
            let full = run_search(&goal, mode, &params()).unwrap().0;
            let p = SearchParams {
                complete: false,
                ..params()
            };
            let part = run_search(&goal, mode, &p).unwrap().0;
            let last = full.threshold();
            for c in part.entries() {
                let ok = match full.entries().iter().find(|d| d.triplet() == c.triplet()) {
                    Some(d) => (d.eval - c.eval).abs() <= 1e-9,
                    None => {
                        c.eval >= last - rel_slack(last)
                            && (full_eval(&goal, mode, c, p.gamma) - c.eval).abs() <= rel_slack(c.eval)
                    }
                };
                contained &= ok;
            }
            let missing = full
                .entries()
                .iter()
                .filter(|d| !part.entries().iter().any(|c| c.triplet() == d.triplet()))
                .count();
            overlooked.push(format!("{mode}#{s}:{missing}"));
        }
    }
    outcome(
        exact && contained,
        format!(
            "alpha=0 reproduces complete search: {exact}; alpha=0.9 on 40-point goals contained: {contained}; top-10 overlooked [{}]",
            overlooked.join(" ")
        ),
    )
}

/// Full-tier evaluations saved by the cheap tier on a weighted goal.
fn counter_speedup() -> Outcome {
    let goal = weighted_goal(20, 7);
    let mut pass = true;
    let mut parts = Vec::new();
    for mode in [Mode::We, Mode::Wad, Mode::Gad1, Mode::Gad2] {
        let (_, fast) = run_search(&goal, mode, &params()).unwrap();
        let (_, slow) = naive_search(&goal, mode, &params()).unwrap();
        let ratio = fast.full_evals as f64 / slow.full_evals as f64;
        if matches!(mode, Mode::We | Mode::Wad) {
            pass &= ratio <= 0.5;
        }
        parts.push(format!("{mode} {}/{} ({ratio:.4})", fast.full_evals, slow.full_evals));
    }
    outcome(pass, format!("20-point weighted goal, full evals pruned/naive: {}", parts.join(", ")))
}

/// Every returned tile is feasible and every tiling patch closes up.
fn feasibility() -> Outcome {
    let (mut checked, mut bad_tiles) = (0, 0);
    for (i, n) in [12usize, 16].into_iter().enumerate() {
        let goal = weighted_goal(n, 8000 + i as u64);
        for mode in Mode::ALL {
            let (top, _) = run_search(&goal, mode, &params()).unwrap();
            for c in top.entries() {
                checked += 1;
                if !validate_tile(&c.u_star, &c.configuration()) {
                    bad_tiles += 1;
                }
            }
        }
    }
    let (mut layouts, mut worst, mut worst_geo, mut unmatched) = (0, 0.0f64, 0.0f64, 0);
    let goal = random_star_polygon(16, 8100).unwrap();
    for ty in IsohedralType::ALL {
        let p = SearchParams {
            types: vec![ty],
            topk: 3,
            ..params()
        };
        let (top, _) = run_search(&goal, Mode::Euclidean, &p).unwrap();
        for c in top.entries() {
            let layout = layout_tiling(c, 1).unwrap();
            let (dev, pairs) = layout.edge_mismatch().unwrap();
            let (geo, geo_pairs) = geometric_edge_check(&layout);
            worst = worst.max(dev);
            worst_geo = worst_geo.max(geo);
            if pairs == 0 || geo_pairs == 0 {
                unmatched += 1;
            }
            layouts += 1;
        }
    }
    outcome(
        bad_tiles == 0 && worst <= EDGE_MATCH_TOL && worst_geo <= EDGE_MATCH_TOL && unmatched == 0,
        format!(
            "{checked} ranked tiles, {bad_tiles} infeasible; {layouts} tiling patches over all 10 types, shared-edge deviation {worst:.2e} (geometric oracle {worst_geo:.2e})"
        ),
    )
}

/// Complete searches at the size of the largest goals in practice.
fn scale_sanity() -> Outcome {
    let goal = random_star_polygon(58, 9).unwrap();
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut feasible = true;
    for mode in [Mode::Euclidean, Mode::Ad] {
        let (top, stats) = run_search(&goal, mode, &params()).unwrap();
        feasible &= !top.is_empty() && top.entries().iter().all(|c| validate_tile(&c.u_star, &c.configuration()));
        parts.push(format!("{mode} {:.1} s ({} evals)", stats.wall_time.as_secs_f64(), stats.full_evals));
    }
    let elapsed = start.elapsed();
    outcome(
        feasible && elapsed < Duration::from_secs(600),
        format!("n=58, all 10 types, complete: {} ; total {:.1} s", parts.join(", "), elapsed.as_secs_f64()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("pruning soundness", pruning_soundness),
        ("procrustes correctness", procrustes_correctness),
        ("distance semantics", distance_semantics),
        ("regularization neutrality", regularization_neutrality),
        ("incomplete search", incomplete_search),
        ("counter-based speedup", counter_speedup),
        ("feasibility of outputs", feasibility),
        ("scale sanity", scale_sanity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {} {} {}: {} [{:.1} s]",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            name,
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
