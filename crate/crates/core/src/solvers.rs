//! Per-configuration optimization kernels.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distances::GramMatrix;
use crate::error::{Error, Result};
use crate::geometry::{CoordVec, Point2};
use crate::linalg::rank2_max_eig;
use crate::templates::BasisMatrix;

/// Largest eigenvalues at or below this are treated as a zero goal.
pub const DEGENERATE_LAMBDA: f64 = 1e-12;

/// Vectors whose G-norm falls below this are dropped by [`gram_schmidt_g`].
pub const G_NULL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub xi_star: Vec<f64>,
    pub u_star: CoordVec,
    pub eval: f64,
}

/// Projections used by the rotation-free distances.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcrustesData {
    /// `(y_1..y_n, -x_1..-x_n)`.
    pub w_c: CoordVec,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ProcrustesData {
    pub fn new(basis: &BasisMatrix, w: &CoordVec) -> Self {
        let w_c = w.quarter_turn();
        Self {
            a: basis.tr_mul(w.as_slice()).as_slice().to_vec(),
            b: basis.tr_mul(w_c.as_slice()).as_slice().to_vec(),
            w_c,
        }
    }
}

fn check_len(basis: &BasisMatrix, w: &CoordVec) -> Result<()> {
    if w.len() != 2 * basis.n() {
        return Err(Error::DimensionMismatch {
            expected: 2 * basis.n(),
            found: w.len(),
        });
    }
    Ok(())
}

fn require_orthonormal(basis: &BasisMatrix) -> Result<()> {
    if !basis.is_orthonormal() {
        return Err(Error::InvalidParameter("an orthonormal basis is required".into()));
    }
    Ok(())
}

/// Least squares over `span(B)` for orthonormal `B`.
pub fn solve_euclidean(basis: &BasisMatrix, w: &CoordVec) -> Result<SolveResult> {
    require_orthonormal(basis)?;
    check_len(basis, w)?;
    let xi = basis.tr_mul(w.as_slice());
    let eval = w.norm_sq() - xi.norm_squared();
    Ok(SolveResult {
        u_star: basis.mul(xi.as_slice()),
        xi_star: xi.as_slice().to_vec(),
        eval,
    })
}

/// `G B` as dense columns.
fn gram_times_basis(basis: &BasisMatrix, gram: &GramMatrix) -> Vec<Vec<f64>> {
    let n = basis.n();
    let rows = gram.k_rows();
    basis
        .columns()
        .iter()
        .map(|col| {
            let mut out = vec![0.0; 2 * n];
            for &(r, v) in col {
                let (base, t) = ((r / n) * n, r % n);
                // K is symmetric: column t equals row t.
                for &(s, k) in &rows[t] {
                    out[base + s] += k * v;
                }
            }
            out
        })
        .collect()
}

/// `H = B^T G B` together with `G B`.
pub(crate) fn reduced_gram(basis: &BasisMatrix, gram: &GramMatrix) -> (DMatrix<f64>, Vec<Vec<f64>>) {
    let gb = gram_times_basis(basis, gram);
    let m = basis.m();
    let mut h = DMatrix::zeros(m, m);
    for (c, col) in basis.columns().iter().enumerate() {
        for (d, gcol) in gb.iter().enumerate().skip(c) {
            let v: f64 = col.iter().map(|&(r, x)| x * gcol[r]).sum();
            h[(c, d)] = v;
            h[(d, c)] = v;
        }
    }
    (h, gb)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_gram(basis: &BasisMatrix, gram: &GramMatrix) -> Result<()> {
    if gram.n() != basis.n() {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            found: gram.n(),
        });
    }
    Ok(())
}

/// Minimizes `(B xi - w)^T G (B xi - w)` through the normal equations.
pub fn solve_quadratic(basis: &BasisMatrix, gram: &GramMatrix, w: &CoordVec) -> Result<SolveResult> {
    check_len(basis, w)?;
    check_gram(basis, gram)?;
    let (h, gb) = reduced_gram(basis, gram);
    let rhs = DVector::from_iterator(basis.m(), gb.iter().map(|c| dot(c, w.as_slice())));
    let chol = h
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NumericalError("B^T G B is not positive definite".into()))?;
    let xi = chol.solve(&rhs);
    let eval = gram.quad_form(w.as_slice()) - xi.dot(&(&h * &xi));
    Ok(SolveResult {
        u_star: basis.mul(xi.as_slice()),
        xi_star: xi.as_slice().to_vec(),
        eval,
    })
}

/// Modified Gram-Schmidt in the inner product `<x, y> = x^T G y`.
pub fn gram_schmidt_g(vectors: &[CoordVec], gram: &GramMatrix) -> Vec<CoordVec> {
    let mut out: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for v in vectors {
        let mut x = v.as_slice().to_vec();
        for _ in 0..2 {
            for (q, gq) in &out {
                let proj = dot(gq, &x);
                for (xi, qi) in x.iter_mut().zip(q) {
                    *xi -= proj * qi;
                }
            }
        }
        let gx = gram.apply(&x);
        let norm_sq = dot(&gx, &x);
        if norm_sq.max(0.0).sqrt() < G_NULL_TOL {
            continue;
        }
        let norm = norm_sq.sqrt();
        let q: Vec<f64> = x.iter().map(|v| v / norm).collect();
        let gq: Vec<f64> = gx.iter().map(|v| v / norm).collect();
        out.push((q, gq));
    }
    out.into_iter()
        .map(|(q, _)| CoordVec::from_vec_unchecked(q))
        .collect()
}

/// Least squares up to rotation of the goal, for orthonormal `B`.
pub fn solve_procrustes(basis: &BasisMatrix, w: &CoordVec) -> Result<SolveResult> {
    require_orthonormal(basis)?;
    check_len(basis, w)?;
    let data = ProcrustesData::new(basis, w);
    let (lambda, g) = rank2_max_eig(&data.a, &data.b);
    if lambda <= DEGENERATE_LAMBDA {
        return Err(Error::DegenerateGoal);
    }
    let xi: Vec<f64> = data.a.iter().zip(&data.b).map(|(a, b)| g[0] * a + g[1] * b).collect();
    Ok(SolveResult {
        u_star: basis.mul(&xi),
        xi_star: xi,
        eval: w.norm_sq() - lambda,
    })
}

/// Rotation-free quadratic-form distance through the generalized
/// eigenproblem `B^T G V G B xi = λ B^T G B xi`.
pub fn solve_procrustes_general(basis: &BasisMatrix, gram: &GramMatrix, w: &CoordVec) -> Result<SolveResult> {
    check_len(basis, w)?;
    check_gram(basis, gram)?;
    let (h, gb) = reduced_gram(basis, gram);
    let chol = h
        .cholesky()
        .ok_or_else(|| Error::NumericalError("B^T G B is not positive definite".into()))?;
    let w_c = w.quarter_turn();
    let m = basis.m();
    let rhs_a = DVector::from_iterator(m, gb.iter().map(|c| dot(c, w.as_slice())));
    let rhs_b = DVector::from_iterator(m, gb.iter().map(|c| dot(c, w_c.as_slice())));
    let l = chol.l();
    let a_hat = l
        .solve_lower_triangular(&rhs_a)
        .ok_or_else(|| Error::NumericalError("singular Cholesky factor".into()))?;
    let b_hat = l
        .solve_lower_triangular(&rhs_b)
        .ok_or_else(|| Error::NumericalError("singular Cholesky factor".into()))?;
    let (lambda, g) = rank2_max_eig(a_hat.as_slice(), b_hat.as_slice());
    if lambda <= DEGENERATE_LAMBDA {
        return Err(Error::DegenerateGoal);
    }
    let y = a_hat * g[0] + b_hat * g[1];
    let xi = l
        .tr_solve_lower_triangular(&y)
        .ok_or_else(|| Error::NumericalError("singular Cholesky factor".into()))?;
    Ok(SolveResult {
        u_star: basis.mul(xi.as_slice()),
        xi_star: xi.as_slice().to_vec(),
        eval: gram.quad_form(w.as_slice()) - lambda,
    })
}

/// Rotation by `theta` (counter-clockwise) followed by a translation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub theta: f64,
    pub translation: Point2,
}

impl RigidTransform {
    pub fn apply(&self, p: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(c * p.x - s * p.y, s * p.x + c * p.y) + self.translation
    }
}

fn centroid(points: &[Point2]) -> Point2 {
    let n = points.len() as f64;
    let (x, y) = points.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
    Point2::new(x / n, y / n)
}

/// Rigid motion of `u` that best matches `w` point by point.
pub fn optimal_rotation_align(u: &CoordVec, w: &CoordVec) -> Result<RigidTransform> {
    if u.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: u.len(),
        });
    }
    let up: Vec<Point2> = (0..u.n()).map(|t| u.point(t)).collect();
    let wp: Vec<Point2> = (0..w.n()).map(|t| w.point(t)).collect();
    let (cu, cw) = (centroid(&up), centroid(&wp));
    let (mut cross, mut dotp) = (0.0, 0.0);
    for (p, q) in up.iter().zip(&wp) {
        let (a, b) = (*p - cu, *q - cw);
        cross += a.cross(b);
        dotp += a.dot(b);
    }
    let theta = cross.atan2(dotp);
    let rot = RigidTransform {
        theta,
        translation: Point2::default(),
    };
    Ok(RigidTransform {
        theta,
        translation: cw - rot.apply(cu),
    })
}
