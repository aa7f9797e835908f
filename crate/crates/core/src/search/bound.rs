use nalgebra::{DMatrix, DVector};

use crate::goal::{reindex_coords, GoalPolygon};
use crate::linalg::{column_space, rank2_max_eig};
use crate::templates::{build_basis, Configuration};

#[derive(Clone, Debug, PartialEq)]
pub enum BoundKind {
    None,
    /// Zero-based goal point indices (in the renumbered frame) whose
    /// coordinates enter the restricted objective.
    CoordinateSubset(Vec<usize>),
}

/// Lower bounds on the Euclidean (or rotation-free Euclidean) objective.
///
/// Contract: the returned value never exceeds the objective of the queried
/// triplet.
#[derive(Clone, Debug)]
pub struct BoundProvider {
    kind: BoundKind,
    w: Option<crate::geometry::CoordVec>,
}

impl Default for BoundProvider {
    fn default() -> Self {
        Self::none()
    }
}

impl BoundProvider {
    pub fn none() -> Self {
        Self {
            kind: BoundKind::None,
            w: None,
        }
    }

    pub fn coordinate_subset(goal: &GoalPolygon, mut points: Vec<usize>) -> Self {
        points.sort_unstable();
        points.dedup();
        points.retain(|&p| p < goal.n());
        Self {
            kind: BoundKind::CoordinateSubset(points),
            w: Some(goal.w().clone()),
        }
    }

    pub fn kind(&self) -> &BoundKind {
        &self.kind
    }

    pub fn is_none(&self) -> bool {
        self.kind == BoundKind::None
    }
}

/// Relative eigenvalue floor; borderline directions are kept, which only
/// lowers the bound.
const RANK_TOL: f64 = 1e-13;

/// Lower bound on the objective of `(c, j)`, `j` one-based.
pub fn lower_bound(provider: &BoundProvider, c: &Configuration, j: usize) -> f64 {
    let (points, w) = match (&provider.kind, &provider.w) {
        (BoundKind::CoordinateSubset(p), Some(w)) => (p, w),
        _ => return f64::NEG_INFINITY,
    };
    let n = c.n();
    assert_eq!(w.n(), n, "bound goal size differs from configuration");
    let wj = reindex_coords(w, j - 1);
    let rows: Vec<usize> = points.iter().copied().chain(points.iter().map(|p| p + n)).collect();
    if rows.is_empty() {
        return 0.0;
    }
    let basis = build_basis(c, false).to_dense();
    let bs = DMatrix::from_fn(rows.len(), basis.ncols(), |r, col| basis[(rows[r], col)]);
    let ws = DVector::from_iterator(rows.len(), rows.iter().map(|&r| wj[r]));
    let wc_full = wj.quarter_turn();
    let wcs = DVector::from_iterator(rows.len(), rows.iter().map(|&r| wc_full[r]));

    // Orthonormal basis of the restricted column space.
    let q = column_space(&bs, RANK_TOL);
    let a: Vec<f64> = q.column_iter().map(|col| col.dot(&ws)).collect();
    let total = ws.norm_squared();
    let bound = if c.ty().requires_procrustes() {
        let b: Vec<f64> = q.column_iter().map(|col| col.dot(&wcs)).collect();
        total - rank2_max_eig(&a, &b).0
    } else {
        total - a.iter().map(|v| v * v).sum::<f64>()
    };
    bound
}
