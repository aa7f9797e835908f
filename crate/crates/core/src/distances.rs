//! Gram matrices of the quadratic-form distances and the GAD edge set.
//!
//! Every Gram matrix is block diagonal `diag(K, K)` over stacked coordinates,
//! so only the `n x n` block `K` is stored.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_in_polygon, segments_properly_cross, Location, Point2, Segment, GEO_EPS};
use crate::goal::{rotate_weights, GoalPolygon, Renumbering};

/// Value added to `K(1,1)` to make Laplacian Gram matrices positive definite.
pub const REGULARIZATION: f64 = 1.0;

/// Edge-set length factors offered for the GAD distances.
pub const GAMMA_CHOICES: [f64; 3] = [1.2, 1.4, 1.6];
pub const DEFAULT_GAMMA: f64 = 1.4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GramKind {
    Identity,
    We,
    Wad,
    Gad,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    n: usize,
    kind: GramKind,
    regularized: bool,
    /// Sparse rows of `K`, sorted by column.
    rows: Vec<Vec<(usize, f64)>>,
}

impl GramMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            kind: GramKind::Identity,
            regularized: false,
            rows: (0..n).map(|t| vec![(t, 1.0)]).collect(),
        }
    }

    fn from_dense_block(n: usize, kind: GramKind, regularized: bool, k: &[f64]) -> Self {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| k[i * n + j] != 0.0)
                    .map(|j| (j, k[i * n + j]))
                    .collect()
            })
            .collect();
        Self {
            n,
            kind,
            regularized,
            rows,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> GramKind {
        self.kind
    }

    pub fn is_regularized(&self) -> bool {
        self.regularized
    }

    pub fn k_rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn k_dense(&self) -> DMatrix<f64> {
        let mut k = DMatrix::zeros(self.n, self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                k[(i, j)] = v;
            }
        }
        k
    }

    /// The full `2n x 2n` matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n;
        let k = self.k_dense();
        let mut g = DMatrix::zeros(2 * n, 2 * n);
        g.view_mut((0, 0), (n, n)).copy_from(&k);
        g.view_mut((n, n), (n, n)).copy_from(&k);
        g
    }

    /// `G u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(u.len(), 2 * n);
        let mut out = vec![0.0; 2 * n];
        for block in 0..2 {
            let base = block * n;
            for (i, row) in self.rows.iter().enumerate() {
                out[base + i] = row.iter().map(|&(j, v)| v * u[base + j]).sum();
            }
        }
        out
    }

    /// `u^T G u`.
    pub fn quad_form(&self, u: &[f64]) -> f64 {
        let gu = self.apply(u);
        gu.iter().zip(u).map(|(a, b)| a * b).sum()
    }
}

fn regularize(k: &mut [f64], on: bool) {
    if on {
        k[0] += REGULARIZATION;
    }
}

/// Diagonal Gram matrix of the rotated point weights.
pub fn gram_we(g: &GoalPolygon, j: Renumbering) -> GramMatrix {
    let weights = rotate_weights(g.point_weights(), j);
    GramMatrix {
        n: g.n(),
        kind: GramKind::We,
        regularized: false,
        rows: weights.iter().enumerate().map(|(t, &w)| vec![(t, w)]).collect(),
    }
}

/// Weighted cycle Laplacian over the rotated edge weights.
pub fn gram_wad(g: &GoalPolygon, j: Renumbering, regularize_first: bool) -> GramMatrix {
    let weights = rotate_weights(g.edge_weights(), j);
    cycle_laplacian(&weights, GramKind::Wad, regularize_first)
}

/// Unit cycle Laplacian: the adjacent-difference distance as a quadratic form.
pub fn gram_ad(n: usize, regularize_first: bool) -> GramMatrix {
    cycle_laplacian(&vec![1.0; n], GramKind::Wad, regularize_first)
}

fn cycle_laplacian(edge_weights: &[f64], kind: GramKind, reg: bool) -> GramMatrix {
    let n = edge_weights.len();
    let mut k = vec![0.0; n * n];
    for t in 0..n {
        let s = (t + 1) % n;
        let w = edge_weights[t];
        k[t * n + t] += w;
        k[s * n + s] += w;
        k[t * n + s] -= w;
        k[s * n + t] -= w;
    }
    regularize(&mut k, reg);
    GramMatrix::from_dense_block(n, kind, reg, &k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EcVariant {
    /// Interior chords only.
    Gad1,
    /// Chords entirely inside or entirely outside the polygon.
    Gad2,
    /// Any chord, including ones crossing the boundary; only chords are
    /// pruned against each other.
    #[serde(rename = "gad2-crossing")]
    Gad2Crossing,
}

/// Polygon edges plus accepted chords, as zero-based pairs `(s, t)`, `s < t`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSet {
    n: usize,
    edges: Vec<(usize, usize)>,
    lengths: Vec<f64>,
    gamma: f64,
    variant: EcVariant,
    polygon_length: f64,
}

impl EdgeSet {
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn variant(&self) -> EcVariant {
        self.variant
    }

    pub fn includes_polygon_edges(&self) -> bool {
        true
    }

    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Perimeter of the goal polygon.
    pub fn polygon_length(&self) -> f64 {
        self.polygon_length
    }

    pub fn is_polygon_edge(&self, s: usize, t: usize) -> bool {
        let (s, t) = (s.min(t), s.max(t));
        t == s + 1 || (s == 0 && t == self.n - 1)
    }
}

fn distance_to_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn chord_admissible(points: &[Point2], s: usize, t: usize, variant: EcVariant) -> bool {
    let n = points.len();
    let (a, b) = (points[s], points[t]);
    if a == b {
        return false;
    }
    let chord = Segment { a, b };
    for v in 0..n {
        if v != s && v != t && distance_to_segment(points[v], a, b) <= GEO_EPS {
            return false;
        }
    }
    if variant == EcVariant::Gad2Crossing {
        return true;
    }
    for e in 0..n {
        let edge = Segment {
            a: points[e],
            b: points[(e + 1) % n],
        };
        if segments_properly_cross(&chord, &edge) {
            return false;
        }
    }
    match point_in_polygon(chord.midpoint(), points) {
        Location::Inside => true,
        Location::Outside => variant != EcVariant::Gad1,
        Location::Boundary => false,
    }
}

pub fn build_ec(g: &GoalPolygon, gamma: f64, variant: EcVariant) -> Result<EdgeSet> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let pts = g.points();
    let n = pts.len();
    let limit = gamma * g.average_edge_length();

    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut lengths = Vec::new();
    for t in 0..n {
        let s = (t + 1) % n;
        edges.push((t.min(s), t.max(s)));
        lengths.push(pts[t].distance(pts[s]));
    }
    let polygon_length: f64 = lengths.iter().sum();

    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for s in 0..n {
        for t in (s + 2)..n {
            if s == 0 && t == n - 1 {
                continue;
            }
            let len = pts[s].distance(pts[t]);
            if len < limit && chord_admissible(pts, s, t, variant) {
                candidates.push((len, s, t));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));

    let mut accepted: Vec<Segment> = Vec::new();
    for (len, s, t) in candidates {
        let seg = Segment { a: pts[s], b: pts[t] };
        if accepted.iter().any(|other| segments_properly_cross(&seg, other)) {
            continue;
        }
        accepted.push(seg);
        edges.push((s, t));
        lengths.push(len);
    }

    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by_key(|&i| edges[i]);
    Ok(EdgeSet {
        n,
        edges: order.iter().map(|&i| edges[i]).collect(),
        lengths: order.iter().map(|&i| lengths[i]).collect(),
        gamma,
        variant,
        polygon_length,
    })
}

/// Graph Laplacian of `(points, E_c)` in the renumbered frame of `j`.
pub fn gram_gad(g: &GoalPolygon, ec: &EdgeSet, j: Renumbering, regularize_first: bool) -> GramMatrix {
    let n = g.n();
    assert_eq!(ec.n(), n);
    let shift = j.shift();
    let mut k = vec![0.0; n * n];
    for &(a, b) in ec.edges() {
        let s = (a + n - shift) % n;
        let t = (b + n - shift) % n;
        k[s * n + s] += 1.0;
        k[t * n + t] += 1.0;
        k[s * n + t] -= 1.0;
        k[t * n + s] -= 1.0;
    }
    regularize(&mut k, regularize_first);
    GramMatrix::from_dense_block(n, GramKind::Gad, regularize_first, &k)
}

/// `(u - w)^T G (u - w)`.
pub fn distance_value(gram: &GramMatrix, u: &[f64], w: &[f64]) -> Result<f64> {
    let len = 2 * gram.n();
    for v in [u, w] {
        if v.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: v.len(),
            });
        }
    }
    let d: Vec<f64> = u.iter().zip(w).map(|(a, b)| a - b).collect();
    Ok(gram.quad_form(&d))
}
