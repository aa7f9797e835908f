//! Planar primitives: points, stacked coordinate vectors, and the polygon and
//! segment predicates used by the goal loader, the edge-set builder and the
//! tile validator.
//!
//! Coordinates are y-up. A polygon is clockwise when its shoelace area is
//! negative.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary and collinearity tolerance in goal-polygon units.
pub const GEO_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        self + (other - self) * t
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Self) -> Self {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Self) -> Self {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Self {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Self {
        Point2::new(-self.x, -self.y)
    }
}

/// A polygon stacked as `(x_1..x_n, y_1..y_n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoordVec(Vec<f64>);

impl CoordVec {
    /// Wraps a raw vector. The length must be even and positive.
    pub fn from_vec(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() || entries.len() % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: entries.len() + entries.len() % 2,
                found: entries.len(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite coordinate".into()));
        }
        Ok(Self(entries))
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<f64>) -> Self {
        debug_assert!(entries.len() % 2 == 0);
        Self(entries)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; 2 * n])
    }

    /// Number of points.
    pub fn n(&self) -> usize {
        self.0.len() / 2
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn point(&self, t: usize) -> Point2 {
        let n = self.n();
        Point2::new(self.0[t], self.0[n + t])
    }

    pub fn dot(&self, other: &CoordVec) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// `(y_1..y_n, -x_1..-x_n)`: every point rotated by -90 degrees.
    pub fn quarter_turn(&self) -> CoordVec {
        let n = self.n();
        let mut out = vec![0.0; 2 * n];
        for t in 0..n {
            out[t] = self.0[n + t];
            out[n + t] = -self.0[t];
        }
        CoordVec(out)
    }

    /// Cyclic difference vector `(x_2-x_1, .., x_1-x_n, y_2-y_1, .., y_1-y_n)`.
    pub fn cyclic_differences(&self) -> CoordVec {
        let n = self.n();
        let mut out = vec![0.0; 2 * n];
        for block in 0..2 {
            let base = block * n;
            for t in 0..n {
                out[base + t] = self.0[base + (t + 1) % n] - self.0[base + t];
            }
        }
        CoordVec(out)
    }
}

impl std::ops::Index<usize> for CoordVec {
    type Output = f64;
    fn index(&self, idx: usize) -> &f64 {
        &self.0[idx]
    }
}

pub fn stack_coords(points: &[Point2]) -> Result<CoordVec> {
    if points.is_empty() {
        return Err(Error::InvalidPolygon("empty point list".into()));
    }
    if let Some(p) = points.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidPolygon(format!("non-finite point {p:?}")));
    }
    let n = points.len();
    let mut entries = vec![0.0; 2 * n];
    for (t, p) in points.iter().enumerate() {
        entries[t] = p.x;
        entries[n + t] = p.y;
    }
    Ok(CoordVec(entries))
}

pub fn unstack_coords(u: &CoordVec) -> Vec<Point2> {
    (0..u.n()).map(|t| u.point(t)).collect()
}

/// Shoelace area; negative for clockwise polygons.
pub fn signed_area(points: &[Point2]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|t| points[t].cross(points[(t + 1) % n]))
        .sum::<f64>()
        * 0.5
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub fn new(a: Point2, b: Point2) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidPolygon(format!("degenerate segment at {a:?}")));
        }
        Ok(Self { a, b })
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn midpoint(&self) -> Point2 {
        self.a.lerp(self.b, 0.5)
    }
}

/// Sign of the exact orientation determinant of `(a, b, c)`:
/// positive when counter-clockwise.
pub fn orientation(a: Point2, b: Point2, c: Point2) -> f64 {
    let det = robust::orient2d(
        robust::Coord { x: a.x, y: a.y },
        robust::Coord { x: b.x, y: b.y },
        robust::Coord { x: c.x, y: c.y },
    );
    // robust's sign convention is the reverse of ours.
    -det
}

/// How two closed segments relate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentRelation {
    Disjoint,
    /// Interiors cross at exactly one point.
    ProperCross,
    /// They meet at a point that is an endpoint of at least one of them.
    Touch,
    /// Collinear and sharing more than one point.
    CollinearOverlap,
}

fn on_closed_segment(p: Point2, a: Point2, b: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

pub fn classify_segments(s1: &Segment, s2: &Segment) -> SegmentRelation {
    let (p, q, r, s) = (s1.a, s1.b, s2.a, s2.b);
    let o1 = orientation(p, q, r);
    let o2 = orientation(p, q, s);
    let o3 = orientation(r, s, p);
    let o4 = orientation(r, s, q);

    if o1 == 0.0 && o2 == 0.0 {
        // Collinear supporting lines: project onto the dominant axis.
        let use_x = (q.x - p.x).abs() >= (q.y - p.y).abs();
        let key = |pt: Point2| if use_x { pt.x } else { pt.y };
        let (a0, a1) = (key(p).min(key(q)), key(p).max(key(q)));
        let (b0, b1) = (key(r).min(key(s)), key(r).max(key(s)));
        let lo = a0.max(b0);
        let hi = a1.min(b1);
        return if lo < hi {
            SegmentRelation::CollinearOverlap
        } else if lo == hi {
            SegmentRelation::Touch
        } else {
            SegmentRelation::Disjoint
        };
    }

    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return SegmentRelation::ProperCross;
    }
    let touches = (o1 == 0.0 && on_closed_segment(r, p, q))
        || (o2 == 0.0 && on_closed_segment(s, p, q))
        || (o3 == 0.0 && on_closed_segment(p, r, s))
        || (o4 == 0.0 && on_closed_segment(q, r, s));
    if touches {
        SegmentRelation::Touch
    } else {
        SegmentRelation::Disjoint
    }
}

/// True iff the interiors of the segments meet at exactly one point.
/// Endpoint contact and collinear overlap are not proper crossings.
pub fn segments_properly_cross(s1: &Segment, s2: &Segment) -> bool {
    classify_segments(s1, s2) == SegmentRelation::ProperCross
}

pub fn is_simple_polygon(points: &[Point2]) -> Result<bool> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InvalidPolygon(format!(
            "a polygon needs at least 3 points, got {n}"
        )));
    }
    let mut edges = Vec::with_capacity(n);
    for t in 0..n {
        match Segment::new(points[t], points[(t + 1) % n]) {
            Ok(s) => edges.push(s),
            Err(_) => return Ok(false),
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let rel = classify_segments(&edges[i], &edges[j]);
            if adjacent {
                // Adjacent edges share exactly one endpoint. Anything beyond
                // that (folding back along the same line) is an overlap.
                if rel == SegmentRelation::CollinearOverlap {
                    return Ok(false);
                }
                if n == 3 {
                    continue;
                }
                // A touch elsewhere than the shared vertex also breaks simplicity.
                let shared = if j == i + 1 { edges[i].b } else { edges[i].a };
                let other_i = if j == i + 1 { edges[i].a } else { edges[i].b };
                let other_j = if j == i + 1 { edges[j].b } else { edges[j].a };
                if other_i == shared || other_j == shared {
                    return Ok(false);
                }
            } else if rel != SegmentRelation::Disjoint {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Returns the polygon in clockwise order. A counter-clockwise input is
/// reversed while keeping its first point first.
pub fn ensure_clockwise(points: &[Point2]) -> Result<Vec<Point2>> {
    if points.len() < 3 {
        return Err(Error::InvalidPolygon("fewer than 3 points".into()));
    }
    let area = signed_area(points);
    if area.abs() <= GEO_EPS * GEO_EPS || !area.is_finite() {
        return Err(Error::InvalidPolygon("zero-area polygon".into()));
    }
    if area < 0.0 {
        return Ok(points.to_vec());
    }
    let mut out = Vec::with_capacity(points.len());
    out.push(points[0]);
    out.extend(points[1..].iter().rev());
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Inside,
    Outside,
    Boundary,
}

fn distance_to_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Even-odd classification with a `GEO_EPS` boundary band.
pub fn point_in_polygon(p: Point2, poly: &[Point2]) -> Location {
    let n = poly.len();
    for t in 0..n {
        if distance_to_segment(p, poly[t], poly[(t + 1) % n]) <= GEO_EPS {
            return Location::Boundary;
        }
    }
    let mut inside = false;
    for t in 0..n {
        let a = poly[t];
        let b = poly[(t + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}
