//! The goal polygon, its cyclic renumberings and per-point / per-edge weights.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{ensure_clockwise, is_simple_polygon, signed_area, stack_coords, CoordVec, Point2};

/// Weight given to a marked point or edge when the weights file omits a value.
pub const DEFAULT_MARKED_WEIGHT: f64 = 4.0;

/// A cyclic renumbering that starts from point `j` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Renumbering(usize);

impl Renumbering {
    pub fn new(j: usize, n: usize) -> Result<Self> {
        if j == 0 || j > n {
            return Err(Error::InvalidParameter(format!(
                "renumbering {j} outside 1..={n}"
            )));
        }
        Ok(Self(j))
    }

    pub fn j(self) -> usize {
        self.0
    }

    /// Zero-based offset of the first point.
    pub fn shift(self) -> usize {
        self.0 - 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoalPolygon {
    points: Vec<Point2>,
    w: CoordVec,
    point_weights: Vec<f64>,
    edge_weights: Vec<f64>,
}

impl GoalPolygon {
    /// Unit weights.
    pub fn from_points(points: Vec<Point2>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0; n], vec![1.0; n])
    }

    /// Validates the polygon and weights. Counter-clockwise input is reversed
    /// (keeping the first point) and the weights follow their points and edges.
    pub fn new(points: Vec<Point2>, point_weights: Vec<f64>, edge_weights: Vec<f64>) -> Result<Self> {
        let n = points.len();
        if n < 3 {
            return Err(Error::InvalidPolygon(format!(
                "a goal polygon needs at least 3 points, got {n}"
            )));
        }
        for (kind, ws) in [("point", &point_weights), ("edge", &edge_weights)] {
            if ws.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: ws.len(),
                });
            }
            if let Some((idx, &value)) = ws.iter().enumerate().find(|(_, &v)| !(v >= 1.0) || !v.is_finite()) {
                return Err(Error::InvalidWeight {
                    kind,
                    index: idx + 1,
                    value,
                });
            }
        }
        stack_coords(&points)?;
        if !is_simple_polygon(&points)? {
            return Err(Error::NonSimplePolygon);
        }
        let reversed = signed_area(&points) > 0.0;
        let points = ensure_clockwise(&points)?;
        let (point_weights, edge_weights) = if reversed {
            let pw = (0..n).map(|t| point_weights[(n - t) % n]).collect();
            let ew = (0..n).map(|t| edge_weights[(2 * n - t - 1) % n]).collect();
            (pw, ew)
        } else {
            (point_weights, edge_weights)
        };
        let w = stack_coords(&points)?;
        Ok(Self {
            points,
            w,
            point_weights,
            edge_weights,
        })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn w(&self) -> &CoordVec {
        &self.w
    }

    pub fn point_weights(&self) -> &[f64] {
        &self.point_weights
    }

    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weights
    }

    pub fn has_unit_weights(&self) -> bool {
        self.point_weights.iter().chain(&self.edge_weights).all(|&v| v == 1.0)
    }

    /// Same polygon and weights with new weight vectors (given in the stored,
    /// clockwise order).
    pub fn with_weights(&self, point_weights: Vec<f64>, edge_weights: Vec<f64>) -> Result<Self> {
        Self::new(self.points.clone(), point_weights, edge_weights)
    }

    /// `w_j`: both coordinate blocks rotated so that point `j` comes first.
    pub fn reindex(&self, j: Renumbering) -> CoordVec {
        reindex_coords(&self.w, j.shift())
    }

    pub fn average_edge_length(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|t| self.points[t].distance(self.points[(t + 1) % n]))
            .sum::<f64>()
            / n as f64
    }

    /// Translated to the vertex centroid and scaled to unit root-mean-square radius.
    pub fn normalized(&self) -> Self {
        let n = self.n() as f64;
        let (sx, sy) = self.points.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
        let c = Point2::new(sx / n, sy / n);
        let rms = (self.points.iter().map(|p| (*p - c).norm_sq()).sum::<f64>() / n).sqrt();
        let points: Vec<Point2> = self.points.iter().map(|p| (*p - c) * (1.0 / rms)).collect();
        let w = stack_coords(&points).expect("normalized points are finite");
        Self {
            points,
            w,
            point_weights: self.point_weights.clone(),
            edge_weights: self.edge_weights.clone(),
        }
    }
}

pub fn reindex(g: &GoalPolygon, j: Renumbering) -> CoordVec {
    g.reindex(j)
}

pub fn average_edge_length(g: &GoalPolygon) -> f64 {
    g.average_edge_length()
}

/// Rotates a stacked vector by `shift` positions in each block.
pub(crate) fn reindex_coords(w: &CoordVec, shift: usize) -> CoordVec {
    let n = w.n();
    let src = w.as_slice();
    let mut out = vec![0.0; 2 * n];
    for t in 0..n {
        let s = (t + shift) % n;
        out[t] = src[s];
        out[n + t] = src[n + s];
    }
    CoordVec::from_vec_unchecked(out)
}

/// The cyclic rotation `reindex` applies to coordinates, for a weight vector.
pub fn rotate_weights(weights: &[f64], j: Renumbering) -> Vec<f64> {
    let n = weights.len();
    (0..n).map(|t| weights[(t + j.shift()) % n]).collect()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn read_points(path: &Path) -> Result<Vec<Point2>> {
    let text = read_text(path)?;
    let mut lines = data_lines(&text);
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 0, "missing point count"))?;
    let n: usize = header
        .parse()
        .map_err(|_| parse_err(path, line_no, format!("expected point count, got {header:?}")))?;
    let mut points = Vec::with_capacity(n);
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_err(path, line_no, "expected \"x y\""));
        }
        let x: f64 = fields[0]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad number {:?}", fields[0])))?;
        let y: f64 = fields[1]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad number {:?}", fields[1])))?;
        if !x.is_finite() || !y.is_finite() {
            return Err(parse_err(path, line_no, "non-finite coordinate"));
        }
        points.push(Point2::new(x, y));
    }
    if points.len() != n {
        return Err(parse_err(
            path,
            0,
            format!("header says {n} points, found {}", points.len()),
        ));
    }
    Ok(points)
}

/// Reads a weights file for an `n`-point polygon in file order.
pub fn load_weights(path: &Path, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = read_text(path)?;
    let mut pw = vec![1.0; n];
    let mut ew = vec![1.0; n];
    for (line_no, line) in data_lines(&text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(parse_err(path, line_no, "expected \"P|E idx [weight]\""));
        }
        let target = match fields[0] {
            "P" | "p" => &mut pw,
            "E" | "e" => &mut ew,
            other => return Err(parse_err(path, line_no, format!("unknown kind {other:?}"))),
        };
        let idx: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad index {:?}", fields[1])))?;
        if idx == 0 || idx > n {
            return Err(parse_err(path, line_no, format!("index {idx} outside 1..={n}")));
        }
        let value = match fields.get(2) {
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| parse_err(path, line_no, format!("bad weight {s:?}")))?,
            None => DEFAULT_MARKED_WEIGHT,
        };
        if !(value >= 1.0) || !value.is_finite() {
            return Err(Error::InvalidWeight {
                kind: if fields[0].eq_ignore_ascii_case("P") { "point" } else { "edge" },
                index: idx,
                value,
            });
        }
        target[idx - 1] = value;
    }
    Ok((pw, ew))
}

pub fn load_goal(path: &Path) -> Result<GoalPolygon> {
    load_goal_with_weights(path, None)
}

pub fn load_goal_with_weights(path: &Path, weights: Option<&Path>) -> Result<GoalPolygon> {
    let points = read_points(path)?;
    let n = points.len();
    let (pw, ew) = match weights {
        Some(wp) => load_weights(wp, n)?,
        None => (vec![1.0; n], vec![1.0; n]),
    };
    GoalPolygon::new(points, pw, ew)
}

/// A random star-shaped polygon around the origin, normalized, clockwise.
pub fn random_star_polygon(n: usize, seed: u64) -> Result<GoalPolygon> {
    if n < 3 {
        return Err(Error::InvalidPolygon(format!("need at least 3 points, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|t| {
            let theta = -TAU * (t as f64 + rng.random_range(-0.35..0.35)) / n as f64;
            let r = rng.random_range(0.45..1.0);
            Point2::new(r * theta.cos(), r * theta.sin())
        })
        .collect();
    Ok(GoalPolygon::from_points(points)?.normalized())
}
