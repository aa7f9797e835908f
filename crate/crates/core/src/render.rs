//! Tiling layout from a candidate's edge relations, and SVG output.
//!
//! Each tiling edge carries an isometry taking the tile onto its neighbour
//! across that edge. Those isometries generate the tiling's symmetry group;
//! the layout finds its translation lattice and one representative per
//! coset, then places copies over a patch of lattice cells.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{unstack_coords, Point2};
use crate::goal::{GoalPolygon, Renumbering};
use crate::search::Candidate;
use crate::solvers::optimal_rotation_align;
use crate::templates::{EdgeRole, PairMap};

/// Tolerance for the shared-edge coincidence check.
pub const EDGE_MATCH_TOL: f64 = 1e-8;

const KEY_SCALE: f64 = 1e6;
const MAX_GROUP_ELEMENTS: usize = 20_000;

/// `p ↦ L p + t` with `L` orthogonal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Isometry {
    pub linear: [[f64; 2]; 2],
    pub translation: Point2,
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry {
        linear: [[1.0, 0.0], [0.0, 1.0]],
        translation: Point2::new(0.0, 0.0),
    };

    pub fn translation(t: Point2) -> Self {
        Self {
            translation: t,
            ..Self::IDENTITY
        }
    }

    fn mul_linear(l: &[[f64; 2]; 2], p: Point2) -> Point2 {
        Point2::new(l[0][0] * p.x + l[0][1] * p.y, l[1][0] * p.x + l[1][1] * p.y)
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        Self::mul_linear(&self.linear, p) + self.translation
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let a = &self.linear;
        let b = &other.linear;
        let mut l = [[0.0; 2]; 2];
        for (r, row) in l.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Isometry {
            linear: l,
            translation: self.apply(other.translation),
        }
    }

    pub fn inverse(&self) -> Isometry {
        let l = self.linear;
        let lt = [[l[0][0], l[1][0]], [l[0][1], l[1][1]]];
        Isometry {
            linear: lt,
            translation: -Self::mul_linear(&lt, self.translation),
        }
    }

    pub fn determinant(&self) -> f64 {
        self.linear[0][0] * self.linear[1][1] - self.linear[0][1] * self.linear[1][0]
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        let l = &self.linear;
        let c0 = l[0][0] * l[0][0] + l[1][0] * l[1][0];
        let c1 = l[0][1] * l[0][1] + l[1][1] * l[1][1];
        let d = l[0][0] * l[0][1] + l[1][0] * l[1][1];
        (c0 - 1.0).abs() <= tol && (c1 - 1.0).abs() <= tol && d.abs() <= tol
    }

    fn linear_key(&self) -> [i64; 4] {
        let l = &self.linear;
        [l[0][0], l[0][1], l[1][0], l[1][1]].map(|v| (v * KEY_SCALE).round() as i64)
    }

    fn key(&self) -> ([i64; 4], [i64; 2]) {
        let t = self.translation;
        (self.linear_key(), [(t.x * KEY_SCALE).round() as i64, (t.y * KEY_SCALE).round() as i64])
    }

    fn is_translation(&self) -> bool {
        self.linear_key() == Self::IDENTITY.linear_key()
    }
}

/// Per-edge data for the adjacency generators.
#[derive(Clone, Debug)]
struct EdgeLink {
    /// Isometry taking this tile onto its neighbour across the edge.
    neighbour: Isometry,
    /// Edge of the neighbour that lies on this edge.
    partner: usize,
}

fn edge_points(points: &[Point2], h: &[usize], e: usize) -> Vec<Point2> {
    let n = points.len();
    (h[e]..=h[e + 1]).map(|t| points[t % n]).collect()
}

fn edge_links(cand: &Candidate) -> Result<Vec<EdgeLink>> {
    let c = cand.configuration();
    let h = c.tiling_vertex_indices();
    let pts = unstack_coords(&cand.u_star);
    let n = pts.len();
    let start = |e: usize| pts[h[e] % n];
    let end = |e: usize| pts[h[e + 1] % n];
    let spec = c.ty().edge_spec();
    let mut links = Vec::with_capacity(spec.len());
    for (e, s) in spec.iter().enumerate() {
        let link = match s.role {
            EdgeRole::Symmetric => EdgeLink {
                neighbour: Isometry {
                    linear: [[-1.0, 0.0], [0.0, -1.0]],
                    translation: start(e) + end(e),
                },
                partner: e,
            },
            EdgeRole::Paired { partner, map, leader } => {
                let (a, b) = if leader { (e, partner) } else { (partner, e) };
                let linear = map.linear();
                let anchor = if map == PairMap::GlideX || map == PairMap::GlideY {
                    start(b)
                } else {
                    end(b)
                };
                let g = Isometry {
                    linear,
                    translation: anchor - Isometry::mul_linear(&linear, start(a)),
                };
                EdgeLink {
                    neighbour: if leader { g.inverse() } else { g },
                    partner,
                }
            }
        };
        links.push(link);
    }
    Ok(links)
}

fn centroid(points: &[Point2]) -> Point2 {
    let k = points.len() as f64;
    points.iter().fold(Point2::default(), |acc, &p| acc + p) * (1.0 / k)
}

/// Symmetry group data of a candidate's tiling.
#[derive(Clone, Debug)]
struct Group {
    lattice: [Point2; 2],
    cosets: Vec<Isometry>,
}

fn tiling_group(cand: &Candidate, links: &[EdgeLink]) -> Result<Group> {
    let pts = unstack_coords(&cand.u_star);
    let c = centroid(&pts);
    let radius = pts.iter().map(|p| p.distance(c)).fold(0.0, f64::max);
    if !(radius > 0.0) {
        return Err(Error::UnsupportedLayout("degenerate tile".into()));
    }
    let reach = 12.0 * radius;

    let mut seen: HashMap<([i64; 4], [i64; 2]), usize> = HashMap::new();
    let mut elems = vec![Isometry::IDENTITY];
    seen.insert(Isometry::IDENTITY.key(), 0);
    let mut head = 0;
    while head < elems.len() {
        let p = elems[head];
        head += 1;
        for link in links {
            let q = p.compose(&link.neighbour);
            if q.apply(c).distance(c) > reach {
                continue;
            }
            if let std::collections::hash_map::Entry::Vacant(slot) = seen.entry(q.key()) {
                slot.insert(elems.len());
                elems.push(q);
                if elems.len() > MAX_GROUP_ELEMENTS {
                    return Err(Error::UnsupportedLayout("symmetry group does not close".into()));
                }
            }
        }
    }

    let translations: Vec<Point2> = elems
        .iter()
        .filter(|g| g.is_translation())
        .map(|g| g.translation)
        .filter(|t| t.norm() > radius * 1e-6)
        .collect();
    let shortest = |pred: &dyn Fn(Point2) -> bool| {
        translations
            .iter()
            .copied()
            .filter(|&t| pred(t))
            .min_by(|a, b| a.norm_sq().total_cmp(&b.norm_sq()).then(a.x.total_cmp(&b.x)).then(a.y.total_cmp(&b.y)))
    };
    let t1 = shortest(&|_| true).ok_or_else(|| Error::UnsupportedLayout("no translations found".into()))?;
    let t2 = shortest(&|t| t1.cross(t).abs() > 1e-6 * t1.norm() * t.norm())
        .ok_or_else(|| Error::UnsupportedLayout("translations are collinear".into()))?;
    let det = t1.cross(t2);
    for &t in &translations {
        let a = t.cross(t2) / det;
        let b = t1.cross(t) / det;
        if (a - a.round()).abs() > 1e-6 || (b - b.round()).abs() > 1e-6 {
            return Err(Error::UnsupportedLayout("translations do not form a lattice".into()));
        }
    }

    let mut reps: Vec<([i64; 4], Isometry, f64)> = Vec::new();
    for g in &elems {
        let d = g.apply(c).distance(c);
        match reps.iter_mut().find(|(k, _, _)| *k == g.linear_key()) {
            Some(slot) => {
                if d < slot.2 - 1e-9 * radius {
                    slot.1 = *g;
                    slot.2 = d;
                }
            }
            None => reps.push((g.linear_key(), *g, d)),
        }
    }
    Ok(Group {
        lattice: [t1, t2],
        cosets: reps.into_iter().map(|(_, g, _)| g).collect(),
    })
}

/// Placed copies of one candidate tile.
#[derive(Clone, Debug)]
pub struct TilingLayout {
    pub base: Candidate,
    pub placements: Vec<Isometry>,
    /// Coset index of each placement (0 is the identity coset).
    pub cosets: Vec<usize>,
    pub extent: usize,
    pub lattice: [Point2; 2],
}

impl TilingLayout {
    /// Tile contour under each placement.
    pub fn placed_tiles(&self) -> Vec<Vec<Point2>> {
        let pts = unstack_coords(&self.base.u_star);
        self.placements
            .iter()
            .map(|g| pts.iter().map(|&p| g.apply(p)).collect())
            .collect()
    }

    /// Largest point deviation over all shared tiling edges between placed
    /// neighbours, with the number of neighbour pairs inspected.
    pub fn edge_mismatch(&self) -> Result<(f64, usize)> {
        let c = self.base.configuration();
        let h = c.tiling_vertex_indices();
        let pts = unstack_coords(&self.base.u_star);
        let links = edge_links(&self.base)?;
        let index: HashMap<_, usize> = self.placements.iter().enumerate().map(|(i, g)| (g.key(), i)).collect();
        let mut worst = 0.0f64;
        let mut pairs = 0;
        for p in &self.placements {
            for (e, link) in links.iter().enumerate() {
                let q = p.compose(&link.neighbour);
                if !index.contains_key(&q.key()) {
                    continue;
                }
                let mine: Vec<Point2> = edge_points(&pts, &h, e).iter().map(|&x| p.apply(x)).collect();
                let theirs: Vec<Point2> = edge_points(&pts, &h, link.partner).iter().map(|&x| q.apply(x)).collect();
                if mine.len() != theirs.len() {
                    worst = f64::INFINITY;
                    continue;
                }
                let same = mine.iter().zip(&theirs).map(|(a, b)| a.distance(*b)).fold(0.0, f64::max);
                let rev = mine.iter().zip(theirs.iter().rev()).map(|(a, b)| a.distance(*b)).fold(0.0, f64::max);
                worst = worst.max(same.min(rev));
                pairs += 1;
            }
        }
        Ok((worst, pairs))
    }
}

/// Lays out `(2 extent + 1)²` lattice cells of the candidate's tiling, one
/// tile per coset in each cell; `extent = 0` gives the identity alone.
pub fn layout_tiling(cand: &Candidate, extent: usize) -> Result<TilingLayout> {
    let links = edge_links(cand)?;
    let group = tiling_group(cand, &links)?;
    let mut placements = Vec::new();
    let mut cosets = Vec::new();
    if extent == 0 {
        placements.push(Isometry::IDENTITY);
        cosets.push(0);
    } else {
        let e = extent as i64;
        let [t1, t2] = group.lattice;
        for a in -e..=e {
            for b in -e..=e {
                let shift = Isometry::translation(t1 * a as f64 + t2 * b as f64);
                for (ci, rep) in group.cosets.iter().enumerate() {
                    placements.push(shift.compose(rep));
                    cosets.push(ci);
                }
            }
        }
    }
    Ok(TilingLayout {
        base: cand.clone(),
        placements,
        cosets,
        extent,
        lattice: group.lattice,
    })
}

/// Tile contour moved onto the goal by the best rigid motion.
pub fn overlay_points(cand: &Candidate, goal: &GoalPolygon) -> Result<Vec<Point2>> {
    let wj = goal.reindex(Renumbering::new(cand.j, goal.n())?);
    let motion = optimal_rotation_align(&cand.u_star, &wj)?;
    Ok(unstack_coords(&cand.u_star).into_iter().map(|p| motion.apply(p)).collect())
}

fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn path_data(points: &[Point2]) -> String {
    let mut d = String::new();
    for (i, p) in points.iter().enumerate() {
        let _ = write!(d, "{}{} {} ", if i == 0 { "M" } else { "L" }, num(p.x), num(-p.y));
    }
    d.push('Z');
    d
}

struct Bounds {
    min: Point2,
    max: Point2,
}

impl Bounds {
    fn of<'a>(points: impl IntoIterator<Item = &'a Point2>) -> Self {
        let mut b = Bounds {
            min: Point2::new(f64::INFINITY, f64::INFINITY),
            max: Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        for p in points {
            b.min = Point2::new(b.min.x.min(p.x), b.min.y.min(p.y));
            b.max = Point2::new(b.max.x.max(p.x), b.max.y.max(p.y));
        }
        b
    }

    /// Opening `<svg>` tag covering the box in screen coordinates.
    fn header(&self, pixels: f64) -> String {
        let w = (self.max.x - self.min.x).max(1e-9);
        let h = (self.max.y - self.min.y).max(1e-9);
        let margin = 0.05 * w.max(h);
        let (x0, y0) = (self.min.x - margin, -self.max.y - margin);
        let (vw, vh) = (w + 2.0 * margin, h + 2.0 * margin);
        let scale = pixels / vw.max(vh);
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"{} {} {} {}\" width=\"{}\" height=\"{}\">\n",
            num(x0),
            num(y0),
            num(vw),
            num(vh),
            num(vw * scale),
            num(vh * scale)
        )
    }
}

/// SVG text of the aligned tile drawn over the goal polygon.
pub fn overlay_svg(cand: &Candidate, goal: &GoalPolygon) -> Result<String> {
    if !cand.simple {
        return Err(Error::NonSimplePolygon);
    }
    let tile = overlay_points(cand, goal)?;
    let goal_pts = goal.points();
    let bounds = Bounds::of(tile.iter().chain(goal_pts));
    let size = (bounds.max.x - bounds.min.x).max(bounds.max.y - bounds.min.y).max(1e-9);
    let stroke = num(size * 0.004);
    let mut s = bounds.header(600.0);
    let _ = writeln!(
        s,
        "<path d=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"{stroke}\"/>",
        path_data(goal_pts)
    );
    let _ = writeln!(
        s,
        "<path d=\"{}\" fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"#08519c\" stroke-width=\"{stroke}\"/>",
        path_data(&tile)
    );
    let r = num(size * 0.008);
    for p in goal_pts {
        let _ = writeln!(s, "<circle cx=\"{}\" cy=\"{}\" r=\"{r}\" fill=\"#000000\"/>", num(p.x), num(-p.y));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

const PALETTE: [&str; 6] = ["#fdd49e", "#a6bddb", "#c7e9c0", "#fcbba1", "#dadaeb", "#fee391"];

/// SVG text of every placed tile, filled by coset.
pub fn tiling_svg(layout: &TilingLayout) -> String {
    let tiles = layout.placed_tiles();
    let bounds = Bounds::of(tiles.iter().flatten());
    let size = (bounds.max.x - bounds.min.x).max(bounds.max.y - bounds.min.y).max(1e-9);
    let stroke = num(size * 0.002);
    let mut s = bounds.header(800.0);
    for (tile, &coset) in tiles.iter().zip(&layout.cosets) {
        let _ = writeln!(
            s,
            "<path d=\"{}\" fill=\"{}\" stroke=\"#333333\" stroke-width=\"{stroke}\"/>",
            path_data(tile),
            PALETTE[coset % PALETTE.len()]
        );
    }
    s.push_str("</svg>\n");
    s
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn render_overlay(cand: &Candidate, goal: &GoalPolygon, path: &Path) -> Result<()> {
    write_file(path, &overlay_svg(cand, goal)?)
}

pub fn render_tiling(layout: &TilingLayout, path: &Path) -> Result<()> {
    write_file(path, &tiling_svg(layout))
}
