use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{Configuration, EdgeClass, IsohedralType, PairMap};
use crate::geometry::{is_simple_polygon, unstack_coords, CoordVec};

/// Sparse column: `(row, value)` pairs with distinct rows.
pub type Column = Vec<(usize, f64)>;

const NULL_TOL: f64 = 1e-10;
const DROP_TOL: f64 = 1e-9;

/// Homogeneous linear system `A u = 0` over stacked coordinates.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    n: usize,
    rows: Vec<Column>,
}

impl ConstraintSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Column] {
        &self.rows
    }

    /// Largest absolute row value `|A u|`.
    pub fn residual(&self, u: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(i, v)| v * u[i]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.rows.len(), 2 * self.n);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                a[(r, c)] += v;
            }
        }
        a
    }
}

/// Columns spanning the feasible tile shapes of one configuration.
///
/// Interior columns (sparse, one per free interior coordinate) come first,
/// followed by the dense columns lifted from the tiling-vertex null space.
#[derive(Clone, Debug)]
pub struct BasisMatrix {
    n: usize,
    columns: Vec<Column>,
    interior: usize,
    orthonormal: bool,
}

impl BasisMatrix {
    /// Wraps a dense `2n x m` matrix; it counts as orthonormal when
    /// `B^T B = I` within `1e-10`.
    pub fn from_dense(b: &DMatrix<f64>) -> crate::Result<Self> {
        if b.nrows() == 0 || b.nrows() % 2 != 0 {
            return Err(crate::Error::DimensionMismatch {
                expected: 2 * (b.nrows() / 2).max(1),
                found: b.nrows(),
            });
        }
        let gram = b.transpose() * b;
        let orthonormal = (0..b.ncols())
            .all(|i| (0..b.ncols()).all(|j| (gram[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10));
        let columns = (0..b.ncols())
            .map(|c| (0..b.nrows()).filter(|&r| b[(r, c)] != 0.0).map(|r| (r, b[(r, c)])).collect())
            .collect();
        Ok(Self {
            n: b.nrows() / 2,
            columns,
            interior: 0,
            orthonormal,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    /// Number of leading sparse interior columns.
    pub fn interior_count(&self) -> usize {
        self.interior
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(2 * self.n, self.m());
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, v) in col {
                b[(r, c)] = v;
            }
        }
        b
    }

    /// `B xi`.
    pub fn mul(&self, xi: &[f64]) -> CoordVec {
        assert_eq!(xi.len(), self.m());
        let mut u = vec![0.0; 2 * self.n];
        for (col, &x) in self.columns.iter().zip(xi) {
            for &(r, v) in col {
                u[r] += v * x;
            }
        }
        CoordVec::from_vec_unchecked(u)
    }

    /// `B^T w`.
    pub fn tr_mul(&self, w: &[f64]) -> DVector<f64> {
        assert_eq!(w.len(), 2 * self.n);
        DVector::from_iterator(
            self.m(),
            self.columns
                .iter()
                .map(|col| col.iter().map(|&(r, v)| v * w[r]).sum::<f64>()),
        )
    }
}

/// Orthonormal difference basis with the lift back to coordinates.
#[derive(Clone, Debug)]
pub struct DifferenceBasis {
    basis: BasisMatrix,
    lift: Vec<Vec<f64>>,
}

impl DifferenceBasis {
    pub fn basis(&self) -> &BasisMatrix {
        &self.basis
    }

    /// A coordinate vector whose cyclic differences are `B̄ xi`.
    pub fn lift(&self, xi: &[f64]) -> CoordVec {
        let len = 2 * self.basis.n;
        let mut u = vec![0.0; len];
        for (col, &x) in self.lift.iter().zip(xi) {
            for (ui, v) in u.iter_mut().zip(col) {
                *ui += v * x;
            }
        }
        CoordVec::from_vec_unchecked(u)
    }

    pub fn lift_matrix(&self) -> DMatrix<f64> {
        let len = 2 * self.basis.n;
        DMatrix::from_fn(len, self.lift.len(), |r, c| self.lift[c][r])
    }
}

struct Layout {
    n: usize,
    h: Vec<usize>,
    edge_k: Vec<usize>,
}

impl Layout {
    fn new(c: &Configuration) -> Self {
        Self {
            n: c.n(),
            h: c.tiling_vertex_indices(),
            edge_k: c.edge_counts(),
        }
    }

    fn idx(&self, t: usize) -> usize {
        t % self.n
    }

    fn x(&self, t: usize) -> usize {
        self.idx(t)
    }

    fn y(&self, t: usize) -> usize {
        self.n + self.idx(t)
    }

    fn start(&self, e: usize) -> usize {
        self.h[e]
    }

    fn end(&self, e: usize) -> usize {
        self.h[e + 1]
    }
}

fn push_merged(row: &mut Column, idx: usize, v: f64) {
    if let Some(entry) = row.iter_mut().find(|(i, _)| *i == idx) {
        entry.1 += v;
    } else {
        row.push((idx, v));
    }
}

fn clean(mut row: Column) -> Column {
    row.retain(|&(_, v)| v != 0.0);
    row.sort_by_key(|&(i, _)| i);
    row
}

/// Partner point of interior offset `i` on leader edge `a`.
fn partner(l: &Layout, b: usize, map: PairMap, i: usize) -> usize {
    if map.preserves_orientation() {
        l.end(b) - i
    } else {
        l.start(b) + i
    }
}

pub fn build_constraints(c: &Configuration) -> ConstraintSystem {
    let l = Layout::new(c);
    let mut rows = Vec::new();
    for (class, &k) in c.ty().classes().iter().zip(c.k()) {
        match *class {
            EdgeClass::Pair { a, b, map } => {
                let m = map.linear();
                let a0 = l.start(a);
                let b_anchor = if map.preserves_orientation() { l.end(b) } else { l.start(b) };
                for i in 1..=k + 1 {
                    let p = a0 + i;
                    let q = partner(&l, b, map, i);
                    // (u_q - u_anchor) - M (u_p - u_a0) = 0, one row per axis.
                    for axis in 0..2 {
                        let mut row = Column::new();
                        let (qi, ai) = if axis == 0 { (l.x(q), l.x(b_anchor)) } else { (l.y(q), l.y(b_anchor)) };
                        push_merged(&mut row, qi, 1.0);
                        push_merged(&mut row, ai, -1.0);
                        push_merged(&mut row, l.x(p), -m[axis][0]);
                        push_merged(&mut row, l.y(p), -m[axis][1]);
                        push_merged(&mut row, l.x(a0), m[axis][0]);
                        push_merged(&mut row, l.y(a0), m[axis][1]);
                        rows.push(clean(row));
                    }
                }
            }
            EdgeClass::Symmetric { e } => {
                let (s, t) = (l.start(e), l.end(e));
                for i in 1..=(k + 1) / 2 {
                    for axis in 0..2 {
                        let f = |p: usize| if axis == 0 { l.x(p) } else { l.y(p) };
                        let mut row = Column::new();
                        push_merged(&mut row, f(t - i), 1.0);
                        push_merged(&mut row, f(t), -1.0);
                        push_merged(&mut row, f(s + i), 1.0);
                        push_merged(&mut row, f(s), -1.0);
                        rows.push(clean(row));
                    }
                }
            }
        }
    }
    ConstraintSystem { n: c.n(), rows }
}

/// Constraint rows on tiling-vertex coordinates `(x_0..x_{V-1}, y_0..y_{V-1})`.
fn vertex_relations(ty: IsohedralType) -> DMatrix<f64> {
    let v = ty.vertex_count();
    let classes: Vec<_> = ty
        .classes()
        .into_iter()
        .filter_map(|c| match c {
            EdgeClass::Pair { a, b, map } => Some((a, b, map)),
            EdgeClass::Symmetric { .. } => None,
        })
        .collect();
    let mut r = DMatrix::zeros(2 * classes.len(), 2 * v);
    for (row, &(a, b, map)) in classes.iter().enumerate() {
        let m = map.linear();
        let (a0, a1) = (a, (a + 1) % v);
        let (b0, b1) = (b, (b + 1) % v);
        // Orientation preserving: u_b0 - u_b1 = M (u_a1 - u_a0).
        // Glide:                  u_b1 - u_b0 = F (u_a1 - u_a0).
        let (plus, minus) = if map.preserves_orientation() { (b0, b1) } else { (b1, b0) };
        for axis in 0..2 {
            let rr = 2 * row + axis;
            r[(rr, axis * v + plus)] += 1.0;
            r[(rr, axis * v + minus)] -= 1.0;
            for comp in 0..2 {
                r[(rr, comp * v + a1)] -= m[axis][comp];
                r[(rr, comp * v + a0)] += m[axis][comp];
            }
        }
    }
    r
}

fn compute_vertex_null_space(ty: IsohedralType) -> DMatrix<f64> {
    let r = vertex_relations(ty);
    let dim = r.ncols();
    let gram = r.transpose() * &r;
    let eig = SymmetricEigen::new(gram);
    let mut idx: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i].abs() < NULL_TOL).collect();
    idx.sort_unstable();
    let mut out = DMatrix::zeros(dim, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        // Deterministic sign: first significant entry positive.
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        out.set_column(c, &col);
    }
    out
}

/// Orthonormal basis of the tiling-vertex relation null space, `2V x d`.
pub(crate) fn vertex_null_space(ty: IsohedralType) -> &'static DMatrix<f64> {
    static CACHE: [OnceLock<DMatrix<f64>>; 10] = [const { OnceLock::new() }; 10];
    CACHE[ty.index()].get_or_init(|| compute_vertex_null_space(ty))
}

fn interior_columns(c: &Configuration, l: &Layout) -> Vec<Column> {
    let mut cols = Vec::new();
    for (class, &k) in c.ty().classes().iter().zip(c.k()) {
        match *class {
            EdgeClass::Pair { a, b, map } => {
                let m = map.linear();
                for i in 1..=k {
                    let p = l.start(a) + i;
                    let q = partner(l, b, map, i);
                    for axis in 0..2 {
                        let own = if axis == 0 { l.x(p) } else { l.y(p) };
                        let col = vec![(own, 1.0), (l.x(q), m[0][axis]), (l.y(q), m[1][axis])];
                        cols.push(clean(col));
                    }
                }
            }
            EdgeClass::Symmetric { e } => {
                let (s, t) = (l.start(e), l.end(e));
                for i in 1..=k / 2 {
                    cols.push(clean(vec![(l.x(s + i), 1.0), (l.x(t - i), -1.0)]));
                    cols.push(clean(vec![(l.y(s + i), 1.0), (l.y(t - i), -1.0)]));
                }
            }
        }
    }
    cols
}

/// Dense columns: vertex null vectors with interior points interpolated along edges.
fn vertex_columns(c: &Configuration, l: &Layout) -> Vec<Vec<f64>> {
    let null = vertex_null_space(c.ty());
    let v = c.ty().vertex_count();
    let n = l.n;
    null.column_iter()
        .map(|z| {
            let mut col = vec![0.0; 2 * n];
            for e in 0..v {
                let (s, t) = (e, (e + 1) % v);
                let k = l.edge_k[e];
                for i in 0..=k {
                    let f = i as f64 / (k + 1) as f64;
                    let p = l.start(e) + i;
                    col[l.x(p)] = z[s] + f * (z[t] - z[s]);
                    col[l.y(p)] = z[v + s] + f * (z[v + t] - z[v + s]);
                }
            }
            col
        })
        .collect()
}

fn dense_to_sparse(col: &[f64]) -> Column {
    col.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, &v)| (i, v))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn build_basis(c: &Configuration, orthonormalize: bool) -> BasisMatrix {
    let l = Layout::new(c);
    let mut interior = interior_columns(c, &l);
    let verts = vertex_columns(c, &l);
    let n_int = interior.len();
    if !orthonormalize {
        interior.extend(verts.iter().map(|v| dense_to_sparse(v)));
        return BasisMatrix {
            n: c.n(),
            columns: interior,
            interior: n_int,
            orthonormal: false,
        };
    }

    // Interior columns have disjoint supports: scaling suffices.
    for col in &mut interior {
        let norm = col.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        for e in col.iter_mut() {
            e.1 /= norm;
        }
    }
    let mut done: Vec<Vec<f64>> = Vec::with_capacity(verts.len());
    for mut v in verts {
        let orig = dot(&v, &v).sqrt();
        for _ in 0..2 {
            for q in &interior {
                let proj: f64 = q.iter().map(|&(r, x)| x * v[r]).sum();
                for &(r, x) in q {
                    v[r] -= proj * x;
                }
            }
            for q in &done {
                let proj = dot(q, &v);
                axpy(&mut v, -proj, q);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > DROP_TOL * orig.max(1.0) {
            v.iter_mut().for_each(|x| *x /= norm);
            done.push(v);
        }
    }
    interior.extend(done.iter().map(|v| dense_to_sparse(v)));
    BasisMatrix {
        n: c.n(),
        columns: interior,
        interior: n_int,
        orthonormal: true,
    }
}

/// Cyclic difference operator applied to a stacked column.
fn shift_difference(col: &Column, n: usize) -> Vec<f64> {
    let mut d = vec![0.0; 2 * n];
    for &(r, v) in col {
        let (block, t) = (r / n, r % n);
        // Row t of D is row t+1 of B minus row t of B.
        d[block * n + t] -= v;
        d[block * n + (t + n - 1) % n] += v;
    }
    d
}

pub fn build_difference_basis(c: &Configuration) -> DifferenceBasis {
    let raw = build_basis(c, false);
    let n = c.n();
    let mut qs: Vec<Vec<f64>> = Vec::new();
    let mut lifts: Vec<Vec<f64>> = Vec::new();
    for col in raw.columns() {
        let mut d = shift_difference(col, n);
        let mut lift = vec![0.0; 2 * n];
        for &(r, v) in col {
            lift[r] = v;
        }
        let orig = dot(&d, &d).sqrt();
        for _ in 0..2 {
            for (q, ql) in qs.iter().zip(&lifts) {
                let proj = dot(q, &d);
                axpy(&mut d, -proj, q);
                axpy(&mut lift, -proj, ql);
            }
        }
        let norm = dot(&d, &d).sqrt();
        if norm > DROP_TOL * orig && orig > 0.0 {
            d.iter_mut().for_each(|x| *x /= norm);
            lift.iter_mut().for_each(|x| *x /= norm);
            qs.push(d);
            lifts.push(lift);
        }
    }
    DifferenceBasis {
        basis: BasisMatrix {
            n,
            interior: 0,
            columns: qs.iter().map(|q| dense_to_sparse(q)).collect(),
            orthonormal: true,
        },
        lift: lifts,
    }
}

/// Constraint residual within `1e-8` and a simple polygon.
pub fn validate_tile(u: &CoordVec, c: &Configuration) -> bool {
    if u.len() != 2 * c.n() {
        return false;
    }
    if build_constraints(c).residual(u.as_slice()) > 1e-8 {
        return false;
    }
    is_simple_polygon(&unstack_coords(u)).unwrap_or(false)
}
