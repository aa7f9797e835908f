//! Small dense kernels: envelope Cholesky and the rank-2 eigen reduction.

use crate::error::{Error, Result};

/// Smallest admissible Cholesky pivot.
pub const PIVOT_FLOOR: f64 = 1e-12;

/// Cholesky factor `A = L L^T` that only touches each row's envelope (from
/// its first nonzero column to the diagonal). Banded blocks with a few dense
/// trailing rows factor in near-linear time.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    m: usize,
    first: Vec<usize>,
    l: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors a symmetric matrix given row-major in `a` (only the lower
    /// triangle is read).
    pub fn factor(m: usize, mut a: Vec<f64>) -> Result<Self> {
        assert_eq!(a.len(), m * m);
        let first: Vec<usize> = (0..m)
            .map(|i| (0..i).find(|&j| a[i * m + j] != 0.0).unwrap_or(i))
            .collect();
        for i in 0..m {
            let fi = first[i];
            for j in fi..i {
                let start = fi.max(first[j]);
                let mut s = a[i * m + j];
                for k in start..j {
                    s -= a[i * m + k] * a[j * m + k];
                }
                a[i * m + j] = s / a[j * m + j];
            }
            let mut d = a[i * m + i];
            for k in fi..i {
                d -= a[i * m + k] * a[i * m + k];
            }
            if !(d > PIVOT_FLOOR) {
                return Err(Error::NumericalError(format!(
                    "Cholesky pivot {d:e} at row {i} of {m}"
                )));
            }
            a[i * m + i] = d.sqrt();
        }
        Ok(Self { m, first, l: a })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Solves `L y = b` in place.
    pub fn forward(&self, b: &mut [f64]) {
        let m = self.m;
        for i in 0..m {
            let row = &self.l[i * m..(i + 1) * m];
            let mut s = b[i];
            for k in self.first[i]..i {
                s -= row[k] * b[k];
            }
            b[i] = s / row[i];
        }
    }

    /// Solves `L Y = B` in place for `B` stored row-major with `ncols` columns.
    pub fn forward_multi(&self, b: &mut [f64], ncols: usize) {
        let m = self.m;
        assert_eq!(b.len(), m * ncols);
        for i in 0..m {
            let row = &self.l[i * m..(i + 1) * m];
            let (done, rest) = b.split_at_mut(i * ncols);
            let target = &mut rest[..ncols];
            for k in self.first[i]..i {
                let f = row[k];
                let src = &done[k * ncols..(k + 1) * ncols];
                for (t, s) in target.iter_mut().zip(src) {
                    *t -= f * s;
                }
            }
            let inv = 1.0 / row[i];
            target.iter_mut().for_each(|t| *t *= inv);
        }
    }

    /// Solves `L^T x = y` in place.
    pub fn backward(&self, y: &mut [f64]) {
        let m = self.m;
        for i in (0..m).rev() {
            let row = &self.l[i * m..(i + 1) * m];
            y[i] /= row[i];
            let xi = y[i];
            for k in self.first[i]..i {
                y[k] -= row[k] * xi;
            }
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        self.forward(b);
        self.backward(b);
    }
}

/// Largest eigenpair of the symmetric 2x2 matrix `[[p, r], [r, q]]`.
/// The eigenvector is unit length with a non-negative first component; a
/// double eigenvalue yields `(1, 0)`.
pub fn sym2_max_eig(p: f64, r: f64, q: f64) -> (f64, [f64; 2]) {
    let half = 0.5 * (p - q);
    let disc = half.hypot(r);
    let lambda = 0.5 * (p + q) + disc;
    if r == 0.0 {
        return (lambda, if p >= q { [1.0, 0.0] } else { [0.0, 1.0] });
    }
    let v1 = [lambda - q, r];
    let v2 = [r, lambda - p];
    let n1 = v1[0].hypot(v1[1]);
    let n2 = v2[0].hypot(v2[1]);
    let (v, nv) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
    let mut g = [v[0] / nv, v[1] / nv];
    if g[0] < 0.0 || (g[0] == 0.0 && g[1] < 0.0) {
        g = [-g[0], -g[1]];
    }
    (lambda, g)
}

/// Rank-2 reduction: for `M = a a^T + b b^T` returns `(λ_max, γ)` such that
/// `ξ = γ_0 a + γ_1 b` is an eigenvector of `M` with `|ξ|² = λ_max` and
/// `a·ξ >= 0`.
pub fn rank2_max_eig(a: &[f64], b: &[f64]) -> (f64, [f64; 2]) {
    let p: f64 = a.iter().map(|x| x * x).sum();
    let q: f64 = b.iter().map(|x| x * x).sum();
    let r: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    sym2_max_eig(p, r, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn envelope_matches_dense() {
        // Tridiagonal block plus one dense trailing row.
        let m = 7;
        let mut a = DMatrix::<f64>::zeros(m, m);
        for i in 0..m - 1 {
            a[(i, i)] = 4.0;
            if i + 1 < m - 1 {
                a[(i, i + 1)] = -1.0;
                a[(i + 1, i)] = -1.0;
            }
            a[(m - 1, i)] = 0.3 * (i as f64 + 1.0);
            a[(i, m - 1)] = a[(m - 1, i)];
        }
        a[(m - 1, m - 1)] = 9.0;
        let row_major: Vec<f64> = (0..m * m).map(|t| a[(t / m, t % m)]).collect();
        let chol = EnvelopeCholesky::factor(m, row_major).unwrap();
        let b: Vec<f64> = (0..m).map(|i| (i as f64).sin() + 1.0).collect();
        let mut x = b.clone();
        chol.solve(&mut x);
        let dense = a.clone().cholesky().unwrap().solve(&nalgebra::DVector::from_vec(b));
        for i in 0..m {
            assert!((x[i] - dense[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn not_positive_definite() {
        let r = EnvelopeCholesky::factor(2, vec![1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(r, Err(Error::NumericalError(_))));
    }

    #[test]
    fn rank_one() {
        let (l, g) = rank2_max_eig(&[1.0, 0.0], &[0.0, 0.0]);
        assert_eq!(l, 1.0);
        assert_eq!(g, [1.0, 0.0]);
    }

    #[test]
    fn double_eigenvalue_prefers_a() {
        let (l, g) = rank2_max_eig(&[2.0, 0.0], &[0.0, 2.0]);
        assert_eq!(l, 4.0);
        assert_eq!(g, [1.0, 0.0]);
    }
}

/// Orthonormal basis of the column space of `y`: eigenvectors of `y yᵀ`
/// whose eigenvalue exceeds `rel_tol` times the largest.
pub fn column_space(y: &nalgebra::DMatrix<f64>, rel_tol: f64) -> nalgebra::DMatrix<f64> {
    let rows = y.nrows();
    if rows == 0 || y.ncols() == 0 {
        return nalgebra::DMatrix::zeros(rows, 0);
    }
    let eig = nalgebra::SymmetricEigen::new(y * y.transpose());
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if lmax <= 0.0 {
        return nalgebra::DMatrix::zeros(rows, 0);
    }
    let keep: Vec<usize> = (0..rows).filter(|&i| eig.eigenvalues[i] > rel_tol * lmax).collect();
    nalgebra::DMatrix::from_fn(rows, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])])
}
