//! Fixed-size 3×3 linear algebra.
//!
//! Every matrix in the calibration model is 3×3 (three joints, three
//! Cartesian coordinates), so the routines here are written out for that
//! size: products, Cholesky solves, a cyclic Jacobi eigensolver for the
//! symmetric information matrices, and a Householder least-squares solve
//! for stacked `3m × 3` regressors.

use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];

#[inline]
pub fn dot<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm_squared<T: Real>(a: &Vec3<T>) -> T {
    dot(a, a)
}

#[inline]
pub fn scale<T: Real>(a: &Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn add<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T> {
    pub rows: [[T; 3]; 3],
}

impl<T: Real> Default for Mat3<T> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<T: Real> Mat3<T> {
    pub const fn from_rows(rows: [[T; 3]; 3]) -> Self {
        Self { rows }
    }

    pub fn zeros() -> Self {
        Self { rows: [[T::zero(); 3]; 3] }
    }

    pub fn identity() -> Self {
        Self::diagonal(&[T::one(); 3])
    }

    pub fn diagonal(d: &Vec3<T>) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.rows[i][i] = d[i];
        }
        m
    }

    pub fn from_columns(c0: &Vec3<T>, c1: &Vec3<T>, c2: &Vec3<T>) -> Self {
        Self {
            rows: [
                [c0[0], c1[0], c2[0]],
                [c0[1], c1[1], c2[1]],
                [c0[2], c1[2], c2[2]],
            ],
        }
    }

    pub fn column(&self, j: usize) -> Vec3<T> {
        [self.rows[0][j], self.rows[1][j], self.rows[2][j]]
    }

    pub fn row(&self, i: usize) -> Vec3<T> {
        self.rows[i]
    }

    pub fn transpose(&self) -> Self {
        Self::from_columns(&self.rows[0], &self.rows[1], &self.rows[2])
    }

    pub fn mul_vec(&self, v: &Vec3<T>) -> Vec3<T> {
        [dot(&self.rows[0], v), dot(&self.rows[1], v), dot(&self.rows[2], v)]
    }

    /// `selfᵀ · v` without forming the transpose.
    pub fn tr_mul_vec(&self, v: &Vec3<T>) -> Vec3<T> {
        [dot(&self.column(0), v), dot(&self.column(1), v), dot(&self.column(2), v)]
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> Self {
        let mut g = Self::zeros();
        for i in 0..3 {
            for j in i..3 {
                let v = self.rows[0][i] * self.rows[0][j]
                    + self.rows[1][i] * self.rows[1][j]
                    + self.rows[2][i] * self.rows[2][j];
                g.rows[i][j] = v;
                g.rows[j][i] = v;
            }
        }
        g
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut m = *self;
        m.rows.iter_mut().flatten().for_each(|x| *x = *x * s);
        m
    }

    pub fn trace(&self) -> T {
        self.rows[0][0] + self.rows[1][1] + self.rows[2][2]
    }

    pub fn determinant(&self) -> T {
        let r = &self.rows;
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }

    pub fn frobenius_norm(&self) -> T {
        self.rows.iter().flatten().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.rows.iter().flatten().fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.rows.iter().flatten().all(|x| x.is_finite())
    }

    /// Inverse through the adjugate. Returns `None` for an exactly singular matrix.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.determinant();
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        let r = &self.rows;
        let cof = |a: usize, b: usize, c: usize, d: usize| r[a][b] * r[c][d] - r[a][d] * r[c][b];
        let adj = Self::from_rows([
            [cof(1, 1, 2, 2), -(r[0][1] * r[2][2] - r[0][2] * r[2][1]), cof(0, 1, 1, 2)],
            [-(r[1][0] * r[2][2] - r[1][2] * r[2][0]), cof(0, 0, 2, 2), -(r[0][0] * r[1][2] - r[0][2] * r[1][0])],
            [cof(1, 0, 2, 1), -(r[0][0] * r[2][1] - r[0][1] * r[2][0]), cof(0, 0, 1, 1)],
        ]);
        Some(adj.scaled(T::one() / det))
    }

    /// Cholesky factor `L` (lower triangular, `self = L Lᵀ`) of a symmetric
    /// positive definite matrix.
    pub fn cholesky(&self) -> Option<Self> {
        let a = &self.rows;
        let mut l = Self::zeros();
        for j in 0..3 {
            let mut d = a[j][j];
            for k in 0..j {
                d = d - l.rows[j][k] * l.rows[j][k];
            }
            if !(d > T::zero()) {
                return None;
            }
            let djj = d.sqrt();
            l.rows[j][j] = djj;
            for i in (j + 1)..3 {
                let mut s = a[i][j];
                for k in 0..j {
                    s = s - l.rows[i][k] * l.rows[j][k];
                }
                l.rows[i][j] = s / djj;
            }
        }
        Some(l)
    }

    /// Solves `(L Lᵀ) x = b` given the Cholesky factor `L` in `self`.
    pub fn cholesky_solve(&self, b: &Vec3<T>) -> Vec3<T> {
        let l = &self.rows;
        let mut y = [T::zero(); 3];
        for i in 0..3 {
            let mut s = b[i];
            for k in 0..i {
                s = s - l[i][k] * y[k];
            }
            y[i] = s / l[i][i];
        }
        let mut x = [T::zero(); 3];
        for i in (0..3).rev() {
            let mut s = y[i];
            for k in (i + 1)..3 {
                s = s - l[k][i] * x[k];
            }
            x[i] = s / l[i][i];
        }
        x
    }

    /// Inverse of a symmetric positive definite matrix via Cholesky,
    /// symmetrized on output.
    pub fn spd_inverse(&self) -> Option<Self> {
        let l = self.cholesky()?;
        let c0 = l.cholesky_solve(&[T::one(), T::zero(), T::zero()]);
        let c1 = l.cholesky_solve(&[T::zero(), T::one(), T::zero()]);
        let c2 = l.cholesky_solve(&[T::zero(), T::zero(), T::one()]);
        Some(Self::from_columns(&c0, &c1, &c2).symmetrized())
    }

    pub fn symmetrized(&self) -> Self {
        let half = T::lit(0.5);
        let mut m = *self;
        for i in 0..3 {
            for j in (i + 1)..3 {
                let v = (self.rows[i][j] + self.rows[j][i]) * half;
                m.rows[i][j] = v;
                m.rows[j][i] = v;
            }
        }
        m
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    pub fn symmetric_eigen(&self) -> SymmetricEigen<T> {
        let mut a = self.symmetrized().rows;
        let mut v = Self::identity().rows;
        let eps = T::epsilon();
        for _sweep in 0..64 {
            let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
            let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
            if off <= eps * eps * diag || off == T::zero() {
                break;
            }
            for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
                let apq = a[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (apq + apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..3 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..3 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap_or(core::cmp::Ordering::Equal));
        let values = [a[order[0]][order[0]], a[order[1]][order[1]], a[order[2]][order[2]]];
        let vectors = [
            [v[0][order[0]], v[1][order[0]], v[2][order[0]]],
            [v[0][order[1]], v[1][order[1]], v[2][order[1]]],
            [v[0][order[2]], v[1][order[2]], v[2][order[2]]],
        ];
        SymmetricEigen { values, vectors }
    }
}

/// Eigenvalues in ascending order with matching unit eigenvectors.
#[derive(Debug, Clone, Copy)]
pub struct SymmetricEigen<T> {
    pub values: Vec3<T>,
    pub vectors: [Vec3<T>; 3],
}

impl<T: Real> SymmetricEigen<T> {
    /// `λmax / λmin`, `+∞` when the smallest eigenvalue is not positive.
    pub fn condition_number(&self) -> T {
        let lo = self.values[0];
        let hi = self.values[2];
        if lo <= T::zero() {
            T::infinity()
        } else {
            hi / lo
        }
    }
}

impl<T: Real> Index<(usize, usize)> for Mat3<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.rows[i][j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Mat3<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.rows[i][j]
    }
}

impl<T: Real> Add for Mat3<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..3 {
            for j in 0..3 {
                self.rows[i][j] = self.rows[i][j] + rhs.rows[i][j];
            }
        }
        self
    }
}

impl<T: Real> Sub for Mat3<T> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..3 {
            for j in 0..3 {
                self.rows[i][j] = self.rows[i][j] - rhs.rows[i][j];
            }
        }
        self
    }
}

impl<T: Real> Neg for Mat3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scaled(-T::one())
    }
}

impl<T: Real> Mul for Mat3<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                out.rows[i][j] = self.rows[i][0] * rhs.rows[0][j]
                    + self.rows[i][1] * rhs.rows[1][j]
                    + self.rows[i][2] * rhs.rows[2][j];
            }
        }
        out
    }
}

/// Least-squares solution of `R x ≈ b` for a tall `n × 3` system using
/// Householder QR. Returns `None` when `R` is rank deficient in the working
/// precision.
pub fn least_squares<T: Real>(regressor: &[[T; 3]], rhs: &[T]) -> Option<Vec3<T>> {
    let n = regressor.len();
    assert_eq!(n, rhs.len(), "regressor and right-hand side length mismatch");
    if n < 3 {
        return None;
    }
    let mut a: Vec<[T; 3]> = regressor.to_vec();
    let mut b: Vec<T> = rhs.to_vec();
    let mut scale_ref = T::zero();
    for row in &a {
        for &x in row {
            scale_ref = scale_ref.max(x.abs());
        }
    }
    for k in 0..3 {
        let mut norm = T::zero();
        for row in a.iter().skip(k) {
            norm = norm.hypot(row[k]);
        }
        if norm <= scale_ref * T::epsilon() * T::from_count(n) {
            return None;
        }
        let alpha = if a[k][k] > T::zero() { -norm } else { norm };
        // Householder vector v = x - alpha e_k, stored in place.
        a[k][k] = a[k][k] - alpha;
        let mut vnorm2 = T::zero();
        for row in a.iter().skip(k) {
            vnorm2 = vnorm2 + row[k] * row[k];
        }
        if vnorm2 > T::zero() {
            for j in (k + 1)..3 {
                let mut s = T::zero();
                for row in a.iter().skip(k) {
                    s = s + row[k] * row[j];
                }
                let f = (s + s) / vnorm2;
                for row in a.iter_mut().skip(k) {
                    row[j] = row[j] - f * row[k];
                }
            }
            let mut s = T::zero();
            for (i, row) in a.iter().enumerate().skip(k) {
                s = s + row[k] * b[i];
            }
            let f = (s + s) / vnorm2;
            for (i, row) in a.iter().enumerate().skip(k) {
                b[i] = b[i] - f * row[k];
            }
        }
        a[k][k] = alpha;
    }
    let mut x = [T::zero(); 3];
    for i in (0..3).rev() {
        let mut s = b[i];
        for j in (i + 1)..3 {
            s = s - a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}
