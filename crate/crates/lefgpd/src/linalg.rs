//! Small dense matrices over the working scalar, exact integer matrices with
//! Smith normal form, and a Jacobi eigensolver for symmetric matrices.
//!
//! Everything here is sized for the crate's needs (dimensions up to a few
//! dozen), not for large-scale linear algebra.

use crate::numeric::{real, Real};

/// Row-major square matrix over the working scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Build from nested rows; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "row {i} has wrong length");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn scalar(value: T) -> Self {
        Self {
            dim: 1,
            data: vec![value],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> T {
        (0..self.dim)
            .map(|i| self[(i, i)])
            .fold(T::zero(), |a, b| a + b)
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        Self::from_fn(n, |i, j| {
            let mut acc = T::zero();
            for k in 0..n {
                acc += self[(i, k)] * other[(k, j)];
            }
            acc
        })
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                let mut acc = T::zero();
                for k in 0..self.dim {
                    acc += self[(i, k)] * v[k];
                }
                acc
            })
            .collect()
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> T {
        let n = self.dim;
        if n == 0 {
            return T::one();
        }
        let mut a = self.data.clone();
        let mut det = T::one();
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[col * n + col].abs();
            for r in (col + 1)..n {
                let v = a[r * n + col].abs();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best == T::zero() {
                return T::zero();
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in (col + 1)..n {
                let factor = a[r * n + col] / p;
                for j in col..n {
                    let sub = factor * a[col * n + j];
                    a[r * n + j] -= sub;
                }
            }
        }
        det
    }

    /// Determinant of the submatrix with the given rows and columns.
    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> T {
        assert_eq!(rows.len(), cols.len());
        let sub = SquareMatrix::from_fn(rows.len(), |i, j| self[(rows[i], cols[j])]);
        sub.det()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
    /// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns.
    pub fn symmetric_eigen(&self) -> (Vec<T>, SquareMatrix<T>) {
        let n = self.dim;
        let mut a = self.clone();
        let mut v = SquareMatrix::identity(n);
        if n == 1 {
            return (vec![a[(0, 0)]], v);
        }
        for _sweep in 0..64 {
            let mut off = T::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
            if off.sqrt() <= T::epsilon() * real::<T>(4.0) * (T::one() + a.max_abs()) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (real::<T>(2.0) * apq);
                    let t = {
                        let sign = if theta >= T::zero() {
                            T::one()
                        } else {
                            -T::one()
                        };
                        sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                    };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let eigenvalues = (0..n).map(|i| a[(i, i)]).collect();
        (eigenvalues, v)
    }

    /// Apply `f` to the eigenvalues of a symmetric matrix: `V f(D) V^T`.
    pub fn symmetric_map(&self, f: impl Fn(T) -> T) -> SquareMatrix<T> {
        let (eig, v) = self.symmetric_eigen();
        let n = self.dim;
        SquareMatrix::from_fn(n, |i, j| {
            let mut acc = T::zero();
            for k in 0..n {
                acc += v[(i, k)] * f(eig[k]) * v[(j, k)];
            }
            acc
        })
    }
}

impl<T> std::ops::Index<(usize, usize)> for SquareMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.dim + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for SquareMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.dim + j]
    }
}

/// Square integer matrix, used for exact lattice computations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    dim: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "row {i} has wrong length");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0i64;
                for k in 0..n {
                    acc += self[(i, k)] * other[(k, j)];
                }
                m[(i, j)] = acc;
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self[(j, i)];
            }
        }
        m
    }

    pub fn matvec(&self, v: &[i64]) -> Vec<i64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|k| self[(i, k)] * v[k]).sum())
            .collect()
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> i64 {
        let n = self.dim;
        if n == 0 {
            return 1;
        }
        let mut a: Vec<i128> = self.data.iter().map(|&v| v as i128).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for col in 0..n {
            if a[col * n + col] == 0 {
                let pivot = ((col + 1)..n).find(|&r| a[r * n + col] != 0);
                match pivot {
                    Some(r) => {
                        for j in 0..n {
                            a.swap(col * n + j, r * n + j);
                        }
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for r in (col + 1)..n {
                for j in (col + 1)..n {
                    a[r * n + j] =
                        (a[r * n + j] * a[col * n + col] - a[r * n + col] * a[col * n + j]) / prev;
                }
                a[r * n + col] = 0;
            }
            prev = a[col * n + col];
        }
        let d = sign * a[(n - 1) * n + (n - 1)];
        i64::try_from(d).expect("determinant overflows i64")
    }

    pub fn to_real<T: Real>(&self) -> SquareMatrix<T> {
        SquareMatrix::from_fn(self.dim, |i, j| real(self[(i, j)] as f64))
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = i64;
    fn index(&self, (i, j): (usize, usize)) -> &i64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Smith-style diagonalization `d = u * m * w` with `u`, `w` unimodular.
///
/// The diagonal entries are not normalized to the divisibility chain; any
/// unimodular diagonalization is enough for solving `m x = c (mod Z^n)`.
#[derive(Debug, Clone)]
pub struct SmithForm {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub w: IntMatrix,
}

pub fn smith_diagonalize(m: &IntMatrix) -> SmithForm {
    let n = m.dim();
    let mut d = m.clone();
    let mut u = IntMatrix::identity(n);
    let mut w = IntMatrix::identity(n);

    for k in 0..n {
        loop {
            // Find the entry of smallest nonzero magnitude in the trailing block.
            let mut best: Option<(usize, usize)> = None;
            for i in k..n {
                for j in k..n {
                    if d[(i, j)] != 0
                        && best.is_none_or(|(bi, bj)| d[(i, j)].abs() < d[(bi, bj)].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                break; // trailing block is zero
            };
            if bi != k {
                swap_rows(&mut d, &mut u, k, bi);
            }
            if bj != k {
                swap_cols(&mut d, &mut w, k, bj);
            }
            let pivot = d[(k, k)];
            let mut clean = true;
            for i in (k + 1)..n {
                let q = div_round(d[(i, k)], pivot);
                if q != 0 {
                    row_axpy(&mut d, &mut u, i, k, -q);
                }
                if d[(i, k)] != 0 {
                    clean = false;
                }
            }
            for j in (k + 1)..n {
                let q = div_round(d[(k, j)], pivot);
                if q != 0 {
                    col_axpy(&mut d, &mut w, j, k, -q);
                }
                if d[(k, j)] != 0 {
                    clean = false;
                }
            }
            if clean {
                break;
            }
        }
    }
    SmithForm { u, d, w }
}

fn swap_rows(d: &mut IntMatrix, u: &mut IntMatrix, a: usize, b: usize) {
    let n = d.dim();
    for j in 0..n {
        let t = d[(a, j)];
        d[(a, j)] = d[(b, j)];
        d[(b, j)] = t;
        let t = u[(a, j)];
        u[(a, j)] = u[(b, j)];
        u[(b, j)] = t;
    }
}

fn swap_cols(d: &mut IntMatrix, w: &mut IntMatrix, a: usize, b: usize) {
    let n = d.dim();
    for i in 0..n {
        let t = d[(i, a)];
        d[(i, a)] = d[(i, b)];
        d[(i, b)] = t;
        let t = w[(i, a)];
        w[(i, a)] = w[(i, b)];
        w[(i, b)] = t;
    }
}

/// row_i += q * row_k on both `d` and `u`.
fn row_axpy(d: &mut IntMatrix, u: &mut IntMatrix, i: usize, k: usize, q: i64) {
    let n = d.dim();
    for j in 0..n {
        d[(i, j)] += q * d[(k, j)];
        u[(i, j)] += q * u[(k, j)];
    }
}

/// col_j += q * col_k on both `d` and `w`.
fn col_axpy(d: &mut IntMatrix, w: &mut IntMatrix, j: usize, k: usize, q: i64) {
    let n = d.dim();
    for i in 0..n {
        d[(i, j)] += q * d[(i, k)];
        w[(i, j)] += q * w[(i, k)];
    }
}

/// Round-to-nearest integer division, which keeps remainders small and the
/// elimination numerically tame.
fn div_round(a: i64, b: i64) -> i64 {
    debug_assert!(b != 0);
    let q = a / b;
    let r = a - q * b;
    if 2 * r.abs() > b.abs() {
        q + if (r > 0) == (b > 0) { 1 } else { -1 }
    } else {
        q
    }
}

/// Strictly increasing multi-indices of length `p` drawn from `0..n`, in
/// lexicographic order.
pub fn combinations(n: usize, p: usize) -> Vec<Vec<usize>> {
    if p > n {
        return Vec::new();
    }
    if p == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..p).collect();
    loop {
        out.push(idx.clone());
        // advance to the next combination
        let mut i = p;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - p {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..p {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Binomial coefficient C(n, p).
pub fn binomial(n: usize, p: usize) -> usize {
    if p > n {
        return 0;
    }
    let p = p.min(n - p);
    let mut acc: usize = 1;
    for i in 0..p {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_small_cases() {
        let m = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 1.0]]);
        assert!((m.det() - 1.0f64).abs() < 1e-14);
        let m3 = SquareMatrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 10.0],
        ]);
        assert!((m3.det() - -3.0f64).abs() < 1e-12);
    }

    #[test]
    fn int_det_matches_float() {
        let a = IntMatrix::from_rows(&[vec![2, 1], vec![1, 1]]);
        assert_eq!(a.det(), 1);
        let b = IntMatrix::from_rows(&[vec![3, -1, 2], vec![0, 2, 1], vec![-2, 1, 1]]);
        assert_eq!(b.det() as f64, b.to_real::<f64>().det().round());
    }

    #[test]
    fn smith_diagonalizes_with_unimodular_factors() {
        let cases = [
            IntMatrix::from_rows(&[vec![1, 1], vec![1, 0]]),
            IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]),
            IntMatrix::from_rows(&[vec![4, 6], vec![2, 8]]),
            IntMatrix::from_rows(&[vec![0, 1, 2], vec![3, 0, -1], vec![2, 2, 2]]),
            IntMatrix::from_rows(&[vec![0, 0], vec![0, 0]]),
        ];
        for m in cases {
            let SmithForm { u, d, w } = smith_diagonalize(&m);
            assert_eq!(u.det().abs(), 1, "u not unimodular for {m:?}");
            assert_eq!(w.det().abs(), 1, "w not unimodular for {m:?}");
            let umw = u.matmul(&m).matmul(&w);
            assert_eq!(umw, d);
            for i in 0..d.dim() {
                for j in 0..d.dim() {
                    if i != j {
                        assert_eq!(d[(i, j)], 0, "off-diagonal survives in {d:?}");
                    }
                }
            }
            assert_eq!(d.det().abs(), m.det().abs());
        }
    }

    #[test]
    fn jacobi_eigen_reconstructs() {
        let m = SquareMatrix::from_rows(&[
            vec![2.0, 1.0, 0.5],
            vec![1.0, 3.0, -1.0],
            vec![0.5, -1.0, 1.5],
        ]);
        let (eig, v) = m.symmetric_eigen();
        let recon = SquareMatrix::from_fn(3, |i, j| {
            (0..3).map(|k| v[(i, k)] * eig[k] * v[(j, k)]).sum()
        });
        assert!(recon.sub(&m).max_abs() < 1e-12);
    }

    #[test]
    fn symmetric_map_exponential() {
        let m = SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let e = m.symmetric_map(|x: f64| (-x).exp());
        assert!((e[(0, 0)] - (-1.0f64).exp()).abs() < 1e-14);
        assert!((e[(1, 1)] - (-2.0f64).exp()).abs() < 1e-14);
        assert!(e[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(
            combinations(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3],
            ]
        );
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(5, 0), 1);
    }
}
