//! Dense matrices over a [`Scalar`] field.
//!
//! Elimination picks the pivot of largest modulus, which is harmless for exact
//! fields and keeps floating point runs stable.

use std::fmt;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::scalar::{GaussRational, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is singular")]
    Singular,
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Clone, PartialEq)]
pub struct Matrix<C> {
    rows: usize,
    cols: usize,
    data: Vec<C>,
}

impl<C: Scalar> Matrix<C> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![C::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[C] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<C>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    /// Whether every off-diagonal entry vanishes.
    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].is_zero()))
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows).all(|i| (0..i.min(self.cols)).all(|j| self[(i, j)].is_zero()))
    }

    pub fn diagonal(&self) -> Vec<C> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).collect()
    }

    pub fn trace(&self) -> C {
        self.diagonal().iter().fold(C::zero(), |a, b| a.add(b))
    }

    pub fn mul(&self, other: &Matrix<C>) -> Matrix<C> {
        assert_eq!(self.cols, other.rows, "matrix product shape");
        let mut out: Matrix<C> = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] = out[(i, j)].add(&a.mul(b));
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C]) -> Vec<C> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| self.row(i).iter().zip(v).fold(C::zero(), |acc, (a, b)| acc.add(&a.mul(b)))).collect()
    }

    pub fn add(&self, other: &Matrix<C>) -> Matrix<C> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, other: &Matrix<C>) -> Matrix<C> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn scale(&self, c: &C) -> Matrix<C> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a.mul(c)).collect() }
    }

    pub fn transpose(&self) -> Matrix<C> {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    /// `self - c·I`.
    pub fn shift(&self, c: &C) -> Matrix<C> {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] = m[(i, i)].sub(c);
        }
        m
    }

    /// Reduced row echelon form, returning the pivot columns.
    pub fn rref(&self) -> (Matrix<C>, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let best = (r..m.rows).max_by(|&a, &b| m[(a, c)].modulus().total_cmp(&m[(b, c)].modulus()));
            let Some(p) = best.filter(|&p| !m[(p, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m[(r, c)].recip().expect("nonzero pivot");
            for j in 0..m.cols {
                m[(r, j)] = m[(r, j)].mul(&inv);
            }
            for i in 0..m.rows {
                if i == r || m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone();
                for j in 0..m.cols {
                    let v = m[(r, j)].mul(&f);
                    m[(i, j)] = m[(i, j)].sub(&v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// One solution of `self · x = b`, with free variables set to zero.
    pub fn solve(&self, b: &[C]) -> Result<Vec<C>, LinalgError> {
        if b.len() != self.rows {
            return Err(LinalgError::Shape(format!("{} rows, rhs of length {}", self.rows, b.len())));
        }
        let aug = Matrix::from_fn(self.rows, self.cols + 1, |i, j| if j < self.cols { self[(i, j)].clone() } else { b[i].clone() });
        let (red, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return Err(LinalgError::Inconsistent);
        }
        let mut x = vec![C::zero(); self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = red[(r, self.cols)].clone();
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix<C>, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Shape("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let aug = Matrix::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self[(i, j)].clone()
            } else if j - n == i {
                C::one()
            } else {
                C::zero()
            }
        });
        let (red, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(LinalgError::Singular);
        }
        Ok(Matrix::from_fn(n, n, |i, j| red[(i, n + j)].clone()))
    }

    /// Monic characteristic polynomial `det(xI - A)`, coefficients from the
    /// constant term upwards (Faddeev–LeVerrier).
    pub fn charpoly(&self) -> Vec<C> {
        assert!(self.is_square());
        let n = self.rows;
        let mut coeffs = vec![C::zero(); n + 1];
        coeffs[n] = C::one();
        let mut m = Matrix::zeros(n, n);
        for k in 1..=n {
            m = self.mul(&m).shift(&coeffs[n - k + 1].neg());
            let am = self.mul(&m);
            let t = am.trace();
            coeffs[n - k] = t.neg().mul(&C::from_i64(k as i64).recip().expect("k > 0"));
        }
        coeffs
    }

    pub fn map<D: Scalar>(&self, f: impl Fn(&C) -> D) -> Matrix<D> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn to_c64(&self) -> Matrix<Complex64> {
        self.map(Scalar::to_c64)
    }

    fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].to_c64())
    }

    /// Eigenvalues from a complex Schur decomposition in double precision.
    pub fn numeric_eigenvalues(&self) -> Vec<Complex64> {
        assert!(self.is_square());
        if self.rows == 0 {
            return Vec::new();
        }
        let m = self.to_nalgebra();
        Schur::try_new(m, 1e-14, 10_000)
            .and_then(|s| s.eigenvalues())
            .map(|v| v.iter().copied().collect())
            .unwrap_or_default()
    }
}

impl Matrix<GaussRational> {
    /// Eigenvalues with algebraic multiplicity.
    ///
    /// Candidates (the diagonal plus `extra`) are tested exactly against the
    /// characteristic polynomial; any remaining factor is solved numerically.
    pub fn eigenvalues(&self, extra: &[GaussRational]) -> EigenReport {
        let mut poly = self.charpoly();
        let mut exact: Vec<(GaussRational, usize)> = Vec::new();
        let mut candidates = self.diagonal();
        candidates.extend_from_slice(extra);
        for c in candidates {
            if exact.iter().any(|(e, _)| *e == c) {
                continue;
            }
            let mut mult = 0;
            while poly.len() > 1 {
                let (q, r) = divide_linear(&poly, &c);
                if !r.is_zero() {
                    break;
                }
                poly = q;
                mult += 1;
            }
            if mult > 0 {
                exact.push((c, mult));
            }
        }
        let numeric = if poly.len() > 1 { companion(&poly).numeric_eigenvalues() } else { Vec::new() };
        EigenReport { exact, numeric }
    }

    /// Exact diagonalizability: the product of `A - λ` over the distinct
    /// eigenvalues vanishes. Requires the whole spectrum to be exact.
    pub fn is_diagonalizable(&self, report: &EigenReport) -> Option<bool> {
        if !report.numeric.is_empty() {
            return None;
        }
        let n = self.rows;
        let mut prod = Matrix::identity(n);
        for (l, _) in &report.exact {
            prod = prod.mul(&self.shift(l));
        }
        Some(prod.is_zero())
    }
}

/// Numerical diagonalizability: for every cluster of eigenvalues of size `m`
/// (clustered at `1e-6`), `A − λ` has `m` singular values below `tol·max(1, ‖A‖)`.
pub fn numeric_diagonalizable(a: &Matrix<Complex64>, tol: f64) -> bool {
    let eig = a.numeric_eigenvalues();
    let m = a.to_nalgebra();
    let scale = m.norm().max(1.0);
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for e in eig {
        match clusters.iter_mut().find(|(c, _)| (*c - e).norm() < 1e-6 * scale) {
            Some(c) => c.1 += 1,
            None => clusters.push((e, 1)),
        }
    }
    clusters.iter().all(|(l, mult)| {
        let shifted = &m - DMatrix::from_diagonal_element(a.rows, a.cols, *l);
        let sv = shifted.singular_values();
        sv.iter().filter(|&&x| x < tol * scale).count() == *mult
    })
}

/// Synthetic division of a polynomial (constant term first) by `x - c`.
fn divide_linear<C: Scalar>(poly: &[C], c: &C) -> (Vec<C>, C) {
    let n = poly.len() - 1;
    let mut q = vec![C::zero(); n];
    let mut acc = C::zero();
    for k in (0..=n).rev() {
        acc = acc.mul(c).add(&poly[k]);
        if k > 0 {
            q[k - 1] = acc.clone();
        }
    }
    (q, acc)
}

fn companion<C: Scalar>(poly: &[C]) -> Matrix<C> {
    let n = poly.len() - 1;
    Matrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            poly[i].neg()
        } else if i == j + 1 {
            C::one()
        } else {
            C::zero()
        }
    })
}

/// Spectrum with exact and numeric parts.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    pub exact: Vec<(GaussRational, usize)>,
    pub numeric: Vec<Complex64>,
}

impl EigenReport {
    /// Every eigenvalue with repetition, as `Complex64`.
    pub fn all_c64(&self) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = self.exact.iter().flat_map(|(l, m)| std::iter::repeat_n(l.to_c64(), *m)).collect();
        v.extend(self.numeric.iter().copied());
        v
    }
}

impl<C> std::ops::Index<(usize, usize)> for Matrix<C> {
    type Output = C;
    fn index(&self, (i, j): (usize, usize)) -> &C {
        &self.data[i * self.cols + j]
    }
}

impl<C> std::ops::IndexMut<(usize, usize)> for Matrix<C> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C {
        &mut self.data[i * self.cols + j]
    }
}

impl<C: Scalar> fmt::Debug for Matrix<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|c| c.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> GaussRational {
        s.parse().unwrap()
    }

    fn m(rows: &[&[&str]]) -> Matrix<GaussRational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|s| q(s)).collect()).collect())
    }

    #[test]
    fn inverse_and_solve() {
        let a = m(&[&["2", "1"], &["1", "1"]]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), Matrix::identity(2));
        assert_eq!(a.solve(&[q("3"), q("2")]).unwrap(), vec![q("1"), q("1")]);
        let s = m(&[&["1", "1"], &["1", "1"]]);
        assert_eq!(s.inverse().unwrap_err(), LinalgError::Singular);
        assert_eq!(s.solve(&[q("1"), q("2")]).unwrap_err(), LinalgError::Inconsistent);
        assert_eq!(s.solve(&[q("1"), q("1")]).unwrap(), vec![q("1"), q("0")]);
    }

    #[test]
    fn charpoly_and_exact_spectrum() {
        // upper triangular with a repeated eigenvalue
        let a = m(&[&["2", "1", "0"], &["0", "2", "0"], &["0", "0", "1/2"]]);
        assert_eq!(a.charpoly(), vec![q("-2"), q("6"), q("-9/2"), q("1")]);
        let rep = a.eigenvalues(&[]);
        assert_eq!(rep.exact, vec![(q("2"), 2), (q("1/2"), 1)]);
        assert_eq!(a.is_diagonalizable(&rep), Some(false));
        let d = m(&[&["0", "1"], &["1", "0"]]);
        let rep = d.eigenvalues(&[q("1"), q("-1")]);
        assert_eq!(rep.exact.len(), 2);
        assert_eq!(d.is_diagonalizable(&rep), Some(true));
        let r = m(&[&["0", "2"], &["1", "0"]]);
        let rep = r.eigenvalues(&[]);
        assert!(rep.exact.is_empty());
        let mut s: Vec<f64> = rep.numeric.iter().map(|z| z.re).collect();
        s.sort_by(f64::total_cmp);
        assert!((s[0] + 2f64.sqrt()).abs() < 1e-12 && (s[1] - 2f64.sqrt()).abs() < 1e-12);
    }
}
