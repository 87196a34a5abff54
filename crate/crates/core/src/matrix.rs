//! Dense row-major matrices over any [`Scalar`].

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(
                f,
                "  {:?}",
                &self.entries[r * self.cols..(r + 1) * self.cols]
            )?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(nrows, ncols, rows.into_iter().flatten().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_fn(
            n,
            n,
            |i, j| if i == j { diag[i].clone() } else { T::zero() },
        )
    }

    /// 1×1 matrix.
    pub fn scalar(value: T) -> Self {
        Self {
            rows: 1,
            cols: 1,
            entries: vec![value],
        }
    }

    /// `Ĩ_n`: ones on the antidiagonal.
    pub fn antidiag_unit(n: usize) -> Self {
        Self::from_fn(
            n,
            n,
            |i, j| if i + j + 1 == n { T::one() } else { T::zero() },
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<T> {
        self.entries
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)].clone())
            .collect()
    }

    pub fn map<U: Scalar>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.entries[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other.entries[k * other.cols + j];
                    if b.is_zero() {
                        continue;
                    }
                    let slot = &mut out.entries[i * other.cols + j];
                    *slot = slot.clone() + a.clone() * b.clone();
                }
            }
        }
        Ok(out)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() + b.clone())
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() - b.clone())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| f(a, b))
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    pub fn scale(&self, factor: &T) -> Self {
        self.map(|x| x.clone() * factor.clone())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    /// `a^T = Ĩ_{k₂} aᵗ Ĩ_{k₁}` for a `k₁×k₂` matrix: transpose about the antidiagonal.
    pub fn t_transpose(&self) -> Self {
        let (k1, k2) = (self.rows, self.cols);
        Self::from_fn(k2, k1, |i, j| self[(k1 - 1 - j, k2 - 1 - i)].clone())
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    /// `[a, b] = ab − ba`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    pub fn is_zero_matrix(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    /// Largest entry modulus.
    pub fn max_modulus(&self) -> T::Modulus {
        let mut best = T::Modulus::zero();
        for m in self.entries.iter().map(Scalar::modulus) {
            if m > best {
                best = m;
            }
        }
        best
    }

    pub fn block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(row0 + i, col0 + j)].clone())
    }

    pub fn set_block(&mut self, row0: usize, col0: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(row0 + i, col0 + j)] = block[(i, j)].clone();
            }
        }
    }

    pub fn block_diag(blocks: &[Self]) -> Self {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let m: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(n, m);
        let (mut r, mut c) = (0, 0);
        for b in blocks {
            out.set_block(r, c, b);
            r += b.rows;
            c += b.cols;
        }
        out
    }

    /// Gauss–Jordan inverse with partial pivoting; ties go to the lowest row.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Shape(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let scale = self.max_modulus();
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].modulus();
            for i in k + 1..n {
                let m = a[(i, k)].modulus();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if T::pivot_is_singular(&best, &scale) {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            a.swap_rows(k, p);
            inv.swap_rows(k, p);
            let pivot_inv = T::one() / a[(k, k)].clone();
            for j in 0..n {
                a[(k, j)] = a[(k, j)].clone() * pivot_inv.clone();
                inv[(k, j)] = inv[(k, j)].clone() * pivot_inv.clone();
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let factor = a[(i, k)].clone();
                if factor.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let akj = a[(k, j)].clone();
                    if !akj.is_zero() {
                        a[(i, j)] = a[(i, j)].clone() - factor.clone() * akj;
                    }
                    let ikj = inv[(k, j)].clone();
                    if !ikj.is_zero() {
                        inv[(i, j)] = inv[(i, j)].clone() - factor.clone() * ikj;
                    }
                }
            }
        }
        Ok(inv)
    }

    /// Determinant by elimination with partial pivoting.
    pub fn determinant(&self) -> Result<T> {
        if !self.is_square() {
            return Err(Error::Shape("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].modulus();
            for i in k + 1..n {
                let m = a[(i, k)].modulus();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if a[(p, k)].is_zero() {
                return Ok(T::zero());
            }
            if p != k {
                a.swap_rows(k, p);
                det = -det;
            }
            let pivot = a[(k, k)].clone();
            det = det * pivot.clone();
            for i in k + 1..n {
                let factor = a[(i, k)].clone() / pivot.clone();
                if factor.is_zero() {
                    continue;
                }
                for j in k..n {
                    a[(i, j)] = a[(i, j)].clone() - factor.clone() * a[(k, j)].clone();
                }
            }
        }
        Ok(det)
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Conjugation `p x p⁻¹` given both `p` and `p⁻¹`.
    pub fn conjugate_by(&self, p: &Self, p_inv: &Self) -> Result<Self> {
        p.try_mul(self)?.try_mul(p_inv)
    }
}

impl<F: Real> Matrix<Complex<F>> {
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            entries
                .iter()
                .map(|&x| Complex::new(F::lit(x), F::zero()))
                .collect(),
        )
    }

    pub fn max_norm(&self) -> F {
        self.max_modulus()
    }

    pub fn frobenius_norm(&self) -> F {
        self.entries
            .iter()
            .fold(F::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    /// Induced 1-norm (max column sum).
    pub fn one_norm(&self) -> F {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(F::zero(), |acc, i| acc + self[(i, j)].norm()))
            .fold(F::zero(), F::max)
    }

    /// 1-norm condition number; infinite when the inverse does not exist.
    pub fn condition_number(&self) -> F {
        match self.inverse() {
            Ok(inv) => self.one_norm() * inv.one_norm(),
            Err(_) => F::infinity(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale_real(&self, factor: F) -> Self {
        self.map(|z| z * factor)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of {}x{}",
            self.rows,
            self.cols
        );
        &self.entries[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of {}x{}",
            self.rows,
            self.cols
        );
        &mut self.entries[i * self.cols + j]
    }
}

// Operator forms panic on shape mismatch; fallible callers use `try_*`.
impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.try_mul(rhs).expect("matrix product shape")
    }
}

impl<T: Scalar> Add for &Matrix<T> {
    type Output = Matrix<T>;

    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.try_add(rhs).expect("matrix sum shape")
    }
}

impl<T: Scalar> Sub for &Matrix<T> {
    type Output = Matrix<T>;

    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.try_sub(rhs).expect("matrix difference shape")
    }
}

impl<T: Scalar> Neg for &Matrix<T> {
    type Output = Matrix<T>;

    fn neg(self) -> Matrix<T> {
        self.map(|x| -x.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn t_transpose_matches_entry_formula() {
        let a = Matrix::<f64>::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let expect = Matrix::from_rows(vec![vec![4.0, 2.0], vec![3.0, 1.0]]).unwrap();
        assert_eq!(a.t_transpose(), expect);

        let row = Matrix::<f64>::from_rows(vec![vec![5.0, 7.0]]).unwrap();
        assert_eq!(
            row.t_transpose(),
            Matrix::from_rows(vec![vec![7.0], vec![5.0]]).unwrap()
        );
    }

    #[test]
    fn t_transpose_equals_antidiagonal_sandwich() {
        let a = Matrix::<f64>::from_fn(2, 3, |i, j| (3 * i + j) as f64 + 1.0);
        let sandwich = &(&Matrix::antidiag_unit(3) * &a.transpose()) * &Matrix::antidiag_unit(2);
        assert_eq!(a.t_transpose(), sandwich);
    }

    #[test]
    fn inverse_rejects_singular_and_nonsquare() {
        let s = Matrix::<f64>::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(s.inverse(), Err(Error::Singular(_))));
        assert!(matches!(
            Matrix::<f64>::zeros(2, 3).inverse(),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn rational_gauss_jordan_inverse() {
        let k = Matrix::from_rows(vec![
            vec![rat(2, 1), rat(-1, 1)],
            vec![rat(-1, 1), rat(2, 1)],
        ])
        .unwrap();
        let expect =
            Matrix::from_rows(vec![vec![rat(2, 3), rat(1, 3)], vec![rat(1, 3), rat(2, 3)]])
                .unwrap();
        assert_eq!(k.inverse().unwrap(), expect);
    }

    #[test]
    fn determinant_with_row_swap() {
        let a = Matrix::from_rows(vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]])
            .unwrap();
        assert_eq!(a.determinant().unwrap(), rat(-1, 1));
    }

    #[test]
    fn mismatched_product_is_shape_error() {
        let a = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(a.try_mul(&a), Err(Error::Shape(_))));
    }
}
