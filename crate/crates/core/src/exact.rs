//! Exact rational arithmetic: products, fraction-free inversion, rank.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::{RatMatrix, Rational};

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Exact product with a shape check.
pub fn rmat_mul(a: &RatMatrix, b: &RatMatrix) -> Result<RatMatrix> {
    a.try_mul(b)
}

/// Exact inverse by fraction-free Gauss–Jordan elimination.
///
/// Rows are first cleared of denominators, then eliminated over the integers
/// with Bareiss divisions; every intermediate entry is a minor, so each
/// division is exact. Pivots are chosen by largest absolute value, lowest row
/// on ties.
pub fn rmat_inverse(a: &RatMatrix) -> Result<RatMatrix> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "cannot invert a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(a.clone());
    }

    // a = D⁻¹ a' with D = diag(row lcm of denominators).
    let mut row_scale = Vec::with_capacity(n);
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for i in 0..n {
        let l = a
            .row(i)
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let mut row: Vec<BigInt> = a
            .row(i)
            .iter()
            .map(|x| x.numer() * (&l / x.denom()))
            .collect();
        row.extend((0..n).map(|j| {
            if i == j {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        }));
        m.push(row);
        row_scale.push(l);
    }

    let width = 2 * n;
    let mut prev = BigInt::one();
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if m[i][k].abs() > m[p][k].abs() {
                p = i;
            }
        }
        if m[p][k].is_zero() {
            return Err(Error::Singular(format!(
                "matrix is singular (column {})",
                k + 1
            )));
        }
        m.swap(k, p);
        let pivot = m[k][k].clone();
        for i in 0..n {
            if i == k {
                continue;
            }
            let factor = m[i][k].clone();
            for j in 0..width {
                if j == k {
                    continue;
                }
                let num = &pivot * &m[i][j] - &factor * &m[k][j];
                let (q, r) = num.div_rem(&prev);
                debug_assert!(r.is_zero(), "Bareiss division must be exact");
                m[i][j] = q;
            }
            m[i][k] = BigInt::zero();
        }
        prev = pivot;
    }

    // Each m[i][i] now equals ±det(a'); the right half holds det·a'⁻¹ row by row.
    let mut out = RatMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = Rational::new(&m[i][n + j] * &row_scale[j], m[i][i].clone());
        }
    }
    Ok(out)
}

/// Nearest `f64` (correctly rounded by `num-rational`).
pub fn rat_to_float(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        if x.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// `num/den` form, always with an explicit denominator.
pub fn rat_string(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Integer value of `x`, if it is one and fits.
pub fn rat_to_i64(x: &Rational) -> Option<i64> {
    if x.is_integer() {
        x.numer().to_i64()
    } else {
        None
    }
}

/// Incremental row-echelon basis of sparse rational vectors.
///
/// Rows are kept fully reduced against each other's pivots, so membership of
/// a vector in the span is decided by a single reduction pass.
#[derive(Debug, Clone, Default)]
pub struct Echelon {
    rows: BTreeMap<usize, BTreeMap<usize, Rational>>,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, mut v: BTreeMap<usize, Rational>) -> BTreeMap<usize, Rational> {
        let cols: Vec<usize> = v.keys().copied().collect();
        for col in cols {
            let Some(coef) = v.get(&col).cloned() else {
                continue;
            };
            if let Some(row) = self.rows.get(&col) {
                for (&c, x) in row {
                    let updated = v.get(&c).cloned().unwrap_or_else(Rational::zero) - &coef * x;
                    if updated.is_zero() {
                        v.remove(&c);
                    } else {
                        v.insert(c, updated);
                    }
                }
            }
        }
        v
    }

    /// Adds `v` to the basis; returns `true` when it raised the rank.
    pub fn insert(&mut self, v: BTreeMap<usize, Rational>) -> bool {
        let mut r = self.reduce(v.into_iter().filter(|(_, x)| !x.is_zero()).collect());
        let Some((&pivot, lead)) = r.iter().next() else {
            return false;
        };
        let lead = lead.clone();
        for x in r.values_mut() {
            *x = &*x / &lead;
        }
        // Keep existing rows reduced at the new pivot.
        for row in self.rows.values_mut() {
            if let Some(coef) = row.get(&pivot).cloned() {
                for (&c, x) in &r {
                    let updated = row.get(&c).cloned().unwrap_or_else(Rational::zero) - &coef * x;
                    if updated.is_zero() {
                        row.remove(&c);
                    } else {
                        row.insert(c, updated);
                    }
                }
            }
        }
        self.rows.insert(pivot, r);
        true
    }

    pub fn contains(&self, v: BTreeMap<usize, Rational>) -> bool {
        self.reduce(v.into_iter().filter(|(_, x)| !x.is_zero()).collect())
            .is_empty()
    }
}

/// Sparse row-major flattening of a matrix.
pub fn sparse_entries(m: &RatMatrix) -> BTreeMap<usize, Rational> {
    m.entries()
        .iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(k, x)| (k, x.clone()))
        .collect()
}

/// Exact rank of a list of equally-shaped matrices viewed as vectors.
pub fn rank_of(mats: &[RatMatrix]) -> usize {
    let mut e = Echelon::new();
    for m in mats {
        e.insert(sparse_entries(m));
    }
    e.rank()
}
