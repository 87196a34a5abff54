//! Matrix realizations of gl, o and sp.
//!
//! All public index arguments are 1-based, matching the `e_{i,j}` notation.
//! Orthogonal algebras use the antidiagonal form `x^T = −x`, where
//! `a^T = Ĩ aᵗ Ĩ`; symplectic algebras use `J̃ xᵗ J̃ = x` with
//! `J̃ = [[0, Ĩ], [−Ĩ, 0]]`.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exact::int;
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::RatMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Series {
    A,
    B,
    C,
    D,
}

impl Series {
    pub fn letter(self) -> char {
        match self {
            Series::A => 'A',
            Series::B => 'B',
            Series::C => 'C',
            Series::D => 'D',
        }
    }

    pub fn min_rank(self) -> usize {
        match self {
            Series::A | Series::C => 1,
            Series::B => 2,
            Series::D => 3,
        }
    }
}

impl FromStr for Series {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Series::A),
            "B" | "b" => Ok(Series::B),
            "C" | "c" => Ok(Series::C),
            "D" | "d" => Ok(Series::D),
            other => Err(Error::Labels {
                tag: SeriesTag {
                    series: Series::A,
                    rank: 1,
                },
                reason: format!("unknown series {other:?}"),
            }),
        }
    }
}

/// A classical series together with its rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeriesTag {
    pub series: Series,
    pub rank: usize,
}

impl SeriesTag {
    pub fn new(series: Series, rank: usize) -> Result<Self> {
        if rank < series.min_rank() {
            return Err(Error::InvalidTag {
                series: series.letter(),
                rank,
            });
        }
        Ok(Self { series, rank })
    }

    pub fn a(rank: usize) -> Result<Self> {
        Self::new(Series::A, rank)
    }

    pub fn b(rank: usize) -> Result<Self> {
        Self::new(Series::B, rank)
    }

    pub fn c(rank: usize) -> Result<Self> {
        Self::new(Series::C, rank)
    }

    pub fn d(rank: usize) -> Result<Self> {
        Self::new(Series::D, rank)
    }

    /// Ambient matrix size `n`.
    pub fn dim(&self) -> usize {
        let r = self.rank;
        match self.series {
            Series::A => r + 1,
            Series::B => 2 * r + 1,
            Series::C | Series::D => 2 * r,
        }
    }

    /// Dimension of the matrix algebra (gl for the A series).
    pub fn algebra_dim(&self) -> usize {
        let n = self.dim();
        match self.series {
            Series::A => n * n,
            Series::B | Series::D => n * (n - 1) / 2,
            Series::C => n * (n + 1) / 2,
        }
    }

    pub fn is_orthogonal(&self) -> bool {
        matches!(self.series, Series::B | Series::D)
    }
}

impl fmt::Display for SeriesTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.series.letter(), self.rank)
    }
}

/// `e_{i,j}` in an `n×n` matrix (1-based indices).
pub fn basis_unit<T: Scalar>(i: usize, j: usize, n: usize) -> Result<Matrix<T>> {
    if i == 0 || j == 0 || i > n || j > n {
        return Err(Error::Index(format!("e_({i},{j}) outside 1..={n}")));
    }
    Ok(Matrix::from_fn(n, n, |k, l| {
        if k + 1 == i && l + 1 == j {
            T::one()
        } else {
            T::zero()
        }
    }))
}

/// `Ĩ_n`, the antidiagonal unit matrix.
pub fn antidiag_unit<T: Scalar>(n: usize) -> Matrix<T> {
    Matrix::antidiag_unit(n)
}

/// `J̃_r = [[0, Ĩ_r], [−Ĩ_r, 0]]`.
pub fn symplectic_form<T: Scalar>(r: usize) -> Matrix<T> {
    let n = 2 * r;
    Matrix::from_fn(n, n, |i, j| {
        if i + j + 1 != n {
            T::zero()
        } else if i < r {
            T::one()
        } else {
            -T::one()
        }
    })
}

/// `Ĩ_{k₂} aᵗ Ĩ_{k₁}` for a `k₁×k₂` matrix `a`.
pub fn t_transpose<T: Scalar>(a: &Matrix<T>) -> Matrix<T> {
    a.t_transpose()
}

/// Outcome of a membership test.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership<M> {
    pub member: bool,
    pub defect: M,
}

/// Algebra predicate selector for the A series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearMode {
    /// `gl(n)`: every square matrix.
    Gl,
    /// `sl(n)`: trace zero.
    Sl,
}

fn check_square<T: Scalar>(tag: &SeriesTag, x: &Matrix<T>) -> Result<()> {
    let n = tag.dim();
    if x.shape() != (n, n) {
        return Err(Error::Shape(format!(
            "{tag} acts on {n}x{n} matrices, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    Ok(())
}

/// Defect matrix whose vanishing characterizes the algebra (B/C/D only).
fn algebra_defect<T: Scalar>(tag: &SeriesTag, x: &Matrix<T>) -> Matrix<T> {
    match tag.series {
        Series::A => Matrix::zeros(x.rows(), x.cols()),
        Series::B | Series::D => &x.t_transpose() + x,
        Series::C => {
            let j = symplectic_form::<T>(tag.rank);
            &(&(&j * &x.transpose()) * &j) - x
        }
    }
}

/// Membership in the algebra of `tag`; the A series uses `gl`.
pub fn algebra_membership<T: Scalar>(
    tag: &SeriesTag,
    x: &Matrix<T>,
    tol: &T::Modulus,
) -> Result<Membership<T::Modulus>> {
    algebra_membership_with(tag, x, tol, LinearMode::Gl)
}

/// Membership with an explicit `gl`/`sl` choice for the A series.
pub fn algebra_membership_with<T: Scalar>(
    tag: &SeriesTag,
    x: &Matrix<T>,
    tol: &T::Modulus,
    mode: LinearMode,
) -> Result<Membership<T::Modulus>> {
    check_square(tag, x)?;
    let defect = match (tag.series, mode) {
        (Series::A, LinearMode::Gl) => T::Modulus::zero(),
        (Series::A, LinearMode::Sl) => x.trace().modulus(),
        _ => algebra_defect(tag, x).max_modulus(),
    };
    Ok(Membership {
        member: defect <= *tol,
        defect,
    })
}

/// `sl(n)` membership for any square matrix.
pub fn sl_membership<T: Scalar>(x: &Matrix<T>, tol: &T::Modulus) -> Result<Membership<T::Modulus>> {
    if !x.is_square() {
        return Err(Error::Shape("sl membership needs a square matrix".into()));
    }
    let defect = x.trace().modulus();
    Ok(Membership {
        member: defect <= *tol,
        defect,
    })
}

/// Membership in the group of `tag` (GL for the A series).
pub fn group_membership<T: Scalar>(
    tag: &SeriesTag,
    g: &Matrix<T>,
    tol: &T::Modulus,
) -> Result<Membership<T::Modulus>> {
    check_square(tag, g)?;
    let g_inv = g.inverse()?;
    let n = tag.dim();
    let id = Matrix::<T>::identity(n);
    match tag.series {
        Series::A => {
            // Defect reports 1/|det g| so that "small" still means "good".
            let det = g.determinant()?.modulus();
            let inv_det = g_inv.determinant()?.modulus();
            Ok(Membership {
                member: det > *tol,
                defect: inv_det,
            })
        }
        Series::B | Series::D => {
            let defect = (&(&g.t_transpose() * g) - &id).max_modulus();
            Ok(Membership {
                member: defect <= *tol,
                defect,
            })
        }
        Series::C => {
            let j = symplectic_form::<T>(tag.rank);
            let defect = (&(&(&(&j * &g.transpose()) * &j) * g) + &id).max_modulus();
            Ok(Membership {
                member: defect <= *tol,
                defect,
            })
        }
    }
}

/// Cartan generators `h_1..h_r` in the diagonal realization of each series.
pub fn cartan_generators(tag: &SeriesTag) -> Vec<RatMatrix> {
    let r = tag.rank;
    let n = tag.dim();
    // 1-based diagonal builder.
    let diag = |terms: &[(usize, i64)]| {
        let mut d = vec![int(0); n];
        for &(i, v) in terms {
            d[i - 1] = &d[i - 1] + int(v);
        }
        RatMatrix::from_diag(&d)
    };
    let mut out = Vec::with_capacity(r);
    for i in 1..=r {
        let h = match tag.series {
            Series::A => diag(&[(i, 1), (i + 1, -1)]),
            Series::B if i < r => {
                diag(&[(i, 1), (i + 1, -1), (2 * r + 1 - i, 1), (2 * r + 2 - i, -1)])
            }
            Series::B => diag(&[(r, 2), (r + 2, -2)]),
            Series::C | Series::D if i < r => {
                diag(&[(i, 1), (i + 1, -1), (2 * r - i, 1), (2 * r + 1 - i, -1)])
            }
            Series::C => diag(&[(r, 1), (r + 1, -1)]),
            Series::D => diag(&[(r - 1, 1), (r, 1), (r + 1, -1), (r + 2, -1)]),
        };
        out.push(h);
    }
    out
}

/// The involutive automorphism `σ(x) = a x a⁻¹` of `o(2r)` exchanging the
/// two fork nodes of the D-series diagram.
#[derive(Debug, Clone)]
pub struct DrAutomorphism {
    rank: usize,
}

impl DrAutomorphism {
    pub fn new(rank: usize) -> Result<Self> {
        SeriesTag::d(rank)?;
        Ok(Self { rank })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Permutation matrix swapping rows `r` and `r+1`; it is its own inverse.
    pub fn matrix<T: Scalar>(&self) -> Matrix<T> {
        let r = self.rank;
        Matrix::from_fn(2 * r, 2 * r, |i, j| {
            let swapped = match i + 1 {
                k if k == r => r + 1,
                k if k == r + 1 => r,
                k => k,
            };
            if j + 1 == swapped {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    pub fn apply<T: Scalar>(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let a = self.matrix::<T>();
        if x.shape() != a.shape() {
            return Err(Error::Shape(format!(
                "sigma acts on {}x{} matrices",
                a.rows(),
                a.cols()
            )));
        }
        x.conjugate_by(&a, &a)
    }
}

/// `dr_automorphism(r)`: the matrix `a` of the D-series diagram automorphism.
pub fn dr_automorphism<T: Scalar>(rank: usize) -> Result<Matrix<T>> {
    Ok(DrAutomorphism::new(rank)?.matrix())
}

/// Whether `x` is the identity up to `tol`.
pub fn is_identity<T: Scalar>(x: &Matrix<T>, tol: &T::Modulus) -> bool {
    x.is_square() && (x - &Matrix::identity(x.rows())).max_modulus() <= *tol
}
