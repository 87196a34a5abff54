//! Cartan matrices of the classical series and their exact inverses.

use crate::error::{Error, Result};
use crate::exact::{int, rat, rmat_inverse};
use crate::liealg::{Series, SeriesTag};
use crate::{RatMatrix, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct CartanMatrix {
    pub tag: SeriesTag,
    pub k: RatMatrix,
    pub kinv: RatMatrix,
}

impl CartanMatrix {
    pub fn rank(&self) -> usize {
        self.tag.rank
    }
}

/// Integer Cartan matrix `k` for `tag`, 1-based conventions:
/// B has `k_{r−1,r} = −2`, C is its transpose, D forks at node `r−2`.
pub fn cartan_k(tag: &SeriesTag) -> RatMatrix {
    let r = tag.rank;
    let mut k = RatMatrix::from_fn(r, r, |i, j| {
        if i == j {
            int(2)
        } else if i.abs_diff(j) == 1 {
            int(-1)
        } else {
            int(0)
        }
    });
    match tag.series {
        Series::A => {}
        Series::B => k[(r - 2, r - 1)] = int(-2),
        Series::C => {
            if r >= 2 {
                k[(r - 1, r - 2)] = int(-2);
            }
        }
        Series::D => {
            k[(r - 2, r - 1)] = int(0);
            k[(r - 1, r - 2)] = int(0);
            k[(r - 3, r - 1)] = int(-1);
            k[(r - 1, r - 3)] = int(-1);
        }
    }
    k
}

pub fn cartan_matrix(tag: &SeriesTag) -> Result<CartanMatrix> {
    let tag = SeriesTag::new(tag.series, tag.rank)?;
    let k = cartan_k(&tag);
    let kinv = rmat_inverse(&k)?;
    Ok(CartanMatrix { tag, k, kinv })
}

/// Entry `(i, j)` of `k⁻¹` from the closed-form patterns (1-based).
pub fn cartan_inverse_closed_form(tag: &SeriesTag, i: usize, j: usize) -> Result<Rational> {
    let r = tag.rank;
    if i == 0 || j == 0 || i > r || j > r {
        return Err(Error::Index(format!(
            "k^-1 entry ({i},{j}) outside 1..={r}"
        )));
    }
    let (lo, hi) = (i.min(j) as i64, i.max(j) as i64);
    let (i, j, r) = (i as i64, j as i64, r as i64);
    Ok(match tag.series {
        Series::A => rat(lo * (r + 1 - hi), r + 1),
        Series::B => {
            if i < r {
                int(lo)
            } else {
                rat(j, 2)
            }
        }
        Series::C => {
            if j < r {
                int(lo)
            } else {
                rat(i, 2)
            }
        }
        Series::D => {
            let fork = |x: i64| x >= r - 1;
            match (fork(i), fork(j)) {
                (false, false) => int(lo),
                (false, true) => rat(i, 2),
                (true, false) => rat(j, 2),
                (true, true) if i == j => rat(r, 4),
                (true, true) => rat(r - 2, 4),
            }
        }
    })
}

/// Full closed-form `k⁻¹`.
pub fn cartan_inverse_closed(tag: &SeriesTag) -> Result<RatMatrix> {
    let r = tag.rank;
    let mut out = RatMatrix::zeros(r, r);
    for i in 1..=r {
        for j in 1..=r {
            out[(i - 1, j - 1)] = cartan_inverse_closed_form(tag, i, j)?;
        }
    }
    Ok(out)
}
