//! Finite-difference residuals of the Toda equations and of the zero-curvature
//! condition.
//!
//! `∂₊(γ⁻¹∂₋γ)` is evaluated in two passes: first `u = γ⁻¹∂₋γ` on every
//! interior `z⁻` row, then `∂₊u` by the same first-derivative stencil.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, GridPoint, Result};
use crate::matfn::logm;
use crate::scalar::Real;
use crate::CMat;

use super::equations::{equations, evaluate_rhs, PointData};
use super::{complete_betas, CField, GridField, GridSpec, TodaSystem};

/// First-derivative discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// Central second-order differences.
    #[default]
    Centered2,
    /// Central fourth-order differences, one-sided fourth order next to edges.
    Centered4,
    /// `u = log(γ(z⁻−h)⁻¹γ(z⁻+h))/2h` for the `z⁻` pass; keeps `u` in the
    /// Lie algebra of `γ` exactly. Second order.
    Lie,
}

impl Stencil {
    pub fn order(self) -> u32 {
        match self {
            Stencil::Centered4 => 4,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stencil::Centered2 => "centered2",
            Stencil::Centered4 => "centered4",
            Stencil::Lie => "lie",
        }
    }

    fn min_samples(self) -> usize {
        if self == Stencil::Centered4 {
            5
        } else {
            3
        }
    }
}

impl fmt::Display for Stencil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stencil {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centered2" => Ok(Stencil::Centered2),
            "centered4" => Ok(Stencil::Centered4),
            "lie" => Ok(Stencil::Lie),
            other => Err(Error::Domain(format!("unknown stencil {other:?}"))),
        }
    }
}

/// Weights `w` with `f'(x_i) ≈ Σ w_k f(x_k) / h` on `n` samples.
pub(crate) fn derivative_weights(n: usize, i: usize, order: u32) -> Vec<(usize, f64)> {
    if order == 4 && n >= 5 {
        const EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
        const EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
        let scaled = |w: &[f64; 5], reflect: bool| -> Vec<(usize, f64)> {
            w.iter()
                .enumerate()
                .map(|(k, &x)| {
                    if reflect {
                        (n - 1 - k, -x / 12.0)
                    } else {
                        (k, x / 12.0)
                    }
                })
                .collect()
        };
        return match i {
            0 => scaled(&EDGE0, false),
            1 => scaled(&EDGE1, false),
            _ if i == n - 1 => scaled(&EDGE0, true),
            _ if i == n - 2 => scaled(&EDGE1, true),
            _ => vec![
                (i - 2, 1.0 / 12.0),
                (i - 1, -8.0 / 12.0),
                (i + 1, 8.0 / 12.0),
                (i + 2, -1.0 / 12.0),
            ],
        };
    }
    match i {
        0 => vec![(0, -1.5), (1, 2.0), (2, -0.5)],
        _ if i == n - 1 => vec![(n - 3, 0.5), (n - 2, -2.0), (n - 1, 1.5)],
        _ => vec![(i - 1, -0.5), (i + 1, 0.5)],
    }
}

fn combine<F: Real>(weights: &[(usize, f64)], h: F, get: impl Fn(usize) -> CMat<F>) -> CMat<F> {
    let mut acc: Option<CMat<F>> = None;
    for &(k, w) in weights {
        let term = get(k).scale_real(F::lit(w));
        acc = Some(match acc {
            None => term,
            Some(a) => &a + &term,
        });
    }
    acc.expect("nonempty stencil").scale_real(F::one() / h)
}

/// Residual grid of one block (or of the full matrix) on interior points.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport<F: Real> {
    pub label: String,
    /// 1-based block index; `None` for full-matrix reports.
    pub block: Option<usize>,
    /// Row-major over interior points, `z⁻` slow.
    pub grid: Vec<CMat<F>>,
    pub max_norm: F,
    pub l2_norm: F,
}

impl<F: Real> BlockReport<F> {
    fn new(label: String, block: Option<usize>, grid: Vec<CMat<F>>, spec: &GridSpec<F>) -> Self {
        let max_norm = grid.iter().map(|m| m.max_norm()).fold(F::zero(), F::max);
        let sum = grid.iter().fold(F::zero(), |acc, m| {
            let f = m.frobenius_norm();
            acc + f * f
        });
        let l2_norm = (sum * spec.h_minus * spec.h_plus).sqrt();
        Self {
            label,
            block,
            grid,
            max_norm,
            l2_norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport<F: Real> {
    pub blocks: Vec<BlockReport<F>>,
    pub stencil: Stencil,
    /// Interior extent `(n⁻ − 2, n⁺ − 2)`.
    pub interior: (usize, usize),
    pub h_minus: F,
    pub h_plus: F,
}

impl<F: Real> ResidualReport<F> {
    pub fn max_norm(&self) -> F {
        self.blocks
            .iter()
            .map(|b| b.max_norm)
            .fold(F::zero(), F::max)
    }

    pub fn l2_norm(&self) -> F {
        self.blocks
            .iter()
            .fold(F::zero(), |acc, b| acc + b.l2_norm * b.l2_norm)
            .sqrt()
    }

    /// Residual at grid point `(i, j)`, both in `1..n−1`.
    pub fn at(&self, block: usize, i: usize, j: usize) -> &CMat<F> {
        &self.blocks[block].grid[(i - 1) * self.interior.1 + (j - 1)]
    }
}

fn singular_at(what: &str, i: usize, j: usize, e: Error) -> Error {
    Error::Singular(format!(
        "{what} at {}: {e}",
        GridPoint {
            i_minus: i,
            i_plus: j
        }
    ))
}

/// Inverses of every sample of every independent block.
fn inverse_grids<F: Real>(field: &GridField<F>) -> Result<Vec<Vec<CMat<F>>>> {
    let spec = field.spec;
    (1..=field.block_count())
        .map(|a| {
            field
                .block_samples(a)
                .par_iter()
                .enumerate()
                .map(|(k, m)| {
                    m.inverse().map_err(|e| {
                        singular_at(&format!("beta{a}"), k / spec.n_plus, k % spec.n_plus, e)
                    })
                })
                .collect()
        })
        .collect()
}

/// `u = S⁻¹∂₋S` on the requested rows for every column.
fn log_derivative<F: Real>(
    spec: &GridSpec<F>,
    stencil: Stencil,
    rows: &[usize],
    samples: &[CMat<F>],
    inverses: &[CMat<F>],
) -> Result<Vec<Vec<CMat<F>>>> {
    let n = spec.n_minus;
    let h = spec.h_minus;
    rows.par_iter()
        .map(|&i| {
            (0..spec.n_plus)
                .map(|j| {
                    let at = |k: usize| spec.idx(k, j);
                    match stencil {
                        Stencil::Lie => {
                            let log_step = |from: usize, to: usize| -> Result<CMat<F>> {
                                logm(&(&inverses[at(from)] * &samples[at(to)])).map_err(|e| {
                                    Error::Domain(format!(
                                        "{e} at {}",
                                        GridPoint {
                                            i_minus: i,
                                            i_plus: j
                                        }
                                    ))
                                })
                            };
                            let two_h = h + h;
                            if i == 0 {
                                let w1 = log_step(0, 1)?;
                                let w2 = log_step(0, 2)?;
                                Ok(
                                    (&w1.scale_real(F::lit(4.0)) - &w2)
                                        .scale_real(F::one() / two_h),
                                )
                            } else if i == n - 1 {
                                let w1 = log_step(n - 2, n - 1)?;
                                let w2 = log_step(n - 3, n - 1)?;
                                Ok(
                                    (&w1.scale_real(F::lit(4.0)) - &w2)
                                        .scale_real(F::one() / two_h),
                                )
                            } else {
                                Ok(log_step(i - 1, i + 1)?.scale_real(F::one() / two_h))
                            }
                        }
                        _ => {
                            let w = derivative_weights(n, i, stencil.order());
                            let d = combine(&w, h, |k| samples[at(k)].clone());
                            Ok(&inverses[at(i)] * &d)
                        }
                    }
                })
                .collect()
        })
        .collect()
}

/// `∂₊u` at interior points from `u` on interior rows.
fn plus_derivative<F: Real>(
    spec: &GridSpec<F>,
    stencil: Stencil,
    u: &[Vec<CMat<F>>],
) -> Vec<CMat<F>> {
    let order = if stencil == Stencil::Centered4 { 4 } else { 2 };
    let np = spec.n_plus;
    u.par_iter()
        .flat_map_iter(|row| {
            (1..np - 1).map(move |j| {
                combine(&derivative_weights(np, j, order), spec.h_plus, |k| {
                    row[k].clone()
                })
            })
        })
        .collect()
}

fn check_inputs<F: Real>(
    system: &TodaSystem,
    field: &GridField<F>,
    c: &CField<F>,
    stencil: Stencil,
) -> Result<()> {
    field.check(system)?;
    c.check(&field.spec)?;
    let need = stencil.min_samples();
    if field.spec.n_minus < need || field.spec.n_plus < need {
        return Err(Error::Shape(format!(
            "stencil {stencil} needs at least {need}x{need} samples"
        )));
    }
    Ok(())
}

fn gamma_and_inverse<F: Real>(
    system: &TodaSystem,
    field: &GridField<F>,
    inv: &[Vec<CMat<F>>],
) -> Result<(Vec<CMat<F>>, Vec<CMat<F>>)> {
    let spec = field.spec;
    let ind = system.independent_count();
    let p = system.p();
    (0..spec.len())
        .into_par_iter()
        .map(|k| {
            let betas: Vec<CMat<F>> = (1..=ind)
                .map(|a| field.block_samples(a)[k].clone())
                .collect();
            let all = complete_betas(system, &betas)
                .map_err(|e| singular_at("gamma", k / spec.n_plus, k % spec.n_plus, e))?;
            let inverses: Vec<CMat<F>> = (1..=p)
                .map(|a| {
                    if a <= ind {
                        inv[a - 1][k].clone()
                    } else {
                        betas[p - a].t_transpose()
                    }
                })
                .collect();
            Ok((CMat::block_diag(&all), CMat::block_diag(&inverses)))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().unzip())
}

/// `R = ∂₊(γ⁻¹∂₋γ) − [c₋, γ⁻¹c₊γ]` on interior points.
pub fn residual_full<F: Real>(
    system: &TodaSystem,
    field: &GridField<F>,
    c: &CField<F>,
    stencil: Stencil,
) -> Result<ResidualReport<F>> {
    check_inputs(system, field, c, stencil)?;
    let spec = field.spec;
    let inv = inverse_grids(field)?;
    let (gamma, gamma_inv) = gamma_and_inverse(system, field, &inv)?;
    let rows: Vec<usize> = (1..spec.n_minus - 1).collect();
    let u = log_derivative(&spec, stencil, &rows, &gamma, &gamma_inv)?;
    let lhs = plus_derivative(&spec, stencil, &u);
    let (ni, nj) = spec.interior();
    let grid: Vec<CMat<F>> = (0..ni * nj)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / nj + 1, k % nj + 1);
            let idx = spec.idx(i, j);
            let cm = c.minus_at(i).assemble(system, -1);
            let cp = c.plus_at(j).assemble(system, 1);
            let x = &(&gamma_inv[idx] * &cp) * &gamma[idx];
            &lhs[k] - &(&(&cm * &x) - &(&x * &cm))
        })
        .collect();
    Ok(ResidualReport {
        blocks: vec![BlockReport::new("full".into(), None, grid, &spec)],
        stencil,
        interior: (ni, nj),
        h_minus: spec.h_minus,
        h_plus: spec.h_plus,
    })
}

/// Residuals of the independent block equations.
pub fn block_residuals<F: Real>(
    system: &TodaSystem,
    field: &GridField<F>,
    c: &CField<F>,
    stencil: Stencil,
) -> Result<ResidualReport<F>> {
    check_inputs(system, field, c, stencil)?;
    let spec = field.spec;
    let inv = inverse_grids(field)?;
    let rows: Vec<usize> = (1..spec.n_minus - 1).collect();
    let (ni, nj) = spec.interior();
    let eqs = equations(system);
    let mut blocks = Vec::with_capacity(eqs.len());
    for eq in &eqs {
        let a = eq.block;
        let u = log_derivative(&spec, stencil, &rows, field.block_samples(a), &inv[a - 1])?;
        let lhs = plus_derivative(&spec, stencil, &u);
        let grid = (0..ni * nj)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / nj + 1, k % nj + 1);
                let idx = spec.idx(i, j);
                let betas: Vec<CMat<F>> = (1..=field.block_count())
                    .map(|b| field.block_samples(b)[idx].clone())
                    .collect();
                let inverses: Vec<CMat<F>> = inv.iter().map(|g| g[idx].clone()).collect();
                let data = PointData {
                    betas: &betas,
                    inverses: &inverses,
                    c_minus: c.minus_at(i),
                    c_plus: c.plus_at(j),
                };
                Ok(&lhs[k] - &evaluate_rhs(eq, &data)?)
            })
            .collect::<Result<Vec<_>>>()?;
        blocks.push(BlockReport::new(format!("beta{a}"), Some(a), grid, &spec));
    }
    Ok(ResidualReport {
        blocks,
        stencil,
        interior: (ni, nj),
        h_minus: spec.h_minus,
        h_plus: spec.h_plus,
    })
}

/// Sampled connection `ω = dz⁻ (γ⁻¹∂₋γ + c₋) + dz⁺ γ⁻¹c₊γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection<F: Real> {
    pub spec: GridSpec<F>,
    pub stencil: Stencil,
    pub minus: Vec<CMat<F>>,
    pub plus: Vec<CMat<F>>,
}

/// `(ω₋, ω₊)` at every grid point; `∂₋` is one-sided on the first and last rows.
pub fn connection<F: Real>(
    system: &TodaSystem,
    field: &GridField<F>,
    c: &CField<F>,
    stencil: Stencil,
) -> Result<Connection<F>> {
    check_inputs(system, field, c, stencil)?;
    let spec = field.spec;
    let inv = inverse_grids(field)?;
    let (gamma, gamma_inv) = gamma_and_inverse(system, field, &inv)?;
    let rows: Vec<usize> = (0..spec.n_minus).collect();
    let u = log_derivative(&spec, stencil, &rows, &gamma, &gamma_inv)?;
    let mut minus = Vec::with_capacity(spec.len());
    let mut plus = Vec::with_capacity(spec.len());
    for i in 0..spec.n_minus {
        let cm = c.minus_at(i).assemble(system, -1);
        for j in 0..spec.n_plus {
            let idx = spec.idx(i, j);
            minus.push(&u[i][j] + &cm);
            let cp = c.plus_at(j).assemble(system, 1);
            plus.push(&(&gamma_inv[idx] * &cp) * &gamma[idx]);
        }
    }
    Ok(Connection {
        spec,
        stencil,
        minus,
        plus,
    })
}

/// `F = ∂₋ω₊ − ∂₊ω₋ + [ω₋, ω₊]` on interior points.
pub fn curvature_residual<F: Real>(omega: &Connection<F>) -> Result<ResidualReport<F>> {
    let spec = omega.spec;
    if omega.minus.len() != spec.len() || omega.plus.len() != spec.len() {
        return Err(Error::Shape(
            "connection components do not cover the grid".into(),
        ));
    }
    let shape = omega.minus[0].shape();
    if omega
        .minus
        .iter()
        .chain(&omega.plus)
        .any(|m| m.shape() != shape)
    {
        return Err(Error::Shape("connection components differ in shape".into()));
    }
    let order = if omega.stencil == Stencil::Centered4 {
        4
    } else {
        2
    };
    let (ni, nj) = spec.interior();
    let grid: Vec<CMat<F>> = (0..ni * nj)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / nj + 1, k % nj + 1);
            let idx = spec.idx(i, j);
            let d_minus_plus = combine(
                &derivative_weights(spec.n_minus, i, order),
                spec.h_minus,
                |r| omega.plus[spec.idx(r, j)].clone(),
            );
            let d_plus_minus = combine(
                &derivative_weights(spec.n_plus, j, order),
                spec.h_plus,
                |col| omega.minus[spec.idx(i, col)].clone(),
            );
            let (wm, wp) = (&omega.minus[idx], &omega.plus[idx]);
            let comm = &(wm * wp) - &(wp * wm);
            &(&d_minus_plus - &d_plus_minus) + &comm
        })
        .collect();
    Ok(ResidualReport {
        blocks: vec![BlockReport::new("curvature".into(), None, grid, &spec)],
        stencil: omega.stencil,
        interior: (ni, nj),
        h_minus: spec.h_minus,
        h_plus: spec.h_plus,
    })
}
