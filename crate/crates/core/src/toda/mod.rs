//! Nonabelian Toda systems `∂₊(γ⁻¹∂₋γ) = [c₋, γ⁻¹c₊γ]` in block form.
//!
//! A system fixes the series, the block sizes (all steps `m_a = 1`) and the
//! constraint set tying dependent blocks to independent ones. Blocks are
//! numbered from 1 throughout, as in `β_a` and `C_{±a}`.

mod equations;
mod grid;
mod residual;
mod transform;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grading::{canonical_block_operator, BlockStructure, GradingOperator};
use crate::liealg::{symplectic_form, Series, SeriesTag};
use crate::scalar::Real;
use crate::CMat;

pub use equations::{
    emit_equations, equations, Equation, EquationFormat, Factor, Symbol, Term, Transpose,
};
pub(crate) use equations::{evaluate_rhs, PointData};
pub use grid::{CField, Geometry, GridField, GridSpec};
pub use residual::{
    block_residuals, connection, curvature_residual, residual_full, BlockReport, Connection,
    ResidualReport, Stencil,
};
pub use transform::{
    conformal_transform, gauge_transform, ClosureSource, FieldSource, GaugeLines,
    InterpolatedSource, Reparametrization,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintSet {
    ANone,
    BdEvenP,
    BdOddP,
    CEvenP,
    COddP,
}

impl ConstraintSet {
    pub fn name(self) -> &'static str {
        match self {
            ConstraintSet::ANone => "A-none",
            ConstraintSet::BdEvenP => "BD-evenp",
            ConstraintSet::BdOddP => "BD-oddp",
            ConstraintSet::CEvenP => "C-evenp",
            ConstraintSet::COddP => "C-oddp",
        }
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConstraintSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ConstraintSet::ANone,
            ConstraintSet::BdEvenP,
            ConstraintSet::BdOddP,
            ConstraintSet::CEvenP,
            ConstraintSet::COddP,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| Error::Constraint(format!("unknown constraint set {s:?}")))
    }
}

/// A Toda system with unit steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TodaSystem {
    pub tag: SeriesTag,
    pub blocks: BlockStructure,
    pub l: u64,
    pub constraint: ConstraintSet,
}

pub fn build_system(tag: SeriesTag, sizes: &[usize]) -> Result<TodaSystem> {
    let blocks = BlockStructure::unit_steps(tag, sizes.to_vec())?;
    let odd = blocks.p() % 2 == 1;
    let constraint = match (tag.series, odd) {
        (Series::A, _) => ConstraintSet::ANone,
        (Series::B | Series::D, true) => ConstraintSet::BdOddP,
        (Series::B | Series::D, false) => ConstraintSet::BdEvenP,
        (Series::C, true) => ConstraintSet::COddP,
        (Series::C, false) => ConstraintSet::CEvenP,
    };
    Ok(TodaSystem {
        tag: blocks.tag(),
        l: blocks.l(),
        blocks,
        constraint,
    })
}

impl TodaSystem {
    pub fn p(&self) -> usize {
        self.blocks.p()
    }

    pub fn s(&self) -> usize {
        self.blocks.s()
    }

    pub fn dim(&self) -> usize {
        self.tag.dim()
    }

    pub fn sizes(&self) -> &[usize] {
        self.blocks.sizes()
    }

    /// Size `k_a` of block `a` (1-based).
    pub fn k(&self, a: usize) -> usize {
        self.sizes()[a - 1]
    }

    pub fn offset(&self, a: usize) -> usize {
        self.blocks.offset(a)
    }

    /// Number of independent `β_a`: `p`, `s + 1` or `s`.
    pub fn independent_count(&self) -> usize {
        match self.constraint {
            ConstraintSet::ANone => self.p(),
            ConstraintSet::BdOddP | ConstraintSet::COddP => self.s() + 1,
            ConstraintSet::BdEvenP | ConstraintSet::CEvenP => self.s(),
        }
    }

    /// Number of independent `C_{±a}` (out of `p − 1`).
    pub fn c_independent_count(&self) -> usize {
        match self.constraint {
            ConstraintSet::ANone => self.p() - 1,
            _ => self.s(),
        }
    }

    /// Central block index for odd `p` outside the A series.
    pub fn central(&self) -> Option<usize> {
        match self.constraint {
            ConstraintSet::BdOddP | ConstraintSet::COddP => Some(self.s() + 1),
            _ => None,
        }
    }

    pub fn is_constrained(&self) -> bool {
        self.constraint != ConstraintSet::ANone
    }

    /// Canonical grading operator `q` of the underlying gradation.
    pub fn grading_operator(&self) -> GradingOperator {
        canonical_block_operator(&self.blocks).expect("system blocks are validated")
    }

    /// Block index ranges `(offset, size)` for all `p` blocks.
    pub fn layout(&self) -> Vec<(usize, usize)> {
        (1..=self.p())
            .map(|a| (self.offset(a), self.k(a)))
            .collect()
    }
}

impl fmt::Display for TodaSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k: Vec<String> = self.sizes().iter().map(|k| k.to_string()).collect();
        write!(f, "{} k=({}) [{}]", self.tag, k.join(","), self.constraint)
    }
}

/// Default tolerance for constraint checks on supplied blocks.
pub const CONSTRAINT_TOL: f64 = 1e-12;

fn check_shape<F: Real>(what: &str, m: &CMat<F>, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::Shape(format!(
            "{what} must be {rows}x{cols}, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

fn defect_scale<F: Real>(m: &CMat<F>) -> F {
    F::one().max(m.max_norm())
}

/// Off-diagonal blocks `C_{−a}` (`k_{a+1}×k_a`) and `C_{+a}` (`k_a×k_{a+1}`),
/// `a = 1..p−1`, always stored in full.
#[derive(Debug, Clone, PartialEq)]
pub struct CBlocks<F: Real> {
    minus: Vec<CMat<F>>,
    plus: Vec<CMat<F>>,
}

impl<F: Real> CBlocks<F> {
    /// Accepts either the independent half (completed from the constraints)
    /// or all `p − 1` blocks (validated against them).
    pub fn new(system: &TodaSystem, minus: Vec<CMat<F>>, plus: Vec<CMat<F>>) -> Result<Self> {
        Self::with_tol(system, minus, plus, F::lit(CONSTRAINT_TOL))
    }

    pub fn with_tol(
        system: &TodaSystem,
        minus: Vec<CMat<F>>,
        plus: Vec<CMat<F>>,
        tol: F,
    ) -> Result<Self> {
        let p = system.p();
        let ind = system.c_independent_count();
        if minus.len() != plus.len() {
            return Err(Error::Blocks(format!(
                "{} C- blocks but {} C+ blocks",
                minus.len(),
                plus.len()
            )));
        }
        if minus.len() == p - 1 {
            let out = Self { minus, plus };
            out.check_shapes(system)?;
            out.validate(system, tol)?;
            Ok(out)
        } else if minus.len() == ind {
            Self::complete(system, minus, plus, tol)
        } else {
            Err(Error::Blocks(format!(
                "{system} takes {ind} independent or {} total C blocks per sign, got {}",
                p - 1,
                minus.len()
            )))
        }
    }

    /// All-zero blocks of the right shapes.
    pub fn zeros(system: &TodaSystem) -> Self {
        let p = system.p();
        let minus = (1..p)
            .map(|a| CMat::zeros(system.k(a + 1), system.k(a)))
            .collect();
        let plus = (1..p)
            .map(|a| CMat::zeros(system.k(a), system.k(a + 1)))
            .collect();
        Self { minus, plus }
    }

    fn check_shapes(&self, system: &TodaSystem) -> Result<()> {
        for (idx, (m, pl)) in self.minus.iter().zip(&self.plus).enumerate() {
            let a = idx + 1;
            check_shape(&format!("C-{a}"), m, system.k(a + 1), system.k(a))?;
            check_shape(&format!("C+{a}"), pl, system.k(a), system.k(a + 1))?;
        }
        Ok(())
    }

    fn complete(
        system: &TodaSystem,
        minus: Vec<CMat<F>>,
        plus: Vec<CMat<F>>,
        tol: F,
    ) -> Result<Self> {
        let p = system.p();
        let mut out = Self { minus, plus };
        // Shapes of the supplied half.
        for a in 1..=out.minus.len() {
            check_shape(
                &format!("C-{a}"),
                &out.minus[a - 1],
                system.k(a + 1),
                system.k(a),
            )?;
            check_shape(
                &format!("C+{a}"),
                &out.plus[a - 1],
                system.k(a),
                system.k(a + 1),
            )?;
        }
        for b in out.minus.len() + 1..p {
            let (m, pl) = dependent_c(system, &out, b);
            out.minus.push(m);
            out.plus.push(pl);
        }
        out.validate(system, tol)?;
        Ok(out)
    }

    /// Checks every constraint relation within `tol` (relative to block size).
    pub fn validate(&self, system: &TodaSystem, tol: F) -> Result<()> {
        self.check_shapes(system)?;
        if !system.is_constrained() {
            return Ok(());
        }
        let p = system.p();
        let s = system.s();
        for b in 1..p {
            let a = p - b;
            if a > b
                || (a == b
                    && !matches!(
                        system.constraint,
                        ConstraintSet::BdEvenP | ConstraintSet::CEvenP
                    ))
            {
                continue;
            }
            if a == b {
                // Self-paired block of even p.
                let sign = if system.constraint == ConstraintSet::CEvenP {
                    F::one()
                } else {
                    -F::one()
                };
                for (label, m) in [("C-", &self.minus[a - 1]), ("C+", &self.plus[a - 1])] {
                    let d = (&m.t_transpose() - &m.scale_real(sign)).max_norm();
                    if d > tol * defect_scale(m) {
                        let kind = if sign > F::zero() {
                            "T-symmetric"
                        } else {
                            "T-antisymmetric"
                        };
                        return Err(Error::Constraint(format!(
                            "{label}{s} must be {kind} (defect {d:e})"
                        )));
                    }
                }
                continue;
            }
            let (em, ep) = dependent_c(system, self, b);
            for (label, got, want) in [
                ("C-", &self.minus[b - 1], &em),
                ("C+", &self.plus[b - 1], &ep),
            ] {
                let d = (got - want).max_norm();
                if d > tol * defect_scale(want) {
                    return Err(Error::Constraint(format!(
                        "{label}{b} does not match the relation with {label}{a} (defect {d:e})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `C_{−a}`, 1-based.
    pub fn minus(&self, a: usize) -> &CMat<F> {
        &self.minus[a - 1]
    }

    /// `C_{+a}`, 1-based.
    pub fn plus(&self, a: usize) -> &CMat<F> {
        &self.plus[a - 1]
    }

    pub fn minus_all(&self) -> &[CMat<F>] {
        &self.minus
    }

    pub fn plus_all(&self) -> &[CMat<F>] {
        &self.plus
    }

    /// Full `c₋` or `c₊` (`sign < 0` selects `c₋`).
    pub fn assemble(&self, system: &TodaSystem, sign: i8) -> CMat<F> {
        assemble_blocks(system, &self.minus, &self.plus, sign)
    }
}

fn assemble_blocks<F: Real>(
    system: &TodaSystem,
    minus: &[CMat<F>],
    plus: &[CMat<F>],
    sign: i8,
) -> CMat<F> {
    let n = system.dim();
    let mut out = CMat::zeros(n, n);
    for a in 1..system.p() {
        if sign < 0 {
            out.set_block(system.offset(a + 1), system.offset(a), &minus[a - 1]);
        } else {
            out.set_block(system.offset(a), system.offset(a + 1), &plus[a - 1]);
        }
    }
    out
}

/// `(C_{−b}, C_{+b})` implied by the partner `a = p − b`.
fn dependent_c<F: Real>(system: &TodaSystem, c: &CBlocks<F>, b: usize) -> (CMat<F>, CMat<F>) {
    let p = system.p();
    let a = p - b;
    let (m, pl) = (&c.minus[a - 1], &c.plus[a - 1]);
    if system.constraint == ConstraintSet::COddP && a == system.s() {
        let ks = system.k(a);
        let kc = system.k(a + 1);
        let i_s = CMat::<F>::antidiag_unit(ks);
        let j = symplectic_form::<Complex<F>>(kc / 2);
        let minus = -&(&(&i_s * &m.transpose()) * &j);
        let plus = &(&j * &pl.transpose()) * &i_s;
        (minus, plus)
    } else {
        (-&m.t_transpose(), -&pl.t_transpose())
    }
}

/// `assemble_c`: the full `c₋` (`sign < 0`) or `c₊` (`sign > 0`) matrix.
pub fn assemble_c<F: Real>(system: &TodaSystem, blocks: &CBlocks<F>, sign: i8) -> CMat<F> {
    blocks.assemble(system, sign)
}

/// Completes the independent `β_a` to all `p` blocks.
pub fn complete_betas<F: Real>(system: &TodaSystem, betas: &[CMat<F>]) -> Result<Vec<CMat<F>>> {
    let ind = system.independent_count();
    if betas.len() != ind {
        return Err(Error::Blocks(format!(
            "{system} has {ind} independent blocks, got {}",
            betas.len()
        )));
    }
    for (idx, b) in betas.iter().enumerate() {
        let k = system.k(idx + 1);
        check_shape(&format!("beta{}", idx + 1), b, k, k)?;
    }
    let mut out = betas.to_vec();
    for a in ind + 1..=system.p() {
        let partner = system.p() - a + 1;
        let inv = betas[partner - 1]
            .t_transpose()
            .inverse()
            .map_err(|e| Error::Singular(format!("beta{partner}: {e}")))?;
        out.push(inv);
    }
    Ok(out)
}

/// Group-condition defect of the central block, if the system has one.
pub fn central_defect<F: Real>(system: &TodaSystem, betas: &[CMat<F>]) -> Option<F> {
    let c = system.central()?;
    let beta = &betas[c - 1];
    let k = beta.rows();
    let id = CMat::<F>::identity(k);
    let d = match system.constraint {
        ConstraintSet::BdOddP => (&(&beta.t_transpose() * beta) - &id).max_norm(),
        _ => {
            let j = symplectic_form::<Complex<F>>(k / 2);
            (&(&(&(&j * &beta.transpose()) * &j) * beta) + &id).max_norm()
        }
    };
    Some(d)
}

/// Block-diagonal `γ` from the independent `β_a`.
pub fn assemble_gamma<F: Real>(system: &TodaSystem, betas: &[CMat<F>]) -> Result<CMat<F>> {
    let all = complete_betas(system, betas)?;
    check_central(system, betas, F::lit(1e-10))?;
    Ok(CMat::block_diag(&all))
}

pub(crate) fn check_central<F: Real>(system: &TodaSystem, betas: &[CMat<F>], tol: F) -> Result<()> {
    if let Some(d) = central_defect(system, betas) {
        let c = system.central().expect("central block");
        let scale = defect_scale(&betas[c - 1]);
        if d > tol * scale * scale {
            let group = if system.constraint == ConstraintSet::COddP {
                "Sp"
            } else {
                "SO"
            };
            return Err(Error::Constraint(format!(
                "central block beta{c} is not in {group}({}) (defect {d:e})",
                betas[c - 1].rows()
            )));
        }
    }
    Ok(())
}
