//! Characteristic (Goursat) marching for the Toda systems and closed-form
//! oracle fields.
//!
//! The scheme stores `w_a = log(β_a(i)⁻¹β_a(i+1))/h⁻` on the `z⁻` edges, an
//! approximation of `β_a⁻¹∂₋β_a` at edge midpoints. One box step advances
//! `w` across a cell by `h⁺` times the mean of the right-hand sides at the
//! four cell corners and recovers `β_a(i+1, j+1) = β_a(i, j+1) exp(h⁻w)`.
//! The unknown corner enters its own right-hand side, so each cell is a
//! small fixed-point problem.

use crate::error::{Error, GridPoint, Result};
use crate::liealg::{symplectic_form, Series};
use crate::matfn::{expm, logm};
use crate::scalar::Real;
use crate::toda::{
    block_residuals, equations, evaluate_rhs, CBlocks, CField, ConstraintSet, Equation,
    FieldSource, GridField, GridSpec, PointData, ResidualReport, Stencil, TodaSystem,
};
use crate::CMat;

use num_complex::Complex;

/// Condition number above which marching reports a blow-up.
pub const BLOW_UP_CONDITION: f64 = 1e12;
/// Fixed-point iterations allowed per cell.
pub const MAX_ITERATIONS: usize = 25;

/// A stalled cell counts as blow-up once its right-hand side exceeds the data-line scale by this factor.
pub const BLOW_UP_GROWTH: f64 = 10.0;

fn rhs_norm<F: Real>(r: &[CMat<F>]) -> F {
    r.iter().map(|m| m.max_norm()).fold(F::zero(), F::max)
}

/// Independent `β_a` on the two characteristic lines through the grid origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicData<F: Real> {
    pub spec: GridSpec<F>,
    /// `left[a][i]`: block `a + 1` at `(z⁻_i, z⁺₀)`.
    left: Vec<Vec<CMat<F>>>,
    /// `bottom[a][j]`: block `a + 1` at `(z⁻₀, z⁺_j)`.
    bottom: Vec<Vec<CMat<F>>>,
}

impl<F: Real> CharacteristicData<F> {
    pub fn new(
        spec: GridSpec<F>,
        left: Vec<Vec<CMat<F>>>,
        bottom: Vec<Vec<CMat<F>>>,
    ) -> Result<Self> {
        if left.len() != bottom.len() || left.is_empty() {
            return Err(Error::Shape(format!(
                "left line has {} blocks, bottom line {}",
                left.len(),
                bottom.len()
            )));
        }
        for (a, (l, b)) in left.iter().zip(&bottom).enumerate() {
            if l.len() != spec.n_minus || b.len() != spec.n_plus {
                return Err(Error::Shape(format!(
                    "block {} lines have {}/{} samples, grid is {}x{}",
                    a + 1,
                    l.len(),
                    b.len(),
                    spec.n_minus,
                    spec.n_plus
                )));
            }
            let shape = l[0].shape();
            if shape.0 != shape.1 || l.iter().chain(b).any(|m| m.shape() != shape) {
                return Err(Error::Shape(format!(
                    "block {} samples must share one square shape",
                    a + 1
                )));
            }
            let scale = F::one().max(l[0].max_norm());
            if (&l[0] - &b[0]).max_norm() > F::lit(1e-12) * scale {
                return Err(Error::Domain(format!(
                    "block {} lines disagree at the corner",
                    a + 1
                )));
            }
            let at = |i, j| GridPoint {
                i_minus: i,
                i_plus: j,
            };
            let samples = l
                .iter()
                .enumerate()
                .map(|(k, m)| (at(k, 0), m))
                .chain(b.iter().enumerate().map(|(k, m)| (at(0, k), m)));
            for (p, m) in samples {
                check_sample(m, a + 1, p).map_err(|e| match e {
                    Error::BlowUp { at, block, detail } => Error::Singular(format!(
                        "boundary sample of block {block} at {at}: {detail}"
                    )),
                    e => e,
                })?;
            }
        }
        Ok(Self { spec, left, bottom })
    }

    /// The boundary lines of a sampled field.
    pub fn from_field(field: &GridField<F>) -> Result<Self> {
        let spec = field.spec;
        let blocks = 1..=field.block_count();
        let left = blocks
            .clone()
            .map(|a| {
                (0..spec.n_minus)
                    .map(|i| field.beta(a, i, 0).clone())
                    .collect()
            })
            .collect();
        let bottom = blocks
            .map(|a| {
                (0..spec.n_plus)
                    .map(|j| field.beta(a, 0, j).clone())
                    .collect()
            })
            .collect();
        Self::new(spec, left, bottom)
    }

    /// Boundary lines sampled from a closed form.
    pub fn from_source(spec: GridSpec<F>, source: &dyn FieldSource<F>) -> Result<Self> {
        let left_pts = (0..spec.n_minus)
            .map(|i| source.betas(spec.z_minus(i), spec.z_plus0))
            .collect::<Result<Vec<_>>>()?;
        let bottom_pts = (0..spec.n_plus)
            .map(|j| source.betas(spec.z_minus0, spec.z_plus(j)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            spec,
            transpose_points(left_pts),
            transpose_points(bottom_pts),
        )
    }

    pub fn block_count(&self) -> usize {
        self.left.len()
    }

    pub fn left(&self, a: usize) -> &[CMat<F>] {
        &self.left[a - 1]
    }

    pub fn bottom(&self, a: usize) -> &[CMat<F>] {
        &self.bottom[a - 1]
    }
}

fn transpose_points<F: Real>(points: Vec<Vec<CMat<F>>>) -> Vec<Vec<CMat<F>>> {
    let blocks = points.first().map_or(0, Vec::len);
    let mut out: Vec<Vec<CMat<F>>> = vec![Vec::with_capacity(points.len()); blocks];
    for pt in points {
        for (dst, m) in out.iter_mut().zip(pt) {
            dst.push(m);
        }
    }
    out
}

fn check_sample<F: Real>(m: &CMat<F>, block: usize, at: GridPoint) -> Result<()> {
    if !m.is_finite() {
        return Err(Error::BlowUp {
            at,
            block,
            detail: "non-finite entry".into(),
        });
    }
    let cond = m.condition_number();
    if !(cond.is_finite() && cond <= F::lit(BLOW_UP_CONDITION)) {
        return Err(Error::BlowUp {
            at,
            block,
            detail: format!("condition number {cond:e}"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeInfo<F: Real> {
    pub name: &'static str,
    pub h_minus: F,
    pub h_plus: F,
    pub cells: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<F: Real> {
    pub field: GridField<F>,
    pub report: ResidualReport<F>,
    pub scheme: SchemeInfo<F>,
}

/// Maps a central-block increment onto `so` or `sp`.
fn project_central<F: Real>(system: &TodaSystem, x: CMat<F>) -> CMat<F> {
    let half = F::lit(0.5);
    match system.constraint {
        ConstraintSet::BdOddP => (&x - &x.t_transpose()).scale_real(half),
        ConstraintSet::COddP => {
            let j = symplectic_form::<Complex<F>>(x.rows() / 2);
            let tau = &(&j * &x.transpose()) * &j;
            (&x + &tau).scale_real(half)
        }
        _ => x,
    }
}

struct Rhs<'a, F: Real> {
    eqs: Vec<Equation>,
    c: &'a CField<F>,
}

impl<F: Real> Rhs<'_, F> {
    fn eval(&self, betas: &[CMat<F>], i: usize, j: usize) -> Result<Vec<CMat<F>>> {
        let inverses = betas
            .iter()
            .enumerate()
            .map(|(a, b)| {
                b.inverse().map_err(|e| Error::BlowUp {
                    at: GridPoint {
                        i_minus: i,
                        i_plus: j,
                    },
                    block: a + 1,
                    detail: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let data = PointData {
            betas,
            inverses: &inverses,
            c_minus: self.c.minus_at(i),
            c_plus: self.c.plus_at(j),
        };
        self.eqs.iter().map(|eq| evaluate_rhs(eq, &data)).collect()
    }
}

/// Solves the characteristic initial value problem on `data.spec`.
pub fn march<F: Real>(
    system: &TodaSystem,
    c: &CField<F>,
    data: &CharacteristicData<F>,
) -> Result<SolveResult<F>> {
    let spec = data.spec;
    let ind = system.independent_count();
    if data.block_count() != ind {
        return Err(Error::Shape(format!(
            "{system} has {ind} independent blocks, data has {}",
            data.block_count()
        )));
    }
    for a in 1..=ind {
        let k = system.k(a);
        if data.left(a)[0].shape() != (k, k) {
            return Err(Error::Shape(format!("block {a} must be {k}x{k}")));
        }
    }
    c.check(&spec)?;
    if let Some(cb) = c.as_constant() {
        cb.validate(system, F::lit(crate::toda::CONSTRAINT_TOL))?;
    }
    if let Some(central) = system.central() {
        let line = data.left(central).iter().chain(data.bottom(central));
        for m in line {
            let mut pt: Vec<CMat<F>> = (1..=ind).map(|a| data.left(a)[0].clone()).collect();
            pt[central - 1] = m.clone();
            crate::toda::check_central(system, &pt, F::lit(1e-10))?;
        }
    }
    let rhs = Rhs {
        eqs: equations(system),
        c,
    };
    let (nm, np) = (spec.n_minus, spec.n_plus);
    let (hm, hp) = (spec.h_minus, spec.h_plus);
    let quarter = F::lit(0.25);

    // grid[a][idx]
    let mut grid: Vec<Vec<CMat<F>>> = vec![Vec::new(); ind];
    for (a, g) in grid.iter_mut().enumerate() {
        *g = vec![CMat::zeros(0, 0); spec.len()];
        for i in 0..nm {
            g[spec.idx(i, 0)] = data.left[a][i].clone();
        }
        for j in 0..np {
            g[spec.idx(0, j)] = data.bottom[a][j].clone();
        }
    }
    let point = |grid: &Vec<Vec<CMat<F>>>, i: usize, j: usize| -> Vec<CMat<F>> {
        grid.iter().map(|g| g[spec.idx(i, j)].clone()).collect()
    };

    // Edge logarithms on the left line.
    let mut w: Vec<Vec<CMat<F>>> = (0..nm - 1)
        .map(|i| {
            (0..ind)
                .map(|a| {
                    let step = &data.left[a][i].inverse()? * &data.left[a][i + 1];
                    let l = logm(&step).map_err(|e| {
                        Error::Domain(format!("left line of block {} at i-={i}: {e}", a + 1))
                    })?;
                    let x = l.scale_real(F::one() / hm);
                    Ok(if Some(a + 1) == system.central() {
                        project_central(system, x)
                    } else {
                        x
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut rhs_col: Vec<Vec<CMat<F>>> = (0..nm)
        .map(|i| rhs.eval(&point(&grid, i, 0), i, 0))
        .collect::<Result<_>>()?;
    let mut line_scale = F::zero();
    for r in &rhs_col {
        line_scale = line_scale.max(rhs_norm(r));
    }
    for j in 0..np {
        line_scale = line_scale.max(rhs_norm(&rhs.eval(&point(&grid, 0, j), 0, j)?));
    }
    let mut total_iterations = 0;
    let mut max_iterations = 0;
    let tol = F::lit(1e-13);

    for j in 0..np - 1 {
        let mut next_col: Vec<Vec<CMat<F>>> = Vec::with_capacity(nm);
        next_col.push(rhs.eval(&point(&grid, 0, j + 1), 0, j + 1)?);
        for i in 0..nm - 1 {
            let at = GridPoint {
                i_minus: i + 1,
                i_plus: j + 1,
            };
            let base = point(&grid, i, j + 1);
            let known: Vec<CMat<F>> = (0..ind)
                .map(|a| &(&rhs_col[i][a] + &rhs_col[i + 1][a]) + &next_col[i][a])
                .collect();
            // Predictor: the unknown corner reuses the `(i+1, j)` value.
            let mut corner_rhs = rhs_col[i + 1].clone();
            let mut betas = Vec::new();
            let mut new_w = Vec::new();
            let mut converged = false;
            let mut iterations = 0;
            let mut stiff_block = 1;
            while iterations < MAX_ITERATIONS {
                iterations += 1;
                new_w = (0..ind)
                    .map(|a| {
                        let mean = (&known[a] + &corner_rhs[a]).scale_real(quarter);
                        let x = &w[i][a] + &mean.scale_real(hp);
                        if Some(a + 1) == system.central() {
                            project_central(system, x)
                        } else {
                            x
                        }
                    })
                    .collect();
                betas = (0..ind)
                    .map(|a| Ok(&base[a] * &expm(&new_w[a].scale_real(hm))?))
                    .collect::<Result<Vec<_>>>()?;
                for (a, b) in betas.iter().enumerate() {
                    check_sample(b, a + 1, at)?;
                }
                let fresh = rhs.eval(&betas, i + 1, j + 1)?;
                let (change, block) = fresh
                    .iter()
                    .zip(&corner_rhs)
                    .map(|(x, y)| (x - y).max_norm() / F::one().max(x.max_norm()))
                    .enumerate()
                    .fold(
                        (F::zero(), 1),
                        |acc, (a, d)| if d > acc.0 { (d, a + 1) } else { acc },
                    );
                stiff_block = block;
                corner_rhs = fresh;
                if change * hp * hm <= tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                let scale = rhs_norm(&corner_rhs);
                if scale > F::lit(BLOW_UP_GROWTH) * line_scale.max(F::one()) {
                    return Err(Error::BlowUp {
                        at,
                        block: stiff_block,
                        detail: format!(
                            "right-hand side grew to {scale:.3e} against {line_scale:.3e} on the data lines; fixed point stalled after {iterations} iterations"
                        ),
                    });
                }
                return Err(Error::Convergence { at, iterations });
            }
            total_iterations += iterations;
            max_iterations = max_iterations.max(iterations);
            for (a, b) in betas.into_iter().enumerate() {
                grid[a][spec.idx(i + 1, j + 1)] = b;
            }
            w[i] = new_w;
            next_col.push(corner_rhs);
        }
        rhs_col = next_col;
    }

    let field = GridField::new(spec, grid)?;
    let report = block_residuals(system, &field, c, Stencil::Centered2)?;
    let cells = (nm - 1) * (np - 1);
    Ok(SolveResult {
        field,
        report,
        scheme: SchemeInfo {
            name: "box-midpoint",
            h_minus: hm,
            h_plus: hp,
            cells,
            total_iterations,
            max_iterations,
        },
    })
}

/// `β₁ = z⁺ − z⁻`, `β₂ = (z⁺ − z⁻)⁻¹`: the Liouville solution on `k = (1, 1)`.
pub struct LiouvilleSource;

impl<F: Real> FieldSource<F> for LiouvilleSource {
    fn betas(&self, z_minus: F, z_plus: F) -> Result<Vec<CMat<F>>> {
        let d = z_plus - z_minus;
        if d <= F::zero() {
            return Err(Error::Domain(format!("z+ - z- = {d} is not positive")));
        }
        let one = |x: F| CMat::scalar(Complex::new(x, F::zero()));
        Ok(vec![one(d), one(F::one() / d)])
    }
}

fn check_liouville_domain<F: Real>(spec: &GridSpec<F>) -> Result<()> {
    if spec.z_plus0 - spec.z_minus_end() <= F::zero() {
        return Err(Error::Domain(format!(
            "grid meets the diagonal z+ = z- (min z+ - z- = {})",
            spec.z_plus0 - spec.z_minus_end()
        )));
    }
    Ok(())
}

/// The Liouville oracle for `A₁ k = (1, 1)` with `C₊₁ = 1`, `C₋₁ = −1`.
pub fn liouville_field<F: Real>(spec: &GridSpec<F>) -> Result<(GridField<F>, CBlocks<F>)> {
    let system = crate::toda::build_system(crate::liealg::SeriesTag::a(1)?, &[1, 1])?;
    liouville_field_for(&system, spec)
}

/// The Liouville oracle for `A₁` or `C₁` with `k = (1, 1)`; for `C₁` only `β₁`
/// is independent.
pub fn liouville_field_for<F: Real>(
    system: &TodaSystem,
    spec: &GridSpec<F>,
) -> Result<(GridField<F>, CBlocks<F>)> {
    if system.sizes() != [1, 1] || !matches!(system.tag.series, Series::A | Series::C) {
        return Err(Error::Blocks(format!(
            "the Liouville oracle needs A1 or C1 with k=(1,1), got {system}"
        )));
    }
    check_liouville_domain(spec)?;
    let ind = system.independent_count();
    let field = GridField::from_fn(*spec, |zm, zp| {
        let mut b = LiouvilleSource.betas(zm, zp).expect("domain checked");
        b.truncate(ind);
        b
    })?;
    let one = CMat::scalar(Complex::new(F::one(), F::zero()));
    let c = CBlocks::new(system, vec![-&one], vec![one])?;
    Ok((field, c))
}

/// One grid of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergencePoint<F: Real> {
    pub h: F,
    pub error: F,
    /// `log₂(e_prev / e)` against the next coarser grid.
    pub local_order: Option<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy<F: Real> {
    pub points: Vec<ConvergencePoint<F>>,
    /// Least-squares slope of `log e` against `log h`.
    pub order: F,
}

/// What marched fields are compared with.
pub enum Reference<'a, F: Real> {
    Exact(&'a dyn FieldSource<F>),
    /// The finest grid, sampled at the coarse points; the finest grid itself is not scored.
    Finest,
}

/// Least-squares slope of `log e` against `log h`.
pub fn fit_order<F: Real>(samples: &[(F, F)]) -> Result<F> {
    if samples.len() < 2 {
        return Err(Error::TooFewGrids(samples.len()));
    }
    let pts: Vec<(F, F)> = samples.iter().map(|&(h, e)| (h.ln(), e.ln())).collect();
    if pts.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Domain(
            "errors and spacings must be positive to fit an order".into(),
        ));
    }
    let n = F::from_usize(pts.len()).expect("count");
    let mx = pts.iter().fold(F::zero(), |s, p| s + p.0) / n;
    let my = pts.iter().fold(F::zero(), |s, p| s + p.1) / n;
    let sxy = pts
        .iter()
        .fold(F::zero(), |s, p| s + (p.0 - mx) * (p.1 - my));
    let sxx = pts
        .iter()
        .fold(F::zero(), |s, p| s + (p.0 - mx) * (p.0 - mx));
    if sxx <= F::zero() {
        return Err(Error::NoRefinement("all spacings coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Checks that every grid halves both spacings of its predecessor over the same box.
pub fn check_refinement<F: Real>(grids: &[GridSpec<F>]) -> Result<()> {
    if grids.len() < 3 {
        return Err(Error::TooFewGrids(grids.len()));
    }
    let close = |a: F, b: F| (a - b).abs() <= F::lit(1e-9) * F::one().max(a.abs());
    for (k, pair) in grids.windows(2).enumerate() {
        let (g, f) = (&pair[0], &pair[1]);
        let ok = close(g.h_minus, f.h_minus + f.h_minus)
            && close(g.h_plus, f.h_plus + f.h_plus)
            && f.n_minus == 2 * g.n_minus - 1
            && f.n_plus == 2 * g.n_plus - 1
            && close(g.z_minus0, f.z_minus0)
            && close(g.z_plus0, f.z_plus0);
        if !ok {
            return Err(Error::NoRefinement(format!(
                "grid {} is not a 2x refinement of grid {k}",
                k + 1
            )));
        }
    }
    Ok(())
}

fn max_error<F: Real>(
    field: &GridField<F>,
    reference: impl Fn(usize, usize) -> Result<Vec<CMat<F>>>,
) -> Result<F> {
    let spec = field.spec;
    let mut worst = F::zero();
    for i in 0..spec.n_minus {
        for j in 0..spec.n_plus {
            let want = reference(i, j)?;
            for (a, w) in want.iter().take(field.block_count()).enumerate() {
                worst = worst.max((field.beta(a + 1, i, j) - w).max_norm());
            }
        }
    }
    Ok(worst)
}

/// Marches `data(grid)` on each grid and fits the order of the max-norm error.
pub fn convergence_study<F: Real>(
    system: &TodaSystem,
    c: &CBlocks<F>,
    data: impl Fn(&GridSpec<F>) -> Result<CharacteristicData<F>>,
    grids: &[GridSpec<F>],
    reference: Reference<'_, F>,
) -> Result<ConvergenceStudy<F>> {
    check_refinement(grids)?;
    let c = CField::Constant(c.clone());
    let fields = grids
        .iter()
        .map(|g| march(system, &c, &data(g)?).map(|r| r.field))
        .collect::<Result<Vec<_>>>()?;
    let mut samples = Vec::new();
    match reference {
        Reference::Exact(source) => {
            for f in &fields {
                let s = f.spec;
                samples.push((
                    s.h_minus,
                    max_error(f, |i, j| source.betas(s.z_minus(i), s.z_plus(j)))?,
                ));
            }
        }
        Reference::Finest => {
            let finest = fields.last().expect("three grids");
            for (k, f) in fields[..fields.len() - 1].iter().enumerate() {
                let stride = 1 << (fields.len() - 1 - k);
                samples.push((
                    f.spec.h_minus,
                    max_error(f, |i, j| Ok(finest.point(i * stride, j * stride)))?,
                ));
            }
        }
    }
    let order = fit_order(&samples)?;
    let points = samples
        .iter()
        .enumerate()
        .map(|(k, &(h, error))| ConvergencePoint {
            h,
            error,
            local_order: (k > 0).then(|| (samples[k - 1].1 / error).ln() / F::LN_2()),
        })
        .collect();
    Ok(ConvergenceStudy { points, order })
}

/// Grids on `zm × zp` with `n, 2n − 1, 4n − 3, …` samples per side.
pub fn refinement_sequence<F: Real>(
    zm: (F, F),
    zp: (F, F),
    coarsest: usize,
    count: usize,
) -> Result<Vec<GridSpec<F>>> {
    let mut n = coarsest;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(GridSpec::on_box(zm, zp, n, n)?);
        n = 2 * n - 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::SeriesTag;
    use crate::toda::build_system;
    use crate::{CMatrix, C64};

    fn unit_box(n: usize) -> GridSpec<f64> {
        GridSpec::on_box((0.0, 1.0), (2.0, 3.0), n, n).unwrap()
    }

    #[test]
    fn liouville_rejects_diagonal() {
        let spec = GridSpec::on_box((0.0, 1.0), (0.5, 1.5), 9, 9).unwrap();
        assert!(matches!(liouville_field(&spec), Err(Error::Domain(_))));
        assert!(liouville_field(&unit_box(9)).is_ok());
    }

    #[test]
    fn march_reproduces_boundary_lines() {
        let spec = unit_box(9);
        let (field, c) = liouville_field(&spec).unwrap();
        let data = CharacteristicData::from_field(&field).unwrap();
        let sys = build_system(SeriesTag::a(1).unwrap(), &[1, 1]).unwrap();
        let out = march(&sys, &c.into(), &data).unwrap();
        for a in 1..=2 {
            for i in 0..9 {
                assert_eq!(out.field.beta(a, i, 0), field.beta(a, i, 0));
                assert_eq!(out.field.beta(a, 0, i), field.beta(a, 0, i));
            }
        }
    }

    #[test]
    fn liouville_march_is_second_order() {
        let sys = build_system(SeriesTag::a(1).unwrap(), &[1, 1]).unwrap();
        let (_, c) = liouville_field(&unit_box(5)).unwrap();
        let grids = refinement_sequence((0.0, 1.0), (2.0, 3.0), 17, 3).unwrap();
        let study = convergence_study(
            &sys,
            &c,
            |g| CharacteristicData::from_source(*g, &LiouvilleSource),
            &grids,
            Reference::Exact(&LiouvilleSource),
        )
        .unwrap();
        assert!((1.8..=2.2).contains(&study.order), "{study:?}");
        assert!(study.points[2].error <= 5e-4);
        for p in &study.points[1..] {
            let ratio = 2f64.powf(p.local_order.unwrap());
            assert!((3.2..=5.0).contains(&ratio), "{ratio}");
        }
    }

    #[test]
    fn study_rejects_bad_grids() {
        let sys = build_system(SeriesTag::a(1).unwrap(), &[1, 1]).unwrap();
        let (_, c) = liouville_field(&unit_box(5)).unwrap();
        let gen = |g: &GridSpec<f64>| CharacteristicData::from_source(*g, &LiouvilleSource);
        let two = refinement_sequence((0.0, 1.0), (2.0, 3.0), 9, 2).unwrap();
        assert!(matches!(
            convergence_study(&sys, &c, gen, &two, Reference::Finest),
            Err(Error::TooFewGrids(2))
        ));
        let same = vec![unit_box(9); 3];
        assert!(matches!(
            convergence_study(&sys, &c, gen, &same, Reference::Finest),
            Err(Error::NoRefinement(_))
        ));
    }

    #[test]
    fn vanishing_c_plus_extends_left_line() {
        let sys = build_system(SeriesTag::a(2).unwrap(), &[1, 2]).unwrap();
        let spec = unit_box(11);
        let zero_p = CMatrix::zeros(1, 2);
        let cm = CMatrix::from_fn(2, 1, |i, _| C64::new(1.0 + i as f64, 0.5));
        let c = CBlocks::new(&sys, vec![cm], vec![zero_p]).unwrap();
        let left: Vec<Vec<CMatrix>> = vec![
            (0..11)
                .map(|i| CMatrix::scalar(C64::new(1.0 + 0.1 * i as f64, 0.2)))
                .collect(),
            (0..11)
                .map(|i| {
                    let t = 0.1 * i as f64;
                    CMatrix::from_fn(2, 2, |r, s| {
                        C64::new(if r == s { 2.0 } else { t }, t * r as f64)
                    })
                })
                .collect(),
        ];
        let bottom = vec![vec![left[0][0].clone(); 11], vec![left[1][0].clone(); 11]];
        let data = CharacteristicData::new(spec, left.clone(), bottom).unwrap();
        let out = march(&sys, &c.into(), &data).unwrap();
        for a in 1..=2 {
            for i in 0..11 {
                for j in 0..11 {
                    assert!((out.field.beta(a, i, j) - &left[a - 1][i]).max_norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn symplectic_liouville_converges() {
        let sys = build_system(SeriesTag::c(1).unwrap(), &[1, 1]).unwrap();
        let (_, c) = liouville_field_for(&sys, &unit_box(5)).unwrap();
        let grids = refinement_sequence((0.0, 1.0), (2.0, 3.0), 17, 3).unwrap();
        let gen = |g: &GridSpec<f64>| {
            let (f, _) = liouville_field_for(&sys, g)?;
            CharacteristicData::from_field(&f)
        };
        let study =
            convergence_study(&sys, &c, gen, &grids, Reference::Exact(&LiouvilleSource)).unwrap();
        assert!((1.8..=2.2).contains(&study.order), "{study:?}");
    }

    #[test]
    fn corner_mismatch_is_rejected() {
        let spec = unit_box(5);
        let one = CMatrix::scalar(C64::new(1.0, 0.0));
        let two = CMatrix::scalar(C64::new(2.0, 0.0));
        assert!(
            CharacteristicData::new(spec, vec![vec![one.clone(); 5]], vec![vec![two; 5]]).is_err()
        );
        assert!(
            CharacteristicData::new(spec, vec![vec![one.clone(); 5]], vec![vec![one; 5]]).is_ok()
        );
    }
}
