//! Gauge `γ' = ξ₊⁻¹γξ₋` and conformal reparametrizations of sampled fields.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::rat_to_float;
use crate::matfn::real_power;
use crate::scalar::Real;
use crate::CMat;

use super::{check_central, complete_betas, CBlocks, CField, GridField, GridSpec, TodaSystem};

/// Evaluates the independent blocks of a field at arbitrary coordinates.
pub trait FieldSource<F: Real>: Sync {
    fn betas(&self, z_minus: F, z_plus: F) -> Result<Vec<CMat<F>>>;
}

/// A field given by a closure.
pub struct ClosureSource<G>(pub G);

impl<F: Real, G> FieldSource<F> for ClosureSource<G>
where
    G: Fn(F, F) -> Result<Vec<CMat<F>>> + Sync,
{
    fn betas(&self, z_minus: F, z_plus: F) -> Result<Vec<CMat<F>>> {
        (self.0)(z_minus, z_plus)
    }
}

/// Tensor-product cubic Lagrange interpolation of a sampled field.
pub struct InterpolatedSource<'a, F: Real> {
    field: &'a GridField<F>,
}

impl<'a, F: Real> InterpolatedSource<'a, F> {
    pub fn new(field: &'a GridField<F>) -> Result<Self> {
        if field.spec.n_minus < 4 || field.spec.n_plus < 4 {
            return Err(Error::Shape(
                "cubic interpolation needs at least 4x4 samples".into(),
            ));
        }
        Ok(Self { field })
    }
}

/// Base index and the four Lagrange weights for coordinate `z`.
fn cubic_stencil<F: Real>(z: F, z0: F, h: F, n: usize, axis: &str) -> Result<(usize, [F; 4])> {
    let t = (z - z0) / h;
    let last = F::from_usize(n - 1).expect("count");
    let slack = F::lit(1e-9);
    if !t.is_finite() || t < -slack || t > last + slack {
        return Err(Error::Domain(format!(
            "{axis} = {z} escapes the sampled domain"
        )));
    }
    let base = t
        .floor()
        .to_usize()
        .unwrap_or(0)
        .saturating_sub(1)
        .min(n - 4);
    let x = t - F::from_usize(base).expect("index");
    let nodes = [F::zero(), F::one(), F::lit(2.0), F::lit(3.0)];
    let mut w = [F::one(); 4];
    for (k, wk) in w.iter_mut().enumerate() {
        for (l, &node) in nodes.iter().enumerate() {
            if l != k {
                *wk = *wk * (x - node) / (nodes[k] - node);
            }
        }
    }
    Ok((base, w))
}

impl<F: Real> FieldSource<F> for InterpolatedSource<'_, F> {
    fn betas(&self, z_minus: F, z_plus: F) -> Result<Vec<CMat<F>>> {
        let spec = &self.field.spec;
        let (bi, wi) = cubic_stencil(z_minus, spec.z_minus0, spec.h_minus, spec.n_minus, "z-")?;
        let (bj, wj) = cubic_stencil(z_plus, spec.z_plus0, spec.h_plus, spec.n_plus, "z+")?;
        Ok((1..=self.field.block_count())
            .map(|a| {
                let k = self.field.beta(a, 0, 0).rows();
                let mut acc = CMat::<F>::zeros(k, k);
                for (di, &w1) in wi.iter().enumerate() {
                    for (dj, &w2) in wj.iter().enumerate() {
                        acc = &acc + &self.field.beta(a, bi + di, bj + dj).scale_real(w1 * w2);
                    }
                }
                acc
            })
            .collect())
    }
}

type ScalarFn<F> = Arc<dyn Fn(F) -> F + Send + Sync>;

/// A monotone map of one light-cone coordinate with its derivative.
#[derive(Clone)]
pub struct Reparametrization<F: Real> {
    map: ScalarFn<F>,
    derivative: ScalarFn<F>,
}

impl<F: Real> Reparametrization<F> {
    pub fn new(
        map: impl Fn(F) -> F + Send + Sync + 'static,
        derivative: impl Fn(F) -> F + Send + Sync + 'static,
    ) -> Self {
        Self {
            map: Arc::new(map),
            derivative: Arc::new(derivative),
        }
    }

    pub fn identity() -> Self {
        Self::new(|z| z, |_| F::one())
    }

    pub fn translation(shift: F) -> Self {
        Self::new(move |z| z + shift, |_| F::one())
    }

    pub fn scaling(factor: F) -> Self {
        Self::new(move |z| z * factor, move |_| factor)
    }

    pub fn map(&self, z: F) -> F {
        (self.map)(z)
    }

    pub fn derivative(&self, z: F) -> F {
        (self.derivative)(z)
    }
}

/// `γ'(z) = λ₊^{−q/l} γ(F(z)) λ₋^{−q/l}` with `λ_± = ∂_±F^±`, on the grid `spec`.
pub fn conformal_transform<F: Real>(
    system: &TodaSystem,
    source: &dyn FieldSource<F>,
    spec: &GridSpec<F>,
    f_minus: &Reparametrization<F>,
    f_plus: &Reparametrization<F>,
) -> Result<GridField<F>> {
    let check = |name: &str, f: &Reparametrization<F>, z: F| -> Result<F> {
        let d = f.derivative(z);
        if !(d.is_finite() && d > F::zero()) {
            return Err(Error::Domain(format!(
                "{name} is not increasing at {z} (derivative {d})"
            )));
        }
        Ok(d)
    };
    let lam_minus: Vec<F> = (0..spec.n_minus)
        .map(|i| check("F-", f_minus, spec.z_minus(i)))
        .collect::<Result<_>>()?;
    let lam_plus: Vec<F> = (0..spec.n_plus)
        .map(|j| check("F+", f_plus, spec.z_plus(j)))
        .collect::<Result<_>>()?;
    let l = F::from_u64(system.l).expect("small integer");
    let rho: Vec<F> = system
        .grading_operator()
        .rho
        .iter()
        .map(|r| F::lit(rat_to_float(r)) / l)
        .collect();
    let ind = system.independent_count();

    let samples: Vec<Vec<CMat<F>>> = (0..spec.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / spec.n_plus, k % spec.n_plus);
            let betas = source.betas(f_minus.map(spec.z_minus(i)), f_plus.map(spec.z_plus(j)))?;
            if betas.len() != ind {
                return Err(Error::Shape(format!(
                    "source returned {} blocks, expected {ind}",
                    betas.len()
                )));
            }
            Ok(betas
                .iter()
                .enumerate()
                .map(|(a, b)| {
                    let factor = real_power(lam_plus[j] * lam_minus[i], -rho[a]);
                    b.scale(&factor)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut blocks: Vec<Vec<CMat<F>>> = vec![Vec::with_capacity(spec.len()); ind];
    for point in samples {
        for (dst, m) in blocks.iter_mut().zip(point) {
            dst.push(m);
        }
    }
    let out = GridField::new(*spec, blocks)?;
    out.check(system)?;
    Ok(out)
}

/// `ξ₋` sampled along `z⁻` and `ξ₊` along `z⁺`, as independent blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeLines<F: Real> {
    pub minus: Vec<Vec<CMat<F>>>,
    pub plus: Vec<Vec<CMat<F>>>,
}

impl<F: Real> GaugeLines<F> {
    /// The same `ξ_±` at every sample.
    pub fn constant(spec: &GridSpec<F>, xi_minus: Vec<CMat<F>>, xi_plus: Vec<CMat<F>>) -> Self {
        Self {
            minus: vec![xi_minus; spec.n_minus],
            plus: vec![xi_plus; spec.n_plus],
        }
    }

    fn is_constant(&self) -> bool {
        self.minus.windows(2).all(|w| w[0] == w[1]) && self.plus.windows(2).all(|w| w[0] == w[1])
    }
}

struct CompletedLine<F: Real> {
    all: Vec<CMat<F>>,
    inv: Vec<CMat<F>>,
}

fn complete_line<F: Real>(
    system: &TodaSystem,
    xi: &[CMat<F>],
    what: &str,
) -> Result<CompletedLine<F>> {
    let all = complete_betas(system, xi).map_err(|e| match e {
        Error::Singular(m) => Error::Singular(format!("{what}: {m}")),
        other => other,
    })?;
    check_central(system, xi, F::lit(1e-10))?;
    let inv = all
        .iter()
        .map(|m| {
            m.inverse()
                .map_err(|e| Error::Singular(format!("{what}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompletedLine { all, inv })
}

/// Applies `γ' = ξ₊⁻¹γξ₋`, `c'_± = ξ_±⁻¹c_±ξ_±`.
pub fn gauge_transform<F: Real>(
    system: &TodaSystem,
    field: &GridField<F>,
    c: &CField<F>,
    xi: &GaugeLines<F>,
) -> Result<(GridField<F>, CField<F>)> {
    field.check(system)?;
    c.check(&field.spec)?;
    let spec = field.spec;
    if xi.minus.len() != spec.n_minus || xi.plus.len() != spec.n_plus {
        return Err(Error::Shape(format!(
            "gauge lines have {}x{} samples, grid is {}x{}",
            xi.minus.len(),
            xi.plus.len(),
            spec.n_minus,
            spec.n_plus
        )));
    }
    let minus: Vec<CompletedLine<F>> = xi
        .minus
        .iter()
        .enumerate()
        .map(|(i, x)| complete_line(system, x, &format!("xi- at i-={i}")))
        .collect::<Result<_>>()?;
    let plus: Vec<CompletedLine<F>> = xi
        .plus
        .iter()
        .enumerate()
        .map(|(j, x)| complete_line(system, x, &format!("xi+ at i+={j}")))
        .collect::<Result<_>>()?;

    let ind = system.independent_count();
    let mut blocks: Vec<Vec<CMat<F>>> = vec![Vec::with_capacity(spec.len()); ind];
    for i in 0..spec.n_minus {
        for j in 0..spec.n_plus {
            for a in 1..=ind {
                let b = &(&plus[j].inv[a - 1] * field.beta(a, i, j)) * &minus[i].all[a - 1];
                blocks[a - 1].push(b);
            }
        }
    }
    let new_field = GridField::new(spec, blocks)?;

    let p = system.p();
    let transform_minus = |line: &CompletedLine<F>, cb: &CBlocks<F>| -> CBlocks<F> {
        let m = (1..p)
            .map(|a| &(&line.inv[a] * cb.minus(a)) * &line.all[a - 1])
            .collect();
        CBlocks {
            minus: m,
            plus: cb.plus.clone(),
        }
    };
    let transform_plus = |line: &CompletedLine<F>, cb: &CBlocks<F>| -> CBlocks<F> {
        let pl = (1..p)
            .map(|a| &(&line.inv[a - 1] * cb.plus(a)) * &line.all[a])
            .collect();
        CBlocks {
            minus: cb.minus.clone(),
            plus: pl,
        }
    };
    let new_c = match c {
        CField::Constant(cb) if xi.is_constant() => {
            let half = transform_minus(&minus[0], cb);
            CField::Constant(transform_plus(&plus[0], &half))
        }
        _ => CField::Chiral {
            minus: (0..spec.n_minus)
                .map(|i| transform_minus(&minus[i], c.minus_at(i)))
                .collect(),
            plus: (0..spec.n_plus)
                .map(|j| transform_plus(&plus[j], c.plus_at(j)))
                .collect(),
        },
    };
    Ok((new_field, new_c))
}
