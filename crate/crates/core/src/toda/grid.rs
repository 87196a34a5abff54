use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::CMat;

use super::{CBlocks, TodaSystem};

/// How the two real grid coordinates are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Geometry {
    /// Independent real light-cone coordinates.
    #[default]
    Real,
    /// `z⁺` read as the complex conjugate of `z⁻`; the sampled calculus is unchanged.
    Complex,
}

/// Uniform rectangular grid in `(z⁻, z⁺)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<F: Real> {
    pub z_minus0: F,
    pub z_plus0: F,
    pub h_minus: F,
    pub h_plus: F,
    pub n_minus: usize,
    pub n_plus: usize,
    pub geometry: Geometry,
}

impl<F: Real> GridSpec<F> {
    pub fn new(
        z_minus0: F,
        z_plus0: F,
        h_minus: F,
        h_plus: F,
        n_minus: usize,
        n_plus: usize,
    ) -> Result<Self> {
        if n_minus < 3 || n_plus < 3 {
            return Err(Error::Shape(format!(
                "grid needs at least 3x3 samples, got {n_minus}x{n_plus}"
            )));
        }
        let ok = |h: F| h.is_finite() && h > F::zero();
        if !ok(h_minus) || !ok(h_plus) || !z_minus0.is_finite() || !z_plus0.is_finite() {
            return Err(Error::Domain(
                "grid spacings must be positive and finite".into(),
            ));
        }
        Ok(Self {
            z_minus0,
            z_plus0,
            h_minus,
            h_plus,
            n_minus,
            n_plus,
            geometry: Geometry::Real,
        })
    }

    /// Grid spanning `[zm.0, zm.1] × [zp.0, zp.1]` with the given sample counts.
    pub fn on_box(zm: (F, F), zp: (F, F), n_minus: usize, n_plus: usize) -> Result<Self> {
        if n_minus < 3 || n_plus < 3 {
            return Err(Error::Shape(format!(
                "grid needs at least 3x3 samples, got {n_minus}x{n_plus}"
            )));
        }
        let hm = (zm.1 - zm.0) / F::from_usize(n_minus - 1).expect("count");
        let hp = (zp.1 - zp.0) / F::from_usize(n_plus - 1).expect("count");
        Self::new(zm.0, zp.0, hm, hp, n_minus, n_plus)
    }

    pub fn with_geometry(mut self, geometry: Geometry) -> Self {
        self.geometry = geometry;
        self
    }

    pub fn z_minus(&self, i: usize) -> F {
        self.z_minus0 + self.h_minus * F::from_usize(i).expect("index")
    }

    pub fn z_plus(&self, j: usize) -> F {
        self.z_plus0 + self.h_plus * F::from_usize(j).expect("index")
    }

    pub fn z_minus_end(&self) -> F {
        self.z_minus(self.n_minus - 1)
    }

    pub fn z_plus_end(&self) -> F {
        self.z_plus(self.n_plus - 1)
    }

    pub fn len(&self) -> usize {
        self.n_minus * self.n_plus
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major sample index, `z⁻` slow and `z⁺` fast.
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_plus + j
    }

    pub fn interior(&self) -> (usize, usize) {
        (self.n_minus - 2, self.n_plus - 2)
    }
}

/// Samples of the independent `β_a` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<F: Real> {
    pub spec: GridSpec<F>,
    betas: Vec<Vec<CMat<F>>>,
}

impl<F: Real> GridField<F> {
    pub fn new(spec: GridSpec<F>, betas: Vec<Vec<CMat<F>>>) -> Result<Self> {
        for (a, samples) in betas.iter().enumerate() {
            if samples.len() != spec.len() {
                return Err(Error::Shape(format!(
                    "block {} has {} samples, grid has {}",
                    a + 1,
                    samples.len(),
                    spec.len()
                )));
            }
            let shape = samples[0].shape();
            if shape.0 != shape.1 || samples.iter().any(|m| m.shape() != shape) {
                return Err(Error::Shape(format!(
                    "block {} samples must share one square shape",
                    a + 1
                )));
            }
        }
        Ok(Self { spec, betas })
    }

    /// Samples `f(z⁻, z⁺)` returning the independent blocks.
    pub fn from_fn(spec: GridSpec<F>, mut f: impl FnMut(F, F) -> Vec<CMat<F>>) -> Result<Self> {
        let mut betas: Vec<Vec<CMat<F>>> = Vec::new();
        for i in 0..spec.n_minus {
            for j in 0..spec.n_plus {
                let sample = f(spec.z_minus(i), spec.z_plus(j));
                if betas.is_empty() {
                    betas = vec![Vec::with_capacity(spec.len()); sample.len()];
                }
                if sample.len() != betas.len() {
                    return Err(Error::Shape(
                        "sample block count varies over the grid".into(),
                    ));
                }
                for (dst, m) in betas.iter_mut().zip(sample) {
                    dst.push(m);
                }
            }
        }
        Self::new(spec, betas)
    }

    pub fn block_count(&self) -> usize {
        self.betas.len()
    }

    /// `β_a` at `(i, j)`, `a` 1-based.
    pub fn beta(&self, a: usize, i: usize, j: usize) -> &CMat<F> {
        &self.betas[a - 1][self.spec.idx(i, j)]
    }

    pub fn block_samples(&self, a: usize) -> &[CMat<F>] {
        &self.betas[a - 1]
    }

    pub fn into_blocks(self) -> Vec<Vec<CMat<F>>> {
        self.betas
    }

    /// Independent blocks at one point.
    pub fn point(&self, i: usize, j: usize) -> Vec<CMat<F>> {
        let k = self.spec.idx(i, j);
        self.betas.iter().map(|b| b[k].clone()).collect()
    }

    /// Block sizes agree with `system`.
    pub fn check(&self, system: &TodaSystem) -> Result<()> {
        let ind = system.independent_count();
        if self.betas.len() != ind {
            return Err(Error::Shape(format!(
                "{system} has {ind} independent blocks, field has {}",
                self.betas.len()
            )));
        }
        for a in 1..=ind {
            let k = system.k(a);
            if self.betas[a - 1][0].shape() != (k, k) {
                return Err(Error::Shape(format!(
                    "block {a} must be {k}x{k}, field has {}x{}",
                    self.betas[a - 1][0].rows(),
                    self.betas[a - 1][0].cols()
                )));
            }
        }
        Ok(())
    }

    /// Largest 1-norm condition number over all samples of all blocks.
    pub fn max_condition(&self) -> F {
        self.betas
            .iter()
            .flat_map(|b| b.iter())
            .map(|m| m.condition_number())
            .fold(F::zero(), F::max)
    }
}

/// `c₊`, `c₋` data: constant, or chiral (`c₋` along `z⁻`, `c₊` along `z⁺`).
#[derive(Debug, Clone, PartialEq)]
pub enum CField<F: Real> {
    Constant(CBlocks<F>),
    /// `minus[i]` supplies the `C₋` blocks at `z⁻_i`; `plus[j]` the `C₊` blocks at `z⁺_j`.
    Chiral {
        minus: Vec<CBlocks<F>>,
        plus: Vec<CBlocks<F>>,
    },
}

impl<F: Real> From<CBlocks<F>> for CField<F> {
    fn from(c: CBlocks<F>) -> Self {
        CField::Constant(c)
    }
}

impl<F: Real> CField<F> {
    pub fn minus_at(&self, i: usize) -> &CBlocks<F> {
        match self {
            CField::Constant(c) => c,
            CField::Chiral { minus, .. } => &minus[i],
        }
    }

    pub fn plus_at(&self, j: usize) -> &CBlocks<F> {
        match self {
            CField::Constant(c) => c,
            CField::Chiral { plus, .. } => &plus[j],
        }
    }

    pub fn as_constant(&self) -> Option<&CBlocks<F>> {
        match self {
            CField::Constant(c) => Some(c),
            CField::Chiral { .. } => None,
        }
    }

    pub(crate) fn check(&self, spec: &GridSpec<F>) -> Result<()> {
        if let CField::Chiral { minus, plus } = self {
            if minus.len() != spec.n_minus || plus.len() != spec.n_plus {
                return Err(Error::Shape(format!(
                    "chiral c lines have {}x{} samples, grid is {}x{}",
                    minus.len(),
                    plus.len(),
                    spec.n_minus,
                    spec.n_plus
                )));
            }
        }
        Ok(())
    }
}
