#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toda_core::liealg::{symplectic_form, SeriesTag};
use toda_core::matfn::expm;
use toda_core::toda::{build_system, CBlocks, ConstraintSet, GridField, GridSpec, TodaSystem};
use toda_core::{CMatrix, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
    })
}

/// Projects onto `so` (T-antisymmetric) or `sp` (`J̃xᵗJ̃ = x`).
pub fn to_algebra(system: &TodaSystem, x: &CMatrix) -> CMatrix {
    match system.constraint {
        ConstraintSet::COddP => {
            let j = symplectic_form::<C64>(x.rows() / 2);
            (x + &(&(&j * &x.transpose()) * &j)).scale_real(0.5)
        }
        _ => (x - &x.t_transpose()).scale_real(0.5),
    }
}

/// One constraint class per entry: A-none, BD-evenp, BD-oddp, C-evenp, C-oddp.
pub fn class_systems() -> Vec<TodaSystem> {
    vec![
        build_system(SeriesTag::a(3).unwrap(), &[1, 2, 1]).unwrap(),
        build_system(SeriesTag::d(4).unwrap(), &[1, 3, 3, 1]).unwrap(),
        build_system(SeriesTag::b(2).unwrap(), &[1, 3, 1]).unwrap(),
        build_system(SeriesTag::c(2).unwrap(), &[1, 1, 1, 1]).unwrap(),
        build_system(SeriesTag::c(3).unwrap(), &[1, 4, 1]).unwrap(),
    ]
}

/// Random constraint-respecting `C_{±a}`, independent half only.
pub fn random_c(rng: &mut impl Rng, system: &TodaSystem) -> CBlocks<f64> {
    let ind = system.c_independent_count();
    let mut minus = Vec::new();
    let mut plus = Vec::new();
    for a in 1..=ind {
        let (ka, kb) = (system.k(a), system.k(a + 1));
        let mut m = random_matrix(rng, kb, ka, 1.0);
        let mut p = random_matrix(rng, ka, kb, 1.0);
        if system.is_constrained() && 2 * a == system.p() {
            let sign = if system.constraint == ConstraintSet::CEvenP {
                1.0
            } else {
                -1.0
            };
            m = (&m + &m.t_transpose().scale_real(sign)).scale_real(0.5);
            p = (&p + &p.t_transpose().scale_real(sign)).scale_real(0.5);
        }
        minus.push(m);
        plus.push(p);
    }
    CBlocks::new(system, minus, plus).unwrap()
}

/// Smooth `z ↦ I·d + Σ A_k f_k(z)` coefficients for one block.
struct SmoothBlock {
    base: CMatrix,
    terms: Vec<(CMatrix, f64, f64, f64)>,
}

impl SmoothBlock {
    fn new(rng: &mut impl Rng, k: usize, amplitude: f64) -> Self {
        let base = &CMatrix::identity(k).scale_real(2.0) + &random_matrix(rng, k, k, 0.2);
        let terms = (0..3)
            .map(|_| {
                (
                    random_matrix(rng, k, k, amplitude),
                    rng.gen_range(0.5..2.0),
                    rng.gen_range(0.5..2.0),
                    rng.gen_range(0.0..6.0),
                )
            })
            .collect();
        Self { base, terms }
    }

    fn eval(&self, zm: f64, zp: f64) -> CMatrix {
        let mut acc = self.base.clone();
        for (m, wm, wp, phase) in &self.terms {
            acc = &acc + &m.scale_real((wm * zm + wp * zp + phase).sin());
        }
        acc
    }
}

/// A random smooth field respecting the constraints; the central block is
/// `exp` of an algebra-valued smooth function.
pub fn random_field(
    rng: &mut impl Rng,
    system: &TodaSystem,
    spec: &GridSpec<f64>,
    amplitude: f64,
) -> GridField<f64> {
    let ind = system.independent_count();
    let blocks: Vec<SmoothBlock> = (1..=ind)
        .map(|a| SmoothBlock::new(rng, system.k(a), amplitude))
        .collect();
    let central = system.central();
    GridField::from_fn(*spec, |zm, zp| {
        blocks
            .iter()
            .enumerate()
            .map(|(idx, b)| {
                if Some(idx + 1) == central {
                    let x = &b.eval(zm, zp) - &b.base;
                    expm(&to_algebra(system, &x)).unwrap()
                } else {
                    b.eval(zm, zp)
                }
            })
            .collect()
    })
    .unwrap()
}

pub fn unit_box(n: usize) -> GridSpec<f64> {
    GridSpec::on_box((0.0, 1.0), (2.0, 3.0), n, n).unwrap()
}

pub fn relative(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).max_norm() / a.max_norm().max(b.max_norm()).max(1e-300)
}
