mod common;

use common::*;
use toda_core::liealg::{algebra_membership, group_membership, SeriesTag};
use toda_core::solver::{fit_order, liouville_field, liouville_field_for, LiouvilleSource};
use toda_core::toda::{
    assemble_c, assemble_gamma, block_residuals, build_system, conformal_transform, connection,
    curvature_residual, emit_equations, gauge_transform, residual_full, CBlocks, CField,
    ClosureSource, Connection, EquationFormat, GaugeLines, GridField, InterpolatedSource,
    Reparametrization, Stencil,
};
use toda_core::{CMatrix, Error, C64};

fn s(x: f64) -> CMatrix {
    CMatrix::scalar(C64::new(x, 0.0))
}

fn diag2(a: f64, b: f64) -> CMatrix {
    CMatrix::from_diag(&[C64::new(a, 0.0), C64::new(b, 0.0)])
}

#[test]
fn constant_field_residual_is_commutator() {
    let sys = build_system(SeriesTag::a(1).unwrap(), &[1, 1]).unwrap();
    let spec = unit_box(7);
    let field = GridField::from_fn(spec, |_, _| vec![s(1.0), s(1.0)]).unwrap();
    let c: CField<f64> = CBlocks::new(&sys, vec![s(1.0)], vec![s(1.0)])
        .unwrap()
        .into();
    let r = residual_full(&sys, &field, &c, Stencil::Centered2).unwrap();
    assert_eq!(r.interior, (5, 5));
    for m in &r.blocks[0].grid {
        assert_eq!(*m, diag2(1.0, -1.0));
    }
}

#[test]
fn z_minus_only_field_with_zero_c_plus() {
    let sys = build_system(SeriesTag::a(2).unwrap(), &[1, 2]).unwrap();
    let spec = unit_box(9);
    let field = GridField::from_fn(spec, |zm, _| {
        vec![
            s(1.5 + zm.sin()),
            CMatrix::from_fn(2, 2, |i, j| {
                C64::new(if i == j { 2.0 } else { zm * zm }, zm * i as f64)
            }),
        ]
    })
    .unwrap();
    let cm = CMatrix::from_fn(2, 1, |i, _| C64::new(1.0 + i as f64, 0.0));
    let c: CField<f64> = CBlocks::new(&sys, vec![cm], vec![CMatrix::zeros(1, 2)])
        .unwrap()
        .into();
    let r = residual_full(&sys, &field, &c, Stencil::Centered2).unwrap();
    assert!(r.max_norm() <= 1e-12, "{}", r.max_norm());
}

#[test]
fn liouville_residual_coefficient() {
    // Measured maxNorm / h² at 33x33 is about 3.15.
    let sys = build_system(SeriesTag::a(1).unwrap(), &[1, 1]).unwrap();
    let spec = unit_box(33);
    let (field, c) = liouville_field(&spec).unwrap();
    let r = residual_full(&sys, &field, &c.into(), Stencil::Centered2).unwrap();
    let coef = r.max_norm() / (spec.h_minus * spec.h_minus);
    assert!((2.5..4.0).contains(&coef), "{coef}");
}

#[test]
fn liouville_fourth_order_stencil_converges_faster() {
    let sys = build_system(SeriesTag::a(1).unwrap(), &[1, 1]).unwrap();
    let samples: Vec<(f64, f64)> = [17, 33, 65]
        .iter()
        .map(|&n| {
            let spec = unit_box(n);
            let (field, c) = liouville_field(&spec).unwrap();
            (
                spec.h_minus,
                residual_full(&sys, &field, &c.into(), Stencil::Centered4)
                    .unwrap()
                    .max_norm(),
            )
        })
        .collect();
    assert!(fit_order(&samples).unwrap() > 3.0);
}

#[test]
fn block_equation_matches_full_on_liouville() {
    let sys = build_system(SeriesTag::a(1).unwrap(), &[1, 1]).unwrap();
    let spec = unit_box(17);
    let (field, c) = liouville_field(&spec).unwrap();
    let c: CField<f64> = c.into();
    let full = residual_full(&sys, &field, &c, Stencil::Centered2).unwrap();
    let blocks = block_residuals(&sys, &field, &c, Stencil::Centered2).unwrap();
    for (k, m) in blocks.blocks[0].grid.iter().enumerate() {
        let want = full.blocks[0].grid[k].block(0, 0, 1, 1);
        assert!((m - &want).max_norm() <= 1e-15 * want.max_norm().max(1.0));
    }
}

#[test]
fn symplectic_liouville_residual_is_second_order() {
    let sys = build_system(SeriesTag::c(1).unwrap(), &[1, 1]).unwrap();
    let mut samples = Vec::new();
    for n in [17, 33] {
        let spec = unit_box(n);
        let (field, c) = liouville_field_for(&sys, &spec).unwrap();
        assert_eq!(field.block_count(), 1);
        let r = block_residuals(&sys, &field, &c.into(), Stencil::Centered2).unwrap();
        samples.push((spec.h_minus, r.max_norm()));
    }
    assert!(samples[1].1 < samples[0].1 / 3.0);
    let text = emit_equations(&sys, EquationFormat::Text);
    assert!(text.contains("∂₊(β₁⁻¹∂₋β₁) = −β₁⁻¹C₊₁β₁⁻¹ᵀC₋₁"), "{text}");
}

#[test]
fn dependent_block_residual_is_minus_transpose() {
    // D3 k=(1,4,1): constant fields, brute-force block expressions.
    let sys = build_system(SeriesTag::d(3).unwrap(), &[1, 4, 1]).unwrap();
    let mut r = rng(3);
    let spec = unit_box(5);
    for _ in 0..5 {
        let b1 = &s(2.0) + &random_matrix(&mut r, 1, 1, 0.5);
        let b2 =
            toda_core::matfn::expm(&to_algebra(&sys, &random_matrix(&mut r, 4, 4, 0.5))).unwrap();
        let field = GridField::from_fn(spec, |_, _| vec![b1.clone(), b2.clone()]).unwrap();
        let c: CField<f64> = random_c(&mut r, &sys).into();
        let full = residual_full(&sys, &field, &c, Stencil::Centered2).unwrap();
        let m = full.at(0, 2, 2);
        let first = m.block(0, 0, 1, 1);
        let last = m.block(5, 5, 1, 1);
        assert!((&last + &first.t_transpose()).max_norm() < 1e-12);
    }
}

#[test]
fn assemble_examples() {
    let a = build_system(SeriesTag::a(1).unwrap(), &[1, 1]).unwrap();
    assert_eq!(
        assemble_gamma(&a, &[s(2.0), s(5.0)]).unwrap(),
        diag2(2.0, 5.0)
    );

    let d = build_system(SeriesTag::d(3).unwrap(), &[1, 4, 1]).unwrap();
    let g = assemble_gamma(&d, &[s(3.0), CMatrix::identity(4)]).unwrap();
    assert!((g.block(5, 5, 1, 1).entries()[0] - C64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
    assert!(group_membership(&d.tag, &g, &1e-12).unwrap().member);

    let cm = CMatrix::from_fn(4, 1, |i, _| C64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0));
    let cp = CMatrix::from_fn(1, 4, |_, j| C64::new(j as f64, 0.0));
    let c = CBlocks::new(&d, vec![cm.clone()], vec![cp]).unwrap();
    assert_eq!(*c.minus(2), -&cm.t_transpose());
    assert!(
        algebra_membership(&d.tag, &assemble_c(&d, &c, -1), &1e-12)
            .unwrap()
            .member
    );

    // B2 k=(2,1,2): the 1x1 central block of SO(1) is ±1.
    let b = build_system(SeriesTag::b(2).unwrap(), &[2, 1, 2]).unwrap();
    let outer = CMatrix::from_fn(2, 2, |i, j| C64::new(if i == j { 2.0 } else { 0.5 }, 0.0));
    assert!(assemble_gamma(&b, &[outer.clone(), s(-1.0)]).is_ok());
    assert!(matches!(
        assemble_gamma(&b, &[outer, s(2.0)]),
        Err(Error::Constraint(_))
    ));
}

#[test]
fn singular_sample_is_reported() {
    let sys = build_system(SeriesTag::a(1).unwrap(), &[1, 1]).unwrap();
    let spec = unit_box(5);
    let field = GridField::from_fn(spec, |zm, _| vec![s(zm - 0.5), s(1.0)]).unwrap();
    let c: CField<f64> = CBlocks::new(&sys, vec![s(1.0)], vec![s(1.0)])
        .unwrap()
        .into();
    assert!(matches!(
        residual_full(&sys, &field, &c, Stencil::Centered2),
        Err(Error::Singular(_))
    ));
}

#[test]
fn connection_examples() {
    let sys = build_system(SeriesTag::a(2).unwrap(), &[1, 2]).unwrap();
    let spec = unit_box(5);
    let mut r = rng(11);
    let c = random_c(&mut r, &sys);
    let cf: CField<f64> = c.clone().into();
    let id = GridField::from_fn(spec, |_, _| vec![s(1.0), CMatrix::identity(2)]).unwrap();
    let omega = connection(&sys, &id, &cf, Stencil::Centered2).unwrap();
    assert!(omega.minus.iter().all(|m| *m == c.assemble(&sys, -1)));
    assert!(omega.plus.iter().all(|m| *m == c.assemble(&sys, 1)));

    let zero: CField<f64> = CBlocks::zeros(&sys).into();
    let field = random_field(&mut r, &sys, &spec, 0.3);
    let omega = connection(&sys, &field, &zero, Stencil::Centered2).unwrap();
    assert!(omega.plus.iter().all(|m| m.max_norm() == 0.0));
}

#[test]
fn curvature_of_commuting_constants_vanishes() {
    let spec = unit_box(5);
    let a = diag2(1.0, -2.0);
    let b = diag2(0.5, 3.0);
    let omega = Connection {
        spec,
        stencil: Stencil::Centered2,
        minus: vec![a; spec.len()],
        plus: vec![b; spec.len()],
    };
    assert_eq!(curvature_residual(&omega).unwrap().max_norm(), 0.0);
    let bad = Connection {
        spec,
        stencil: Stencil::Centered2,
        minus: vec![diag2(1.0, 1.0); 3],
        plus: vec![],
    };
    assert!(matches!(curvature_residual(&bad), Err(Error::Shape(_))));
}

#[test]
fn curvature_tracks_residual_on_liouville() {
    let sys = build_system(SeriesTag::a(1).unwrap(), &[1, 1]).unwrap();
    for n in [17, 33] {
        let spec = unit_box(n);
        let (field, c) = liouville_field(&spec).unwrap();
        let c: CField<f64> = c.into();
        let res = residual_full(&sys, &field, &c, Stencil::Centered2)
            .unwrap()
            .max_norm();
        let f = curvature_residual(&connection(&sys, &field, &c, Stencil::Centered2).unwrap())
            .unwrap()
            .max_norm();
        assert!(f <= 3.0 * res && res <= 3.0 * f, "{f} {res}");
        assert!(f <= 5.0 * spec.h_minus * spec.h_minus);
    }
}

#[test]
fn gauge_examples() {
    let sys = build_system(SeriesTag::a(1).unwrap(), &[1, 1]).unwrap();
    let spec = unit_box(17);
    let (field, c) = liouville_field(&spec).unwrap();
    let cf: CField<f64> = c.clone().into();

    let id = GaugeLines::constant(&spec, vec![s(1.0), s(1.0)], vec![s(1.0), s(1.0)]);
    let (f2, c2) = gauge_transform(&sys, &field, &cf, &id).unwrap();
    assert_eq!(f2, field);
    assert_eq!(c2, cf);

    // Scalar ξ commutes with the 1x1 C blocks.
    let xi = GaugeLines::constant(&spec, vec![s(2.0), s(2.0)], vec![s(3.0), s(3.0)]);
    let (f3, c3) = gauge_transform(&sys, &field, &cf, &xi).unwrap();
    assert_eq!(c3.as_constant().unwrap().minus(1), c.minus(1));
    let before = residual_full(&sys, &field, &cf, Stencil::Centered2)
        .unwrap()
        .max_norm();
    let after = residual_full(&sys, &f3, &c3, Stencil::Centered2)
        .unwrap()
        .max_norm();
    assert!((before - after).abs() <= 1e-12);

    let lambda = 2.5;
    let scale = GaugeLines::constant(&spec, vec![s(lambda), s(1.0)], vec![s(1.0), s(1.0)]);
    let (_, c4) = gauge_transform(&sys, &field, &cf, &scale).unwrap();
    let got = c4.as_constant().unwrap().minus(1).entries()[0];
    assert!((got - c.minus(1).entries()[0] * lambda).norm() < 1e-15);

    let singular = GaugeLines::constant(&spec, vec![s(0.0), s(1.0)], vec![s(1.0), s(1.0)]);
    assert!(matches!(
        gauge_transform(&sys, &field, &cf, &singular),
        Err(Error::Singular(_))
    ));
}

#[test]
fn gauge_covariance_bound() {
    let sys = build_system(SeriesTag::a(1).unwrap(), &[1, 1]).unwrap();
    let spec = unit_box(17);
    let (field, c) = liouville_field(&spec).unwrap();
    let cf: CField<f64> = c.into();
    let eps = residual_full(&sys, &field, &cf, Stencil::Centered2)
        .unwrap()
        .max_norm();
    let xi_m: Vec<Vec<CMatrix>> = (0..spec.n_minus)
        .map(|i| {
            vec![
                s(1.0 + 0.3 * spec.z_minus(i)),
                s(2.0 - 0.5 * spec.z_minus(i)),
            ]
        })
        .collect();
    let xi_p: Vec<Vec<CMatrix>> = (0..spec.n_plus)
        .map(|j| vec![s(spec.z_plus(j)), s(1.0)])
        .collect();
    let kappa = xi_m
        .iter()
        .chain(&xi_p)
        .flatten()
        .map(|m| m.condition_number())
        .fold(1.0, f64::max);
    let (f2, c2) = gauge_transform(
        &sys,
        &field,
        &cf,
        &GaugeLines {
            minus: xi_m,
            plus: xi_p,
        },
    )
    .unwrap();
    assert!(matches!(c2, CField::Chiral { .. }));
    let after = residual_full(&sys, &f2, &c2, Stencil::Centered2)
        .unwrap()
        .max_norm();
    let h = spec.h_minus;
    assert!(
        after <= eps * kappa * kappa + 5.0 * h * h,
        "{after} vs {eps}"
    );
}

#[test]
fn conformal_examples() {
    let sys = build_system(SeriesTag::a(1).unwrap(), &[1, 1]).unwrap();
    let spec = unit_box(17);
    let (field, c) = liouville_field(&spec).unwrap();
    let cf: CField<f64> = c.into();
    let base = residual_full(&sys, &field, &cf, Stencil::Centered2)
        .unwrap()
        .max_norm();

    let id = Reparametrization::identity();
    let same = conformal_transform(&sys, &LiouvilleSource, &spec, &id, &id).unwrap();
    assert_eq!(same, field);

    let shift = Reparametrization::translation(0.1);
    let moved = conformal_transform(&sys, &LiouvilleSource, &spec, &shift, &shift).unwrap();
    assert_eq!(moved.beta(1, 0, 0).entries()[0], C64::new(2.0 - 0.0, 0.0));
    let r = residual_full(&sys, &moved, &cf, Stencil::Centered2)
        .unwrap()
        .max_norm();
    assert!(r <= 5.0 * base);

    let double = Reparametrization::scaling(2.0);
    let wide = unit_box(17);
    let scaled = conformal_transform(&sys, &LiouvilleSource, &wide, &double, &double).unwrap();
    let r = residual_full(&sys, &scaled, &cf, Stencil::Centered2)
        .unwrap()
        .max_norm();
    assert!(r <= 5.0 * base, "{r} vs {base}");
    // (λ₊λ₋)^{−ρ/l} with λ = 2 reproduces the field exactly.
    for i in 0..17 {
        for j in 0..17 {
            assert!((scaled.beta(1, i, j) - field.beta(1, i, j)).max_norm() < 1e-13);
        }
    }

    let backwards = Reparametrization::new(|z: f64| -z, |_| -1.0);
    assert!(matches!(
        conformal_transform(&sys, &LiouvilleSource, &spec, &backwards, &id),
        Err(Error::Domain(_))
    ));
}

#[test]
fn conformal_by_interpolation() {
    let sys = build_system(SeriesTag::a(1).unwrap(), &[1, 1]).unwrap();
    let big = toda_core::toda::GridSpec::on_box((0.0, 1.5), (2.0, 3.5), 25, 25).unwrap();
    let (sampled, c) = liouville_field(&big).unwrap();
    let spec = unit_box(17);
    let shift = Reparametrization::translation(0.1);
    let source = InterpolatedSource::new(&sampled).unwrap();
    let moved = conformal_transform(&sys, &source, &spec, &shift, &shift).unwrap();
    let exact = conformal_transform(&sys, &LiouvilleSource, &spec, &shift, &shift).unwrap();
    for i in 0..17 {
        for j in 0..17 {
            let e = (moved.beta(2, i, j) - exact.beta(2, i, j)).max_norm();
            assert!(e < 5e-5, "{e}");
        }
    }
    let r = residual_full(&sys, &moved, &c.into(), Stencil::Centered2)
        .unwrap()
        .max_norm();
    assert!(r < 1e-2);

    let far = Reparametrization::translation(1.0);
    assert!(matches!(
        conformal_transform(&sys, &source, &spec, &far, &far),
        Err(Error::Domain(_))
    ));
}

#[test]
fn closure_source_matches_oracle() {
    let sys = build_system(SeriesTag::a(1).unwrap(), &[1, 1]).unwrap();
    let spec = unit_box(9);
    let src = ClosureSource(|zm: f64, zp: f64| Ok(vec![s(zp - zm), s(1.0 / (zp - zm))]));
    let id = Reparametrization::identity();
    let a = conformal_transform(&sys, &src, &spec, &id, &id).unwrap();
    assert_eq!(a, liouville_field(&spec).unwrap().0);
}

#[test]
fn reduction_needs_the_lie_stencil() {
    let sys = build_system(SeriesTag::b(2).unwrap(), &[1, 3, 1]).unwrap();
    let gl = build_system(SeriesTag::a(4).unwrap(), &[1, 3, 1]).unwrap();
    let spec = unit_box(9);
    let mut r = rng(21);
    let field = random_field(&mut r, &sys, &spec, 0.3);
    let c = random_c(&mut r, &sys);
    let all: Vec<Vec<CMatrix>> = (1..=3)
        .map(|a| {
            (0..spec.len())
                .map(|k| {
                    let pt = field.point(k / spec.n_plus, k % spec.n_plus);
                    toda_core::toda::complete_betas(&sys, &pt).unwrap()[a - 1].clone()
                })
                .collect()
        })
        .collect();
    let gl_field = GridField::new(spec, all).unwrap();
    let gl_c: CField<f64> = CBlocks::new(&gl, c.minus_all().to_vec(), c.plus_all().to_vec())
        .unwrap()
        .into();
    let defect = |st| {
        residual_full(&gl, &gl_field, &gl_c, st).unwrap().blocks[0]
            .grid
            .iter()
            .map(|m| (&m.t_transpose() + m).max_norm())
            .fold(0.0, f64::max)
    };
    assert!(defect(Stencil::Lie) <= 1e-10);
    assert!(defect(Stencil::Centered2) > 1e-8);
}

#[test]
fn curvature_bounds_residual_on_random_fields() {
    let mut r = rng(0x77);
    let spec = unit_box(9);
    for sys in class_systems() {
        for _ in 0..4 {
            let field = random_field(&mut r, &sys, &spec, 0.4);
            let c: CField<f64> = random_c(&mut r, &sys).into();
            let res = residual_full(&sys, &field, &c, Stencil::Centered2)
                .unwrap()
                .max_norm();
            let f = curvature_residual(&connection(&sys, &field, &c, Stencil::Centered2).unwrap())
                .unwrap()
                .max_norm();
            assert!(f >= res / 3.0, "{}: {f} vs {res}", sys.tag);
        }
    }
}
