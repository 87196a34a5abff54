//! Matrix exponential and principal logarithm for complex matrices.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::CMat;

/// `exp(a)` by scaling and squaring with a Taylor core.
pub fn expm<F: Real>(a: &CMat<F>) -> Result<CMat<F>> {
    if !a.is_square() {
        return Err(Error::Shape("exponential of a non-square matrix".into()));
    }
    let n = a.rows();
    let norm = a.one_norm();
    if !norm.is_finite() {
        return Err(Error::Domain("exponential of a non-finite matrix".into()));
    }
    let mut squarings = 0u32;
    let mut scaled_norm = norm;
    while scaled_norm > F::lit(0.5) {
        scaled_norm = scaled_norm / F::lit(2.0);
        squarings += 1;
    }
    let scaled = a.scale_real(F::lit(0.5).powi(squarings as i32));
    let mut sum = CMat::<F>::identity(n);
    let mut term = CMat::<F>::identity(n);
    for k in 1..=40 {
        term = (&term * &scaled).scale_real(F::one() / F::from_usize(k).expect("small integer"));
        sum = &sum + &term;
        if term.one_norm() <= F::epsilon() * sum.one_norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}

/// Principal square root by the Denman–Beavers iteration.
pub fn sqrtm<F: Real>(a: &CMat<F>) -> Result<CMat<F>> {
    let n = a.rows();
    let mut y = a.clone();
    let mut z = CMat::<F>::identity(n);
    let half = Complex::new(F::lit(0.5), F::zero());
    for _ in 0..60 {
        let y_inv = y.inverse()?;
        let z_inv = z.inverse()?;
        let y_next = (&y + &z_inv).scale(&half);
        let z_next = (&z + &y_inv).scale(&half);
        let delta = (&y_next - &y).one_norm();
        y = y_next;
        z = z_next;
        if delta <= F::epsilon() * F::lit(16.0) * y.one_norm() {
            return Ok(y);
        }
    }
    Err(Error::Domain(
        "square root iteration did not converge".into(),
    ))
}

/// Principal logarithm by inverse scaling and squaring.
///
/// Fails with [`Error::Domain`] when the square-root iteration does not
/// settle, which happens for eigenvalues on or near the negative real axis.
pub fn logm<F: Real>(a: &CMat<F>) -> Result<CMat<F>> {
    if !a.is_square() {
        return Err(Error::Shape("logarithm of a non-square matrix".into()));
    }
    let n = a.rows();
    let id = CMat::<F>::identity(n);
    let mut m = a.clone();
    let mut roots = 0i32;
    while (&m - &id).one_norm() > F::lit(0.25) {
        if roots >= 40 {
            return Err(Error::Domain(
                "logarithm argument too far from the identity".into(),
            ));
        }
        m = sqrtm(&m)?;
        roots += 1;
    }
    let x = &m - &id;
    let mut sum = CMat::<F>::zeros(n, n);
    let mut power = id.clone();
    for k in 1..=80 {
        power = &power * &x;
        let coef = F::one() / F::from_usize(k).expect("small integer");
        let term = power.scale_real(if k % 2 == 1 { coef } else { -coef });
        sum = &sum + &term;
        if term.one_norm() <= F::epsilon() * sum.one_norm().max(F::min_positive_value()) {
            break;
        }
        if power.is_zero_matrix() {
            break;
        }
    }
    Ok(sum.scale_real(F::lit(2.0).powi(roots)))
}

/// `λ^{-ρ}` for real `λ > 0` and rational-valued `ρ`, on the principal branch.
pub fn real_power<F: Real>(lambda: F, exponent: F) -> Complex<F> {
    debug_assert!(lambda > F::zero());
    Complex::new(lambda.powf(exponent), F::zero())
}
