//! Error function and its inverse in double precision.

use crate::error::{Error, Result};
use std::f64::consts::FRAC_2_SQRT_PI;

/// erf(x) = (2/sqrt(pi)) * integral_0^x exp(-t^2) dt.
///
/// Computed from erf(x) = (2x/sqrt(pi)) e^{-x^2} * sum_{n>=0} (2x^2)^n / (2n+1)!!,
/// whose terms are all positive, so the summation never cancels.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax >= 6.0 {
        // |erfc(x)| < 2^-53 here, the result rounds to +-1.
        return 1.0f64.copysign(x);
    }
    let q = 2.0 * ax * ax;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0u32;
    while term > 1e-18 * sum && n < 200 {
        n += 1;
        term *= q / f64::from(2 * n + 1);
        sum += term;
    }
    (FRAC_2_SQRT_PI * ax * (-ax * ax).exp() * sum).copysign(x)
}

/// Inverse of [`erf`] on (-1, 1).
pub fn inverse_erf(p: f64) -> Result<f64> {
    if !(p > -1.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "inverse_erf requires |p| < 1, got {p}"
        )));
    }
    Ok(inverse_erf_unchecked(p))
}

/// Rational initial guess (central and tail branches) refined by two Newton
/// corrections. Caller guarantees |p| < 1.
pub(crate) fn inverse_erf_unchecked(p: f64) -> f64 {
    const A: [f64; 4] = [0.886226899, -1.645349621, 0.914624893, -0.140543331];
    const B: [f64; 4] = [-2.118377725, 1.442710462, -0.329097515, 0.012229801];
    const C: [f64; 4] = [-1.970840454, -1.624906493, 3.429567803, 1.641345311];
    const D: [f64; 2] = [3.543889200, 1.637067800];
    let ap = p.abs();
    let mut x = if ap <= 0.7 {
        let z = p * p;
        let num = ((A[3] * z + A[2]) * z + A[1]) * z + A[0];
        let den = (((B[3] * z + B[2]) * z + B[1]) * z + B[0]) * z + 1.0;
        p * num / den
    } else {
        let z = (-((1.0 - ap) / 2.0).ln()).sqrt();
        let num = ((C[3] * z + C[2]) * z + C[1]) * z + C[0];
        let den = (D[1] * z + D[0]) * z + 1.0;
        (num / den).copysign(p)
    };
    for _ in 0..2 {
        let e = erf(x) - p;
        if e == 0.0 {
            break;
        }
        x -= e / (FRAC_2_SQRT_PI * (-x * x).exp());
    }
    x
}
