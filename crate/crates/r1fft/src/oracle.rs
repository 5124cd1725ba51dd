//! Reference values for tests and diagnostics: the Runge product test
//! function, closed-form transformed Fourier coefficients, FFT quadrature
//! oracles, and a truncated Wiener-norm estimator.
//!
//! Everything here exploits the tensor-product structure: the test
//! function and all transforms factor per coordinate, so d-dimensional
//! references are products of 1-D values.

use crate::error::{Error, Result};
use crate::freqsets::WeightFunction;
use crate::par;
use crate::transforms::Transform1D;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::{PI, TAU};

/// Smallest quadrature resolution accepted by the coefficient oracles.
pub const MIN_QUADRATURE_R: usize = 1 << 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestFunctionKind {
    RungeProduct,
}

/// A named multivariate test function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TestFunction {
    kind: TestFunctionKind,
    dim: usize,
}

impl TestFunction {
    pub fn runge_product(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "test function dimension must be at least 1".into(),
            ));
        }
        Ok(TestFunction {
            kind: TestFunctionKind::RungeProduct,
            dim,
        })
    }

    pub fn kind(&self) -> TestFunctionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        match self.kind {
            TestFunctionKind::RungeProduct => Ok(runge_product(y)),
        }
    }
}

/// h(y) = prod_j 1/(1 + y_j^2), in (0, 1], h(0) = 1.
pub fn runge_product(y: &[f64]) -> f64 {
    let mut v = 1.0;
    for &yi in y {
        v /= 1.0 + yi * yi;
    }
    v
}

/// Complex-valued Runge product, shaped for `SamplerHandle`.
pub fn runge_product_sampler(y: &[f64]) -> Complex64 {
    Complex64::new(runge_product(y), 0.0)
}

/// 1-D transformed Fourier coefficient of the Runge function under the
/// algebraic map at c = 1, where h(psi(x)) = 1 - 4x^2.
pub fn exact_coeff_algebraic_1d(k: i64) -> f64 {
    if k == 0 {
        2.0 / 3.0
    } else {
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        let kk = (k as f64) * (k as f64);
        sign * 2.0 / (PI * PI * kk)
    }
}

/// Product-form coefficient for the Runge product under the algebraic map.
/// The closed form holds only at c = 1, which is enforced.
pub fn exact_coeff_algebraic(k: &[i64], c: &[f64]) -> Result<f64> {
    if k.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            got: k.len(),
        });
    }
    if let Some(bad) = c.iter().find(|&&cj| cj != 1.0) {
        return Err(Error::Domain(format!(
            "algebraic closed form requires c = 1 in every coordinate, got {bad}"
        )));
    }
    Ok(k.iter().map(|&kj| exact_coeff_algebraic_1d(kj)).product())
}

/// 1-D transformed Fourier coefficient of the Runge function under the
/// tangens map: 1/(c+1) at k = 0, else c/(c+1)^2 * ((c-1)/(c+1))^(|k|-1).
/// At c = 1 this collapses to (1/2, 1/4, 0, 0, ...).
pub fn exact_coeff_tangens_1d(k: i64, c: f64) -> f64 {
    if k == 0 {
        1.0 / (c + 1.0)
    } else {
        let rho = (c - 1.0) / (c + 1.0);
        let e = k.unsigned_abs() - 1;
        // powi(0, 0) = 1 keeps the c = 1, |k| = 1 case at exactly 1/4
        c / ((c + 1.0) * (c + 1.0)) * rho.powi(e.min(i32::MAX as u64) as i32)
    }
}

/// Product-form coefficient for the Runge product under the tangens map.
pub fn exact_coeff_tangens(k: &[i64], c: &[f64]) -> Result<f64> {
    if k.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            got: k.len(),
        });
    }
    if let Some(bad) = c.iter().find(|&&cj| !(cj.is_finite() && cj > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "tangens scale must be positive, got {bad}"
        )));
    }
    Ok(k.iter()
        .zip(c)
        .map(|(&kj, &cj)| exact_coeff_tangens_1d(kj, cj))
        .product())
}

fn check_quadrature_r(r: usize) -> Result<()> {
    if !r.is_power_of_two() || r < MIN_QUADRATURE_R {
        return Err(Error::InvalidParameter(format!(
            "quadrature resolution must be a power of two >= {MIN_QUADRATURE_R}, got {r}"
        )));
    }
    Ok(())
}

/// Samples g_j = f(psi(x_j)) on the equispaced torus grid x_j = j/R - 1/2,
/// with the boundary sample x_0 = -1/2 set to zero.
fn quadrature_samples(
    transform: &Transform1D,
    f1d: &(dyn Fn(f64) -> Complex64 + Sync),
    r: usize,
) -> Result<Vec<Complex64>> {
    let samples = par::map_indexed(r, |j| {
        if j == 0 {
            return Complex64::default();
        }
        let x = j as f64 / r as f64 - 0.5;
        f1d(transform.forward_clamped(x))
    });
    if let Some(i) = samples
        .iter()
        .position(|v| !(v.re.is_finite() && v.im.is_finite()))
    {
        return Err(Error::NonFiniteSample { index: i });
    }
    Ok(samples)
}

/// k-th transformed Fourier coefficient of f under `transform`, by the
/// rectangle rule on R equispaced torus points with boundary value zero.
/// Ground truth where no closed form exists; spectrally accurate for the
/// smooth integrands at hand.
pub fn quadrature_coeff(
    transform: &Transform1D,
    f1d: &(dyn Fn(f64) -> Complex64 + Sync),
    k: i64,
    r: usize,
) -> Result<Complex64> {
    check_quadrature_r(r)?;
    let samples = quadrature_samples(transform, f1d, r)?;
    let mut acc = Complex64::default();
    for (j, &g) in samples.iter().enumerate().skip(1) {
        let x = j as f64 / r as f64 - 0.5;
        acc += g * Complex64::from_polar(1.0, -TAU * k as f64 * x);
    }
    Ok(acc / r as f64)
}

/// All coefficients for |k| <= kmax in one length-R FFT; entry i holds
/// k = i - kmax. Agrees with `quadrature_coeff` up to roundoff.
pub fn quadrature_coeffs_batch(
    transform: &Transform1D,
    f1d: &(dyn Fn(f64) -> Complex64 + Sync),
    kmax: u32,
    r: usize,
) -> Result<Vec<Complex64>> {
    check_quadrature_r(r)?;
    if 2 * kmax as usize >= r {
        return Err(Error::InvalidParameter(format!(
            "kmax {kmax} needs more than {r} quadrature points"
        )));
    }
    let mut g = quadrature_samples(transform, f1d, r)?;
    FftPlanner::new().plan_fft_forward(r).process(&mut g);
    // x_j = j/R - 1/2 shifts bin k by the phase e^{pi i k} = (-1)^k
    let kmax = kmax as i64;
    Ok((-kmax..=kmax)
        .map(|k| {
            let bin = k.rem_euclid(r as i64) as usize;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            g[bin] * (sign / r as f64)
        })
        .collect())
}

/// Smallest C with b^{-k} <= C k^{-(1+eps)} for all k > 0, attained at
/// the real maximizer k2 = (1+eps)/ln b.
pub fn decay_constant(b: f64, eps: f64) -> Result<f64> {
    if !(b.is_finite() && b > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "decay base must exceed 1, got {b}"
        )));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "decay epsilon must be positive, got {eps}"
        )));
    }
    let k2 = (1.0 + eps) / b.ln();
    Ok(b.powf(-k2) * k2.powf(1.0 + eps))
}

/// Truncated weighted Wiener norm of a 1-D coefficient sequence, split
/// into shells s_r = sum over |k| = r of w(k)|coeff(k)|.
#[derive(Clone, Debug, PartialEq)]
pub struct WienerEstimate {
    shells: Vec<f64>,
    total: f64,
}

impl WienerEstimate {
    /// Partial sum over |k| <= K.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn shells(&self) -> &[f64] {
        &self.shells
    }

    pub fn last_shell(&self) -> f64 {
        *self.shells.last().unwrap_or(&0.0)
    }

    /// Last shell relative to the half-way shell. Near 1 the shell terms
    /// are not decaying and the full norm is likely infinite; well below 1
    /// they decay polynomially and the truncation is trustworthy.
    pub fn last_shell_ratio(&self) -> f64 {
        let last = self.shells.len() - 1;
        if last == 0 {
            return 0.0;
        }
        let mid = self.shells[last / 2];
        if mid == 0.0 {
            if self.shells[last] == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.shells[last] / mid
        }
    }

    /// Heuristic divergence flag, never a proof.
    pub fn diverging(&self) -> bool {
        self.last_shell_ratio() >= 0.99
    }
}

/// Sums w([k])|coeff_fn(k)| over |k| <= kmax, shell by shell.
pub fn wiener_norm_estimate(
    coeff_fn: &dyn Fn(i64) -> f64,
    w: &WeightFunction,
    kmax: u32,
) -> Result<WienerEstimate> {
    let mut shells = Vec::with_capacity(kmax as usize + 1);
    shells.push(w.weight(&[0]) * coeff_fn(0).abs());
    for r in 1..=kmax as i64 {
        let s = w.weight(&[r]) * coeff_fn(r).abs() + w.weight(&[-r]) * coeff_fn(-r).abs();
        if !s.is_finite() {
            return Err(Error::Domain(format!(
                "Wiener shell at |k| = {r} is not finite"
            )));
        }
        shells.push(s);
    }
    let total = shells.iter().sum();
    Ok(WienerEstimate { shells, total })
}
