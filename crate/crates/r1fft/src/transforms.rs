//! Change-of-coordinate maps psi: (-1/2, 1/2) -> R and their tensor products.
//!
//! Each map is strictly increasing, differentiable, and surjective onto R.
//! Composing a function h: R^d -> C with the map (coordinate-wise) yields a
//! function on the torus whose Fourier coefficients the rest of the crate
//! approximates. The inverse density (psi^-1)'(y) is the weight that turns
//! integrals over R back into integrals over the torus.

use crate::erf;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

pub use crate::erf::{erf as erf_fn, inverse_erf};

/// Half-width of the clamp band at the torus boundary: forward evaluation
/// clamps x into [-1/2 + EPS, 1/2 - EPS] so nodes landing exactly on the
/// boundary stay finite.
pub const BOUNDARY_EPS: f64 = 1.0 / 1_099_511_627_776.0; // 2^-40

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Algebraic,
    Logarithmic,
    Error,
    Tangens,
}

impl TransformKind {
    pub const ALL: [TransformKind; 4] = [
        TransformKind::Algebraic,
        TransformKind::Logarithmic,
        TransformKind::Error,
        TransformKind::Tangens,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::Algebraic => "algebraic",
            TransformKind::Logarithmic => "logarithmic",
            TransformKind::Error => "error",
            TransformKind::Tangens => "tangens",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "algebraic" => Ok(TransformKind::Algebraic),
            "logarithmic" => Ok(TransformKind::Logarithmic),
            "error" => Ok(TransformKind::Error),
            "tangens" => Ok(TransformKind::Tangens),
            other => Err(Error::InvalidParameter(format!(
                "unknown transform kind {other:?}"
            ))),
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One-dimensional coordinate map with scale parameter c > 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(into = "Transform1DRepr")]
pub struct Transform1D {
    kind: TransformKind,
    c: f64,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
struct Transform1DRepr {
    kind: TransformKind,
    c: f64,
}

impl From<Transform1D> for Transform1DRepr {
    fn from(t: Transform1D) -> Self {
        Transform1DRepr {
            kind: t.kind,
            c: t.c,
        }
    }
}

impl<'de> Deserialize<'de> for Transform1D {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = Transform1DRepr::deserialize(de)?;
        Transform1D::new(repr.kind, repr.c).map_err(serde::de::Error::custom)
    }
}

impl Transform1D {
    pub fn new(kind: TransformKind, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "transform scale c must be finite and positive, got {c}"
            )));
        }
        Ok(Transform1D { kind, c })
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// psi(x) for x in [-1/2, 1/2]; x is clamped into the open interval by
    /// [`BOUNDARY_EPS`] so boundary nodes map to large finite values.
    pub fn forward(&self, x: f64) -> Result<f64> {
        if !(x.abs() <= 0.5) {
            return Err(Error::Domain(format!(
                "forward transform requires |x| <= 1/2, got {x}"
            )));
        }
        Ok(self.forward_clamped(x))
    }

    #[inline]
    pub(crate) fn forward_clamped(&self, x: f64) -> f64 {
        let x = x.clamp(-0.5 + BOUNDARY_EPS, 0.5 - BOUNDARY_EPS);
        let c = self.c;
        match self.kind {
            TransformKind::Algebraic => {
                // psi(x) = 2 c x / sqrt(1 - 4 x^2)
                2.0 * c * x / (1.0 - 4.0 * x * x).sqrt()
            }
            TransformKind::Logarithmic => 2.0 * c * (2.0 * x).atanh(),
            TransformKind::Error => c * erf::inverse_erf_unchecked(2.0 * x),
            TransformKind::Tangens => c * (PI * x).tan(),
        }
    }

    /// psi^-1(y) in (-1/2, 1/2) for finite y.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::Domain(format!(
                "inverse transform requires finite y, got {y}"
            )));
        }
        let c = self.c;
        Ok(match self.kind {
            TransformKind::Algebraic => y / (2.0 * (y * y + c * c).sqrt()),
            TransformKind::Logarithmic => 0.5 * (y / (2.0 * c)).tanh(),
            TransformKind::Error => 0.5 * erf::erf(y / c),
            TransformKind::Tangens => (y / c).atan() / PI,
        })
    }

    /// (psi^-1)'(y), the density weight: strictly positive and integrating
    /// to 1 over R.
    pub fn inverse_density(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::Domain(format!(
                "inverse density requires finite y, got {y}"
            )));
        }
        let c = self.c;
        Ok(match self.kind {
            TransformKind::Algebraic => {
                let t = y * y + c * c;
                c * c / (2.0 * t * t.sqrt())
            }
            TransformKind::Logarithmic => {
                // sech^2(u)/(4c) written via e^{-2|u|} to stay positive for
                // large |y| instead of cancelling 1 - tanh^2.
                let u = y / (2.0 * c);
                let e = (-2.0 * u.abs()).exp();
                e / ((1.0 + e) * (1.0 + e) * c)
            }
            TransformKind::Error => {
                let u = y / c;
                (-u * u).exp() / (c * PI.sqrt())
            }
            TransformKind::Tangens => c / (PI * (c * c + y * y)),
        })
    }
}

/// Coordinate-wise product map on the d-torus.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct TransformD {
    per_dimension: Vec<Transform1D>,
}

impl<'de> Deserialize<'de> for TransformD {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let per_dimension = Vec::<Transform1D>::deserialize(de)?;
        TransformD::new(per_dimension).map_err(serde::de::Error::custom)
    }
}

impl TransformD {
    pub fn new(per_dimension: Vec<Transform1D>) -> Result<Self> {
        if per_dimension.is_empty() {
            return Err(Error::InvalidParameter(
                "product transform needs at least one dimension".into(),
            ));
        }
        Ok(TransformD { per_dimension })
    }

    /// Same map with the same scale in every coordinate.
    pub fn uniform(kind: TransformKind, c: f64, d: usize) -> Result<Self> {
        let t = Transform1D::new(kind, c)?;
        TransformD::new(vec![t; d])
    }

    /// One kind, one scale per coordinate.
    pub fn per_coordinate(kind: TransformKind, cs: &[f64]) -> Result<Self> {
        let per = cs
            .iter()
            .map(|&c| Transform1D::new(kind, c))
            .collect::<Result<Vec<_>>>()?;
        TransformD::new(per)
    }

    pub fn dim(&self) -> usize {
        self.per_dimension.len()
    }

    pub fn components(&self) -> &[Transform1D] {
        &self.per_dimension
    }

    pub fn forward_d(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        x.iter()
            .zip(&self.per_dimension)
            .map(|(&xi, t)| t.forward(xi))
            .collect()
    }

    /// Forward map without the per-call allocation; `x` and `out` must both
    /// have length `dim`, with every |x_i| <= 1/2.
    #[inline]
    pub(crate) fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, &xi), t) in out.iter_mut().zip(x).zip(&self.per_dimension) {
            *o = t.forward_clamped(xi);
        }
    }

    pub fn inverse_d(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y.len())?;
        y.iter()
            .zip(&self.per_dimension)
            .map(|(&yi, t)| t.inverse(yi))
            .collect()
    }

    /// Product of the coordinate densities.
    pub fn density_d(&self, y: &[f64]) -> Result<f64> {
        self.check_dim(y.len())?;
        let mut p = 1.0;
        for (&yi, t) in y.iter().zip(&self.per_dimension) {
            p *= t.inverse_density(yi)?;
        }
        Ok(p)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}
