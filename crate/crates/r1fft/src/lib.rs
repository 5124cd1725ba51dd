//! Fourier approximation of multivariate functions on R^d.
//!
//! A strictly increasing map psi: [-1/2, 1/2)^d -> R^d pulls a function h
//! on R^d back to the torus, where its Fourier partial sums are evaluated
//! and reconstructed with single FFTs on rank-1 lattice nodes. The crate
//! covers the four coordinate maps (algebraic, logarithmic, error,
//! tangens), frequency sets (hyperbolic crosses, lp balls, full grids),
//! reconstructing single and multiple rank-1 lattices with deterministic
//! searches, Fejer and Riesz coefficient smoothing, closed-form and
//! quadrature coefficient oracles, and dimension-incremental detection of
//! sparse frequency supports from black-box samples.
//!
//! Data-parallel hot paths run on rayon under the default `parallel`
//! feature; disabling it leaves sequential fallbacks with identical
//! results.

pub mod freqsets;
pub mod lattice;
pub mod oracle;
pub mod sparse;
pub mod tfft;
pub mod transforms;

mod erf;
mod error;
mod par;

pub use error::{Error, Result};
pub use freqsets::{FrequencySet, SetDescriptor, WeightFunction};
pub use lattice::{search_multiple, search_single, MultipleRank1Lattice, Rank1Lattice, TransformedLattice};
pub use tfft::{CoefficientMap, ExperimentRecord, SamplerHandle, SmoothingMode};
pub use transforms::{Transform1D, TransformD, TransformKind};

#[doc(hidden)]
pub mod bench_support;
