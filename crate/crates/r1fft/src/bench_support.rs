//! Parallel/sequential pairs of the hot paths, exposed for the criterion
//! benches. Not part of the supported API.

use crate::lattice::{Rank1Lattice, TransformedLattice};
use crate::tfft::{sample_transformed_impl, SamplerHandle};
use crate::Result;
use num_complex::Complex64;

/// Node matrix via the library path (parallel when the feature is on).
pub fn nodes(lat: &Rank1Lattice) -> Vec<Vec<f64>> {
    lat.nodes()
}

/// Node matrix via a plain sequential loop.
pub fn nodes_seq(lat: &Rank1Lattice) -> Vec<Vec<f64>> {
    (0..lat.m()).map(|j| lat.node(j)).collect()
}

/// Transformed sampling, forced onto the parallel or sequential path.
pub fn sample(
    tl: &TransformedLattice,
    sampler: &SamplerHandle<'_>,
    parallel: bool,
) -> Result<Vec<Complex64>> {
    sample_transformed_impl(tl, sampler, parallel)
}
