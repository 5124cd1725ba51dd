//! Execution helpers. Hot loops go through this module so the `parallel`
//! feature swaps the strategy in one place; the `*_seq` variants are always
//! compiled and back the benchmark comparison.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg_attr(feature = "parallel", allow(dead_code))]
pub(crate) fn map_indexed_seq<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    map_indexed_seq(n, f)
}

/// Chunk size used when streaming over lattice nodes.
pub(crate) const NODE_CHUNK: usize = 1 << 13;

/// Fills a length-`n` vector chunk by chunk; `fill` receives the chunk's
/// starting index and its slice.
pub(crate) fn fill_chunks_seq<T: Default + Clone>(
    n: usize,
    chunk: usize,
    fill: impl Fn(usize, &mut [T]),
) -> Vec<T> {
    let mut out = vec![T::default(); n];
    for (ci, buf) in out.chunks_mut(chunk).enumerate() {
        fill(ci * chunk, buf);
    }
    out
}

#[cfg(feature = "parallel")]
pub(crate) fn fill_chunks<T: Default + Clone + Send>(
    n: usize,
    chunk: usize,
    fill: impl Fn(usize, &mut [T]) + Sync + Send,
) -> Vec<T> {
    let mut out = vec![T::default(); n];
    out.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(ci, buf)| fill(ci * chunk, buf));
    out
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn fill_chunks<T: Default + Clone + Send>(
    n: usize,
    chunk: usize,
    fill: impl Fn(usize, &mut [T]) + Sync + Send,
) -> Vec<T> {
    fill_chunks_seq(n, chunk, fill)
}

#[cfg(feature = "parallel")]
pub(crate) fn sort<T: Ord + Send>(v: &mut [T]) {
    v.par_sort_unstable();
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn sort<T: Ord + Send>(v: &mut [T]) {
    v.sort_unstable();
}

/// True if any two adjacent elements of a sorted slice are equal.
pub(crate) fn has_adjacent_dup<T: PartialEq>(v: &[T]) -> bool {
    v.windows(2).any(|w| w[0] == w[1])
}
