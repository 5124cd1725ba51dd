//! Evaluation and reconstruction of transformed Fourier sums on rank-1
//! lattices, in O(M log M + |I| d) via one length-M FFT.
//!
//! Evaluation scatters each coefficient onto its residue k . z mod M and
//! runs one unnormalized inverse FFT; reconstruction runs one forward FFT
//! over the samples and reads coefficients off the residues, divided by M.
//! The M x |I| Fourier matrix is never materialized. For a reconstructing
//! lattice the two maps invert each other exactly (A* A = M I).

use crate::error::{Error, Result};
use crate::freqsets::{FrequencySet, SetDescriptor};
use crate::lattice::{mulmod, torus_coord, MultipleRank1Lattice, Rank1Lattice, TransformedLattice};
use crate::par;
use crate::transforms::TransformD;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Refuse FFTs that would need more than this many nodes.
pub const MAX_FFT_LEN: u64 = 1 << 33;

/// Black-box point sampler y -> f(y) for y in R^d.
///
/// `concurrency_safe` controls whether the crate may call it from several
/// threads at once; turn it off for samplers with interior mutability.
pub struct SamplerHandle<'a> {
    f: &'a (dyn Fn(&[f64]) -> Complex64 + Sync),
    concurrency_safe: bool,
}

impl<'a> SamplerHandle<'a> {
    pub fn new(f: &'a (dyn Fn(&[f64]) -> Complex64 + Sync)) -> Self {
        SamplerHandle {
            f,
            concurrency_safe: true,
        }
    }

    pub fn sequential(f: &'a (dyn Fn(&[f64]) -> Complex64 + Sync)) -> Self {
        SamplerHandle {
            f,
            concurrency_safe: false,
        }
    }

    pub fn concurrency_safe(&self) -> bool {
        self.concurrency_safe
    }

    #[inline]
    pub fn call(&self, y: &[f64]) -> Complex64 {
        (self.f)(y)
    }
}

impl fmt::Debug for SamplerHandle<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SamplerHandle")
            .field("concurrency_safe", &self.concurrency_safe)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Exact,
    Quadrature,
    Reconstructed,
}

/// Fourier coefficients attached to the frequency set they live on, in the
/// set's canonical order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientMap {
    set: FrequencySet,
    values: Vec<Complex64>,
    provenance: Provenance,
}

impl<'de> Deserialize<'de> for CoefficientMap {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            set: FrequencySet,
            values: Vec<Complex64>,
            provenance: Provenance,
        }
        let raw = Raw::deserialize(de)?;
        CoefficientMap::new(raw.set, raw.values, raw.provenance)
            .map_err(serde::de::Error::custom)
    }
}

impl CoefficientMap {
    pub fn new(set: FrequencySet, values: Vec<Complex64>, provenance: Provenance) -> Result<Self> {
        if set.card() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "coefficient count {} does not match set cardinality {}",
                values.len(),
                set.card()
            )));
        }
        if let Some(i) = values
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::NonFiniteSample { index: i });
        }
        Ok(CoefficientMap {
            set,
            values,
            provenance,
        })
    }

    pub fn set(&self) -> &FrequencySet {
        &self.set
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn value_of(&self, k: &[i64]) -> Option<Complex64> {
        self.set.index_of(k).map(|i| self.values[i])
    }

    /// Largest coefficient modulus.
    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Which lq norm parameterizes a smoothing kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LqNorm {
    #[serde(rename = "1")]
    L1,
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "inf")]
    LInf,
}

impl LqNorm {
    pub fn eval(&self, k: &[i64]) -> f64 {
        match self {
            LqNorm::L1 => k.iter().map(|&v| v.unsigned_abs() as f64).sum(),
            LqNorm::L2 => k
                .iter()
                .map(|&v| {
                    let a = v.unsigned_abs() as f64;
                    a * a
                })
                .sum::<f64>()
                .sqrt(),
            LqNorm::LInf => k
                .iter()
                .map(|&v| v.unsigned_abs() as f64)
                .fold(0.0, f64::max),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(LqNorm::L1),
            "2" => Ok(LqNorm::L2),
            "inf" => Ok(LqNorm::LInf),
            other => Err(Error::InvalidParameter(format!(
                "smoothing norm must be 1, 2, or inf, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for LqNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LqNorm::L1 => f.write_str("1"),
            LqNorm::L2 => f.write_str("2"),
            LqNorm::LInf => f.write_str("inf"),
        }
    }
}

/// Coefficient damping applied between reconstruction and evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SmoothingMode {
    Plain,
    /// w(k) = max(0, 1 - ||k||_q / N).
    Fejer {
        q: LqNorm,
        #[serde(rename = "N")]
        n: f64,
    },
    /// w(k) = (1 - (||k||_q / N)^gamma)^alpha inside the ball, 0 outside.
    Riesz {
        q: LqNorm,
        #[serde(rename = "N")]
        n: f64,
        alpha: f64,
        gamma: f64,
    },
}

impl SmoothingMode {
    pub fn fejer(q: LqNorm, n: f64) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Fejer level N must be positive, got {n}"
            )));
        }
        Ok(SmoothingMode::Fejer { q, n })
    }

    pub fn riesz(q: LqNorm, n: f64, alpha: f64, gamma: f64) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Riesz level N must be positive, got {n}"
            )));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Riesz alpha must be positive, got {alpha}"
            )));
        }
        if !(gamma.is_finite() && gamma >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Riesz gamma must be >= 1, got {gamma}"
            )));
        }
        Ok(SmoothingMode::Riesz { q, n, alpha, gamma })
    }

    pub fn weight(&self, k: &[i64]) -> f64 {
        match *self {
            SmoothingMode::Plain => 1.0,
            SmoothingMode::Fejer { q, n } => (1.0 - q.eval(k) / n).max(0.0),
            SmoothingMode::Riesz { q, n, alpha, gamma } => {
                let t = q.eval(k) / n;
                if t >= 1.0 {
                    0.0
                } else {
                    (1.0 - t.powf(gamma)).powf(alpha)
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SmoothingMode::Plain => "plain",
            SmoothingMode::Fejer { .. } => "fejer",
            SmoothingMode::Riesz { .. } => "riesz",
        }
    }
}

impl fmt::Display for SmoothingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SmoothingMode::Plain => f.write_str("plain"),
            SmoothingMode::Fejer { q, n } => write!(f, "fejer(q={q},N={n})"),
            SmoothingMode::Riesz { q, n, alpha, gamma } => {
                write!(f, "riesz(q={q},N={n},alpha={alpha},gamma={gamma})")
            }
        }
    }
}

/// Smoothing weights for every frequency of `set`, canonical order.
pub fn smoothing_weights(mode: &SmoothingMode, set: &FrequencySet) -> Result<Vec<f64>> {
    Ok(set.iter()?.map(|k| mode.weight(k)).collect())
}

fn check_m(m: u64) -> Result<usize> {
    if m > MAX_FFT_LEN {
        return Err(Error::ResourceLimit {
            what: "FFT length",
            needed: m as u128,
            cap: MAX_FFT_LEN as u128,
        });
    }
    Ok(m as usize)
}

fn fft_forward(buf: &mut [Complex64]) {
    FftPlanner::new().plan_fft_forward(buf.len()).process(buf);
}

fn fft_inverse(buf: &mut [Complex64]) {
    FftPlanner::new().plan_fft_inverse(buf.len()).process(buf);
}

/// Evaluates the Fourier sum at every lattice node: scatters coefficients
/// onto residues and runs one unnormalized inverse FFT. Exact for any
/// lattice; aliasing frequencies simply add into the same bin.
pub fn evaluate(coeffs: &CoefficientMap, lat: &Rank1Lattice) -> Result<Vec<Complex64>> {
    let set = coeffs.set();
    if set.dim() != lat.dim() {
        return Err(Error::DimensionMismatch {
            expected: lat.dim(),
            got: set.dim(),
        });
    }
    let m = check_m(lat.m())?;
    let mut g = vec![Complex64::default(); m];
    for (i, k) in set.iter()?.enumerate() {
        g[lat.residue(k) as usize] += coeffs.values()[i];
    }
    fft_inverse(&mut g);
    Ok(g)
}

/// Recovers coefficients from one sample per node: one forward FFT, then
/// each coefficient is its residue bin divided by M. Exact for functions
/// with spectrum in `set` when the lattice reconstructs `set`.
pub fn reconstruct(
    samples: &[Complex64],
    set: &FrequencySet,
    lat: &Rank1Lattice,
) -> Result<CoefficientMap> {
    if set.dim() != lat.dim() {
        return Err(Error::DimensionMismatch {
            expected: lat.dim(),
            got: set.dim(),
        });
    }
    let m = check_m(lat.m())?;
    if samples.len() != m {
        return Err(Error::InvalidParameter(format!(
            "expected {m} samples, got {}",
            samples.len()
        )));
    }
    let mut g = samples.to_vec();
    fft_forward(&mut g);
    let scale = 1.0 / m as f64;
    let data = set.flat()?;
    let d = set.dim();
    let values = par::map_indexed(set.card(), |i| {
        g[lat.residue(&data[i * d..(i + 1) * d]) as usize] * scale
    });
    CoefficientMap::new(set.clone(), values, Provenance::Reconstructed)
}

/// Samples f at every transformed node psi(x_j), streaming nodes chunk by
/// chunk; the full node matrix is never materialized.
pub fn sample_transformed(
    tl: &TransformedLattice,
    sampler: &SamplerHandle<'_>,
) -> Result<Vec<Complex64>> {
    sample_transformed_impl(tl, sampler, true)
}

pub(crate) fn sample_transformed_impl(
    tl: &TransformedLattice,
    sampler: &SamplerHandle<'_>,
    allow_parallel: bool,
) -> Result<Vec<Complex64>> {
    let lat = tl.base();
    let m = check_m(lat.m())?;
    let d = lat.dim();
    let z = lat.z();
    let mm = lat.m();
    let transform = tl.transform();
    let fill = |start: usize, buf: &mut [Complex64]| {
        let mut x = vec![0f64; d];
        let mut y = vec![0f64; d];
        for (off, slot) in buf.iter_mut().enumerate() {
            let j = (start + off) as u64;
            for (t, &zt) in z.iter().enumerate() {
                x[t] = torus_coord(mulmod(j, zt, mm), mm);
            }
            transform.forward_into(&x, &mut y);
            *slot = sampler.call(&y);
        }
    };
    let samples = if allow_parallel && sampler.concurrency_safe() {
        par::fill_chunks(m, par::NODE_CHUNK, fill)
    } else {
        par::fill_chunks_seq(m, par::NODE_CHUNK, fill)
    };
    if let Some(i) = samples
        .iter()
        .position(|v| !(v.re.is_finite() && v.im.is_finite()))
    {
        return Err(Error::NonFiniteSample { index: i });
    }
    Ok(samples)
}

/// Samples f on the transformed lattice and reconstructs its coefficients
/// on `set` in one step.
pub fn approx_coefficients(
    sampler: &SamplerHandle<'_>,
    set: &FrequencySet,
    tl: &TransformedLattice,
) -> Result<CoefficientMap> {
    let samples = sample_transformed(tl, sampler)?;
    reconstruct(&samples, set, tl.base())
}

/// Reconstruction from a multiple rank-1 lattice: each coefficient is the
/// mean of its estimates over all components where it is alias-free.
pub fn reconstruct_multiple(
    sampler: &SamplerHandle<'_>,
    set: &FrequencySet,
    mlat: &MultipleRank1Lattice,
    transform: &TransformD,
) -> Result<CoefficientMap> {
    let samples = sample_components(sampler, mlat, transform)?;
    reconstruct_multiple_from_samples(&samples, set, mlat)
}

fn sample_components(
    sampler: &SamplerHandle<'_>,
    mlat: &MultipleRank1Lattice,
    transform: &TransformD,
) -> Result<Vec<Vec<Complex64>>> {
    mlat.components()
        .iter()
        .map(|comp| {
            let tl = TransformedLattice::new(comp.clone(), transform.clone())?;
            sample_transformed(&tl, sampler)
        })
        .collect()
}

pub(crate) fn reconstruct_multiple_from_samples(
    samples: &[Vec<Complex64>],
    set: &FrequencySet,
    mlat: &MultipleRank1Lattice,
) -> Result<CoefficientMap> {
    let card = set.card();
    if mlat.assignment().len() != card {
        return Err(Error::InvalidParameter(format!(
            "assignment covers {} frequencies, set has {card}",
            mlat.assignment().len()
        )));
    }
    if !mlat.covers_all() {
        let missing = mlat.uncovered_indices();
        return Err(Error::CoverageFailure {
            uncovered: missing.len(),
            card,
            first: set.freq(missing[0])?.to_vec(),
        });
    }
    // invert the per-frequency table into per-component lists
    let mut per_comp: Vec<Vec<u32>> = vec![Vec::new(); mlat.components().len()];
    for (i, comps) in mlat.assignment().iter().enumerate() {
        for &c in comps {
            per_comp[c as usize].push(i as u32);
        }
    }
    let data = set.flat()?;
    let d = set.dim();
    let mut acc = vec![Complex64::default(); card];
    let mut counts = vec![0u32; card];
    for (ci, comp) in mlat.components().iter().enumerate() {
        if per_comp[ci].is_empty() {
            continue;
        }
        let m = check_m(comp.m())?;
        if samples[ci].len() != m {
            return Err(Error::InvalidParameter(format!(
                "component {ci}: expected {m} samples, got {}",
                samples[ci].len()
            )));
        }
        let mut g = samples[ci].clone();
        fft_forward(&mut g);
        let scale = 1.0 / m as f64;
        for &i in &per_comp[ci] {
            let i = i as usize;
            let k = &data[i * d..(i + 1) * d];
            acc[i] += g[comp.residue(k) as usize] * scale;
            counts[i] += 1;
        }
    }
    let values = acc
        .into_iter()
        .zip(&counts)
        .map(|(v, &c)| v / c as f64)
        .collect();
    CoefficientMap::new(set.clone(), values, Provenance::Reconstructed)
}

/// One experiment row: sample, reconstruct, damp, evaluate, compare.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    /// Transform kind name, or an empty string when not applicable.
    pub transform: String,
    /// Per-coordinate scale parameters.
    pub c: Vec<f64>,
    /// Compact descriptor text, e.g. "hc(N=4,beta=0.95)".
    pub descriptor: String,
    pub d: usize,
    /// Refinement level N of the frequency set (0 for custom sets).
    pub n: f64,
    /// beta for hyperbolic crosses, p for lp balls, None otherwise.
    pub beta_or_p: Option<f64>,
    pub card_i: usize,
    /// Lattice size M, or the sum over components for multiple lattices.
    pub m: u128,
    /// "single" or "multiple".
    pub lattice: String,
    /// Smoothing mode display form.
    pub mode: String,
    pub abs_err: f64,
    /// None when the sampled sup norm is zero.
    pub rel_err: Option<f64>,
    /// Whether the lattice was verified reconstructing (single) or fully
    /// covering with a correct alias table (multiple).
    pub verified: bool,
    /// Wall-clock seconds; 0 unless timing collection was requested.
    pub seconds: f64,
}

impl ExperimentRecord {
    pub fn csv_header() -> [&'static str; 10] {
        [
            "descriptor",
            "d",
            "N",
            "beta_or_p",
            "card_I",
            "M",
            "mode",
            "abs_err",
            "rel_err",
            "seconds",
        ]
    }

    pub fn csv_fields(&self) -> [String; 10] {
        let beta_or_p = match self.beta_or_p {
            Some(v) if v.is_infinite() => "inf".to_string(),
            Some(v) => v.to_string(),
            None => String::new(),
        };
        [
            self.descriptor.clone(),
            self.d.to_string(),
            self.n.to_string(),
            beta_or_p,
            self.card_i.to_string(),
            self.m.to_string(),
            self.mode.clone(),
            self.abs_err.to_string(),
            self.rel_err.map(|v| v.to_string()).unwrap_or_default(),
            self.seconds.to_string(),
        ]
    }
}

pub(crate) fn descriptor_meta(set: &FrequencySet) -> (String, f64, Option<f64>) {
    match set.descriptor() {
        Some(desc @ SetDescriptor::Hc { n, beta }) => (desc.to_string(), *n, Some(*beta)),
        Some(desc @ SetDescriptor::Lp { n, p }) => (desc.to_string(), *n, Some(*p)),
        Some(desc @ SetDescriptor::Grid { n }) => (desc.to_string(), *n as f64, None),
        None => ("custom".to_string(), 0.0, None),
    }
}

fn transform_meta(transform: &TransformD) -> (String, Vec<f64>) {
    let kinds: Vec<&str> = transform
        .components()
        .iter()
        .map(|t| t.kind().name())
        .collect();
    let name = if kinds.windows(2).all(|w| w[0] == w[1]) {
        kinds[0].to_string()
    } else {
        kinds.join("+")
    };
    let cs = transform.components().iter().map(|t| t.c()).collect();
    (name, cs)
}

fn sup_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn sup_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Full single-lattice roundtrip: sample h = f(psi(.)) on the nodes,
/// reconstruct on `set`, damp by `mode`, evaluate back on the nodes, and
/// record the discrete sup errors.
pub fn roundtrip_error(
    sampler: &SamplerHandle<'_>,
    set: &FrequencySet,
    lat: &Rank1Lattice,
    transform: &TransformD,
    mode: &SmoothingMode,
) -> Result<ExperimentRecord> {
    let tl = TransformedLattice::new(lat.clone(), transform.clone())?;
    let h = sample_transformed(&tl, sampler)?;
    let coeffs = reconstruct(&h, set, lat)?;
    let damped = apply_mode(&coeffs, mode)?;
    let ha = evaluate(&damped, lat)?;
    let abs_err = sup_diff(&h, &ha);
    let hmax = sup_norm(&h);
    let verified = lat.is_reconstructing(set)?;
    Ok(build_record(
        set,
        transform,
        mode,
        lat.m() as u128,
        "single",
        abs_err,
        hmax,
        verified,
    ))
}

/// Multiple-lattice roundtrip; errors are taken over the union of all
/// component nodes.
pub fn roundtrip_error_multiple(
    sampler: &SamplerHandle<'_>,
    set: &FrequencySet,
    mlat: &MultipleRank1Lattice,
    transform: &TransformD,
    mode: &SmoothingMode,
) -> Result<ExperimentRecord> {
    let samples = sample_components(sampler, mlat, transform)?;
    let coeffs = reconstruct_multiple_from_samples(&samples, set, mlat)?;
    let damped = apply_mode(&coeffs, mode)?;
    let mut abs_err = 0f64;
    let mut hmax = 0f64;
    for (comp, h) in mlat.components().iter().zip(&samples) {
        let ha = evaluate(&damped, comp)?;
        abs_err = abs_err.max(sup_diff(h, &ha));
        hmax = hmax.max(sup_norm(h));
    }
    let verified = mlat.covers_all() && mlat.verify(set)? == mlat.assignment();
    Ok(build_record(
        set,
        transform,
        mode,
        mlat.total_m(),
        "multiple",
        abs_err,
        hmax,
        verified,
    ))
}

fn apply_mode(coeffs: &CoefficientMap, mode: &SmoothingMode) -> Result<CoefficientMap> {
    if matches!(mode, SmoothingMode::Plain) {
        return Ok(coeffs.clone());
    }
    let weights = smoothing_weights(mode, coeffs.set())?;
    let values = coeffs
        .values()
        .iter()
        .zip(&weights)
        .map(|(v, &w)| v * w)
        .collect();
    CoefficientMap::new(coeffs.set().clone(), values, coeffs.provenance())
}

#[allow(clippy::too_many_arguments)]
fn build_record(
    set: &FrequencySet,
    transform: &TransformD,
    mode: &SmoothingMode,
    m: u128,
    lattice: &str,
    abs_err: f64,
    hmax: f64,
    verified: bool,
) -> ExperimentRecord {
    let (descriptor, n, beta_or_p) = descriptor_meta(set);
    let (tname, cs) = transform_meta(transform);
    ExperimentRecord {
        transform: tname,
        c: cs,
        descriptor,
        d: set.dim(),
        n,
        beta_or_p,
        card_i: set.card(),
        m,
        lattice: lattice.to_string(),
        mode: mode.to_string(),
        abs_err,
        rel_err: if hmax > 0.0 { Some(abs_err / hmax) } else { None },
        verified,
        seconds: 0.0,
    }
}

/// Least-squares slope of ln(y) against ln(x), ignoring non-positive or
/// non-finite points; None with fewer than two usable points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
