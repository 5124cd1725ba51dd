//! Dimension-incremental detection of an unknown sparse frequency support
//! from black-box samples of a transformed function.
//!
//! The scheme detects 1-D candidates per coordinate by sampling along one
//! coordinate with the others frozen at random anchors, then grows the
//! support dimension by dimension: form the cross product of the current
//! candidates with the next coordinate's candidates, realize a
//! reconstructing lattice for it, reconstruct, threshold, repeat. A final
//! pass reconstructs on the detected set without anchors.

use crate::error::{Error, Result};
use crate::freqsets::FrequencySet;
use crate::lattice::{self, mulmod, torus_coord, CandidateSchedule, Rank1Lattice};
use crate::par;
use crate::tfft::{self, CoefficientMap, Provenance, SamplerHandle};
use crate::transforms::TransformD;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Candidate sets at or below this cardinality use a single lattice;
/// larger ones switch to multiple lattices to keep FFT lengths bounded.
pub const SINGLE_CARD_LIMIT: usize = 30_000;

const SPARSE_CAP_FACTOR: f64 = 4.0;
const MULTI_C: f64 = 4.0;
const MULTI_N: usize = 64;
const MULTI_DELTA: f64 = 0.5;
const MAX_GRID_N: i64 = 1 << 20;

/// Configuration of one detection run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseConfig {
    pub d: usize,
    /// Search grid is [-N, N]^d.
    #[serde(rename = "N")]
    pub n: i64,
    /// Sparsity cap on the returned support.
    pub s: usize,
    /// Coefficient cutoff relative to the current largest modulus.
    pub threshold_rel: f64,
    pub seed: u64,
    /// Independent re-runs whose supports are intersected.
    pub detection_rounds: usize,
    /// Intermediate candidate sets are capped at s * expansion_factor.
    pub expansion_factor: usize,
}

impl SparseConfig {
    pub fn new(d: usize, n: i64, s: usize, threshold_rel: f64, seed: u64) -> Result<Self> {
        let cfg = SparseConfig {
            d,
            n,
            s,
            threshold_rel,
            seed,
            detection_rounds: 1,
            expansion_factor: 4,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_rounds(mut self, rounds: usize) -> Result<Self> {
        self.detection_rounds = rounds;
        self.validate()?;
        Ok(self)
    }

    pub fn with_expansion(mut self, factor: usize) -> Result<Self> {
        self.expansion_factor = factor;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if self.n < 1 || self.n > MAX_GRID_N {
            return Err(Error::InvalidParameter(format!(
                "grid refinement N must lie in 1..={MAX_GRID_N}, got {}",
                self.n
            )));
        }
        if self.s == 0 {
            return Err(Error::InvalidParameter("sparsity cap must be at least 1".into()));
        }
        if !(self.threshold_rel > 0.0 && self.threshold_rel < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold_rel must lie in (0, 1), got {}",
                self.threshold_rel
            )));
        }
        if self.detection_rounds == 0 {
            return Err(Error::InvalidParameter(
                "detection_rounds must be at least 1".into(),
            ));
        }
        if self.expansion_factor == 0 {
            return Err(Error::InvalidParameter(
                "expansion_factor must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn step_cap(&self) -> usize {
        self.s.saturating_mul(self.expansion_factor)
    }
}

/// One reconstruction stage inside a detection run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub round: usize,
    /// "projection", "growth", "final", or "consensus".
    pub stage: String,
    /// Coordinates the stage resolves (0-based).
    pub dims: Vec<usize>,
    /// Candidate frequencies reconstructed.
    pub candidates: usize,
    /// Frequencies surviving threshold and cap.
    pub kept: usize,
    /// "single" or "multiple".
    pub lattice: String,
    /// Lattice size M, summed over components for multiple lattices.
    pub m_total: u128,
    pub samples: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub config: SparseConfig,
    pub steps: Vec<StepReport>,
    pub total_samples: u128,
    pub support_card: usize,
}

/// Detected support, its coefficients, and the run report.
#[derive(Clone, Debug, Serialize)]
pub struct Detection {
    pub support: FrequencySet,
    pub coefficients: CoefficientMap,
    pub report: DetectionReport,
}

/// Detects at most `cfg.s` frequencies of the sampled function inside
/// [-N, N]^d and reconstructs their coefficients. Deterministic given the
/// config seed.
pub fn detect(
    sampler: &SamplerHandle<'_>,
    transform: &TransformD,
    cfg: &SparseConfig,
) -> Result<(FrequencySet, CoefficientMap)> {
    detect_full(sampler, transform, cfg).map(|det| (det.support, det.coefficients))
}

/// As [`detect`], additionally returning the per-step report.
pub fn detect_full(
    sampler: &SamplerHandle<'_>,
    transform: &TransformD,
    cfg: &SparseConfig,
) -> Result<Detection> {
    cfg.validate()?;
    if transform.dim() != cfg.d {
        return Err(Error::DimensionMismatch {
            expected: cfg.d,
            got: transform.dim(),
        });
    }
    let mut ctx = Ctx {
        sampler,
        transform,
        cfg,
        steps: Vec::new(),
        total_samples: 0,
    };
    let mut rounds: Vec<(Vec<i64>, Vec<Complex64>)> = Vec::with_capacity(cfg.detection_rounds);
    for round in 0..cfg.detection_rounds {
        rounds.push(run_round(&mut ctx, round)?);
    }
    let (flat, values) = if cfg.detection_rounds == 1 {
        rounds.pop().unwrap()
    } else {
        consensus(&mut ctx, &rounds)?
    };
    let support = FrequencySet::from_flat(cfg.d, flat, None);
    let coefficients = CoefficientMap::new(support.clone(), values, Provenance::Reconstructed)?;
    let report = DetectionReport {
        config: *cfg,
        steps: std::mem::take(&mut ctx.steps),
        total_samples: ctx.total_samples,
        support_card: support.card(),
    };
    Ok(Detection {
        support,
        coefficients,
        report,
    })
}

/// Candidate frequencies along a coordinate subset: reconstructs on the
/// full grid [-N, N]^dims with the remaining coordinates anchored, and
/// keeps everything above threshold. Deterministic given the config seed.
pub fn detect_projection(
    sampler: &SamplerHandle<'_>,
    transform: &TransformD,
    cfg: &SparseConfig,
    dims: &[usize],
) -> Result<FrequencySet> {
    cfg.validate()?;
    if transform.dim() != cfg.d {
        return Err(Error::DimensionMismatch {
            expected: cfg.d,
            got: transform.dim(),
        });
    }
    validate_dims(dims, cfg.d)?;
    let side = 2 * cfg.n as u128 + 1;
    let grid_card = side.pow(dims.len() as u32);
    if grid_card > cfg.step_cap() as u128 {
        return Err(Error::ResourceLimit {
            what: "projection grid",
            needed: grid_card,
            cap: cfg.step_cap() as u128,
        });
    }
    let grid = FrequencySet::full_grid(dims.len(), cfg.n)?;
    let mut ctx = Ctx {
        sampler,
        transform,
        cfg,
        steps: Vec::new(),
        total_samples: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, 0x70726f6a));
    let anchor = draw_anchor(&mut rng, cfg.d - dims.len());
    let mseed = rng.gen();
    let values = reconstruct_on(&mut ctx, &grid, dims, &anchor, mseed, 0, "projection")?;
    let kept = threshold_indices(&values, cfg.threshold_rel);
    let flat = gather_flat(&grid, &kept)?;
    Ok(FrequencySet::from_flat(dims.len(), flat, None))
}

fn validate_dims(dims: &[usize], d: usize) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::InvalidParameter(
            "projection needs at least one coordinate".into(),
        ));
    }
    if dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "projection coordinates must be strictly increasing".into(),
        ));
    }
    if *dims.last().unwrap() >= d {
        return Err(Error::InvalidParameter(format!(
            "projection coordinate {} outside dimension {d}",
            dims.last().unwrap()
        )));
    }
    Ok(())
}

struct Ctx<'a> {
    sampler: &'a SamplerHandle<'a>,
    transform: &'a TransformD,
    cfg: &'a SparseConfig,
    steps: Vec<StepReport>,
    total_samples: u128,
}

fn mix(seed: u64, tag: u64) -> u64 {
    seed ^ tag
        .wrapping_add(0x9E3779B97F4A7C15)
        .wrapping_mul(0xBF58476D1CE4E5B9)
        .rotate_left(31)
}

fn draw_anchor(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen::<f64>() - 0.5).collect()
}

/// One full detection round; returns the kept flat support (canonical
/// order) and its coefficients.
fn run_round(ctx: &mut Ctx<'_>, round: usize) -> Result<(Vec<i64>, Vec<Complex64>)> {
    let cfg = ctx.cfg;
    let d = cfg.d;
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, round as u64));
    let coord_anchors: Vec<Vec<f64>> = (0..d).map(|_| draw_anchor(&mut rng, d - 1)).collect();
    let growth_anchors: Vec<Vec<f64>> = (1..d).map(|t| draw_anchor(&mut rng, d - 1 - t)).collect();
    let lattice_seeds: Vec<u64> = (0..d + 1).map(|_| rng.gen()).collect();

    let grid1 = FrequencySet::full_grid(1, cfg.n)?;
    let mut per_coord: Vec<(Vec<i64>, Vec<Complex64>)> = Vec::with_capacity(d);
    for t in 0..d {
        let values = reconstruct_on(
            ctx,
            &grid1,
            &[t],
            &coord_anchors[t],
            mix(lattice_seeds[t], 0x31),
            round,
            "projection",
        )?;
        let mut kept = threshold_indices(&values, cfg.threshold_rel);
        truncate_ranked(&mut kept, &values, cfg.step_cap());
        finish_step(ctx, kept.len());
        if kept.is_empty() {
            return Ok((Vec::new(), Vec::new()));
        }
        let flat = gather_flat(&grid1, &kept)?;
        let vals = kept.iter().map(|&i| values[i]).collect();
        per_coord.push((flat, vals));
    }

    let (mut cur_flat, mut cur_vals) = per_coord[0].clone();
    let mut pruned = cur_flat.len() < grid1.card();
    for t in 1..d {
        let (flat, dim) = capped_product(
            &cur_flat,
            t,
            &cur_vals,
            &per_coord[t].0,
            &per_coord[t].1,
            cfg.step_cap(),
        );
        if flat.is_empty() {
            return Ok((Vec::new(), Vec::new()));
        }
        let candidates = FrequencySet::from_flat(dim, flat, None);
        let dims: Vec<usize> = (0..=t).collect();
        let values = reconstruct_on(
            ctx,
            &candidates,
            &dims,
            &growth_anchors[t - 1],
            lattice_seeds[t],
            round,
            "growth",
        )?;
        let mut kept = threshold_indices(&values, cfg.threshold_rel);
        truncate_ranked(&mut kept, &values, cfg.step_cap());
        finish_step(ctx, kept.len());
        if kept.is_empty() {
            return Ok((Vec::new(), Vec::new()));
        }
        pruned = kept.len() < candidates.card();
        cur_flat = gather_flat(&candidates, &kept)?;
        cur_vals = kept.iter().map(|&i| values[i]).collect();
    }

    // final pass: if the last reconstruction already ran on exactly the
    // kept set (nothing was pruned and no anchors remained), reuse it
    if pruned {
        let detected = FrequencySet::from_flat(d, cur_flat, None);
        let dims: Vec<usize> = (0..d).collect();
        let values = reconstruct_on(
            ctx,
            &detected,
            &dims,
            &[],
            lattice_seeds[d],
            round,
            "final",
        )?;
        let mut kept = threshold_indices(&values, cfg.threshold_rel);
        truncate_ranked(&mut kept, &values, cfg.s);
        finish_step(ctx, kept.len());
        let flat = gather_flat(&detected, &kept)?;
        let vals = kept.iter().map(|&i| values[i]).collect();
        Ok((flat, vals))
    } else {
        let mut kept: Vec<usize> = (0..cur_vals.len()).collect();
        truncate_ranked(&mut kept, &cur_vals, cfg.s);
        let dim = d;
        let flat: Vec<i64> = kept
            .iter()
            .flat_map(|&i| cur_flat[i * dim..(i + 1) * dim].iter().copied())
            .collect();
        let vals = kept.iter().map(|&i| cur_vals[i]).collect();
        Ok((flat, vals))
    }
}

/// Intersects the per-round supports and reconstructs once more on the
/// agreed set.
fn consensus(
    ctx: &mut Ctx<'_>,
    rounds: &[(Vec<i64>, Vec<Complex64>)],
) -> Result<(Vec<i64>, Vec<Complex64>)> {
    let d = ctx.cfg.d;
    let mut common: BTreeSet<&[i64]> = rounds[0].0.chunks(d).collect();
    for (flat, _) in &rounds[1..] {
        let next: BTreeSet<&[i64]> = flat.chunks(d).collect();
        common = common.intersection(&next).copied().collect();
    }
    if common.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let flat: Vec<i64> = common.iter().flat_map(|k| k.iter().copied()).collect();
    let set = FrequencySet::from_flat(d, flat, None);
    let dims: Vec<usize> = (0..d).collect();
    let values = reconstruct_on(
        ctx,
        &set,
        &dims,
        &[],
        mix(ctx.cfg.seed, 0xC0A1E5CE),
        ctx.cfg.detection_rounds,
        "consensus",
    )?;
    let mut kept = threshold_indices(&values, ctx.cfg.threshold_rel);
    truncate_ranked(&mut kept, &values, ctx.cfg.s);
    finish_step(ctx, kept.len());
    let flat = gather_flat(&set, &kept)?;
    let vals = kept.iter().map(|&i| values[i]).collect();
    Ok((flat, vals))
}

/// Cross product of the current candidates with the next coordinate's 1-D
/// candidates, dropping lowest-ranked entries until it fits the cap.
fn capped_product(
    cur_flat: &[i64],
    cur_dim: usize,
    cur_vals: &[Complex64],
    next_ks: &[i64],
    next_vals: &[Complex64],
    cap: usize,
) -> (Vec<i64>, usize) {
    let mut a = cur_vals.len();
    let mut b = next_vals.len();
    let mut rank_a: Vec<usize> = (0..a).collect();
    let mut rank_b: Vec<usize> = (0..b).collect();
    sort_ranked(&mut rank_a, cur_vals);
    sort_ranked(&mut rank_b, next_vals);
    while a.saturating_mul(b) > cap {
        if a >= b {
            a -= 1;
        } else {
            b -= 1;
        }
    }
    if a == 0 || b == 0 {
        return (Vec::new(), cur_dim + 1);
    }
    let mut keep_a: Vec<usize> = rank_a[..a].to_vec();
    let mut keep_b: Vec<usize> = rank_b[..b].to_vec();
    keep_a.sort_unstable();
    keep_b.sort_unstable();
    let dim = cur_dim + 1;
    let mut flat = Vec::with_capacity(a * b * dim);
    for &i in &keep_a {
        for &j in &keep_b {
            flat.extend_from_slice(&cur_flat[i * cur_dim..(i + 1) * cur_dim]);
            flat.push(next_ks[j]);
        }
    }
    (flat, dim)
}

fn sort_ranked(indices: &mut [usize], values: &[Complex64]) {
    indices.sort_by(|&x, &y| {
        values[y]
            .norm()
            .partial_cmp(&values[x].norm())
            .unwrap()
            .then(x.cmp(&y))
    });
}

/// Indices of coefficients at or above threshold_rel times the largest
/// modulus, in canonical (lexicographic) order.
fn threshold_indices(values: &[Complex64], rel: f64) -> Vec<usize> {
    let max = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let cut = rel * max;
    (0..values.len()).filter(|&i| values[i].norm() >= cut).collect()
}

/// Keeps the `cap` largest-modulus indices, ties broken by canonical
/// order, and restores canonical order among the survivors.
fn truncate_ranked(indices: &mut Vec<usize>, values: &[Complex64], cap: usize) {
    if indices.len() <= cap {
        return;
    }
    indices.sort_by(|&x, &y| {
        values[y]
            .norm()
            .partial_cmp(&values[x].norm())
            .unwrap()
            .then(x.cmp(&y))
    });
    indices.truncate(cap);
    indices.sort_unstable();
}

fn gather_flat(set: &FrequencySet, indices: &[usize]) -> Result<Vec<i64>> {
    let data = set.flat()?;
    let d = set.dim();
    Ok(indices
        .iter()
        .flat_map(|&i| data[i * d..(i + 1) * d].iter().copied())
        .collect())
}

/// Fills in the `kept` count of the step pushed by `reconstruct_on`.
fn finish_step(ctx: &mut Ctx<'_>, kept: usize) {
    if let Some(step) = ctx.steps.last_mut() {
        step.kept = kept;
    }
}

/// Builds a reconstructing lattice for `set`, samples the function on its
/// nodes embedded at `dims` with the remaining coordinates anchored, and
/// returns the reconstructed coefficients in canonical order.
fn reconstruct_on(
    ctx: &mut Ctx<'_>,
    set: &FrequencySet,
    dims: &[usize],
    anchor: &[f64],
    mseed: u64,
    round: usize,
    stage: &str,
) -> Result<Vec<Complex64>> {
    let wrap = |e: Error| Error::Detection {
        step: format!("{stage} on coordinates {dims:?} ({} candidates)", set.card()),
        source: Box::new(e),
    };
    let (values, kind, m_total, samples) = if set.card() <= SINGLE_CARD_LIMIT {
        let schedule = CandidateSchedule::SmoothCoprime {
            min_factor: 2 * ctx.cfg.n as u64,
        };
        let (lat, _) =
            lattice::search_single_with(set, SPARSE_CAP_FACTOR, schedule).map_err(wrap)?;
        let samples = sample_anchored(ctx, &lat, dims, anchor)?;
        let n = samples.len() as u128;
        let coeffs = tfft::reconstruct(&samples, set, &lat).map_err(wrap)?;
        (coeffs.values().to_vec(), "single", lat.m() as u128, n)
    } else {
        let mlat =
            lattice::search_multiple(set, MULTI_C, MULTI_N, MULTI_DELTA, mseed).map_err(wrap)?;
        let mut all = Vec::with_capacity(mlat.components().len());
        for comp in mlat.components() {
            all.push(sample_anchored(ctx, comp, dims, anchor)?);
        }
        let n: u128 = all.iter().map(|s| s.len() as u128).sum();
        let coeffs =
            tfft::reconstruct_multiple_from_samples(&all, set, &mlat).map_err(wrap)?;
        (coeffs.values().to_vec(), "multiple", mlat.total_m(), n)
    };
    ctx.total_samples += samples;
    ctx.steps.push(StepReport {
        round,
        stage: stage.to_string(),
        dims: dims.to_vec(),
        candidates: set.card(),
        kept: 0,
        lattice: kind.to_string(),
        m_total,
        samples,
    });
    Ok(values)
}

/// Samples f(psi(x)) over lattice nodes embedded into T^d: node coordinate
/// i lands at dims[i], every other coordinate is frozen at its anchor.
fn sample_anchored(
    ctx: &Ctx<'_>,
    lat: &Rank1Lattice,
    dims: &[usize],
    anchor: &[f64],
) -> Result<Vec<Complex64>> {
    let d = ctx.cfg.d;
    debug_assert_eq!(dims.len() + anchor.len(), d);
    debug_assert_eq!(dims.len(), lat.dim());
    let m = lat.m();
    if m > tfft::MAX_FFT_LEN {
        return Err(Error::ResourceLimit {
            what: "FFT length",
            needed: m as u128,
            cap: tfft::MAX_FFT_LEN as u128,
        });
    }
    let mut template = vec![0f64; d];
    let mut ai = 0;
    for (coord, slot) in template.iter_mut().enumerate() {
        if !dims.contains(&coord) {
            *slot = anchor[ai];
            ai += 1;
        }
    }
    let z = lat.z();
    let transform = ctx.transform;
    let sampler = ctx.sampler;
    let fill = |start: usize, buf: &mut [Complex64]| {
        let mut x = template.clone();
        let mut y = vec![0f64; d];
        for (off, slot) in buf.iter_mut().enumerate() {
            let j = (start + off) as u64;
            for (i, &coord) in dims.iter().enumerate() {
                x[coord] = torus_coord(mulmod(j, z[i], m), m);
            }
            transform.forward_into(&x, &mut y);
            *slot = sampler.call(&y);
        }
    };
    let samples = if sampler.concurrency_safe() {
        par::fill_chunks(m as usize, par::NODE_CHUNK, fill)
    } else {
        par::fill_chunks_seq(m as usize, par::NODE_CHUNK, fill)
    };
    if let Some(i) = samples
        .iter()
        .position(|v| !(v.re.is_finite() && v.im.is_finite()))
    {
        return Err(Error::NonFiniteSample { index: i });
    }
    Ok(samples)
}
