//! Rank-1 lattices, reconstruction tests, and lattice search.
//!
//! A rank-1 lattice Lambda(z, M) consists of the M torus nodes
//! x_j = frac(j z / M), shifted into [-1/2, 1/2)^d. It reconstructs a
//! frequency set I exactly when the residues k . z mod M are pairwise
//! distinct over I; equivalently, no nonzero element of the difference set
//! D(I) lies in the dual lattice { t : t . z = 0 mod M }.

use crate::error::{Error, Result};
use crate::freqsets::FrequencySet;
use crate::par;
use crate::transforms::TransformD;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Serialize};

/// Default cap factor for [`search_single`]: give up once M would exceed
/// cap_factor * |I|^2.
pub const DEFAULT_CAP_FACTOR: f64 = 4.0;

/// Random draws per CBC component before a candidate M is abandoned.
const CBC_TRIES_PER_DIM: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rank1Lattice {
    /// Generating vector, stored reduced: 0 <= z_i < m.
    z: Vec<u64>,
    m: u64,
}

#[derive(Serialize)]
struct LatticeSer<'a> {
    z: &'a [u64],
    #[serde(rename = "M")]
    m: u64,
}

#[derive(Deserialize)]
struct LatticeDe {
    z: Vec<i64>,
    #[serde(rename = "M")]
    m: u64,
}

impl Serialize for Rank1Lattice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LatticeSer { z: &self.z, m: self.m }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rank1Lattice {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = LatticeDe::deserialize(de)?;
        Rank1Lattice::new(raw.z, raw.m).map_err(D::Error::custom)
    }
}

impl Rank1Lattice {
    /// Components of `z` are reduced mod `m`; `m >= 1`.
    pub fn new(z: Vec<i64>, m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("lattice size M must be >= 1".into()));
        }
        if z.is_empty() {
            return Err(Error::InvalidParameter(
                "generating vector must have dimension >= 1".into(),
            ));
        }
        let mi = m as i128;
        let z = z
            .into_iter()
            .map(|v| (((v as i128 % mi) + mi) % mi) as u64)
            .collect();
        Ok(Rank1Lattice { z, m })
    }

    pub(crate) fn from_reduced(z: Vec<u64>, m: u64) -> Self {
        debug_assert!(m >= 1 && z.iter().all(|&v| v < m));
        Rank1Lattice { z, m }
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn z(&self) -> &[u64] {
        &self.z
    }

    /// j-th node, coordinates in [-1/2, 1/2).
    pub fn node(&self, j: u64) -> Vec<f64> {
        self.z
            .iter()
            .map(|&zi| torus_coord(mulmod(j % self.m, zi, self.m), self.m))
            .collect()
    }

    /// All M nodes. Convenience for small lattices; the transform pipeline
    /// streams nodes instead of materializing them.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        par::map_indexed(self.m as usize, |j| self.node(j as u64))
    }

    /// k . z mod M, in [0, M).
    pub fn residue(&self, k: &[i64]) -> u64 {
        let mi = self.m as i128;
        let mut dot: i128 = 0;
        for (&ki, &zi) in k.iter().zip(&self.z) {
            dot += ki as i128 * zi as i128;
        }
        (((dot % mi) + mi) % mi) as u64
    }

    /// Whether t lies in the dual lattice: t . z = 0 mod M.
    pub fn dual_contains(&self, t: &[i64]) -> bool {
        self.residue(t) == 0
    }

    /// Residues of every frequency of `set`, in canonical order.
    pub fn residues(&self, set: &FrequencySet) -> Result<Vec<u64>> {
        self.check_dim(set.dim())?;
        let data = set.flat()?;
        let d = self.dim();
        Ok(par::map_indexed(set.card(), |i| {
            self.residue(&data[i * d..(i + 1) * d])
        }))
    }

    /// True when the residues of `set` are pairwise distinct, i.e. every
    /// function with spectrum in `set` is exactly recoverable from samples.
    pub fn is_reconstructing(&self, set: &FrequencySet) -> Result<bool> {
        if set.card() as u128 > self.m as u128 {
            return Ok(false);
        }
        let mut res = self.residues(set)?;
        par::sort(&mut res);
        Ok(!par::has_adjacent_dup(&res))
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

#[inline]
pub(crate) fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
pub(crate) fn torus_coord(r: u64, m: u64) -> f64 {
    let t = r as f64 / m as f64;
    if t >= 0.5 {
        t - 1.0
    } else {
        t
    }
}

/// Rank-1 lattice pushed through a coordinate map: node j lives at
/// psi(x_j) in R^d.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformedLattice {
    base: Rank1Lattice,
    transform: TransformD,
}

impl TransformedLattice {
    pub fn new(base: Rank1Lattice, transform: TransformD) -> Result<Self> {
        if base.dim() != transform.dim() {
            return Err(Error::DimensionMismatch {
                expected: transform.dim(),
                got: base.dim(),
            });
        }
        Ok(TransformedLattice { base, transform })
    }

    pub fn base(&self) -> &Rank1Lattice {
        &self.base
    }

    pub fn transform(&self) -> &TransformD {
        &self.transform
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn node(&self, j: u64) -> Vec<f64> {
        let x = self.base.node(j);
        let mut y = vec![0.0; x.len()];
        self.transform.forward_into(&x, &mut y);
        y
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        par::map_indexed(self.base.m() as usize, |j| self.node(j as u64))
    }
}

/// A family of rank-1 lattices covering a frequency set: every frequency is
/// alias-free (its residue unique) in at least one component.
#[derive(Clone, Debug, PartialEq)]
pub struct MultipleRank1Lattice {
    components: Vec<Rank1Lattice>,
    /// assignment[i] = components in which frequency i is alias-free.
    assignment: Vec<Vec<u32>>,
}

impl MultipleRank1Lattice {
    pub fn new(components: Vec<Rank1Lattice>, assignment: Vec<Vec<u32>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "multiple lattice needs at least one component".into(),
            ));
        }
        let d = components[0].dim();
        if components.iter().any(|c| c.dim() != d) {
            return Err(Error::InvalidParameter(
                "all lattice components must share one dimension".into(),
            ));
        }
        let n = components.len() as u32;
        if assignment.iter().flatten().any(|&c| c >= n) {
            return Err(Error::InvalidParameter(
                "assignment references a component that does not exist".into(),
            ));
        }
        Ok(MultipleRank1Lattice {
            components,
            assignment,
        })
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn components(&self) -> &[Rank1Lattice] {
        &self.components
    }

    /// Per-frequency alias-free component lists, canonical set order.
    pub fn assignment(&self) -> &[Vec<u32>] {
        &self.assignment
    }

    pub fn covers_all(&self) -> bool {
        self.assignment.iter().all(|a| !a.is_empty())
    }

    pub fn uncovered_indices(&self) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_empty())
            .map(|(i, _)| i)
            .collect()
    }

    /// Total number of sampling nodes, sum of the component sizes.
    pub fn total_m(&self) -> u128 {
        self.components.iter().map(|c| c.m() as u128).sum()
    }

    /// Recomputes the alias-free table for `set` by counting residues in
    /// each component.
    pub fn verify(&self, set: &FrequencySet) -> Result<Vec<Vec<u32>>> {
        let card = set.card();
        let mut table = vec![Vec::new(); card];
        for (ci, comp) in self.components.iter().enumerate() {
            for i in alias_free_indices(comp, set)? {
                table[i].push(ci as u32);
            }
        }
        Ok(table)
    }
}

impl Serialize for MultipleRank1Lattice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("MultipleRank1Lattice", 2)?;
        st.serialize_field("components", &self.components)?;
        let map: std::collections::BTreeMap<String, &Vec<u32>> = self
            .assignment
            .iter()
            .enumerate()
            .map(|(i, a)| (i.to_string(), a))
            .collect();
        st.serialize_field("assignment", &map)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for MultipleRank1Lattice {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            components: Vec<Rank1Lattice>,
            assignment: std::collections::BTreeMap<String, Vec<u32>>,
        }
        let raw = Raw::deserialize(de)?;
        let mut assignment = vec![Vec::new(); raw.assignment.len()];
        for (key, comps) in raw.assignment {
            let i: usize = key
                .parse()
                .map_err(|_| D::Error::custom(format!("bad assignment index {key:?}")))?;
            if i >= assignment.len() {
                return Err(D::Error::custom(
                    "assignment indices must be dense 0..card",
                ));
            }
            assignment[i] = comps;
        }
        MultipleRank1Lattice::new(raw.components, assignment).map_err(D::Error::custom)
    }
}

/// Indices (canonical order) of frequencies whose residue is unique in
/// `comp`.
fn alias_free_indices(comp: &Rank1Lattice, set: &FrequencySet) -> Result<Vec<usize>> {
    let res = comp.residues(set)?;
    let mut order: Vec<u32> = (0..set.card() as u32).collect();
    order.sort_unstable_by_key(|&i| res[i as usize]);
    let mut out = Vec::new();
    let n = order.len();
    for (pos, &i) in order.iter().enumerate() {
        let r = res[i as usize];
        let prev_same = pos > 0 && res[order[pos - 1] as usize] == r;
        let next_same = pos + 1 < n && res[order[pos + 1] as usize] == r;
        if !prev_same && !next_same {
            out.push(i as usize);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// How [`search_single_with`] walks candidate lattice sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidateSchedule {
    /// Primes: the first 8 at or above |I|, then geometric 1.3x jumps.
    Primes,
    /// Ascending composites whose prime factors lie in (min_factor, 31],
    /// keeping M coprime to every nonzero difference coordinate bounded by
    /// min_factor while staying FFT-friendly. Falls back to [`Primes`] when
    /// no such factor exists.
    SmoothCoprime { min_factor: u64 },
}

/// Counters describing a completed single-lattice search.
#[derive(Clone, Copy, Debug, Default)]
pub struct SearchStats {
    /// Candidate lattice sizes tried (including the accepted one).
    pub candidates_tried: usize,
    /// Random z_j draws over all candidates.
    pub zj_draws: usize,
    /// Accepted M divided by |I|.
    pub m_over_card: f64,
}

/// Deterministic component-by-component search for a reconstructing rank-1
/// lattice, smallest accepted candidate first.
pub fn search_single(set: &FrequencySet, cap_factor: f64) -> Result<Rank1Lattice> {
    search_single_with(set, cap_factor, CandidateSchedule::Primes).map(|(lat, _)| lat)
}

pub fn search_single_with(
    set: &FrequencySet,
    cap_factor: f64,
    schedule: CandidateSchedule,
) -> Result<(Rank1Lattice, SearchStats)> {
    let data = set.flat()?;
    let d = set.dim();
    let card = set.card();
    if !(cap_factor.is_finite() && cap_factor >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cap_factor must be >= 1, got {cap_factor}"
        )));
    }
    let cap = (cap_factor * card as f64 * card as f64).floor() as u128;
    if card == 1 {
        let stats = SearchStats {
            candidates_tried: 0,
            zj_draws: 0,
            m_over_card: 1.0,
        };
        return Ok((Rank1Lattice::from_reduced(vec![0; d], 1), stats));
    }

    // Suffix group ids: levels[j][i] identifies (k_j, ..., k_{d-1}) of the
    // i-th frequency. While choosing z_{j-1}, two frequencies may share a
    // partial residue only if their suffixes from j differ.
    let mut levels: Vec<Vec<u32>> = vec![Vec::new(); d + 1];
    levels[d] = vec![0; card];
    for j in (1..d).rev() {
        levels[j] = build_level(data, d, card, j, &levels[j + 1]);
    }

    let seed = fnv_set_hash(set);
    let mut stats = SearchStats::default();
    for m in candidate_sizes(schedule, card as u64, cap) {
        stats.candidates_tried += 1;
        if let Some(z) = cbc_try(data, d, card, m, seed, &levels, &mut stats) {
            let lat = Rank1Lattice::from_reduced(z, m);
            debug_assert!(lat.is_reconstructing(set).unwrap());
            stats.m_over_card = m as f64 / card as f64;
            return Ok((lat, stats));
        }
    }
    Err(Error::SearchExhausted { card, cap })
}

fn build_level(data: &[i64], d: usize, card: usize, j: usize, next: &[u32]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..card as u32).collect();
    order.sort_unstable_by_key(|&i| (data[i as usize * d + j], next[i as usize]));
    let mut ids = vec![0u32; card];
    let mut current = 0u32;
    for (pos, &i) in order.iter().enumerate() {
        if pos > 0 {
            let prev = order[pos - 1] as usize;
            let same = data[prev * d + j] == data[i as usize * d + j]
                && next[prev] == next[i as usize];
            if !same {
                current += 1;
            }
        }
        ids[i as usize] = current;
    }
    ids
}

/// One CBC pass at a fixed M. Maintains the invariant that the map
/// i -> (partial residue, suffix id) stays injective after every chosen
/// component; at the last component the suffix id is constant, so success
/// means pairwise distinct full residues.
fn cbc_try(
    data: &[i64],
    d: usize,
    card: usize,
    m: u64,
    seed: u64,
    levels: &[Vec<u32>],
    stats: &mut SearchStats,
) -> Option<Vec<u64>> {
    if (card as u128) > m as u128 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ m.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut partial = vec![0u64; card];
    let mut z = Vec::with_capacity(d);
    for j in 0..d {
        let sid = &levels[j + 1];
        let mut accepted = None;
        for _ in 0..CBC_TRIES_PER_DIM {
            stats.zj_draws += 1;
            let zj = if m == 1 { 0 } else { rng.gen_range(1..m) };
            let updated = par::map_indexed(card, |i| {
                let k = data[i * d + j];
                let contrib = signed_mulmod(k, zj, m);
                let r = partial[i] + contrib;
                if r >= m {
                    r - m
                } else {
                    r
                }
            });
            let mut keys = par::map_indexed(card, |i| {
                ((sid[i] as u128) << 64) | updated[i] as u128
            });
            par::sort(&mut keys);
            if !par::has_adjacent_dup(&keys) {
                accepted = Some((zj, updated));
                break;
            }
        }
        let (zj, updated) = accepted?;
        partial = updated;
        z.push(zj);
    }
    Some(z)
}

#[inline]
fn signed_mulmod(k: i64, z: u64, m: u64) -> u64 {
    let mi = m as i128;
    let r = ((k as i128 % mi) + mi) % mi;
    mulmod(r as u64, z, m)
}

/// Random multiple-lattice construction: prime component sizes drawn from
/// [c lambda / 2, c lambda] with lambda = max(|I|, n), components appended
/// until every frequency is alias-free somewhere, at most n * ceil(1/delta)
/// of them.
pub fn search_multiple(
    set: &FrequencySet,
    c_param: f64,
    n_param: usize,
    delta: f64,
    seed: u64,
) -> Result<MultipleRank1Lattice> {
    let card = set.card();
    let d = set.dim();
    set.flat()?;
    if card < 2 {
        return Err(Error::InvalidParameter(
            "multiple-lattice search needs |I| >= 2".into(),
        ));
    }
    if !(c_param.is_finite() && c_param > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "oversampling factor c must exceed 1, got {c_param}"
        )));
    }
    if n_param == 0 {
        return Err(Error::InvalidParameter("component budget n must be >= 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let lambda = card.max(n_param) as f64;
    let lo = (c_param * lambda / 2.0).ceil() as u64;
    let hi = (c_param * lambda).ceil() as u64;
    let rounds = (1.0 / delta).ceil() as usize;
    let budget = n_param.saturating_mul(rounds);

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv_set_hash(set).rotate_left(17));
    let mut components: Vec<Rank1Lattice> = Vec::new();
    let mut assignment: Vec<Vec<u32>> = vec![Vec::new(); card];
    let mut uncovered = card;
    for _ in 0..budget {
        if uncovered == 0 {
            break;
        }
        let m = draw_prime_in(&mut rng, lo, hi);
        let z: Vec<u64> = (0..d).map(|_| rng.gen_range(0..m)).collect();
        let comp = Rank1Lattice::from_reduced(z, m);
        let free = alias_free_indices(&comp, set)?;
        if free.is_empty() {
            continue;
        }
        let ci = components.len() as u32;
        for &i in &free {
            if assignment[i].is_empty() {
                uncovered -= 1;
            }
            assignment[i].push(ci);
        }
        components.push(comp);
    }
    if uncovered > 0 {
        let first = assignment
            .iter()
            .position(|a| a.is_empty())
            .expect("uncovered implies an empty entry");
        return Err(Error::CoverageFailure {
            uncovered,
            card,
            first: set.freq(first)?.to_vec(),
        });
    }
    MultipleRank1Lattice::new(components, assignment)
}

fn draw_prime_in(rng: &mut ChaCha8Rng, lo: u64, hi: u64) -> u64 {
    let start = rng.gen_range(lo..=hi.max(lo));
    let p = next_prime(start);
    if p <= hi {
        p
    } else {
        next_prime(lo)
    }
}

/// Candidate M walker for the single-lattice search.
fn candidate_sizes(
    schedule: CandidateSchedule,
    start: u64,
    cap: u128,
) -> Box<dyn Iterator<Item = u64>> {
    match schedule {
        CandidateSchedule::Primes => Box::new(PrimeSchedule {
            next_at: start.max(2),
            emitted: 0,
            cap,
        }),
        CandidateSchedule::SmoothCoprime { min_factor } => {
            let primes: Vec<u64> = SMALL_FFT_PRIMES
                .iter()
                .copied()
                .filter(|&p| p > min_factor)
                .collect();
            if primes.is_empty() {
                return candidate_sizes(CandidateSchedule::Primes, start, cap);
            }
            Box::new(SmoothSchedule {
                primes,
                window_lo: start.max(2),
                buffer: Vec::new(),
                pos: 0,
                cap,
            })
        }
    }
}

const SMALL_FFT_PRIMES: [u64; 11] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31];

struct PrimeSchedule {
    next_at: u64,
    emitted: usize,
    cap: u128,
}

impl Iterator for PrimeSchedule {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        let p = next_prime(self.next_at);
        if p as u128 > self.cap {
            return None;
        }
        self.emitted += 1;
        // 8 consecutive primes near |I|, then geometric growth
        self.next_at = if self.emitted < 8 {
            p + 1
        } else {
            ((p as f64 * 1.3).ceil() as u64).max(p + 1)
        };
        Some(p)
    }
}

struct SmoothSchedule {
    primes: Vec<u64>,
    window_lo: u64,
    buffer: Vec<u64>,
    pos: usize,
    cap: u128,
}

impl Iterator for SmoothSchedule {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        loop {
            if self.pos < self.buffer.len() {
                let m = self.buffer[self.pos];
                self.pos += 1;
                if m as u128 > self.cap {
                    return None;
                }
                return Some(m);
            }
            if self.window_lo as u128 > self.cap {
                return None;
            }
            let hi = self.window_lo.saturating_mul(4);
            self.buffer = smooth_in(self.window_lo, hi, &self.primes);
            self.pos = 0;
            self.window_lo = hi + 1;
        }
    }
}

/// All products of `primes` (repetition allowed) in [lo, hi], ascending.
fn smooth_in(lo: u64, hi: u64, primes: &[u64]) -> Vec<u64> {
    fn dfs(primes: &[u64], from: usize, acc: u64, lo: u64, hi: u64, out: &mut Vec<u64>) {
        if acc >= lo && acc > 1 {
            out.push(acc);
        }
        for i in from..primes.len() {
            match acc.checked_mul(primes[i]) {
                Some(next) if next <= hi => dfs(primes, i, next, lo, hi, out),
                _ => {}
            }
        }
    }
    let mut out = Vec::new();
    dfs(primes, 0, 1, lo, hi, &mut out);
    out.sort_unstable();
    out
}

/// Deterministic Miller-Rabin for u64.
pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut dd = n - 1;
    let mut r = 0u32;
    while dd % 2 == 0 {
        dd /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, dd, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub(crate) fn next_prime(n: u64) -> u64 {
    if n <= 2 {
        return 2;
    }
    let mut c = if n % 2 == 0 { n + 1 } else { n };
    while !is_prime(c) {
        c += 2;
    }
    c
}

fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// FNV-1a over the set's dimension and frequency data; pins the search's
/// pseudorandom stream to the input set.
fn fnv_set_hash(set: &FrequencySet) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&(set.dim() as u64).to_le_bytes());
    if let Ok(data) = set.flat() {
        for v in data {
            eat(&v.to_le_bytes());
        }
    }
    h
}
