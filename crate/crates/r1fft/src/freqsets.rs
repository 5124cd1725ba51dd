//! Finite frequency index sets I subset Z^d: hyperbolic crosses, lp balls,
//! and full grids, plus difference sets and weight functions.
//!
//! Materialized sets store their frequencies as one flat `Vec<i64>` with
//! stride `dim`, sorted lexicographically; that order is the canonical order
//! every other module relies on. Full grids above the materialization cap
//! stay descriptor-only and answer membership queries without storage.

use crate::error::{Error, Result};
use crate::par;
use serde::de::Error as _;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Enumeration refuses to materialize more frequencies than this unless a
/// caller raises the cap explicitly.
pub const DEFAULT_CARD_CAP: usize = 100_000_000;

/// Full grids at most this large are materialized; larger ones stay lazy.
pub const GRID_MATERIALIZE_CAP: usize = 1_000_000;

mod serde_p {
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = f64;
            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }
            fn visit_u64<E>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_i64<E>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" | "Inf" | "infinity" | "Infinity" => Ok(f64::INFINITY),
                    _ => v.parse().map_err(E::custom),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Shape parameters of a structured frequency set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SetDescriptor {
    /// Hyperbolic cross: prod_j max(1, |k_j|)^beta <= N.
    Hc {
        #[serde(rename = "N")]
        n: f64,
        beta: f64,
    },
    /// lp ball: ||k||_p <= N, with p in [1, inf].
    Lp {
        #[serde(rename = "N")]
        n: f64,
        #[serde(with = "serde_p")]
        p: f64,
    },
    /// Full grid: |k_j| <= N in every coordinate.
    Grid {
        #[serde(rename = "N")]
        n: i64,
    },
}

impl SetDescriptor {
    pub fn hc(n: f64, beta: f64) -> Result<Self> {
        if !(n.is_finite() && n >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "hyperbolic cross needs N >= 1, got {n}"
            )));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "hyperbolic cross needs beta > 0, got {beta}"
            )));
        }
        Ok(SetDescriptor::Hc { n, beta })
    }

    pub fn lp(n: f64, p: f64) -> Result<Self> {
        if !(n.is_finite() && n >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lp ball needs N >= 1, got {n}"
            )));
        }
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lp ball needs p >= 1 (or infinity), got {p}"
            )));
        }
        Ok(SetDescriptor::Lp { n, p })
    }

    pub fn grid(n: i64) -> Result<Self> {
        if n < 0 {
            return Err(Error::InvalidParameter(format!(
                "grid needs N >= 0, got {n}"
            )));
        }
        Ok(SetDescriptor::Grid { n })
    }

    /// Membership test straight from the shape parameters.
    pub fn contains(&self, k: &[i64]) -> bool {
        match *self {
            SetDescriptor::Hc { n, beta } => {
                let mut prod = 1f64;
                for &kj in k {
                    prod *= (kj.unsigned_abs().max(1)) as f64;
                }
                pow_beta(prod, beta) <= n
            }
            SetDescriptor::Lp { n, p } => {
                if p.is_infinite() {
                    k.iter().all(|&kj| (kj.unsigned_abs() as f64) <= n)
                } else {
                    let sum: f64 = k.iter().map(|&kj| (kj.unsigned_abs() as f64).powf(p)).sum();
                    sum <= n.powf(p)
                }
            }
            SetDescriptor::Grid { n } => k.iter().all(|&kj| kj.abs() <= n),
        }
    }

    /// Materializes the set in dimension `d` (grids above the cap stay lazy).
    pub fn enumerate(&self, d: usize) -> Result<FrequencySet> {
        self.enumerate_capped(d, DEFAULT_CARD_CAP)
    }

    pub fn enumerate_capped(&self, d: usize, cap: usize) -> Result<FrequencySet> {
        match *self {
            SetDescriptor::Hc { n, beta } => FrequencySet::hyperbolic_cross_capped(d, n, beta, cap),
            SetDescriptor::Lp { n, p } => FrequencySet::lp_ball_capped(d, n, p, cap),
            SetDescriptor::Grid { n } => FrequencySet::full_grid(d, n),
        }
    }
}

impl fmt::Display for SetDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SetDescriptor::Hc { n, beta } => write!(f, "hc(N={n},beta={beta})"),
            SetDescriptor::Lp { n, p } => {
                if p.is_infinite() {
                    write!(f, "lp(N={n},p=inf)")
                } else {
                    write!(f, "lp(N={n},p={p})")
                }
            }
            SetDescriptor::Grid { n } => write!(f, "grid(N={n})"),
        }
    }
}

/// Weight omega(k) used for weighted Wiener norms and smoothing radii.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightFunction {
    /// omega(k) = prod_j max(1, |k_j|)^beta; omega(0) = 1, omega >= 1.
    Hc { beta: f64 },
    /// omega(k) = ||k||_p; note omega(0) = 0 for this family.
    Lp {
        #[serde(with = "serde_p")]
        p: f64,
    },
}

impl WeightFunction {
    pub fn hc(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "hc weight needs beta >= 0, got {beta}"
            )));
        }
        Ok(WeightFunction::Hc { beta })
    }

    pub fn lp(p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lp weight needs p >= 1 (or infinity), got {p}"
            )));
        }
        Ok(WeightFunction::Lp { p })
    }

    pub fn weight(&self, k: &[i64]) -> f64 {
        match *self {
            WeightFunction::Hc { beta } => {
                let mut prod = 1f64;
                for &kj in k {
                    prod *= (kj.unsigned_abs().max(1)) as f64;
                }
                pow_beta(prod, beta)
            }
            WeightFunction::Lp { p } => lp_norm(k, p),
        }
    }
}

/// ||k||_p for p in [1, inf].
pub fn lp_norm(k: &[i64], p: f64) -> f64 {
    if p.is_infinite() {
        return k.iter().map(|&kj| kj.unsigned_abs() as f64).fold(0.0, f64::max);
    }
    if p == 1.0 {
        return k.iter().map(|&kj| kj.unsigned_abs() as f64).sum();
    }
    if p == 2.0 {
        let s: f64 = k.iter().map(|&kj| {
            let a = kj.unsigned_abs() as f64;
            a * a
        }).sum();
        return s.sqrt();
    }
    let s: f64 = k.iter().map(|&kj| (kj.unsigned_abs() as f64).powf(p)).sum();
    s.powf(1.0 / p)
}

fn pow_beta(q: f64, beta: f64) -> f64 {
    if beta == 1.0 {
        q
    } else if beta == 2.0 {
        q * q
    } else if beta == 0.5 {
        q.sqrt()
    } else {
        q.powf(beta)
    }
}

/// Finite subset of Z^d in canonical (lexicographic) order.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencySet {
    dim: usize,
    /// Flat frequency storage, stride `dim`; `None` for lazy grids.
    data: Option<Vec<i64>>,
    descriptor: Option<SetDescriptor>,
    card: usize,
    max_abs: i64,
}

impl FrequencySet {
    pub fn hyperbolic_cross(d: usize, n: f64, beta: f64) -> Result<Self> {
        Self::hyperbolic_cross_capped(d, n, beta, DEFAULT_CARD_CAP)
    }

    pub fn hyperbolic_cross_capped(d: usize, n: f64, beta: f64, cap: usize) -> Result<Self> {
        let descriptor = SetDescriptor::hc(n, beta)?;
        check_dim(d)?;
        // Integer reformulation: prod max(1,|k_j|) <= qmax with qmax the
        // largest integer whose beta power stays at or below N.
        let mut qmax = n.powf(1.0 / beta).floor().max(1.0) as u128;
        while pow_beta((qmax + 1) as f64, beta) <= n {
            qmax += 1;
        }
        while qmax > 1 && pow_beta(qmax as f64, beta) > n {
            qmax -= 1;
        }
        let mut data = Vec::new();
        let mut prefix = vec![0i64; d];
        enum_hc(&mut data, &mut prefix, 0, d, 1, qmax, cap)?;
        Ok(Self::from_sorted_flat(d, data, Some(descriptor)))
    }

    pub fn lp_ball(d: usize, n: f64, p: f64) -> Result<Self> {
        Self::lp_ball_capped(d, n, p, DEFAULT_CARD_CAP)
    }

    pub fn lp_ball_capped(d: usize, n: f64, p: f64, cap: usize) -> Result<Self> {
        let descriptor = SetDescriptor::lp(n, p)?;
        check_dim(d)?;
        let mut data = Vec::new();
        let mut prefix = vec![0i64; d];
        if p.is_infinite() {
            let bound = n.floor() as i64;
            enum_grid(&mut data, &mut prefix, 0, d, &vec![bound; d], cap)?;
        } else {
            let int_budget = if p.fract() == 0.0 && p <= 60.0 && n.fract() == 0.0 {
                (n as i128).checked_pow(p as u32)
            } else {
                None
            };
            match int_budget {
                Some(b) => enum_lp_int(&mut data, &mut prefix, 0, d, b, p as u32, cap)?,
                None => enum_lp_float(&mut data, &mut prefix, 0, d, 0.0, n.powf(p), p, cap)?,
            }
        }
        Ok(Self::from_sorted_flat(d, data, Some(descriptor)))
    }

    /// Full grid [-n, n]^d; stays descriptor-only above
    /// [`GRID_MATERIALIZE_CAP`].
    pub fn full_grid(d: usize, n: i64) -> Result<Self> {
        let descriptor = SetDescriptor::grid(n)?;
        check_dim(d)?;
        let side = 2u128 * n as u128 + 1;
        let mut card: u128 = 1;
        for _ in 0..d {
            card = card.checked_mul(side).ok_or(Error::ResourceLimit {
                what: "full grid cardinality",
                needed: u128::MAX,
                cap: usize::MAX as u128,
            })?;
        }
        if card > usize::MAX as u128 {
            return Err(Error::ResourceLimit {
                what: "full grid cardinality",
                needed: card,
                cap: usize::MAX as u128,
            });
        }
        let card = card as usize;
        if card > GRID_MATERIALIZE_CAP {
            return Ok(FrequencySet {
                dim: d,
                data: None,
                descriptor: Some(descriptor),
                card,
                max_abs: n,
            });
        }
        let mut data = Vec::with_capacity(card * d);
        let mut prefix = vec![0i64; d];
        enum_grid(&mut data, &mut prefix, 0, d, &vec![n; d], usize::MAX)?;
        Ok(Self::from_sorted_flat(d, data, Some(descriptor)))
    }

    /// Builds a set from explicit frequencies; sorts into canonical order and
    /// removes duplicates.
    pub fn from_freqs(dim: usize, freqs: Vec<Vec<i64>>) -> Result<Self> {
        check_dim(dim)?;
        if freqs.is_empty() {
            return Err(Error::InvalidParameter(
                "frequency set must not be empty".into(),
            ));
        }
        let mut flat = Vec::with_capacity(freqs.len() * dim);
        for k in &freqs {
            if k.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: k.len(),
                });
            }
            flat.extend_from_slice(k);
        }
        Ok(Self::from_flat(dim, flat, None))
    }

    /// Builds from flat storage (stride `dim`), sorting and deduplicating.
    pub(crate) fn from_flat(dim: usize, flat: Vec<i64>, descriptor: Option<SetDescriptor>) -> Self {
        debug_assert_eq!(flat.len() % dim, 0);
        let card = flat.len() / dim;
        let mut order: Vec<u32> = (0..card as u32).collect();
        order.sort_unstable_by(|&a, &b| {
            let ka = &flat[a as usize * dim..(a as usize + 1) * dim];
            let kb = &flat[b as usize * dim..(b as usize + 1) * dim];
            ka.cmp(kb)
        });
        let mut data = Vec::with_capacity(flat.len());
        for (pos, &i) in order.iter().enumerate() {
            let k = &flat[i as usize * dim..(i as usize + 1) * dim];
            if pos > 0 && data[data.len() - dim..] == *k {
                continue;
            }
            data.extend_from_slice(k);
        }
        Self::from_sorted_flat(dim, data, descriptor)
    }

    fn from_sorted_flat(dim: usize, data: Vec<i64>, descriptor: Option<SetDescriptor>) -> Self {
        let card = data.len() / dim;
        let max_abs = data.iter().map(|v| v.abs()).max().unwrap_or(0);
        FrequencySet {
            dim,
            data: Some(data),
            descriptor,
            card,
            max_abs,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn card(&self) -> usize {
        self.card
    }

    pub fn is_lazy(&self) -> bool {
        self.data.is_none()
    }

    pub fn descriptor(&self) -> Option<&SetDescriptor> {
        self.descriptor.as_ref()
    }

    /// Largest absolute coordinate over all frequencies.
    pub fn max_abs(&self) -> i64 {
        self.max_abs
    }

    /// Flat frequency storage; errors on lazy sets.
    pub(crate) fn flat(&self) -> Result<&[i64]> {
        self.data.as_deref().ok_or(Error::LazySet)
    }

    /// The i-th frequency in canonical order; panics out of range, errors on
    /// lazy sets.
    pub fn freq(&self, i: usize) -> Result<&[i64]> {
        let data = self.flat()?;
        Ok(&data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn iter(&self) -> Result<impl Iterator<Item = &[i64]>> {
        Ok(self.flat()?.chunks_exact(self.dim))
    }

    pub fn to_vecs(&self) -> Result<Vec<Vec<i64>>> {
        Ok(self.iter()?.map(|k| k.to_vec()).collect())
    }

    /// Membership: binary search on materialized sets, shape test on lazy
    /// ones.
    pub fn contains(&self, k: &[i64]) -> bool {
        if k.len() != self.dim {
            return false;
        }
        match &self.data {
            Some(data) => {
                let card = self.card;
                let dim = self.dim;
                let mut lo = 0usize;
                let mut hi = card;
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    match data[mid * dim..(mid + 1) * dim].cmp(k) {
                        std::cmp::Ordering::Less => lo = mid + 1,
                        std::cmp::Ordering::Greater => hi = mid,
                        std::cmp::Ordering::Equal => return true,
                    }
                }
                false
            }
            None => self
                .descriptor
                .as_ref()
                .is_some_and(|desc| desc.contains(k)),
        }
    }

    /// Index of `k` in canonical order, if present.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        let data = self.data.as_deref()?;
        if k.len() != self.dim {
            return None;
        }
        let dim = self.dim;
        let mut lo = 0usize;
        let mut hi = self.card;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            match data[mid * dim..(mid + 1) * dim].cmp(k) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// Difference set D(I) = { k - k' : k, k' in I }, in canonical order.
    pub fn difference_set(&self) -> Result<FrequencySet> {
        self.difference_set_capped(DEFAULT_CARD_CAP)
    }

    pub fn difference_set_capped(&self, cap: usize) -> Result<FrequencySet> {
        let data = self.flat()?;
        let dim = self.dim;
        let card = self.card;
        let pairs = (card as u128) * (card as u128);
        if pairs > cap as u128 {
            return Err(Error::ResourceLimit {
                what: "difference set pair count",
                needed: pairs,
                cap: cap as u128,
            });
        }
        // Coordinates of differences fit in [-2*max_abs, 2*max_abs]; pack a
        // whole difference into one u128 when the bit budget allows, so the
        // dedup is a flat integer sort.
        let span = 4 * self.max_abs as u128 + 1;
        let bits = 128 - span.leading_zeros();
        if (bits as usize) * dim <= 128 {
            let offset = 2 * self.max_abs;
            let mut packed = par::map_indexed(card, |i| {
                let ki = &data[i * dim..(i + 1) * dim];
                let mut out = Vec::with_capacity(card);
                for j in 0..card {
                    let kj = &data[j * dim..(j + 1) * dim];
                    let mut key: u128 = 0;
                    for t in 0..dim {
                        key = (key << bits) | ((ki[t] - kj[t] + offset) as u128);
                    }
                    out.push(key);
                }
                out
            })
            .into_iter()
            .flatten()
            .collect::<Vec<u128>>();
            par::sort(&mut packed);
            packed.dedup();
            let mask = (1u128 << bits) - 1;
            let mut flat = Vec::with_capacity(packed.len() * dim);
            for key in packed {
                let start = flat.len();
                flat.resize(start + dim, 0);
                let mut key = key;
                for t in (0..dim).rev() {
                    flat[start + t] = (key & mask) as i64 - offset;
                    key >>= bits;
                }
            }
            Ok(Self::from_flat(dim, flat, None))
        } else {
            let mut seen = std::collections::BTreeSet::new();
            for i in 0..card {
                let ki = &data[i * dim..(i + 1) * dim];
                for j in 0..card {
                    let kj = &data[j * dim..(j + 1) * dim];
                    let diff: Vec<i64> = ki.iter().zip(kj).map(|(a, b)| a - b).collect();
                    seen.insert(diff);
                }
            }
            let mut flat = Vec::with_capacity(seen.len() * dim);
            for diff in seen {
                flat.extend_from_slice(&diff);
            }
            Ok(Self::from_flat(dim, flat, None))
        }
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "frequency sets need dimension >= 1".into(),
        ));
    }
    Ok(())
}

fn push_checked(data: &mut Vec<i64>, prefix: &[i64], d: usize, cap: usize) -> Result<()> {
    if data.len() / d >= cap {
        return Err(Error::ResourceLimit {
            what: "frequency set cardinality",
            needed: data.len() as u128 / d as u128 + 1,
            cap: cap as u128,
        });
    }
    data.extend_from_slice(prefix);
    Ok(())
}

fn enum_hc(
    data: &mut Vec<i64>,
    prefix: &mut [i64],
    j: usize,
    d: usize,
    prod: u128,
    qmax: u128,
    cap: usize,
) -> Result<()> {
    if j == d {
        return push_checked(data, prefix, d, cap);
    }
    let bound = (qmax / prod) as i64;
    for k in -bound..=bound {
        prefix[j] = k;
        let next = prod * k.unsigned_abs().max(1) as u128;
        enum_hc(data, prefix, j + 1, d, next, qmax, cap)?;
    }
    Ok(())
}

fn enum_grid(
    data: &mut Vec<i64>,
    prefix: &mut [i64],
    j: usize,
    d: usize,
    bounds: &[i64],
    cap: usize,
) -> Result<()> {
    if j == d {
        return push_checked(data, prefix, d, cap);
    }
    for k in -bounds[j]..=bounds[j] {
        prefix[j] = k;
        enum_grid(data, prefix, j + 1, d, bounds, cap)?;
    }
    Ok(())
}

fn int_root(rem: i128, p: u32) -> i64 {
    if rem <= 0 {
        return 0;
    }
    let mut m = (rem as f64).powf(1.0 / f64::from(p)).floor() as i64;
    loop {
        match (m as i128 + 1).checked_pow(p) {
            Some(v) if v <= rem => m += 1,
            _ => break,
        }
    }
    while m > 0 && (m as i128).checked_pow(p).map_or(true, |v| v > rem) {
        m -= 1;
    }
    m
}

fn enum_lp_int(
    data: &mut Vec<i64>,
    prefix: &mut [i64],
    j: usize,
    d: usize,
    rem: i128,
    p: u32,
    cap: usize,
) -> Result<()> {
    if j == d {
        return push_checked(data, prefix, d, cap);
    }
    let bound = int_root(rem, p);
    for k in -bound..=bound {
        prefix[j] = k;
        let used = (k.unsigned_abs() as i128).pow(p);
        enum_lp_int(data, prefix, j + 1, d, rem - used, p, cap)?;
    }
    Ok(())
}

fn enum_lp_float(
    data: &mut Vec<i64>,
    prefix: &mut [i64],
    j: usize,
    d: usize,
    sum: f64,
    budget: f64,
    p: f64,
    cap: usize,
) -> Result<()> {
    if j == d {
        return push_checked(data, prefix, d, cap);
    }
    let mut bound = (budget - sum).max(0.0).powf(1.0 / p).floor() as i64;
    while sum + ((bound + 1) as f64).powf(p) <= budget {
        bound += 1;
    }
    for k in -bound..=bound {
        let used = (k.unsigned_abs() as f64).powf(p);
        if sum + used > budget {
            continue;
        }
        prefix[j] = k;
        enum_lp_float(data, prefix, j + 1, d, sum + used, budget, p, cap)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FreqSetSer<'a> {
    dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    descriptor: Option<&'a SetDescriptor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    freqs: Option<Vec<&'a [i64]>>,
}

impl Serialize for FrequencySet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let freqs = self
            .data
            .as_deref()
            .map(|data| data.chunks_exact(self.dim).collect());
        FreqSetSer {
            dim: self.dim,
            descriptor: self.descriptor.as_ref(),
            freqs,
        }
        .serialize(s)
    }
}

#[derive(Deserialize)]
struct FreqSetDe {
    dim: usize,
    #[serde(default)]
    descriptor: Option<SetDescriptor>,
    #[serde(default)]
    freqs: Option<Vec<Vec<i64>>>,
}

impl<'de> Deserialize<'de> for FrequencySet {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = FreqSetDe::deserialize(de)?;
        match (raw.freqs, raw.descriptor) {
            (Some(freqs), desc) => {
                let mut set = FrequencySet::from_freqs(raw.dim, freqs).map_err(D::Error::custom)?;
                set.descriptor = desc;
                Ok(set)
            }
            (None, Some(desc)) => desc.enumerate(raw.dim).map_err(D::Error::custom),
            (None, None) => Err(D::Error::custom(
                "frequency set needs either freqs or a descriptor",
            )),
        }
    }
}
