// Flag surfaces, their JSON config mirror, and resolution into executable
// plans. Explicit flags always win over config file values.

use anyhow::{bail, Context, Result};
use clap::Args;
use r1fft::tfft::LqNorm;
use r1fft::{FrequencySet, SmoothingMode, TransformD, TransformKind};
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Args)]
pub struct OutputArgs {
    /// Output path; stdout when omitted
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Emit JSON instead of CSV
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct Table1Args {
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct SetArgs {
    /// Frequency set family
    #[arg(long, value_parser = ["hc", "lp", "grid"], default_value = "hc")]
    pub set: String,
    /// Hyperbolic cross exponent
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// lp ball exponent; "inf" selects the max norm
    #[arg(long, default_value = "2")]
    pub p: String,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Set radius N
    #[arg(long, default_value_t = 4.0)]
    pub n: f64,
}

#[derive(Args)]
pub struct MrlArgs {
    /// Per-component oversampling factor
    #[arg(long = "mrl-c", default_value_t = 30.0)]
    pub mrl_c: f64,
    /// Component budget per coverage round
    #[arg(long = "mrl-n", default_value_t = 30)]
    pub mrl_n: usize,
    /// Coverage failure probability bound
    #[arg(long = "mrl-delta", default_value_t = 0.5)]
    pub mrl_delta: f64,
}

#[derive(Args)]
pub struct LatticeArgs {
    #[command(flatten)]
    pub set: SetArgs,
    #[arg(long, value_parser = ["single", "multiple"], default_value = "single")]
    pub lattice: String,
    #[command(flatten)]
    pub mrl: MrlArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; stdout when omitted (always JSON)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct FreqsetArgs {
    #[command(flatten)]
    pub set: SetArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct CoeffsArgs {
    /// Coordinate change: algebraic, logarithmic, error, or tangens
    #[arg(long, default_value = "tangens")]
    pub transform: String,
    /// Scale parameter of the map
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Tabulate k = -kmax..=kmax
    #[arg(long, default_value_t = 8)]
    pub kmax: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct SparseArgs {
    /// JSON file mirroring these flags; explicit flags win
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Coordinate change: algebraic, logarithmic, error, or tangens
    #[arg(long)]
    pub transform: Option<String>,
    /// Scale parameters: one shared value or one per coordinate
    #[arg(long, value_delimiter = ',')]
    pub c: Option<Vec<f64>>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Search box radius: candidates live in [-n, n]^d
    #[arg(long)]
    pub n: Option<i64>,
    /// Sparsity budget s
    #[arg(long)]
    pub sparsity: Option<usize>,
    /// Relative coefficient threshold
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path; stdout when omitted (always JSON)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// JSON file mirroring these flags; explicit flags win
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Coordinate change: algebraic, logarithmic, error, or tangens
    #[arg(long)]
    pub transform: Option<String>,
    /// Scale parameters: one shared value or one per coordinate
    #[arg(long, value_delimiter = ',')]
    pub c: Option<Vec<f64>>,
    #[arg(long, value_parser = ["hc", "lp", "grid"])]
    pub set: Option<String>,
    /// Hyperbolic cross exponent
    #[arg(long)]
    pub beta: Option<f64>,
    /// lp ball exponent; "inf" selects the max norm
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub d: Option<usize>,
    /// First set radius; default 2
    #[arg(long)]
    pub nmin: Option<u32>,
    /// Last set radius; defaults to 120, 60, 30, 18 for d = 2..5, else 16
    #[arg(long)]
    pub nmax: Option<u32>,
    #[arg(long, value_parser = ["plain", "fejer", "riesz"])]
    pub mode: Option<String>,
    /// Smoothing norm: 1, 2, or inf
    #[arg(long)]
    pub q: Option<String>,
    /// Riesz outer exponent
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Riesz inner exponent
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_parser = ["single", "multiple"])]
    pub lattice: Option<String>,
    #[command(flatten)]
    pub mrl_flags: SweepMrlArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Record wall-clock seconds per row; off keeps output byte-stable
    #[arg(long)]
    pub timings: bool,
    /// Write a log-log plot of the verified rows
    #[arg(long, value_name = "PATH")]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct SweepMrlArgs {
    /// Per-component oversampling factor
    #[arg(long = "mrl-c")]
    pub mrl_c: Option<f64>,
    /// Component budget per coverage round
    #[arg(long = "mrl-n")]
    pub mrl_n: Option<usize>,
    /// Coverage failure probability bound
    #[arg(long = "mrl-delta")]
    pub mrl_delta: Option<f64>,
}

/// Config values that may arrive as a JSON number or a string like "inf".
#[derive(Clone, Deserialize)]
#[serde(untagged)]
pub enum NumOrStr {
    Num(f64),
    Str(String),
}

impl NumOrStr {
    fn into_string(self) -> String {
        match self {
            NumOrStr::Num(v) => v.to_string(),
            NumOrStr::Str(s) => s,
        }
    }
}

#[derive(Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SweepConfig {
    pub transform: Option<String>,
    pub c: Option<Vec<f64>>,
    pub set: Option<String>,
    pub beta: Option<f64>,
    pub p: Option<NumOrStr>,
    pub d: Option<usize>,
    pub nmin: Option<u32>,
    pub nmax: Option<u32>,
    pub mode: Option<String>,
    pub q: Option<NumOrStr>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub lattice: Option<String>,
    pub mrl_c: Option<f64>,
    pub mrl_n: Option<usize>,
    pub mrl_delta: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SparseFileConfig {
    pub transform: Option<String>,
    pub c: Option<Vec<f64>>,
    pub d: Option<usize>,
    pub n: Option<i64>,
    pub sparsity: Option<usize>,
    pub threshold: Option<f64>,
    pub seed: Option<u64>,
}

pub fn load_config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

pub fn parse_p(s: &str) -> Result<f64> {
    match s {
        "inf" | "Inf" | "infinity" | "Infinity" => Ok(f64::INFINITY),
        other => other
            .parse::<f64>()
            .with_context(|| format!("lp exponent {other:?} is not a number or \"inf\"")),
    }
}

#[derive(Clone)]
pub enum SetFamily {
    Hc { beta: f64 },
    Lp { p: f64 },
    Grid,
}

impl SetFamily {
    pub fn from_flags(set: &str, beta: f64, p: &str) -> Result<Self> {
        match set {
            "hc" => Ok(SetFamily::Hc { beta }),
            "lp" => Ok(SetFamily::Lp { p: parse_p(p)? }),
            "grid" => Ok(SetFamily::Grid),
            other => bail!("unknown set family {other:?}"),
        }
    }

    pub fn build(&self, d: usize, n: f64) -> r1fft::Result<FrequencySet> {
        match *self {
            SetFamily::Hc { beta } => FrequencySet::hyperbolic_cross(d, n, beta),
            SetFamily::Lp { p } => FrequencySet::lp_ball(d, n, p),
            SetFamily::Grid => FrequencySet::full_grid(d, n as i64),
        }
    }

    /// Descriptor text, radius, and beta/p for rows whose set never built.
    pub fn label(&self, n: f64) -> (String, Option<f64>) {
        match *self {
            SetFamily::Hc { beta } => (format!("hc(N={n},beta={beta})"), Some(beta)),
            SetFamily::Lp { p } if p.is_infinite() => (format!("lp(N={n},p=inf)"), Some(p)),
            SetFamily::Lp { p } => (format!("lp(N={n},p={p})"), Some(p)),
            SetFamily::Grid => (format!("grid(N={})", n as i64), None),
        }
    }
}

#[derive(Clone, Copy)]
pub enum ModeKind {
    Plain,
    Fejer { q: LqNorm },
    Riesz { q: LqNorm, alpha: f64, gamma: f64 },
}

impl ModeKind {
    pub fn from_flags(mode: &str, q: &str, alpha: f64, gamma: f64) -> Result<Self> {
        let q = LqNorm::parse(q)?;
        match mode {
            "plain" => Ok(ModeKind::Plain),
            "fejer" => Ok(ModeKind::Fejer { q }),
            "riesz" => Ok(ModeKind::Riesz { q, alpha, gamma }),
            other => bail!("unknown smoothing mode {other:?}"),
        }
    }

    /// Smoothing mode at level N; Fejer and Riesz track the sweep radius.
    pub fn at(&self, n: u32) -> r1fft::Result<SmoothingMode> {
        match *self {
            ModeKind::Plain => Ok(SmoothingMode::Plain),
            ModeKind::Fejer { q } => SmoothingMode::fejer(q, n as f64),
            ModeKind::Riesz { q, alpha, gamma } => SmoothingMode::riesz(q, n as f64, alpha, gamma),
        }
    }

    pub fn name_at(&self, n: u32) -> String {
        match self.at(n) {
            Ok(m) => m.to_string(),
            Err(_) => "invalid".to_string(),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
pub enum LatticeKind {
    Single,
    Multiple,
}

impl LatticeKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(LatticeKind::Single),
            "multiple" => Ok(LatticeKind::Multiple),
            other => bail!("unknown lattice kind {other:?}"),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LatticeKind::Single => "single",
            LatticeKind::Multiple => "multiple",
        }
    }
}

#[derive(Clone, Copy)]
pub struct Mrl {
    pub c: f64,
    pub n: usize,
    pub delta: f64,
}

pub struct SweepPlan {
    pub transform: TransformD,
    pub transform_name: String,
    pub cs: Vec<f64>,
    pub family: SetFamily,
    pub d: usize,
    pub nmin: u32,
    pub nmax: u32,
    pub mode: ModeKind,
    pub lattice: LatticeKind,
    pub mrl: Mrl,
    pub seed: u64,
    pub timings: bool,
}

pub fn build_transform(kind_name: &str, cs: &[f64], d: usize) -> Result<(TransformD, Vec<f64>)> {
    let kind = TransformKind::parse(kind_name)?;
    let transform = match cs.len() {
        1 => TransformD::uniform(kind, cs[0], d)?,
        n if n == d => TransformD::per_coordinate(kind, cs)?,
        n => bail!("got {n} scale parameters for dimension {d}; pass 1 or {d}"),
    };
    let cs = transform.components().iter().map(|t| t.c()).collect();
    Ok((transform, cs))
}

pub fn resolve_sweep(args: &SweepArgs) -> Result<SweepPlan> {
    let cfg: SweepConfig = load_config(args.config.as_deref())?;
    let transform_name = args
        .transform
        .clone()
        .or(cfg.transform)
        .context("--transform is required (flag or config)")?;
    let cs = args.c.clone().or(cfg.c).unwrap_or_else(|| vec![1.0]);
    let set = args.set.clone().or(cfg.set).unwrap_or_else(|| "hc".into());
    let beta = args.beta.or(cfg.beta).unwrap_or(1.0);
    let p = args
        .p
        .clone()
        .or(cfg.p.map(NumOrStr::into_string))
        .unwrap_or_else(|| "2".into());
    let d = args.d.or(cfg.d).unwrap_or(2);
    let nmin = args.nmin.or(cfg.nmin).unwrap_or(2);
    let nmax = args.nmax.or(cfg.nmax).unwrap_or(match d {
        2 => 120,
        3 => 60,
        4 => 30,
        5 => 18,
        _ => 16,
    });
    let mode = args
        .mode
        .clone()
        .or(cfg.mode)
        .unwrap_or_else(|| "plain".into());
    let q = args
        .q
        .clone()
        .or(cfg.q.map(NumOrStr::into_string))
        .unwrap_or_else(|| "2".into());
    let alpha = args.alpha.or(cfg.alpha).unwrap_or(1.0);
    let gamma = args.gamma.or(cfg.gamma).unwrap_or(1.0);
    let lattice = args
        .lattice
        .clone()
        .or(cfg.lattice)
        .unwrap_or_else(|| "single".into());
    let mrl = Mrl {
        c: args.mrl_flags.mrl_c.or(cfg.mrl_c).unwrap_or(30.0),
        n: args.mrl_flags.mrl_n.or(cfg.mrl_n).unwrap_or(30),
        delta: args.mrl_flags.mrl_delta.or(cfg.mrl_delta).unwrap_or(0.5),
    };
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    if nmin < 1 || nmin > nmax {
        bail!("need 1 <= nmin <= nmax, got {nmin}..{nmax}");
    }
    let (transform, cs) = build_transform(&transform_name, &cs, d)?;
    Ok(SweepPlan {
        transform,
        transform_name,
        cs,
        family: SetFamily::from_flags(&set, beta, &p)?,
        d,
        nmin,
        nmax,
        mode: ModeKind::from_flags(&mode, &q, alpha, gamma)?,
        lattice: LatticeKind::parse(&lattice)?,
        mrl,
        seed,
        timings: args.timings,
    })
}

/// Named sub-seed: FNV-1a over the label and index, offset by the master
/// seed, so each randomized path draws from its own stream.
pub fn sub_seed(master: u64, label: &str, idx: u64) -> u64 {
    let mut h = 0xcbf29ce484222325u64 ^ master;
    for &b in label.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    for b in idx.to_le_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
