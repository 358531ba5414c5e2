//! Seeded generation of bootstrap weights and data samples.
//!
//! Every draw comes from a stream keyed by a [`Seed`]: a root value plus the
//! labels (experiment, replicate, purpose). The stream is a pure function of
//! that key, so a replicate produces the same numbers no matter which worker
//! runs it or in what order.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp, Gamma, Normal, StudentT};

use crate::error::{Error, Result};
use crate::statcore::Sample;

/// The generator behind every stream.
pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Weights = 1,
    Data = 2,
    Realization = 3,
    Redraw = 4,
}

/// Key of a reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed {
    pub root: u64,
    pub experiment: u64,
    pub replicate: u64,
    pub purpose: u64,
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Seed {
    pub fn new(root: u64) -> Self {
        Seed {
            root,
            experiment: 0,
            replicate: 0,
            purpose: 0,
        }
    }

    pub fn experiment(self, experiment: u64) -> Self {
        Seed { experiment, ..self }
    }

    pub fn replicate(self, replicate: u64) -> Self {
        Seed { replicate, ..self }
    }

    pub fn purpose(self, purpose: Purpose) -> Self {
        Seed {
            purpose: purpose as u64,
            ..self
        }
    }

    /// 64-bit digest of the full key.
    pub fn key(&self) -> u64 {
        let mut h = splitmix(self.root ^ 0x005e_ed0f_b007);
        h = splitmix(h ^ self.experiment);
        h = splitmix(h ^ self.replicate.rotate_left(17));
        splitmix(h ^ self.purpose.rotate_left(41))
    }

    /// A fresh key space derived from this key and `index`, keeping the
    /// experiment label. Used for nested (outer, inner) replicate grids.
    pub fn child(&self, index: u64) -> Seed {
        Seed {
            root: splitmix(self.key() ^ splitmix(index.wrapping_add(0xc41d))),
            experiment: self.experiment,
            replicate: 0,
            purpose: 0,
        }
    }

    pub fn rng(&self) -> StreamRng {
        let mut s = self.key();
        let mut bytes = [0u8; 32];
        for chunk in bytes.chunks_exact_mut(8) {
            s = splitmix(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        ChaCha8Rng::from_seed(bytes)
    }
}

/// Which scheme produced a weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeTag {
    Efron,
    IidPositive,
}

/// Non-negative bootstrap weights with their total mass `m_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
    total_mass: f64,
    tag: SchemeTag,
}

impl WeightVector {
    /// Integer (Efron) weights; the total mass is the exact integer sum.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidArgument("empty weight vector".into()));
        }
        let m: u64 = counts.iter().sum();
        if m == 0 {
            return Err(Error::DegenerateWeights("total mass m_n = 0".into()));
        }
        Ok(WeightVector {
            weights: counts.iter().map(|&c| c as f64).collect(),
            total_mass: m as f64,
            tag: SchemeTag::Efron,
        })
    }

    /// Real non-negative weights; the total mass is their computed sum.
    pub fn from_reals(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty weight vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
        }
        let total_mass: f64 = weights.iter().sum();
        if total_mass <= 0.0 {
            return Err(Error::DegenerateWeights("total mass m_n = 0".into()));
        }
        Ok(WeightVector {
            weights,
            total_mass,
            tag: SchemeTag::IidPositive,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn tag(&self) -> SchemeTag {
        self.tag
    }

    /// Multiply every weight by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale factor {c} must be positive")));
        }
        WeightVector::from_reals(self.weights.iter().map(|w| w * c).collect())
    }
}

/// How an Efron scheme chooses the resample size `m_n` from `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MRule {
    /// `m_n = m`.
    Fixed(u64),
    /// `m_n = ceil(c n)`.
    Ratio(f64),
    /// `m_n = ceil(c n ln n)`.
    NLogN(f64),
    /// `m_n = ceil(n^{3/2})`: between `n = o(m_n)` and `m_n = o(n^2)`.
    SqrtCap,
}

// Absorbs representation error in products such as 0.1 * 30.
fn ceil_fuzzy(x: f64) -> f64 {
    (x - 1e-9 * x.abs().max(1.0)).ceil()
}

impl MRule {
    pub fn resample_size(&self, n: usize) -> Result<u64> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        let nf = n as f64;
        let m = match *self {
            MRule::Fixed(m) => m as f64,
            MRule::Ratio(c) => ceil_fuzzy(c * nf),
            MRule::NLogN(c) => ceil_fuzzy(c * nf * nf.ln()),
            MRule::SqrtCap => ceil_fuzzy(nf * nf.sqrt()),
        };
        if !(1.0..9.0e15).contains(&m) {
            return Err(Error::config(
                "m_rule",
                format!("{self} gives m_n = {m} for n = {n}; need m_n >= 1"),
            ));
        }
        Ok(m as u64)
    }

    /// Regime name used in manifests.
    pub fn regime(&self) -> &'static str {
        match self {
            MRule::Fixed(_) => "fixed m_n",
            MRule::Ratio(_) => "m_n/n constant (Efron m_n = o(n^2); T**_{m_n,S_n} with m_n/n >= eps)",
            MRule::NLogN(_) => "m_n proportional to n log n (conditioning on data)",
            MRule::SqrtCap => "n = o(m_n) and m_n = o(n^2)",
        }
    }
}

impl fmt::Display for MRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MRule::Fixed(m) => write!(f, "fixed:{m}"),
            MRule::Ratio(c) => write!(f, "ratio:{c}"),
            MRule::NLogN(c) => write!(f, "nlogn:{c}"),
            MRule::SqrtCap => write!(f, "sqrt-cap"),
        }
    }
}

fn parse_positive(field: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::config(field, format!("`{s}` is not a number")))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::config(field, format!("`{s}` must be positive")));
    }
    Ok(v)
}

impl FromStr for MRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "sqrt-cap" || s == "square-root-cap" {
            return Ok(MRule::SqrtCap);
        }
        let (kind, arg) = s.split_once(':').ok_or_else(|| {
            Error::config(
                "m_rule",
                format!("`{s}`: expected fixed:M, ratio:C, nlogn:C or sqrt-cap"),
            )
        })?;
        match kind {
            "fixed" => {
                let m: u64 = arg
                    .trim()
                    .parse()
                    .map_err(|_| Error::config("m_rule", format!("`{arg}` is not a count")))?;
                if m == 0 {
                    return Err(Error::config("m_rule", "fixed m must be >= 1"));
                }
                Ok(MRule::Fixed(m))
            }
            "ratio" => Ok(MRule::Ratio(parse_positive("m_rule", arg)?)),
            "nlogn" => Ok(MRule::NLogN(parse_positive("m_rule", arg)?)),
            _ => Err(Error::config("m_rule", format!("unknown rule `{kind}`"))),
        }
    }
}

/// Strictly positive law for i.i.d. reweighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PositiveLaw {
    Gamma { shape: f64, rate: f64 },
    Exponential { rate: f64 },
    Constant(f64),
}

impl PositiveLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            PositiveLaw::Gamma { shape, rate } => shape / rate,
            PositiveLaw::Exponential { rate } => 1.0 / rate,
            PositiveLaw::Constant(c) => c,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            PositiveLaw::Gamma { shape, rate } => shape / (rate * rate),
            PositiveLaw::Exponential { rate } => 1.0 / (rate * rate),
            PositiveLaw::Constant(_) => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            PositiveLaw::Gamma { shape, rate } => shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite(),
            PositiveLaw::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            PositiveLaw::Constant(c) => c > 0.0 && c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{self} is not a strictly positive law")))
        }
    }
}

impl fmt::Display for PositiveLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PositiveLaw::Gamma { shape, rate } => write!(f, "gamma:{shape},{rate}"),
            PositiveLaw::Exponential { rate } => write!(f, "exp:{rate}"),
            PositiveLaw::Constant(c) => write!(f, "const:{c}"),
        }
    }
}

/// Generative description of a bootstrap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BootstrapScheme {
    Efron { m_rule: MRule },
    IidPositive { law: PositiveLaw },
}

impl BootstrapScheme {
    pub fn efron(m_rule: MRule) -> Self {
        BootstrapScheme::Efron { m_rule }
    }

    /// The reweighting of the Bayesian bootstrap by i.i.d. Gamma(4, 1).
    pub fn gamma_default() -> Self {
        BootstrapScheme::IidPositive {
            law: PositiveLaw::Gamma { shape: 4.0, rate: 1.0 },
        }
    }

    pub fn tag(&self) -> SchemeTag {
        match self {
            BootstrapScheme::Efron { .. } => SchemeTag::Efron,
            BootstrapScheme::IidPositive { .. } => SchemeTag::IidPositive,
        }
    }

    pub fn is_efron(&self) -> bool {
        matches!(self, BootstrapScheme::Efron { .. })
    }

    /// Efron resample size for `n`; `None` for i.i.d. positive schemes.
    pub fn resample_size(&self, n: usize) -> Result<Option<u64>> {
        match self {
            BootstrapScheme::Efron { m_rule } => m_rule.resample_size(n).map(Some),
            BootstrapScheme::IidPositive { .. } => Ok(None),
        }
    }

    pub fn draw(&self, n: usize, seed: Seed) -> Result<WeightVector> {
        match self {
            BootstrapScheme::Efron { m_rule } => draw_efron_weights(n, m_rule.resample_size(n)?, seed),
            BootstrapScheme::IidPositive { law } => draw_iid_positive_weights(n, *law, seed),
        }
    }
}

/// Parses the scheme part only (`efron`, `gamma`, `gamma:SHAPE,RATE`,
/// `exp:RATE`, `const:C`); an Efron scheme gets `m_rule` attached separately.
pub fn parse_scheme(s: &str, m_rule: MRule) -> Result<BootstrapScheme> {
    let s = s.trim();
    let (kind, arg) = match s.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (s, None),
    };
    let law = match (kind, arg) {
        ("efron", None) => return Ok(BootstrapScheme::Efron { m_rule }),
        ("gamma", None) => PositiveLaw::Gamma { shape: 4.0, rate: 1.0 },
        ("gamma", Some(a)) => {
            let (shape, rate) = a
                .split_once(',')
                .ok_or_else(|| Error::config("scheme", "gamma expects gamma:SHAPE,RATE"))?;
            PositiveLaw::Gamma {
                shape: parse_positive("scheme", shape)?,
                rate: parse_positive("scheme", rate)?,
            }
        }
        ("exp", Some(a)) => PositiveLaw::Exponential {
            rate: parse_positive("scheme", a)?,
        },
        ("const", Some(a)) => PositiveLaw::Constant(parse_positive("scheme", a)?),
        _ => return Err(Error::config("scheme", format!("unknown scheme `{s}`"))),
    };
    Ok(BootstrapScheme::IidPositive { law })
}

pub fn scheme_name(scheme: &BootstrapScheme) -> String {
    match scheme {
        BootstrapScheme::Efron { .. } => "efron".into(),
        BootstrapScheme::IidPositive { law } => law.to_string(),
    }
}

/// Multinomial(m; 1/n, ..., 1/n) counts by sequential conditional binomials:
/// cell `i` takes Binomial(remaining, 1/(n - i)).
pub fn efron_counts(n: usize, m: u64, rng: &mut impl Rng) -> Result<Vec<u64>> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "Efron weights need n >= 1 and m >= 1 (n={n}, m={m})"
        )));
    }
    let mut counts = vec![0u64; n];
    let mut remaining = m;
    for (i, c) in counts.iter_mut().enumerate().take(n - 1) {
        if remaining == 0 {
            break;
        }
        let p = 1.0 / (n - i) as f64;
        let draw = Binomial::new(remaining, p)
            .map_err(|e| Error::Invariant(format!("binomial({remaining}, {p}): {e}")))?
            .sample(rng);
        *c = draw;
        remaining -= draw;
    }
    counts[n - 1] += remaining;
    Ok(counts)
}

pub fn draw_efron_weights(n: usize, m: u64, seed: Seed) -> Result<WeightVector> {
    let counts = efron_counts(n, m, &mut seed.rng())?;
    debug_assert_eq!(counts.iter().sum::<u64>(), m);
    WeightVector::from_counts(&counts)
}

pub fn draw_iid_positive_weights(n: usize, law: PositiveLaw, seed: Seed) -> Result<WeightVector> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    law.validate()?;
    let mut rng = seed.rng();
    let weights: Vec<f64> = match law {
        PositiveLaw::Gamma { shape, rate } => {
            let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            (0..n).map(|_| g.sample(&mut rng)).collect()
        }
        PositiveLaw::Exponential { rate } => {
            let e = Exp::new(rate).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            (0..n).map(|_| e.sample(&mut rng)).collect()
        }
        PositiveLaw::Constant(c) => vec![c; n],
    };
    if let Some(bad) = weights.iter().find(|w| !(**w > 0.0)) {
        return Err(Error::Invariant(format!("positive law {law} produced {bad}")));
    }
    WeightVector::from_reals(weights)
}

/// Law of the raw observations before the affine map of [`DataGenerator`].
#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    Normal {
        mean: f64,
        sd: f64,
    },
    /// `E - 1/rate` with `E ~ Exp(rate)`.
    ExpCentered {
        rate: f64,
    },
    StudentT {
        nu: f64,
    },
    /// `low` with probability `1 - p_high`, `high` with probability `p_high`.
    TwoPoint {
        low: f64,
        high: f64,
        p_high: f64,
    },
    /// Uniform picks from a fixed dataset.
    Empirical(Arc<Vec<f64>>),
}

/// A law for i.i.d. data, optionally mapped through `x -> scale * x + shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataGenerator {
    law: Law,
    scale: f64,
    shift: f64,
}

impl DataGenerator {
    pub fn new(law: Law) -> Result<Self> {
        match &law {
            Law::Normal { mean, sd } if !(mean.is_finite() && *sd > 0.0 && sd.is_finite()) => {
                return Err(Error::InvalidArgument(format!("normal({mean}, {sd})")));
            }
            Law::ExpCentered { rate } if !(*rate > 0.0 && rate.is_finite()) => {
                return Err(Error::InvalidArgument(format!("exponential rate {rate}")));
            }
            // the mean must exist
            Law::StudentT { nu } if !(*nu > 1.0) => {
                return Err(Error::InvalidArgument(format!(
                    "student t needs nu > 1 for a finite mean, got {nu}"
                )));
            }
            Law::TwoPoint { low, high, p_high }
                if !(low.is_finite() && high.is_finite() && (0.0..=1.0).contains(p_high)) =>
            {
                return Err(Error::InvalidArgument(
                    "two-point law needs finite support and p in [0, 1]".into(),
                ));
            }
            Law::Empirical(data) if data.is_empty() => {
                return Err(Error::InvalidArgument("empirical dataset is empty".into()));
            }
            Law::Empirical(data) if data.iter().any(|v| !v.is_finite()) => {
                return Err(Error::InvalidArgument("empirical dataset has non-finite values".into()));
            }
            _ => {}
        }
        Ok(DataGenerator {
            law,
            scale: 1.0,
            shift: 0.0,
        })
    }

    pub fn standard_normal() -> Self {
        DataGenerator::new(Law::Normal { mean: 0.0, sd: 1.0 }).expect("valid law")
    }

    pub fn exp_centered() -> Self {
        DataGenerator::new(Law::ExpCentered { rate: 1.0 }).expect("valid law")
    }

    pub fn student_t(nu: f64) -> Result<Self> {
        DataGenerator::new(Law::StudentT { nu })
    }

    pub fn empirical(data: Vec<f64>) -> Result<Self> {
        DataGenerator::new(Law::Empirical(Arc::new(data)))
    }

    /// The same draws mapped through `x -> scale * x + shift`.
    pub fn affine(mut self, scale: f64, shift: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && shift.is_finite()) {
            return Err(Error::InvalidArgument("affine map needs scale > 0".into()));
        }
        self.shift = scale * self.shift + shift;
        self.scale *= scale;
        Ok(self)
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    fn raw_mean(&self) -> f64 {
        match &self.law {
            Law::Normal { mean, .. } => *mean,
            Law::ExpCentered { .. } | Law::StudentT { .. } => 0.0,
            Law::TwoPoint { low, high, p_high } => low + p_high * (high - low),
            Law::Empirical(d) => d.iter().sum::<f64>() / d.len() as f64,
        }
    }

    fn raw_variance(&self) -> Option<f64> {
        match &self.law {
            Law::Normal { sd, .. } => Some(sd * sd),
            Law::ExpCentered { rate } => Some(1.0 / (rate * rate)),
            Law::StudentT { nu } if *nu > 2.0 => Some(nu / (nu - 2.0)),
            Law::StudentT { .. } => None,
            Law::TwoPoint { low, high, p_high } => Some(p_high * (1.0 - p_high) * (high - low).powi(2)),
            Law::Empirical(d) => {
                let mu = self.raw_mean();
                Some(d.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / d.len() as f64)
            }
        }
    }

    /// `E X`.
    pub fn known_mean(&self) -> f64 {
        self.scale * self.raw_mean() + self.shift
    }

    /// `Var X`, or `None` when it is infinite.
    pub fn known_variance(&self) -> Option<f64> {
        self.raw_variance().map(|v| v * self.scale * self.scale)
    }

    /// Student t with `1 < nu <= 2`: in the normal domain of attraction only
    /// for `nu = 2`, and with infinite variance.
    pub fn is_infinite_variance(&self) -> bool {
        self.known_variance().is_none()
    }

    pub fn draw(&self, n: usize, seed: Seed) -> Result<Sample> {
        draw_sample(self, n, seed)
    }
}

impl fmt::Display for DataGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.law {
            Law::Normal { mean, sd } => write!(f, "normal:{mean},{sd}")?,
            Law::ExpCentered { rate } => write!(f, "exp-centered:{rate}")?,
            Law::StudentT { nu } => write!(f, "t:{nu}")?,
            Law::TwoPoint { low, high, p_high } => write!(f, "two-point:{low},{high},{p_high}")?,
            Law::Empirical(d) => write!(f, "empirical[{}]", d.len())?,
        }
        if self.scale != 1.0 || self.shift != 0.0 {
            write!(f, "*{}+{}", self.scale, self.shift)?;
        }
        Ok(())
    }
}

/// Parses `normal`, `normal:MU,SIGMA`, `exp-centered`, `exp-centered:RATE`,
/// `t:NU` and `two-point:LOW,HIGH,P`. CSV-backed generators are built by the
/// caller from [`read_dataset_csv`].
pub fn parse_generator(s: &str) -> Result<DataGenerator> {
    let s = s.trim();
    let (kind, arg) = match s.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (s, None),
    };
    let nums = |a: &str, k: usize| -> Result<Vec<f64>> {
        let v: std::result::Result<Vec<f64>, _> = a.split(',').map(|x| x.trim().parse::<f64>()).collect();
        match v {
            Ok(v) if v.len() == k => Ok(v),
            _ => Err(Error::config(
                "generator",
                format!("`{s}`: expected {k} comma-separated numbers"),
            )),
        }
    };
    let law = match (kind, arg) {
        ("normal", None) => Law::Normal { mean: 0.0, sd: 1.0 },
        ("normal", Some(a)) => {
            let v = nums(a, 2)?;
            Law::Normal { mean: v[0], sd: v[1] }
        }
        ("exp-centered", None) => Law::ExpCentered { rate: 1.0 },
        ("exp-centered", Some(a)) => Law::ExpCentered { rate: nums(a, 1)?[0] },
        ("t", Some(a)) => Law::StudentT { nu: nums(a, 1)?[0] },
        ("two-point", Some(a)) => {
            let v = nums(a, 3)?;
            Law::TwoPoint {
                low: v[0],
                high: v[1],
                p_high: v[2],
            }
        }
        _ => return Err(Error::config("generator", format!("unknown generator `{s}`"))),
    };
    DataGenerator::new(law).map_err(|e| Error::config("generator", e.to_string()))
}

pub fn draw_sample(generator: &DataGenerator, n: usize, seed: Seed) -> Result<Sample> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be >= 1".into()));
    }
    let mut rng = seed.rng();
    let raw: Vec<f64> = match &generator.law {
        Law::Normal { mean, sd } => {
            let d = Normal::new(*mean, *sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            (0..n).map(|_| d.sample(&mut rng)).collect()
        }
        Law::ExpCentered { rate } => {
            let d = Exp::new(*rate).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let mu = 1.0 / rate;
            (0..n).map(|_| d.sample(&mut rng) - mu).collect()
        }
        Law::StudentT { nu } => {
            let d = StudentT::new(*nu).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            (0..n).map(|_| d.sample(&mut rng)).collect()
        }
        Law::TwoPoint { low, high, p_high } => (0..n)
            .map(|_| if rng.random::<f64>() < *p_high { *high } else { *low })
            .collect(),
        Law::Empirical(data) => (0..n).map(|_| data[rng.random_range(0..data.len())]).collect(),
    };
    let values = if generator.scale == 1.0 && generator.shift == 0.0 {
        raw
    } else {
        raw.into_iter().map(|x| generator.scale * x + generator.shift).collect()
    };
    Sample::new(values)
}

/// Reads a one-column CSV of decimal reals. Blank lines are skipped.
pub fn read_dataset_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let field = match record.get(0) {
            Some(f) if !f.is_empty() => f,
            _ => continue,
        };
        let v: f64 = field.parse().map_err(|_| {
            Error::InvalidArgument(format!(
                "{}: record {}: `{field}` is not a number",
                path.display(),
                line + 1
            ))
        })?;
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{}: non-finite value `{field}`",
                path.display()
            )));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::InvalidArgument(format!("{}: no data values", path.display())));
    }
    Ok(values)
}
