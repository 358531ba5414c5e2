//! Sample moments, centered weight coefficients and the t-statistics.
//!
//! With `a_i = v_i/m_n - 1/n` the bootstrap mean deviation is
//! `Xbar* - Xbar = sum a_i X_i`, and the three bootstrapped statistics differ
//! only in how that sum is normalized:
//!
//! * `T*`            by `S_n V_n` with `V_n^2 = sum a_i^2`,
//! * `T**`           by `S*_{m_n} / sqrt(m_n)`,
//! * `T**_{m_n,S_n}` by `S_n / sqrt(m_n)`.

use crate::error::{Error, Result};
use crate::sampling::WeightVector;

/// Observations with cached mean and variance (denominator `n`).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    mean: f64,
    variance: f64,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("sample is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("sample contains non-finite values".into()));
        }
        // Welford
        let (mut mean, mut m2) = (0.0_f64, 0.0_f64);
        for (k, &x) in values.iter().enumerate() {
            let delta = x - mean;
            mean += delta / (k + 1) as f64;
            m2 += delta * (x - mean);
        }
        let variance = (m2 / values.len() as f64).max(0.0);
        Ok(Sample { values, mean, variance })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `S_n^2 = sum (X_i - Xbar)^2 / n`.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.variance > 0.0)
    }

    /// `sqrt(n) (Xbar - mu) / S_n`.
    pub fn t_statistic_at(&self, mu: f64) -> Result<f64> {
        if self.is_degenerate() {
            return Err(Error::DegenerateSample("S_n = 0 (constant sample)".into()));
        }
        let n = self.len() as f64;
        Ok(n.sqrt() * (self.mean - mu) / self.std_dev())
    }
}

/// Student t-statistic `sqrt(n) Xbar / S_n`.
pub fn t_statistic(s: &Sample) -> Result<f64> {
    s.t_statistic_at(0.0)
}

/// `a_i = v_i/m_n - 1/n` together with `V_n^2` and `max a_i^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredCoefficients {
    pub a: Vec<f64>,
    pub v_n_sq: f64,
    pub max_a_sq: f64,
}

pub fn center_weights(w: &WeightVector) -> Result<CenteredCoefficients> {
    let m = w.total_mass();
    if !(m > 0.0) {
        return Err(Error::DegenerateWeights("total mass m_n = 0".into()));
    }
    let inv_n = 1.0 / w.len() as f64;
    let a: Vec<f64> = w.weights().iter().map(|&v| v / m - inv_n).collect();
    let (v_n_sq, max_a_sq) = a
        .iter()
        .fold((0.0_f64, 0.0_f64), |(s, mx), &x| (s + x * x, mx.max(x * x)));
    Ok(CenteredCoefficients { a, v_n_sq, max_a_sq })
}

/// Weighted bootstrap variance `S*^2 = sum w_i (X_i - Xbar*)^2 / m_n`.
pub fn boot_sample_variance(s: &Sample, w: &WeightVector) -> Result<f64> {
    check_lengths(s, w)?;
    let m = w.total_mass();
    if !(m > 0.0) {
        return Err(Error::DegenerateWeights("total mass m_n = 0".into()));
    }
    let xbar = s.mean();
    let shift = weighted_shift(s, w, xbar);
    Ok(snap_zero(weighted_spread(s, w, xbar, shift), s.variance()))
}

// Spreads below this fraction of S_n^2 are rounding residue of a bootstrap
// sample concentrated on tied values.
const ZERO_SPREAD_REL: f64 = 1e-24;

fn snap_zero(boot_var: f64, sample_var: f64) -> f64 {
    if boot_var <= ZERO_SPREAD_REL * sample_var {
        0.0
    } else {
        boot_var
    }
}

/// The four quantities computed from one (sample, weights) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootTriple {
    /// `T*`.
    pub t_star: f64,
    /// `T**`; `None` when the bootstrap sample is constant.
    pub t_star_star: Option<f64>,
    /// `T**_{m_n,S_n}`.
    pub t_star_star_sn: f64,
    /// `S*^2_{m_n}`.
    pub boot_var: f64,
    /// `sum a_i X_i`.
    pub numerator: f64,
    pub v_n_sq: f64,
}

impl BootTriple {
    pub fn t_star_star(&self) -> Result<f64> {
        self.t_star_star
            .ok_or_else(|| Error::DegenerateBootstrapSample("S*_{m_n} = 0, T** undefined".into()))
    }
}

fn check_lengths(s: &Sample, w: &WeightVector) -> Result<()> {
    if s.len() != w.len() {
        return Err(Error::InvalidArgument(format!(
            "sample has {} values but there are {} weights",
            s.len(),
            w.len()
        )));
    }
    Ok(())
}

// sum w_i (X_i - c) / m
fn weighted_shift(s: &Sample, w: &WeightVector, c: f64) -> f64 {
    let acc: f64 = s.values().iter().zip(w.weights()).map(|(x, v)| v * (x - c)).sum();
    acc / w.total_mass()
}

// sum w_i ((X_i - xbar) - delta)^2 / m; deviations are taken from xbar
// first so rounding scales with the spread, not the location.
fn weighted_spread(s: &Sample, w: &WeightVector, xbar: f64, delta: f64) -> f64 {
    let acc: f64 = s
        .values()
        .iter()
        .zip(w.weights())
        .map(|(x, v)| {
            let d = (x - xbar) - delta;
            v * d * d
        })
        .sum();
    acc / w.total_mass()
}

pub fn boot_t_statistics(s: &Sample, w: &WeightVector) -> Result<BootTriple> {
    check_lengths(s, w)?;
    if s.is_degenerate() {
        return Err(Error::DegenerateSample("S_n = 0 (constant sample)".into()));
    }
    let m = w.total_mass();
    if !(m > 0.0) {
        return Err(Error::DegenerateWeights("total mass m_n = 0".into()));
    }
    let inv_n = 1.0 / s.len() as f64;
    let xbar = s.mean();
    let (mut numerator, mut v_n_sq, mut shift) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (&x, &v) in s.values().iter().zip(w.weights()) {
        let a = v / m - inv_n;
        let d = x - xbar;
        numerator += a * d;
        v_n_sq += a * a;
        shift += v * d;
    }
    if !(v_n_sq > 0.0) {
        return Err(Error::DegenerateWeights("V_n^2 = 0, T* undefined".into()));
    }
    let boot_var = snap_zero(weighted_spread(s, w, xbar, shift / m), s.variance());
    let s_n = s.std_dev();
    let root_m = m.sqrt();
    let boot_sd = boot_var.sqrt();
    Ok(BootTriple {
        t_star: numerator / (s_n * v_n_sq.sqrt()),
        t_star_star: (boot_var > 0.0).then(|| numerator * root_m / boot_sd),
        t_star_star_sn: numerator * root_m / s_n,
        boot_var,
        numerator,
        v_n_sq,
    })
}

/// Which statistic a study evaluates on each replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistic {
    /// `T*`, normalized by `S_n V_n`.
    TStar,
    /// `T**`, normalized by `S*_{m_n}/sqrt(m_n)`.
    TStarStar,
    /// `T**_{m_n,S_n}`, normalized by `S_n/sqrt(m_n)`.
    TStarStarSn,
    /// Student `T_n` of the sample alone, centered at the known mean.
    Classical,
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::TStar => "t_star",
            Statistic::TStarStar => "t_star_star",
            Statistic::TStarStarSn => "t_star_star_sn",
            Statistic::Classical => "t_n",
        }
    }

    /// Picks this statistic from a computed triple.
    pub fn select(&self, t: &BootTriple) -> Result<f64> {
        match self {
            Statistic::TStar => Ok(t.t_star),
            Statistic::TStarStar => t.t_star_star(),
            Statistic::TStarStarSn => Ok(t.t_star_star_sn),
            Statistic::Classical => Err(Error::InvalidArgument("T_n is not a bootstrapped statistic".into())),
        }
    }
}

impl std::fmt::Display for Statistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "t_star" | "t-star" => Ok(Statistic::TStar),
            "t_star_star" | "t-star-star" => Ok(Statistic::TStarStar),
            "t_star_star_sn" | "t-star-star-sn" => Ok(Statistic::TStarStarSn),
            "t_n" | "classical" => Ok(Statistic::Classical),
            other => Err(Error::config("statistic", format!("unknown statistic `{other}`"))),
        }
    }
}
