//! Nested Monte Carlo for the two conditioning paradigms.
//!
//! *On the weights*: one weight vector is held fixed and fresh data samples
//! are drawn, giving `P_{X|v}(T <= t)`. *On the data*: one sample is held
//! fixed and fresh Efron weights are drawn, giving `P_{w|X}(T <= t)`. Each
//! conditional law is summarized by its KS distance to the standard normal.
//!
//! A study repeats this over `outer_reps` independent fixed realizations and
//! reports the median KS distance together with the fraction of realizations
//! whose distance exceeds twice a threshold.

use serde::{Deserialize, Serialize};

use crate::diagnostics::draw_nondegenerate;
use crate::error::{Error, Result};
use crate::exec::{median, par_map, sort_values};
use crate::numerics::ks_to_normal;
use crate::sampling::{BootstrapScheme, DataGenerator, Purpose, Seed, WeightVector};
use crate::statcore::{boot_t_statistics, center_weights, Sample, Statistic};

/// Minimum inner replicate count for a conditional distribution.
pub const MIN_INNER_REPS: usize = 500;

/// Sorted replicate values of a statistic and their distance to normality.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    pub values: Vec<f64>,
    pub ks_to_normal: f64,
    pub degenerate_count: usize,
    pub replicates: usize,
}

impl EmpiricalDistribution {
    fn from_replicates(replicates: Vec<Result<Option<f64>>>) -> Result<Self> {
        let total = replicates.len();
        let mut values = Vec::with_capacity(total);
        for r in replicates {
            if let Some(v) = r? {
                values.push(v);
            }
        }
        if values.is_empty() {
            return Err(Error::Experiment(format!("all {total} replicates were degenerate")));
        }
        sort_values(&mut values);
        let ks = ks_to_normal(&values)?;
        Ok(EmpiricalDistribution {
            degenerate_count: total - values.len(),
            values,
            ks_to_normal: ks,
            replicates: total,
        })
    }
}

/// Turns per-replicate degeneracies into `None`, keeps real failures.
fn degenerate_as_none(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_degenerate() => Ok(None),
        Err(e) => Err(e),
    }
}

fn check_inner(reps: usize) -> Result<()> {
    if reps < MIN_INNER_REPS {
        return Err(Error::config(
            "inner_reps",
            format!("conditional distributions need R >= {MIN_INNER_REPS}, got {reps}"),
        ));
    }
    Ok(())
}

/// `P_{X|v}` of `statistic` for the fixed weights `w`.
pub fn conditional_on_weights(
    w: &WeightVector,
    generator: &DataGenerator,
    statistic: Statistic,
    reps: usize,
    seed: Seed,
) -> Result<EmpiricalDistribution> {
    check_inner(reps)?;
    if !matches!(statistic, Statistic::TStar | Statistic::TStarStar) {
        return Err(Error::UnsupportedParadigm(format!(
            "conditioning on the weights studies t_star or t_star_star, not {statistic}"
        )));
    }
    if !(center_weights(w)?.v_n_sq > 0.0) {
        return Err(Error::DegenerateWeights("fixed weights have V_n^2 = 0".into()));
    }
    let n = w.len();
    let reps_out = par_map(reps, |r| {
        let Some(s) = draw_nondegenerate(generator, n, seed.replicate(r as u64).purpose(Purpose::Data))? else {
            return Ok(None);
        };
        degenerate_as_none(boot_t_statistics(&s, w).and_then(|t| statistic.select(&t)))
    });
    EmpiricalDistribution::from_replicates(reps_out)
}

/// `P_{w|X}` of `statistic` for the fixed sample `s` under Efron weights.
pub fn conditional_on_data(
    s: &Sample,
    scheme: &BootstrapScheme,
    statistic: Statistic,
    reps: usize,
    seed: Seed,
) -> Result<EmpiricalDistribution> {
    check_inner(reps)?;
    if !scheme.is_efron() {
        return Err(Error::UnsupportedParadigm(
            "conditioning on the data is defined for Efron's scheme only".into(),
        ));
    }
    if !matches!(statistic, Statistic::TStarStar | Statistic::TStarStarSn) {
        return Err(Error::UnsupportedParadigm(format!(
            "conditioning on the data studies t_star_star or t_star_star_sn, not {statistic}"
        )));
    }
    if s.is_degenerate() {
        return Err(Error::DegenerateSample("fixed sample has S_n = 0".into()));
    }
    let n = s.len();
    let reps_out = par_map(reps, |r| {
        let w = scheme.draw(n, seed.replicate(r as u64).purpose(Purpose::Weights))?;
        degenerate_as_none(boot_t_statistics(s, &w).and_then(|t| statistic.select(&t)))
    });
    EmpiricalDistribution::from_replicates(reps_out)
}

/// Replicates drawing a fresh sample and fresh weights jointly.
///
/// [`Statistic::Classical`] ignores the scheme and gives the law of `T_n`
/// centered at the generator's mean.
pub fn unconditional_distribution(
    generator: &DataGenerator,
    scheme: &BootstrapScheme,
    statistic: Statistic,
    n: usize,
    reps: usize,
    seed: Seed,
) -> Result<EmpiricalDistribution> {
    check_inner(reps)?;
    if n < 2 {
        return Err(Error::config("n", "must be >= 2"));
    }
    let mu = generator.known_mean();
    let reps_out = par_map(reps, |r| {
        let rs = seed.replicate(r as u64);
        let s = generator.draw(n, rs.purpose(Purpose::Data))?;
        if statistic == Statistic::Classical {
            return degenerate_as_none(s.t_statistic_at(mu));
        }
        let w = scheme.draw(n, rs.purpose(Purpose::Weights))?;
        degenerate_as_none(boot_t_statistics(&s, &w).and_then(|t| statistic.select(&t)))
    });
    EmpiricalDistribution::from_replicates(reps_out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Paradigm {
    OnWeights,
    OnData,
}

impl std::fmt::Display for Paradigm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Paradigm::OnWeights => "on-weights",
            Paradigm::OnData => "on-data",
        })
    }
}

impl std::str::FromStr for Paradigm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "on-weights" | "weights" => Ok(Paradigm::OnWeights),
            "on-data" | "data" => Ok(Paradigm::OnData),
            other => Err(Error::config(
                "paradigm",
                format!("`{other}`: use on-weights or on-data"),
            )),
        }
    }
}

/// Everything needed to run one conditioning study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub paradigm: Paradigm,
    pub scheme: BootstrapScheme,
    pub generator: DataGenerator,
    pub statistic: Statistic,
    pub n: usize,
    pub outer_reps: usize,
    pub inner_reps: usize,
    /// KS level; realizations above twice this are counted.
    pub threshold: f64,
    pub seed: Seed,
}

/// Checks the study against the hypotheses of the limit theorem it probes
/// and names the regime.
pub fn validate_regime(cfg: &StudyConfig) -> Result<String> {
    if cfg.n < 2 {
        return Err(Error::config("n", "must be >= 2"));
    }
    if cfg.outer_reps == 0 {
        return Err(Error::config("outer_reps", "must be >= 1"));
    }
    check_inner(cfg.inner_reps)?;
    if !(cfg.threshold > 0.0) {
        return Err(Error::config("threshold", "must be > 0"));
    }
    let n = cfg.n as f64;
    let m = cfg.scheme.resample_size(cfg.n)?.map(|m| m as f64);
    let fail = |regime: &str, why: String| Err(Error::config("regime", format!("violates `{regime}`: {why}")));
    match cfg.paradigm {
        Paradigm::OnWeights => {
            if cfg.generator.is_infinite_variance() {
                return fail(
                    "0 < sigma^2 < infinity",
                    format!("{} has infinite variance", cfg.generator),
                );
            }
            match (cfg.statistic, m) {
                (Statistic::TStar, Some(m)) => {
                    if m >= n * n {
                        return fail("m_n = o(n^2)", format!("m_n = {m} >= n^2 = {}", n * n));
                    }
                    Ok("conditioning on Efron weights, T*, m_n = o(n^2)".into())
                }
                (Statistic::TStarStar, Some(m)) => {
                    if m <= n {
                        return fail("n = o(m_n)", format!("m_n = {m} <= n = {n}"));
                    }
                    Ok("conditioning on Efron weights, T**, n = o(m_n)".into())
                }
                (Statistic::TStar, None) => Ok("conditioning on i.i.d. positive weights, T*".into()),
                (Statistic::TStarStar, None) => Ok("conditioning on i.i.d. positive weights, T**".into()),
                (s, _) => fail("statistic in {t_star, t_star_star}", format!("{s} given")),
            }
        }
        Paradigm::OnData => {
            let Some(m) = m else {
                return Err(Error::UnsupportedParadigm(
                    "conditioning on the data is defined for Efron's scheme only".into(),
                ));
            };
            match cfg.statistic {
                Statistic::TStarStar => {
                    if cfg.generator.is_infinite_variance() {
                        let r = m / (2.0 * n * n.ln());
                        if r <= 1.0 {
                            return fail(
                                "m_n / (2 n log n) -> infinity",
                                format!("m_n / (2 n log n) = {r:.3} <= 1 with infinite-variance data"),
                            );
                        }
                        Ok("conditioning on DAN data, T**, m_n / (2 n log n) -> infinity".into())
                    } else {
                        if m <= n {
                            return fail("m_n / n -> infinity", format!("m_n = {m} <= n = {n}"));
                        }
                        Ok("conditioning on data with finite variance, T**, m_n/n -> infinity".into())
                    }
                }
                Statistic::TStarStarSn => Ok("conditioning on DAN data, T**_{m_n,S_n}, m_n/n >= eps".into()),
                s => fail("statistic in {t_star_star, t_star_star_sn}", format!("{s} given")),
            }
        }
    }
}

/// Per-realization results and their aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningStudy {
    pub paradigm: Paradigm,
    pub regime: String,
    pub outer_reps: usize,
    pub inner_reps: usize,
    /// KS distance per realization; `None` for a degenerate realization.
    pub per_realization_ks: Vec<Option<f64>>,
    /// Degenerate inner replicates per realization.
    pub per_realization_degenerate: Vec<usize>,
    pub median_ks: f64,
    pub frac_above_2x_threshold: f64,
    pub threshold: f64,
}

impl ConditioningStudy {
    pub fn degenerate_realizations(&self) -> usize {
        self.per_realization_ks.iter().filter(|k| k.is_none()).count()
    }
}

pub fn run_conditioning_study(cfg: &StudyConfig) -> Result<ConditioningStudy> {
    let regime = validate_regime(cfg)?;
    let results: Vec<Result<Option<EmpiricalDistribution>>> = (0..cfg.outer_reps)
        .map(|k| {
            let fixed = cfg.seed.replicate(k as u64).purpose(Purpose::Realization);
            let inner = cfg.seed.child(k as u64);
            let dist = match cfg.paradigm {
                Paradigm::OnWeights => {
                    let w = cfg.scheme.draw(cfg.n, fixed)?;
                    conditional_on_weights(&w, &cfg.generator, cfg.statistic, cfg.inner_reps, inner)
                }
                Paradigm::OnData => match draw_nondegenerate(&cfg.generator, cfg.n, fixed)? {
                    Some(s) => conditional_on_data(&s, &cfg.scheme, cfg.statistic, cfg.inner_reps, inner),
                    None => Err(Error::DegenerateSample("fixed sample has S_n = 0".into())),
                },
            };
            match dist {
                Ok(d) => Ok(Some(d)),
                Err(e) if e.is_degenerate() || matches!(e, Error::Experiment(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut per_realization_ks = Vec::with_capacity(cfg.outer_reps);
    let mut per_realization_degenerate = Vec::with_capacity(cfg.outer_reps);
    for r in results {
        match r? {
            Some(d) => {
                per_realization_ks.push(Some(d.ks_to_normal));
                per_realization_degenerate.push(d.degenerate_count);
            }
            None => {
                per_realization_ks.push(None);
                per_realization_degenerate.push(cfg.inner_reps);
            }
        }
    }
    let mut good: Vec<f64> = per_realization_ks.iter().flatten().copied().collect();
    if good.is_empty() {
        return Err(Error::Experiment("every fixed realization was degenerate".into()));
    }
    sort_values(&mut good);
    let above = good.iter().filter(|&&k| k > 2.0 * cfg.threshold).count();
    Ok(ConditioningStudy {
        paradigm: cfg.paradigm,
        regime,
        outer_reps: cfg.outer_reps,
        inner_reps: cfg.inner_reps,
        median_ks: median(&good),
        frac_above_2x_threshold: above as f64 / good.len() as f64,
        per_realization_ks,
        per_realization_degenerate,
        threshold: cfg.threshold,
    })
}
