//! Finite-n validity diagnostics for conditioning on the weights.
//!
//! * the maximal negligibility ratio `M_n = max a_i^2 / sum a_i^2`,
//! * Lindeberg-type probes `max_i P_{X|v}(V_{i,n} / D > eps)` with
//!   `V_{i,n} = |a_i (X_i - mu)|` and `D` either `S_n V_n` or
//!   `S*_{m_n}/sqrt(m_n)`,
//! * the variance ratio `(S*^2/m_n) / (sigma^2 V_n^2)`.
//!
//! Probes hold one weight realization fixed and redraw the data.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exec::{order_quantile, par_map, sort_values};
use crate::sampling::{draw_efron_weights, BootstrapScheme, DataGenerator, Purpose, SchemeTag, Seed, WeightVector};
use crate::statcore::{boot_sample_variance, center_weights, CenteredCoefficients, Sample};

/// Redraw attempts for a data sample with `S_n = 0` before the replicate
/// counts as degenerate.
pub const SAMPLE_RETRY_CAP: u64 = 10;

pub fn max_negligibility(w: &WeightVector) -> Result<f64> {
    let c = center_weights(w)?;
    negligibility_ratio(&c)
}

pub(crate) fn negligibility_ratio(c: &CenteredCoefficients) -> Result<f64> {
    if !(c.v_n_sq > 0.0) {
        return Err(Error::DegenerateWeights("V_n^2 = 0, M_n undefined".into()));
    }
    Ok(c.max_a_sq / c.v_n_sq)
}

/// `E V_n^2 = (1 - 1/n) / m` for Efron weights.
pub fn expected_efron_v_n_sq(n: usize, m: u64) -> f64 {
    (1.0 - 1.0 / n as f64) / m as f64
}

/// One row of an `M_n` decay table.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub n: usize,
    /// Efron resample size; `None` for i.i.d. positive weights.
    pub m: Option<u64>,
    pub mean_v_n_sq: f64,
    /// Monte Carlo standard error of `mean_v_n_sq`.
    pub se_v_n_sq: f64,
    pub expected_v_n_sq: Option<f64>,
    pub mn_p50: f64,
    pub mn_p90: f64,
    pub mn_p99: f64,
    pub degenerate_count: usize,
}

pub fn m_n_decay_study(scheme: &BootstrapScheme, n_grid: &[usize], reps: usize, seed: Seed) -> Result<Vec<DecayRow>> {
    if reps < 100 {
        return Err(Error::config(
            "reps",
            format!("M_n decay study needs reps >= 100, got {reps}"),
        ));
    }
    if n_grid.is_empty() {
        return Err(Error::config("n_grid", "empty"));
    }
    n_grid
        .iter()
        .enumerate()
        .map(|(row, &n)| {
            if n < 2 {
                return Err(Error::config("n_grid", format!("n = {n}; need n >= 2")));
            }
            let m = scheme.resample_size(n)?;
            let row_seed = seed.child(row as u64);
            let draws: Vec<Result<(Option<f64>, f64)>> = par_map(reps, |r| {
                let w = scheme.draw(n, row_seed.replicate(r as u64).purpose(Purpose::Weights))?;
                let c = center_weights(&w)?;
                Ok((negligibility_ratio(&c).ok(), c.v_n_sq))
            });
            let mut mns = Vec::with_capacity(reps);
            let mut vs = Vec::with_capacity(reps);
            let mut degenerate_count = 0;
            for d in draws {
                let (mn, v) = d?;
                vs.push(v);
                match mn {
                    Some(mn) => mns.push(mn),
                    None => degenerate_count += 1,
                }
            }
            if mns.is_empty() {
                return Err(Error::Experiment(format!("every weight draw at n = {n} had V_n^2 = 0")));
            }
            sort_values(&mut mns);
            let k = vs.len() as f64;
            let mean_v_n_sq = vs.iter().sum::<f64>() / k;
            let var = vs.iter().map(|v| (v - mean_v_n_sq).powi(2)).sum::<f64>() / (k - 1.0);
            Ok(DecayRow {
                n,
                m,
                mean_v_n_sq,
                se_v_n_sq: (var / k).sqrt(),
                expected_v_n_sq: m.map(|m| expected_efron_v_n_sq(n, m)),
                mn_p50: order_quantile(&mns, 0.5),
                mn_p90: order_quantile(&mns, 0.9),
                mn_p99: order_quantile(&mns, 0.99),
                degenerate_count,
            })
        })
        .collect()
}

/// Denominator used by a Lindeberg probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeMode {
    /// `S_n V_n`, the normalizer of `T*`.
    TStar,
    /// `S*_{m_n}/sqrt(m_n)`, the normalizer of `T**`.
    TStarStar,
}

impl std::str::FromStr for ProbeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "t_star" | "t-star" => Ok(ProbeMode::TStar),
            "t_star_star" | "t-star-star" => Ok(ProbeMode::TStarStar),
            other => Err(Error::config(
                "statistic",
                format!("probe mode `{other}`: use t_star or t_star_star"),
            )),
        }
    }
}

/// Draws a data sample with `S_n > 0`, redrawing up to the retry cap.
pub(crate) fn draw_nondegenerate(generator: &DataGenerator, n: usize, seed: Seed) -> Result<Option<Sample>> {
    for attempt in 0..SAMPLE_RETRY_CAP {
        let s = if attempt == 0 {
            generator.draw(n, seed)?
        } else {
            generator.draw(n, seed.child(attempt).purpose(Purpose::Redraw))?
        };
        if !s.is_degenerate() {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

/// Per-epsilon probe estimates for one fixed weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeEstimates {
    pub epsilon_grid: Vec<f64>,
    pub estimates: Vec<f64>,
    pub replicates_used: usize,
    pub degenerate_count: usize,
}

type ProbeAcc = (Vec<u64>, usize, usize);

pub fn lindeberg_probe_grid(
    w: &WeightVector,
    generator: &DataGenerator,
    epsilon_grid: &[f64],
    reps: usize,
    mode: ProbeMode,
    seed: Seed,
) -> Result<ProbeEstimates> {
    if reps < 100 {
        return Err(Error::config(
            "reps",
            format!("Lindeberg probe needs R >= 100, got {reps}"),
        ));
    }
    if epsilon_grid.is_empty() || epsilon_grid.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::config(
            "epsilon",
            "grid must be non-empty with every epsilon > 0",
        ));
    }
    let c = center_weights(w)?;
    if !(c.v_n_sq > 0.0) {
        return Err(Error::DegenerateWeights("V_n^2 = 0, probe undefined".into()));
    }
    let n = w.len();
    let mu = generator.known_mean();
    let v_n = c.v_n_sq.sqrt();
    let root_m = w.total_mass().sqrt();
    let k = epsilon_grid.len();

    // counts[e * n + i] = #replicates with V_{i,n}/D > eps_e. Integer sums are
    // order independent, so the parallel fold is deterministic.
    let (counts, used, degenerate): ProbeAcc = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<Option<Vec<f64>>> {
            let Some(s) = draw_nondegenerate(generator, n, seed.replicate(r as u64).purpose(Purpose::Data))? else {
                return Ok(None);
            };
            let denom = match mode {
                ProbeMode::TStar => s.std_dev() * v_n,
                ProbeMode::TStarStar => {
                    let bv = boot_sample_variance(&s, w)?;
                    if !(bv > 0.0) {
                        return Ok(None);
                    }
                    bv.sqrt() / root_m
                }
            };
            Ok(Some(
                c.a.iter()
                    .zip(s.values())
                    .map(|(&a, &x)| (a * (x - mu)).abs() / denom)
                    .collect(),
            ))
        })
        .try_fold(
            || (vec![0u64; k * n], 0usize, 0usize),
            |(mut acc, used, deg), item| -> Result<ProbeAcc> {
                match item? {
                    Some(ratios) => {
                        for (e, &eps) in epsilon_grid.iter().enumerate() {
                            let row = &mut acc[e * n..(e + 1) * n];
                            for (slot, &ratio) in row.iter_mut().zip(&ratios) {
                                if ratio > eps {
                                    *slot += 1;
                                }
                            }
                        }
                        Ok((acc, used + 1, deg))
                    }
                    None => Ok((acc, used, deg + 1)),
                }
            },
        )
        .try_reduce(
            || (vec![0u64; k * n], 0, 0),
            |(mut a, ua, da), (b, ub, db)| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok((a, ua + ub, da + db))
            },
        )?;
    if used == 0 {
        return Err(Error::Experiment("every probe replicate was degenerate".into()));
    }
    let estimates = (0..k)
        .map(|e| counts[e * n..(e + 1) * n].iter().copied().max().unwrap_or(0) as f64 / used as f64)
        .collect();
    Ok(ProbeEstimates {
        epsilon_grid: epsilon_grid.to_vec(),
        estimates,
        replicates_used: used,
        degenerate_count: degenerate,
    })
}

/// `max_i P_{X|v}(V_{i,n}/D > eps)` estimated from `reps` data draws.
pub fn lindeberg_probe(
    w: &WeightVector,
    generator: &DataGenerator,
    epsilon: f64,
    reps: usize,
    mode: ProbeMode,
    seed: Seed,
) -> Result<f64> {
    Ok(lindeberg_probe_grid(w, generator, &[epsilon], reps, mode, seed)?.estimates[0])
}

/// Negligibility summary for one fixed weight realization.
#[derive(Debug, Clone, PartialEq)]
pub struct NegligibilityReport {
    pub m_n_ratio: f64,
    pub v_n_sq: f64,
    pub expected_v_n_sq: Option<f64>,
    pub epsilon_grid: Vec<f64>,
    pub probe_estimates: Vec<f64>,
    pub replicates_used: usize,
    pub degenerate_count: usize,
}

pub fn negligibility_report(
    w: &WeightVector,
    generator: &DataGenerator,
    epsilon_grid: &[f64],
    reps: usize,
    mode: ProbeMode,
    seed: Seed,
) -> Result<NegligibilityReport> {
    let c = center_weights(w)?;
    let m_n_ratio = negligibility_ratio(&c)?;
    let probe = lindeberg_probe_grid(w, generator, epsilon_grid, reps, mode, seed)?;
    let expected_v_n_sq = match w.tag() {
        SchemeTag::Efron => Some(expected_efron_v_n_sq(w.len(), w.total_mass() as u64)),
        SchemeTag::IidPositive => None,
    };
    Ok(NegligibilityReport {
        m_n_ratio,
        v_n_sq: c.v_n_sq,
        expected_v_n_sq,
        epsilon_grid: probe.epsilon_grid,
        probe_estimates: probe.estimates,
        replicates_used: probe.replicates_used,
        degenerate_count: probe.degenerate_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceRatio {
    pub ratio: f64,
    pub deviation: f64,
    /// Constant bootstrap sample (`S*^2 = 0`).
    pub degenerate: bool,
}

/// Empirical distribution of `|(S*^2/m_n)/(sigma^2 V_n^2) - 1|` over data
/// draws with the weights held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceRatioReport {
    /// In replicate order.
    pub entries: Vec<VarianceRatio>,
    /// Deviations sorted ascending.
    pub sorted_deviations: Vec<f64>,
    pub degenerate_count: usize,
}

impl VarianceRatioReport {
    pub fn deviation_quantile(&self, p: f64) -> f64 {
        order_quantile(&self.sorted_deviations, p)
    }

    pub fn median_deviation(&self) -> f64 {
        self.deviation_quantile(0.5)
    }
}

pub fn variance_ratio_probe(
    w: &WeightVector,
    generator: &DataGenerator,
    reps: usize,
    seed: Seed,
) -> Result<VarianceRatioReport> {
    if reps < 100 {
        return Err(Error::config(
            "reps",
            format!("variance-ratio probe needs R >= 100, got {reps}"),
        ));
    }
    let sigma_sq = generator.known_variance().ok_or_else(|| {
        Error::UnsupportedMode(format!(
            "variance-ratio probe needs a finite known variance; {generator} has none"
        ))
    })?;
    let c = center_weights(w)?;
    if !(c.v_n_sq > 0.0) {
        return Err(Error::DegenerateWeights("V_n^2 = 0, variance ratio undefined".into()));
    }
    let m = w.total_mass();
    let n = w.len();
    let entries: Vec<Result<VarianceRatio>> = par_map(reps, |r| {
        let s = generator.draw(n, seed.replicate(r as u64).purpose(Purpose::Data))?;
        let bv = boot_sample_variance(&s, w)?;
        if !(bv > 0.0) {
            return Ok(VarianceRatio {
                ratio: 0.0,
                deviation: 1.0,
                degenerate: true,
            });
        }
        let ratio = (bv / m) / (sigma_sq * c.v_n_sq);
        Ok(VarianceRatio {
            ratio,
            deviation: (ratio - 1.0).abs(),
            degenerate: false,
        })
    });
    let entries: Vec<VarianceRatio> = entries.into_iter().collect::<Result<_>>()?;
    let mut sorted_deviations: Vec<f64> = entries.iter().map(|e| e.deviation).collect();
    sort_values(&mut sorted_deviations);
    Ok(VarianceRatioReport {
        degenerate_count: entries.iter().filter(|e| e.degenerate).count(),
        entries,
        sorted_deviations,
    })
}

/// Relative error of `S*^2` against `S_n^2` for one resample size.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedNRow {
    pub m: u64,
    pub median_rel_error: f64,
    pub p90_rel_error: f64,
    pub degenerate_count: usize,
}

/// Holds one sample fixed and, for each `m`, draws Efron weights and records
/// `|S*^2 - S_n^2| / S_n^2`.
pub fn fixed_n_consistency(sample: &Sample, m_grid: &[u64], draws: usize, seed: Seed) -> Result<Vec<FixedNRow>> {
    if sample.is_degenerate() {
        return Err(Error::DegenerateSample("S_n = 0 (constant sample)".into()));
    }
    if draws == 0 {
        return Err(Error::config("reps", "must be >= 1"));
    }
    if m_grid.is_empty() || m_grid.contains(&0) {
        return Err(Error::config("m_grid", "must be non-empty with every m >= 1"));
    }
    let s2 = sample.variance();
    let n = sample.len();
    m_grid
        .iter()
        .enumerate()
        .map(|(row, &m)| {
            let row_seed = seed.child(row as u64);
            let errs: Vec<Result<(f64, bool)>> = par_map(draws, |r| {
                let w = draw_efron_weights(n, m, row_seed.replicate(r as u64).purpose(Purpose::Weights))?;
                let bv = boot_sample_variance(sample, &w)?;
                Ok(((bv - s2).abs() / s2, !(bv > 0.0)))
            });
            let errs: Vec<(f64, bool)> = errs.into_iter().collect::<Result<_>>()?;
            let degenerate_count = errs.iter().filter(|e| e.1).count();
            let mut rel: Vec<f64> = errs.into_iter().map(|e| e.0).collect();
            sort_values(&mut rel);
            Ok(FixedNRow {
                m,
                median_rel_error: order_quantile(&rel, 0.5),
                p90_rel_error: order_quantile(&rel, 0.9),
                degenerate_count,
            })
        })
        .collect()
}
