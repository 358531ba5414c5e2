//! Bootstrap-t confidence bounds.
//!
//! From `B` independent weight draws on one fixed sample the bound
//! `C^{(B)}_{s,alpha}` is the `l`-th order statistic of the replicate values
//! with `l = floor(alpha (B + 1))`, and `T_n <= C` gives a one-sided bound
//! for the mean.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{draw_nondegenerate, negligibility_ratio};
use crate::error::{Error, Result};
use crate::exec::{order_quantile, par_map, sort_values};
use crate::numerics::normal_quantile;
use crate::sampling::{BootstrapScheme, DataGenerator, Purpose, Seed};
use crate::statcore::{boot_t_statistics, center_weights, Sample, Statistic};

/// Redraws allowed per replicate when a weight draw is degenerate.
pub const REDRAW_CAP: u64 = 10;

/// Minimum replicate count for [`build_bound`].
pub const MIN_B: usize = 19;

/// The statistic behind a bound: `s = 1..=4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundKind {
    /// `T*` under Efron weights.
    TStar = 1,
    /// `T**` under Efron weights.
    TStarStar = 2,
    /// `T**_{m_n,S_n}` under Efron weights.
    TStarStarSn = 3,
    /// `T*` under i.i.d. positive weights.
    TStarIid = 4,
}

impl BoundKind {
    pub fn from_index(s: u8) -> Result<Self> {
        match s {
            1 => Ok(BoundKind::TStar),
            2 => Ok(BoundKind::TStarStar),
            3 => Ok(BoundKind::TStarStarSn),
            4 => Ok(BoundKind::TStarIid),
            _ => Err(Error::config("kind", format!("bound kind {s} is not in 1..=4"))),
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn statistic(self) -> Statistic {
        match self {
            BoundKind::TStar | BoundKind::TStarIid => Statistic::TStar,
            BoundKind::TStarStar => Statistic::TStarStar,
            BoundKind::TStarStarSn => Statistic::TStarStarSn,
        }
    }

    /// Kinds 1-3 pair with Efron resampling, kind 4 with i.i.d. reweighting.
    pub fn check_scheme(self, scheme: &BootstrapScheme) -> Result<()> {
        match (self, scheme.is_efron()) {
            (BoundKind::TStarIid, true) => Err(Error::config("kind", "kind 4 needs an i.i.d. positive scheme")),
            (BoundKind::TStarIid, false) | (_, true) => Ok(()),
            (k, false) => Err(Error::config(
                "kind",
                format!("kind {} needs Efron's scheme", k.index()),
            )),
        }
    }
}

/// `l = floor(alpha (B + 1))`, validated to lie in `1..=B`.
pub fn order_index(alpha: f64, b: usize) -> Result<usize> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} is outside (0, 1]")));
    }
    let prod = alpha * (b as f64 + 1.0);
    // products like 0.29 * 100 land a hair below the integer
    let l = (prod + 1e-9 * prod.max(1.0)).floor() as usize;
    if l == 0 || l > b {
        return Err(Error::InfeasibleQuantile {
            alpha,
            b,
            l,
            min_b: min_replicates(alpha),
        });
    }
    Ok(l)
}

/// Smallest `B` with `1 <= floor(alpha (B + 1)) <= B`; `usize::MAX` if none.
pub fn min_replicates(alpha: f64) -> usize {
    if !(alpha > 0.0 && alpha < 1.0) {
        return usize::MAX;
    }
    let mut b = ((1.0 / alpha).ceil() as usize).saturating_sub(1).max(1);
    while b > 1 && order_index_raw(alpha, b - 1) >= 1 {
        b -= 1;
    }
    while order_index_raw(alpha, b) < 1 {
        b += 1;
    }
    b
}

fn order_index_raw(alpha: f64, b: usize) -> usize {
    let prod = alpha * (b as f64 + 1.0);
    (prod + 1e-9 * prod.max(1.0)).floor() as usize
}

/// The `l`-th order statistic of `B` replicate values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapQuantile {
    pub kind: Option<BoundKind>,
    pub alpha: f64,
    pub b: usize,
    pub l: usize,
    pub value: f64,
}

pub fn bootstrap_quantile(values: &[f64], alpha: f64) -> Result<BootstrapQuantile> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no replicate values".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("replicate values contain NaN".into()));
    }
    let mut sorted = values.to_vec();
    sort_values(&mut sorted);
    quantile_of_sorted(&sorted, alpha)
}

fn quantile_of_sorted(sorted: &[f64], alpha: f64) -> Result<BootstrapQuantile> {
    let b = sorted.len();
    let l = order_index(alpha, b)?;
    Ok(BootstrapQuantile {
        kind: None,
        alpha,
        b,
        l,
        value: sorted[l - 1],
    })
}

/// `B` replicate values of one statistic on a fixed sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicates {
    pub kind: BoundKind,
    /// Sorted ascending.
    pub sorted: Vec<f64>,
    /// `M_n` of each accepted weight draw, sorted ascending.
    pub sorted_mn: Vec<f64>,
    /// Degenerate weight draws that were replaced.
    pub redraws: usize,
}

impl Replicates {
    pub fn quantile(&self, alpha: f64) -> Result<BootstrapQuantile> {
        let mut q = quantile_of_sorted(&self.sorted, alpha)?;
        q.kind = Some(self.kind);
        Ok(q)
    }

    pub fn mn_quantiles(&self) -> [f64; 3] {
        [0.5, 0.9, 0.99].map(|p| order_quantile(&self.sorted_mn, p))
    }
}

/// Draws `b` independent weight vectors and evaluates the kind's statistic
/// on the fixed sample `s` for each one.
pub fn bootstrap_replicates(
    s: &Sample,
    scheme: &BootstrapScheme,
    kind: BoundKind,
    b: usize,
    seed: Seed,
) -> Result<Replicates> {
    kind.check_scheme(scheme)?;
    if b < MIN_B {
        return Err(Error::config("B", format!("need B >= {MIN_B}, got {b}")));
    }
    if s.is_degenerate() {
        return Err(Error::DegenerateSample("S_n = 0 (constant sample)".into()));
    }
    let n = s.len();
    let statistic = kind.statistic();
    let draws: Vec<Result<(f64, f64, usize)>> = par_map(b, |r| {
        let base = seed.replicate(r as u64).purpose(Purpose::Weights);
        for attempt in 0..=REDRAW_CAP {
            let ws = if attempt == 0 {
                base
            } else {
                base.child(attempt).purpose(Purpose::Redraw)
            };
            let w = scheme.draw(n, ws)?;
            let value = boot_t_statistics(s, &w).and_then(|t| statistic.select(&t));
            match value {
                Ok(v) => {
                    let mn = negligibility_ratio(&center_weights(&w)?)?;
                    return Ok((v, mn, attempt as usize));
                }
                Err(e) if e.is_degenerate() => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::Experiment(format!(
            "replicate {r}: {} consecutive degenerate weight draws",
            REDRAW_CAP + 1
        )))
    });
    let mut sorted = Vec::with_capacity(b);
    let mut sorted_mn = Vec::with_capacity(b);
    let mut redraws = 0;
    for d in draws {
        let (v, mn, k) = d?;
        sorted.push(v);
        sorted_mn.push(mn);
        redraws += k;
    }
    sort_values(&mut sorted);
    sort_values(&mut sorted_mn);
    Ok(Replicates {
        kind,
        sorted,
        sorted_mn,
        redraws,
    })
}

/// `C^{(B)}_{s,alpha}` for the fixed sample `s`.
pub fn build_bound(
    s: &Sample,
    scheme: &BootstrapScheme,
    kind: BoundKind,
    b: usize,
    alpha: f64,
    seed: Seed,
) -> Result<BootstrapQuantile> {
    order_index(alpha, b)?;
    bootstrap_replicates(s, scheme, kind, b, seed)?.quantile(alpha)
}

/// Lower confidence bound for the mean implied by `T_n <= C`:
/// `Xbar - C S_n / sqrt(n)`.
pub fn mean_lower_bound(s: &Sample, c: f64) -> f64 {
    s.mean() - c * s.std_dev() / (s.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub kind: BoundKind,
    pub nominal: f64,
    /// Fraction of repetitions with `T_n <= C^{(B)}`.
    pub empirical: f64,
    pub repetitions: usize,
    pub mean_quantile: f64,
    pub z_alpha: f64,
    /// Repetitions whose data sample stayed constant after redraws.
    pub degenerate_samples: usize,
    pub weight_redraws: usize,
}

/// Per repetition: a fresh sample, `B` fresh weight draws, and the event
/// `T_n <= C^{(B)}` with `T_n` centered at the generator's mean.
#[allow(clippy::too_many_arguments)]
pub fn coverage_experiment(
    generator: &DataGenerator,
    scheme: &BootstrapScheme,
    kind: BoundKind,
    n: usize,
    b: usize,
    alpha: f64,
    repetitions: usize,
    seed: Seed,
) -> Result<CoverageResult> {
    if repetitions < 100 {
        return Err(Error::config(
            "reps",
            format!("coverage needs >= 100 repetitions, got {repetitions}"),
        ));
    }
    if n < 2 {
        return Err(Error::config("n", "must be >= 2"));
    }
    kind.check_scheme(scheme)?;
    order_index(alpha, b)?;
    let z_alpha = if alpha < 1.0 {
        normal_quantile(alpha)?.get()
    } else {
        f64::INFINITY
    };
    let mu = generator.known_mean();
    let outcomes: Vec<Result<Option<(bool, f64, usize)>>> = par_map(repetitions, |rep| {
        let Some(s) = draw_nondegenerate(generator, n, seed.replicate(rep as u64).purpose(Purpose::Data))? else {
            return Ok(None);
        };
        let reps = bootstrap_replicates(&s, scheme, kind, b, seed.child(rep as u64))?;
        let c = reps.quantile(alpha)?.value;
        Ok(Some((s.t_statistic_at(mu)? <= c, c, reps.redraws)))
    });
    let mut covered = 0usize;
    let mut quantile_sum = 0.0;
    let mut used = 0usize;
    let mut weight_redraws = 0;
    for o in outcomes {
        if let Some((hit, c, k)) = o? {
            used += 1;
            covered += hit as usize;
            quantile_sum += c;
            weight_redraws += k;
        }
    }
    if used == 0 {
        return Err(Error::Experiment("every repetition drew a constant sample".into()));
    }
    Ok(CoverageResult {
        kind,
        nominal: alpha,
        empirical: covered as f64 / used as f64,
        repetitions: used,
        mean_quantile: quantile_sum / used as f64,
        z_alpha,
        degenerate_samples: repetitions - used,
        weight_redraws,
    })
}
