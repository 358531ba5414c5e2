//! Deterministic data-parallel execution.
//!
//! Replicates are mapped in parallel and collected in index order, so a
//! result never depends on the worker count or on scheduling.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub fn par_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool
/// when `threads` is `None`.
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::config("threads", "must be >= 1")),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::config("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Value at the `p`-quantile of an ascending slice, by the inverse empirical
/// CDF (`sorted[ceil(p N) - 1]`).
pub fn order_quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let n = sorted.len();
    let k = ((p * n as f64) - 1e-9).ceil().max(1.0) as usize;
    sorted[k.min(n) - 1]
}

pub fn median(sorted: &[f64]) -> f64 {
    order_quantile(sorted, 0.5)
}

pub fn sort_values(v: &mut [f64]) {
    v.sort_by(f64::total_cmp);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_order_for_any_pool() {
        let serial: Vec<usize> = (0..1000).map(|i| i * i).collect();
        for t in [1, 2, 7] {
            let got = with_threads(Some(t), || par_map(1000, |i| i * i)).unwrap();
            assert_eq!(got, serial);
        }
        assert!(with_threads(Some(0), || 1).is_err());
    }

    #[test]
    fn quantiles() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(order_quantile(&v, 0.5), 5.0);
        assert_eq!(order_quantile(&v, 0.9), 9.0);
        assert_eq!(order_quantile(&v, 0.99), 10.0);
        assert_eq!(order_quantile(&v, 0.0), 1.0);
        assert_eq!(median(&[3.0]), 3.0);
        assert!(order_quantile(&[], 0.5).is_nan());
    }
}
