//! C ABI over the `wboot` library.
//!
//! Conventions:
//!
//! * every fallible function returns a [`WbootStatus`]; results go through
//!   out-pointers that are written only on `WBOOT_OK`;
//! * objects are opaque handles created by `wboot_*_new`/`_parse` and
//!   released by the matching `_free`, which accepts NULL;
//! * after a failure, [`wboot_last_error`] returns a message for the calling
//!   thread, valid until that thread's next call into the library.
//!
//! Seeds are a `(seed, replicate)` pair; equal pairs give equal draws on
//! every platform and thread count.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wboot::error::Error;
use wboot::intervals::{self, BoundKind};
use wboot::numerics;
use wboot::sampling::{parse_generator, parse_scheme, Purpose};
use wboot::statcore::{self, Sample};
use wboot::{BootstrapScheme, DataGenerator, MRule, Seed, WeightVector};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WbootStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    DegenerateWeights = 4,
    DegenerateSample = 5,
    DegenerateBootstrapSample = 6,
    UnsupportedParadigm = 7,
    UnsupportedMode = 8,
    InfeasibleQuantile = 9,
    Config = 10,
    Experiment = 11,
    Io = 12,
    BufferTooSmall = 13,
    Internal = 14,
}

impl From<&Error> for WbootStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => WbootStatus::InvalidArgument,
            Error::Domain(_) => WbootStatus::Domain,
            Error::DegenerateWeights(_) => WbootStatus::DegenerateWeights,
            Error::DegenerateSample(_) => WbootStatus::DegenerateSample,
            Error::DegenerateBootstrapSample(_) => WbootStatus::DegenerateBootstrapSample,
            Error::UnsupportedParadigm(_) => WbootStatus::UnsupportedParadigm,
            Error::UnsupportedMode(_) => WbootStatus::UnsupportedMode,
            Error::InfeasibleQuantile { .. } => WbootStatus::InfeasibleQuantile,
            Error::Config { .. } => WbootStatus::Config,
            Error::Experiment(_) => WbootStatus::Experiment,
            Error::Invariant(_) => WbootStatus::Internal,
            Error::Io(_) => WbootStatus::Io,
        }
    }
}

/// Opaque data sample.
pub struct WbootSample(Sample);

/// Opaque bootstrap scheme (Efron with an m-rule, or i.i.d. positive weights).
pub struct WbootScheme(BootstrapScheme);

/// Opaque data generator.
pub struct WbootGenerator(DataGenerator);

/// The three bootstrapped t-statistics for one weight vector.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WbootBootTriple {
    pub t_star: f64,
    /// NaN when `has_t_star_star` is false (constant bootstrap sample).
    pub t_star_star: f64,
    pub has_t_star_star: bool,
    pub t_star_star_sn: f64,
    /// `S*^2`.
    pub boot_var: f64,
    /// `V_n^2`.
    pub v_n_sq: f64,
}

/// A bootstrap-t bound for one fixed sample.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WbootBound {
    pub kind: u8,
    pub alpha: f64,
    pub b: usize,
    /// 1-based order statistic index.
    pub l: usize,
    /// `C^{(B)}`, the l-th smallest replicate.
    pub c: f64,
    /// `Xbar - C S_n / sqrt(n)`.
    pub mu_lower_bound: f64,
    pub weight_redraws: usize,
}

/// Summary of a coverage experiment.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WbootCoverage {
    pub kind: u8,
    pub nominal: f64,
    pub empirical: f64,
    pub repetitions: usize,
    pub mean_c: f64,
    pub z_alpha: f64,
    pub degenerate_samples: usize,
    pub weight_redraws: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: WbootStatus, msg: impl Into<String>) -> WbootStatus {
    set_last_error(msg.into());
    status
}

// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), WbootStatus>) -> WbootStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WbootStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(WbootStatus::Internal, format!("internal panic: {msg}"))
        }
    }
}

fn lift<T>(r: wboot::Result<T>) -> Result<T, WbootStatus> {
    r.map_err(|e| fail(WbootStatus::from(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, WbootStatus> {
    p.as_ref()
        .ok_or_else(|| fail(WbootStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, WbootStatus> {
    p.as_mut()
        .ok_or_else(|| fail(WbootStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], WbootStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(WbootStatus::NullPointer, format!("{what} is NULL")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, WbootStatus> {
    if p.is_null() {
        return Err(fail(WbootStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(WbootStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn seed_of(seed: u64, replicate: u64) -> Seed {
    Seed::new(seed).replicate(replicate)
}

/// Message of the calling thread's last failure, or NULL. The pointer stays
/// valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn wboot_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wboot_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn wboot_normal_cdf(x: f64, out_p: *mut f64) -> WbootStatus {
    guard(|| {
        *out(out_p, "out_p")? = lift(numerics::normal_cdf(x))?.get();
        Ok(())
    })
}

/// Standard normal quantile for `p` in (0, 1).
#[no_mangle]
pub unsafe extern "C" fn wboot_normal_quantile(p: f64, out_z: *mut f64) -> WbootStatus {
    guard(|| {
        *out(out_z, "out_z")? = lift(numerics::normal_quantile(p))?.get();
        Ok(())
    })
}

/// KS distance between the empirical law of `values` (any order) and N(0,1).
#[no_mangle]
pub unsafe extern "C" fn wboot_ks_to_normal(values: *const f64, len: usize, out_d: *mut f64) -> WbootStatus {
    guard(|| {
        let mut v = slice(values, len, "values")?.to_vec();
        wboot::exec::sort_values(&mut v);
        *out(out_d, "out_d")? = lift(numerics::ks_to_normal(&v))?;
        Ok(())
    })
}

/// Copies `values` into a new sample.
#[no_mangle]
pub unsafe extern "C" fn wboot_sample_new(
    values: *const f64,
    len: usize,
    out_sample: *mut *mut WbootSample,
) -> WbootStatus {
    guard(|| {
        let o = out(out_sample, "out_sample")?;
        let s = lift(Sample::new(slice(values, len, "values")?.to_vec()))?;
        *o = Box::into_raw(Box::new(WbootSample(s)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wboot_sample_free(sample: *mut WbootSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Number of observations; 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn wboot_sample_len(sample: *const WbootSample) -> usize {
    sample.as_ref().map_or(0, |s| s.0.len())
}

/// Mean and variance (denominator n) of the sample.
#[no_mangle]
pub unsafe extern "C" fn wboot_sample_moments(
    sample: *const WbootSample,
    out_mean: *mut f64,
    out_variance: *mut f64,
) -> WbootStatus {
    guard(|| {
        let s = &deref(sample, "sample")?.0;
        let (m, v) = (out(out_mean, "out_mean")?, out(out_variance, "out_variance")?);
        *m = s.mean();
        *v = s.variance();
        Ok(())
    })
}

/// `sqrt(n)(Xbar - mu)/S_n`.
#[no_mangle]
pub unsafe extern "C" fn wboot_t_statistic(sample: *const WbootSample, mu: f64, out_t: *mut f64) -> WbootStatus {
    guard(|| {
        let s = &deref(sample, "sample")?.0;
        *out(out_t, "out_t")? = lift(s.t_statistic_at(mu))?;
        Ok(())
    })
}

/// T*, T** and T**_{m,S_n} for explicit non-negative weights (one per
/// observation, not all zero).
#[no_mangle]
pub unsafe extern "C" fn wboot_boot_t_statistics(
    sample: *const WbootSample,
    weights: *const f64,
    len: usize,
    out_triple: *mut WbootBootTriple,
) -> WbootStatus {
    guard(|| {
        let s = &deref(sample, "sample")?.0;
        let o = out(out_triple, "out_triple")?;
        let w = lift(WeightVector::from_reals(slice(weights, len, "weights")?.to_vec()))?;
        let t = lift(statcore::boot_t_statistics(s, &w))?;
        *o = WbootBootTriple {
            t_star: t.t_star,
            t_star_star: t.t_star_star.unwrap_or(f64::NAN),
            has_t_star_star: t.t_star_star.is_some(),
            t_star_star_sn: t.t_star_star_sn,
            boot_var: t.boot_var,
            v_n_sq: t.v_n_sq,
        };
        Ok(())
    })
}

/// Parses a scheme (`efron`, `gamma`, `gamma:SHAPE,RATE`, `exp:RATE`,
/// `const:C`) with an m-rule (`fixed:M`, `ratio:C`, `nlogn:C`, `sqrt-cap`)
/// used by Efron only. `m_rule` may be NULL for `ratio:1`.
#[no_mangle]
pub unsafe extern "C" fn wboot_scheme_parse(
    scheme: *const c_char,
    m_rule: *const c_char,
    out_scheme: *mut *mut WbootScheme,
) -> WbootStatus {
    guard(|| {
        let o = out(out_scheme, "out_scheme")?;
        let rule = if m_rule.is_null() {
            MRule::Ratio(1.0)
        } else {
            lift(text(m_rule, "m_rule")?.parse())?
        };
        let s = lift(parse_scheme(text(scheme, "scheme")?, rule))?;
        *o = Box::into_raw(Box::new(WbootScheme(s)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wboot_scheme_free(scheme: *mut WbootScheme) {
    if !scheme.is_null() {
        drop(Box::from_raw(scheme));
    }
}

/// Draws `n` weights into `buf` (capacity `buf_len >= n`) and their total
/// mass into `out_mass` (may be NULL).
#[no_mangle]
pub unsafe extern "C" fn wboot_draw_weights(
    scheme: *const WbootScheme,
    n: usize,
    seed: u64,
    replicate: u64,
    buf: *mut f64,
    buf_len: usize,
    out_mass: *mut f64,
) -> WbootStatus {
    guard(|| {
        let sc = &deref(scheme, "scheme")?.0;
        if buf.is_null() {
            return Err(fail(WbootStatus::NullPointer, "buf is NULL"));
        }
        if buf_len < n {
            return Err(fail(
                WbootStatus::BufferTooSmall,
                format!("buffer holds {buf_len}, need {n}"),
            ));
        }
        let w = lift(sc.draw(n, seed_of(seed, replicate).purpose(Purpose::Weights)))?;
        std::slice::from_raw_parts_mut(buf, n).copy_from_slice(w.weights());
        if let Some(m) = out_mass.as_mut() {
            *m = w.total_mass();
        }
        Ok(())
    })
}

/// Parses `normal[:MU,SD]`, `exp-centered[:RATE]`, `t:NU` or
/// `two-point:LO,HI,P`.
#[no_mangle]
pub unsafe extern "C" fn wboot_generator_parse(
    spec: *const c_char,
    out_generator: *mut *mut WbootGenerator,
) -> WbootStatus {
    guard(|| {
        let o = out(out_generator, "out_generator")?;
        let g = lift(parse_generator(text(spec, "spec")?))?;
        *o = Box::into_raw(Box::new(WbootGenerator(g)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wboot_generator_free(generator: *mut WbootGenerator) {
    if !generator.is_null() {
        drop(Box::from_raw(generator));
    }
}

/// Draws a sample of size `n` from the generator.
#[no_mangle]
pub unsafe extern "C" fn wboot_draw_sample(
    generator: *const WbootGenerator,
    n: usize,
    seed: u64,
    replicate: u64,
    out_sample: *mut *mut WbootSample,
) -> WbootStatus {
    guard(|| {
        let g = &deref(generator, "generator")?.0;
        let o = out(out_sample, "out_sample")?;
        let s = lift(g.draw(n, seed_of(seed, replicate).purpose(Purpose::Data)))?;
        *o = Box::into_raw(Box::new(WbootSample(s)));
        Ok(())
    })
}

/// `l = floor(alpha (B + 1))`, failing when it falls outside `1..=B`.
#[no_mangle]
pub unsafe extern "C" fn wboot_order_index(alpha: f64, b: usize, out_l: *mut usize) -> WbootStatus {
    guard(|| {
        *out(out_l, "out_l")? = lift(intervals::order_index(alpha, b))?;
        Ok(())
    })
}

/// Bootstrap-t bound `C^{(B)}` of kind 1-4 for a fixed sample.
#[no_mangle]
pub unsafe extern "C" fn wboot_build_bound(
    sample: *const WbootSample,
    scheme: *const WbootScheme,
    kind: u8,
    b: usize,
    alpha: f64,
    seed: u64,
    out_bound: *mut WbootBound,
) -> WbootStatus {
    guard(|| {
        let s = &deref(sample, "sample")?.0;
        let sc = &deref(scheme, "scheme")?.0;
        let o = out(out_bound, "out_bound")?;
        let k = lift(BoundKind::from_index(kind))?;
        lift(intervals::order_index(alpha, b))?;
        let reps = lift(intervals::bootstrap_replicates(s, sc, k, b, Seed::new(seed)))?;
        let q = lift(reps.quantile(alpha))?;
        *o = WbootBound {
            kind,
            alpha,
            b,
            l: q.l,
            c: q.value,
            mu_lower_bound: intervals::mean_lower_bound(s, q.value),
            weight_redraws: reps.redraws,
        };
        Ok(())
    })
}

/// Coverage of `T_n <= C^{(B)}` over `repetitions` fresh samples.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wboot_coverage(
    generator: *const WbootGenerator,
    scheme: *const WbootScheme,
    kind: u8,
    n: usize,
    b: usize,
    alpha: f64,
    repetitions: usize,
    seed: u64,
    out_coverage: *mut WbootCoverage,
) -> WbootStatus {
    guard(|| {
        let g = &deref(generator, "generator")?.0;
        let sc = &deref(scheme, "scheme")?.0;
        let o = out(out_coverage, "out_coverage")?;
        let k = lift(BoundKind::from_index(kind))?;
        let r = lift(intervals::coverage_experiment(
            g,
            sc,
            k,
            n,
            b,
            alpha,
            repetitions,
            Seed::new(seed),
        ))?;
        *o = WbootCoverage {
            kind,
            nominal: r.nominal,
            empirical: r.empirical,
            repetitions: r.repetitions,
            mean_c: r.mean_quantile,
            z_alpha: r.z_alpha,
            degenerate_samples: r.degenerate_samples,
            weight_redraws: r.weight_redraws,
        };
        Ok(())
    })
}
