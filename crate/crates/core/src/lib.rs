//! Weighted-bootstrap t-statistics and the Monte Carlo machinery to study
//! them.
//!
//! A bootstrap is described by non-negative weights `v_1..v_n` with total
//! mass `m_n`: Efron resampling gives multinomial counts, reweighting gives
//! i.i.d. positive draws such as Gamma(4, 1). On top of those weights the
//! crate provides
//!
//! * [`statcore`]: the classical and three bootstrapped t-statistics,
//! * [`diagnostics`]: maximal negligibility, Lindeberg probes, variance ratios,
//! * [`cltlab`]: distributions of the statistics conditional on the weights
//!   or on the data, summarized by their KS distance to the normal law,
//! * [`intervals`]: bootstrap-t confidence bounds and coverage experiments.
//!
//! All randomness flows from [`sampling::Seed`] keys, so every study is
//! reproducible bit for bit regardless of the number of worker threads.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cltlab;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod intervals;
pub mod numerics;
pub mod sampling;
pub mod statcore;

pub mod cli;

pub use error::{Error, Result};
pub use sampling::{BootstrapScheme, DataGenerator, MRule, PositiveLaw, Seed, WeightVector};
pub use statcore::{Sample, Statistic};
