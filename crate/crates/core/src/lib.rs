//! Posting-bot detection for blockchain social platforms.
//!
//! The crate turns per-account activity (blogs, replies, token transfers,
//! follow counts) into four feature groups and evaluates tree ensembles on
//! them with nested cross-validation:
//!
//! * [`cdfa`]: distance between an account's frequent words and each of its
//!   articles, clustered with a Dirichlet-process Gaussian mixture.
//! * [`behavior`]: response time, comment length, innovation rate, daily
//!   volume, links and thread deviation.
//! * [`temporal`]: entropy rate of posting intervals, content ratios,
//!   follower ratio and account age.
//! * [`chain`]: transfer counts, degrees and entropies.
//!
//! [`textbase`] holds the text baselines the CDFA group is compared against,
//! [`learn`] the classifiers and evaluation harness, and [`pipeline`] the
//! batch workflow driven by the `botwatch` binary.

pub mod behavior;
pub mod cdfa;
pub mod chain;
pub mod corpus;
pub mod error;
pub mod learn;
pub mod pipeline;
pub mod seed;
pub mod temporal;
pub mod textbase;

pub use error::{Error, Result};

/// Seconds in one UTC day.
pub const SECONDS_PER_DAY: i64 = 86_400;

/// UTC calendar day index of a unix timestamp.
pub fn utc_day(ts: i64) -> i64 {
    ts.div_euclid(SECONDS_PER_DAY)
}

/// Shannon entropy in bits of an empirical distribution given by counts.
///
/// Counts are summed in ascending order so the result does not depend on
/// the iteration order of whatever map produced them.
pub fn entropy_bits<I: IntoIterator<Item = usize>>(counts: I) -> f64 {
    let mut counts: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    counts.sort_unstable();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let h = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>();
    h.max(0.0)
}
