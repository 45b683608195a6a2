//! Interval entropy, content ratios, follower ratio and account age.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::behavior::find_links;
use crate::corpus::AccountRecord;
use crate::{entropy_bits, Error, Result};

/// Interval symbols saturate here (2^20 s is about twelve days).
pub const MAX_SYMBOL: u8 = 20;
pub const DEFAULT_MAX_ORDER: usize = 10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TemporalFeatures {
    pub entropy_rate: f64,
    pub hashtag_ratio: f64,
    pub mention_ratio: f64,
    pub url_ratio: f64,
    pub ff_ratio: f64,
    pub account_age: f64,
}

impl TemporalFeatures {
    pub const NAMES: [&'static str; 6] = [
        "Entropy rate",
        "Hashtag ratio",
        "Mention ratio",
        "URL ratio",
        "FF ratio",
        "The age of an account",
    ];

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.entropy_rate,
            self.hashtag_ratio,
            self.mention_ratio,
            self.url_ratio,
            self.ff_ratio,
            self.account_age,
        ]
    }
}

/// Log-binned gaps between consecutive timestamps:
/// `min(floor(log2(dt + 1)), 20)`.
pub fn bin_intervals(timestamps: &[i64]) -> Vec<u8> {
    timestamps
        .windows(2)
        .map(|w| {
            let dt = (w[1] - w[0]).max(0) as u64;
            let bits = 63 - (dt + 1).leading_zeros();
            (bits as u8).min(MAX_SYMBOL)
        })
        .collect()
}

fn ngram_entropy<T: Eq + Hash>(seq: &[T], n: usize) -> (f64, usize) {
    let mut counts: HashMap<&[T], usize> = HashMap::new();
    for w in seq.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    let singletons = counts.values().filter(|&&c| c == 1).count();
    (entropy_bits(counts.into_values()), singletons)
}

/// Entropy of the length-`n-1` prefixes of the length-`n` windows.
fn prefix_entropy<T: Eq + Hash>(seq: &[T], n: usize) -> f64 {
    let mut counts: HashMap<&[T], usize> = HashMap::new();
    for w in seq.windows(n) {
        *counts.entry(&w[..n - 1]).or_insert(0) += 1;
    }
    entropy_bits(counts.into_values())
}

/// `CCE(n) = CE(n) + per(n) * EN` for `n` in `1..=min(max_order, len)`.
///
/// `CE(n)` is the plug-in conditional entropy of the last symbol of each
/// length-`n` window given its first `n-1` symbols, `per(n)` the share of
/// window instances whose pattern occurs only once, and `EN` the symbol
/// entropy. `CCE(1) = EN`.
pub fn cce_curve<T: Eq + Hash>(seq: &[T], max_order: usize) -> Vec<f64> {
    if seq.is_empty() {
        return Vec::new();
    }
    let en = ngram_entropy(seq, 1).0;
    let mut curve = vec![en];
    for n in 2..=max_order.min(seq.len()) {
        let (joint, singletons) = ngram_entropy(seq, n);
        let ce = (joint - prefix_entropy(seq, n)).max(0.0);
        let instances = seq.len() - n + 1;
        curve.push(ce + singletons as f64 / instances as f64 * en);
    }
    curve
}

/// Entropy rate estimate in bits: the minimum of the CCE curve, 0 for an
/// empty sequence.
pub fn cce<T: Eq + Hash>(seq: &[T], max_order: usize) -> f64 {
    cce_curve(seq, max_order)
        .into_iter()
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))
        .unwrap_or(0.0)
        .max(0.0)
}

pub fn entropy_rate(account: &AccountRecord, max_order: usize) -> f64 {
    let mut ts: Vec<i64> = account.comments.iter().map(|c| c.created_at).collect();
    ts.sort_unstable();
    cce(&bin_intervals(&ts), max_order)
}

fn hashtag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#\w+").expect("static regex"))
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@[a-z0-9][a-z0-9.\-]*").expect("static regex"))
}

/// Shares of blogs and replies that carry a hashtag (in the body or the tag
/// metadata), a mention, and a validated URL.
pub fn ratios(account: &AccountRecord) -> (f64, f64, f64) {
    let n = account.comments.len();
    if n == 0 {
        return (0.0, 0.0, 0.0);
    }
    let (mut h, mut m, mut u) = (0usize, 0usize, 0usize);
    for c in &account.comments {
        if c.tags.iter().any(|t| !t.is_empty()) || hashtag_re().is_match(&c.body) {
            h += 1;
        }
        if mention_re().is_match(&c.body) {
            m += 1;
        }
        if !find_links(&c.body).is_empty() {
            u += 1;
        }
    }
    let n = n as f64;
    (h as f64 / n, m as f64 / n, u as f64 / n)
}

pub fn ff_ratio(followers: u64, followings: u64) -> f64 {
    let total = followers + followings;
    if total == 0 {
        0.0
    } else {
        followers as f64 / total as f64
    }
}

pub fn account_age(account: &AccountRecord, dataset_end: i64) -> Result<i64> {
    if account.created_at > dataset_end {
        return Err(Error::Validation(format!(
            "account {} created at {} after dataset end {}",
            account.name, account.created_at, dataset_end
        )));
    }
    Ok(dataset_end - account.created_at)
}

pub fn temporal_features(account: &AccountRecord, dataset_end: i64, max_order: usize) -> Result<TemporalFeatures> {
    let (hashtag_ratio, mention_ratio, url_ratio) = ratios(account);
    Ok(TemporalFeatures {
        entropy_rate: entropy_rate(account, max_order),
        hashtag_ratio,
        mention_ratio,
        url_ratio,
        ff_ratio: ff_ratio(account.follower_count, account.following_count),
        account_age: account_age(account, dataset_end)? as f64,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;
    use crate::corpus::CommentRecord;
    use crate::seed;

    #[test]
    fn binning_examples() {
        assert_eq!(bin_intervals(&[5, 5]), vec![0]);
        assert_eq!(bin_intervals(&[0, 7]), vec![3]);
        assert_eq!(bin_intervals(&[0, 1_000_000_000]), vec![20]);
        assert!(bin_intervals(&[3]).is_empty());
        assert!(bin_intervals(&[]).is_empty());
    }

    #[test]
    fn deterministic_sequences_have_zero_rate() {
        assert_eq!(cce(&[4u8; 100], 10), 0.0);
        let alt: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        assert_eq!(cce_curve(&alt, 10)[0], 1.0);
        assert_eq!(cce(&alt, 10), 0.0);
        assert_eq!(cce::<u8>(&[], 10), 0.0);
    }

    #[test]
    fn uniform_iid_rate_is_near_two_bits() {
        let mut rng = seed::rng(2024);
        let seq: Vec<u8> = (0..100_000).map(|_| rng.random_range(0..4)).collect();
        let r = cce(&seq, 10);
        assert!((1.9..=2.0).contains(&r), "{r}");
    }

    fn acct(bodies: &[(&str, &[&str])]) -> AccountRecord {
        let mut a = AccountRecord::new("a", 0, "x");
        a.comments = bodies
            .iter()
            .enumerate()
            .map(|(i, (b, tags))| CommentRecord {
                author: "a".into(),
                permlink: i.to_string(),
                parent_id: None,
                depth: 0,
                title: String::new(),
                body: b.to_string(),
                tags: tags.iter().map(|t| t.to_string()).collect(),
                created_at: i as i64,
            })
            .collect();
        a
    }

    #[test]
    fn ratio_examples() {
        let a = acct(&[("hi @alice", &[]), ("@alice again", &[]), ("plain", &[]), ("x", &[])]);
        assert_eq!(ratios(&a).1, 0.5);
        let b = acct(&[("no hash", &["steemit"])]);
        assert_eq!(ratios(&b).0, 1.0);
        let c = acct(&[("#tag and https://example.com", &[]), ("none", &[""])]);
        assert_eq!(ratios(&c), (0.5, 0.0, 0.5));
        assert_eq!(ratios(&acct(&[])), (0.0, 0.0, 0.0));
    }

    #[test]
    fn ff_ratio_examples() {
        assert_eq!(ff_ratio(0, 0), 0.0);
        assert_eq!(ff_ratio(3, 1), 0.75);
        assert_eq!(ff_ratio(0, 10), 0.0);
    }

    #[test]
    fn age_examples() {
        let mut a = AccountRecord::new("a", 1000, "x");
        assert_eq!(account_age(&a, 1000).unwrap(), 0);
        a.created_at = 1000 - 86_400;
        assert_eq!(account_age(&a, 1000).unwrap(), 86_400);
        a.created_at = 1001;
        assert!(account_age(&a, 1000).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn cce_is_bounded_by_alphabet(seq in proptest::collection::vec(0u8..6, 1..300)) {
            let alphabet = seq.iter().collect::<std::collections::HashSet<_>>().len() as f64;
            let r = cce(&seq, 10);
            prop_assert!(r >= 0.0);
            prop_assert!(r <= alphabet.log2() + 1e-9);
            let curve = cce_curve(&seq, 10);
            let mut counts: HashMap<u8, usize> = HashMap::new();
            for &s in &seq {
                *counts.entry(s).or_insert(0) += 1;
            }
            let en = entropy_bits(counts.into_values());
            prop_assert!((curve[0] - en).abs() < 1e-12);
        }

        #[test]
        fn cce_ignores_symbol_names(seq in proptest::collection::vec(0u8..5, 1..300), shift in 1u8..50) {
            let renamed: Vec<u8> = seq.iter().map(|s| (4 - s) * 3 + shift).collect();
            prop_assert!((cce(&seq, 10) - cce(&renamed, 10)).abs() < 1e-9);
        }

        #[test]
        fn ratios_ignore_comment_order(
            bodies in proptest::collection::vec("(@bob|#t|https://a\\.io|x| ){0,4}", 0..12),
            rot in 0usize..12,
        ) {
            let pairs: Vec<(&str, &[&str])> = bodies.iter().map(|b| (b.as_str(), &[][..])).collect();
            let mut rotated = pairs.clone();
            if !rotated.is_empty() {
                let k = rot % rotated.len();
                rotated.rotate_left(k);
                rotated.reverse();
            }
            let (a, b) = (ratios(&acct(&pairs)), ratios(&acct(&rotated)));
            prop_assert_eq!(a, b);
            for r in [a.0, a.1, a.2] {
                prop_assert!((0.0..=1.0).contains(&r));
            }
        }
    }
}
