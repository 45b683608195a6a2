//! Transfer-based features: volume, timing, counterparties, account origin
//! and transfers relative to posting activity.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::AccountRecord;
use crate::{entropy_bits, utc_day, SECONDS_PER_DAY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    /// Creator name that marks an account as created by the platform.
    pub faucet: String,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { faucet: "steem".into() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainFeatures {
    pub n_transfers: u64,
    pub daily_transfer_entropy: f64,
    pub activation_time: i64,
    pub daily_transfer: f64,
    pub in_degree: u64,
    pub out_degree: u64,
    pub in_account_entropy: f64,
    pub out_account_entropy: f64,
    pub steem_created: u8,
    pub avg_transfer_per_blog_or_reply: f64,
    pub avg_transfer_per_blog: f64,
    pub avg_transfer_per_reply: f64,
}

impl ChainFeatures {
    pub const NAMES: [&'static str; 12] = [
        "Number of transfers",
        "Daily time entropy of transfer",
        "Transfer activation time",
        "Daily transfer",
        "In-degree of transfer",
        "Out-degree of transfer",
        "Entropy of the in-degree accounts",
        "Entropy of the out-degree accounts",
        "Steem-created account",
        "Average transfer per blog or reply",
        "Average transfer per blog",
        "Average transfer per reply",
    ];

    pub fn to_array(&self) -> [f64; 12] {
        [
            self.n_transfers as f64,
            self.daily_transfer_entropy,
            self.activation_time as f64,
            self.daily_transfer,
            self.in_degree as f64,
            self.out_degree as f64,
            self.in_account_entropy,
            self.out_account_entropy,
            f64::from(self.steem_created),
            self.avg_transfer_per_blog_or_reply,
            self.avg_transfer_per_blog,
            self.avg_transfer_per_reply,
        ]
    }
}

/// `(count, activation seconds, transfers per day)`. A zero-length window
/// counts as one day.
pub fn transfer_stats(account: &AccountRecord) -> (u64, i64, f64) {
    let n = (account.transfers_in.len() + account.transfers_out.len()) as u64;
    let (lo, hi) = account
        .transfers()
        .fold((i64::MAX, i64::MIN), |(lo, hi), t| (lo.min(t.timestamp), hi.max(t.timestamp)));
    if n == 0 {
        return (0, 0, 0.0);
    }
    let active = hi - lo;
    let daily = if active == 0 {
        n as f64
    } else {
        n as f64 / (active as f64 / SECONDS_PER_DAY as f64)
    };
    (n, active, daily)
}

/// Entropy of the per-day transfer count, over every UTC day from the first
/// to the last transfer (quiet days count as zero).
pub fn daily_transfer_entropy(account: &AccountRecord) -> f64 {
    let mut per_day: BTreeMap<i64, usize> = BTreeMap::new();
    for t in account.transfers() {
        *per_day.entry(utc_day(t.timestamp)).or_insert(0) += 1;
    }
    let (Some((&first, _)), Some((&last, _))) = (per_day.first_key_value(), per_day.last_key_value()) else {
        return 0.0;
    };
    let mut value_freq: HashMap<usize, usize> = HashMap::new();
    for day in first..=last {
        *value_freq.entry(per_day.get(&day).copied().unwrap_or(0)).or_insert(0) += 1;
    }
    entropy_bits(value_freq.into_values())
}

fn counterparty_stats<'a>(names: impl Iterator<Item = &'a str>) -> (u64, f64) {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for n in names {
        *counts.entry(n).or_insert(0) += 1;
    }
    (counts.len() as u64, entropy_bits(counts.into_values()))
}

/// `(in_degree, out_degree, in_entropy, out_entropy)` over distinct
/// counterparties.
pub fn degree_features(account: &AccountRecord) -> (u64, u64, f64, f64) {
    let (din, hin) = counterparty_stats(account.transfers_in.iter().map(|t| t.from.as_str()));
    let (dout, hout) = counterparty_stats(account.transfers_out.iter().map(|t| t.to.as_str()));
    (din, dout, hin, hout)
}

pub fn steem_created(account: &AccountRecord, cfg: &ChainConfig) -> u8 {
    u8::from(account.creator == cfg.faucet)
}

/// Mean over posting days of transfers per blog-or-reply, per blog and per
/// reply. Days without the relevant activity are skipped.
pub fn transfer_post_ratios(account: &AccountRecord) -> (f64, f64, f64) {
    #[derive(Default)]
    struct Day {
        transfers: usize,
        blogs: usize,
        replies: usize,
    }
    let mut days: BTreeMap<i64, Day> = BTreeMap::new();
    for t in account.transfers() {
        days.entry(utc_day(t.timestamp)).or_default().transfers += 1;
    }
    for c in &account.comments {
        let d = days.entry(utc_day(c.created_at)).or_default();
        if c.is_blog() {
            d.blogs += 1;
        } else {
            d.replies += 1;
        }
    }
    let avg = |denom: &dyn Fn(&Day) -> usize| {
        let (sum, n) = days
            .values()
            .filter(|d| denom(d) > 0)
            .fold((0.0, 0usize), |(s, n), d| (s + d.transfers as f64 / denom(d) as f64, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    };
    (avg(&|d| d.blogs + d.replies), avg(&|d| d.blogs), avg(&|d| d.replies))
}

pub fn chain_features(account: &AccountRecord, cfg: &ChainConfig) -> ChainFeatures {
    let (n_transfers, activation_time, daily_transfer) = transfer_stats(account);
    let (in_degree, out_degree, in_account_entropy, out_account_entropy) = degree_features(account);
    let (per_any, per_blog, per_reply) = transfer_post_ratios(account);
    ChainFeatures {
        n_transfers,
        daily_transfer_entropy: daily_transfer_entropy(account),
        activation_time,
        daily_transfer,
        in_degree,
        out_degree,
        in_account_entropy,
        out_account_entropy,
        steem_created: steem_created(account, cfg),
        avg_transfer_per_blog_or_reply: per_any,
        avg_transfer_per_blog: per_blog,
        avg_transfer_per_reply: per_reply,
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::corpus::{CommentRecord, TransferRecord};

    const DAY: i64 = SECONDS_PER_DAY;

    fn tr(from: &str, to: &str, t: i64) -> TransferRecord {
        TransferRecord {
            from: from.into(),
            to: to.into(),
            amount: 1.0,
            timestamp: t,
        }
    }

    fn with_out(ts: &[(&str, i64)]) -> AccountRecord {
        let mut a = AccountRecord::new("me", 0, "steem");
        a.transfers_out = ts.iter().map(|(to, t)| tr("me", to, *t)).collect();
        a
    }

    #[test]
    fn stats_examples() {
        assert_eq!(transfer_stats(&with_out(&[])), (0, 0, 0.0));
        let ten: Vec<(&str, i64)> = (0..10).map(|i| ("x", i * DAY / 2)).collect();
        let a = with_out(&ten[..9]);
        let (n, act, daily) = transfer_stats(&a);
        assert_eq!((n, act), (9, 4 * DAY));
        assert_eq!(daily, 9.0 / 4.0);
        let mut b = with_out(&ten[..9]);
        b.transfers_in.push(tr("y", "me", 5 * DAY));
        assert_eq!(transfer_stats(&b), (10, 5 * DAY, 2.0));
        assert_eq!(transfer_stats(&with_out(&[("x", 7), ("x", 7), ("y", 7)])), (3, 0, 3.0));
    }

    #[test]
    fn daily_entropy_examples() {
        let flat: Vec<(&str, i64)> = (0..5).flat_map(|d| [("x", d * DAY), ("y", d * DAY + 9)]).collect();
        assert_eq!(daily_transfer_entropy(&with_out(&flat)), 0.0);
        let a = with_out(&[("x", 0), ("x", DAY), ("x", DAY + 1), ("x", DAY + 2)]);
        assert_eq!(daily_transfer_entropy(&a), 1.0);
        assert_eq!(daily_transfer_entropy(&with_out(&[])), 0.0);
        // a gap day contributes a zero count
        let gap = with_out(&[("x", 0), ("x", 2 * DAY)]);
        assert!((daily_transfer_entropy(&gap) - entropy_bits([2, 1])).abs() < 1e-12);
    }

    #[test]
    fn degree_examples() {
        let hundred: Vec<(&str, i64)> = (0..100).map(|i| ("one", i)).collect();
        assert_eq!(degree_features(&with_out(&hundred)), (0, 1, 0.0, 0.0));
        let names = ["a", "b", "c", "d"];
        let four: Vec<(&str, i64)> = (0..100).map(|i| (names[i % 4], i as i64)).collect();
        let (_, dout, _, hout) = degree_features(&with_out(&four));
        assert_eq!(dout, 4);
        assert_eq!(hout, 2.0);
    }

    #[test]
    fn faucet_examples() {
        let mut a = AccountRecord::new("n", 0, "steem");
        assert_eq!(steem_created(&a, &ChainConfig::default()), 1);
        a.creator = "anon-exchange".into();
        assert_eq!(steem_created(&a, &ChainConfig::default()), 0);
        a.creator = "steemit".into();
        assert_eq!(steem_created(&a, &ChainConfig { faucet: "steemit".into() }), 1);
    }

    fn post(i: usize, t: i64, reply: bool) -> CommentRecord {
        CommentRecord {
            author: "me".into(),
            permlink: format!("p{i}"),
            parent_id: reply.then(|| "z".into()),
            depth: u32::from(reply),
            title: String::new(),
            body: String::new(),
            tags: vec![],
            created_at: t,
        }
    }

    #[test]
    fn post_ratio_examples() {
        let mut a = with_out(&[("x", 0), ("x", 1), ("x", DAY), ("x", DAY + 1)]);
        a.comments = (0..8).map(|i| post(i, (i as i64 / 4) * DAY + 10, i % 2 == 0)).collect();
        let (any, blog, reply) = transfer_post_ratios(&a);
        assert_eq!(any, 0.5);
        assert_eq!(blog, 1.0);
        assert_eq!(reply, 1.0);

        let mut b = with_out(&[("x", 5 * DAY)]);
        b.comments = vec![post(0, 0, false)];
        assert_eq!(transfer_post_ratios(&b), (0.0, 0.0, 0.0));

        let mut c = with_out(&[]);
        c.comments = (0..3).map(|i| post(i, i as i64 * DAY, false)).collect();
        assert_eq!(transfer_post_ratios(&c), (0.0, 0.0, 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn chain_invariants(
            outs in proptest::collection::vec((0usize..6, 0i64..20 * DAY), 0..40),
            ins in proptest::collection::vec((0usize..6, 0i64..20 * DAY), 0..40),
            rot in 0usize..40,
        ) {
            let names = ["a", "b", "c", "d", "e", "f"];
            let mut acc = AccountRecord::new("me", 0, "steem");
            acc.transfers_out = outs.iter().map(|&(k, t)| tr("me", names[k], t)).collect();
            acc.transfers_in = ins.iter().map(|&(k, t)| tr(names[k], "me", t)).collect();
            let f = chain_features(&acc, &ChainConfig::default());

            prop_assert!(f.in_degree as usize <= acc.transfers_in.len());
            prop_assert!(f.in_account_entropy <= (f.in_degree.max(1) as f64).log2() + 1e-9);
            prop_assert!(f.out_account_entropy <= (f.out_degree.max(1) as f64).log2() + 1e-9);
            prop_assert!(f.daily_transfer_entropy >= 0.0);

            let mut shuffled = acc.clone();
            if !shuffled.transfers_out.is_empty() {
                let k = rot % shuffled.transfers_out.len();
                shuffled.transfers_out.rotate_left(k);
            }
            shuffled.transfers_in.reverse();
            prop_assert_eq!(f, chain_features(&shuffled, &ChainConfig::default()));

            let mut one_day = acc.clone();
            for t in one_day.transfers_out.iter_mut().chain(one_day.transfers_in.iter_mut()) {
                t.timestamp %= DAY;
            }
            prop_assert_eq!(daily_transfer_entropy(&one_day), 0.0);
        }
    }
}
