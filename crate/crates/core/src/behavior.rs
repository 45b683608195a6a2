//! Behavioral features: response time, comment length, innovation rate,
//! daily volume, links and thread deviation.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::cdfa::tokenize;
use crate::corpus::{AccountRecord, CommentRecord, LabeledCorpus};
use crate::{seed, utc_day};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnovationConfig {
    pub shuffles: usize,
    /// Below this many tokens the rate is reported as 0.
    pub min_tokens: usize,
    /// Upper clamp on the fitted exponent. Also the value reported when only
    /// one bin introduces new words, which is where a single repeated token
    /// lands.
    pub max_alpha: f64,
}

impl Default for InnovationConfig {
    fn default() -> Self {
        InnovationConfig {
            shuffles: 3,
            min_tokens: 10,
            max_alpha: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BehaviorFeatures {
    pub avg_response_time: f64,
    pub avg_comment_length: f64,
    pub innovation_rate: f64,
    pub max_daily_comments: u64,
    pub link_count: u64,
    pub thread_deviation: f64,
}

impl BehaviorFeatures {
    pub const NAMES: [&'static str; 6] = [
        "Average Response Time",
        "Average Comment length",
        "Innovation Rate",
        "Maximum Daily Comments",
        "Number of Links",
        "Thread deviation",
    ];

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.avg_response_time,
            self.avg_comment_length,
            self.innovation_rate,
            self.max_daily_comments as f64,
            self.link_count as f64,
            self.thread_deviation,
        ]
    }
}

/// Reply threading over every comment of a corpus.
///
/// Built once and shared by all accounts. Replies whose parent is not in the
/// corpus are skipped and counted in [`ThreadIndex::orphans`].
#[derive(Debug, Clone, Default)]
pub struct ThreadIndex {
    /// permlink -> seconds since the previous sibling, or since the parent
    /// for the first reply under it.
    response: HashMap<String, i64>,
    /// reply permlink -> permlink of the blog at the root of its thread.
    root: HashMap<String, String>,
    /// blog permlink -> mean response time of every reply in its thread.
    blog_mean: HashMap<String, f64>,
    orphans: usize,
}

impl ThreadIndex {
    pub fn build(corpus: &LabeledCorpus) -> Self {
        Self::from_comments(corpus.all_comments())
    }

    pub fn from_comments<'a>(comments: impl IntoIterator<Item = &'a CommentRecord>) -> Self {
        let comments: Vec<&CommentRecord> = comments.into_iter().collect();
        let by_id: HashMap<&str, &CommentRecord> = comments.iter().map(|c| (c.permlink.as_str(), *c)).collect();

        let mut children: HashMap<&str, Vec<&CommentRecord>> = HashMap::new();
        let mut orphans = 0;
        for c in &comments {
            if let Some(p) = &c.parent_id {
                if by_id.contains_key(p.as_str()) {
                    children.entry(p.as_str()).or_default().push(c);
                } else {
                    orphans += 1;
                }
            }
        }

        let mut response = HashMap::new();
        for (parent, kids) in &mut children {
            kids.sort_by(|a, b| (a.created_at, &a.permlink).cmp(&(b.created_at, &b.permlink)));
            let mut prev = by_id[parent].created_at;
            for k in kids.iter() {
                response.insert(k.permlink.clone(), (k.created_at - prev).max(0));
                prev = k.created_at;
            }
        }

        let mut root = HashMap::new();
        let mut per_blog: BTreeMap<&str, (i64, usize)> = BTreeMap::new();
        for c in &comments {
            if !response.contains_key(&c.permlink) {
                continue;
            }
            let mut cur = *c;
            // Ingestion rejects cycles, so the walk terminates; the bound is
            // a guard for hand-built inputs.
            for _ in 0..=comments.len() {
                match cur.parent_id.as_deref().and_then(|p| by_id.get(p)) {
                    Some(p) => cur = p,
                    None => break,
                }
            }
            if cur.is_blog() {
                root.insert(c.permlink.clone(), cur.permlink.clone());
                let e = per_blog.entry(cur.permlink.as_str()).or_default();
                e.0 += response[&c.permlink];
                e.1 += 1;
            }
        }
        let blog_mean = per_blog
            .into_iter()
            .map(|(b, (sum, n))| (b.to_string(), sum as f64 / n as f64))
            .collect();

        ThreadIndex {
            response,
            root,
            blog_mean,
            orphans,
        }
    }

    pub fn response_time(&self, permlink: &str) -> Option<i64> {
        self.response.get(permlink).copied()
    }

    pub fn blog_mean(&self, blog: &str) -> Option<f64> {
        self.blog_mean.get(blog).copied()
    }

    /// Replies whose parent was not found.
    pub fn orphans(&self) -> usize {
        self.orphans
    }
}

/// Response time of every threaded reply written by the account.
pub fn response_times(index: &ThreadIndex, account: &AccountRecord) -> Vec<i64> {
    account
        .replies()
        .filter_map(|r| index.response_time(&r.permlink))
        .collect()
}

pub fn avg_response_time(index: &ThreadIndex, account: &AccountRecord) -> f64 {
    mean(response_times(index, account).into_iter().map(|t| t as f64))
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean character count over blog and reply bodies.
pub fn avg_comment_length(account: &AccountRecord) -> f64 {
    mean(account.comments.iter().map(|c| c.body.chars().count() as f64))
}

/// Exponent of the new-word introduction rate for one token sequence.
///
/// Positions are 1-based and binned as `[2^b, 2^(b+1))`. The rate of a bin
/// is the fraction of its positions holding a first occurrence; `ln(rate)`
/// is regressed on the log of the bin midpoint and the exponent is minus the
/// slope, clamped to `[0, max_alpha]`.
pub fn introduction_decay<T: Eq + std::hash::Hash>(tokens: &[T], max_alpha: f64) -> f64 {
    let mut seen = std::collections::HashSet::new();
    let mut bins: Vec<(usize, usize)> = Vec::new(); // (new words, positions)
    for (k, t) in tokens.iter().enumerate() {
        let pos = k + 1;
        let b = (usize::BITS - 1 - pos.leading_zeros()) as usize;
        if bins.len() <= b {
            bins.resize(b + 1, (0, 0));
        }
        bins[b].1 += 1;
        if seen.insert(t) {
            bins[b].0 += 1;
        }
    }
    let points: Vec<(f64, f64)> = bins
        .iter()
        .enumerate()
        .filter(|(_, &(new, _))| new > 0)
        .map(|(b, &(new, size))| {
            let lo = (1usize << b) as f64;
            let hi = lo + size as f64 - 1.0;
            (((lo + hi) / 2.0).ln(), (new as f64 / size as f64).ln())
        })
        .collect();
    if points.len() < 2 {
        return max_alpha;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (-sxy / sxx).clamp(0.0, max_alpha)
}

/// Innovation rate of an account, averaged over random article orders.
pub fn innovation_rate(account: &AccountRecord, cfg: &InnovationConfig, seed: u64) -> f64 {
    let articles: Vec<Vec<&str>> = account.comments.iter().map(|c| tokenize(&c.body)).collect();
    let total: usize = articles.iter().map(Vec::len).sum();
    if total < cfg.min_tokens || cfg.shuffles == 0 {
        return 0.0;
    }
    let mut rng = seed::rng(seed);
    let mut order: Vec<usize> = (0..articles.len()).collect();
    let mut sum = 0.0;
    for _ in 0..cfg.shuffles {
        order.shuffle(&mut rng);
        let seq: Vec<&str> = order.iter().flat_map(|&i| articles[i].iter().copied()).collect();
        sum += introduction_decay(&seq, cfg.max_alpha);
    }
    sum / cfg.shuffles as f64
}

/// Largest number of blogs plus replies on one UTC day.
pub fn max_daily_comments(account: &AccountRecord) -> u64 {
    let mut per_day: HashMap<i64, u64> = HashMap::new();
    for c in &account.comments {
        *per_day.entry(utc_day(c.created_at)).or_insert(0) += 1;
    }
    per_day.into_values().max().unwrap_or(0)
}

fn url_candidates() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"https?://[^\s<>"'()\[\]{}|\\^`]*"#).expect("static regex"))
}

/// Whether a candidate passes structural validation: parses as an http(s)
/// URL whose host is `localhost`, an IP literal, or a dotted domain.
pub fn is_valid_url(candidate: &str) -> bool {
    let Ok(u) = url::Url::parse(candidate) else {
        return false;
    };
    if !matches!(u.scheme(), "http" | "https") {
        return false;
    }
    match u.host() {
        Some(url::Host::Domain(d)) => {
            d == "localhost"
                || (d.contains('.')
                    && d.split('.').all(|l| !l.is_empty())
                    && d.chars().all(|ch| ch.is_alphanumeric() || ch == '-' || ch == '.'))
        }
        Some(_) => true,
        None => false,
    }
}

/// Validated URLs in a text, trailing sentence punctuation removed.
pub fn find_links(text: &str) -> Vec<&str> {
    url_candidates()
        .find_iter(text)
        .map(|m| m.as_str().trim_end_matches(['.', ',', ';', ':', '!', '?']))
        .filter(|s| is_valid_url(s))
        .collect()
}

pub fn link_count(account: &AccountRecord) -> u64 {
    account.comments.iter().map(|c| find_links(&c.body).len() as u64).sum()
}

/// Mean absolute gap between each of the account's reply response times and
/// the mean response time of the blog thread the reply sits in.
pub fn thread_deviation(index: &ThreadIndex, account: &AccountRecord) -> f64 {
    mean(account.replies().filter_map(|r| {
        let t = index.response_time(&r.permlink)?;
        let blog = index.root.get(&r.permlink)?;
        let m = index.blog_mean(blog)?;
        Some((t as f64 - m).abs())
    }))
}

pub fn behavior_features(
    index: &ThreadIndex,
    account: &AccountRecord,
    cfg: &InnovationConfig,
    seed: u64,
) -> BehaviorFeatures {
    BehaviorFeatures {
        avg_response_time: avg_response_time(index, account),
        avg_comment_length: avg_comment_length(account),
        innovation_rate: innovation_rate(account, cfg, seed),
        max_daily_comments: max_daily_comments(account),
        link_count: link_count(account),
        thread_deviation: thread_deviation(index, account),
    }
}
