//! Labeled synthetic corpora for tests and demos.
//!
//! Bots write from a handful of fixed forms in which only the numbers,
//! account names and links change, on a near-fixed schedule. Humans draw
//! Zipf-distributed words from a large vocabulary on log-normal (bursty)
//! schedules. Threads hang off blogs written by a few external hub
//! accounts, which end up in `external_comments`.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Zipf};
use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use super::{sort_comments, sort_transfers, AccountRecord, CommentRecord, Label, LabeledCorpus, TransferRecord};
use crate::{seed, Error, Result, SECONDS_PER_DAY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub bots: usize,
    pub humans: usize,
    /// Inclusive range of blogs plus replies per account.
    pub comments_per_account: (usize, usize),
    pub human_vocabulary: usize,
    pub human_words_per_comment: (usize, usize),
    /// Word count range for the share of humans that only write short notes.
    pub terse_words_per_comment: (usize, usize),
    pub terse_human_rate: f64,
    pub zipf_exponent: f64,
    /// Body forms; `[n]`, `[account]` and `[link]` are filled per use.
    pub bot_templates: Vec<String>,
    pub bot_title_templates: Vec<String>,
    pub bot_templates_per_account: (usize, usize),
    pub bot_blog_fraction: (f64, f64),
    /// Share of free-text comments mixed into a bot's output.
    pub bot_noise_rate: (f64, f64),
    pub human_blog_fraction: (f64, f64),
    pub bot_interval_secs: (i64, i64),
    pub bot_jitter_secs: i64,
    pub human_interval_median_secs: f64,
    pub human_interval_sigma: f64,
    pub window_days: i64,
    pub dataset_end: i64,
    pub hub_accounts: usize,
    pub hub_blog_interval_secs: i64,
    pub counterparty_pool: usize,
}

/// 2019-12-31T23:59:59Z
const DEFAULT_DATASET_END: i64 = 1_577_836_799;

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            bots: 100,
            humans: 200,
            comments_per_account: (40, 120),
            human_vocabulary: 5000,
            human_words_per_comment: (12, 150),
            terse_words_per_comment: (3, 12),
            terse_human_rate: 0.2,
            zipf_exponent: 1.05,
            bot_templates: default_templates(),
            bot_title_templates: vec![
                "Daily report #[n]".into(),
                "Leaderboard update [n]".into(),
                "Round [n] results".into(),
                "Market summary for day [n]".into(),
                "Curation digest [n] by [account]".into(),
            ],
            bot_templates_per_account: (1, 3),
            bot_blog_fraction: (0.0, 0.5),
            bot_noise_rate: (0.0, 0.25),
            human_blog_fraction: (0.1, 0.6),
            bot_interval_secs: (1_800, 21_600),
            bot_jitter_secs: 120,
            human_interval_median_secs: 14_400.0,
            human_interval_sigma: 1.3,
            window_days: 300,
            dataset_end: DEFAULT_DATASET_END,
            hub_accounts: 8,
            hub_blog_interval_secs: 4 * 3_600,
            counterparty_pool: 400,
        }
    }
}

impl SynthSpec {
    pub fn new(bots: usize, humans: usize) -> Self {
        SynthSpec {
            bots,
            humans,
            ..SynthSpec::default()
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.human_vocabulary == 0 {
            return bad("human vocabulary must be non-empty");
        }
        if self.bot_templates.is_empty() || self.bot_title_templates.is_empty() {
            return bad("at least one bot body and title template is required");
        }
        let ranges = [
            self.comments_per_account,
            self.human_words_per_comment,
            self.terse_words_per_comment,
            self.bot_templates_per_account,
        ];
        if ranges.iter().any(|(lo, hi)| lo > hi) || self.bot_interval_secs.0 > self.bot_interval_secs.1 {
            return bad("range with min above max");
        }
        if self.bot_templates_per_account.0 == 0 || self.human_words_per_comment.0 == 0 {
            return bad("template and word counts must be positive");
        }
        if self.window_days <= 0 || self.hub_accounts == 0 || self.hub_blog_interval_secs <= 0 {
            return bad("window, hub count and hub interval must be positive");
        }
        if !(self.zipf_exponent > 0.0) || !(self.human_interval_sigma >= 0.0) || !(self.human_interval_median_secs > 0.0) {
            return bad("distribution parameters out of range");
        }
        Ok(())
    }
}

fn default_templates() -> Vec<String> {
    [
        "You got a [n]% upvote from [account] courtesy of [account]!",
        "Congratulations [account]! You have completed the following achievement and have been rewarded with a new badge: Award for [n] upvotes. Your next target is to reach [n] upvotes. [link]",
        "Hi [account], your post has been upvoted and resteemed by our curation team. Current vote value is [n] SBD. Keep up the good work! [link]",
        "This post has received a [n]% upvote from [account] thanks to [account]. Join our community at [link] to earn more rewards.",
        "| Rank | Account | Points | | 1 | [account] | [n] | | 2 | [account] | [n] | | 3 | [account] | [n] | | 4 | [account] | [n] | | 5 | [account] | [n] |",
        "Winner of round [n] is [account] with ticket [n]. Amount won: [n] STEEM. Remaining pot: [n] STEEM. Place your bets at [link]",
        "Thank you for your contribution [account]. Your workout of [n] steps has been recorded. Total today: [n] km. [link]",
        "Price update: STEEM [n] USD, SBD [n] USD, volume [n]. Source [link]",
        "Your post was mentioned in the hit parade in the following category: Upvotes - Rank [n] with [n] upvotes. Congratulations [account]!",
        "[account] sent you [n] tips. You now have [n] tips available. Type !tip to send more. [link]",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

const SYLLABLES: [&str; 30] = [
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du", "ka", "ke", "ki", "ko", "ku", "la", "le", "li", "lo",
    "lu", "ma", "me", "mi", "mo", "mu", "ra", "re", "ri", "ro", "ru",
];

const TAGS: [&str; 12] = [
    "life", "travel", "photography", "crypto", "food", "art", "music", "steem", "news", "blog", "science", "games",
];

/// Distinct pseudo-word for every index; at least two syllables long.
fn pseudo_word(index: usize) -> String {
    let base = SYLLABLES.len();
    let mut n = index + base;
    let mut parts = Vec::new();
    while n > 0 {
        parts.push(SYLLABLES[n % base]);
        n /= base;
    }
    parts.concat()
}

fn uniform_usize(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    rng.random_range(lo..=hi)
}

fn uniform_f64(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

struct World {
    vocab: Vec<String>,
    zipf: Zipf<f64>,
    placeholder: Regex,
    mention_pool: Vec<String>,
    counterparties: Vec<String>,
    hub_blogs: Vec<CommentRecord>,
    window_start: i64,
}

impl World {
    fn free_text(&self, rng: &mut ChaCha8Rng, words: (usize, usize)) -> String {
        let n = uniform_usize(rng, words);
        let mut out: Vec<String> = (0..n)
            .map(|_| {
                let rank = self.zipf.sample(rng) as usize;
                self.vocab[rank.clamp(1, self.vocab.len()) - 1].clone()
            })
            .collect();
        if rng.random_bool(0.15) {
            let who = self.mention_pool.choose(rng).expect("non-empty pool");
            out.insert(rng.random_range(0..=out.len()), format!("@{who}"));
        }
        if rng.random_bool(0.1) {
            let k: u32 = rng.random_range(0..10_000);
            out.push(format!("https://example.com/post/{k}"));
        }
        if rng.random_bool(0.05) {
            out.push(format!("#{}", TAGS.choose(rng).expect("tags")));
        }
        out.join(" ")
    }

    fn fill(&self, rng: &mut ChaCha8Rng, template: &str) -> String {
        self.placeholder
            .replace_all(template, |caps: &Captures<'_>| match &caps[1] {
                "n" => rng.random_range(1..=1000u32).to_string(),
                "account" => format!("@{}", self.mention_pool.choose(rng).expect("non-empty pool")),
                _ => {
                    let who = self.mention_pool.choose(rng).expect("non-empty pool");
                    format!("https://steemit.com/@{who}/post-{}", rng.random_range(0..100_000u32))
                }
            })
            .into_owned()
    }

    /// Hub blog to reply to at time `t`; bots answer the newest one.
    fn parent_for(&self, rng: &mut ChaCha8Rng, t: i64, newest: bool) -> &CommentRecord {
        let upto = self.hub_blogs.partition_point(|b| b.created_at <= t);
        debug_assert!(upto > 0, "hub blogs start before the window");
        if newest {
            &self.hub_blogs[upto - 1]
        } else {
            let lookback = (3 * SECONDS_PER_DAY) as i64;
            let from = self.hub_blogs.partition_point(|b| b.created_at < t - lookback);
            &self.hub_blogs[rng.random_range(from.min(upto - 1)..upto)]
        }
    }
}

/// Generate a labeled corpus. Identical `(spec, seed)` give identical output.
pub fn synthesize(spec: &SynthSpec, seed: u64) -> Result<LabeledCorpus> {
    spec.check()?;
    let mut rng = seed::rng(seed);

    let total = spec.bots + spec.humans;
    let mut labels: Vec<Label> = std::iter::repeat_n(Label::Bot, spec.bots)
        .chain(std::iter::repeat_n(Label::Human, spec.humans))
        .collect();
    labels.shuffle(&mut rng);
    let names: Vec<String> = (0..total).map(|i| format!("acct-{i:04}")).collect();

    let counterparties: Vec<String> = (0..spec.counterparty_pool.max(1)).map(|i| format!("ext-{i:03}")).collect();
    let mut mention_pool = names.clone();
    mention_pool.extend(counterparties.iter().cloned());

    let window_len = spec.window_days * SECONDS_PER_DAY;
    let window_start = spec.dataset_end - window_len;
    let vocab: Vec<String> = (0..spec.human_vocabulary).map(pseudo_word).collect();
    let zipf = Zipf::new(spec.human_vocabulary as f64, spec.zipf_exponent)
        .map_err(|e| Error::Config(format!("zipf: {e}")))?;

    let mut world = World {
        vocab,
        zipf,
        placeholder: Regex::new(r"\[(n|account|link)\]").expect("valid regex"),
        mention_pool,
        counterparties,
        hub_blogs: Vec::new(),
        window_start,
    };

    let mut hub_rng = seed::rng(seed::derive(seed, "hubs"));
    let mut t = window_start - 7 * SECONDS_PER_DAY;
    let mut k = 0usize;
    while t <= spec.dataset_end {
        let body = world.free_text(&mut hub_rng, (20, 60));
        world.hub_blogs.push(CommentRecord {
            author: format!("hub-{:02}", k % spec.hub_accounts),
            permlink: format!("hub-post-{k}"),
            parent_id: None,
            depth: 0,
            title: world.free_text(&mut hub_rng, (3, 8)),
            body,
            tags: vec![TAGS[k % TAGS.len()].to_string()],
            created_at: t,
        });
        k += 1;
        t += spec.hub_blog_interval_secs;
    }

    let mut accounts = Vec::with_capacity(total);
    for (name, label) in names.iter().zip(&labels) {
        let mut arng = seed::rng(seed::derive(seed, name));
        accounts.push(match label {
            Label::Bot => bot_account(spec, &world, name, &mut arng),
            Label::Human => human_account(spec, &world, name, &mut arng),
        });
    }

    let label_map: BTreeMap<String, Label> = names.into_iter().zip(labels).collect();
    let mut external = std::mem::take(&mut world.hub_blogs);
    sort_comments(&mut external);
    let corpus = LabeledCorpus {
        accounts,
        labels: label_map,
        dataset_end: spec.dataset_end,
        external_comments: external,
    };
    corpus.validate()?;
    Ok(corpus)
}

/// Place `gaps` on the timeline so that every event is inside the window.
fn place(spec: &SynthSpec, world: &World, rng: &mut ChaCha8Rng, gaps: &[f64]) -> Vec<i64> {
    let window_len = (spec.window_days * SECONDS_PER_DAY) as f64;
    let span: f64 = gaps.iter().sum();
    let scale = if span > 0.9 * window_len { 0.9 * window_len / span } else { 1.0 };
    // leave room for reply delays after the last placed event
    let slack = (window_len - 6.0 * 3_600.0 - span * scale).max(0.0);
    let start = world.window_start as f64 + rng.random_range(0.0..=slack);
    let mut t = start;
    let mut out = Vec::with_capacity(gaps.len() + 1);
    out.push(t as i64);
    for g in gaps {
        t += g * scale;
        out.push(t as i64);
    }
    out
}

fn comment(name: &str, k: usize, parent: Option<&CommentRecord>, t: i64) -> CommentRecord {
    CommentRecord {
        author: name.to_string(),
        permlink: format!("{name}-{k}"),
        parent_id: parent.map(|p| p.permlink.clone()),
        depth: parent.map_or(0, |p| p.depth + 1),
        title: String::new(),
        body: String::new(),
        tags: Vec::new(),
        created_at: parent.map_or(t, |p| t.max(p.created_at)),
    }
}

fn bot_account(spec: &SynthSpec, world: &World, name: &str, rng: &mut ChaCha8Rng) -> AccountRecord {
    let n = uniform_usize(rng, spec.comments_per_account);
    let interval = rng.random_range(spec.bot_interval_secs.0..=spec.bot_interval_secs.1) as f64;
    let jitter = spec.bot_jitter_secs.max(0) as f64;
    let gaps: Vec<f64> = (1..n)
        .map(|_| (interval + rng.random_range(-jitter..=jitter)).max(1.0))
        .collect();
    let times = place(spec, world, rng, &gaps);

    let mut forms: Vec<&String> = spec.bot_templates.iter().collect();
    forms.shuffle(rng);
    forms.truncate(uniform_usize(rng, spec.bot_templates_per_account).min(forms.len()));
    let title_form = spec.bot_title_templates.choose(rng).expect("checked non-empty");
    let blog_fraction = uniform_f64(rng, spec.bot_blog_fraction);
    let noise = uniform_f64(rng, spec.bot_noise_rate);
    let tags: Vec<String> = TAGS.choose_multiple(rng, 2).map(|s| s.to_string()).collect();

    let mut comments = Vec::with_capacity(n);
    for (k, &t) in times.iter().take(n).enumerate() {
        let blog = rng.random_bool(blog_fraction);
        let parent = (!blog).then(|| world.parent_for(rng, t, true));
        let mut c = comment(name, k, parent, t + if blog { 0 } else { rng.random_range(3..90) });
        let free = rng.random_bool(noise);
        c.body = if free {
            world.free_text(rng, spec.human_words_per_comment)
        } else {
            let form = forms.choose(rng).expect("at least one form");
            world.fill(rng, form)
        };
        if blog {
            c.title = if free {
                world.free_text(rng, (3, 8))
            } else {
                world.fill(rng, title_form)
            };
            c.tags = tags.clone();
        }
        comments.push(c);
    }

    let created = times[0] - rng.random_range(SECONDS_PER_DAY..=200 * SECONDS_PER_DAY);
    let creator = if rng.random_bool(0.5) { "steem".to_string() } else { format!("ext-{:03}", rng.random_range(0..world.counterparties.len())) };
    let mut acc = AccountRecord::new(name, created.max(0), creator);
    acc.follower_count = rng.random_range(0..=400);
    acc.following_count = if rng.random_bool(0.7) { 0 } else { rng.random_range(0..=20) };
    let span = (times[0], *times.last().expect("non-empty"));
    let out_n = rng.random_range(0..=150);
    let fanout = rng.random_range(1..=world.counterparties.len().min(250));
    acc.transfers_out = transfers(rng, world, name, out_n, fanout, span, true);
    let in_n = rng.random_range(0..=40);
    acc.transfers_in = transfers(rng, world, name, in_n, 10, span, false);
    finish(acc, comments)
}

fn human_account(spec: &SynthSpec, world: &World, name: &str, rng: &mut ChaCha8Rng) -> AccountRecord {
    let n = uniform_usize(rng, spec.comments_per_account);
    let lognormal = LogNormal::new(spec.human_interval_median_secs.ln(), spec.human_interval_sigma)
        .expect("checked parameters");
    let gaps: Vec<f64> = (1..n).map(|_| lognormal.sample(rng).max(1.0)).collect();
    let times = place(spec, world, rng, &gaps);

    let words = if rng.random_bool(spec.terse_human_rate) {
        spec.terse_words_per_comment
    } else {
        spec.human_words_per_comment
    };
    let blog_fraction = uniform_f64(rng, spec.human_blog_fraction);

    let mut comments = Vec::with_capacity(n);
    for (k, &t) in times.iter().take(n).enumerate() {
        let blog = rng.random_bool(blog_fraction);
        let parent = (!blog).then(|| world.parent_for(rng, t, false));
        let delay = if blog { 0 } else { rng.random_range(60..4 * 3_600) };
        let mut c = comment(name, k, parent, t + delay);
        c.body = world.free_text(rng, words);
        if blog {
            c.title = world.free_text(rng, (3, 10));
            let ntags = rng.random_range(1..=3);
            c.tags = TAGS.choose_multiple(rng, ntags).map(|s| s.to_string()).collect();
        }
        comments.push(c);
    }

    let created = times[0] - rng.random_range(SECONDS_PER_DAY..=600 * SECONDS_PER_DAY);
    let creator = if rng.random_bool(0.6) { "steem".to_string() } else { format!("ext-{:03}", rng.random_range(0..world.counterparties.len())) };
    let mut acc = AccountRecord::new(name, created.max(0), creator);
    acc.follower_count = rng.random_range(5..=600);
    acc.following_count = if rng.random_bool(0.15) { rng.random_range(0..=5) } else { rng.random_range(10..=500) };
    let span = (times[0], *times.last().expect("non-empty"));
    let out_n = rng.random_range(0..=20);
    let fanout = rng.random_range(1..=5);
    acc.transfers_out = transfers(rng, world, name, out_n, fanout, span, true);
    let in_n = rng.random_range(0..=30);
    acc.transfers_in = transfers(rng, world, name, in_n, 8, span, false);
    finish(acc, comments)
}

fn transfers(
    rng: &mut ChaCha8Rng,
    world: &World,
    name: &str,
    n: usize,
    fanout: usize,
    (lo, hi): (i64, i64),
    outgoing: bool,
) -> Vec<TransferRecord> {
    let peers: Vec<&String> = world.counterparties.choose_multiple(rng, fanout.max(1)).collect();
    (0..n)
        .map(|_| {
            let peer = (*peers.choose(rng).expect("non-empty")).clone();
            let (from, to) = if outgoing { (name.to_string(), peer) } else { (peer, name.to_string()) };
            TransferRecord {
                from,
                to,
                amount: f64::from(rng.random_range(1..=100_000u32)) / 1000.0,
                timestamp: rng.random_range(lo..=hi),
            }
        })
        .collect()
}

fn finish(mut acc: AccountRecord, mut comments: Vec<CommentRecord>) -> AccountRecord {
    sort_comments(&mut comments);
    acc.comments = comments;
    sort_transfers(&mut acc.transfers_out);
    sort_transfers(&mut acc.transfers_in);
    acc
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::corpus::export_to_writer;

    fn bytes(c: &LabeledCorpus) -> Vec<u8> {
        let mut buf = Vec::new();
        export_to_writer(c, &mut buf).unwrap();
        buf
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let spec = SynthSpec::new(10, 20);
        let a = synthesize(&spec, 7).unwrap();
        let b = synthesize(&spec, 7).unwrap();
        assert_eq!(bytes(&a), bytes(&b));
        a.validate().unwrap();
    }

    #[test]
    fn label_counts_hold_for_any_seed() {
        let spec = SynthSpec::new(10, 20);
        for seed in [1, 2, 3] {
            let c = synthesize(&spec, seed).unwrap();
            assert_eq!(c.count_label(Label::Bot), 10);
            assert_eq!(c.count_label(Label::Human), 20);
            assert_eq!(c.accounts.len(), 30);
        }
        assert_ne!(bytes(&synthesize(&spec, 1).unwrap()), bytes(&synthesize(&spec, 2).unwrap()));
    }

    #[test]
    fn single_form_bot_replies_differ_only_in_numbers_and_accounts() {
        let spec = SynthSpec {
            bots: 1,
            humans: 0,
            comments_per_account: (50, 50),
            bot_templates: vec!["You got a [n]% upvote from [account]".into()],
            bot_blog_fraction: (0.0, 0.0),
            bot_noise_rate: (0.0, 0.0),
            ..SynthSpec::default()
        };
        let c = synthesize(&spec, 11).unwrap();
        let accounts = Regex::new(r"@[a-z0-9.\-]+").unwrap();
        let digits = Regex::new(r"[0-9]+").unwrap();
        let masked: Vec<String> = c.accounts[0]
            .replies()
            .map(|r| digits.replace_all(&accounts.replace_all(&r.body, "@ACCOUNT"), "N").into_owned())
            .collect();
        assert_eq!(masked.len(), 50);
        assert!(masked.iter().all(|m| m == &masked[0]), "{masked:?}");
        assert_eq!(masked[0], "You got a N% upvote from @ACCOUNT");
    }

    #[test]
    fn human_vocabulary_is_rich() {
        let spec = SynthSpec {
            bots: 0,
            humans: 1,
            comments_per_account: (100, 100),
            terse_human_rate: 0.0,
            ..SynthSpec::default()
        };
        let c = synthesize(&spec, 5).unwrap();
        let distinct: HashSet<&str> = c.accounts[0]
            .comments
            .iter()
            .flat_map(|x| x.body.split_whitespace())
            .collect();
        assert!(distinct.len() > 300, "only {} distinct words", distinct.len());
    }

    #[test]
    fn empty_vocabulary_or_templates_is_config_error() {
        let mut spec = SynthSpec::new(1, 1);
        spec.human_vocabulary = 0;
        assert!(matches!(synthesize(&spec, 1), Err(Error::Config(_))));
        let mut spec = SynthSpec::new(1, 1);
        spec.bot_templates.clear();
        assert!(matches!(synthesize(&spec, 1), Err(Error::Config(_))));
    }

    #[test]
    fn pseudo_words_are_distinct() {
        let words: HashSet<String> = (0..5000).map(pseudo_word).collect();
        assert_eq!(words.len(), 5000);
    }
}
