//! Clustering Distance between Frequent words and Articles (CDFA).
//!
//! For the `m` articles of one account and one source (blog titles, blog
//! bodies or reply bodies):
//!
//! 1. split every article on whitespace and record which words occur in it
//!    (binary occurrence vectors `V_j`);
//! 2. sum the vectors into per-word article counts `T`; words whose count is
//!    at least a tenth of `max(T)` are the frequent words;
//! 3. measure the Euclidean distance between the frequent-word indicator and
//!    every `V_j`;
//! 4. cluster the `m` distances with a Dirichlet-process Gaussian mixture
//!    capped at five components;
//! 5. among clusters holding at least `m/5` distances, the one with the
//!    smallest mean is the minimum average cluster (MAC). Its mean, its
//!    variance and the number of qualifying clusters are the features.
//!
//! Posting bots reuse fixed forms, so most of their articles sit at the same
//! distance from the frequent words and the MAC variance collapses to zero.

mod dpgmm;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::AccountRecord;
use crate::{seed, Error, Result};

pub use dpgmm::{dpgmm_cluster, DpgmmConfig};

/// Fewer articles than this and a source's three features are all zero.
pub const MIN_ARTICLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    Title,
    Content,
    Reply,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Title, Source::Content, Source::Reply];

    pub fn suffix(self) -> &'static str {
        match self {
            Source::Title => "T",
            Source::Content => "C",
            Source::Reply => "R",
        }
    }
}

/// Split on runs of whitespace. No case folding, no punctuation stripping.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArticleSet<'a> {
    pub articles: Vec<Vec<&'a str>>,
    pub source: Source,
}

impl<'a> ArticleSet<'a> {
    pub fn new(source: Source, texts: impl IntoIterator<Item = &'a str>) -> Self {
        ArticleSet {
            articles: texts.into_iter().map(tokenize).collect(),
            source,
        }
    }

    /// Articles of `source` written by `account`.
    pub fn from_account(account: &'a AccountRecord, source: Source) -> Self {
        let texts: Vec<&'a str> = match source {
            Source::Title => account.blogs().map(|c| c.title.as_str()).collect(),
            Source::Content => account.blogs().map(|c| c.body.as_str()).collect(),
            Source::Reply => account.replies().map(|c| c.body.as_str()).collect(),
        };
        ArticleSet::new(source, texts)
    }

    pub fn m(&self) -> usize {
        self.articles.len()
    }
}

/// Word occurrence statistics for one article set.
#[derive(Debug, Clone, PartialEq)]
pub struct OccurrenceModel {
    /// Distinct words in first-appearance order.
    pub vocabulary: Vec<String>,
    /// Per article, the sorted indices of the words it contains; the
    /// sparse form of the binary occurrence vector.
    pub occurrences: Vec<Vec<usize>>,
    /// Number of articles containing each word.
    pub total: Vec<usize>,
    pub frequent: Vec<bool>,
}

impl OccurrenceModel {
    pub fn m(&self) -> usize {
        self.occurrences.len()
    }

    pub fn n(&self) -> usize {
        self.vocabulary.len()
    }

    /// Dense 0/1 occurrence vector of article `j`.
    pub fn occurrence_vector(&self, j: usize) -> Vec<u8> {
        let mut v = vec![0u8; self.n()];
        for &i in &self.occurrences[j] {
            v[i] = 1;
        }
        v
    }

    pub fn frequent_vector(&self) -> Vec<u8> {
        self.frequent.iter().map(|&f| u8::from(f)).collect()
    }

    pub fn frequent_count(&self) -> usize {
        self.frequent.iter().filter(|&&f| f).count()
    }

    pub fn frequent_words(&self) -> impl Iterator<Item = &str> {
        self.vocabulary
            .iter()
            .zip(&self.frequent)
            .filter(|(_, &f)| f)
            .map(|(w, _)| w.as_str())
    }
}

pub fn build_occurrence(articles: &ArticleSet<'_>) -> Result<OccurrenceModel> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut vocabulary = Vec::new();
    let mut occurrences = Vec::with_capacity(articles.m());
    for article in &articles.articles {
        let mut present: Vec<usize> = article
            .iter()
            .map(|&w| {
                *index.entry(w).or_insert_with(|| {
                    vocabulary.push(w.to_string());
                    vocabulary.len() - 1
                })
            })
            .collect();
        present.sort_unstable();
        present.dedup();
        occurrences.push(present);
    }
    if vocabulary.is_empty() {
        return Err(Error::Contract(format!(
            "no words in {} {:?} articles",
            articles.m(),
            articles.source
        )));
    }

    let mut total = vec![0usize; vocabulary.len()];
    for occ in &occurrences {
        for &i in occ {
            total[i] += 1;
        }
    }
    let max = total.iter().copied().max().unwrap_or(0);
    // T[i] >= 0.1 * max(T), in integers
    let frequent = total.iter().map(|&t| 10 * t >= max).collect();
    Ok(OccurrenceModel {
        vocabulary,
        occurrences,
        total,
        frequent,
    })
}

/// Euclidean distance between the frequent-word indicator and each
/// article's occurrence vector.
pub fn distances(model: &OccurrenceModel) -> Vec<f64> {
    let nfreq = model.frequent_count();
    model
        .occurrences
        .iter()
        .map(|occ| {
            let shared = occ.iter().filter(|&&i| model.frequent[i]).count();
            // |F| + |W_j| - 2|F ∩ W_j| for 0/1 vectors
            let sq = nfreq + occ.len() - 2 * shared;
            (sq as f64).sqrt()
        })
        .collect()
}

/// Clusters of one source's distances and the minimum average cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceClustering {
    pub distances: Vec<f64>,
    pub assignments: Vec<usize>,
    /// Labels of clusters with `size * 5 >= m`.
    pub qualified: Vec<usize>,
    pub mac: Option<usize>,
}

impl DistanceClustering {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = f64> + '_ {
        self.assignments
            .iter()
            .zip(&self.distances)
            .filter(move |(&c, _)| c == cluster)
            .map(|(_, &d)| d)
    }

    pub fn cluster_mean(&self, cluster: usize) -> f64 {
        let (n, s) = self.members(cluster).fold((0usize, 0.0), |(n, s), d| (n + 1, s + d));
        if n == 0 {
            0.0
        } else {
            s / n as f64
        }
    }

    pub fn cluster_size(&self, cluster: usize) -> usize {
        self.assignments.iter().filter(|&&c| c == cluster).count()
    }
}

pub fn cluster_distances(distances: Vec<f64>, cfg: &DpgmmConfig, seed: u64) -> DistanceClustering {
    let m = distances.len();
    let assignments = dpgmm_cluster(&distances, cfg, seed);
    let k = assignments.iter().copied().max().map_or(0, |c| c + 1);
    let mut sizes = vec![0usize; k];
    let mut sums = vec![0.0; k];
    for (&c, &d) in assignments.iter().zip(&distances) {
        sizes[c] += 1;
        sums[c] += d;
    }
    let qualified: Vec<usize> = (0..k).filter(|&c| sizes[c] * 5 >= m).collect();
    let mean = |c: usize| sums[c] / sizes[c] as f64;
    let mac = qualified
        .iter()
        .copied()
        .min_by(|&a, &b| mean(a).total_cmp(&mean(b)).then(a.cmp(&b)))
        .or_else(|| {
            // Unreachable with at most five clusters over m points; kept so
            // a wider component cap still yields a cluster.
            (0..k).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
        });
    DistanceClustering {
        distances,
        assignments,
        qualified,
        mac,
    }
}

/// Mean, population variance and qualifying-cluster count of one source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MacCdfa {
    pub mean: f64,
    pub variance: f64,
    pub qualified_count: usize,
}

impl MacCdfa {
    pub fn from_clustering(c: &DistanceClustering) -> Self {
        let Some(mac) = c.mac else {
            return MacCdfa::default();
        };
        let mean = c.cluster_mean(mac);
        let n = c.cluster_size(mac) as f64;
        let variance = c.members(mac).map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
        MacCdfa {
            mean,
            variance,
            qualified_count: c.qualified.len(),
        }
    }
}

/// MAC-CDFA over a list of distances; needs at least five of them.
pub fn mac_cdfa(values: &[f64], cfg: &DpgmmConfig, seed: u64) -> Result<MacCdfa> {
    if values.len() < MIN_ARTICLES {
        return Err(Error::Contract(format!(
            "MAC-CDFA needs at least {MIN_ARTICLES} distances, got {}",
            values.len()
        )));
    }
    Ok(MacCdfa::from_clustering(&cluster_distances(values.to_vec(), cfg, seed)))
}

/// The nine CDFA features of one account.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CdfaFeatures {
    pub title: MacCdfa,
    pub content: MacCdfa,
    pub reply: MacCdfa,
}

impl CdfaFeatures {
    pub const NAMES: [&'static str; 9] = [
        "Average of MAC-CDFA-T",
        "Variance of MAC-CDFA-T",
        "Number of clusters in CDFA-T",
        "Average of MAC-CDFA-C",
        "Variance of MAC-CDFA-C",
        "Number of clusters in CDFA-C",
        "Average of MAC-CDFA-R",
        "Variance of MAC-CDFA-R",
        "Number of clusters in CDFA-R",
    ];

    pub fn get(&self, source: Source) -> &MacCdfa {
        match source {
            Source::Title => &self.title,
            Source::Content => &self.content,
            Source::Reply => &self.reply,
        }
    }

    pub fn to_array(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for (i, s) in Source::ALL.iter().enumerate() {
            let f = self.get(*s);
            out[3 * i] = f.mean;
            out[3 * i + 1] = f.variance;
            out[3 * i + 2] = f.qualified_count as f64;
        }
        out
    }
}

/// MAC-CDFA of one source of one account, zero when there are fewer than
/// five articles or no words at all.
pub fn source_features(account: &AccountRecord, source: Source, cfg: &DpgmmConfig, seed: u64) -> MacCdfa {
    let set = ArticleSet::from_account(account, source);
    if set.m() < MIN_ARTICLES {
        return MacCdfa::default();
    }
    let Ok(model) = build_occurrence(&set) else {
        return MacCdfa::default();
    };
    let source_seed = seed::derive(seed, source.suffix());
    MacCdfa::from_clustering(&cluster_distances(distances(&model), cfg, source_seed))
}

pub fn cdfa_features(account: &AccountRecord, cfg: &DpgmmConfig, seed: u64) -> CdfaFeatures {
    CdfaFeatures {
        title: source_features(account, Source::Title, cfg, seed),
        content: source_features(account, Source::Content, cfg, seed),
        reply: source_features(account, Source::Reply, cfg, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CommentRecord;

    fn set<'a>(articles: &[&'a str]) -> ArticleSet<'a> {
        ArticleSet::new(Source::Content, articles.iter().copied())
    }

    #[test]
    fn tokenize_splits_on_whitespace_only() {
        assert_eq!(tokenize("a b  c"), vec!["a", "b", "c"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Hello Hello!"), vec!["Hello", "Hello!"]);
        assert_eq!(tokenize(" \tx\n y "), vec!["x", "y"]);
    }

    #[test]
    fn worked_example_counts() {
        let model = build_occurrence(&set(&["a b", "a b", "a b", "a c", "a c"])).unwrap();
        assert_eq!(model.vocabulary, vec!["a", "b", "c"]);
        assert_eq!(model.total, vec![5, 3, 2]);
        assert_eq!(model.frequent, vec![true, true, true]);
        assert_eq!(distances(&model), vec![1.0; 5]);
    }

    #[test]
    fn single_word_article() {
        let model = build_occurrence(&set(&["x"])).unwrap();
        assert_eq!(model.occurrence_vector(0), vec![1]);
        assert_eq!(model.total, vec![1]);
        assert_eq!(model.frequent_count(), 1);
    }

    #[test]
    fn rare_word_is_not_frequent() {
        let mut texts = vec!["common"; 19];
        texts.push("common rare");
        let model = build_occurrence(&set(&texts)).unwrap();
        assert_eq!(model.total, vec![20, 1]);
        assert_eq!(model.frequent, vec![true, false]);
    }

    #[test]
    fn all_empty_articles_is_an_error() {
        assert!(build_occurrence(&set(&["", "  "])).is_err());
    }

    #[test]
    fn distance_examples() {
        let model = OccurrenceModel {
            vocabulary: ["a", "b", "c", "d"].map(String::from).to_vec(),
            occurrences: vec![vec![0, 1], vec![0, 1, 2, 3], vec![]],
            total: vec![2, 2, 1, 1],
            frequent: vec![true, true, true, false],
        };
        assert_eq!(distances(&model), vec![1.0, 1.0, 3f64.sqrt()]);
        let model = OccurrenceModel {
            frequent: vec![true; 4],
            ..model
        };
        assert_eq!(distances(&model), vec![2f64.sqrt(), 0.0, 2.0]);
    }

    #[test]
    fn mac_of_equal_distances() {
        let r = mac_cdfa(&[1.0; 7], &DpgmmConfig::default(), 0).unwrap();
        assert_eq!(
            r,
            MacCdfa {
                mean: 1.0,
                variance: 0.0,
                qualified_count: 1
            }
        );
    }

    #[test]
    fn mac_of_two_separated_groups() {
        let mut v = vec![0.0; 10];
        v.extend([5.0; 10]);
        let r = mac_cdfa(&v, &DpgmmConfig::default(), 4).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.variance, 0.0);
        assert_eq!(r.qualified_count, 2);
    }

    #[test]
    fn small_cluster_at_the_m_over_5_boundary_qualifies() {
        let mut v = vec![1.0; 8];
        v.extend([9.0; 2]);
        let c = cluster_distances(v, &DpgmmConfig::default(), 2);
        assert_eq!(c.qualified.len(), 2);
        assert_eq!(c.cluster_mean(c.mac.unwrap()), 1.0);
    }

    #[test]
    fn mac_requires_five_values() {
        assert!(mac_cdfa(&[1.0; 4], &DpgmmConfig::default(), 0).is_err());
    }

    fn comment(k: usize, reply: bool, title: &str, body: &str) -> CommentRecord {
        CommentRecord {
            author: "acct".into(),
            permlink: format!("p{k}"),
            parent_id: reply.then(|| "hub".to_string()),
            depth: u32::from(reply),
            title: title.into(),
            body: body.into(),
            tags: vec![],
            created_at: k as i64,
        }
    }

    #[test]
    fn few_blogs_zero_title_and_content() {
        let mut acc = AccountRecord::new("acct", 0, "steem");
        acc.comments = (0..3).map(|k| comment(k, false, "t x", "b y")).collect();
        acc.comments.extend((3..23).map(|k| comment(k, true, "", &format!("reply {k} words"))));
        let f = cdfa_features(&acc, &DpgmmConfig::default(), 1);
        assert_eq!(f.title, MacCdfa::default());
        assert_eq!(f.content, MacCdfa::default());
        assert!(f.reply.qualified_count >= 1);
    }

    #[test]
    fn fixed_form_bot_has_zero_content_variance() {
        let mut acc = AccountRecord::new("acct", 0, "steem");
        acc.comments = (0..50)
            .map(|k| comment(k, false, "Daily report", "You got a upvote from us today"))
            .collect();
        let f = cdfa_features(&acc, &DpgmmConfig::default(), 1);
        assert_eq!(f.content.variance, 0.0);
        assert_eq!(f.content.qualified_count, 1);
    }

    #[test]
    fn empty_account_is_all_zero() {
        let acc = AccountRecord::new("acct", 0, "steem");
        assert_eq!(cdfa_features(&acc, &DpgmmConfig::default(), 1).to_array(), [0.0; 9]);
    }
}
