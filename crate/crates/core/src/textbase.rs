//! Text baselines compared against CDFA: frequent-word counting, TF-IDF
//! and pairwise Levenshtein distance.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::cdfa::{build_occurrence, tokenize, ArticleSet, Source};
use crate::corpus::{AccountRecord, LabeledCorpus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    /// Words need at least this many occurrences corpus-wide to be weighted.
    pub tfidf_min_count: usize,
    /// Texts are cut to this many characters before edit distances.
    pub levenshtein_max_chars: usize,
    /// Accounts with this many blogs or replies (or more) are not sampled.
    pub levenshtein_max_items: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            tfidf_min_count: 10,
            levenshtein_max_chars: 2_000,
            levenshtein_max_items: 500,
        }
    }
}

/// Number of frequent words among the account's blog bodies.
pub fn frequent_word_count(account: &AccountRecord) -> usize {
    let set = ArticleSet::from_account(account, Source::Content);
    if set.m() == 0 {
        return 0;
    }
    build_occurrence(&set).map_or(0, |m| m.frequent_count())
}

/// Corpus-wide document frequencies, one document per account.
///
/// Weight of word `w` in document `d` is `count(w, d) * ln(N / df(w))`,
/// raw counts and no smoothing.
#[derive(Debug, Clone)]
pub struct TfidfTable {
    documents: usize,
    df: HashMap<String, usize>,
    corpus_count: HashMap<String, usize>,
    min_count: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TfidfSummary {
    pub mean: f64,
    pub max: f64,
}

fn account_document(account: &AccountRecord) -> Vec<&str> {
    account
        .comments
        .iter()
        .flat_map(|c| tokenize(&c.title).into_iter().chain(tokenize(&c.body)))
        .collect()
}

fn term_counts<'a>(doc: &[&'a str]) -> HashMap<&'a str, usize> {
    let mut counts = HashMap::new();
    for &w in doc {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

impl TfidfTable {
    pub fn from_documents<S: AsRef<str>>(docs: &[Vec<S>], min_count: usize) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut corpus_count: HashMap<String, usize> = HashMap::new();
        for doc in docs {
            let tokens: Vec<&str> = doc.iter().map(|s| s.as_ref()).collect();
            for (w, c) in term_counts(&tokens) {
                *df.entry(w.to_string()).or_insert(0) += 1;
                *corpus_count.entry(w.to_string()).or_insert(0) += c;
            }
        }
        TfidfTable {
            documents: docs.len(),
            df,
            corpus_count,
            min_count,
        }
    }

    pub fn from_corpus(corpus: &LabeledCorpus, min_count: usize) -> Self {
        let docs: Vec<Vec<&str>> = corpus.accounts.iter().map(account_document).collect();
        TfidfTable::from_documents(&docs, min_count)
    }

    pub fn idf(&self, word: &str) -> Option<f64> {
        let df = *self.df.get(word)?;
        Some((self.documents as f64 / df as f64).ln())
    }

    fn qualifies(&self, word: &str) -> bool {
        self.corpus_count.get(word).is_some_and(|&c| c >= self.min_count)
    }

    pub fn document_weights<S: AsRef<str>>(&self, doc: &[S]) -> BTreeMap<String, f64> {
        let tokens: Vec<&str> = doc.iter().map(|s| s.as_ref()).collect();
        term_counts(&tokens)
            .into_iter()
            .filter(|(w, _)| self.qualifies(w))
            .filter_map(|(w, tf)| self.idf(w).map(|idf| (w.to_string(), tf as f64 * idf)))
            .collect()
    }

    pub fn weights(&self, account: &AccountRecord) -> BTreeMap<String, f64> {
        self.document_weights(&account_document(account))
    }

    /// Mean and max weight over the account's qualifying words.
    pub fn summary(&self, account: &AccountRecord) -> TfidfSummary {
        summarize(&self.weights(account))
    }
}

fn summarize(weights: &BTreeMap<String, f64>) -> TfidfSummary {
    if weights.is_empty() {
        return TfidfSummary::default();
    }
    let sum: f64 = weights.values().sum();
    TfidfSummary {
        mean: sum / weights.len() as f64,
        max: weights.values().copied().fold(0.0, f64::max),
    }
}

/// Per-account word weights over the whole corpus.
pub fn tfidf_weights(corpus: &LabeledCorpus, min_count: usize) -> BTreeMap<String, BTreeMap<String, f64>> {
    let table = TfidfTable::from_corpus(corpus, min_count);
    corpus
        .accounts
        .iter()
        .map(|a| (a.name.clone(), table.weights(a)))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LevenshteinRegularity {
    pub mean_title: f64,
    pub mean_content: f64,
    pub mean_reply: f64,
    /// False when the account was too active to be sampled; the means are
    /// then zero.
    pub sampled: bool,
}

fn truncate_chars(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Unit-cost Levenshtein distance over characters.
pub fn edit_distance(a: &str, b: &str) -> usize {
    rapidfuzz::distance::levenshtein::distance(a.chars(), b.chars())
}

/// Mean unit-cost edit distance over all unordered pairs; 0 below two items.
pub fn mean_pairwise_levenshtein(texts: &[&str], max_chars: usize) -> f64 {
    if texts.len() < 2 {
        return 0.0;
    }
    let cut: Vec<&str> = texts.iter().map(|t| truncate_chars(t, max_chars)).collect();
    let mut total = 0u64;
    let mut pairs = 0u64;
    for i in 0..cut.len() {
        for j in i + 1..cut.len() {
            total += edit_distance(cut[i], cut[j]) as u64;
            pairs += 1;
        }
    }
    total as f64 / pairs as f64
}

pub fn levenshtein_regularity(account: &AccountRecord, cfg: &BaselineConfig) -> LevenshteinRegularity {
    let titles: Vec<&str> = account.blogs().map(|c| c.title.as_str()).collect();
    let contents: Vec<&str> = account.blogs().map(|c| c.body.as_str()).collect();
    let replies: Vec<&str> = account.replies().map(|c| c.body.as_str()).collect();
    if contents.len() >= cfg.levenshtein_max_items || replies.len() >= cfg.levenshtein_max_items {
        return LevenshteinRegularity::default();
    }
    LevenshteinRegularity {
        mean_title: mean_pairwise_levenshtein(&titles, cfg.levenshtein_max_chars),
        mean_content: mean_pairwise_levenshtein(&contents, cfg.levenshtein_max_chars),
        mean_reply: mean_pairwise_levenshtein(&replies, cfg.levenshtein_max_chars),
        sampled: true,
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::cdfa::build_occurrence;
    use crate::corpus::CommentRecord;

    fn account(blogs: &[&str], replies: &[&str]) -> AccountRecord {
        let mut a = AccountRecord::new("a", 0, "steem");
        let mk = |k: usize, body: &str, reply: bool| CommentRecord {
            author: "a".into(),
            permlink: format!("p{k}"),
            parent_id: reply.then(|| "x".to_string()),
            depth: u32::from(reply),
            title: format!("title {k}"),
            body: body.into(),
            tags: vec![],
            created_at: k as i64,
        };
        a.comments = blogs.iter().enumerate().map(|(k, b)| mk(k, b, false)).collect();
        a.comments
            .extend(replies.iter().enumerate().map(|(k, b)| mk(100 + k, b, true)));
        a
    }

    #[test]
    fn frequent_word_count_examples() {
        assert_eq!(frequent_word_count(&account(&["a b", "a b", "a b", "a c", "a c"], &[])), 3);
        assert_eq!(frequent_word_count(&account(&[], &["ignored reply"])), 0);
        assert_eq!(frequent_word_count(&account(&["same"; 20], &[])), 1);
    }

    #[test]
    fn frequent_word_count_matches_occurrence_mask() {
        let a = account(&["x y z", "x y", "x q r s t u v w", "x"], &[]);
        let model = build_occurrence(&ArticleSet::from_account(&a, Source::Content)).unwrap();
        assert_eq!(frequent_word_count(&a), model.frequent.iter().filter(|&&f| f).count());
    }

    #[test]
    fn ubiquitous_word_weighs_zero() {
        let docs = vec![vec!["the"; 6], vec!["the"; 6]];
        let t = TfidfTable::from_documents(&docs, 10);
        assert_eq!(t.document_weights(&docs[0]).get("the"), Some(&0.0));
    }

    #[test]
    fn words_below_ten_occurrences_are_dropped() {
        let docs = vec![vec!["rare"; 9], vec!["other"; 12]];
        let t = TfidfTable::from_documents(&docs, 10);
        assert!(t.document_weights(&docs[0]).is_empty());
        assert_eq!(t.document_weights(&docs[1]).len(), 1);
    }

    #[test]
    fn two_document_weight() {
        let docs = vec![vec!["w", "w", "w", "w"], vec!["v"]];
        let t = TfidfTable::from_documents(&docs, 1);
        let w = t.document_weights(&docs[0])["w"];
        assert!((w - 4.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn levenshtein_examples() {
        let a = account(&["only"], &["same", "same"]);
        let r = levenshtein_regularity(&a, &BaselineConfig::default());
        assert_eq!(r.mean_reply, 0.0);
        assert_eq!(r.mean_title, 0.0);
        assert!(r.sampled);
        assert_eq!(mean_pairwise_levenshtein(&["abc", "abd"], 2_000), 1.0);
    }

    #[test]
    fn very_active_accounts_are_not_sampled() {
        let cfg = BaselineConfig {
            levenshtein_max_items: 3,
            ..BaselineConfig::default()
        };
        let r = levenshtein_regularity(&account(&[], &["a", "b", "c"]), &cfg);
        assert!(!r.sampled);
        assert_eq!(r.mean_reply, 0.0);
    }

    #[test]
    fn truncation_respects_char_boundaries() {
        assert_eq!(truncate_chars("héllo", 2), "hé");
        assert_eq!(truncate_chars("hi", 10), "hi");
    }

    fn dp_distance(a: &str, b: &str) -> usize {
        let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        let mut prev: Vec<usize> = (0..=b.len()).collect();
        for i in 1..=a.len() {
            let mut cur = vec![i; b.len() + 1];
            for j in 1..=b.len() {
                let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
                cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
            }
            prev = cur;
        }
        prev[b.len()]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn edit_distance_matches_table_oracle(a in "[abcé ]{0,80}", b in "[abcé ]{0,80}") {
            prop_assert_eq!(edit_distance(&a, &b), dp_distance(&a, &b));
        }

        #[test]
        fn edit_distance_is_a_metric(a in "[abc]{0,12}", b in "[abc]{0,12}", c in "[abc]{0,12}") {
            let d = edit_distance;
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
            prop_assert_eq!(d(&a, &a), 0);
        }
    }
}
