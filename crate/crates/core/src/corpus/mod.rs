//! Account-activity data model, dump ingestion, activity filtering and
//! synthetic corpus generation.

mod io;
mod synth;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

pub use io::{
    export, export_to_writer, format_timestamp, ingest, load, parse_records, parse_saved, parse_timestamp, IngestDiagnostics,
};
pub use synth::{synthesize, SynthSpec};

/// Default minimum number of blogs plus replies for an account to be kept.
pub const DEFAULT_MIN_ACTIVITY: usize = 40;

/// A blog (depth 0) or a reply (depth > 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentRecord {
    pub author: String,
    pub permlink: String,
    pub parent_id: Option<String>,
    pub depth: u32,
    pub title: String,
    pub body: String,
    pub tags: Vec<String>,
    /// Unix seconds, UTC.
    pub created_at: i64,
}

impl CommentRecord {
    pub fn is_blog(&self) -> bool {
        self.parent_id.is_none()
    }

    pub fn is_reply(&self) -> bool {
        self.parent_id.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRecord {
    pub from: String,
    pub to: String,
    pub amount: f64,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccountRecord {
    pub name: String,
    pub created_at: i64,
    pub creator: String,
    pub follower_count: u64,
    pub following_count: u64,
    /// Sorted ascending by `created_at`.
    pub comments: Vec<CommentRecord>,
    pub transfers_out: Vec<TransferRecord>,
    pub transfers_in: Vec<TransferRecord>,
}

impl AccountRecord {
    pub fn new(name: impl Into<String>, created_at: i64, creator: impl Into<String>) -> Self {
        AccountRecord {
            name: name.into(),
            created_at,
            creator: creator.into(),
            follower_count: 0,
            following_count: 0,
            comments: Vec::new(),
            transfers_out: Vec::new(),
            transfers_in: Vec::new(),
        }
    }

    pub fn blogs(&self) -> impl Iterator<Item = &CommentRecord> {
        self.comments.iter().filter(|c| c.is_blog())
    }

    pub fn replies(&self) -> impl Iterator<Item = &CommentRecord> {
        self.comments.iter().filter(|c| c.is_reply())
    }

    /// Blogs plus replies.
    pub fn activity(&self) -> usize {
        self.comments.len()
    }

    /// Incoming and outgoing transfers together.
    pub fn transfers(&self) -> impl Iterator<Item = &TransferRecord> {
        self.transfers_in.iter().chain(self.transfers_out.iter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Bot,
    Human,
}

impl Label {
    pub fn is_bot(self) -> bool {
        self == Label::Bot
    }
}

/// An immutable set of accounts with ground-truth labels.
///
/// Comments written by authors that are not (or no longer) in `accounts`
/// are kept in `external_comments` so that reply threads stay complete
/// after filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus {
    pub accounts: Vec<AccountRecord>,
    pub labels: BTreeMap<String, Label>,
    /// End of the observation window, unix seconds.
    pub dataset_end: i64,
    pub external_comments: Vec<CommentRecord>,
}

impl LabeledCorpus {
    pub fn account(&self, name: &str) -> Option<&AccountRecord> {
        self.accounts.iter().find(|a| a.name == name)
    }

    pub fn label(&self, name: &str) -> Option<Label> {
        self.labels.get(name).copied()
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.labels.values().filter(|&&l| l == label).count()
    }

    /// Every comment in the corpus, account comments first.
    pub fn all_comments(&self) -> impl Iterator<Item = &CommentRecord> {
        self.accounts
            .iter()
            .flat_map(|a| a.comments.iter())
            .chain(self.external_comments.iter())
    }

    /// Check the structural invariants that ingestion guarantees.
    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;

        let mut by_id: HashMap<&str, &CommentRecord> = HashMap::new();
        for c in self.all_comments() {
            if by_id.insert(c.permlink.as_str(), c).is_some() {
                return Err(Error::Validation(format!("duplicate comment id {}", c.permlink)));
            }
        }
        for c in self.all_comments() {
            match &c.parent_id {
                None if c.depth != 0 => {
                    return Err(Error::Validation(format!("blog {} has depth {}", c.permlink, c.depth)))
                }
                None => {}
                Some(pid) => {
                    let parent = by_id.get(pid.as_str()).ok_or_else(|| Error::DanglingParent {
                        orphan: c.permlink.clone(),
                        parent: pid.clone(),
                    })?;
                    if parent.depth + 1 != c.depth {
                        return Err(Error::Validation(format!(
                            "reply {} has depth {} under parent of depth {}",
                            c.permlink, c.depth, parent.depth
                        )));
                    }
                    if c.created_at < parent.created_at {
                        return Err(Error::Validation(format!(
                            "reply {} predates its parent {}",
                            c.permlink, pid
                        )));
                    }
                }
            }
            if c.created_at > self.dataset_end {
                return Err(Error::Validation(format!("comment {} is after dataset end", c.permlink)));
            }
        }
        for a in &self.accounts {
            if a.created_at > self.dataset_end {
                return Err(Error::Validation(format!("account {} created after dataset end", a.name)));
            }
            if a.comments.iter().any(|c| c.author != a.name) {
                return Err(Error::Validation(format!("account {} holds a foreign comment", a.name)));
            }
            if a.comments.windows(2).any(|w| w[0].created_at > w[1].created_at) {
                return Err(Error::Validation(format!("comments of {} are not sorted", a.name)));
            }
            let bad_transfer = a.transfers_out.iter().any(|t| t.from != a.name)
                || a.transfers_in.iter().any(|t| t.to != a.name)
                || a.transfers().any(|t| !(t.amount >= 0.0) || t.timestamp > self.dataset_end);
            if bad_transfer {
                return Err(Error::Validation(format!("account {} has an inconsistent transfer", a.name)));
            }
        }
        for name in self.labels.keys() {
            if self.account(name).is_none() {
                return Err(Error::Validation(format!("label for unknown account {name}")));
            }
        }
        Ok(())
    }
}

fn comment_order(a: &CommentRecord, b: &CommentRecord) -> std::cmp::Ordering {
    a.created_at
        .cmp(&b.created_at)
        .then_with(|| a.permlink.cmp(&b.permlink))
}

pub(crate) fn sort_comments(comments: &mut [CommentRecord]) {
    comments.sort_by(comment_order);
}

pub(crate) fn sort_transfers(transfers: &mut [TransferRecord]) {
    transfers.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.from.cmp(&b.from))
            .then_with(|| a.to.cmp(&b.to))
            .then_with(|| a.amount.total_cmp(&b.amount))
    });
}

/// Keep the accounts whose blog plus reply count reaches `min_activity`.
///
/// Comments of dropped accounts move to `external_comments`, so threads
/// seen by the kept accounts are unchanged.
pub fn filter_active(corpus: &LabeledCorpus, min_activity: usize) -> LabeledCorpus {
    let (kept, dropped): (Vec<&AccountRecord>, Vec<&AccountRecord>) = corpus
        .accounts
        .iter()
        .partition(|a| a.activity() >= min_activity);

    let mut external = corpus.external_comments.clone();
    if !dropped.is_empty() {
        external.extend(dropped.iter().flat_map(|a| a.comments.iter().cloned()));
        sort_comments(&mut external);
    }

    let accounts: Vec<AccountRecord> = kept.into_iter().cloned().collect();
    let labels = corpus
        .labels
        .iter()
        .filter(|(name, _)| accounts.iter().any(|a| &a.name == *name))
        .map(|(n, l)| (n.clone(), *l))
        .collect();

    LabeledCorpus {
        accounts,
        labels,
        dataset_end: corpus.dataset_end,
        external_comments: external,
    }
}
