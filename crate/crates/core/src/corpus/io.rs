//! Line-delimited JSON dump format.
//!
//! One object per line, discriminated by `kind`:
//!
//! ```text
//! {"kind":"account","name":"alice","created_at":"2019-02-01T00:00:00Z","creator":"steem","follower_count":3,"following_count":1}
//! {"kind":"comment","author":"alice","permlink":"p1","depth":0,"title":"t","body":"b","tags":["x"],"created_at":"2019-02-02T10:00:00Z"}
//! {"kind":"transfer","from":"alice","to":"bob","amount":1.5,"timestamp":"2019-02-03T00:00:00Z"}
//! {"kind":"label","name":"alice","label":"human"}
//! ```
//!
//! Files written by [`export`] start with a `meta` line carrying the dataset
//! end, so [`load`] can read them back without it being supplied again:
//!
//! ```text
//! {"kind":"meta","dataset_end":"2019-12-31T23:59:59Z"}
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{sort_comments, sort_transfers, AccountRecord, CommentRecord, Label, LabeledCorpus, TransferRecord};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line {
    Account(AccountLine),
    Comment(CommentLine),
    Transfer(TransferLine),
    Label(LabelLine),
    Meta(MetaLine),
}

#[derive(Debug, Serialize, Deserialize)]
struct MetaLine {
    dataset_end: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct AccountLine {
    name: String,
    created_at: String,
    creator: String,
    #[serde(default)]
    follower_count: u64,
    #[serde(default)]
    following_count: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CommentLine {
    author: String,
    permlink: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent_id: Option<String>,
    #[serde(default)]
    depth: Option<u32>,
    #[serde(default)]
    title: String,
    #[serde(default)]
    body: String,
    #[serde(default)]
    tags: Vec<String>,
    created_at: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct TransferLine {
    from: String,
    to: String,
    amount: f64,
    timestamp: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelLine {
    name: String,
    label: Label,
}

/// Counters for recoverable oddities seen while ingesting.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestDiagnostics {
    pub records: usize,
    /// Stored depth disagreed with the parent chain; the chain was used.
    pub depth_conflicts: usize,
    /// Transfers between two accounts that are both absent from the dump.
    pub unattached_transfers: usize,
}

/// Parse an ISO-8601 UTC timestamp into unix seconds.
///
/// Accepts RFC 3339 (`2019-02-01T00:00:00Z`, offsets allowed) and the
/// offset-less `2019-02-01T00:00:00` form common in chain dumps, which is
/// read as UTC.
pub fn parse_timestamp(s: &str) -> std::result::Result<i64, String> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp());
    }
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .map(|dt| dt.and_utc().timestamp())
        .map_err(|e| format!("bad timestamp {s:?}: {e}"))
}

pub fn format_timestamp(ts: i64) -> String {
    DateTime::from_timestamp(ts, 0)
        .map(|dt| dt.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .unwrap_or_else(|| ts.to_string())
}

/// Read a dump file into a corpus.
pub fn ingest(path: impl AsRef<Path>, dataset_end: i64) -> Result<LabeledCorpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_records(BufReader::new(file), dataset_end).map(|(c, _)| c)
}

/// Parse dump records from any reader.
pub fn parse_records<R: BufRead>(reader: R, dataset_end: i64) -> Result<(LabeledCorpus, IngestDiagnostics)> {
    parse_inner(reader, Some(dataset_end))
}

/// Read a file written by [`export`], taking the dataset end from its
/// `meta` line.
pub fn load(path: impl AsRef<Path>) -> Result<LabeledCorpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_inner(BufReader::new(file), None).map(|(c, _)| c)
}

/// Like [`parse_records`], with the dataset end taken from a `meta` line.
pub fn parse_saved<R: BufRead>(reader: R) -> Result<(LabeledCorpus, IngestDiagnostics)> {
    parse_inner(reader, None)
}

fn parse_inner<R: BufRead>(reader: R, explicit_end: Option<i64>) -> Result<(LabeledCorpus, IngestDiagnostics)> {
    let mut meta_end: Option<i64> = None;
    let mut diag = IngestDiagnostics::default();
    let mut accounts: Vec<AccountRecord> = Vec::new();
    let mut account_idx: HashMap<String, usize> = HashMap::new();
    let mut comments: Vec<(CommentRecord, Option<u32>)> = Vec::new();
    let mut transfers: Vec<TransferRecord> = Vec::new();
    let mut labels: BTreeMap<String, Label> = BTreeMap::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: lineno, message };
        let rec: Line = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        diag.records += 1;
        match rec {
            Line::Account(a) => {
                if account_idx.contains_key(&a.name) {
                    return Err(parse_err(format!("duplicate account {}", a.name)));
                }
                let mut acc = AccountRecord::new(a.name.clone(), parse_timestamp(&a.created_at).map_err(parse_err)?, a.creator);
                acc.follower_count = a.follower_count;
                acc.following_count = a.following_count;
                account_idx.insert(a.name, accounts.len());
                accounts.push(acc);
            }
            Line::Comment(c) => {
                let created_at = parse_timestamp(&c.created_at).map_err(parse_err)?;
                comments.push((
                    CommentRecord {
                        author: c.author,
                        permlink: c.permlink,
                        parent_id: c.parent_id,
                        depth: 0,
                        title: c.title,
                        body: c.body,
                        tags: c.tags,
                        created_at,
                    },
                    c.depth,
                ));
            }
            Line::Transfer(t) => {
                if !(t.amount >= 0.0) {
                    return Err(parse_err(format!("negative or invalid amount {}", t.amount)));
                }
                transfers.push(TransferRecord {
                    from: t.from,
                    to: t.to,
                    amount: t.amount,
                    timestamp: parse_timestamp(&t.timestamp).map_err(parse_err)?,
                });
            }
            Line::Label(l) => {
                if labels.insert(l.name.clone(), l.label).is_some() {
                    return Err(parse_err(format!("duplicate label for {}", l.name)));
                }
            }
            Line::Meta(m) => {
                meta_end = Some(parse_timestamp(&m.dataset_end).map_err(parse_err)?);
            }
        }
    }
    let dataset_end = explicit_end
        .or(meta_end)
        .ok_or_else(|| Error::Config("dataset end not given and no meta line in the file".into()))?;

    resolve_depths(&mut comments, &mut diag)?;

    let mut external = Vec::new();
    for (c, _) in comments {
        if c.created_at > dataset_end {
            return Err(Error::Validation(format!("comment {} is after dataset end", c.permlink)));
        }
        match account_idx.get(&c.author) {
            Some(&i) => accounts[i].comments.push(c),
            None => external.push(c),
        }
    }
    for t in transfers {
        if t.timestamp > dataset_end {
            return Err(Error::Validation(format!(
                "transfer {} -> {} is after dataset end",
                t.from, t.to
            )));
        }
        let from = account_idx.get(&t.from).copied();
        let to = account_idx.get(&t.to).copied();
        if from.is_none() && to.is_none() {
            diag.unattached_transfers += 1;
        }
        if let Some(i) = to {
            accounts[i].transfers_in.push(t.clone());
        }
        if let Some(i) = from {
            accounts[i].transfers_out.push(t);
        }
    }
    for a in &mut accounts {
        if a.created_at > dataset_end {
            return Err(Error::Validation(format!("account {} created after dataset end", a.name)));
        }
        sort_comments(&mut a.comments);
        sort_transfers(&mut a.transfers_in);
        sort_transfers(&mut a.transfers_out);
    }
    sort_comments(&mut external);
    for name in labels.keys() {
        if !account_idx.contains_key(name) {
            return Err(Error::Validation(format!("label for unknown account {name}")));
        }
    }

    Ok((
        LabeledCorpus {
            accounts,
            labels,
            dataset_end,
            external_comments: external,
        },
        diag,
    ))
}

/// Derive every depth from the parent chain, checking stored depths and
/// parent timestamps along the way.
fn resolve_depths(comments: &mut [(CommentRecord, Option<u32>)], diag: &mut IngestDiagnostics) -> Result<()> {
    let mut index: HashMap<&str, usize> = HashMap::with_capacity(comments.len());
    for (i, (c, _)) in comments.iter().enumerate() {
        if index.insert(c.permlink.as_str(), i).is_some() {
            return Err(Error::Validation(format!("duplicate comment id {}", c.permlink)));
        }
    }
    let parents: Vec<Option<usize>> = comments
        .iter()
        .map(|(c, _)| match &c.parent_id {
            None => Ok(None),
            Some(pid) => index
                .get(pid.as_str())
                .copied()
                .map(Some)
                .ok_or_else(|| Error::DanglingParent {
                    orphan: c.permlink.clone(),
                    parent: pid.clone(),
                }),
        })
        .collect::<Result<_>>()?;
    drop(index);

    let mut depth: Vec<Option<u32>> = vec![None; comments.len()];
    for start in 0..comments.len() {
        let mut chain = Vec::new();
        let mut cur = start;
        let base = loop {
            if let Some(d) = depth[cur] {
                break d;
            }
            match parents[cur] {
                None => {
                    depth[cur] = Some(0);
                    break 0;
                }
                Some(p) => {
                    chain.push(cur);
                    if chain.len() > comments.len() {
                        return Err(Error::Validation(format!(
                            "reply chain through {} forms a cycle",
                            comments[start].0.permlink
                        )));
                    }
                    cur = p;
                }
            }
        };
        for (k, &node) in chain.iter().rev().enumerate() {
            depth[node] = Some(base + k as u32 + 1);
        }
    }

    for i in 0..comments.len() {
        let d = depth[i].expect("every depth resolved");
        if let Some(p) = parents[i] {
            if comments[i].0.created_at < comments[p].0.created_at {
                return Err(Error::Validation(format!(
                    "reply {} predates its parent {}",
                    comments[i].0.permlink, comments[p].0.permlink
                )));
            }
        }
        let (c, stored) = &mut comments[i];
        if matches!(stored, Some(s) if *s != d) {
            diag.depth_conflicts += 1;
        }
        c.depth = d;
    }
    Ok(())
}

fn comment_line(c: &CommentRecord) -> Line {
    Line::Comment(CommentLine {
        author: c.author.clone(),
        permlink: c.permlink.clone(),
        parent_id: c.parent_id.clone(),
        depth: Some(c.depth),
        title: c.title.clone(),
        body: c.body.clone(),
        tags: c.tags.clone(),
        created_at: format_timestamp(c.created_at),
    })
}

fn transfer_line(t: &TransferRecord) -> Line {
    Line::Transfer(TransferLine {
        from: t.from.clone(),
        to: t.to.clone(),
        amount: t.amount,
        timestamp: format_timestamp(t.timestamp),
    })
}

/// Write a corpus in the dump format. Each transfer is written once.
pub fn export_to_writer<W: Write>(corpus: &LabeledCorpus, mut w: W) -> Result<()> {
    let mut emit = |line: &Line| -> Result<()> {
        serde_json::to_writer(&mut w, line)?;
        w.write_all(b"\n").map_err(|e| Error::io("<export>", e))
    };
    emit(&Line::Meta(MetaLine {
        dataset_end: format_timestamp(corpus.dataset_end),
    }))?;
    for a in &corpus.accounts {
        emit(&Line::Account(AccountLine {
            name: a.name.clone(),
            created_at: format_timestamp(a.created_at),
            creator: a.creator.clone(),
            follower_count: a.follower_count,
            following_count: a.following_count,
        }))?;
    }
    for c in corpus.all_comments() {
        emit(&comment_line(c))?;
    }
    let present: std::collections::HashSet<&str> = corpus.accounts.iter().map(|a| a.name.as_str()).collect();
    for a in &corpus.accounts {
        for t in &a.transfers_out {
            emit(&transfer_line(t))?;
        }
        for t in a.transfers_in.iter().filter(|t| !present.contains(t.from.as_str())) {
            emit(&transfer_line(t))?;
        }
    }
    for (name, label) in &corpus.labels {
        emit(&Line::Label(LabelLine {
            name: name.clone(),
            label: *label,
        }))?;
    }
    Ok(())
}

pub fn export(corpus: &LabeledCorpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    export_to_writer(corpus, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const END: i64 = 1_600_000_000;

    fn parse(text: &str) -> Result<(LabeledCorpus, IngestDiagnostics)> {
        parse_records(text.as_bytes(), END)
    }

    const BLOG_AND_REPLY: &str = r#"
{"kind":"account","name":"alice","created_at":"2019-01-01T00:00:00Z","creator":"steem","follower_count":3,"following_count":1}
{"kind":"account","name":"bob","created_at":"2019-01-01T00:00:00Z","creator":"steem"}
{"kind":"comment","author":"bob","permlink":"r1","parent_id":"b1","depth":1,"title":"","body":"nice","created_at":"2019-02-01T00:01:00Z","extra":"ignored"}
{"kind":"comment","author":"alice","permlink":"b1","title":"Hi","body":"hello world","tags":["intro"],"created_at":"2019-02-01T00:00:00Z"}
{"kind":"transfer","from":"alice","to":"bob","amount":1.5,"timestamp":"2019-02-02T00:00:00Z"}
{"kind":"label","name":"alice","label":"human"}
{"kind":"label","name":"bob","label":"bot"}
"#;

    #[test]
    fn blog_and_reply_get_depths() {
        let (c, diag) = parse(BLOG_AND_REPLY).unwrap();
        c.validate().unwrap();
        assert_eq!(diag.depth_conflicts, 0);
        assert_eq!(c.account("alice").unwrap().comments[0].depth, 0);
        assert_eq!(c.account("bob").unwrap().comments[0].depth, 1);
        assert_eq!(c.account("alice").unwrap().transfers_out.len(), 1);
        assert_eq!(c.account("bob").unwrap().transfers_in.len(), 1);
        assert_eq!(c.count_label(Label::Bot), 1);
    }

    #[test]
    fn dangling_parent_names_orphan() {
        let text = r#"{"kind":"comment","author":"a","permlink":"r9","parent_id":"nope","created_at":"2019-02-01T00:00:00Z"}"#;
        match parse(text) {
            Err(Error::DanglingParent { orphan, parent }) => {
                assert_eq!(orphan, "r9");
                assert_eq!(parent, "nope");
            }
            other => panic!("expected dangling parent, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "{\"kind\":\"label\",\"name\":\"a\",\"label\":\"bot\"}\n{not json\n";
        match parse(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn stored_depth_conflict_trusts_chain() {
        let text = r#"
{"kind":"comment","author":"a","permlink":"b","created_at":"2019-02-01T00:00:00Z"}
{"kind":"comment","author":"a","permlink":"r","parent_id":"b","depth":4,"created_at":"2019-02-01T00:00:00Z"}
"#;
        let (c, diag) = parse(text).unwrap();
        assert_eq!(diag.depth_conflicts, 1);
        assert_eq!(c.external_comments.iter().find(|x| x.permlink == "r").unwrap().depth, 1);
    }

    #[test]
    fn reply_before_parent_is_rejected() {
        let text = r#"
{"kind":"comment","author":"a","permlink":"b","created_at":"2019-02-01T00:00:10Z"}
{"kind":"comment","author":"a","permlink":"r","parent_id":"b","created_at":"2019-02-01T00:00:00Z"}
"#;
        assert!(matches!(parse(text), Err(Error::Validation(_))));
    }

    #[test]
    fn parent_cycle_is_rejected() {
        let text = r#"
{"kind":"comment","author":"a","permlink":"x","parent_id":"y","created_at":"2019-02-01T00:00:00Z"}
{"kind":"comment","author":"a","permlink":"y","parent_id":"x","created_at":"2019-02-01T00:00:00Z"}
"#;
        assert!(matches!(parse(text), Err(Error::Validation(_))));
    }

    #[test]
    fn label_for_unknown_account_is_rejected() {
        let text = r#"{"kind":"label","name":"ghost","label":"bot"}"#;
        assert!(matches!(parse(text), Err(Error::Validation(_))));
    }

    #[test]
    fn timestamps_accept_common_forms() {
        assert_eq!(parse_timestamp("1970-01-01T00:01:00Z"), Ok(60));
        assert_eq!(parse_timestamp("1970-01-01T00:01:00"), Ok(60));
        assert_eq!(parse_timestamp("1970-01-01T01:01:00+01:00"), Ok(60));
        assert!(parse_timestamp("yesterday").is_err());
        assert_eq!(format_timestamp(60), "1970-01-01T00:01:00Z");
    }

    #[test]
    fn export_then_ingest_round_trips() {
        let (c, _) = parse(BLOG_AND_REPLY).unwrap();
        let mut buf = Vec::new();
        export_to_writer(&c, &mut buf).unwrap();
        let (again, _) = parse_records(buf.as_slice(), END).unwrap();
        assert_eq!(again, c);
        let (saved, _) = parse_saved(buf.as_slice()).unwrap();
        assert_eq!(saved, c);
    }

    #[test]
    fn saved_form_needs_a_dataset_end() {
        let err = parse_saved(BLOG_AND_REPLY.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }
}
