//! Labeled tweet corpora: data model, JSON-Lines format, ingestion and validation.
//!
//! One account per line, with its tweet history embedded:
//!
//! ```text
//! {"user_id":"u1","screen_name":"alice","followers":10,"friends":3,"favorites":0,
//!  "lists":0,"statuses":42,"label":"spam","tweets":[{"text":"hi","created_at":"2017-01-01T00:00:00Z"}]}
//! ```

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, SubsecRound, Utc};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Upper bound on the tweet history kept per account.
pub const MAX_TWEETS: usize = 100;

/// Errors raised while validating a single JSONL record.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("invalid value for `{field}`: {reason}")]
    InvalidValue { field: String, reason: String },
    #[error("bad label `{0}` (expected \"spam\" or \"ham\")")]
    BadLabel(String),
}

impl RecordError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        RecordError::InvalidValue {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Record {
        path: PathBuf,
        line: usize,
        #[source]
        source: RecordError,
    },
    #[error("{path}:{line}: duplicate user_id `{user_id}`")]
    DuplicateUser {
        path: PathBuf,
        line: usize,
        user_id: String,
    },
    #[error("duplicate user_id `{0}`")]
    DuplicateUserId(String),
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Ground-truth account label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Spam,
    Ham,
}

impl Label {
    /// Binary target with spam as the positive class.
    pub fn target(self) -> u8 {
        match self {
            Label::Spam => 1,
            Label::Ham => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Spam => "spam",
            Label::Ham => "ham",
        }
    }
}

impl std::str::FromStr for Label {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spam" => Ok(Label::Spam),
            "ham" => Ok(Label::Ham),
            other => Err(RecordError::BadLabel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Tweet {
    pub text: String,
    #[serde(serialize_with = "serialize_timestamp")]
    pub created_at: DateTime<Utc>,
}

impl Tweet {
    pub fn new(text: impl Into<String>, created_at: DateTime<Utc>) -> Self {
        Tweet {
            text: text.into(),
            created_at: created_at.trunc_subsecs(0),
        }
    }
}

fn serialize_timestamp<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_timestamp(ts))
}

/// `YYYY-MM-DDThh:mm:ssZ`.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Parses an RFC 3339 instant. An explicit offset or `Z` is required; the
/// result is normalized to UTC at second resolution.
pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, RecordError> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc).trunc_subsecs(0))
        .map_err(|e| RecordError::invalid("created_at", format!("`{s}`: {e}")))
}

/// A user's profile counters, tweet history and label.
///
/// `statuses` is the profile's lifetime tweet counter; `tweets` is the fetched
/// history (at most [`MAX_TWEETS`]) in ascending time order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AccountRecord {
    pub user_id: String,
    pub screen_name: String,
    pub followers: u64,
    pub friends: u64,
    pub favorites: u64,
    pub lists: u64,
    pub statuses: u64,
    pub label: Label,
    pub tweets: Vec<Tweet>,
}

impl AccountRecord {
    /// Checks the record invariants that the type system does not enforce.
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.tweets.is_empty() {
            return Err(RecordError::invalid(
                "tweets",
                "at least one tweet is required",
            ));
        }
        if self.tweets.len() > MAX_TWEETS {
            return Err(RecordError::invalid(
                "tweets",
                format!(
                    "{} tweets exceeds the limit of {MAX_TWEETS}",
                    self.tweets.len()
                ),
            ));
        }
        for (i, t) in self.tweets.iter().enumerate() {
            if t.text.trim().is_empty() {
                return Err(RecordError::invalid(
                    format!("tweets[{i}].text"),
                    "empty text",
                ));
            }
        }
        if self
            .tweets
            .windows(2)
            .any(|w| w[0].created_at > w[1].created_at)
        {
            return Err(RecordError::invalid("tweets", "not sorted by created_at"));
        }
        Ok(())
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("account records always serialize")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTweet {
    text: String,
    created_at: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAccount {
    user_id: String,
    screen_name: String,
    followers: i64,
    friends: i64,
    favorites: i64,
    lists: i64,
    statuses: i64,
    label: String,
    tweets: Vec<RawTweet>,
}

fn counter(field: &str, v: i64) -> Result<u64, RecordError> {
    u64::try_from(v).map_err(|_| RecordError::invalid(field, format!("negative count {v}")))
}

/// Parses and validates one JSONL line. Tweets are re-sorted ascending by
/// time (stable, so equal timestamps keep their input order).
pub fn parse_account_record(line: &str) -> Result<AccountRecord, RecordError> {
    let raw: RawAccount =
        serde_json::from_str(line).map_err(|e| RecordError::Malformed(e.to_string()))?;

    let label = raw.label.parse::<Label>()?;
    if raw.tweets.len() > MAX_TWEETS {
        return Err(RecordError::invalid(
            "tweets",
            format!(
                "{} tweets exceeds the limit of {MAX_TWEETS}",
                raw.tweets.len()
            ),
        ));
    }
    let mut tweets = raw
        .tweets
        .into_iter()
        .map(|t| {
            let created_at = parse_timestamp(&t.created_at)?;
            Ok(Tweet {
                text: t.text,
                created_at,
            })
        })
        .collect::<Result<Vec<_>, RecordError>>()?;
    tweets.sort_by_key(|t| t.created_at);

    let record = AccountRecord {
        user_id: raw.user_id,
        screen_name: raw.screen_name,
        followers: counter("followers", raw.followers)?,
        friends: counter("friends", raw.friends)?,
        favorites: counter("favorites", raw.favorites)?,
        lists: counter("lists", raw.lists)?,
        statuses: counter("statuses", raw.statuses)?,
        label,
        tweets,
    };
    record.validate()?;
    Ok(record)
}

/// A non-empty set of accounts with unique user ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    accounts: Vec<AccountRecord>,
}

impl Corpus {
    pub fn new(accounts: Vec<AccountRecord>) -> Result<Self, CorpusError> {
        if accounts.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut seen = HashSet::with_capacity(accounts.len());
        for a in &accounts {
            if !seen.insert(a.user_id.as_str()) {
                return Err(CorpusError::DuplicateUserId(a.user_id.clone()));
            }
        }
        Ok(Corpus { accounts })
    }

    pub fn accounts(&self) -> &[AccountRecord] {
        &self.accounts
    }

    pub fn len(&self) -> usize {
        self.accounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accounts.is_empty()
    }

    /// Total number of (account, tweet) instances.
    pub fn instance_count(&self) -> usize {
        self.accounts.iter().map(|a| a.tweets.len()).sum()
    }

    pub fn into_accounts(self) -> Vec<AccountRecord> {
        self.accounts
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for a in &self.accounts {
            out.write_all(a.to_json_line().as_bytes())?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

/// Reads a JSONL corpus from any buffered reader. Blank lines are skipped;
/// `path` is only used for error messages.
pub fn read_corpus<R: BufRead>(reader: R, path: &Path) -> Result<Corpus, CorpusError> {
    let mut accounts = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_account_record(&line).map_err(|source| CorpusError::Record {
            path: path.to_path_buf(),
            line: idx + 1,
            source,
        })?;
        if !seen.insert(record.user_id.clone()) {
            return Err(CorpusError::DuplicateUser {
                path: path.to_path_buf(),
                line: idx + 1,
                user_id: record.user_id,
            });
        }
        accounts.push(record);
    }
    Corpus::new(accounts)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_corpus(BufReader::new(file), path)
}
