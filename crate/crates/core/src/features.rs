//! The 22 per-instance features: six computed from the tweet itself (with the
//! author's earlier tweets as history), five profile counters, and eleven
//! aggregates over the author's whole fetched history.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{AccountRecord, Corpus};
use crate::textscan::{tokenize, TokenKind, TokenSequence};

pub const FEATURE_COUNT: usize = 22;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("account `{0}` has no tweets")]
    EmptyHistory(String),
    #[error("feature matrix needs at least one row with a matching label")]
    EmptyMatrix,
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("unknown feature name `{0}`")]
    UnknownFeature(String),
    #[error("feature csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for FeatureError {
    fn from(e: csv::Error) -> Self {
        FeatureError::Csv(e.to_string())
    }
}

/// Canonical feature order. The discriminant is the column index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    ScreenNameCount = 0,
    UppercasePercent,
    LinkCount,
    LinkToWordPercent,
    SameScreenNamePercentTweet,
    TweetSimilarityPercent,
    Followers,
    Friends,
    Favorites,
    Lists,
    Statuses,
    RetweetPercent,
    RetweetedBefore,
    AvgScreenNamesPerTweet,
    TweetFrequency,
    UserUppercasePercent,
    AvgLinksPerTweet,
    UserLinkToWordPercent,
    LinkUseFrequencyPercent,
    UserSameScreenNamePercent,
    TweetLengthStddev,
    UserTweetSimilarityPercent,
}

impl Feature {
    pub const ALL: [Feature; FEATURE_COUNT] = [
        Feature::ScreenNameCount,
        Feature::UppercasePercent,
        Feature::LinkCount,
        Feature::LinkToWordPercent,
        Feature::SameScreenNamePercentTweet,
        Feature::TweetSimilarityPercent,
        Feature::Followers,
        Feature::Friends,
        Feature::Favorites,
        Feature::Lists,
        Feature::Statuses,
        Feature::RetweetPercent,
        Feature::RetweetedBefore,
        Feature::AvgScreenNamesPerTweet,
        Feature::TweetFrequency,
        Feature::UserUppercasePercent,
        Feature::AvgLinksPerTweet,
        Feature::UserLinkToWordPercent,
        Feature::LinkUseFrequencyPercent,
        Feature::UserSameScreenNamePercent,
        Feature::TweetLengthStddev,
        Feature::UserTweetSimilarityPercent,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Feature> {
        Feature::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::ScreenNameCount => "screen_name_count",
            Feature::UppercasePercent => "uppercase_percent",
            Feature::LinkCount => "link_count",
            Feature::LinkToWordPercent => "link_to_word_percent",
            Feature::SameScreenNamePercentTweet => "same_screen_name_percent_tweet",
            Feature::TweetSimilarityPercent => "tweet_similarity_percent",
            Feature::Followers => "followers",
            Feature::Friends => "friends",
            Feature::Favorites => "favorites",
            Feature::Lists => "lists",
            Feature::Statuses => "statuses",
            Feature::RetweetPercent => "retweet_percent",
            Feature::RetweetedBefore => "retweeted_before",
            Feature::AvgScreenNamesPerTweet => "avg_screen_names_per_tweet",
            Feature::TweetFrequency => "tweet_frequency",
            Feature::UserUppercasePercent => "user_uppercase_percent",
            Feature::AvgLinksPerTweet => "avg_links_per_tweet",
            Feature::UserLinkToWordPercent => "user_link_to_word_percent",
            Feature::LinkUseFrequencyPercent => "link_use_frequency_percent",
            Feature::UserSameScreenNamePercent => "user_same_screen_name_percent",
            Feature::TweetLengthStddev => "tweet_length_stddev",
            Feature::UserTweetSimilarityPercent => "user_tweet_similarity_percent",
        }
    }

    /// Features bounded to `[0, 100]`.
    pub fn is_percent(self) -> bool {
        matches!(
            self,
            Feature::UppercasePercent
                | Feature::LinkToWordPercent
                | Feature::SameScreenNamePercentTweet
                | Feature::TweetSimilarityPercent
                | Feature::RetweetPercent
                | Feature::UserUppercasePercent
                | Feature::UserLinkToWordPercent
                | Feature::LinkUseFrequencyPercent
                | Feature::UserSameScreenNamePercent
                | Feature::UserTweetSimilarityPercent
        )
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| FeatureError::UnknownFeature(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn get(&self, f: Feature) -> f64 {
        self.0[f.index()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<Feature> for FeatureVector {
    type Output = f64;

    fn index(&self, f: Feature) -> &f64 {
        &self.0[f.index()]
    }
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Distinct normalized WORD tokens; links, mentions, hashtags and pure
/// punctuation are not content.
pub fn content_words(seq: &TokenSequence) -> HashSet<&str> {
    seq.of_kind(TokenKind::Word)
        .map(|t| t.normalized.as_str())
        .filter(|w| !w.is_empty())
        .collect()
}

fn shared_count(a: &HashSet<&str>, b: &HashSet<&str>) -> usize {
    a.iter().filter(|w| b.contains(*w)).count()
}

/// Mean over the history of the percentage of the tweet's content words that
/// also appear in each history tweet. 0 for an empty history or a tweet with
/// no content words.
pub fn tweet_similarity(tweet: &TokenSequence, history: &[TokenSequence]) -> f64 {
    let content = content_words(tweet);
    let shared: usize = history
        .iter()
        .map(|h| shared_count(&content, &content_words(h)))
        .sum();
    similarity_from_shared(shared, content.len(), history.len())
}

// Σ PSi / m with PSi = 100·shared_i / n, folded into one integer sum so the
// result does not depend on history order.
fn similarity_from_shared(shared_total: usize, content_len: usize, history_len: usize) -> f64 {
    if content_len == 0 || history_len == 0 {
        0.0
    } else {
        100.0 * shared_total as f64 / (content_len * history_len) as f64
    }
}

pub fn uppercase_percent(tweet: &TokenSequence) -> f64 {
    percent(tweet.uppercase_words(), tweet.len())
}

pub fn link_to_word_percent(tweet: &TokenSequence) -> f64 {
    percent(tweet.counts().urls, tweet.len())
}

/// Share of the tweet's mentions whose handle already appeared in the history.
pub fn same_screen_name_percent_tweet(tweet: &TokenSequence, history: &[TokenSequence]) -> f64 {
    let seen: HashSet<&str> = history
        .iter()
        .flat_map(|h| h.of_kind(TokenKind::Mention))
        .map(|t| t.normalized.as_str())
        .collect();
    let mentions: Vec<&str> = tweet
        .of_kind(TokenKind::Mention)
        .map(|t| t.normalized.as_str())
        .collect();
    percent(
        mentions.iter().filter(|m| seen.contains(*m)).count(),
        mentions.len(),
    )
}

/// `RT` (exact case) followed by a mention.
pub fn is_retweet(tweet: &TokenSequence) -> bool {
    match tweet.tokens() {
        [first, second, ..] => first.raw == "RT" && second.kind == TokenKind::Mention,
        _ => false,
    }
}

/// Account-level aggregates, indices 11 through 21 of the feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserFeatures {
    pub retweet_percent: f64,
    pub retweeted_before: f64,
    pub avg_screen_names_per_tweet: f64,
    pub tweet_frequency: f64,
    pub user_uppercase_percent: f64,
    pub avg_links_per_tweet: f64,
    pub user_link_to_word_percent: f64,
    pub link_use_frequency_percent: f64,
    pub user_same_screen_name_percent: f64,
    pub tweet_length_stddev: f64,
    pub user_tweet_similarity_percent: f64,
}

impl UserFeatures {
    pub fn to_array(&self) -> [f64; 11] {
        [
            self.retweet_percent,
            self.retweeted_before,
            self.avg_screen_names_per_tweet,
            self.tweet_frequency,
            self.user_uppercase_percent,
            self.avg_links_per_tweet,
            self.user_link_to_word_percent,
            self.link_use_frequency_percent,
            self.user_same_screen_name_percent,
            self.tweet_length_stddev,
            self.user_tweet_similarity_percent,
        ]
    }
}

/// Tokenized view of one account, with pairwise shared-content counts.
struct AccountScan<'a> {
    account: &'a AccountRecord,
    seqs: Vec<TokenSequence>,
    // shared[i][j] = |content(i) ∩ content(j)|
    shared: Vec<Vec<usize>>,
    content_len: Vec<usize>,
}

impl<'a> AccountScan<'a> {
    fn new(account: &'a AccountRecord) -> Self {
        let seqs: Vec<TokenSequence> = account.tweets.iter().map(|t| tokenize(&t.text)).collect();
        let contents: Vec<HashSet<&str>> = seqs.iter().map(content_words).collect();
        let n = seqs.len();
        let mut shared = vec![vec![0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let s = shared_count(&contents[i], &contents[j]);
                shared[i][j] = s;
                shared[j][i] = s;
            }
        }
        let content_len = contents.iter().map(HashSet::len).collect();
        AccountScan {
            account,
            seqs,
            shared,
            content_len,
        }
    }

    fn causal_similarity(&self, i: usize) -> f64 {
        let total: usize = self.shared[i][..i].iter().sum();
        similarity_from_shared(total, self.content_len[i], i)
    }

    fn leave_one_out_similarity(&self, i: usize) -> f64 {
        let n = self.seqs.len();
        let total: usize = self.shared[i].iter().sum();
        similarity_from_shared(total, self.content_len[i], n - 1)
    }

    fn user_features(&self) -> Result<UserFeatures, FeatureError> {
        let tweets = &self.account.tweets;
        let n = tweets.len();
        if n == 0 {
            return Err(FeatureError::EmptyHistory(self.account.user_id.clone()));
        }
        let retweets = self.seqs.iter().filter(|s| is_retweet(s)).count();
        let mentions: Vec<&str> = self
            .seqs
            .iter()
            .flat_map(|s| s.of_kind(TokenKind::Mention))
            .map(|t| t.normalized.as_str())
            .collect();
        let unique_mentions: HashSet<&str> = mentions.iter().copied().collect();
        let urls: usize = self.seqs.iter().map(|s| s.counts().urls).sum();
        let tweets_with_links = self.seqs.iter().filter(|s| s.counts().urls > 0).count();

        let span_hours =
            (tweets[n - 1].created_at - tweets[0].created_at).num_seconds() as f64 / 3600.0;

        let lengths: Vec<f64> = tweets
            .iter()
            .map(|t| t.text.chars().count() as f64)
            .collect();
        let mean_len = mean(lengths.iter().copied());
        let var_len = mean(lengths.iter().map(|l| (l - mean_len).powi(2)));

        Ok(UserFeatures {
            retweet_percent: percent(retweets, n),
            retweeted_before: if retweets > 0 { 1.0 } else { 0.0 },
            avg_screen_names_per_tweet: mentions.len() as f64 / n as f64,
            tweet_frequency: n as f64 / span_hours.max(1.0),
            user_uppercase_percent: mean(self.seqs.iter().map(uppercase_percent)),
            avg_links_per_tweet: urls as f64 / n as f64,
            user_link_to_word_percent: mean(self.seqs.iter().map(link_to_word_percent)),
            link_use_frequency_percent: percent(tweets_with_links, n),
            user_same_screen_name_percent: percent(unique_mentions.len(), mentions.len()),
            tweet_length_stddev: var_len.sqrt(),
            user_tweet_similarity_percent: mean((0..n).map(|i| self.leave_one_out_similarity(i))),
        })
    }

    fn vector(&self, i: usize, user: &UserFeatures) -> FeatureVector {
        let seq = &self.seqs[i];
        let history = &self.seqs[..i];
        let a = self.account;
        let mut v = [0.0; FEATURE_COUNT];
        v[0] = seq.counts().mentions as f64;
        v[1] = uppercase_percent(seq);
        v[2] = seq.counts().urls as f64;
        v[3] = link_to_word_percent(seq);
        v[4] = same_screen_name_percent_tweet(seq, history);
        v[5] = self.causal_similarity(i);
        v[6] = a.followers as f64;
        v[7] = a.friends as f64;
        v[8] = a.favorites as f64;
        v[9] = a.lists as f64;
        v[10] = a.statuses as f64;
        v[11..].copy_from_slice(&user.to_array());
        FeatureVector(v)
    }
}

pub fn user_features(account: &AccountRecord) -> Result<UserFeatures, FeatureError> {
    AccountScan::new(account).user_features()
}

/// Feature vector for one tweet of an account. The tweet-level history is
/// every tweet before `tweet_index`; the profile block uses the `statuses`
/// counter as the number of tweets.
///
/// Panics if `tweet_index` is out of range.
pub fn extract_feature_vector(
    tweet_index: usize,
    account: &AccountRecord,
) -> Result<FeatureVector, FeatureError> {
    assert!(
        tweet_index < account.tweets.len(),
        "tweet index {tweet_index} out of range for {} tweets",
        account.tweets.len()
    );
    let scan = AccountScan::new(account);
    let user = scan.user_features()?;
    Ok(scan.vector(tweet_index, &user))
}

fn account_vectors(account: &AccountRecord) -> Result<Vec<FeatureVector>, FeatureError> {
    let scan = AccountScan::new(account);
    let user = scan.user_features()?;
    Ok((0..account.tweets.len())
        .map(|i| scan.vector(i, &user))
        .collect())
}

/// Where a matrix row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowOrigin {
    pub account: usize,
    pub tweet: usize,
}

/// Instance rows with binary labels (spam = 1) and cached column statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<FeatureVector>,
    labels: Vec<u8>,
    origins: Vec<RowOrigin>,
    means: [f64; FEATURE_COUNT],
    stddevs: [f64; FEATURE_COUNT],
}

impl FeatureMatrix {
    pub fn new(rows: Vec<FeatureVector>, labels: Vec<u8>) -> Result<Self, FeatureError> {
        let origins = (0..rows.len())
            .map(|i| RowOrigin {
                account: i,
                tweet: 0,
            })
            .collect();
        Self::with_origins(rows, labels, origins)
    }

    pub fn with_origins(
        rows: Vec<FeatureVector>,
        labels: Vec<u8>,
        origins: Vec<RowOrigin>,
    ) -> Result<Self, FeatureError> {
        if rows.len() != labels.len() || rows.len() != origins.len() {
            return Err(FeatureError::LengthMismatch {
                rows: rows.len(),
                labels: labels.len(),
            });
        }
        if rows.is_empty() {
            return Err(FeatureError::EmptyMatrix);
        }
        let n = rows.len() as f64;
        let mut means = [0.0; FEATURE_COUNT];
        let mut stddevs = [0.0; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            let m = rows.iter().map(|r| r.0[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r.0[j] - m).powi(2)).sum::<f64>() / n;
            means[j] = m;
            stddevs[j] = var.sqrt();
        }
        Ok(FeatureMatrix {
            rows,
            labels,
            origins,
            means,
            stddevs,
        })
    }

    pub fn rows(&self) -> &[FeatureVector] {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn origins(&self) -> &[RowOrigin] {
        &self.origins
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.0[j]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..FEATURE_COUNT).map(|j| self.column(j)).collect()
    }

    pub fn column_means(&self) -> &[f64; FEATURE_COUNT] {
        &self.means
    }

    /// Population standard deviations.
    pub fn column_stddevs(&self) -> &[f64; FEATURE_COUNT] {
        &self.stddevs
    }

    /// Sub-matrix of the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<FeatureMatrix, FeatureError> {
        FeatureMatrix::with_origins(
            indices.iter().map(|&i| self.rows[i]).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
            indices.iter().map(|&i| self.origins[i]).collect(),
        )
    }

    /// Header of canonical names plus `label`; six decimals per value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), FeatureError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = Feature::ALL.iter().map(|f| f.name()).collect();
        header.push("label");
        w.write_record(&header)?;
        let mut record: Vec<String> = Vec::with_capacity(FEATURE_COUNT + 1);
        for (row, label) in self.rows.iter().zip(&self.labels) {
            record.clear();
            record.extend(row.0.iter().map(|v| format!("{v:.6}")));
            record.push(label.to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory csv");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    /// Reads the format written by [`FeatureMatrix::write_csv`].
    pub fn read_csv<R: Read>(input: R) -> Result<FeatureMatrix, FeatureError> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let expected: Vec<&str> = Feature::ALL
            .iter()
            .map(|f| f.name())
            .chain(std::iter::once("label"))
            .collect();
        if header.iter().ne(expected.iter().copied()) {
            return Err(FeatureError::Csv("unexpected header".into()));
        }
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let mut v = [0.0; FEATURE_COUNT];
            for (j, slot) in v.iter_mut().enumerate() {
                *slot = rec[j].parse().map_err(|_| {
                    FeatureError::Csv(format!("row {}: bad value `{}`", line + 2, &rec[j]))
                })?;
            }
            let label = match &rec[FEATURE_COUNT] {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(FeatureError::Csv(format!(
                        "row {}: bad label `{other}`",
                        line + 2
                    )))
                }
            };
            rows.push(FeatureVector(v));
            labels.push(label);
        }
        FeatureMatrix::new(rows, labels)
    }
}

/// One row per (account, tweet), in account order then tweet order.
pub fn extract_matrix(corpus: &Corpus) -> Result<FeatureMatrix, FeatureError> {
    let per_account: Vec<Vec<FeatureVector>> = corpus
        .accounts()
        .par_iter()
        .map(account_vectors)
        .collect::<Result<_, _>>()?;
    let n = corpus.instance_count();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut origins = Vec::with_capacity(n);
    for (a, (account, vectors)) in corpus.accounts().iter().zip(per_account).enumerate() {
        let target = account.label.target();
        for (t, v) in vectors.into_iter().enumerate() {
            rows.push(v);
            labels.push(target);
            origins.push(RowOrigin {
                account: a,
                tweet: t,
            });
        }
    }
    FeatureMatrix::with_origins(rows, labels, origins)
}
