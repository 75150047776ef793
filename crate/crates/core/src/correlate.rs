//! Pearson correlation over feature columns, grouping of correlated
//! features, and product combination of each group into one input.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::{Feature, FeatureError, FeatureMatrix, FeatureVector, FEATURE_COUNT};

#[derive(Debug, Error, PartialEq)]
pub enum CorrelateError {
    #[error("sample lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("expected {expected} values, got {got}")]
    BoundsMismatch { expected: usize, got: usize },
    #[error("invalid grouping: {0}")]
    InvalidGrouping(String),
}

impl From<FeatureError> for CorrelateError {
    fn from(e: FeatureError) -> Self {
        CorrelateError::InvalidGrouping(e.to_string())
    }
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// Pearson coefficient `cov(x, y) / (σx·σy)`.
///
/// `Ok(None)` when either sample has zero variance and the coefficient is
/// undefined.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>, CorrelateError> {
    if x.len() != y.len() {
        return Err(CorrelateError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(CorrelateError::TooFewSamples(x.len()));
    }
    if is_constant(x) || is_constant(y) {
        return Ok(None);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

/// Square matrix of pairwise coefficients. Zero-variance columns are
/// flagged; their row and column are 0, diagonal included.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    dim: usize,
    values: Vec<f64>,
    flagged: Vec<bool>,
}

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }

    /// True for zero-variance columns.
    pub fn is_flagged(&self, i: usize) -> bool {
        self.flagged[i]
    }

    pub fn flagged(&self) -> &[bool] {
        &self.flagged
    }

    /// CSV with a `feature` header column; six decimals.
    pub fn to_csv(&self, names: &[&str]) -> String {
        let mut out = String::from("feature");
        for n in names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, name) in names.iter().enumerate().take(self.dim) {
            out.push_str(name);
            for j in 0..self.dim {
                write!(out, ",{:.6}", self.get(i, j)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Correlates every pair of columns. Only the upper triangle is computed so
/// the result is exactly symmetric.
pub fn correlation_matrix_of(columns: &[Vec<f64>]) -> Result<CorrelationMatrix, CorrelateError> {
    let dim = columns.len();
    let rows = columns.first().map_or(0, Vec::len);
    if rows < 2 {
        return Err(CorrelateError::TooFewSamples(rows));
    }
    if let Some(c) = columns.iter().find(|c| c.len() != rows) {
        return Err(CorrelateError::LengthMismatch(rows, c.len()));
    }
    let flagged: Vec<bool> = columns.iter().map(|c| is_constant(c)).collect();
    let mut values = vec![0.0; dim * dim];
    for i in 0..dim {
        if flagged[i] {
            continue;
        }
        values[i * dim + i] = 1.0;
        for j in (i + 1)..dim {
            let r = pearson(&columns[i], &columns[j])?.unwrap_or(0.0);
            values[i * dim + j] = r;
            values[j * dim + i] = r;
        }
    }
    Ok(CorrelationMatrix {
        dim,
        values,
        flagged,
    })
}

pub fn correlation_matrix(matrix: &FeatureMatrix) -> Result<CorrelationMatrix, CorrelateError> {
    correlation_matrix_of(&matrix.columns())
}

/// A partition of feature indices into ordered, disjoint groups. Members are
/// sorted ascending and groups are ordered by their smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grouping {
    dim: usize,
    groups: Vec<Vec<usize>>,
}

impl Grouping {
    pub fn new(mut groups: Vec<Vec<usize>>, dim: usize) -> Result<Self, CorrelateError> {
        let mut seen = vec![false; dim];
        for g in &mut groups {
            if g.is_empty() {
                return Err(CorrelateError::InvalidGrouping("empty group".into()));
            }
            g.sort_unstable();
            for &i in g.iter() {
                if i >= dim {
                    return Err(CorrelateError::InvalidGrouping(format!(
                        "index {i} out of range for {dim} features"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(CorrelateError::InvalidGrouping(format!(
                        "feature {i} appears in more than one group"
                    )));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(CorrelateError::InvalidGrouping(format!(
                "feature {missing} is not in any group"
            )));
        }
        groups.sort_unstable_by_key(|g| g[0]);
        Ok(Grouping { dim, groups })
    }

    pub fn singletons(dim: usize) -> Self {
        Grouping {
            dim,
            groups: (0..dim).map(|i| vec![i]).collect(),
        }
    }

    /// Eleven hand-assigned groups over the canonical features:
    /// mention counts, uppercase, link volume, link/word, screen-name reuse,
    /// similarity, followers/friends, favorites/lists, volume/frequency,
    /// retweet behaviour and length spread.
    pub fn default_config() -> Self {
        use Feature::*;
        let groups: [&[Feature]; 11] = [
            &[UppercasePercent, UserUppercasePercent],
            &[LinkToWordPercent, UserLinkToWordPercent],
            &[LinkCount, AvgLinksPerTweet, LinkUseFrequencyPercent],
            &[SameScreenNamePercentTweet, UserSameScreenNamePercent],
            &[TweetSimilarityPercent, UserTweetSimilarityPercent],
            &[ScreenNameCount, AvgScreenNamesPerTweet],
            &[RetweetPercent, RetweetedBefore],
            &[Followers, Friends],
            &[Statuses, TweetFrequency],
            &[Favorites, Lists],
            &[TweetLengthStddev],
        ];
        Grouping::new(
            groups
                .iter()
                .map(|g| g.iter().map(|f| f.index()).collect())
                .collect(),
            FEATURE_COUNT,
        )
        .expect("default grouping is a partition")
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Groups as canonical feature names, the on-disk config form.
    pub fn to_names(&self) -> Vec<Vec<String>> {
        self.groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|&i| {
                        Feature::from_index(i)
                            .map(|f| f.name().to_string())
                            .unwrap_or_else(|| i.to_string())
                    })
                    .collect()
            })
            .collect()
    }

    pub fn from_names(names: &[Vec<String>]) -> Result<Self, CorrelateError> {
        let groups = names
            .iter()
            .map(|g| {
                g.iter()
                    .map(|n| n.parse::<Feature>().map(Feature::index))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Grouping::new(groups, FEATURE_COUNT)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_names()).expect("names serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, CorrelateError> {
        let names: Vec<Vec<String>> = serde_json::from_str(text)
            .map_err(|e| CorrelateError::InvalidGrouping(e.to_string()))?;
        Grouping::from_names(&names)
    }

    /// Hex SHA-256 of the compact name-list JSON.
    pub fn config_hash(&self) -> String {
        let compact = serde_json::to_string(&self.to_names()).expect("names serialize");
        hex::encode(Sha256::digest(compact.as_bytes()))
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller root wins, keeps the result independent of merge order
        if ra < rb {
            self.parent[rb] = ra;
        } else if rb < ra {
            self.parent[ra] = rb;
        }
    }
}

/// Transitively merges every pair with `|ρ| ≥ threshold`. Flagged
/// (zero-variance) columns always stay singletons.
pub fn group_features(cm: &CorrelationMatrix, threshold: f64) -> Grouping {
    let n = cm.dim();
    let mut ds = DisjointSet::new(n);
    for i in 0..n {
        if cm.is_flagged(i) {
            continue;
        }
        for j in (i + 1)..n {
            if !cm.is_flagged(j) && cm.get(i, j).abs() >= threshold {
                ds.union(i, j);
            }
        }
    }
    let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = ds.find(i);
        by_root[r].push(i);
    }
    let groups = by_root.into_iter().filter(|g| !g.is_empty()).collect();
    Grouping::new(groups, n).expect("union-find output is a partition")
}

/// Per-feature min/max learned from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(matrix: &FeatureMatrix) -> Self {
        let mut min = vec![f64::INFINITY; FEATURE_COUNT];
        let mut max = vec![f64::NEG_INFINITY; FEATURE_COUNT];
        for row in matrix.rows() {
            for (j, &v) in row.0.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        MinMaxScaler { min, max }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Maps into `[0, 1]`; constant features map to 0.5 and values outside
    /// the training range saturate.
    pub fn scale(&self, values: &[f64]) -> Result<Vec<f64>, CorrelateError> {
        if values.len() != self.dim() || self.max.len() != self.dim() {
            return Err(CorrelateError::BoundsMismatch {
                expected: self.dim(),
                got: values.len(),
            });
        }
        Ok(values
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            })
            .collect())
    }
}

/// Multiplies already-scaled values group by group.
pub fn combine_scaled(scaled: &[f64], grouping: &Grouping) -> Result<Vec<f64>, CorrelateError> {
    if scaled.len() != grouping.dim() {
        return Err(CorrelateError::BoundsMismatch {
            expected: grouping.dim(),
            got: scaled.len(),
        });
    }
    Ok(grouping
        .groups()
        .iter()
        .map(|g| g.iter().map(|&i| scaled[i]).product())
        .collect())
}

/// Scales a feature vector and replaces each group by the product of its
/// members. Output length equals the number of groups.
pub fn combine(
    vector: &FeatureVector,
    grouping: &Grouping,
    scaler: &MinMaxScaler,
) -> Result<Vec<f64>, CorrelateError> {
    combine_scaled(&scaler.scale(vector.as_slice())?, grouping)
}

/// Reduced input rows for a whole matrix.
pub fn reduce_matrix(
    matrix: &FeatureMatrix,
    grouping: &Grouping,
    scaler: &MinMaxScaler,
) -> Result<Vec<Vec<f64>>, CorrelateError> {
    matrix
        .rows()
        .iter()
        .map(|r| combine(r, grouping, scaler))
        .collect()
}
