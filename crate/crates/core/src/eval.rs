//! Train/test split, confusion counts, precision/recall/F1/accuracy and the
//! four-model comparison report.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ann::{self, TrainConfig};
use crate::baselines::{self, BaselineConfig, BaselineKind};
use crate::corpus::Corpus;
use crate::correlate::{reduce_matrix, Grouping};
use crate::features::{extract_matrix, FeatureMatrix};
use crate::pipeline::{prepare, ModelFile, SplitSpec};
use crate::Error;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("need at least 2 rows with a non-empty train and test side, got {0} rows")]
    TooFewSamples(usize),
    #[error("train fraction must be strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("{predicted} predictions but {actual} labels")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("no predictions to score")]
    EmptyCounts,
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
}

/// Seeded shuffle of row indices; the first `⌊n·fraction⌋` rows train.
pub fn split_indices(
    n: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(EvalError::InvalidFraction(train_fraction));
    }
    let n_train = (n as f64 * train_fraction).floor() as usize;
    if n < 2 || n_train == 0 || n_train == n {
        return Err(EvalError::TooFewSamples(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

/// Row-level (tweet instance) split.
pub fn split(matrix: &FeatureMatrix, train_fraction: f64, seed: u64) -> Result<Split, Error> {
    let (train, test) = split_indices(matrix.len(), train_fraction, seed)?;
    Ok(Split {
        train: matrix.select(&train)?,
        test: matrix.select(&test)?,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Spam (1) is the positive class.
pub fn confusion(predicted: &[u8], actual: &[u8]) -> Result<ConfusionCounts, EvalError> {
    if predicted.len() != actual.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(EvalError::EmptyCounts);
    }
    let mut c = ConfusionCounts::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p == 1, a == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// All values are percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

fn ratio_percent(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// Precision `tp/(tp+fp)`, recall `tp/(tp+fn)`, their harmonic mean, and
/// accuracy. Zero denominators give 0.
pub fn metrics(c: &ConfusionCounts) -> Result<Metrics, EvalError> {
    let total = c.total();
    if total == 0 {
        return Err(EvalError::EmptyCounts);
    }
    let precision = ratio_percent(c.tp, c.tp + c.fp);
    let recall = ratio_percent(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Metrics {
        precision,
        recall,
        f1,
        accuracy: ratio_percent(c.tp + c.tn, total),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub metrics: Metrics,
    pub confusion: ConfusionCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    /// Unknown when the rows were read from a feature CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accounts: Option<usize>,
    pub instances: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub seed: u64,
    pub train_frac: f64,
    pub input_dim: usize,
    pub grouping_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub meta: ReportMeta,
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    pub fn row(&self, model: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    /// Aligned plain-text table with a short metadata header.
    pub fn render(&self) -> String {
        let m = &self.meta;
        let mut out = String::new();
        writeln!(
            out,
            "accounts={} instances={} train={} test={} seed={} train_frac={} inputs={}",
            m.accounts
                .map_or_else(|| "?".to_string(), |n| n.to_string()),
            m.instances,
            m.train_rows,
            m.test_rows,
            m.seed,
            m.train_frac,
            m.input_dim
        )
        .unwrap();
        writeln!(out, "grouping={}", m.grouping_hash).unwrap();
        let width = self
            .rows
            .iter()
            .map(|r| r.model.len())
            .chain(std::iter::once("Model".len()))
            .max()
            .unwrap_or(5);
        writeln!(
            out,
            "{:<width$}  {:>9}  {:>7}  {:>8}  {:>8}",
            "Model", "Precision", "Recall", "F1 Score", "Accuracy"
        )
        .unwrap();
        for r in &self.rows {
            let x = &r.metrics;
            writeln!(
                out,
                "{:<width$}  {:>9.2}  {:>7.2}  {:>8.2}  {:>8.2}",
                r.model, x.precision, x.recall, x.f1, x.accuracy
            )
            .unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub train_frac: f64,
    pub ann: TrainConfig,
    pub baselines: BaselineConfig,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            train_frac: 0.8,
            ann: TrainConfig::default(),
            baselines: BaselineConfig::default(),
        }
    }
}

pub const ANN_ROW: &str = "ANN";

/// Extracts features, splits once, and fits the network plus the three
/// baselines on identical train rows, scoring all of them on identical test
/// rows. `seed` drives the split and the baselines; the network uses
/// `config.ann.seed`.
pub fn compare(
    corpus: &Corpus,
    grouping: &Grouping,
    config: &CompareConfig,
    seed: u64,
) -> Result<ReportTable, Error> {
    let matrix = extract_matrix(corpus)?;
    compare_matrix(&matrix, Some(corpus.len()), grouping, config, seed)
}

pub fn compare_matrix(
    matrix: &FeatureMatrix,
    accounts: Option<usize>,
    grouping: &Grouping,
    config: &CompareConfig,
    seed: u64,
) -> Result<ReportTable, Error> {
    let spec = SplitSpec {
        seed,
        train_frac: config.train_frac,
    };
    let data = prepare(matrix, grouping, &spec)?;
    let train_labels = data.split.train.labels();
    let test_labels = data.split.test.labels();

    let score = |model: String, predicted: &[u8]| -> Result<ReportRow, Error> {
        let confusion = confusion(predicted, test_labels)?;
        Ok(ReportRow {
            model,
            metrics: metrics(&confusion)?,
            confusion,
        })
    };

    let (ann_row, baseline_rows) = rayon::join(
        || -> Result<ReportRow, Error> {
            let model = ann::train(&data.train_inputs, train_labels, &config.ann)?;
            let predicted = data
                .test_inputs
                .par_iter()
                .map(|x| ann::predict(&model, x).map(|p| p.label))
                .collect::<Result<Vec<_>, _>>()?;
            score(ANN_ROW.to_string(), &predicted)
        },
        || -> Result<Vec<ReportRow>, Error> {
            BaselineKind::ALL
                .par_iter()
                .map(|&kind| {
                    let model = baselines::fit_baseline(
                        kind,
                        &data.train_inputs,
                        train_labels,
                        seed,
                        &config.baselines,
                    )?;
                    let predicted = baselines::predict_all(&model, &data.test_inputs)?;
                    score(kind.display_name().to_string(), &predicted)
                })
                .collect()
        },
    );

    let mut rows = vec![ann_row?];
    rows.extend(baseline_rows?);
    Ok(ReportTable {
        meta: ReportMeta {
            accounts,
            instances: matrix.len(),
            train_rows: data.split.train.len(),
            test_rows: data.split.test.len(),
            seed,
            train_frac: config.train_frac,
            input_dim: grouping.len(),
            grouping_hash: grouping.config_hash(),
        },
        rows,
    })
}

/// Scores a saved model on the test side of the split recorded in the file,
/// reproducing the rows it was not trained on.
pub fn evaluate_model_file(
    file: &ModelFile,
    matrix: &FeatureMatrix,
    accounts: Option<usize>,
) -> Result<ReportTable, Error> {
    let grouping = file.validate()?;
    let parts = split(matrix, file.split.train_frac, file.split.seed)?;
    let inputs = reduce_matrix(&parts.test, &grouping, &file.scaler)?;
    let predicted: Vec<u8> = file
        .predict_batch(&inputs)?
        .into_iter()
        .map(|o| o.label)
        .collect();
    let confusion = confusion(&predicted, parts.test.labels())?;
    Ok(ReportTable {
        meta: ReportMeta {
            accounts,
            instances: matrix.len(),
            train_rows: parts.train.len(),
            test_rows: parts.test.len(),
            seed: file.split.seed,
            train_frac: file.split.train_frac,
            input_dim: grouping.len(),
            grouping_hash: file.grouping_hash.clone(),
        },
        rows: vec![ReportRow {
            model: file.kind().display_name().to_string(),
            metrics: metrics(&confusion)?,
            confusion,
        }],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureVector, FEATURE_COUNT};
    use rand::Rng;

    fn tiny_matrix(n: usize) -> FeatureMatrix {
        let rows = (0..n)
            .map(|i| FeatureVector([i as f64; FEATURE_COUNT]))
            .collect();
        FeatureMatrix::new(rows, (0..n).map(|i| (i % 2) as u8).collect()).unwrap()
    }

    #[test]
    fn split_sizes_and_partition() {
        let m = tiny_matrix(10);
        let s = split(&m, 0.8, 3).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (8, 2));
        let mut all: Vec<f64> = s
            .train
            .rows()
            .iter()
            .chain(s.test.rows())
            .map(|r| r.0[0])
            .collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..10).map(|i| i as f64).collect::<Vec<_>>());
        let again = split(&m, 0.8, 3).unwrap();
        assert_eq!(again.train, s.train);
        assert_eq!(again.test, s.test);
    }

    #[test]
    fn split_errors() {
        assert_eq!(split_indices(1, 0.8, 0), Err(EvalError::TooFewSamples(1)));
        assert_eq!(
            split_indices(10, 1.0, 0),
            Err(EvalError::InvalidFraction(1.0))
        );
        assert_eq!(
            split_indices(10, 0.0, 0),
            Err(EvalError::InvalidFraction(0.0))
        );
        assert_eq!(split_indices(2, 0.4, 0), Err(EvalError::TooFewSamples(2)));
    }

    #[test]
    fn confusion_examples() {
        let c = confusion(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 2,
                fp: 0,
                fn_: 0,
                tn: 1
            }
        );
        let c = confusion(&[1; 7], &[0; 7]).unwrap();
        assert_eq!(c.fp, 7);
        assert!(matches!(
            confusion(&[1], &[1, 0]),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert_eq!(confusion(&[], &[]), Err(EvalError::EmptyCounts));
    }

    #[test]
    fn confusion_matches_brute_force_tally() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p: Vec<u8> = (0..1000).map(|_| rng.gen_range(0..=1u8)).collect();
        let a: Vec<u8> = (0..1000).map(|_| rng.gen_range(0..=1u8)).collect();
        let c = confusion(&p, &a).unwrap();
        let mut tally = [[0u64; 2]; 2];
        for i in 0..1000 {
            tally[p[i] as usize][a[i] as usize] += 1;
        }
        assert_eq!(c.tp, tally[1][1]);
        assert_eq!(c.fp, tally[1][0]);
        assert_eq!(c.fn_, tally[0][1]);
        assert_eq!(c.tn, tally[0][0]);
    }

    #[test]
    fn metric_examples() {
        let m = metrics(&ConfusionCounts {
            tp: 3,
            fp: 1,
            fn_: 2,
            tn: 4,
        })
        .unwrap();
        assert_eq!(m.precision, 75.0);
        assert_eq!(m.recall, 60.0);
        assert!((m.f1 - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.accuracy, 70.0);

        let m = metrics(&ConfusionCounts {
            tp: 5,
            fp: 0,
            fn_: 0,
            tn: 5,
        })
        .unwrap();
        assert_eq!(
            (m.precision, m.recall, m.f1, m.accuracy),
            (100.0, 100.0, 100.0, 100.0)
        );

        let m = metrics(&ConfusionCounts {
            tp: 0,
            fp: 0,
            fn_: 3,
            tn: 1,
        })
        .unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert_eq!(
            metrics(&ConfusionCounts::default()),
            Err(EvalError::EmptyCounts)
        );
    }

    #[test]
    fn harmonic_mean_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let c = ConfusionCounts {
                tp: rng.gen_range(0..50),
                fp: rng.gen_range(0..50),
                fn_: rng.gen_range(0..50),
                tn: rng.gen_range(0..50),
            };
            let Ok(m) = metrics(&c) else { continue };
            if m.precision > 0.0 && m.recall > 0.0 {
                assert!(m.f1 <= m.precision.max(m.recall) + 1e-12);
                assert!(m.f1 >= m.precision.min(m.recall) - 1e-12);
            }
            assert_eq!(m.accuracy == 100.0, c.fp == 0 && c.fn_ == 0);
        }
    }

    #[test]
    fn render_is_aligned() {
        let row = |name: &str| ReportRow {
            model: name.into(),
            metrics: Metrics {
                precision: 98.891,
                recall: 95.57,
                f1: 97.2,
                accuracy: 97.57,
            },
            confusion: ConfusionCounts::default(),
        };
        let t = ReportTable {
            meta: ReportMeta {
                accounts: Some(1),
                instances: 2,
                train_rows: 1,
                test_rows: 1,
                seed: 0,
                train_frac: 0.8,
                input_dim: 11,
                grouping_hash: "h".into(),
            },
            rows: vec![row("ANN"), row("Naive Bayes")],
        };
        let text = t.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[2].len(), lines[3].len());
        assert_eq!(lines[3].len(), lines[4].len());
        assert!(lines[3].contains("98.89"));
        let back: ReportTable = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn saved_model_reproduces_comparison_row() {
        use crate::pipeline::{fit_model_file, FitOptions, ModelKind};
        let corpus = crate::synth::generate_corpus(12, 12, 3);
        let matrix = extract_matrix(&corpus).unwrap();
        let grouping = Grouping::default_config();
        let config = CompareConfig {
            ann: TrainConfig {
                epochs: 30,
                ..TrainConfig::default()
            },
            ..CompareConfig::default()
        };
        let table = compare_matrix(&matrix, None, &grouping, &config, 9).unwrap();
        for kind in [ModelKind::Ann, ModelKind::Knn, ModelKind::Lsvm] {
            let file = fit_model_file(
                &matrix,
                &grouping,
                &FitOptions {
                    kind,
                    split: SplitSpec {
                        seed: 9,
                        train_frac: config.train_frac,
                    },
                    ann: &config.ann,
                    baselines: &config.baselines,
                },
            )
            .unwrap();
            let single = evaluate_model_file(&file, &matrix, None).unwrap();
            let expected = table.row(kind.display_name()).unwrap();
            assert_eq!(&single.rows[0], expected);
            assert_eq!(single.meta, table.meta);
        }
    }
}
