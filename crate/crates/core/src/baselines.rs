//! Comparison classifiers: k-nearest neighbours, Gaussian naive Bayes and a
//! linear SVM fitted by stochastic sub-gradient descent on the hinge loss.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ann::Standardizer;

pub const GNB_VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("expected input of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{inputs} inputs but {labels} labels")]
    LabelCountMismatch { inputs: usize, labels: usize },
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("invalid baseline config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Knn,
    Gnb,
    Lsvm,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Lsvm, BaselineKind::Gnb, BaselineKind::Knn];

    pub fn display_name(self) -> &'static str {
        match self {
            BaselineKind::Knn => "KNN",
            BaselineKind::Gnb => "Naive Bayes",
            BaselineKind::Lsvm => "Linear SVM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    /// Neighbours for KNN; must be odd.
    pub k: usize,
    /// L2 strength for the SVM.
    pub lambda: f64,
    pub svm_epochs: usize,
    /// Initial SVM step size; decays as `eta0 / (1 + eta0·λ·t)`.
    pub svm_eta0: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            k: 5,
            lambda: 1e-3,
            svm_epochs: 200,
            svm_eta0: 0.1,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if self.k == 0 || self.k.is_multiple_of(2) {
            return Err(BaselineError::InvalidConfig(format!(
                "k must be odd and at least 1, got {}",
                self.k
            )));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(BaselineError::InvalidConfig(
                "lambda must be positive".into(),
            ));
        }
        if self.svm_epochs == 0 {
            return Err(BaselineError::InvalidConfig(
                "svm_epochs must be positive".into(),
            ));
        }
        if !(self.svm_eta0.is_finite() && self.svm_eta0 > 0.0) {
            return Err(BaselineError::InvalidConfig(
                "svm_eta0 must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Stored, standardized training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub standardizer: Standardizer,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnbModel {
    /// Indexed by class: `[ham, spam]`.
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsvmModel {
    pub standardizer: Standardizer,
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaselineModel {
    Knn(KnnModel),
    Gnb(GnbModel),
    Lsvm(LsvmModel),
}

impl BaselineModel {
    pub fn kind(&self) -> BaselineKind {
        match self {
            BaselineModel::Knn(_) => BaselineKind::Knn,
            BaselineModel::Gnb(_) => BaselineKind::Gnb,
            BaselineModel::Lsvm(_) => BaselineKind::Lsvm,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            BaselineModel::Knn(m) => m.standardizer.mean.len(),
            BaselineModel::Gnb(m) => m.means[0].len(),
            BaselineModel::Lsvm(m) => m.weights.len(),
        }
    }
}

fn check_training(inputs: &[Vec<f64>], labels: &[u8]) -> Result<usize, BaselineError> {
    if inputs.is_empty() {
        return Err(BaselineError::EmptyTrainingSet);
    }
    if inputs.len() != labels.len() {
        return Err(BaselineError::LabelCountMismatch {
            inputs: inputs.len(),
            labels: labels.len(),
        });
    }
    if let Some(&l) = labels.iter().find(|&&l| l > 1) {
        return Err(BaselineError::InvalidLabel(l));
    }
    let dim = inputs[0].len();
    if let Some(x) = inputs.iter().find(|x| x.len() != dim) {
        return Err(BaselineError::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    Ok(dim)
}

fn require_both_classes(labels: &[u8]) -> Result<(), BaselineError> {
    if labels.iter().all(|&l| l == labels[0]) {
        Err(BaselineError::DegenerateLabels)
    } else {
        Ok(())
    }
}

pub fn fit_baseline(
    kind: BaselineKind,
    inputs: &[Vec<f64>],
    labels: &[u8],
    seed: u64,
    config: &BaselineConfig,
) -> Result<BaselineModel, BaselineError> {
    config.validate()?;
    let dim = check_training(inputs, labels)?;
    match kind {
        BaselineKind::Knn => {
            let standardizer = Standardizer::fit(inputs);
            Ok(BaselineModel::Knn(KnnModel {
                k: config.k,
                points: inputs.iter().map(|x| standardizer.apply(x)).collect(),
                labels: labels.to_vec(),
                standardizer,
            }))
        }
        BaselineKind::Gnb => {
            require_both_classes(labels)?;
            Ok(BaselineModel::Gnb(fit_gnb(inputs, labels, dim)))
        }
        BaselineKind::Lsvm => {
            require_both_classes(labels)?;
            Ok(BaselineModel::Lsvm(fit_lsvm(inputs, labels, seed, config)))
        }
    }
}

fn fit_gnb(inputs: &[Vec<f64>], labels: &[u8], dim: usize) -> GnbModel {
    let mut counts = [0usize; 2];
    let mut means = [vec![0.0; dim], vec![0.0; dim]];
    for (x, &l) in inputs.iter().zip(labels) {
        let c = usize::from(l);
        counts[c] += 1;
        for (m, v) in means[c].iter_mut().zip(x) {
            *m += v;
        }
    }
    for c in 0..2 {
        means[c].iter_mut().for_each(|m| *m /= counts[c] as f64);
    }
    let mut variances = [vec![0.0; dim], vec![0.0; dim]];
    for (x, &l) in inputs.iter().zip(labels) {
        let c = usize::from(l);
        for j in 0..dim {
            variances[c][j] += (x[j] - means[c][j]).powi(2);
        }
    }
    for c in 0..2 {
        variances[c]
            .iter_mut()
            .for_each(|v| *v = (*v / counts[c] as f64).max(GNB_VARIANCE_FLOOR));
    }
    let n = inputs.len() as f64;
    GnbModel {
        priors: [counts[0] as f64 / n, counts[1] as f64 / n],
        means,
        variances,
    }
}

/// Regularized hinge objective `λ/2·|w|² + mean(max(0, 1 − y(w·x + b)))`,
/// with `y ∈ {−1, +1}`, evaluated in the model's standardized space.
pub fn svm_objective(
    weights: &[f64],
    bias: f64,
    standardized: &[Vec<f64>],
    labels: &[u8],
    lambda: f64,
) -> f64 {
    let reg = 0.5 * lambda * weights.iter().map(|w| w * w).sum::<f64>();
    let hinge: f64 = standardized
        .iter()
        .zip(labels)
        .map(|(x, &l)| {
            let y = if l == 1 { 1.0 } else { -1.0 };
            (1.0 - y * (dot(weights, x) + bias)).max(0.0)
        })
        .sum();
    reg + hinge / standardized.len() as f64
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn fit_lsvm(inputs: &[Vec<f64>], labels: &[u8], seed: u64, config: &BaselineConfig) -> LsvmModel {
    let standardizer = Standardizer::fit(inputs);
    let data: Vec<Vec<f64>> = inputs.iter().map(|x| standardizer.apply(x)).collect();
    let dim = standardizer.mean.len();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let (lambda, eta0) = (config.lambda, config.svm_eta0);
    let mut t = 0u64;
    for _ in 0..config.svm_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = eta0 / (1.0 + eta0 * lambda * t as f64);
            t += 1;
            let y = if labels[i] == 1 { 1.0 } else { -1.0 };
            let x = &data[i];
            let margin = y * (dot(&w, x) + b);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|wj| *wj *= shrink);
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += eta * y * xj;
                }
                b += eta * y;
            }
        }
    }
    LsvmModel {
        standardizer,
        weights: w,
        bias: b,
    }
}

fn knn_predict(m: &KnnModel, x: &[f64]) -> u8 {
    let q = m.standardizer.apply(x);
    let mut dist: Vec<(f64, usize)> = m
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            (
                p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(),
                i,
            )
        })
        .collect();
    let k = m.k.min(dist.len());
    // equal distances resolve to the lower row index
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, by_distance);
    }
    let spam = dist[..k].iter().filter(|(_, i)| m.labels[*i] == 1).count();
    u8::from(2 * spam >= k)
}

fn log_gaussian(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mean).powi(2) / var)
}

/// Log joint score per class, `[ham, spam]`.
pub fn gnb_log_scores(m: &GnbModel, x: &[f64]) -> [f64; 2] {
    std::array::from_fn(|c| {
        m.priors[c].ln()
            + x.iter()
                .zip(m.means[c].iter().zip(&m.variances[c]))
                .map(|(&v, (&mu, &var))| log_gaussian(v, mu, var))
                .sum::<f64>()
    })
}

pub fn predict_baseline(model: &BaselineModel, input: &[f64]) -> Result<u8, BaselineError> {
    let expected = model.input_dim();
    if input.len() != expected {
        return Err(BaselineError::DimensionMismatch {
            expected,
            got: input.len(),
        });
    }
    Ok(match model {
        BaselineModel::Knn(m) => knn_predict(m, input),
        BaselineModel::Gnb(m) => {
            let [ham, spam] = gnb_log_scores(m, input);
            // ties (and NaN-free equal scores) go to spam
            u8::from(spam.partial_cmp(&ham) != Some(Ordering::Less))
        }
        BaselineModel::Lsvm(m) => {
            let s = dot(&m.weights, &m.standardizer.apply(input)) + m.bias;
            u8::from(s >= 0.0)
        }
    })
}

/// Predicts every row, in parallel; output order matches `inputs`.
pub fn predict_all(model: &BaselineModel, inputs: &[Vec<f64>]) -> Result<Vec<u8>, BaselineError> {
    inputs
        .par_iter()
        .map(|x| predict_baseline(model, x))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn clusters(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let l = (i % 2) as u8;
            let c = if l == 1 { 5.0 } else { -5.0 };
            xs.push(vec![c + rng.gen_range(-1.0..1.0)]);
            ys.push(l);
        }
        (xs, ys)
    }

    fn cfg() -> BaselineConfig {
        BaselineConfig::default()
    }

    #[test]
    fn gnb_means_match_sample_means() {
        let (xs, ys) = clusters(40, 1);
        let BaselineModel::Gnb(m) = fit_baseline(BaselineKind::Gnb, &xs, &ys, 0, &cfg()).unwrap()
        else {
            unreachable!()
        };
        for c in 0..2u8 {
            let vals: Vec<f64> = xs
                .iter()
                .zip(&ys)
                .filter(|(_, &y)| y == c)
                .map(|(x, _)| x[0])
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!((m.means[usize::from(c)][0] - mean).abs() < 1e-9);
        }
        assert_eq!(m.priors, [0.5, 0.5]);
    }

    #[test]
    fn gnb_query_at_class_mean() {
        let xs = vec![vec![0.0], vec![0.001], vec![10.0], vec![10.002]];
        let ys = vec![0, 0, 1, 1];
        let model = fit_baseline(BaselineKind::Gnb, &xs, &ys, 0, &cfg()).unwrap();
        assert_eq!(predict_baseline(&model, &[0.0005]).unwrap(), 0);
        assert_eq!(predict_baseline(&model, &[10.001]).unwrap(), 1);
    }

    #[test]
    fn gnb_variance_floor() {
        let xs = vec![vec![1.0], vec![1.0], vec![2.0], vec![2.0]];
        let ys = vec![0, 0, 1, 1];
        let BaselineModel::Gnb(m) = fit_baseline(BaselineKind::Gnb, &xs, &ys, 0, &cfg()).unwrap()
        else {
            unreachable!()
        };
        assert_eq!(m.variances[0][0], GNB_VARIANCE_FLOOR);
    }

    #[test]
    fn gnb_invariant_under_duplication() {
        let (xs, ys) = clusters(30, 2);
        let a = fit_baseline(BaselineKind::Gnb, &xs, &ys, 0, &cfg()).unwrap();
        let xs2: Vec<_> = xs.iter().chain(&xs).cloned().collect();
        let ys2: Vec<_> = ys.iter().chain(&ys).copied().collect();
        let b = fit_baseline(BaselineKind::Gnb, &xs2, &ys2, 0, &cfg()).unwrap();
        for q in [-6.0, -1.0, 0.0, 0.3, 4.0] {
            assert_eq!(
                predict_baseline(&a, &[q]).unwrap(),
                predict_baseline(&b, &[q]).unwrap()
            );
        }
    }

    #[test]
    fn single_class_rejected_for_gnb_and_svm() {
        let xs = vec![vec![1.0], vec![2.0]];
        for kind in [BaselineKind::Gnb, BaselineKind::Lsvm] {
            assert_eq!(
                fit_baseline(kind, &xs, &[1, 1], 0, &cfg()),
                Err(BaselineError::DegenerateLabels)
            );
        }
        assert!(fit_baseline(BaselineKind::Knn, &xs, &[1, 1], 0, &cfg()).is_ok());
    }

    #[test]
    fn knn_stores_rows_and_matches_exact_point() {
        let (xs, ys) = clusters(21, 3);
        let c = BaselineConfig { k: 1, ..cfg() };
        let model = fit_baseline(BaselineKind::Knn, &xs, &ys, 0, &c).unwrap();
        let BaselineModel::Knn(m) = &model else {
            unreachable!()
        };
        assert_eq!(m.points.len(), 21);
        for (x, &y) in xs.iter().zip(&ys) {
            assert_eq!(predict_baseline(&model, x).unwrap(), y);
        }
    }

    #[test]
    fn knn_majority_vote() {
        // neighbours of 0.0 at k = 3: rows 0, 1 (spam) and 2 (ham)
        let xs = vec![vec![0.1], vec![-0.2], vec![0.3], vec![5.0], vec![6.0]];
        let ys = vec![1, 1, 0, 0, 0];
        let model = fit_baseline(
            BaselineKind::Knn,
            &xs,
            &ys,
            0,
            &BaselineConfig { k: 3, ..cfg() },
        )
        .unwrap();
        assert_eq!(predict_baseline(&model, &[0.0]).unwrap(), 1);
    }

    #[test]
    fn knn_distance_ties_prefer_lower_index() {
        let xs = vec![vec![-1.0], vec![1.0]];
        let model = fit_baseline(
            BaselineKind::Knn,
            &xs,
            &[0, 1],
            0,
            &BaselineConfig { k: 1, ..cfg() },
        )
        .unwrap();
        assert_eq!(predict_baseline(&model, &[0.0]).unwrap(), 0);
        let model = fit_baseline(
            BaselineKind::Knn,
            &xs,
            &[1, 0],
            0,
            &BaselineConfig { k: 1, ..cfg() },
        )
        .unwrap();
        assert_eq!(predict_baseline(&model, &[0.0]).unwrap(), 1);
    }

    #[test]
    fn knn_with_all_points_predicts_majority() {
        let (xs, mut ys) = clusters(15, 4);
        ys[0] = 1;
        let spam = ys.iter().filter(|&&y| y == 1).count();
        let majority = u8::from(2 * spam > ys.len());
        let model = fit_baseline(
            BaselineKind::Knn,
            &xs,
            &ys,
            0,
            &BaselineConfig { k: 15, ..cfg() },
        )
        .unwrap();
        for q in [-9.0, -5.0, 0.0, 5.0, 9.0] {
            assert_eq!(predict_baseline(&model, &[q]).unwrap(), majority);
        }
    }

    #[test]
    fn even_k_rejected() {
        let (xs, ys) = clusters(4, 5);
        assert!(matches!(
            fit_baseline(
                BaselineKind::Knn,
                &xs,
                &ys,
                0,
                &BaselineConfig { k: 4, ..cfg() }
            ),
            Err(BaselineError::InvalidConfig(_))
        ));
    }

    #[test]
    fn svm_deterministic_and_decreases_objective() {
        let (xs, ys) = clusters(60, 6);
        let c = BaselineConfig {
            svm_epochs: 20,
            ..cfg()
        };
        let a = fit_baseline(BaselineKind::Lsvm, &xs, &ys, 11, &c).unwrap();
        let b = fit_baseline(BaselineKind::Lsvm, &xs, &ys, 11, &c).unwrap();
        assert_eq!(a, b);
        let BaselineModel::Lsvm(m) = &a else {
            unreachable!()
        };
        let z: Vec<Vec<f64>> = xs.iter().map(|x| m.standardizer.apply(x)).collect();
        let start = svm_objective(&[0.0], 0.0, &z, &ys, c.lambda);
        let end = svm_objective(&m.weights, m.bias, &z, &ys, c.lambda);
        assert!(end <= start, "{end} > {start}");
        for (x, &y) in xs.iter().zip(&ys) {
            assert_eq!(predict_baseline(&a, x).unwrap(), y);
        }
    }

    #[test]
    fn svm_boundary_is_spam() {
        let m = BaselineModel::Lsvm(LsvmModel {
            standardizer: Standardizer::identity(1),
            weights: vec![1.0],
            bias: -2.0,
        });
        assert_eq!(predict_baseline(&m, &[2.0]).unwrap(), 1);
        assert_eq!(predict_baseline(&m, &[1.9]).unwrap(), 0);
        assert!(matches!(
            predict_baseline(&m, &[1.0, 2.0]),
            Err(BaselineError::DimensionMismatch { .. })
        ));
    }
}
