//! Two-layer feedforward network (sigmoid hidden layer, sigmoid output)
//! trained with mini-batch gradient descent on mean binary cross-entropy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Probabilities are clamped to `[EPS, 1 - EPS]` inside the loss.
pub const LOSS_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum AnnError {
    #[error("expected input of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("batch is empty")]
    EmptyBatch,
    #[error("{inputs} inputs but {labels} labels")]
    LabelCountMismatch { inputs: usize, labels: usize },
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Weights and biases. `w1` is `hidden_dim × input_dim`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl ModelParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        ModelParams {
            input_dim,
            hidden_dim,
            w1: vec![0.0; hidden_dim * input_dim],
            b1: vec![0.0; hidden_dim],
            w2: vec![0.0; hidden_dim],
            b2: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), AnnError> {
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(AnnError::InvalidParams(
                "dimensions must be at least 1".into(),
            ));
        }
        if self.w1.len() != self.hidden_dim * self.input_dim
            || self.b1.len() != self.hidden_dim
            || self.w2.len() != self.hidden_dim
        {
            return Err(AnnError::InvalidParams("inconsistent shapes".into()));
        }
        let all_finite = self
            .w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(std::iter::once(&self.b2))
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(AnnError::InvalidParams("non-finite value".into()));
        }
        Ok(())
    }

    fn w1_row(&self, h: usize) -> &[f64] {
        &self.w1[h * self.input_dim..(h + 1) * self.input_dim]
    }

    fn check_input(&self, x: &[f64]) -> Result<(), AnnError> {
        if x.len() != self.input_dim {
            return Err(AnnError::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden_dim)
            .map(|h| {
                let z: f64 = self.w1_row(h).iter().zip(x).map(|(w, v)| w * v).sum();
                sigmoid(z + self.b1[h])
            })
            .collect()
    }

    fn output(&self, hidden: &[f64]) -> f64 {
        let z: f64 = self.w2.iter().zip(hidden).map(|(w, h)| w * h).sum();
        sigmoid(z + self.b2)
    }
}

/// Weights uniform in `±1/√fan_in` from a ChaCha8 stream seeded with `seed`;
/// biases zero.
pub fn init_network(input_dim: usize, hidden_dim: usize, seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = ModelParams::zeros(input_dim, hidden_dim);
    let r1 = 1.0 / (input_dim as f64).sqrt();
    let r2 = 1.0 / (hidden_dim as f64).sqrt();
    for w in &mut p.w1 {
        *w = rng.gen_range(-r1..=r1);
    }
    for w in &mut p.w2 {
        *w = rng.gen_range(-r2..=r2);
    }
    p
}

pub fn forward(params: &ModelParams, input: &[f64]) -> Result<f64, AnnError> {
    params.check_input(input)?;
    Ok(params.output(&params.hidden(input)))
}

fn sample_loss(y: f64, t: f64) -> f64 {
    let y = y.clamp(LOSS_EPS, 1.0 - LOSS_EPS);
    -(t * y.ln() + (1.0 - t) * (1.0 - y).ln())
}

fn check_batch(params: &ModelParams, inputs: &[Vec<f64>], labels: &[u8]) -> Result<(), AnnError> {
    if inputs.is_empty() {
        return Err(AnnError::EmptyBatch);
    }
    if inputs.len() != labels.len() {
        return Err(AnnError::LabelCountMismatch {
            inputs: inputs.len(),
            labels: labels.len(),
        });
    }
    if let Some(&l) = labels.iter().find(|&&l| l > 1) {
        return Err(AnnError::InvalidLabel(l));
    }
    inputs.iter().try_for_each(|x| params.check_input(x))
}

/// Mean binary cross-entropy over a batch.
pub fn loss(params: &ModelParams, inputs: &[Vec<f64>], labels: &[u8]) -> Result<f64, AnnError> {
    check_batch(params, inputs, labels)?;
    let total: f64 = inputs
        .iter()
        .zip(labels)
        .map(|(x, &t)| sample_loss(params.output(&params.hidden(x)), f64::from(t)))
        .sum();
    Ok(total / inputs.len() as f64)
}

/// Gradient of the mean loss, same shapes as [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

/// Backpropagation. Returns the gradient and the mean loss of the batch.
fn backprop<'a>(
    params: &ModelParams,
    samples: impl Iterator<Item = (&'a [f64], u8)>,
) -> (Gradients, f64, usize) {
    let (ni, nh) = (params.input_dim, params.hidden_dim);
    let mut g = Gradients {
        w1: vec![0.0; nh * ni],
        b1: vec![0.0; nh],
        w2: vec![0.0; nh],
        b2: 0.0,
    };
    let mut total_loss = 0.0;
    let mut count = 0;
    for (x, t) in samples {
        let t = f64::from(t);
        let h = params.hidden(x);
        let y = params.output(&h);
        total_loss += sample_loss(y, t);
        count += 1;
        // d(loss)/d(output pre-activation) for sigmoid + cross-entropy
        let d_out = y - t;
        g.b2 += d_out;
        for (k, &hk) in h.iter().enumerate() {
            g.w2[k] += d_out * hk;
            let d_hidden = d_out * params.w2[k] * hk * (1.0 - hk);
            g.b1[k] += d_hidden;
            let row = &mut g.w1[k * ni..(k + 1) * ni];
            for (gw, &xi) in row.iter_mut().zip(x) {
                *gw += d_hidden * xi;
            }
        }
    }
    let scale = 1.0 / count as f64;
    g.w1.iter_mut()
        .chain(g.b1.iter_mut())
        .chain(g.w2.iter_mut())
        .chain(std::iter::once(&mut g.b2))
        .for_each(|v| *v *= scale);
    (g, total_loss * scale, count)
}

pub fn gradient(
    params: &ModelParams,
    inputs: &[Vec<f64>],
    labels: &[u8],
) -> Result<Gradients, AnnError> {
    check_batch(params, inputs, labels)?;
    let samples = inputs.iter().map(Vec::as_slice).zip(labels.iter().copied());
    Ok(backprop(params, samples).0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden_dim: usize,
    pub seed: u64,
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 300,
            batch_size: 16,
            hidden_dim: 6,
            seed: 0,
            standardize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), AnnError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(AnnError::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(AnnError::InvalidConfig("epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(AnnError::InvalidConfig(
                "batch_size must be positive".into(),
            ));
        }
        if self.hidden_dim == 0 {
            return Err(AnnError::InvalidConfig(
                "hidden_dim must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-column z-score statistics. Constant columns get mean 0 and stddev 1,
/// i.e. they pass through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Standardizer {
            mean: vec![0.0; dim],
            stddev: vec![1.0; dim],
        }
    }

    pub fn fit(inputs: &[Vec<f64>]) -> Self {
        let dim = inputs.first().map_or(0, Vec::len);
        let n = inputs.len() as f64;
        let mut s = Standardizer::identity(dim);
        for j in 0..dim {
            let m = inputs.iter().map(|x| x[j]).sum::<f64>() / n;
            let sd = (inputs.iter().map(|x| (x[j] - m).powi(2)).sum::<f64>() / n).sqrt();
            if sd > 0.0 {
                s.mean[j] = m;
                s.stddev[j] = sd;
            }
        }
        s
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.stddev))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub params: ModelParams,
    pub standardizer: Standardizer,
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: u8,
    pub probability: f64,
}

impl TrainedModel {
    pub fn input_dim(&self) -> usize {
        self.params.input_dim
    }

    pub fn probability(&self, input: &[f64]) -> Result<f64, AnnError> {
        self.params.check_input(input)?;
        forward(&self.params, &self.standardizer.apply(input))
    }

    pub fn validate(&self) -> Result<(), AnnError> {
        self.params.validate()?;
        let d = self.params.input_dim;
        if self.standardizer.mean.len() != d || self.standardizer.stddev.len() != d {
            return Err(AnnError::InvalidParams("standardizer dimension".into()));
        }
        if self
            .standardizer
            .stddev
            .iter()
            .any(|s| !(s.is_finite() && *s > 0.0))
        {
            return Err(AnnError::InvalidParams(
                "standardizer stddev must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Label 1 iff the probability is at least 0.5.
pub fn predict(model: &TrainedModel, input: &[f64]) -> Result<Prediction, AnnError> {
    let probability = model.probability(input)?;
    Ok(Prediction {
        label: u8::from(probability >= 0.5),
        probability,
    })
}

/// Deterministic for a given seed: initialization, per-epoch shuffles and
/// batch order all derive from it.
pub fn train(
    inputs: &[Vec<f64>],
    labels: &[u8],
    config: &TrainConfig,
) -> Result<TrainedModel, AnnError> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(AnnError::EmptyTrainingSet);
    }
    let dim = inputs[0].len();
    let mut params = init_network(dim, config.hidden_dim, config.seed);
    check_batch(&params, inputs, labels)?;
    if labels.iter().all(|&l| l == labels[0]) {
        log::warn!("training labels contain a single class ({})", labels[0]);
    }

    let standardizer = if config.standardize {
        Standardizer::fit(inputs)
    } else {
        Standardizer::identity(dim)
    };
    let data: Vec<Vec<f64>> = inputs.iter().map(|x| standardizer.apply(x)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);
    let lr = config.learning_rate;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let samples = chunk.iter().map(|&i| (data[i].as_slice(), labels[i]));
            let (g, batch_loss, count) = backprop(&params, samples);
            epoch_loss += batch_loss * count as f64;
            for (w, d) in params.w1.iter_mut().zip(&g.w1) {
                *w -= lr * d;
            }
            for (b, d) in params.b1.iter_mut().zip(&g.b1) {
                *b -= lr * d;
            }
            for (w, d) in params.w2.iter_mut().zip(&g.w2) {
                *w -= lr * d;
            }
            params.b2 -= lr * g.b2;
        }
        loss_history.push(epoch_loss / data.len() as f64);
    }

    Ok(TrainedModel {
        params,
        standardizer,
        loss_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_batch(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
        let xs = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let ys = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        (xs, ys)
    }

    #[test]
    fn init_shapes_and_range() {
        let p = init_network(11, 6, 9);
        assert_eq!(p.w1.len(), 6 * 11);
        assert_eq!(p.w2.len(), 6);
        assert_eq!(p, init_network(11, 6, 9));
        assert_ne!(p, init_network(11, 6, 10));
        let r1 = 1.0 / 11f64.sqrt();
        let r2 = 1.0 / 6f64.sqrt();
        assert!(p.w1.iter().all(|w| w.abs() <= r1));
        assert!(p.w2.iter().all(|w| w.abs() <= r2));
        assert!(p.b1.iter().all(|&b| b == 0.0) && p.b2 == 0.0);
        p.validate().unwrap();
    }

    #[test]
    fn zero_params_output_half() {
        let p = ModelParams::zeros(3, 2);
        assert_eq!(forward(&p, &[1.0, -7.0, 3.0]).unwrap(), 0.5);
        assert_eq!(
            forward(&p, &[1.0]),
            Err(AnnError::DimensionMismatch {
                expected: 3,
                got: 1
            })
        );
    }

    #[test]
    fn hand_evaluated_2_2_1() {
        let p = ModelParams {
            input_dim: 2,
            hidden_dim: 2,
            w1: vec![1.0, 1.0, 1.0, 1.0],
            b1: vec![0.0, 0.0],
            w2: vec![1.0, 1.0],
            b2: 0.0,
        };
        // x = (0.5, 0.25): both hidden units see 0.75
        let h = 1.0 / (1.0 + (-0.75f64).exp());
        let want = 1.0 / (1.0 + (-2.0 * h).exp());
        let got = forward(&p, &[0.5, 0.25]).unwrap();
        assert!((got - want).abs() < 1e-15);
        let model = TrainedModel {
            params: p,
            standardizer: Standardizer::identity(2),
            loss_history: vec![],
        };
        let pred = predict(&model, &[0.5, 0.25]).unwrap();
        assert_eq!(pred.label, u8::from(want >= 0.5));
        assert_eq!(pred.label, 1);
        let neg = ModelParams {
            w2: vec![-3.0, -3.0],
            ..model.params.clone()
        };
        let model = TrainedModel {
            params: neg,
            ..model
        };
        assert_eq!(predict(&model, &[0.5, 0.25]).unwrap().label, 0);
    }

    #[test]
    fn tie_goes_to_spam() {
        let model = TrainedModel {
            params: ModelParams::zeros(2, 2),
            standardizer: Standardizer::identity(2),
            loss_history: vec![],
        };
        let p = predict(&model, &[0.3, 0.1]).unwrap();
        assert_eq!(p.probability, 0.5);
        assert_eq!(p.label, 1);
        assert_eq!(predict(&model, &[0.3, 0.1]).unwrap(), p);
    }

    fn rel_err(a: f64, n: f64) -> f64 {
        (a - n).abs() / (a.abs() + n.abs()).max(1e-8)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eps = 1e-5;
        for trial in 0..10 {
            let mut p = init_network(11, 6, trial);
            p.b1.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
            p.b2 = rng.gen_range(-0.5..0.5);
            let (xs, ys) = random_batch(&mut rng, 8, 11);
            let g = gradient(&p, &xs, &ys).unwrap();
            let num = |f: &dyn Fn(&mut ModelParams, f64)| {
                let mut plus = p.clone();
                f(&mut plus, eps);
                let mut minus = p.clone();
                f(&mut minus, -eps);
                (loss(&plus, &xs, &ys).unwrap() - loss(&minus, &xs, &ys).unwrap()) / (2.0 * eps)
            };
            for i in 0..p.w1.len() {
                let n = num(&|q, e| q.w1[i] += e);
                assert!(rel_err(g.w1[i], n) < 1e-4, "w1[{i}]");
            }
            for i in 0..6 {
                assert!(rel_err(g.b1[i], num(&|q, e| q.b1[i] += e)) < 1e-4);
                assert!(rel_err(g.w2[i], num(&|q, e| q.w2[i] += e)) < 1e-4);
            }
            assert!(rel_err(g.b2, num(&|q, e| q.b2 += e)) < 1e-4);
        }
    }

    #[test]
    fn saturated_predictions_have_vanishing_gradient() {
        let mut p = ModelParams::zeros(1, 1);
        p.b2 = 40.0;
        let g = gradient(&p, &[vec![1.0]], &[1]).unwrap();
        assert!(g.b2.abs() < 1e-15);
        assert!(g
            .w2
            .iter()
            .chain(&g.w1)
            .chain(&g.b1)
            .all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn duplicated_batch_same_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = init_network(4, 3, 1);
        let (xs, ys) = random_batch(&mut rng, 5, 4);
        let (mut xs2, mut ys2) = (xs.clone(), ys.clone());
        xs2.extend(xs.iter().cloned());
        ys2.extend(ys.iter().copied());
        let a = gradient(&p, &xs, &ys).unwrap();
        let b = gradient(&p, &xs2, &ys2).unwrap();
        let close = |u: &[f64], v: &[f64]| u.iter().zip(v).all(|(x, y)| (x - y).abs() < 1e-15);
        assert!(close(&a.w1, &b.w1) && close(&a.b1, &b.b1) && close(&a.w2, &b.w2));
        assert!((a.b2 - b.b2).abs() < 1e-15);
    }

    #[test]
    fn batch_errors() {
        let p = init_network(2, 2, 0);
        assert_eq!(gradient(&p, &[], &[]), Err(AnnError::EmptyBatch));
        assert!(matches!(
            gradient(&p, &[vec![1.0]], &[1]),
            Err(AnnError::DimensionMismatch { .. })
        ));
        assert_eq!(
            gradient(&p, &[vec![1.0, 2.0]], &[2]),
            Err(AnnError::InvalidLabel(2))
        );
    }

    fn separable(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let label = (i % 2) as u8;
            let c = if label == 1 { 2.0 } else { -2.0 };
            xs.push(vec![
                c + rng.gen_range(-1.0..1.0),
                c + rng.gen_range(-1.0..1.0),
            ]);
            ys.push(label);
        }
        (xs, ys)
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let (xs, ys) = separable(200, 1);
        let cfg = TrainConfig {
            epochs: 40,
            seed: 7,
            ..TrainConfig::default()
        };
        let m = train(&xs, &ys, &cfg).unwrap();
        assert_eq!(m.loss_history.len(), 40);
        assert!(m.loss_history.last().unwrap() < m.loss_history.first().unwrap());
        assert!(m.loss_history.iter().all(|l| l.is_finite()));
        assert_eq!(train(&xs, &ys, &cfg).unwrap(), m);
        let correct = xs
            .iter()
            .zip(&ys)
            .filter(|(x, &y)| predict(&m, x).unwrap().label == y)
            .count();
        assert!(correct >= 195);
    }

    #[test]
    fn config_and_input_validation() {
        let (xs, ys) = separable(10, 1);
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&xs, &ys, &bad),
            Err(AnnError::InvalidConfig(_))
        ));
        let bad = TrainConfig {
            learning_rate: -1.0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&xs, &ys, &bad),
            Err(AnnError::InvalidConfig(_))
        ));
        assert_eq!(
            train(&[], &[], &TrainConfig::default()),
            Err(AnnError::EmptyTrainingSet)
        );
        // one class only: still trains
        let cfg = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        assert!(train(&xs, &vec![1; xs.len()], &cfg).is_ok());
    }

    #[test]
    fn standardizer_moments() {
        let (mut xs, _) = separable(50, 2);
        for x in &mut xs {
            x.push(3.0);
        }
        let s = Standardizer::fit(&xs);
        let z: Vec<Vec<f64>> = xs.iter().map(|x| s.apply(x)).collect();
        for j in 0..2 {
            let m = z.iter().map(|r| r[j]).sum::<f64>() / 50.0;
            let sd = (z.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / 50.0).sqrt();
            assert!(m.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);
        }
        assert!(z.iter().all(|r| r[2] == 3.0));
    }
}
