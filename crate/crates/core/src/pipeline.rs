//! Glue between the stages: split, scale and combine, fit, and the on-disk
//! model envelope shared by the network and the baselines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ann::{self, TrainConfig, TrainedModel};
use crate::baselines::{
    self, BaselineConfig, BaselineKind, BaselineModel, GnbModel, KnnModel, LsvmModel,
};
use crate::correlate::{combine, reduce_matrix, Grouping, MinMaxScaler};
use crate::eval::{split, Split};
use crate::features::{FeatureMatrix, FeatureVector, FEATURE_COUNT};
use crate::Error;

pub const MODEL_FORMAT: &str = "spamcorr-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelFileError {
    #[error("not a model file (format `{0}`)")]
    WrongFormat(String),
    #[error("unsupported model version {0}")]
    UnsupportedVersion(u32),
    #[error("grouping hash mismatch: file says {stored}, grouping hashes to {computed}")]
    HashMismatch { stored: String, computed: String },
    #[error("model expects {expected} inputs but the grouping yields {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid model file: {0}")]
    Invalid(String),
}

/// How the train/test split was drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train_frac: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            seed: 0,
            train_frac: 0.8,
        }
    }
}

/// A split plus reduced inputs for both sides. The scaler is fitted on the
/// training rows only.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub split: Split,
    pub scaler: MinMaxScaler,
    pub train_inputs: Vec<Vec<f64>>,
    pub test_inputs: Vec<Vec<f64>>,
}

pub fn prepare(
    matrix: &FeatureMatrix,
    grouping: &Grouping,
    spec: &SplitSpec,
) -> Result<PreparedData, Error> {
    let split = split(matrix, spec.train_frac, spec.seed)?;
    let scaler = MinMaxScaler::fit(&split.train);
    let train_inputs = reduce_matrix(&split.train, grouping, &scaler)?;
    let test_inputs = reduce_matrix(&split.test, grouping, &scaler)?;
    Ok(PreparedData {
        split,
        scaler,
        train_inputs,
        test_inputs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ann,
    Knn,
    Gnb,
    Lsvm,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ann" => Ok(ModelKind::Ann),
            "knn" => Ok(ModelKind::Knn),
            "gnb" => Ok(ModelKind::Gnb),
            "lsvm" => Ok(ModelKind::Lsvm),
            other => Err(format!(
                "unknown model kind `{other}` (ann, knn, gnb, lsvm)"
            )),
        }
    }
}

impl ModelKind {
    fn baseline(self) -> Option<BaselineKind> {
        match self {
            ModelKind::Ann => None,
            ModelKind::Knn => Some(BaselineKind::Knn),
            ModelKind::Gnb => Some(BaselineKind::Gnb),
            ModelKind::Lsvm => Some(BaselineKind::Lsvm),
        }
    }

    pub fn display_name(self) -> &'static str {
        match self.baseline() {
            None => crate::eval::ANN_ROW,
            Some(b) => b.display_name(),
        }
    }
}

/// Trained classifier, tagged by kind in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum Classifier {
    Ann(TrainedModel),
    Knn(KnnModel),
    Gnb(GnbModel),
    Lsvm(LsvmModel),
}

impl From<BaselineModel> for Classifier {
    fn from(m: BaselineModel) -> Self {
        match m {
            BaselineModel::Knn(m) => Classifier::Knn(m),
            BaselineModel::Gnb(m) => Classifier::Gnb(m),
            BaselineModel::Lsvm(m) => Classifier::Lsvm(m),
        }
    }
}

impl Classifier {
    pub fn kind(&self) -> ModelKind {
        match self {
            Classifier::Ann(_) => ModelKind::Ann,
            Classifier::Knn(_) => ModelKind::Knn,
            Classifier::Gnb(_) => ModelKind::Gnb,
            Classifier::Lsvm(_) => ModelKind::Lsvm,
        }
    }

    fn as_baseline(&self) -> Option<BaselineModel> {
        match self {
            Classifier::Ann(_) => None,
            Classifier::Knn(m) => Some(BaselineModel::Knn(m.clone())),
            Classifier::Gnb(m) => Some(BaselineModel::Gnb(m.clone())),
            Classifier::Lsvm(m) => Some(BaselineModel::Lsvm(m.clone())),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Classifier::Ann(m) => m.input_dim(),
            other => other.as_baseline().map_or(0, |b| b.input_dim()),
        }
    }
}

/// Label and, for the network, its spam probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOutput {
    pub label: u8,
    pub probability: Option<f64>,
}

/// Everything needed to score raw feature vectors: grouping, scaler bounds,
/// split provenance and the classifier itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub grouping: Vec<Vec<String>>,
    pub grouping_hash: String,
    pub scaler: MinMaxScaler,
    pub split: SplitSpec,
    pub model: Classifier,
}

pub struct FitOptions<'a> {
    pub kind: ModelKind,
    pub split: SplitSpec,
    pub ann: &'a TrainConfig,
    pub baselines: &'a BaselineConfig,
}

impl ModelFile {
    pub fn grouping(&self) -> Result<Grouping, Error> {
        Ok(Grouping::from_names(&self.grouping)?)
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    pub fn validate(&self) -> Result<Grouping, Error> {
        if self.format != MODEL_FORMAT {
            return Err(ModelFileError::WrongFormat(self.format.clone()).into());
        }
        if self.version != MODEL_VERSION {
            return Err(ModelFileError::UnsupportedVersion(self.version).into());
        }
        let grouping = self.grouping()?;
        let computed = grouping.config_hash();
        if computed != self.grouping_hash {
            return Err(ModelFileError::HashMismatch {
                stored: self.grouping_hash.clone(),
                computed,
            }
            .into());
        }
        if self.scaler.min.len() != FEATURE_COUNT || self.scaler.max.len() != FEATURE_COUNT {
            return Err(ModelFileError::Invalid("scaler must cover all 22 features".into()).into());
        }
        if self.model.input_dim() != grouping.len() {
            return Err(ModelFileError::DimensionMismatch {
                expected: self.model.input_dim(),
                got: grouping.len(),
            }
            .into());
        }
        if let Classifier::Ann(m) = &self.model {
            m.validate()?;
        }
        Ok(grouping)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    /// Scores already-reduced inputs.
    pub fn predict_reduced(&self, inputs: &[f64]) -> Result<ModelOutput, Error> {
        match &self.model {
            Classifier::Ann(m) => {
                let p = ann::predict(m, inputs)?;
                Ok(ModelOutput {
                    label: p.label,
                    probability: Some(p.probability),
                })
            }
            other => {
                let b = other.as_baseline().expect("non-ann classifier");
                Ok(ModelOutput {
                    label: baselines::predict_baseline(&b, inputs)?,
                    probability: None,
                })
            }
        }
    }

    /// Scores many reduced inputs in parallel; output order matches `inputs`.
    pub fn predict_batch(&self, inputs: &[Vec<f64>]) -> Result<Vec<ModelOutput>, Error> {
        match self.model.as_baseline() {
            None => inputs.par_iter().map(|x| self.predict_reduced(x)).collect(),
            Some(b) => Ok(baselines::predict_all(&b, inputs)?
                .into_iter()
                .map(|label| ModelOutput {
                    label,
                    probability: None,
                })
                .collect()),
        }
    }

    pub fn predict(
        &self,
        grouping: &Grouping,
        vector: &FeatureVector,
    ) -> Result<ModelOutput, Error> {
        self.predict_reduced(&combine(vector, grouping, &self.scaler)?)
    }
}

/// Splits `matrix`, fits the requested classifier on the training side and
/// wraps it in a model file.
pub fn fit_model_file(
    matrix: &FeatureMatrix,
    grouping: &Grouping,
    opts: &FitOptions<'_>,
) -> Result<ModelFile, Error> {
    let data = prepare(matrix, grouping, &opts.split)?;
    let labels = data.split.train.labels();
    let model = match opts.kind.baseline() {
        None => Classifier::Ann(ann::train(&data.train_inputs, labels, opts.ann)?),
        Some(kind) => baselines::fit_baseline(
            kind,
            &data.train_inputs,
            labels,
            opts.split.seed,
            opts.baselines,
        )?
        .into(),
    };
    Ok(ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        grouping: grouping.to_names(),
        grouping_hash: grouping.config_hash(),
        scaler: data.scaler,
        split: opts.split,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::extract_matrix;
    use crate::synth::generate_corpus;

    fn small_matrix() -> FeatureMatrix {
        extract_matrix(&generate_corpus(6, 6, 3)).unwrap()
    }

    #[test]
    fn every_kind_round_trips_through_json() {
        let m = small_matrix();
        let g = Grouping::default_config();
        let ann_cfg = TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        };
        let bcfg = BaselineConfig {
            svm_epochs: 3,
            ..BaselineConfig::default()
        };
        for kind in [
            ModelKind::Ann,
            ModelKind::Knn,
            ModelKind::Gnb,
            ModelKind::Lsvm,
        ] {
            let opts = FitOptions {
                kind,
                split: SplitSpec::default(),
                ann: &ann_cfg,
                baselines: &bcfg,
            };
            let file = fit_model_file(&m, &g, &opts).unwrap();
            assert_eq!(file.kind(), kind);
            let text = file.to_json();
            let back = ModelFile::from_json(&text).unwrap();
            assert_eq!(back, file);
            assert_eq!(back.to_json(), text);
            let out = back.predict(&g, &m.rows()[0]).unwrap();
            assert!(out.label <= 1);
            assert_eq!(out.probability.is_some(), kind == ModelKind::Ann);
        }
    }

    #[test]
    fn tampered_grouping_is_rejected() {
        let m = small_matrix();
        let g = Grouping::default_config();
        let opts = FitOptions {
            kind: ModelKind::Gnb,
            split: SplitSpec::default(),
            ann: &TrainConfig::default(),
            baselines: &BaselineConfig::default(),
        };
        let mut file = fit_model_file(&m, &g, &opts).unwrap();
        file.grouping.swap(0, 1);
        file.grouping[0].reverse();
        let mut v: serde_json::Value = serde_json::from_str(&file.to_json()).unwrap();
        v["grouping_hash"] = "00".into();
        assert!(matches!(
            ModelFile::from_json(&v.to_string()),
            Err(Error::ModelFile(ModelFileError::HashMismatch { .. }))
        ));
        v["format"] = "other".into();
        assert!(matches!(
            ModelFile::from_json(&v.to_string()),
            Err(Error::ModelFile(ModelFileError::WrongFormat(_)))
        ));
    }

    #[test]
    fn file_layout_has_expected_keys() {
        let m = small_matrix();
        let g = Grouping::default_config();
        let cfg = TrainConfig {
            epochs: 1,
            ..TrainConfig::default()
        };
        let opts = FitOptions {
            kind: ModelKind::Ann,
            split: SplitSpec::default(),
            ann: &cfg,
            baselines: &BaselineConfig::default(),
        };
        let file = fit_model_file(&m, &g, &opts).unwrap();
        let v: serde_json::Value = serde_json::from_str(&file.to_json()).unwrap();
        assert_eq!(v["model"]["kind"], "ann");
        let params = &v["model"]["params"]["params"];
        assert_eq!(params["input_dim"], 11);
        assert_eq!(params["hidden_dim"], 6);
        assert_eq!(params["w1"].as_array().unwrap().len(), 66);
        assert_eq!(v["grouping"].as_array().unwrap().len(), 11);
        assert_eq!(v["grouping_hash"].as_str().unwrap().len(), 64);
    }
}
