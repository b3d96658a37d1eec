//! JSON model files.
//!
//! Tensors are listed in [`NetworkParams::named_tensors`] order, each with its
//! declared shape and a row-major value array. Floats use shortest round-trip
//! formatting, so loading a saved model reproduces every weight exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{Architecture, NetworkParams};
use super::train::{TrainConfig, TrainedModel};
use super::PredictorError;
use crate::envgen::Normalization;

pub const MODEL_FORMAT: &str = "harshnet-cnn/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub architecture: Architecture,
    pub tensors: Vec<TensorRecord>,
    pub normalization: Normalization,
    pub training: TrainConfig,
    pub loss_history: Vec<f64>,
}

impl ModelFile {
    pub fn from_model(model: &TrainedModel) -> Self {
        let shapes = model.params.tensor_shapes();
        let tensors = model
            .params
            .named_tensors()
            .into_iter()
            .zip(shapes)
            .map(|((name, values), shape)| TensorRecord {
                name,
                shape,
                values: values.to_vec(),
            })
            .collect();
        Self {
            format: MODEL_FORMAT.into(),
            architecture: model.params.architecture.clone(),
            tensors,
            normalization: model.normalization.clone(),
            training: model.config.clone(),
            loss_history: model.loss_history.clone(),
        }
    }

    pub fn into_model(self) -> Result<TrainedModel, PredictorError> {
        if self.format != MODEL_FORMAT {
            return Err(PredictorError::ModelFile(format!(
                "unknown format {:?}",
                self.format
            )));
        }
        let mut params = NetworkParams::zeros(&self.architecture)?;
        let expected: Vec<(String, Vec<usize>)> = params
            .named_tensors()
            .into_iter()
            .map(|(n, _)| n)
            .zip(params.tensor_shapes())
            .collect();
        if expected.len() != self.tensors.len() {
            return Err(PredictorError::ModelFile(format!(
                "expected {} tensors, found {}",
                expected.len(),
                self.tensors.len()
            )));
        }
        for ((dst, (name, shape)), rec) in params
            .tensors_mut()
            .into_iter()
            .zip(expected)
            .zip(&self.tensors)
        {
            if rec.name != name || rec.shape != shape || rec.values.len() != dst.len() {
                return Err(PredictorError::ModelFile(format!(
                    "tensor {} {:?} does not match expected {} {:?}",
                    rec.name, rec.shape, name, shape
                )));
            }
            dst.copy_from_slice(&rec.values);
        }
        if !params.is_finite() {
            return Err(PredictorError::ModelFile("non-finite weight".into()));
        }
        Ok(TrainedModel {
            params,
            normalization: self.normalization,
            config: self.training,
            loss_history: self.loss_history,
        })
    }
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<(), PredictorError> {
    let text = serde_json::to_string(&ModelFile::from_model(model))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TrainedModel, PredictorError> {
    let file: ModelFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.into_model()
}
