//! The wave-shape neuron.
//!
//! Each synapse group's combined signal is centred on its training mean,
//! scaled by one weight (the ratio of target to signal shape change
//! averages, signed by whether the two shapes move together) and lifted to
//! the training mean of the target. Group estimates are averaged.

use serde::{Deserialize, Serialize};

use crate::baseline::BaselineModel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::grouping::{self, arrange, combined_signal, CombineMode, GroupingConfig, SynapseGroup};
use crate::shape::{mean, shape_distance, shape_of};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedSynapse {
    #[serde(rename = "indices")]
    pub group: SynapseGroup,
    pub weight: f64,
    pub signal_mean: f64,
    pub degenerate: bool,
}

impl FittedSynapse {
    /// Transposed-then-scaled estimate for one combined input value.
    pub fn estimate(&self, combined: f64, output_mean: f64) -> f64 {
        if self.degenerate {
            output_mean
        } else {
            self.weight * (combined - self.signal_mean) + output_mean
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveShapeModel {
    pub version: u32,
    pub arity: usize,
    pub combine_mode: CombineMode,
    pub output_mean: f64,
    pub synapses: Vec<FittedSynapse>,
}

/// On-disk model document; `kind` leads the object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelFile {
    Waveshape(WaveShapeModel),
    Baseline(BaselineModel),
}

impl ModelFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("model file: {e}")))
    }
}

/// Single-pass fit of one group against the dataset's targets, in the
/// dataset's presented order.
pub fn fit_group(group: &SynapseGroup, dataset: &Dataset, mode: CombineMode) -> Result<FittedSynapse> {
    dataset.require_patterns(2)?;
    let signal = combined_signal(group, dataset, mode)?;
    let targets = dataset.targets();
    let signal_shape = shape_of(&signal)?;
    let target_shape = shape_of(&targets)?;
    let signal_change = signal_shape.magnitude();
    let signal_mean = mean(&signal);
    if signal_change == 0.0 {
        return Ok(FittedSynapse {
            group: group.clone(),
            weight: 1.0,
            signal_mean,
            degenerate: true,
        });
    }
    let magnitude = target_shape.magnitude() / signal_change;
    let sign = if signal_shape.dot(&target_shape)? < 0.0 { -1.0 } else { 1.0 };
    Ok(FittedSynapse {
        group: group.clone(),
        weight: sign * magnitude,
        signal_mean,
        degenerate: false,
    })
}

/// Group search followed by one fit per group. No randomness anywhere.
pub fn train(dataset: &Dataset, config: &GroupingConfig) -> Result<WaveShapeModel> {
    config.validate()?;
    dataset.require_patterns(2)?;
    if dataset.arity() == 0 {
        return Err(Error::InvalidConfig("dataset has no inputs".into()));
    }
    let arranged = arrange(dataset, config.pattern_order);
    let partition = grouping::search(&arranged, config)?;
    let synapses = partition
        .groups()
        .iter()
        .map(|g| fit_group(g, &arranged, config.combine_mode))
        .collect::<Result<Vec<_>>>()?;
    Ok(WaveShapeModel {
        version: MODEL_FORMAT_VERSION,
        arity: dataset.arity(),
        combine_mode: config.combine_mode,
        output_mean: mean(&arranged.targets()),
        synapses,
    })
}

impl WaveShapeModel {
    pub fn predict(&self, inputs: &[f64]) -> Result<f64> {
        if inputs.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                actual: inputs.len(),
            });
        }
        let total: f64 = self
            .synapses
            .iter()
            .map(|s| {
                let sum: f64 = s.group.indices().iter().map(|&i| inputs[i]).sum();
                let combined = match self.combine_mode {
                    CombineMode::Sum => sum,
                    CombineMode::Mean => sum / s.group.len() as f64,
                };
                s.estimate(combined, self.output_mean)
            })
            .sum();
        Ok(total / self.synapses.len() as f64)
    }

    pub fn evaluate(&self, dataset: &Dataset) -> Result<ErrorReport> {
        let predictions = dataset
            .patterns()
            .iter()
            .map(|p| self.predict(&p.inputs))
            .collect::<Result<Vec<_>>>()?;
        ErrorReport::from_predictions(&predictions, &dataset.targets())
    }

    /// Inputs not used by any synapse.
    pub fn dropped(&self) -> Vec<usize> {
        let mut used = vec![false; self.arity];
        for s in &self.synapses {
            for &i in s.group.indices() {
                used[i] = true;
            }
        }
        (0..self.arity).filter(|&i| !used[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Prediction minus target, per pattern.
    pub per_pattern_error: Vec<f64>,
    pub mae: f64,
    pub mse: f64,
    /// Distance between predicted and target shapes (diagnostic; zero for a single pattern).
    pub shape_error: f64,
}

impl ErrorReport {
    pub fn from_predictions(predictions: &[f64], targets: &[f64]) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if predictions.len() != targets.len() {
            return Err(Error::LengthMismatch {
                left: predictions.len(),
                right: targets.len(),
            });
        }
        let per_pattern_error: Vec<f64> = predictions.iter().zip(targets).map(|(p, d)| p - d).collect();
        let n = per_pattern_error.len() as f64;
        let mae = per_pattern_error.iter().map(|e| e.abs()).sum::<f64>() / n;
        let mse = per_pattern_error.iter().map(|e| e * e).sum::<f64>() / n;
        let shape_error = if targets.len() >= 2 {
            shape_distance(&shape_of(predictions)?, &shape_of(targets)?, false)?
        } else {
            0.0
        };
        Ok(Self {
            per_pattern_error,
            mae,
            mse,
            shape_error,
        })
    }
}
