//! Classic weighted-sum unit trained with the Widrow-Hoff delta rule.
//!
//! Linear activation: `y = w . x + b`. Weights start uniform on
//! `[-scale, scale]` from [`SeededRng`]; the bias starts at zero.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{ErrorReport, MODEL_FORMAT_VERSION};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub version: u32,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmsConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Apply one averaged update per epoch instead of one per pattern.
    pub batch: bool,
}

impl Default for LmsConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 500,
            batch: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmsOutcome {
    pub model: BaselineModel,
    /// Whole-dataset MSE after each epoch.
    pub mse_trajectory: Vec<f64>,
}

pub fn init_baseline(arity: usize, seed: u64, scale: f64) -> Result<BaselineModel> {
    if arity < 1 {
        return Err(Error::InvalidConfig("arity must be at least 1".into()));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidConfig("scale must be positive".into()));
    }
    let mut rng = SeededRng::new(seed);
    Ok(BaselineModel {
        version: MODEL_FORMAT_VERSION,
        weights: (0..arity).map(|_| rng.uniform(-scale, scale)).collect(),
        bias: 0.0,
        seed,
    })
}

impl BaselineModel {
    pub fn arity(&self) -> usize {
        self.weights.len()
    }

    fn check_arity(&self, n: usize) -> Result<()> {
        if n != self.arity() {
            return Err(Error::ArityMismatch {
                expected: self.arity(),
                actual: n,
            });
        }
        Ok(())
    }

    fn output(&self, inputs: &[f64]) -> f64 {
        self.weights.iter().zip(inputs).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }

    pub fn predict(&self, inputs: &[f64]) -> Result<f64> {
        self.check_arity(inputs.len())?;
        Ok(self.output(inputs))
    }

    pub fn evaluate(&self, dataset: &Dataset) -> Result<ErrorReport> {
        self.check_arity(dataset.arity())?;
        let predictions: Vec<f64> = dataset.patterns().iter().map(|p| self.output(&p.inputs)).collect();
        ErrorReport::from_predictions(&predictions, &dataset.targets())
    }

    pub fn mse(&self, dataset: &Dataset) -> Result<f64> {
        Ok(self.evaluate(dataset)?.mse)
    }

    fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }
}

/// Gradient of half the mean squared error with respect to `(weights, bias)`.
pub fn batch_gradient(model: &BaselineModel, dataset: &Dataset) -> Result<(Vec<f64>, f64)> {
    model.check_arity(dataset.arity())?;
    let n = dataset.len() as f64;
    let mut grad_w = vec![0.0; model.arity()];
    let mut grad_b = 0.0;
    for p in dataset.patterns() {
        let residual = p.target - model.output(&p.inputs);
        for (g, x) in grad_w.iter_mut().zip(&p.inputs) {
            *g -= residual * x;
        }
        grad_b -= residual;
    }
    for g in grad_w.iter_mut() {
        *g /= n;
    }
    Ok((grad_w, grad_b / n))
}

pub fn train_lms(model: &BaselineModel, dataset: &Dataset, config: &LmsConfig) -> Result<LmsOutcome> {
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::InvalidConfig("learning rate must be positive".into()));
    }
    if config.epochs < 1 {
        return Err(Error::InvalidConfig("epochs must be at least 1".into()));
    }
    model.check_arity(dataset.arity())?;
    let lr = config.learning_rate;
    let mut model = model.clone();
    let mut mse_trajectory = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        if config.batch {
            let (grad_w, grad_b) = batch_gradient(&model, dataset)?;
            for (w, g) in model.weights.iter_mut().zip(&grad_w) {
                *w -= lr * g;
            }
            model.bias -= lr * grad_b;
        } else {
            for p in dataset.patterns() {
                let residual = p.target - model.output(&p.inputs);
                for (w, x) in model.weights.iter_mut().zip(&p.inputs) {
                    *w += lr * residual * x;
                }
                model.bias += lr * residual;
            }
        }
        let mse = model.mse(dataset)?;
        if !model.is_finite() || !mse.is_finite() {
            return Err(Error::Diverged);
        }
        mse_trajectory.push(mse);
    }
    Ok(LmsOutcome { model, mse_trajectory })
}
