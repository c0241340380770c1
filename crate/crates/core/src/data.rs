//! Datasets: CSV ingestion with categorical tokens, synthetic generation and
//! pattern shuffling.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Header prefix marking the target column.
pub const OUTPUT_PREFIX: &str = "output:";

/// The two-scenario Play Sport table, one row per scenario.
pub const PLAY_SPORT_CSV: &str = include_str!("../../../data/playsport.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub inputs: Vec<f64>,
    pub target: f64,
}

/// Ordered patterns sharing one input arity. Always holds at least one pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    input_names: Vec<String>,
    output_name: String,
    patterns: Vec<Pattern>,
}

impl Dataset {
    pub fn new(input_names: Vec<String>, output_name: String, patterns: Vec<Pattern>) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let arity = input_names.len();
        for p in &patterns {
            if p.inputs.len() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    actual: p.inputs.len(),
                });
            }
            if !p.target.is_finite() || p.inputs.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("dataset"));
            }
        }
        Ok(Self {
            input_names,
            output_name,
            patterns,
        })
    }

    /// Builds a dataset with generated names `x0..` and `y`.
    pub fn from_rows(rows: &[(Vec<f64>, f64)]) -> Result<Self> {
        let arity = rows.first().map_or(0, |r| r.0.len());
        let names = (0..arity).map(|i| format!("x{i}")).collect();
        let patterns = rows
            .iter()
            .map(|(inputs, target)| Pattern {
                inputs: inputs.clone(),
                target: *target,
            })
            .collect();
        Self::new(names, "y".to_string(), patterns)
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn output_name(&self) -> &str {
        &self.output_name
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn arity(&self) -> usize {
        self.input_names.len()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.patterns.iter().map(|p| p.target).collect()
    }

    pub fn column(&self, index: usize) -> Result<Vec<f64>> {
        if index >= self.arity() {
            return Err(Error::InvalidIndex {
                index,
                arity: self.arity(),
            });
        }
        Ok(self.patterns.iter().map(|p| p.inputs[index]).collect())
    }

    /// Same names, patterns in the order given by `order` (indices into the current patterns).
    pub fn reordered(&self, order: &[usize]) -> Dataset {
        Dataset {
            input_names: self.input_names.clone(),
            output_name: self.output_name.clone(),
            patterns: order.iter().map(|&i| self.patterns[i].clone()).collect(),
        }
    }

    /// Splits off the first `n` patterns. Either side may come back `None` when empty.
    pub fn split_at(&self, n: usize) -> (Option<Dataset>, Option<Dataset>) {
        let n = n.min(self.len());
        let part = |range: &[Pattern]| {
            (!range.is_empty()).then(|| Dataset {
                input_names: self.input_names.clone(),
                output_name: self.output_name.clone(),
                patterns: range.to_vec(),
            })
        };
        (part(&self.patterns[..n]), part(&self.patterns[n..]))
    }

    pub fn require_patterns(&self, needed: usize) -> Result<()> {
        if self.len() < needed {
            return Err(Error::NotEnoughPatterns {
                needed,
                actual: self.len(),
            });
        }
        Ok(())
    }
}

/// Case-insensitive token to value mapping for categorical cells.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingMap {
    tokens: HashMap<String, f64>,
}

impl Default for EncodingMap {
    fn default() -> Self {
        let mut tokens = HashMap::new();
        tokens.insert("high".to_string(), 1.0);
        tokens.insert("low".to_string(), 0.0);
        tokens.insert("average".to_string(), 0.5);
        Self { tokens }
    }
}

impl EncodingMap {
    pub fn empty() -> Self {
        Self {
            tokens: HashMap::new(),
        }
    }

    pub fn insert(&mut self, token: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidConfig(format!("encoding for {token:?} is not finite")));
        }
        self.tokens.insert(token.to_lowercase(), value);
        Ok(())
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.tokens.get(&token.to_lowercase()).copied()
    }
}

fn parse_cell(cell: &str, encoding: &EncodingMap) -> Option<f64> {
    let cell = cell.trim();
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Some(v),
        Ok(_) => None,
        Err(_) => encoding.get(cell),
    }
}

/// Reads a header-first CSV where exactly one column is named `output:<name>`.
pub fn load_csv<R: Read>(source: R, encoding: &EncodingMap) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header = reader
        .headers()
        .map_err(|e| Error::Csv(format!("header: {e}")))?
        .clone();

    let outputs: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.trim().starts_with(OUTPUT_PREFIX))
        .map(|(i, _)| i)
        .collect();
    let output_col = match outputs.as_slice() {
        [] => return Err(Error::Csv("missing output column (prefix \"output:\")".into())),
        [one] => *one,
        _ => return Err(Error::Csv("more than one output column".into())),
    };
    let output_name = header[output_col].trim()[OUTPUT_PREFIX.len()..].to_string();
    let input_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != output_col)
        .map(|(_, h)| h.trim().to_string())
        .collect();

    let mut patterns = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Csv(format!("row {row}: {e}")))?;
        if record.len() != header.len() {
            return Err(Error::Csv(format!(
                "row {row}: ragged row has {} fields, header has {}",
                record.len(),
                header.len()
            )));
        }
        let mut inputs = Vec::with_capacity(input_names.len());
        let mut target = 0.0;
        for (col, cell) in record.iter().enumerate() {
            let value = parse_cell(cell, encoding).ok_or_else(|| {
                Error::Csv(format!(
                    "row {row}, column {:?}: unmappable token {:?}",
                    header[col].trim(),
                    cell
                ))
            })?;
            if col == output_col {
                target = value;
            } else {
                inputs.push(value);
            }
        }
        patterns.push(Pattern { inputs, target });
    }
    if patterns.is_empty() {
        return Err(Error::Csv("no data rows".into()));
    }
    Dataset::new(input_names, output_name, patterns)
}

/// Writes inputs in order followed by the output column; numbers use the
/// shortest decimal that reads back to the same double.
pub fn write_csv<W: Write>(dataset: &Dataset, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let mut header: Vec<String> = dataset.input_names.clone();
    header.push(format!("{OUTPUT_PREFIX}{}", dataset.output_name));
    writer
        .write_record(&header)
        .map_err(|e| Error::Csv(e.to_string()))?;
    for p in &dataset.patterns {
        let row: Vec<String> = p
            .inputs
            .iter()
            .chain(std::iter::once(&p.target))
            .map(|v| format!("{v}"))
            .collect();
        writer.write_record(&row).map_err(|e| Error::Csv(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Target is a random linear combination of the inputs plus gaussian noise.
    RandomLinear,
    /// Target drawn independently of the inputs.
    RandomUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub arity: usize,
    pub n_patterns: usize,
    pub generator: Generator,
    pub coefficient_range: (f64, f64),
    pub noise_sd: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.arity < 1 {
            return Err(Error::InvalidConfig("arity must be at least 1".into()));
        }
        if self.n_patterns < 2 {
            return Err(Error::InvalidConfig("need at least 2 patterns".into()));
        }
        let (lo, hi) = self.coefficient_range;
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::InvalidConfig("bad coefficient range".into()));
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return Err(Error::InvalidConfig("noise_sd must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Draw order: coefficients, then per pattern its inputs (uniform on
/// `[0, 1)`), then its target term.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let (lo, hi) = spec.coefficient_range;
    let coefficients: Vec<f64> = match spec.generator {
        Generator::RandomLinear => (0..spec.arity).map(|_| rng.uniform(lo, hi)).collect(),
        Generator::RandomUniform => Vec::new(),
    };
    let mut rows = Vec::with_capacity(spec.n_patterns);
    for _ in 0..spec.n_patterns {
        let inputs: Vec<f64> = (0..spec.arity).map(|_| rng.unit()).collect();
        let target = match spec.generator {
            Generator::RandomLinear => {
                let clean: f64 = coefficients.iter().zip(&inputs).map(|(c, x)| c * x).sum();
                if spec.noise_sd > 0.0 {
                    clean + spec.noise_sd * rng.standard_normal()
                } else {
                    clean
                }
            }
            Generator::RandomUniform => rng.unit(),
        };
        rows.push((inputs, target));
    }
    Dataset::from_rows(&rows)
}

/// Seeded Fisher-Yates shuffle of the pattern order.
pub fn permute_patterns(dataset: &Dataset, seed: u64) -> Dataset {
    dataset.reordered(&permutation(dataset.len(), seed))
}

pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).shuffle(&mut order);
    order
}
