//! Probability vectors, row-stochastic channels and the broadcast-with-warden
//! model, together with the JSON model file format.
//!
//! Alphabets are index sets `0..k`. Entries are validated on construction:
//! nonnegative, finite, and each pmf summing to one within [`SUM_TOLERANCE`].
//! Accepted vectors are renormalised by their sum so downstream computations
//! see pmfs that are exact to machine precision.

use std::fs;
use std::ops::Index;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CovertError, Result};

/// Largest accepted deviation of a pmf's total mass from one.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Renormalise only when the sum is off by more than a few ulps, so that
/// already-normalised vectors keep their exact bits.
fn needs_renormalising(sum: f64, len: usize) -> bool {
    (sum - 1.0).abs() > 4.0 * f64::EPSILON * len.max(1) as f64
}

/// A pmf on a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(CovertError::EmptyAlphabet);
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(CovertError::InvalidProbability { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        let deviation = (sum - 1.0).abs();
        if deviation > SUM_TOLERANCE {
            return Err(CovertError::RowSum {
                row: 0,
                sum,
                deviation,
            });
        }
        let mut probs = probs;
        if needs_renormalising(sum, probs.len()) {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Ok(Self(probs))
    }

    /// Wraps a vector that is already known to be a pmf up to rounding,
    /// e.g. the product of a pmf with a stochastic matrix.
    pub(crate) fn from_vec_unchecked(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        Self(probs)
    }

    pub fn point_mass(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(CovertError::DimensionMismatch {
                what: "point mass index",
                expected: len,
                found: index,
            });
        }
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        Ok(Self(probs))
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(CovertError::EmptyAlphabet);
        }
        Ok(Self(vec![1.0 / len as f64; len]))
    }

    /// Normalises arbitrary nonnegative weights. Fails if they sum to zero.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(CovertError::InvalidParameter(format!(
                "weights must have positive finite mass, got {sum}"
            )));
        }
        Self::new(weights.iter().map(|w| w / sum).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
    }
}

impl Index<usize> for Distribution {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let probs = Vec::<f64>::deserialize(deserializer)?;
        Distribution::new(probs).map_err(serde::de::Error::custom)
    }
}

/// A row-stochastic matrix: one output pmf per input symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    inputs: usize,
    outputs: usize,
    data: Vec<f64>,
}

impl Channel {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = rows.len();
        if inputs == 0 {
            return Err(CovertError::EmptyAlphabet);
        }
        let outputs = rows[0].len();
        let mut data = Vec::with_capacity(inputs * outputs);
        for (row_index, row) in rows.into_iter().enumerate() {
            if row.len() != outputs {
                return Err(CovertError::DimensionMismatch {
                    what: "channel row length",
                    expected: outputs,
                    found: row.len(),
                });
            }
            let row = Distribution::new(row).map_err(|e| match e {
                CovertError::RowSum { sum, deviation, .. } => CovertError::RowSum {
                    row: row_index,
                    sum,
                    deviation,
                },
                other => other,
            })?;
            data.extend_from_slice(row.as_slice());
        }
        Ok(Self {
            inputs,
            outputs,
            data,
        })
    }

    /// Row-major data that the caller guarantees to be row-stochastic.
    pub(crate) fn from_flat_unchecked(inputs: usize, outputs: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), inputs * outputs);
        Self {
            inputs,
            outputs,
            data,
        }
    }

    pub(crate) fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn from_distributions(rows: &[Distribution]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.as_slice().to_vec()).collect())
    }

    pub fn identity(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(CovertError::EmptyAlphabet);
        }
        let mut data = vec![0.0; size * size];
        for i in 0..size {
            data[i * size + i] = 1.0;
        }
        Ok(Self {
            inputs: size,
            outputs: size,
            data,
        })
    }

    /// Binary symmetric channel with crossover probability `flip`.
    pub fn bsc(flip: f64) -> Result<Self> {
        Self::from_rows(vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]])
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn row_distribution(&self, x: usize) -> Distribution {
        Distribution(self.row(x).to_vec())
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.outputs)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Cascade `self` followed by `next`, i.e. the matrix product.
    pub fn compose(&self, next: &Channel) -> Result<Channel> {
        if self.outputs != next.inputs {
            return Err(CovertError::DimensionMismatch {
                what: "channel composition",
                expected: self.outputs,
                found: next.inputs,
            });
        }
        let mut data = vec![0.0; self.inputs * next.outputs];
        for x in 0..self.inputs {
            let out = &mut data[x * next.outputs..(x + 1) * next.outputs];
            for (y, &p) in self.row(x).iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (o, &w) in out.iter_mut().zip(next.row(y)) {
                    *o += p * w;
                }
            }
        }
        Ok(Channel {
            inputs: self.inputs,
            outputs: next.outputs,
            data,
        })
    }

    /// Largest absolute entrywise difference, `None` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Channel) -> Option<f64> {
        if self.inputs != other.inputs || self.outputs != other.outputs {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }
}

impl Serialize for Channel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Channel::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

/// Two legitimate receivers and a warden sharing one input alphabet, with a
/// designated "no transmission" input `x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BcWardenModel {
    p1: Channel,
    p2: Channel,
    q: Channel,
    x0: usize,
}

impl BcWardenModel {
    pub fn new(p1: Channel, p2: Channel, q: Channel, x0: usize) -> Result<Self> {
        let inputs = p1.inputs();
        for (what, ch) in [("P2 input alphabet", &p2), ("Q input alphabet", &q)] {
            if ch.inputs() != inputs {
                return Err(CovertError::DimensionMismatch {
                    what,
                    expected: inputs,
                    found: ch.inputs(),
                });
            }
        }
        if x0 >= inputs {
            return Err(CovertError::ZeroSymbolOutOfRange { x0, inputs });
        }
        Ok(Self { p1, p2, q, x0 })
    }

    pub fn p1(&self) -> &Channel {
        &self.p1
    }

    pub fn p2(&self) -> &Channel {
        &self.p2
    }

    /// Channel to user `k` (1 or 2).
    pub fn user(&self, k: u8) -> &Channel {
        if k == 1 {
            &self.p1
        } else {
            &self.p2
        }
    }

    pub fn q(&self) -> &Channel {
        &self.q
    }

    pub fn x0(&self) -> usize {
        self.x0
    }

    pub fn inputs(&self) -> usize {
        self.p1.inputs()
    }

    /// The warden's output law when `x0` is sent every time.
    pub fn warden_null_distribution(&self) -> Distribution {
        self.q.row_distribution(self.x0)
    }

    /// Same model with the two receivers exchanged.
    pub fn swapped_users(&self) -> Self {
        Self {
            p1: self.p2.clone(),
            p2: self.p1.clone(),
            q: self.q.clone(),
            x0: self.x0,
        }
    }
}

/// On-disk form of a model: row-major matrices, rows indexed by input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub x0: usize,
    #[serde(rename = "P1")]
    pub p1: Vec<Vec<f64>>,
    #[serde(rename = "P2")]
    pub p2: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<serde_json::Value>,
}

impl ModelFile {
    pub fn into_model(self) -> Result<BcWardenModel> {
        let p1 = Channel::from_rows(self.p1).map_err(|e| e.in_channel("P1"))?;
        let p2 = Channel::from_rows(self.p2).map_err(|e| e.in_channel("P2"))?;
        let q = Channel::from_rows(self.q).map_err(|e| e.in_channel("Q"))?;
        BcWardenModel::new(p1, p2, q, self.x0)
    }
}

impl From<&BcWardenModel> for ModelFile {
    fn from(model: &BcWardenModel) -> Self {
        ModelFile {
            x0: model.x0,
            p1: model.p1.to_rows(),
            p2: model.p2.to_rows(),
            q: model.q.to_rows(),
            labels: None,
        }
    }
}

pub fn parse_model(json: &str) -> Result<BcWardenModel> {
    let file: ModelFile = serde_json::from_str(json)?;
    file.into_model()
}

pub fn load_model(path: impl AsRef<Path>) -> Result<BcWardenModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|err| CovertError::Io {
        path: path.to_path_buf(),
        err,
    })?;
    parse_model(&text)
}

pub fn save_model(model: &BcWardenModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&ModelFile::from(model))?;
    fs::write(path, text).map_err(|err| CovertError::Io {
        path: path.to_path_buf(),
        err,
    })
}
