use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Entries of a candidate distribution above `-NEG_CLAMP` are treated as
/// rounding residue and clamped to zero.
pub const NEG_CLAMP: f64 = 1e-12;
/// Maximum allowed deviation of a distribution's total mass from one.
pub const SUM_TOLERANCE: f64 = 1e-9;
/// Probabilities at or below this value do not count as support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Option values handed to a soft-max mechanism.
///
/// A one-option vector is accepted; every mechanism maps it to the point
/// mass, which is what the greedy and auction harnesses need when a single
/// candidate remains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueVector {
    values: Vec<f64>,
    positivity_required: bool,
}

impl ValueVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return domain("value vector must have at least one entry");
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("value at index {i} is not finite"));
        }
        Ok(Self {
            values,
            positivity_required: false,
        })
    }

    /// Values for multiplicative-mode mechanisms; every entry must be `> 0`.
    pub fn positive(values: Vec<f64>) -> Result<Self> {
        let mut v = Self::new(values)?;
        if let Some(i) = v.values.iter().position(|&x| x <= 0.0) {
            return domain(format!("value at index {i} must be strictly positive"));
        }
        v.positivity_required = true;
        Ok(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    pub fn positivity_required(&self) -> bool {
        self.positivity_required
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest index attaining the maximum.
    pub fn argmax(&self) -> usize {
        let m = self.max();
        self.values.iter().position(|&v| v == m).unwrap_or(0)
    }
}

impl Deref for ValueVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl TryFrom<Vec<f64>> for ValueVector {
    type Error = crate::Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// A point of the probability simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexDistribution {
    probs: Vec<f64>,
}

impl SimplexDistribution {
    /// Validates `probs`, clamping residue in `(-NEG_CLAMP, 0)` to zero.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return domain("distribution must have at least one entry");
        }
        for (i, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < -NEG_CLAMP {
                return domain(format!("probability {p} at index {i} is invalid"));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return domain(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights with positive total mass.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return domain("weights must have positive finite total mass");
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(d: usize) -> Self {
        Self {
            probs: vec![1.0 / d as f64; d],
        }
    }

    pub fn point_mass(d: usize, at: usize) -> Self {
        let mut probs = vec![0.0; d];
        probs[at] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.probs
    }

    /// Indices carrying probability above [`SUPPORT_THRESHOLD`].
    pub fn support(&self) -> Vec<usize> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > SUPPORT_THRESHOLD)
            .map(|(i, _)| i)
            .collect()
    }
}

impl Deref for SimplexDistribution {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.probs
    }
}
